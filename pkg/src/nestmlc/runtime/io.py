"""Stimulus programs and simulation traces, with their file formats."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .ringbuffer import CURRENT, SPIKE


class StimulusError(ValueError):
    pass


@dataclass(frozen=True)
class Event:
    kind: str          # spike | current
    buffer: str
    time_ms: float
    weight: float


@dataclass(frozen=True)
class CurrentStep:
    """Constant amplitude on ``buffer`` for every step in ``[from_ms, to_ms)``."""
    buffer: str
    from_ms: float
    to_ms: float
    amplitude: float
    kind: str = CURRENT


@dataclass
class StimulusProgram:
    events: list = field(default_factory=list)

    @classmethod
    def from_json(cls, data):
        """Build from the decoded stimulus document (``{"events": [...]}``)."""
        if not isinstance(data, dict) or not isinstance(data.get("events", []), list):
            raise StimulusError("a stimulus document is an object with an 'events' list")
        events = []
        for k, item in enumerate(data.get("events", [])):
            try:
                kind = item["kind"]
                buffer = item["buffer"]
                if kind not in (SPIKE, CURRENT):
                    raise StimulusError(f"event {k}: unknown kind {kind!r}")
                if kind == CURRENT and "from_ms" in item:
                    events.append(CurrentStep(buffer, float(item["from_ms"]),
                                              float(item["to_ms"]),
                                              float(item.get("amplitude", item.get("weight")))))
                    continue
                magnitude = item.get("weight", item.get("amplitude"))
                events.append(Event(kind, buffer, float(item["time_ms"]), float(magnitude)))
            except (KeyError, TypeError) as exc:
                raise StimulusError(f"event {k}: missing or malformed field {exc}") from None
        for e in events:
            times = (e.time_ms,) if isinstance(e, Event) else (e.from_ms, e.to_ms)
            if any(t < 0 or not math.isfinite(t) for t in times):
                raise StimulusError(f"event on '{e.buffer}' has a negative or non-finite time")
        return cls(events)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            try:
                return cls.from_json(json.load(fh))
            except json.JSONDecodeError as exc:
                raise StimulusError(f"{path}: {exc}") from None

    def spike(self, buffer, time_ms, weight):
        self.events.append(Event(SPIKE, buffer, time_ms, weight))
        return self

    def current(self, buffer, from_ms, to_ms, amplitude):
        self.events.append(CurrentStep(buffer, from_ms, to_ms, amplitude))
        return self


def snap(time_ms, resolution_ms):
    """Grid step for ``time_ms`` (rounding half up) and whether it moved."""
    step = math.floor(time_ms / resolution_ms + 0.5)
    moved = abs(step * resolution_ms - time_ms) > 1e-9 * max(1.0, abs(time_ms))
    return step, moved


def _number(x):
    return format(x, ".17g") if isinstance(x, float) else str(x)


@dataclass
class Trace:
    sample_every: int
    columns: list
    rows: list = field(default_factory=list)          # (time_ms, value, ...)
    spike_times_ms: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def column(self, name):
        k = self.columns.index(name) + 1
        return [row[k] for row in self.rows]

    @property
    def times(self):
        return [row[0] for row in self.rows]

    def csv_text(self):
        lines = [",".join(["time_ms"] + self.columns)]
        lines += [",".join(_number(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def spikes_csv_text(self):
        return "\n".join(["spike_time_ms"] + [_number(t) for t in self.spike_times_ms]) + "\n"

    def write_csv(self, path):
        """Write the trace and its ``<stem>.spikes.csv`` sidecar; returns both paths."""
        path = Path(path)
        path.write_bytes(self.csv_text().encode("utf-8"))
        sidecar = path.with_name(path.stem + ".spikes.csv")
        sidecar.write_bytes(self.spikes_csv_text().encode("utf-8"))
        return path, sidecar


def read_trace_csv(path):
    """(columns, rows) of a trace file, values as floats."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header[1:], [tuple(float(v) for v in row) for row in reader]


__all__ = ["Event", "CurrentStep", "StimulusProgram", "StimulusError", "Trace", "snap",
           "read_trace_csv"]
