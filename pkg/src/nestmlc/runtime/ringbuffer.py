"""Step-indexed accumulators for incoming spikes and currents."""

from __future__ import annotations

import math

SPIKE = "spike"
CURRENT = "current"


class RingBuffer:
    """``size`` slots; slot 0 belongs to the current step.

    ``accept`` is ``both``, ``excitatory`` (positive weights only) or
    ``inhibitory`` (negative weights only); rejected events are dropped.
    """

    def __init__(self, size, kind=SPIKE, accept="both"):
        if size < 1:
            raise ValueError("a ring buffer needs at least one slot")
        self.slots = [0.0] * size
        self.read_index = 0
        self.kind = kind
        self.accept = accept

    @classmethod
    def for_delay(cls, max_delay_ms, resolution_ms, kind=SPIKE, accept="both"):
        return cls(math.ceil(max_delay_ms / resolution_ms - 1e-9) + 1, kind, accept)

    @property
    def size(self):
        return len(self.slots)

    def accepts(self, weight) -> bool:
        if self.accept == "excitatory":
            return weight >= 0
        if self.accept == "inhibitory":
            return weight <= 0
        return True

    def add_value(self, offset, weight) -> bool:
        """Schedule ``weight`` ``offset`` steps ahead; False when filtered out."""
        if not 0 <= offset < self.size:
            raise IndexError(f"offset {offset} outside the buffer window of {self.size} steps")
        if not self.accepts(weight):
            return False
        self.slots[(self.read_index + offset) % self.size] += weight
        return True

    def get_value(self, offset=0) -> float:
        if not 0 <= offset < self.size:
            return 0.0
        return self.slots[(self.read_index + offset) % self.size]

    def advance(self):
        """Zero the current slot and move on to the next step."""
        self.slots[self.read_index] = 0.0
        self.read_index = (self.read_index + 1) % self.size

    def clear(self):
        self.slots = [0.0] * self.size
        self.read_index = 0


def sign_filter(modifiers) -> str:
    """Accepted polarity for an input line's ``inhibitory``/``excitatory`` modifiers."""
    mods = set(modifiers)
    if mods == {"excitatory"}:
        return "excitatory"
    if mods == {"inhibitory"}:
        return "inhibitory"
    return "both"
