"""PNG plots of simulation traces."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_trace(trace, path, title=None):
    """Draw every probe of ``trace`` on its own axis and save a PNG at ``path``.

    Spike times are marked as vertical lines.  The file carries no
    timestamp metadata, so identical traces give identical images.
    """
    path = Path(path)
    columns = trace.columns or []
    n = max(1, len(columns))
    fig, axes = plt.subplots(n, 1, sharex=True, squeeze=False,
                             figsize=(7.0, 1.2 + 1.8 * n))
    times = trace.times
    for ax, name in zip(axes[:, 0], columns):
        ax.plot(times, trace.column(name), linewidth=1.0, color="C0")
        for t in trace.spike_times_ms:
            ax.axvline(t, color="C3", linewidth=0.6, alpha=0.6)
        ax.set_ylabel(name)
        ax.grid(True, linewidth=0.3, alpha=0.5)
    axes[-1, 0].set_xlabel("time (ms)")
    if title:
        axes[0, 0].set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="png", dpi=100, metadata={"Software": None})
    plt.close(fig)
    return path


__all__ = ["plot_trace"]
