"""Figures for verification reports (written to files, never shown)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .report import FAIL, INCONCLUSIVE, PASS  # noqa: E402

STATUS_COLORS = {PASS: "#4c956c", FAIL: "#c44536", INCONCLUSIVE: "#e0a458"}


def _worst(statuses):
    for s in (FAIL, INCONCLUSIVE):
        if s in statuses:
            return s
    return PASS


def _bars(report):
    """(label, seconds, status) per check group, in run order."""
    if not report.groups:
        return [(c.claim, c.elapsed, c.status) for c in report.checks]
    out, i = [], 0
    for name, t, n in report.groups:
        out.append((name, t, _worst([c.status for c in report.checks[i:i + n]])))
        i += n
    return out


def plot_report(report, path) -> Path:
    """Horizontal bar chart of wall time per check group, colored by outcome."""
    path = Path(path)
    bars = _bars(report)
    names = [b[0] for b in bars]
    times = [b[1] for b in bars]
    colors = [STATUS_COLORS[b[2]] for b in bars]

    fig, ax = plt.subplots(figsize=(7, 0.3 * len(names) + 1.4))
    y = range(len(names))
    ax.barh(y, times, color=colors)
    ax.set_yticks(list(y))
    ax.set_yticklabels(names, fontsize=8)
    ax.invert_yaxis()
    ax.set_xlabel("wall time [s]")
    n = report.counts
    ax.set_title(f"{report.suite}: {n[PASS]} pass, {n[FAIL]} fail, {n[INCONCLUSIVE]} inconclusive", fontsize=10)
    for side in ("top", "right"):
        ax.spines[side].set_visible(False)
    handles = [plt.Rectangle((0, 0), 1, 1, color=c) for c in STATUS_COLORS.values()]
    ax.legend(handles, list(STATUS_COLORS), fontsize=7, loc="lower right", frameon=False)
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
