"""Figure rendering for the report paths (replay curves, bench latencies).

Figures are a convenience companion to the CSV output, which stays the
canonical machine-readable artifact.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_distance_series(estimates, path, truth_mm=None, title="Ground distance"):
    """Distance-vs-time curve; invalid frames appear as gaps, extrapolated
    (carried-forward) values as hollow markers."""
    fig, ax = plt.subplots(figsize=(9, 4.5))
    t = [e.timestamp_ms / 1000.0 for e in estimates]
    d = [e.distance_mm if e.valid else float("nan") for e in estimates]
    ax.plot(t, d, color="tab:blue", lw=1.2, label="detected")
    ext_t = [e.timestamp_ms / 1000.0 for e in estimates if e.extrapolated]
    ext_d = [e.distance_mm for e in estimates if e.extrapolated]
    if ext_t:
        ax.plot(ext_t, ext_d, "o", mfc="none", color="tab:orange",
                ms=4, label="carried forward")
    if truth_mm is not None:
        ax.plot(t, truth_mm, color="tab:red", lw=1.0, ls="--", label="truth")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("ground distance (mm)")
    ax.set_title(title)
    ax.legend(loc="best")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_latency_report(report, path):
    """Per-stage p50/p95 latency bars from a benchmark report."""
    stages = [s for s in report.stage_p50_us if s != "end_to_end"]
    p50 = [report.stage_p50_us[s] / 1000.0 for s in stages]
    p95 = [report.stage_p95_us[s] / 1000.0 for s in stages]
    fig, ax = plt.subplots(figsize=(7, 4))
    xs = range(len(stages))
    ax.bar([x - 0.2 for x in xs], p50, width=0.4, label="p50")
    ax.bar([x + 0.2 for x in xs], p95, width=0.4, label="p95")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(stages)
    ax.set_ylabel("latency (ms)")
    ax.set_title(f"{report.fps:.1f} fps over {report.frames} frames")
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
