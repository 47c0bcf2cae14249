"""Matplotlib figures written next to the CLI's JSON/table output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

STATUS_COLORS = {
    "Empty": "#d9d9d9",
    "OccupiedByOwner": "#74c476",
    "OccupiedByOtherTenant": "#fd8d3c",
    "OccupiedByUnknown": "#de2d26",
}
STALL_DEPTH_M = 1.8


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_occupancy(report, garage, path):
    """Garage floor plan: stalls colored by verdict, beacons, true and estimated tracks."""
    aspect = garage.height / garage.width
    fig, ax = plt.subplots(figsize=(10, max(3.0, 10 * aspect)))
    for entry in report.stalls:
        stall = garage.stall(entry.stall_id)
        cx, cy = stall.center
        status = entry.status.status.value
        ax.add_patch(Rectangle((cx - stall.width / 2, cy - STALL_DEPTH_M / 2), stall.width, STALL_DEPTH_M,
                               facecolor=STATUS_COLORS[status], edgecolor="k", lw=0.8))
        label = entry.stall_id if not entry.status.plate else f"{entry.stall_id}\n{entry.status.plate}"
        ax.text(cx, cy, label, ha="center", va="center", fontsize=7)

    if report.track:
        true = [t[1] for t in report.track]
        est = [t[2] for t in report.track]
        ax.plot([p[0] for p in true], [p[1] for p in true], "-", color="tab:green", lw=1.5, label="route")
        ax.plot([p[0] for p in est], [p[1] for p in est], ".", color="tab:blue", ms=2, alpha=0.5,
                label="estimated position")

    bx = [b.position[0] for b in garage.beacons]
    by = [b.position[1] for b in garage.beacons]
    ax.scatter(bx, by, marker="^", s=60, color="gold", edgecolor="k", zorder=5, label="beacon")
    for b in garage.beacons:
        ax.annotate(b.id, b.position, textcoords="offset points", xytext=(3, 3), fontsize=6)

    handles = [Rectangle((0, 0), 1, 1, facecolor=c, edgecolor="k") for c in STATUS_COLORS.values()]
    legend1 = ax.legend(handles, list(STATUS_COLORS), loc="upper center", bbox_to_anchor=(0.5, -0.12),
                        ncol=4, fontsize=7, frameon=False)
    ax.add_artist(legend1)
    ax.legend(loc="upper center", bbox_to_anchor=(0.5, -0.2), ncol=3, fontsize=7, frameon=False)
    ax.set_xlim(-0.3, garage.width + 0.3)
    ax.set_ylim(-0.3, garage.height + 0.3)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title("Stall occupancy")
    return _save(fig, path)


def plot_localization_error(report, path):
    ticks = [t[0] for t in report.track]
    err = [((t[1][0] - t[2][0]) ** 2 + (t[1][1] - t[2][1]) ** 2) ** 0.5 for t in report.track]
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(ticks, err, lw=0.8)
    ax.set_xlabel("tick")
    ax.set_ylabel("position error (m)")
    ax.set_ylim(bottom=0)
    return _save(fig, path)


def plot_timing(timing, path):
    """Mean solve time per (method, n, workers) with one-sigma error bars, log scale."""
    entries = sorted(timing, key=lambda e: (e.method, e.n, e.workers))
    labels = [f"{e.method}\nn={e.n} w={e.workers}" for e in entries]
    means = [e.mean_s for e in entries]
    errs = [e.stddev_s for e in entries]
    colors = {"gauss": "tab:red", "jacobi": "tab:blue", "gauss-seidel": "tab:green"}
    fig, ax = plt.subplots(figsize=(max(4, 1.1 * len(entries)), 4))
    ax.bar(range(len(entries)), means, yerr=errs, capsize=3, color=[colors[e.method] for e in entries])
    ax.set_xticks(range(len(entries)))
    ax.set_xticklabels(labels, fontsize=7)
    if all(m > 0 for m in means):
        ax.set_yscale("log")
    ax.set_ylabel("mean wall time (s)")
    return _save(fig, path)
