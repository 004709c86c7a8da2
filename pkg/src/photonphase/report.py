"""Evaluation reports: per-example correlation, the fixed TSV table and an
optional figure of merit plot written next to it."""

from __future__ import annotations

import numpy as np

from .errors import PairingError
from .metrics import MetricsRecord, pcc
from .sensor import NOISE_LEVELS

__all__ = ["score_arrays", "aggregate", "write_report", "plot_report",
           "REPORT_HEADER"]

REPORT_HEADER = "noise_level\tmethod\tmean_pcc\tstd_pcc\tn"


def score_arrays(truths: np.ndarray, recons: np.ndarray, method: str,
                 noise_level: int, split: str = "test", start_id: int = 0):
    """PCC of each reconstruction against its ground truth."""
    truths = np.asarray(truths)
    recons = np.asarray(recons)
    if truths.shape != recons.shape:
        raise PairingError(
            f"cannot pair {truths.shape} truths with {recons.shape} reconstructions")
    return [
        MetricsRecord(start_id + i, split, noise_level, method,
                      pcc(truths[i], recons[i]))
        for i in range(truths.shape[0])
    ]


def aggregate(records) -> list:
    """(noise_level, method, mean_pcc, std_pcc, n) rows, deterministically
    ordered."""
    groups = {}
    for rec in records:
        groups.setdefault((rec.noise_level, rec.method), []).append(rec.pcc)
    rows = []
    for (level, method) in sorted(groups):
        vals = np.asarray(groups[(level, method)])
        std = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        rows.append((level, method, float(vals.mean()), std, len(vals)))
    return rows


def write_report(rows, path) -> None:
    """Tab-separated table with a fixed header; byte-stable across reruns."""
    lines = [REPORT_HEADER]
    for level, method, mean, std, n in rows:
        lines.append(f"{level}\t{method}\t{mean:.6f}\t{std:.6f}\t{n}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def plot_report(rows, path) -> None:
    """Mean PCC vs photon count with +-1 std error bars, one line per method."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    methods = sorted({row[1] for row in rows})
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for method in methods:
        pts = [(NOISE_LEVELS[row[0]][0], row[2], row[3])
               for row in rows if row[1] == method]
        pts.sort()
        photons = [p[0] for p in pts]
        means = [p[1] for p in pts]
        stds = [p[2] for p in pts]
        ax.errorbar(photons, means, yerr=stds, marker="o", capsize=3, label=method)
    ax.set_xscale("log")
    ax.set_xlabel("photon count per pixel")
    ax.set_ylabel("Pearson correlation with ground truth")
    ax.set_ylim(-0.1, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
