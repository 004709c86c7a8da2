"""Reconstruction quality scoring: Pearson correlation and scale recovery."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateImage, GeometryMismatch

__all__ = ["npcc", "pcc", "recover_scale", "MetricsRecord"]


def npcc(a: np.ndarray, b: np.ndarray) -> float:
    """Negative Pearson correlation coefficient between two images.

    Reaches -1 for a perfect match and +1 for a perfect anticorrelation;
    invariant to positive affine rescaling of either argument.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise GeometryMismatch(f"images differ in size: {a.size} vs {b.size}")
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt(np.sum(da * da) * np.sum(db * db))
    if denom == 0.0:
        raise DegenerateImage("constant image has no correlation")
    return float(-np.sum(da * db) / denom)


def pcc(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation, the figure of merit (pcc = -npcc)."""
    return -npcc(a, b)


def recover_scale(ground_truths, reconstructions) -> float:
    """Single multiplicative factor aligning reconstruction histograms with
    the ground-truth histograms.

    Pools all pixels of each set and least-squares matches the 1%..99%
    quantiles: alpha minimises sum_q (q_truth - alpha * q_recon)^2.  The
    factor is constant per reconstruction source, so pooling (rather than
    per-image fitting) is the right granularity.
    """
    truths = [np.asarray(t, dtype=np.float64).ravel() for t in ground_truths]
    recons = [np.asarray(r, dtype=np.float64).ravel() for r in reconstructions]
    if not truths or len(truths) != len(recons):
        raise GeometryMismatch("need non-empty, paired image sets")
    t_pool = np.concatenate(truths)
    r_pool = np.concatenate(recons)
    if t_pool.std() == 0 or r_pool.std() == 0:
        raise DegenerateImage("constant pixel pool")
    q = np.arange(1, 100) / 100.0
    qt = np.quantile(t_pool, q)
    qr = np.quantile(r_pool, q)
    denom = np.sum(qr * qr)
    if denom == 0.0:
        raise DegenerateImage("reconstruction quantiles are all zero")
    return float(np.sum(qt * qr) / denom)


@dataclass(frozen=True)
class MetricsRecord:
    """One scored example; npcc is always the negation of pcc."""

    example_id: int
    split: str
    noise_level: int
    method: str
    pcc: float

    @property
    def npcc(self) -> float:
        return -self.pcc
