"""Counter-based deterministic random sampling.

All stochastic draws in the toolkit come from Philox4x64-10, a stateless
counter-based generator: every variate is a pure function of

    key     = (seed, stream)
    counter = (c0, c1, c2, slot)

so results are bit-identical regardless of execution order, chunking or
thread count.  For sensor noise the counter words are
(pixel_row, pixel_col, frame_index, slot); object synthesis uses
(example_index, block, 0, slot).  The slot word separates the independent
draws one pixel needs (Poisson attempts, binomial thinning, Gaussian pair).

The implementation matches the reference Philox4x64-10 output stream and is
cross-checked in the test suite against :class:`numpy.random.Philox`.
"""

from __future__ import annotations

import numpy as np
from scipy import special

__all__ = [
    "STREAM_SENSOR",
    "STREAM_OBJECTS",
    "philox4x64",
    "block_uniforms",
    "uniforms",
    "poisson",
    "binomial",
    "normal_pair",
]

# Philox4x64 round multipliers and Weyl key increments.
_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_U64 = np.uint64

STREAM_SENSOR = 1
STREAM_OBJECTS = 2

# slot layout per (pixel, frame) in sensor sampling
_SLOT_POISSON = 0  # slots 0..47: one per rejection attempt
_SLOT_BINOMIAL = 48
_SLOT_GAUSS = 49
_MAX_POISSON_ATTEMPTS = 48

# 2^-53, converts the top 53 bits of a word into a double in [0, 1)
_INV53 = 1.0 / 9007199254740992.0


def _mulhilo(a, b):
    """Full 64x64 -> 128 bit product via 32-bit limbs (numpy has no u128)."""
    lo = a * b
    a_lo = a & _MASK32
    a_hi = a >> _U64(32)
    b_lo = b & _MASK32
    b_hi = b >> _U64(32)
    carry = (a_lo * b_lo) >> _U64(32)
    mid1 = a_hi * b_lo + carry
    mid2 = a_lo * b_hi + (mid1 & _MASK32)
    hi = a_hi * b_hi + (mid1 >> _U64(32)) + (mid2 >> _U64(32))
    return hi, lo


def philox4x64(counter, key):
    """Run the 10-round Philox4x64 block cipher.

    Parameters
    ----------
    counter : sequence of four uint64 arrays (broadcastable)
    key : pair of uint64 scalars

    Returns
    -------
    tuple of four uint64 arrays with the broadcast shape of ``counter``.
    """
    c = [np.asarray(w, dtype=np.uint64) for w in counter]
    c0, c1, c2, c3 = (w.copy() for w in np.broadcast_arrays(*c))
    k0 = _U64(int(key[0]) & 0xFFFFFFFFFFFFFFFF)
    k1 = _U64(int(key[1]) & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        for _ in range(10):
            hi0, lo0 = _mulhilo(c0, _M0)
            hi1, lo1 = _mulhilo(c2, _M1)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
            k0 = k0 + _W0
            k1 = k1 + _W1
    return c0, c1, c2, c3


def block_uniforms(counter, key):
    """Four independent 53-bit uniforms in [0, 1) per counter block."""
    words = philox4x64(counter, key)
    return tuple(((w >> _U64(11)).astype(np.float64)) * _INV53 for w in words)


def _pixel_counter(shape, frame, slot):
    rows = np.arange(shape[0], dtype=np.uint64)[:, None]
    cols = np.arange(shape[1], dtype=np.uint64)[None, :]
    return rows, cols, _U64(frame), _U64(slot)


def _pixel_uniforms(shape, seed, frame, slot, stream=STREAM_SENSOR):
    return block_uniforms(_pixel_counter(shape, frame, slot), (seed, stream))


def uniforms(seed, stream, index, count, block_offset=0):
    """``count`` uniforms keyed by (seed, stream, index); used by generators."""
    nblocks = (count + 3) // 4
    blocks = np.arange(block_offset, block_offset + nblocks, dtype=np.uint64)
    u = block_uniforms((_U64(index), blocks, _U64(0), _U64(0)), (seed, stream))
    return np.stack(u, axis=-1).ravel()[:count]


def normal_pair(shape, seed, frame, slot=_SLOT_GAUSS, stream=STREAM_SENSOR):
    """Two standard-normal fields per pixel via Box-Muller."""
    u0, u1, _, _ = _pixel_uniforms(shape, seed, frame, slot, stream)
    r = np.sqrt(-2.0 * np.log1p(-u0))  # 1-u0 in (2^-53, 1], log is finite
    return r * np.cos(2.0 * np.pi * u1), r * np.sin(2.0 * np.pi * u1)


def _poisson_search(lam, u):
    """Exact inversion by sequential search; requires lam < ~30."""
    out = np.zeros(lam.shape, dtype=np.int64)
    p = np.exp(-lam)
    cdf = p.copy()
    active = u > cdf
    k = 0
    # lam < 30 makes P(X > 200) vanishingly small
    while active.any() and k < 200:
        k += 1
        p = np.where(active, p * lam / k, p)
        cdf = np.where(active, cdf + p, cdf)
        out[active] += 1
        active = u > cdf
    return out


def _poisson_ptrs(lam, seed, frame, stream):
    """Transformed-rejection Poisson sampling for lam >= 30 (Hoermann PTRS).

    Each rejection attempt consumes the uniform pair of its own counter
    slot, so the draw for a pixel never depends on any other pixel.
    """
    shape = lam.shape
    out = np.zeros(shape, dtype=np.int64)
    pending = np.ones(shape, dtype=bool)
    b = 0.931 + 2.53 * np.sqrt(lam)
    a = -0.059 + 0.02483 * b
    vr = 0.9277 - 3.6224 / (b - 2.0)
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    log_lam = np.log(lam)
    for attempt in range(_MAX_POISSON_ATTEMPTS):
        if not pending.any():
            break
        w0, w1, _, _ = _pixel_uniforms(shape, seed, frame, _SLOT_POISSON + attempt, stream)
        u = w0 - 0.5
        v = w1
        us = 0.5 - np.abs(u)
        k = np.floor((2.0 * a / us + b) * u + lam + 0.43)
        accept_fast = pending & (us >= 0.07) & (v <= vr)
        reject = (k < 0) | ((us < 0.013) & (v > us))
        with np.errstate(divide="ignore", invalid="ignore"):
            lhs = np.log(v * inv_alpha / (a / (us * us) + b))
            rhs = k * log_lam - lam - special.gammaln(k + 1.0)
        accept_slow = pending & ~accept_fast & ~reject & (lhs <= rhs)
        accepted = accept_fast | accept_slow
        out[accepted] = k[accepted].astype(np.int64)
        pending &= ~accepted
    if pending.any():
        # probability < 0.12^48; settle on the mode rather than loop forever
        out[pending] = np.floor(lam[pending]).astype(np.int64)
    return out


def poisson(lam, seed, frame=0, stream=STREAM_SENSOR):
    """Poisson counts, one per pixel, keyed by (seed, row, col, frame).

    Inversion by sequential search below mean 30, transformed rejection
    above.  Both branches of a mixed-mean image stay pixel-keyed, so the
    output is independent of how the image is partitioned.
    """
    lam = np.asarray(lam, dtype=np.float64)
    out = np.zeros(lam.shape, dtype=np.int64)
    small = (lam > 0) & (lam < 30.0)
    large = lam >= 30.0
    if small.any():
        u0, _, _, _ = _pixel_uniforms(lam.shape, seed, frame, _SLOT_POISSON, stream)
        res = _poisson_search(np.where(small, lam, 1.0), u0)
        out[small] = res[small]
    if large.any():
        res = _poisson_ptrs(np.where(large, lam, 30.0), seed, frame, stream)
        out[large] = res[large]
    return out


def binomial(n, p, seed, frame=0, stream=STREAM_SENSOR):
    """Binomial(n, p) per pixel by exact inverse-CDF, walking from the mode.

    Consumes one uniform per pixel.  The CDF anchor at the mode comes from
    ``scipy.special.bdtr``; the walk uses the pmf recurrence, so the result
    is the exact quantile even for n in the thousands where the k=0 pmf
    underflows.
    """
    n = np.asarray(n, dtype=np.int64)
    out = np.zeros(n.shape, dtype=np.int64)
    if p >= 1.0:
        return n.copy()
    if p <= 0.0:
        return out
    u0, _, _, _ = _pixel_uniforms(n.shape, seed, frame, _SLOT_BINOMIAL, stream)
    live = n > 0
    if not live.any():
        return out
    nf = n.astype(np.float64)
    mode = np.floor((nf + 1.0) * p).astype(np.int64)
    mode = np.minimum(mode, n)
    mf = mode.astype(np.float64)
    # binomial CDF at the mode: F(k; n, p) = I_{1-p}(n-k, k+1); the betainc
    # form avoids the deprecated non-integer bdtr path.  a=0 would be the
    # mode==n case where the CDF is exactly 1.
    with np.errstate(invalid="ignore"):
        cdf_mode = special.betainc(np.maximum(nf - mf, 1e-300), mf + 1.0, 1.0 - p)
    cdf_mode = np.where(mode == n, 1.0, cdf_mode)
    log_pmf = (
        special.gammaln(nf + 1.0)
        - special.gammaln(mf + 1.0)
        - special.gammaln(nf - mf + 1.0)
        + mf * np.log(p)
        + (nf - mf) * np.log1p(-p)
    )
    pmf = np.exp(log_pmf)
    odds = p / (1.0 - p)

    k = mode.copy()
    go_up = live & (u0 > cdf_mode)
    # walk up: find smallest k with F(k) >= u
    cdf = cdf_mode.copy()
    pk = pmf.copy()
    active = go_up.copy()
    max_steps = int(12.0 * np.sqrt(float(np.max(nf)) * p * (1 - p)) + 64)
    for _ in range(max_steps):
        if not active.any():
            break
        kf = k.astype(np.float64)
        step_p = pk * (nf - kf) / (kf + 1.0) * odds
        nxt = active & (k < n)
        cdf = np.where(nxt, cdf + step_p, cdf)
        pk = np.where(nxt, step_p, pk)
        k = np.where(nxt, k + 1, k)
        active &= nxt & (u0 > cdf)
    # walk down: largest k where removing pmf(k) still leaves F >= u
    go_down = live & ~go_up
    cdf = cdf_mode.copy()
    pk = pmf.copy()
    active = go_down.copy()
    for _ in range(max_steps):
        active &= (k > 0) & ((cdf - pk) >= u0)
        if not active.any():
            break
        kf = k.astype(np.float64)
        cdf = np.where(active, cdf - pk, cdf)
        pk = np.where(active, pk * kf / ((nf - kf + 1.0) * odds), pk)
        k = np.where(active, k - 1, k)
    out[live] = k[live]
    return out
