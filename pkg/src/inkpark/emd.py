"""Empirical mode decomposition by standard sifting.

Envelopes are cubic splines through the local maxima/minima, with up to
two extrema mirrored beyond each end of the signal to tame edge effects.
Sifting of a proto-IMF stops when the normalized squared change
sum((h_prev - h)^2) / sum(h_prev^2) drops below SD_THRESHOLD or after
MAX_SIFTS passes. Decomposition stops when the residual is monotone or
keeps fewer than two interior extrema, or after MAX_IMFS modes. The
returned modes satisfy sum(imfs) + residual == input up to float round-off
by construction.
"""

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import SeriesTooShortError

SD_THRESHOLD = 0.2
MAX_SIFTS = 50
MAX_IMFS = 8
MIN_LENGTH = 8


def find_extrema(x):
    """Interior extrema indices (maxima, minima); plateaus count once, at
    their center sample."""
    d = np.diff(x)
    nz = np.nonzero(d)[0]
    if nz.size < 2:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    s = np.sign(d[nz])
    flips = np.nonzero(s[1:] != s[:-1])[0]
    maxima = []
    minima = []
    for k in flips:
        # extremum (or plateau) spans samples nz[k]+1 .. nz[k+1]
        pos = (nz[k] + 1 + nz[k + 1]) // 2
        if s[k] > 0:
            maxima.append(pos)
        else:
            minima.append(pos)
    return np.asarray(maxima, dtype=np.int64), np.asarray(minima, dtype=np.int64)


def _envelope(x, idx, n):
    """Cubic-spline envelope through the extrema at ``idx``, with up to two
    mirrored anchors per side; None when fewer than two anchors exist."""
    if idx.size < 2:
        return None
    # find_extrema only reports interior extrema, so mirrored anchors never
    # collide with the originals and four-plus anchors are guaranteed
    left_src = idx[:2]
    right_src = idx[-2:]
    pos = np.concatenate([(-left_src[::-1]).astype(np.float64),
                          idx.astype(np.float64),
                          (2 * (n - 1) - right_src[::-1]).astype(np.float64)])
    val = np.concatenate([x[left_src[::-1]], x[idx], x[right_src[::-1]]])
    spline = CubicSpline(pos, val, bc_type="not-a-knot")
    return spline(np.arange(n, dtype=np.float64))


def _sift(component):
    """One IMF from ``component``; returns the input unchanged if no
    envelope pair can be built."""
    n = component.shape[0]
    h = component.copy()
    for _ in range(MAX_SIFTS):
        maxima, minima = find_extrema(h)
        upper = _envelope(h, maxima, n)
        lower = _envelope(h, minima, n)
        if upper is None or lower is None:
            break
        mean_env = (upper + lower) / 2.0
        h_new = h - mean_env
        denom = float(np.sum(h * h))
        if denom == 0.0:
            h = h_new
            break
        sd = float(np.sum(mean_env * mean_env)) / denom
        h = h_new
        if sd < SD_THRESHOLD:
            break
    return h


def emd(series, max_imfs=MAX_IMFS):
    """Decompose ``series`` into (imfs, residual)."""
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        x = x.ravel()
    if x.size < MIN_LENGTH:
        raise SeriesTooShortError(
            f"emd needs at least {MIN_LENGTH} samples, got {x.size}")
    imfs = []
    residual = x.copy()
    while len(imfs) < max_imfs:
        maxima, minima = find_extrema(residual)
        if maxima.size < 1 or minima.size < 1 or maxima.size + minima.size < 2:
            break
        imf = _sift(residual)
        if not np.any(imf):
            break
        imfs.append(imf)
        residual = residual - imf
    return imfs, residual
