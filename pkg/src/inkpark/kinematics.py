"""Kinematic series and scalars derived from a trial.

Conventions (documented here once, relied on everywhere):

* Difference series live on sample intervals. The displacement at interval
  i is the coordinate difference (or the Euclidean norm of it) divided by
  the interval length, so its units are tablet-units/ms; velocity divides
  by the interval length a second time (units/ms^2). Acceleration and jerk
  are further first differences of the previous series divided by the
  interval length at the leading sample.
* Signed axis series keep the direction of movement; the unsigned variant
  is the elementwise absolute value of the signed one. Resultant
  displacement/velocity are norms and therefore already unsigned.
* A 10% phase spans ceil(0.1*n) sample intervals: First10 covers samples
  [0 : p+1), Last10 covers [n-p-1 : n) with p = ceil(0.1*n), so each phase
  always holds at least one difference pair.
* The in-air/on-surface ratio of a trial with zero on-surface time is
  +inf; feature assembly serializes it as RATIO_SENTINEL.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import emd as emd_mod
from .errors import InkparkError, PhaseTooShortError, SeriesTooShortError
from .summaries import STROKE_STAT_NAMES, summarize

WHOLE = "whole"
FIRST10 = "first10"
LAST10 = "last10"
PHASES = (WHOLE, FIRST10, LAST10)

DISPLACEMENT = "displacement"
VELOCITY = "velocity"
ACCELERATION = "acceleration"
JERK = "jerk"
KINDS = (DISPLACEMENT, VELOCITY, ACCELERATION, JERK)

RESULTANT = "resultant"
X = "x"
Y = "y"
AXES = (RESULTANT, X, Y)

_EXTRA_DIFFS = {DISPLACEMENT: 0, VELOCITY: 0, ACCELERATION: 1, JERK: 2}

ON_SURFACE = "on_surface"
IN_AIR = "in_air"

RATIO_SENTINEL = 1e6

SNR_WINDOW = 15
SNR_CLAMP_DB = 60.0
ENTROPY_BINS = 16


@dataclass(frozen=True)
class Stroke:
    """Maximal run of constant button state; [start, stop) sample indices."""

    kind: str
    start: int
    stop: int

    def __len__(self):
        return self.stop - self.start


@dataclass(frozen=True)
class AngleConfig:
    """Arc-length offset (tablet units) for trajectory-angle anchors."""

    d: float

    def __post_init__(self):
        if self.d <= 0:
            raise InkparkError("angle offset d must be positive")


ANGLE_OFFSETS = tuple(float(d) for d in range(10, 101, 10))


def segment_strokes(trial):
    """Split the trial into alternating on-surface/in-air strokes."""
    button = [s.button for s in trial.samples]
    strokes = []
    start = 0
    for i in range(1, len(button)):
        if button[i] != button[start]:
            strokes.append(Stroke(ON_SURFACE if button[start] == 1 else IN_AIR,
                                  start, i))
            start = i
    strokes.append(Stroke(ON_SURFACE if button[start] == 1 else IN_AIR,
                          start, len(button)))
    return strokes


def stroke_count(trial):
    """Number of on-surface strokes."""
    return sum(1 for s in segment_strokes(trial) if s.kind == ON_SURFACE)


def phase_bounds(n, phase):
    """Half-open sample index range [start, stop) of a phase."""
    if phase == WHOLE:
        return 0, n
    if n < 2:
        raise PhaseTooShortError(f"phase {phase} needs at least 2 samples, trial has {n}")
    p = math.ceil(0.1 * n)
    if phase == FIRST10:
        return 0, p + 1
    if phase == LAST10:
        return n - p - 1, n
    raise InkparkError(f"unknown phase {phase!r}")


def kinematic_series(trial, kind, axis, signed=False, phase=WHOLE):
    """Difference-based series of the requested kind/axis/phase.

    Raises PhaseTooShortError when the phase cannot host the derivative
    order (displacement/velocity need 1 difference pair, acceleration 2,
    jerk 3).
    """
    if kind not in KINDS:
        raise InkparkError(f"unknown kind {kind!r}")
    if axis not in AXES:
        raise InkparkError(f"unknown axis {axis!r}")
    arrays = trial.as_arrays() if not isinstance(trial, dict) else trial
    n = arrays["t"].shape[0]
    start, stop = phase_bounds(n, phase)
    t = arrays["t"][start:stop]
    pairs = t.shape[0] - 1
    need = 1 + _EXTRA_DIFFS[kind]
    if pairs < need:
        raise PhaseTooShortError(
            f"{kind} over {phase} needs {need} difference pairs, phase has {pairs}")
    dt = np.diff(t)
    if axis == RESULTANT:
        dx = np.diff(arrays["x"][start:stop])
        dy = np.diff(arrays["y"][start:stop])
        series = np.sqrt(dx * dx + dy * dy) / dt
    else:
        dv = np.diff(arrays[axis][start:stop])
        series = dv / dt
    if kind != DISPLACEMENT:
        series = series / dt
    order = _EXTRA_DIFFS[kind]
    for level in range(order):
        series = np.diff(series) / dt[: pairs - 1 - level]
    if not signed:
        series = np.abs(series)
    return series


def angle_trajectory(trial, config):
    """Trajectory angles (degrees, [0, 180]) at on-surface anchors with at
    least ``config.d`` of polyline arc length on both sides within their
    stroke. Returns an empty array when no anchor qualifies."""
    d = float(config.d)
    arrays = trial.as_arrays()
    angles = []
    for stroke in segment_strokes(trial):
        if stroke.kind != ON_SURFACE or len(stroke) < 2:
            continue
        xs = arrays["x"][stroke.start:stroke.stop]
        ys = arrays["y"][stroke.start:stroke.stop]
        seg = np.hypot(np.diff(xs), np.diff(ys))
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        total = cum[-1]
        if total < 2.0 * d:
            continue
        ok = (cum >= d) & (total - cum >= d)
        if not ok.any():
            continue
        s = cum[ok]
        bx = np.interp(s - d, cum, xs)
        by = np.interp(s - d, cum, ys)
        ax = np.interp(s + d, cum, xs)
        ay = np.interp(s + d, cum, ys)
        v1x = bx - xs[ok]
        v1y = by - ys[ok]
        v2x = ax - xs[ok]
        v2y = ay - ys[ok]
        n1 = np.hypot(v1x, v1y)
        n2 = np.hypot(v2x, v2y)
        good = (n1 > 0) & (n2 > 0)
        if not good.any():
            continue
        cosang = (v1x * v2x + v1y * v2y)[good] / (n1 * n2)[good]
        angles.append(np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0))))
    if not angles:
        return np.empty(0)
    return np.concatenate(angles)


def count_changes(series):
    """Sign changes of the first difference; zero differences are skipped
    so plateau runs collapse. Series shorter than 3 count 0 changes."""
    arr = np.asarray(series, dtype=np.float64)
    if arr.size < 3:
        return 0
    signs = np.sign(np.diff(arr))
    signs = signs[signs != 0]
    if signs.size < 2:
        return 0
    return int(np.sum(signs[1:] != signs[:-1]))


def durations(trial):
    """In-air/on-surface/total times (ms) and their ratio. Each interval
    [t_i, t_{i+1}) counts toward the button state at i; a trial with zero
    on-surface time reports ratio = +inf (serialized as RATIO_SENTINEL)."""
    arrays = trial.as_arrays()
    dt = np.diff(arrays["t"])
    state = arrays["button"][:-1]
    in_air = float(np.sum(dt[state == 0]))
    on_surface = float(np.sum(dt[state == 1]))
    total = float(arrays["t"][-1] - arrays["t"][0])
    ratio = in_air / on_surface if on_surface > 0 else math.inf
    return {"in_air_ms": in_air, "on_surface_ms": on_surface,
            "total_ms": total, "ratio": ratio}


def entropy_xy(x, y, kind="shannon", bins=ENTROPY_BINS, renyi_alpha=2.0):
    """Histogram entropy (bits) of the 2-D point set over its bounding box."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size == 0:
        raise SeriesTooShortError("entropy needs a non-empty point set")
    ranges = []
    for v in (x, y):
        lo, hi = float(np.min(v)), float(np.max(v))
        if lo == hi:
            hi = lo + 1.0
        ranges.append((lo, hi))
    counts, _, _ = np.histogram2d(x, y, bins=bins, range=ranges)
    p = counts.ravel() / x.size
    p = p[p > 0]
    if kind == "shannon":
        return float(-np.sum(p * np.log2(p)))
    if kind == "renyi":
        if renyi_alpha == 1.0:
            return float(-np.sum(p * np.log2(p)))
        return float(np.log2(np.sum(p ** renyi_alpha)) / (1.0 - renyi_alpha))
    raise InkparkError(f"unknown entropy kind {kind!r}")


def entropy_1d(series, bins=ENTROPY_BINS):
    """Histogram Shannon entropy (bits) of a 1-D series over [min, max]."""
    arr = np.asarray(series, dtype=np.float64)
    if arr.size == 0:
        raise SeriesTooShortError("entropy needs a non-empty series")
    lo, hi = float(np.min(arr)), float(np.max(arr))
    if lo == hi:
        return 0.0
    counts, _ = np.histogram(arr, bins=bins, range=(lo, hi))
    p = counts / arr.size
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def conventional_energy(series):
    """Sum of squares."""
    arr = np.asarray(series, dtype=np.float64)
    return float(np.sum(arr * arr))


def teager_kaiser(series):
    """psi[i] = x_i^2 - x_{i-1} * x_{i+1} at interior samples."""
    arr = np.asarray(series, dtype=np.float64)
    if arr.size < 3:
        raise SeriesTooShortError("Teager-Kaiser needs at least 3 samples")
    return arr[1:-1] * arr[1:-1] - arr[:-2] * arr[2:]


def snr(series, window=SNR_WINDOW):
    """Smooth-vs-residual power ratio in dB, clamped to +/-60.

    The smooth component is a centered moving average restricted to
    positions with a full window (edges are dropped), so linear trends
    leave an exactly-zero residual and clamp at +60 dB; an all-zero series
    reports the -60 dB floor.
    """
    arr = np.asarray(series, dtype=np.float64)
    if arr.size < window:
        raise SeriesTooShortError(f"snr needs at least {window} samples")
    smooth = np.convolve(arr, np.ones(window), mode="valid") / window
    half = (window - 1) // 2
    residual = arr[half:arr.size - half] - smooth
    p_smooth = float(np.mean(smooth * smooth))
    p_res = float(np.mean(residual * residual))
    if p_smooth == 0.0:
        return -SNR_CLAMP_DB
    if p_res == 0.0:
        return SNR_CLAMP_DB
    value = 10.0 * math.log10(p_smooth / p_res)
    return float(np.clip(value, -SNR_CLAMP_DB, SNR_CLAMP_DB))


def pen_state_features(trial):
    """First/last pressure, azimuth, altitude plus the last x and y."""
    first = trial.samples[0]
    last = trial.samples[-1]
    return {
        "first_pressure": float(first.pressure),
        "first_azimuth": float(first.azimuth),
        "first_altitude": float(first.altitude),
        "last_pressure": float(last.pressure),
        "last_azimuth": float(last.azimuth),
        "last_altitude": float(last.altitude),
        "last_x": float(last.x),
        "last_y": float(last.y),
    }


STROKE_QUANTITIES = ("pressure", "displacement", "velocity")


def stroke_feature_block(trial, quantity):
    """Per-stroke summary statistics of a quantity, averaged across
    on-surface strokes; None when no stroke can provide the quantity."""
    if quantity not in STROKE_QUANTITIES:
        raise InkparkError(f"unknown stroke quantity {quantity!r}")
    arrays = trial.as_arrays()
    per_stroke = []
    for stroke in segment_strokes(trial):
        if stroke.kind != ON_SURFACE:
            continue
        if quantity == "pressure":
            values = arrays["pressure"][stroke.start:stroke.stop]
        else:
            if len(stroke) < 2:
                continue
            t = arrays["t"][stroke.start:stroke.stop]
            dx = np.diff(arrays["x"][stroke.start:stroke.stop])
            dy = np.diff(arrays["y"][stroke.start:stroke.stop])
            dt = np.diff(t)
            values = np.sqrt(dx * dx + dy * dy) / dt
            if quantity == "velocity":
                values = values / dt
        if values.size == 0:
            continue
        stats = summarize(values).as_dict()
        per_stroke.append([stats[name] for name in STROKE_STAT_NAMES])
    if not per_stroke:
        return None
    means = np.mean(np.asarray(per_stroke), axis=0)
    return {f"stroke_{quantity}_{name}": float(means[k])
            for k, name in enumerate(STROKE_STAT_NAMES)}


def emd_features(trial):
    """Energy and histogram entropy of the first three velocity IMFs plus
    the IMF count (missing IMFs contribute zeros)."""
    velocity = kinematic_series(trial, VELOCITY, RESULTANT, signed=False, phase=WHOLE)
    imfs, _residual = emd_mod.emd(velocity)
    out = {}
    for k in range(3):
        if k < len(imfs):
            out[f"emd_imf{k + 1}_energy"] = conventional_energy(imfs[k])
            out[f"emd_imf{k + 1}_entropy"] = entropy_1d(imfs[k])
        else:
            out[f"emd_imf{k + 1}_energy"] = 0.0
            out[f"emd_imf{k + 1}_entropy"] = 0.0
    out["emd_imf_count"] = float(len(imfs))
    return out
