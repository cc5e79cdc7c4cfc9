"""Seeded synthetic cohorts with controllable PD/HC group differences.

Trials are built on a base "progress" timeline of writing segments
separated by in-air gaps (100-300 ms). Healthy-control trials are the
template trajectory plus small i.i.d. jitter. PD trials additionally get:
a sinusoidal tremor in x and y with a per-trial random phase, a time axis
stretched by 1/speed_factor, per-segment amplitude shrink by
(1 - amplitude_decay_per_stroke)^k (micrographia), and extra pressure
noise.

Timestamps are integer milliseconds with a uniform 7 ms step, i.e. the
nominal 150 Hz tablet rate quantized to 1000/7 Hz; the uniform step makes
time-axis stretching exact (speed_factor 0.5 doubles the duration to the
millisecond).

Every random draw comes from a named sub-stream of the trial seed
(splitmix64 derivation), so a fixed (spec, seed) determines every emitted
byte, and zero-effect PD trials are bit-identical to HC trials.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InkparkError
from .seeding import derive_seed, rng_for
from .signal_io import (HC, PD, CohortManifest, ManifestEntry, Sample, Trial,
                        write_manifest, write_trial_file)

DT_MS = 7
SAMPLING_RATE_HZ = 1000.0 / DT_MS

JITTER_STD = 1.0          # tablet units, applied to x and y for everyone
PRESSURE_NOISE_STD = 2.0  # device units, applied for everyone


@dataclass(frozen=True)
class Severity:
    """PD effect sizes; the all-defaults instance is a no-op."""

    tremor_amplitude: float = 0.0
    tremor_freq_hz: float = 5.0
    speed_factor: float = 1.0
    amplitude_decay_per_stroke: float = 0.0
    pressure_jitter: float = 0.0

    def __post_init__(self):
        if self.tremor_freq_hz <= 0:
            raise InkparkError("tremor_freq_hz must be positive")
        if not 0 < self.speed_factor <= 1:
            raise InkparkError("speed_factor must be in (0, 1]")
        if not 0 <= self.amplitude_decay_per_stroke < 1:
            raise InkparkError("amplitude_decay_per_stroke must be in [0, 1)")
        if self.tremor_amplitude < 0 or self.pressure_jitter < 0:
            raise InkparkError("effect sizes must be non-negative")


ZERO_SEVERITY = Severity()

SEVERITY_PRESETS = {
    "separable": Severity(tremor_amplitude=25.0, tremor_freq_hz=5.0,
                          speed_factor=0.7, amplitude_decay_per_stroke=0.08,
                          pressure_jitter=35.0),
    "hard": Severity(tremor_amplitude=3.0, tremor_freq_hz=5.0,
                     speed_factor=0.95, amplitude_decay_per_stroke=0.02,
                     pressure_jitter=8.0),
}


@dataclass(frozen=True)
class TaskTemplate:
    """Parametric base trajectory: an Archimedean spiral or a loopy script
    line built from summed sinusoids, split into pen-down segments."""

    task_id: int
    name: str
    kind: str                 # "spiral" | "script"
    n_segments: int
    segment_duration_s: float
    loops: float              # oscillation count per script segment
    x_amplitude: float
    y_amplitude: float
    advance: float            # horizontal spacing per script segment


TASK_TEMPLATES = {
    1: TaskTemplate(1, "spiral", "spiral", 1, 5.0, 3.0, 1500.0, 1500.0, 0.0),
    2: TaskTemplate(2, "repeated-letter", "script", 3, 1.2, 3.0, 90.0, 500.0, 650.0),
    3: TaskTemplate(3, "bigram", "script", 3, 1.5, 4.0, 110.0, 460.0, 800.0),
    4: TaskTemplate(4, "trigram", "script", 3, 1.8, 5.0, 130.0, 430.0, 950.0),
    5: TaskTemplate(5, "word-short", "script", 2, 2.5, 6.0, 150.0, 420.0, 1400.0),
    6: TaskTemplate(6, "word-medium", "script", 2, 2.6, 7.0, 150.0, 400.0, 1500.0),
    7: TaskTemplate(7, "word-long", "script", 3, 2.2, 8.0, 150.0, 400.0, 1200.0),
    8: TaskTemplate(8, "sentence", "script", 5, 1.8, 5.0, 140.0, 380.0, 900.0),
}

_ORIGIN_X = 2500.0
_ORIGIN_Y = 2500.0


@dataclass(frozen=True)
class CohortSpec:
    n_pd: int
    n_hc: int
    tasks: tuple = (1, 2, 3, 4, 5, 6, 7, 8)
    seed: int = 0
    severity: Severity = SEVERITY_PRESETS["separable"]

    def __post_init__(self):
        if self.n_pd < 1 or self.n_hc < 1:
            raise InkparkError("n_pd and n_hc must be at least 1")
        for t in self.tasks:
            if t not in TASK_TEMPLATES:
                raise InkparkError(f"unknown task id {t}")


def _segment_point(template, k, u, scale):
    """Base path of segment k at local progress u in [0, 1], shrunk by
    ``scale`` around the segment's start point."""
    if template.kind == "spiral":
        theta = 2.0 * math.pi * template.loops * u
        theta_max = 2.0 * math.pi * template.loops
        a = template.x_amplitude / theta_max
        bx = a * theta * np.cos(theta)
        by = a * theta * np.sin(theta)
        ax, ay = 0.0, 0.0
    else:
        bx = template.advance * (k + u) + template.x_amplitude * np.sin(
            2.0 * math.pi * template.loops * u + 0.9)
        by = template.y_amplitude * np.sin(2.0 * math.pi * template.loops * u) \
            + 0.35 * template.y_amplitude * np.sin(4.0 * math.pi * template.loops * u + 0.4)
        ax = template.advance * k + template.x_amplitude * math.sin(0.9)
        ay = 0.0 + 0.35 * template.y_amplitude * math.sin(0.4)
    x = ax + (bx - ax) * scale + _ORIGIN_X
    y = ay + (by - ay) * scale + _ORIGIN_Y
    return x, y


def _base_pieces(template, seed):
    """Piece list [(kind, segment_index, interval_count)] on the base
    (unstretched) timeline; gap lengths are 100-300 ms draws."""
    rng = rng_for(seed, "gaps")
    n_seg = max(2, int(round(template.segment_duration_s * 1000.0 / DT_MS)))
    pieces = []
    for k in range(template.n_segments):
        pieces.append(("seg", k, n_seg))
        if k < template.n_segments - 1:
            gap_ms = int(rng.integers(100, 301))
            pieces.append(("gap", k, max(1, int(round(gap_ms / DT_MS)))))
    return pieces


def generate_trial(template, label, severity, seed, subject_id="synth"):
    """Deterministic trial for (template, label, severity, seed)."""
    eff = severity if label == PD else ZERO_SEVERITY
    pieces = _base_pieces(template, seed)
    n0 = sum(p[2] for p in pieces)
    n_intervals = max(1, int(round(n0 / eff.speed_factor)))
    n = n_intervals + 1

    t_ms = DT_MS * np.arange(n, dtype=np.int64)
    base_pos = np.arange(n, dtype=np.float64) * n0 / n_intervals
    bounds = np.concatenate([[0], np.cumsum([p[2] for p in pieces])]).astype(np.float64)
    piece_idx = np.clip(np.searchsorted(bounds, base_pos, side="right") - 1,
                        0, len(pieces) - 1)

    decay = 1.0 - eff.amplitude_decay_per_stroke
    x = np.empty(n)
    y = np.empty(n)
    button = np.empty(n, dtype=np.int64)
    for p, (kind, k, count) in enumerate(pieces):
        mask = piece_idx == p
        if not mask.any():
            continue
        u = (base_pos[mask] - bounds[p]) / count
        if kind == "seg":
            px, py = _segment_point(template, k, u, decay ** k)
            button[mask] = 1
        else:
            x0, y0 = _segment_point(template, k, 1.0, decay ** k)
            x1, y1 = _segment_point(template, k + 1, 0.0, decay ** (k + 1))
            px = x0 + (x1 - x0) * u
            py = y0 + (y1 - y0) * u
            button[mask] = 0
        x[mask] = px
        y[mask] = py

    t_sec = t_ms.astype(np.float64) / 1000.0
    if eff.tremor_amplitude > 0 or label == PD:
        rng_tremor = rng_for(seed, "tremor")
        phase_x = rng_tremor.uniform(0.0, 2.0 * math.pi)
        phase_y = rng_tremor.uniform(0.0, 2.0 * math.pi)
        w = 2.0 * math.pi * eff.tremor_freq_hz
        x = x + eff.tremor_amplitude * np.sin(w * t_sec + phase_x)
        y = y + eff.tremor_amplitude * np.sin(w * t_sec + phase_y)

    rng_jitter = rng_for(seed, "jitter")
    x = x + rng_jitter.normal(0.0, JITTER_STD, n)
    y = y + rng_jitter.normal(0.0, JITTER_STD, n)

    pressure = 600.0 + 140.0 * np.sin(2.0 * math.pi * 1.1 * t_sec + 0.7)
    pressure = pressure + rng_for(seed, "pressure").normal(0.0, PRESSURE_NOISE_STD, n)
    if label == PD:
        pressure = pressure + rng_for(seed, "pd-pressure").normal(
            0.0, 1.0, n) * eff.pressure_jitter
    on = button == 1
    pressure = np.where(on, np.maximum(np.rint(pressure), 1.0), 0.0)

    rng_pose = rng_for(seed, "pose")
    azimuth = 1800.0 + 150.0 * np.sin(2.0 * math.pi * 0.25 * t_sec + 0.3) \
        + rng_pose.normal(0.0, 3.0, n)
    altitude = 550.0 + 90.0 * np.sin(2.0 * math.pi * 0.2 * t_sec + 1.9) \
        + rng_pose.normal(0.0, 3.0, n)
    azimuth = np.clip(np.rint(azimuth), 0, 3599)
    altitude = np.clip(np.rint(altitude), 1, 900)

    xi = np.rint(x).astype(np.int64)
    yi = np.rint(y).astype(np.int64)
    samples = tuple(
        Sample(t=int(t_ms[i]), x=int(xi[i]), y=int(yi[i]), button=int(button[i]),
               azimuth=int(azimuth[i]), altitude=int(altitude[i]),
               pressure=int(pressure[i]))
        for i in range(n)
    )
    return Trial(subject_id=subject_id, task_id=template.task_id, label=label,
                 samples=samples, sampling_rate_hz=SAMPLING_RATE_HZ)


def trial_rel_path(subject_id, task_id):
    return f"trials/{subject_id}_task{task_id}.txt"


def generate_cohort(spec):
    """All trials for a cohort spec plus the matching manifest.

    Per-trial seeds derive from (spec.seed, subject_id, task_id) via the
    splitmix64 chain, so any subset of subjects/tasks reproduces the same
    trials.
    """
    subjects = [(f"pd_{i:03d}", PD) for i in range(spec.n_pd)]
    subjects += [(f"hc_{i:03d}", HC) for i in range(spec.n_hc)]
    trials = []
    entries = []
    for subject_id, label in subjects:
        for task_id in spec.tasks:
            template = TASK_TEMPLATES[task_id]
            tseed = derive_seed(spec.seed, subject_id, task_id)
            trials.append(generate_trial(template, label, spec.severity,
                                         tseed, subject_id))
            entries.append(ManifestEntry(subject_id=subject_id, task_id=task_id,
                                         label=label,
                                         path=trial_rel_path(subject_id, task_id)))
    return trials, CohortManifest(entries=tuple(entries))


def write_cohort(trials, manifest, out_dir):
    """Write trial files and manifest.json under ``out_dir``."""
    from pathlib import Path

    out_dir = Path(out_dir)
    (out_dir / "trials").mkdir(parents=True, exist_ok=True)
    by_key = {(t.subject_id, t.task_id): t for t in trials}
    for e in manifest.entries:
        write_trial_file(by_key[(e.subject_id, e.task_id)], out_dir / e.path)
    write_manifest(manifest, out_dir / "manifest.json")
    return out_dir / "manifest.json"
