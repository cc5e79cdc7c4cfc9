"""Feature registry and per-task feature matrices.

Every series-valued kinematic quantity contributes the full 11-statistic
summary; trajectory angles contribute mean/median/std/p1/p99 per arc
offset; the remaining quantities enter as scalars. The registry is a fixed
ordered list; its length is the documented constant REGISTRY_SIZE and is
asserted by tests. Absent features (angle series with too little arc
length, stroke blocks without an on-surface stroke) are imputed with the
column's cohort median, computed over present, non-sentinel values without
looking at labels; imputations are recorded in a provenance list.

CSV layout: one header row with the registry names plus ``label`` and
``subject_id``; floats are written in shortest round-trip form.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kinematics as kin
from .errors import InkparkError
from .summaries import STAT_NAMES, summarize

REGISTRY_VERSION = "1"

ANGLE_STAT_NAMES = ("mean", "median", "std", "p1", "p99")

_WHOLE_SERIES = (
    ("x_position", None),
    ("y_position", None),
    ("pressure", None),
    ("azimuth", None),
    ("altitude", None),
    ("displacement", (kin.DISPLACEMENT, kin.RESULTANT, False)),
    ("x_displacement", (kin.DISPLACEMENT, kin.X, False)),
    ("y_displacement", (kin.DISPLACEMENT, kin.Y, False)),
    ("x_signed_displacement", (kin.DISPLACEMENT, kin.X, True)),
    ("y_signed_displacement", (kin.DISPLACEMENT, kin.Y, True)),
    ("velocity", (kin.VELOCITY, kin.RESULTANT, False)),
    ("x_velocity", (kin.VELOCITY, kin.X, False)),
    ("y_velocity", (kin.VELOCITY, kin.Y, False)),
    ("x_signed_velocity", (kin.VELOCITY, kin.X, True)),
    ("y_signed_velocity", (kin.VELOCITY, kin.Y, True)),
    ("acceleration", (kin.ACCELERATION, kin.RESULTANT, True)),
    ("jerk", (kin.JERK, kin.RESULTANT, True)),
    ("teager_kaiser_velocity", None),
)

_PHASE_SERIES = (
    ("displacement", (kin.DISPLACEMENT, kin.RESULTANT, False)),
    ("velocity", (kin.VELOCITY, kin.RESULTANT, False)),
    ("x_displacement", (kin.DISPLACEMENT, kin.X, False)),
    ("y_displacement", (kin.DISPLACEMENT, kin.Y, False)),
    ("x_velocity", (kin.VELOCITY, kin.X, False)),
    ("y_velocity", (kin.VELOCITY, kin.Y, False)),
    ("x_signed_displacement", (kin.DISPLACEMENT, kin.X, True)),
    ("y_signed_displacement", (kin.DISPLACEMENT, kin.Y, True)),
    ("x_signed_velocity", (kin.VELOCITY, kin.X, True)),
    ("y_signed_velocity", (kin.VELOCITY, kin.Y, True)),
    ("acceleration", (kin.ACCELERATION, kin.RESULTANT, True)),
    ("x_acceleration", (kin.ACCELERATION, kin.X, False)),
    ("y_acceleration", (kin.ACCELERATION, kin.Y, False)),
)

_SCALAR_NAMES = (
    ("ncv", "nca", "ncp", "stroke_count")
    + ("time_in_air_ms", "time_on_surface_ms", "time_total_ms", "air_surface_ratio")
    + ("shannon_entropy_xy", "renyi_entropy_xy")
    + ("conventional_energy_velocity",)
    + ("snr_x", "snr_y")
    + tuple(f"emd_imf{k}_energy" for k in (1, 2, 3))
    + tuple(f"emd_imf{k}_entropy" for k in (1, 2, 3))
    + ("emd_imf_count",)
    + ("first_pressure", "first_azimuth", "first_altitude",
       "last_pressure", "last_azimuth", "last_altitude", "last_x", "last_y")
    + tuple(f"stroke_{q}_{s}" for q in kin.STROKE_QUANTITIES
            for s in ("max", "min", "mean", "median", "variance", "std",
                      "p1", "p99", "skewness", "kurtosis"))
)


def _build_registry():
    names = []
    for base, _ in _WHOLE_SERIES:
        names.extend(f"{base}_{stat}" for stat in STAT_NAMES)
    for prefix in ("first", "last"):
        for base, _ in _PHASE_SERIES:
            names.extend(f"{prefix}_{base}_{stat}" for stat in STAT_NAMES)
    for d in kin.ANGLE_OFFSETS:
        names.extend(f"angle_d{int(d):03d}_{stat}" for stat in ANGLE_STAT_NAMES)
    names.extend(_SCALAR_NAMES)
    if len(set(names)) != len(names):
        raise AssertionError("registry names are not unique")
    return tuple(names)


REGISTRY = _build_registry()
REGISTRY_SIZE = len(REGISTRY)


def _series_stats(feats, name, series):
    if series is None or len(series) == 0:
        for stat in STAT_NAMES:
            feats[f"{name}_{stat}"] = None
        return
    stats = summarize(series).as_dict()
    for stat in STAT_NAMES:
        feats[f"{name}_{stat}"] = stats[stat]


def extract_features(trial):
    """Registry-ordered feature dict for one trial; absent features are
    None. Trials too short to host the registry's derivative orders are
    rejected with a PhaseTooShortError/SeriesTooShortError."""
    arrays = trial.as_arrays()
    feats = {}

    for base, spec in _WHOLE_SERIES:
        if base == "teager_kaiser_velocity":
            velocity = kin.kinematic_series(trial, kin.VELOCITY, kin.RESULTANT,
                                            signed=False, phase=kin.WHOLE)
            series = kin.teager_kaiser(velocity)
        elif spec is None:
            source = {"x_position": "x", "y_position": "y"}.get(base, base)
            series = arrays[source]
        else:
            kind, axis, signed = spec
            series = kin.kinematic_series(trial, kind, axis, signed=signed,
                                          phase=kin.WHOLE)
        _series_stats(feats, base, series)

    for prefix, phase in (("first", kin.FIRST10), ("last", kin.LAST10)):
        for base, (kind, axis, signed) in _PHASE_SERIES:
            series = kin.kinematic_series(trial, kind, axis, signed=signed,
                                          phase=phase)
            _series_stats(feats, f"{prefix}_{base}", series)

    for d in kin.ANGLE_OFFSETS:
        angles = kin.angle_trajectory(trial, kin.AngleConfig(d))
        name = f"angle_d{int(d):03d}"
        if angles.size == 0:
            for stat in ANGLE_STAT_NAMES:
                feats[f"{name}_{stat}"] = None
        else:
            stats = summarize(angles).as_dict()
            for stat in ANGLE_STAT_NAMES:
                feats[f"{name}_{stat}"] = stats[stat]

    velocity = kin.kinematic_series(trial, kin.VELOCITY, kin.RESULTANT,
                                    signed=False, phase=kin.WHOLE)
    accel = kin.kinematic_series(trial, kin.ACCELERATION, kin.RESULTANT,
                                 signed=True, phase=kin.WHOLE)
    feats["ncv"] = float(kin.count_changes(velocity))
    feats["nca"] = float(kin.count_changes(accel))
    feats["ncp"] = float(kin.count_changes(arrays["pressure"]))
    feats["stroke_count"] = float(kin.stroke_count(trial))

    dur = kin.durations(trial)
    feats["time_in_air_ms"] = dur["in_air_ms"]
    feats["time_on_surface_ms"] = dur["on_surface_ms"]
    feats["time_total_ms"] = dur["total_ms"]
    ratio = dur["ratio"]
    feats["air_surface_ratio"] = min(ratio, kin.RATIO_SENTINEL)

    feats["shannon_entropy_xy"] = kin.entropy_xy(arrays["x"], arrays["y"], "shannon")
    feats["renyi_entropy_xy"] = kin.entropy_xy(arrays["x"], arrays["y"], "renyi")
    feats["conventional_energy_velocity"] = kin.conventional_energy(velocity)
    feats["snr_x"] = kin.snr(arrays["x"])
    feats["snr_y"] = kin.snr(arrays["y"])
    feats.update(kin.emd_features(trial))
    feats.update(kin.pen_state_features(trial))

    for quantity in kin.STROKE_QUANTITIES:
        block = kin.stroke_feature_block(trial, quantity)
        if block is None:
            for s in ("max", "min", "mean", "median", "variance", "std",
                      "p1", "p99", "skewness", "kurtosis"):
                feats[f"stroke_{quantity}_{s}"] = None
        else:
            feats.update(block)

    ordered = {name: feats[name] for name in REGISTRY}
    if len(ordered) != REGISTRY_SIZE:
        raise AssertionError("extracted feature set does not match registry")
    return ordered


@dataclass(frozen=True)
class FeatureMatrix:
    """Trials-by-features values with labels and subject ids attached."""

    values: np.ndarray
    feature_names: tuple
    labels: np.ndarray
    subject_ids: tuple
    task_id: int
    registry_version: str = REGISTRY_VERSION
    provenance: tuple = ()

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_features(self):
        return self.values.shape[1]


def build_feature_matrix(trials, task_id=None):
    """Assemble the feature matrix for one task's trials.

    Absent features are imputed with the column median over present,
    non-sentinel values (0.0 when a column is absent everywhere); the
    (subject, feature) pairs that were imputed are recorded in
    ``provenance``.
    """
    if not trials:
        raise InkparkError("cannot build a feature matrix from an empty cohort")
    tasks = {t.task_id for t in trials}
    if len(tasks) != 1:
        raise InkparkError(f"trials span multiple tasks: {sorted(tasks)}")
    if task_id is None:
        task_id = trials[0].task_id

    rows = []
    for trial in trials:
        feats = extract_features(trial)
        rows.append([np.nan if feats[name] is None else float(feats[name])
                     for name in REGISTRY])
    values = np.asarray(rows, dtype=np.float64)

    provenance = []
    for col, name in enumerate(REGISTRY):
        column = values[:, col]
        missing = np.isnan(column)
        if not missing.any():
            continue
        present = column[~missing]
        present = present[present != kin.RATIO_SENTINEL]
        fill = float(np.median(present)) if present.size else 0.0
        for r in np.nonzero(missing)[0]:
            provenance.append((trials[r].subject_id, name))
        column[missing] = fill

    if not np.isfinite(values).all():
        raise InkparkError("feature matrix contains non-finite values after imputation")

    return FeatureMatrix(
        values=values,
        feature_names=REGISTRY,
        labels=np.asarray([t.label for t in trials], dtype=np.int64),
        subject_ids=tuple(t.subject_id for t in trials),
        task_id=task_id,
        provenance=tuple(provenance),
    )


def write_feature_csv(matrix, path):
    """Serialize a FeatureMatrix as UTF-8, LF-terminated CSV."""
    path = Path(path)
    lines = [",".join(matrix.feature_names + ("label", "subject_id"))]
    for r in range(matrix.n_rows):
        cells = [repr(float(v)) for v in matrix.values[r]]
        cells.append(str(int(matrix.labels[r])))
        cells.append(matrix.subject_ids[r])
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_feature_csv(path, task_id=0):
    """Read a feature CSV produced by write_feature_csv."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise InkparkError(f"empty feature CSV: {path}")
    header = lines[0].split(",")
    if header[-2:] != ["label", "subject_id"]:
        raise InkparkError("feature CSV must end with label and subject_id columns")
    names = tuple(header[:-2])
    values = []
    labels = []
    subjects = []
    for ln in lines[1:]:
        if not ln.strip():
            continue
        cells = ln.split(",")
        if len(cells) != len(header):
            raise InkparkError(f"malformed CSV row with {len(cells)} cells in {path}")
        values.append([float(c) for c in cells[:-2]])
        labels.append(int(cells[-2]))
        subjects.append(cells[-1])
    return FeatureMatrix(
        values=np.asarray(values, dtype=np.float64),
        feature_names=names,
        labels=np.asarray(labels, dtype=np.int64),
        subject_ids=tuple(subjects),
        task_id=task_id,
    )
