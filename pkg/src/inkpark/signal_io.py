"""Canonical data model and on-disk formats for tablet trials.

Trial text format: first line is the sample count, each following line is
seven whitespace-separated integers. The default column order is
``(t, x, y, button, azimuth, altitude, pressure)``; readers may remap it
for other tablet exports. Writes are bit-exact: ASCII, LF line endings,
single-space separators, canonical column order.

A cohort manifest is a UTF-8 JSON document listing
``{subject_id, task_id, label, path}`` records; paths are resolved
relative to the manifest's directory.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ManifestError, TrialParseError, TrialValidationError

PD = 1
HC = -1

FIELD_NAMES = ("t", "x", "y", "button", "azimuth", "altitude", "pressure")
DEFAULT_COLUMN_ORDER = FIELD_NAMES


@dataclass(frozen=True)
class Sample:
    """One pen record: time (ms), position, pen state and device channels."""

    t: int
    x: int
    y: int
    button: int
    azimuth: int
    altitude: int
    pressure: int

    def __post_init__(self):
        if self.t < 0:
            raise TrialValidationError(f"negative timestamp {self.t}")
        if self.button not in (0, 1):
            raise TrialValidationError(f"invalid button state {self.button}")
        if self.pressure < 0:
            raise TrialValidationError(f"negative pressure {self.pressure}")


@dataclass(frozen=True)
class Trial:
    """One task recording for one subject; immutable after construction."""

    subject_id: str
    task_id: int
    label: int
    samples: tuple
    sampling_rate_hz: float = 150.0

    def __post_init__(self):
        if not self.samples:
            raise TrialValidationError("trial has no samples")
        if not 1 <= self.task_id <= 8:
            raise TrialValidationError(f"task_id {self.task_id} outside [1, 8]")
        if self.label not in (PD, HC):
            raise TrialValidationError(f"label must be +1 (PD) or -1 (HC), got {self.label}")
        if self.sampling_rate_hz <= 0:
            raise TrialValidationError("sampling rate must be positive")
        prev = -1
        for k, s in enumerate(self.samples):
            if s.t <= prev:
                raise TrialValidationError(
                    f"timestamps not strictly increasing at sample {k} "
                    f"({s.t} after {prev})")
            prev = s.t

    def __len__(self):
        return len(self.samples)

    def as_arrays(self):
        """Column arrays: dict of float64 (t, x, y, azimuth, altitude,
        pressure) and int64 button. Cached on first call."""
        cached = getattr(self, "_arrays", None)
        if cached is not None:
            return cached
        n = len(self.samples)
        out = {name: np.empty(n) for name in ("t", "x", "y", "azimuth", "altitude", "pressure")}
        button = np.empty(n, dtype=np.int64)
        for k, s in enumerate(self.samples):
            out["t"][k] = s.t
            out["x"][k] = s.x
            out["y"][k] = s.y
            out["azimuth"][k] = s.azimuth
            out["altitude"][k] = s.altitude
            out["pressure"][k] = s.pressure
            button[k] = s.button
        out["button"] = button
        object.__setattr__(self, "_arrays", out)
        return out


@dataclass(frozen=True)
class ManifestEntry:
    subject_id: str
    task_id: int
    label: int
    path: str


@dataclass(frozen=True)
class CohortManifest:
    entries: tuple

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            key = (e.subject_id, e.task_id)
            if key in seen:
                raise ManifestError(f"duplicate (subject, task) pair {key}")
            seen.add(key)

    @property
    def label_counts(self):
        counts = {PD: 0, HC: 0}
        for e in self.entries:
            counts[e.label] += 1
        return counts


def parse_trial_file(path, column_order=DEFAULT_COLUMN_ORDER, *, subject_id=None,
                     task_id=1, label=PD, sampling_rate_hz=150.0):
    """Parse one trial file; every failure raises a TrialParseError naming
    the offending line and field. Metadata not stored in the file
    (subject, task, label) comes from the keyword arguments; ``load_cohort``
    supplies it from the manifest.
    """
    path = Path(path)
    if tuple(sorted(column_order)) != tuple(sorted(FIELD_NAMES)):
        raise TrialParseError(f"column_order must be a permutation of {FIELD_NAMES}",
                              path=path)
    if subject_id is None:
        subject_id = path.stem
    try:
        text = path.read_text(encoding="ascii")
    except FileNotFoundError:
        raise TrialParseError("file not found", path=path)
    except UnicodeDecodeError as exc:
        raise TrialParseError(f"not ASCII: {exc}", path=path)

    lines = text.splitlines()
    if not lines:
        raise TrialParseError("empty file", path=path, line=1)
    try:
        declared = int(lines[0].strip())
    except ValueError:
        raise TrialParseError(f"header is not an integer count: {lines[0]!r}",
                              path=path, line=1)
    data_lines = [ln for ln in lines[1:] if ln.strip()]
    if len(data_lines) != declared:
        raise TrialParseError(
            f"count mismatch: header declares {declared} samples, "
            f"found {len(data_lines)} data lines", path=path, line=1)

    samples = []
    prev_t = -1
    for lineno, ln in enumerate(data_lines, start=2):
        tokens = ln.split()
        if len(tokens) != len(FIELD_NAMES):
            raise TrialParseError(
                f"expected {len(FIELD_NAMES)} values, found {len(tokens)}",
                path=path, line=lineno)
        values = {}
        for name, tok in zip(column_order, tokens):
            try:
                values[name] = int(tok)
            except ValueError:
                raise TrialParseError(f"non-numeric token {tok!r}",
                                      path=path, line=lineno, field=name)
        if values["button"] not in (0, 1):
            raise TrialParseError(f"invalid button state {values['button']}",
                                  path=path, line=lineno, field="button")
        if values["pressure"] < 0:
            raise TrialParseError(f"negative pressure {values['pressure']}",
                                  path=path, line=lineno, field="pressure")
        if values["t"] < 0:
            raise TrialParseError(f"negative timestamp {values['t']}",
                                  path=path, line=lineno, field="t")
        if values["t"] <= prev_t:
            raise TrialParseError(
                f"timestamps not strictly increasing ({values['t']} after {prev_t})",
                path=path, line=lineno, field="t")
        prev_t = values["t"]
        samples.append(Sample(**values))

    try:
        return Trial(subject_id=subject_id, task_id=task_id, label=label,
                     samples=tuple(samples), sampling_rate_hz=sampling_rate_hz)
    except TrialValidationError as exc:
        raise TrialParseError(str(exc), path=path)


def write_trial_file(trial, path):
    """Serialize a trial in the canonical column order; round-trips exactly."""
    path = Path(path)
    lines = [str(len(trial.samples))]
    for s in trial.samples:
        lines.append(f"{s.t} {s.x} {s.y} {s.button} {s.azimuth} {s.altitude} {s.pressure}")
    path.write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")


def write_manifest(manifest, path):
    path = Path(path)
    counts = manifest.label_counts
    doc = {
        "trials": [
            {"subject_id": e.subject_id, "task_id": e.task_id,
             "label": e.label, "path": e.path}
            for e in manifest.entries
        ],
        "counts": {"pd": counts[PD], "hc": counts[HC]},
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_manifest(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {path}")
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}")
    if not isinstance(doc, dict) or "trials" not in doc:
        raise ManifestError("manifest must be a JSON object with a 'trials' list")
    entries = []
    for rec in doc["trials"]:
        try:
            entries.append(ManifestEntry(
                subject_id=str(rec["subject_id"]), task_id=int(rec["task_id"]),
                label=int(rec["label"]), path=str(rec["path"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"malformed manifest record {rec!r}: {exc}")
    return CohortManifest(entries=tuple(entries))


def load_cohort(manifest_path):
    """Load every trial referenced by a manifest; labels/ids attached."""
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path)
    base = manifest_path.parent
    trials = []
    for e in manifest.entries:
        trial_path = base / e.path
        if not trial_path.exists():
            raise ManifestError(f"manifest references missing file: {trial_path}")
        trials.append(parse_trial_file(
            trial_path, subject_id=e.subject_id, task_id=e.task_id, label=e.label))
    return trials


def trials_by_task(trials):
    """Group trials by task id, preserving order within each task."""
    grouped = {}
    for t in trials:
        grouped.setdefault(t.task_id, []).append(t)
    return grouped
