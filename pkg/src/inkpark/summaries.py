"""Statistical summary of a scalar series.

Population (1/N) moments throughout; excess kurtosis (the -3 form);
percentiles by linear interpolation between closest ranks, i.e. the value
at fractional position q*(N-1) in the sorted series. Zero-variance series
report skewness = kurtosis = 0.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SeriesTooShortError

STAT_NAMES = ("mean", "median", "variance", "std", "max", "min",
              "p1", "p99", "p_range", "skewness", "kurtosis")

# the per-stroke summary set: everything except the percentile range
STROKE_STAT_NAMES = ("max", "min", "mean", "median", "variance", "std",
                     "p1", "p99", "skewness", "kurtosis")


@dataclass(frozen=True)
class SummarySet:
    mean: float
    median: float
    variance: float
    std: float
    max: float
    min: float
    p1: float
    p99: float
    p_range: float
    skewness: float
    kurtosis: float

    def as_dict(self):
        return {name: getattr(self, name) for name in STAT_NAMES}


def summarize(series):
    """SummarySet of a non-empty series."""
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim != 1:
        arr = arr.ravel()
    if arr.size == 0:
        raise SeriesTooShortError("cannot summarize an empty series")
    mean = float(np.mean(arr))
    centered = arr - mean
    variance = float(np.mean(centered ** 2))
    std = float(np.sqrt(variance))
    if std > 0.0:
        skewness = float(np.mean(centered ** 3)) / std ** 3
        kurtosis = float(np.mean(centered ** 4)) / std ** 4 - 3.0
    else:
        skewness = 0.0
        kurtosis = 0.0
    p1 = float(np.percentile(arr, 1.0, method="linear"))
    p99 = float(np.percentile(arr, 99.0, method="linear"))
    return SummarySet(
        mean=mean,
        median=float(np.percentile(arr, 50.0, method="linear")),
        variance=variance,
        std=std,
        max=float(np.max(arr)),
        min=float(np.min(arr)),
        p1=p1,
        p99=p99,
        p_range=p99 - p1,
        skewness=skewness,
        kurtosis=kurtosis,
    )
