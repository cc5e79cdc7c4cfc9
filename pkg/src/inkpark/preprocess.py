"""Train-only z-score standardization.

Parameters are fitted on training rows only and carry no reference to the
data they were fitted on, so applying them to held-out rows cannot leak
held-out statistics. Zero-variance columns are flagged and transform to 0.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InkparkError


@dataclass(frozen=True)
class ZScoreParams:
    mean: np.ndarray
    std: np.ndarray
    columns: tuple
    zero_variance: tuple   # column names with sigma == 0

    def to_json_dict(self):
        return {
            "columns": list(self.columns),
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
            "zero_variance": list(self.zero_variance),
        }

    @classmethod
    def from_json_dict(cls, doc):
        return cls(mean=np.asarray(doc["mean"], dtype=np.float64),
                   std=np.asarray(doc["std"], dtype=np.float64),
                   columns=tuple(doc["columns"]),
                   zero_variance=tuple(doc["zero_variance"]))


def fit_zscore(values, columns=None):
    """Population mean/std per column of the training matrix (rows >= 2)."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] < 2:
        raise InkparkError("z-score fit needs a 2-D matrix with at least 2 rows")
    if columns is None:
        columns = tuple(f"c{k}" for k in range(values.shape[1]))
    if len(columns) != values.shape[1]:
        raise DimensionMismatchError("column names do not match matrix width")
    mean = values.mean(axis=0)
    std = np.sqrt(((values - mean) ** 2).mean(axis=0))
    zero = tuple(columns[k] for k in np.nonzero(std == 0.0)[0])
    return ZScoreParams(mean=mean, std=std, columns=tuple(columns), zero_variance=zero)


def apply_zscore(values, params):
    """(x - mu) / sigma per column; zero-variance columns map to 0."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != params.mean.shape[0]:
        raise DimensionMismatchError(
            f"matrix has {values.shape[-1]} columns, params expect {params.mean.shape[0]}")
    safe = np.where(params.std == 0.0, 1.0, params.std)
    out = (values - params.mean) / safe
    out[:, params.std == 0.0] = 0.0
    return out
