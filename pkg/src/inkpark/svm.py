"""Binary kernel SVM: kernels, dual training, prediction, seeded search.

Training solves the soft-margin dual with second-order pairwise
working-set updates (see backends) to a KKT gap tolerance of 1e-3, bounded
by 2*10^5 working-set iterations (non-separable linear duals at large C
legitimately need ~2*10^4); exhausting the bound raises ConvergenceError.
The bias comes from free support vectors (0 < alpha < C) when any exist,
otherwise from the midpoint of the feasible interval. A decision value of
exactly 0 predicts +1 (PD), the documented tie rule.

Hyperparameter search draws C and gamma log-uniformly from [0.01, 100] and
the kernel family uniformly; the sigmoid kernel reuses the drawn gamma as
its slope with coef0 fixed at 0, keeping the search two-dimensional.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import backends
from .errors import (ConvergenceError, DimensionMismatchError, InkparkError,
                     SingleClassError)
from .folds import fold_partitions, stratified_fold_ids
from .seeding import rng_for

LINEAR = "linear"
RBF = "rbf"
SIGMOID = "sigmoid"
KERNELS = (LINEAR, RBF, SIGMOID)

DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 200_000

_SV_THRESHOLD = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    family: str
    gamma: float = 1.0
    coef0: float = 0.0

    def __post_init__(self):
        if self.family not in KERNELS:
            raise InkparkError(f"unknown kernel family {self.family!r}")
        if self.family in (RBF, SIGMOID) and self.gamma <= 0:
            raise InkparkError("gamma must be positive for rbf/sigmoid kernels")


def kernel_eval(spec, u, v):
    """K(u, v); exactly symmetric in its arguments."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatchError(f"kernel arguments differ: {u.shape} vs {v.shape}")
    if spec.family == LINEAR:
        return float(np.dot(u, v))
    if spec.family == RBF:
        diff = u - v
        return float(math.exp(-spec.gamma * float(np.dot(diff, diff))))
    return float(math.tanh(spec.gamma * float(np.dot(u, v)) + spec.coef0))


def gram(spec, A, B=None):
    """Kernel matrix K[i, j] = K(A[i], B[j]) (B defaults to A)."""
    A = np.asarray(A, dtype=np.float64)
    B = A if B is None else np.asarray(B, dtype=np.float64)
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatchError("gram operands have different widths")
    dots = A @ B.T
    if spec.family == LINEAR:
        return dots
    if spec.family == RBF:
        sq = np.maximum((A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :]
                        - 2.0 * dots, 0.0)
        return np.exp(-spec.gamma * sq)
    return np.tanh(spec.gamma * dots + spec.coef0)


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray
    support_labels: np.ndarray
    alphas: np.ndarray
    bias: float
    kernel: KernelSpec
    C: float

    def __post_init__(self):
        a = self.alphas
        if np.any(a < 0) or np.any(a > self.C):
            raise InkparkError("multipliers violate the box constraint")

    def to_json_dict(self):
        return {
            "kernel": {"family": self.kernel.family, "gamma": self.kernel.gamma,
                       "coef0": self.kernel.coef0},
            "C": self.C,
            "bias": self.bias,
            "support_vectors": [[float(v) for v in row] for row in self.support_vectors],
            "support_labels": [int(v) for v in self.support_labels],
            "alphas": [float(v) for v in self.alphas],
        }

    @classmethod
    def from_json_dict(cls, doc):
        k = doc["kernel"]
        return cls(
            support_vectors=np.asarray(doc["support_vectors"], dtype=np.float64),
            support_labels=np.asarray(doc["support_labels"], dtype=np.float64),
            alphas=np.asarray(doc["alphas"], dtype=np.float64),
            bias=float(doc["bias"]),
            kernel=KernelSpec(k["family"], float(k["gamma"]), float(k["coef0"])),
            C=float(doc["C"]),
        )


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_json_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return SvmModel.from_json_dict(json.load(fh))


def train_svm(values, labels, C, spec, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Fit the dual soft-margin classifier."""
    X = np.ascontiguousarray(values, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.float64)
    if X.ndim != 2 or y.shape[0] != X.shape[0]:
        raise DimensionMismatchError("training matrix and labels do not align")
    if not np.isfinite(X).all():
        raise InkparkError("training matrix contains non-finite values")
    classes = np.unique(y)
    if classes.size < 2:
        raise SingleClassError("training data contains a single class")
    if not set(classes.tolist()) <= {-1.0, 1.0}:
        raise InkparkError("labels must be +1/-1")
    if C <= 0:
        raise InkparkError("C must be positive")

    K = gram(spec, X)
    alpha, bias, iterations, converged = backends.smo_solve(K, y, float(C), tol, max_iter)
    if not converged:
        raise ConvergenceError(
            f"SMO did not reach tol={tol} within {max_iter} working-set iterations")
    drift = abs(float(np.dot(alpha, y)))
    if drift > 1e-6:
        raise InkparkError(f"equality constraint drifted to {drift}")

    keep = alpha > _SV_THRESHOLD
    if not keep.any():
        keep = np.ones_like(alpha, dtype=bool)
    return SvmModel(support_vectors=X[keep].copy(), support_labels=y[keep].copy(),
                    alphas=alpha[keep].copy(), bias=float(bias), kernel=spec, C=float(C))


def decision_function(model, rows):
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.shape[1] != model.support_vectors.shape[1]:
        raise DimensionMismatchError(
            f"row has {rows.shape[1]} features, model expects "
            f"{model.support_vectors.shape[1]}")
    Kx = gram(model.kernel, model.support_vectors, rows)
    return (model.alphas * model.support_labels) @ Kx + model.bias


def predict(model, row):
    """(label, decision value); decision 0 maps to +1."""
    decision = float(decision_function(model, row)[0])
    return (1 if decision >= 0.0 else -1), decision


@dataclass(frozen=True)
class SearchSpace:
    c_range: tuple = (0.01, 100.0)
    gamma_range: tuple = (0.01, 100.0)
    kernels: tuple = KERNELS
    budget: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.c_range[0] <= 0 or self.gamma_range[0] <= 0:
            raise InkparkError("search ranges must be positive")
        if self.budget < 1:
            raise InkparkError("search budget must be at least 1")


def make_inner_cv_evaluator(values, labels, seed, folds=5, tol=DEFAULT_TOL,
                            max_iter=DEFAULT_MAX_ITER):
    """Stratified k-fold accuracy of (spec, C) on the given training data.

    Used by hyperparameter search (and, with fixed defaults, by SFFS).
    Folds are seeded once and shared across calls so trials are comparable.
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.shape[0]
    k = min(folds, int(np.sum(labels == 1)), int(np.sum(labels == -1)), n)
    if k < 2:
        raise SingleClassError("inner CV needs at least 2 rows per class")
    fold_ids = stratified_fold_ids(labels, k, seed)
    parts = fold_partitions(fold_ids, k)

    def evaluate(spec, C, feature_idx=None):
        sub = values if feature_idx is None else values[:, list(feature_idx)]
        correct = 0
        for train, test in parts:
            ytr = labels[train]
            if np.unique(ytr).size < 2:
                majority = 1 if np.sum(ytr == 1) >= np.sum(ytr == -1) else -1
                correct += int(np.sum(labels[test] == majority))
                continue
            model = train_svm(sub[train], ytr, C, spec, tol=tol, max_iter=max_iter)
            dec = decision_function(model, sub[test])
            pred = np.where(dec >= 0.0, 1, -1)
            correct += int(np.sum(pred == labels[test]))
        return correct / n

    return evaluate


def hyperparameter_search(values, labels, space, evaluator=None):
    """Seeded random search over (kernel family, C, gamma).

    Returns (best KernelSpec, best C, history); history holds every trial.
    Evaluator failures propagate annotated with the trial index.
    """
    if evaluator is None:
        inner = make_inner_cv_evaluator(values, labels, space.seed)
        evaluator = lambda spec, C: inner(spec, C)  # noqa: E731
    rng = rng_for(space.seed, "hpo")
    log_c = (math.log(space.c_range[0]), math.log(space.c_range[1]))
    log_g = (math.log(space.gamma_range[0]), math.log(space.gamma_range[1]))
    history = []
    best = None
    for trial in range(space.budget):
        family = space.kernels[int(rng.integers(0, len(space.kernels)))]
        C = float(math.exp(rng.uniform(*log_c)))
        gamma = float(math.exp(rng.uniform(*log_g)))
        spec = KernelSpec(family, gamma=gamma, coef0=0.0)
        try:
            score = float(evaluator(spec, C))
        except InkparkError as exc:
            raise type(exc)(f"search trial {trial} failed: {exc}") from exc
        history.append({"trial": trial, "kernel": family, "C": C,
                        "gamma": gamma, "score": score})
        if best is None or score > best[0]:
            best = (score, spec, C)
    return best[1], best[2], history
