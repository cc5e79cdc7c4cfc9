"""Feature selection: Random-Forest Gini ranking (top-k% filter) and
Sequential Floating Forward Selection with a wrapped evaluator.

The forest ranks features by total Gini impurity decrease, averaged over
trees and normalized to sum 1. Rows are put in a canonical order (sorted
by row key, the subject id by default) before any random draw, and
bootstrap multiplicities are drawn per tree from a (seed, tree) sub-stream
over that canonical order, so importances are invariant to the input row
order.

SFFS starts from the empty set, always adds the J-maximizing candidate
(ties break toward the earlier pool position), then floats: it removes
features as long as removal strictly improves J. It terminates at
max_subset_size or when the best candidate addition fails to improve the
best J already recorded for the resulting subset size; the best subset
ever visited wins (ties prefer smaller subsets, then lexicographic order).
"""

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import backends
from .errors import InkparkError, SingleClassError
from .seeding import derive_seed
from .svm import RBF, KernelSpec, make_inner_cv_evaluator


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 200
    max_features: int = 0     # 0 -> ceil(sqrt(M))
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise InkparkError("forest needs at least one tree")


@dataclass(frozen=True)
class ImportanceRanking:
    """(feature name, importance) sorted descending; ties keep the earlier
    column."""

    entries: tuple
    column_order: tuple   # ranked column indices into the input matrix

    def names(self):
        return tuple(name for name, _ in self.entries)


def _default_row_keys(values, labels):
    keys = []
    for r in range(values.shape[0]):
        h = hashlib.sha256()
        h.update(values[r].tobytes())
        h.update(bytes([labels[r] % 251]))
        keys.append(h.hexdigest())
    return keys


def rf_gini_ranking(values, labels, config, feature_names=None, row_keys=None):
    """Rank features by normalized mean Gini impurity decrease."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, M = values.shape
    if n < 4:
        raise InkparkError("forest ranking needs at least 4 rows")
    if np.unique(labels).size < 2:
        raise SingleClassError("forest ranking needs both classes present")
    if feature_names is None:
        feature_names = tuple(f"f{k}" for k in range(M))
    if row_keys is None:
        row_keys = _default_row_keys(values, labels)
    if len(set(row_keys)) != len(row_keys):
        raise InkparkError("row keys must be unique")

    canon = sorted(range(n), key=lambda r: row_keys[r])
    X = np.ascontiguousarray(values[canon])
    y01 = (labels[canon] == 1).astype(np.uint8)
    order = np.argsort(X, axis=0, kind="stable").astype(np.int64)
    max_features = config.max_features or math.ceil(math.sqrt(M))

    total = np.zeros(M)
    for tree in range(config.n_trees):
        rng = np.random.Generator(np.random.PCG64(
            derive_seed(config.seed, "bootstrap", tree)))
        weights = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.int64)
        total += backends.grow_tree(X, y01, order, weights,
                                    derive_seed(config.seed, "tree", tree),
                                    max_features)
    mean = total / config.n_trees
    s = float(mean.sum())
    importances = mean / s if s > 0 else mean

    ranked = sorted(range(M), key=lambda f: (-importances[f], f))
    entries = tuple((feature_names[f], float(importances[f])) for f in ranked)
    return ImportanceRanking(entries=entries, column_order=tuple(ranked))


def top_k_percent(ranking, k_percent):
    """The top ceil(k/100 * M) ranked feature names."""
    if not 0 < k_percent <= 100:
        raise InkparkError("k_percent must be in (0, 100]")
    M = len(ranking.entries)
    count = math.ceil(k_percent / 100.0 * M)
    return ranking.names()[:count]


@dataclass(frozen=True)
class SffsStep:
    action: str      # "add" | "remove"
    feature: object
    j_value: float
    subset_size: int


@dataclass(frozen=True)
class SelectionTrace:
    steps: tuple

    def to_json_lines(self):
        return "\n".join(json.dumps(
            {"action": s.action, "feature": s.feature,
             "j": s.j_value, "size": s.subset_size}, sort_keys=True)
            for s in self.steps)


def sffs(evaluate_j, pool, max_subset_size):
    """Run SFFS over ``pool`` (features in tie-break priority order).

    ``evaluate_j`` maps a tuple of pool members (in pool order) to a score;
    it must be deterministic. Returns (selected tuple, SelectionTrace).
    """
    pool = tuple(pool)
    if not pool:
        raise InkparkError("SFFS needs a non-empty feature pool")
    if max_subset_size < 1:
        raise InkparkError("max_subset_size must be at least 1")
    position = {f: k for k, f in enumerate(pool)}
    cache = {}

    def score(subset):
        key = tuple(sorted(subset, key=position.get))
        if key not in cache:
            cache[key] = float(evaluate_j(key))
        return cache[key]

    current = ()
    current_j = None
    best_for_size = {}
    visited = []   # (j, size, subset) of every state adopted
    steps = []

    def adopt(subset, j, action, feature):
        nonlocal current, current_j
        current = subset
        current_j = j
        size = len(subset)
        if size not in best_for_size or j > best_for_size[size]:
            best_for_size[size] = j
        visited.append((j, size, subset))
        steps.append(SffsStep(action=action, feature=feature, j_value=j,
                              subset_size=size))

    while len(current) < max_subset_size:
        candidates = [f for f in pool if f not in current]
        if not candidates:
            break
        best_add = None
        for f in candidates:
            j = score(current + (f,))
            if best_add is None or j > best_add[0]:
                best_add = (j, f)
        new_size = len(current) + 1
        if new_size in best_for_size and best_add[0] <= best_for_size[new_size]:
            break
        adopt(tuple(sorted(current + (best_add[1],), key=position.get)),
              best_add[0], "add", best_add[1])

        while len(current) >= 2:
            best_rm = None
            for f in current:
                j = score(tuple(x for x in current if x != f))
                if best_rm is None or j > best_rm[0]:
                    best_rm = (j, f)
            if best_rm[0] > current_j:
                adopt(tuple(x for x in current if x != best_rm[1]),
                      best_rm[0], "remove", best_rm[1])
            else:
                break

    if not visited:
        raise InkparkError("SFFS made no progress (empty candidate pool)")
    best = min(visited, key=lambda v: (-v[0], v[1], tuple(position[f] for f in v[2])))
    return best[2], SelectionTrace(steps=tuple(steps))


def make_sffs_evaluator(values, labels, seed, folds=5, C=1.0):
    """The default SFFS criterion: stratified inner-CV accuracy of an RBF
    SVM with C=1 and gamma = 1/|subset|, on (already standardized) data.
    Subsets are tuples of column indices."""
    inner = make_inner_cv_evaluator(values, labels, seed, folds=folds)

    def evaluate(subset):
        spec = KernelSpec(RBF, gamma=1.0 / len(subset))
        return inner(spec, C, feature_idx=subset)

    return evaluate


def sffs_select(values, labels, pool_indices, max_subset_size, seed, folds=5):
    """SFFS over matrix columns with the default inner-CV evaluator."""
    evaluator = make_sffs_evaluator(values, labels, seed, folds=folds)
    return sffs(evaluator, tuple(pool_indices), max_subset_size)
