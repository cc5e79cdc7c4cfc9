"""Seeded stratified fold assignment shared by the CV harnesses and the
inner evaluators of selection and hyperparameter search."""

import numpy as np

from .errors import InkparkError
from .seeding import rng_for


def stratified_fold_ids(labels, k, seed):
    """Fold id (0..k-1) per row; within each class, rows are shuffled by the
    seeded generator and dealt round-robin, so every fold's class ratio is
    within one subject of the global ratio."""
    labels = np.asarray(labels)
    n = labels.shape[0]
    if k < 2:
        raise InkparkError("k-fold needs k >= 2")
    if k > n:
        raise InkparkError(f"cannot split {n} rows into {k} folds")
    rng = rng_for(seed, "folds")
    fold_ids = np.empty(n, dtype=np.int64)
    for cls in (1, -1):
        idx = np.nonzero(labels == cls)[0]
        perm = rng.permutation(idx)
        for pos, row in enumerate(perm):
            fold_ids[row] = pos % k
    return fold_ids


def fold_partitions(fold_ids, k):
    """(train_indices, test_indices) per fold, in fold order."""
    out = []
    for f in range(k):
        test = np.nonzero(fold_ids == f)[0]
        train = np.nonzero(fold_ids != f)[0]
        out.append((train, test))
    return out
