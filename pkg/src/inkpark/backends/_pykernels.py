"""Pure NumPy implementations of the two hot kernels.

These are the fallback for environments without the compiled extension.
The compiled twin (`_ckernels.pyx`) mirrors the arithmetic of this module
operation for operation — same expression trees, same tie-breaking, same
integer RNG — so both backends produce bit-identical multipliers, biases
and impurity decreases. Keep the two files in sync when editing either.
"""

import numpy as np

from ..seeding import MASK64, _splitmix64, derive_seed

_ETA_FLOOR = 1e-12


def smo_solve(K, y, C, tol, max_iter):
    """Solve the soft-margin dual by second-order pairwise working-set
    updates: i is the most violating index in the "up" set, j the "low"
    candidate with the largest guaranteed objective decrease.

    Parameters
    ----------
    K : (n, n) float64 kernel matrix
    y : (n,) float64 labels in {-1.0, +1.0}
    C : box constraint
    tol : KKT gap tolerance
    max_iter : working-set iteration budget

    Returns
    -------
    (alpha, bias, iterations, converged)
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = K.shape[0]
    alpha = np.zeros(n)
    # E[t] = decision(x_t) - y_t, maintained incrementally from alpha = 0.
    E = -y.copy()
    pos = y > 0.0
    snap = 1e-12 * C
    diagK = np.ascontiguousarray(np.diag(K))

    iterations = 0
    converged = False
    while iterations < max_iter:
        at_upper = alpha < C
        at_lower = alpha > 0.0
        up = (pos & at_upper) | (~pos & at_lower)
        low = (~pos & at_upper) | (pos & at_lower)

        Eu = np.where(up, E, np.inf)
        El = np.where(low, E, -np.inf)
        i = int(np.argmin(Eu))
        gap = El[int(np.argmax(El))] - Eu[i]
        if gap < tol:
            converged = True
            break
        iterations += 1

        # second-order choice of j: maximize violation^2 / curvature over
        # low-set members that actually violate against i
        viol = E - E[i]
        quad = diagK[i] + diagK - 2.0 * K[i]
        quad = np.where(quad > 0.0, quad, _ETA_FLOOR)
        score = np.where(low & (viol > 0.0), (viol * viol) / quad, -np.inf)
        j = int(np.argmax(score))

        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta <= 0.0:
            eta = _ETA_FLOOR
        aj_new = alpha[j] + y[j] * (E[i] - E[j]) / eta
        if y[i] != y[j]:
            L = max(0.0, alpha[j] - alpha[i])
            H = min(C, C + alpha[j] - alpha[i])
        else:
            L = max(0.0, alpha[i] + alpha[j] - C)
            H = min(C, alpha[i] + alpha[j])
        if aj_new < L:
            aj_new = L
        elif aj_new > H:
            aj_new = H
        # snap near-bound multipliers so exhausted dust leaves the working
        # sets; deltas are recomputed from the snapped values to keep the
        # error cache consistent with alpha
        if aj_new < snap:
            aj_new = 0.0
        elif aj_new > C - snap:
            aj_new = C
        d_j = aj_new - alpha[j]
        ai_new = alpha[i] + (-y[i] * y[j] * d_j)
        if ai_new < snap:
            ai_new = 0.0
        elif ai_new > C - snap:
            ai_new = C
        d_i = ai_new - alpha[i]
        alpha[i] = ai_new
        alpha[j] = aj_new
        E += (d_i * y[i]) * K[i] + (d_j * y[j]) * K[j]

    bias = _bias_from_errors(alpha, y, E, C)
    return alpha, bias, iterations, converged


def _bias_from_errors(alpha, y, E, C):
    # Free support vectors pin the bias exactly; otherwise use the midpoint
    # of the feasible interval given by the bound constraints.
    total = 0.0
    count = 0
    n = alpha.shape[0]
    for t in range(n):
        if 0.0 < alpha[t] < C:
            total = total + (-E[t])
            count += 1
    if count > 0:
        return total / count
    lo = -np.inf  # max over "up" set of -E
    hi = np.inf   # min over "low" set of -E
    for t in range(n):
        in_up = (y[t] > 0.0 and alpha[t] < C) or (y[t] < 0.0 and alpha[t] > 0.0)
        in_low = (y[t] < 0.0 and alpha[t] < C) or (y[t] > 0.0 and alpha[t] > 0.0)
        if in_up and -E[t] > lo:
            lo = -E[t]
        if in_low and -E[t] < hi:
            hi = -E[t]
    if not np.isfinite(lo) and not np.isfinite(hi):
        return 0.0
    if not np.isfinite(lo):
        return hi
    if not np.isfinite(hi):
        return lo
    return (lo + hi) / 2.0


def _draw_candidates(state, n_features, k):
    """Floyd's sample of k distinct feature indices, sorted ascending.

    ``state`` is a splitmix64 stream state; returns (candidates, new_state).
    """
    chosen = []
    for j in range(n_features - k, n_features):
        state = _splitmix64(state)
        t = state % (j + 1)
        if t in chosen:
            chosen.append(j)
        else:
            chosen.append(t)
    chosen.sort()
    return chosen, state


def grow_tree(X, y, order, weights, tree_seed, max_features):
    """Grow one CART tree on a weighted bootstrap; return per-feature Gini
    impurity decreases (weighted-count scale, summed over the tree's splits).

    Parameters
    ----------
    X : (n, M) float64, canonical rows
    y : (n,) uint8 class labels in {0, 1}
    order : (n, M) int64, per-column argsort of X (shared across trees and
        backends so tie ordering is identical)
    weights : (n,) int64 bootstrap multiplicities; zero-weight rows are out
        of bag. Weighting is exactly equivalent to duplicating rows because
        duplicates carry equal values and splits fall between distinct
        values only.
    tree_seed : int, per-tree RNG seed
    max_features : candidate features drawn per node

    Nodes split on the best Gini-decrease candidate (ties: lowest feature
    index, then smallest split position); a node becomes a leaf when pure
    or when no drawn candidate yields a positive decrease.
    """
    n, M = X.shape
    k = max_features if max_features < M else M
    decreases = np.zeros(M)
    in_node = np.zeros(n, dtype=bool)
    yw = weights * y.astype(np.int64)
    node_counter = 0
    stack = [np.nonzero(weights > 0)[0].astype(np.int64)]
    while stack:
        idx = stack.pop()
        my_counter = node_counter
        node_counter += 1
        m = int(weights[idx].sum())
        n1 = int(yw[idx].sum())
        if n1 == 0 or n1 == m or m < 2:
            continue
        n0 = m - n1
        node_imp_x_n = m - (n1 * n1 + n0 * n0) / m

        cands, _ = _draw_candidates(derive_seed(tree_seed, my_counter), M, k)

        in_node[idx] = True
        best_dec = 0.0
        best_feat = -1
        best_split = -1
        best_members = None
        for f in cands:
            col_order = order[:, f]
            members = col_order[in_node[col_order]]
            mm = members.shape[0]
            if mm < 2:
                continue
            vs = X[members, f]
            cumw = np.cumsum(weights[members])
            cum1 = np.cumsum(yw[members])
            nl = cumw[: mm - 1]
            nl1 = cum1[: mm - 1]
            nl0 = nl - nl1
            nr = m - nl
            nr1 = n1 - nl1
            nr0 = nr - nr1
            child = (nl - (nl1 * nl1 + nl0 * nl0) / nl) + (nr - (nr1 * nr1 + nr0 * nr0) / nr)
            valid = vs[1:] != vs[: mm - 1]
            if not valid.any():
                continue
            child = np.where(valid, child, np.inf)
            s = int(np.argmin(child))
            dec = node_imp_x_n - child[s]
            if dec > best_dec:
                best_dec = dec
                best_feat = f
                best_split = s + 1
                best_members = members
        in_node[idx] = False

        if best_feat < 0:
            continue
        decreases[best_feat] += best_dec
        left = best_members[:best_split]
        right = best_members[best_split:]
        stack.append(right)
        stack.append(left)
    return decreases
