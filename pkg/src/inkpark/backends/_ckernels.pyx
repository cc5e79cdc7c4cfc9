# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot kernels in ``_pykernels``.

The arithmetic here mirrors the NumPy fallback expression for expression
(same operation order, same tie-breaking, same integer RNG) so that both
backends produce bit-identical results. Keep in sync with _pykernels.py.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

DEF ETA_FLOOR = 1e-12


cdef inline unsigned long long _sm64(unsigned long long state) nogil:
    cdef unsigned long long z = state + 0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def smo_solve(K, y, double C, double tol, long max_iter):
    """Compiled maximal-violating-pair SMO; see _pykernels.smo_solve."""
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = K.shape[0]
    alpha_arr = np.zeros(n)
    E_arr = -np.asarray(y)

    cdef double[:, ::1] Km = K
    cdef double[::1] ym = y
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] E = np.ascontiguousarray(E_arr)

    cdef double[::1] diagK = np.ascontiguousarray(np.diag(K))

    cdef long iterations = 0
    cdef bint converged = False
    cdef Py_ssize_t i, j, t
    cdef double bestu, bestl, gap, eta, aj_new, ai_new, L, H, d_i, d_j, a
    cdef double b_i_scale, b_j_scale, bias, viol, quad, score, best_score
    cdef bint in_low
    cdef double snap = 1e-12 * C

    with nogil:
        while iterations < max_iter:
            bestu = INFINITY
            bestl = -INFINITY
            i = -1
            for t in range(n):
                a = alpha[t]
                if ym[t] > 0.0:
                    if a < C and E[t] < bestu:
                        bestu = E[t]
                        i = t
                    if a > 0.0 and E[t] > bestl:
                        bestl = E[t]
                else:
                    if a > 0.0 and E[t] < bestu:
                        bestu = E[t]
                        i = t
                    if a < C and E[t] > bestl:
                        bestl = E[t]
            gap = bestl - bestu
            if gap < tol:
                converged = True
                break
            iterations += 1

            # second-order choice of j (see _pykernels.smo_solve)
            j = -1
            best_score = -INFINITY
            for t in range(n):
                a = alpha[t]
                if ym[t] > 0.0:
                    in_low = a > 0.0
                else:
                    in_low = a < C
                if not in_low:
                    continue
                viol = E[t] - E[i]
                if viol > 0.0:
                    quad = diagK[i] + diagK[t] - 2.0 * Km[i, t]
                    if quad <= 0.0:
                        quad = ETA_FLOOR
                    score = (viol * viol) / quad
                    if score > best_score:
                        best_score = score
                        j = t

            eta = Km[i, i] + Km[j, j] - 2.0 * Km[i, j]
            if eta <= 0.0:
                eta = ETA_FLOOR
            aj_new = alpha[j] + ym[j] * (E[i] - E[j]) / eta
            if ym[i] != ym[j]:
                L = alpha[j] - alpha[i]
                if L < 0.0:
                    L = 0.0
                H = C + alpha[j] - alpha[i]
                if H > C:
                    H = C
            else:
                L = alpha[i] + alpha[j] - C
                if L < 0.0:
                    L = 0.0
                H = alpha[i] + alpha[j]
                if H > C:
                    H = C
            if aj_new < L:
                aj_new = L
            elif aj_new > H:
                aj_new = H
            # snap near-bound multipliers so exhausted dust leaves the
            # working sets; deltas recomputed from snapped values to keep
            # the error cache consistent with alpha
            if aj_new < snap:
                aj_new = 0.0
            elif aj_new > C - snap:
                aj_new = C
            d_j = aj_new - alpha[j]
            ai_new = alpha[i] + (-ym[i] * ym[j] * d_j)
            if ai_new < snap:
                ai_new = 0.0
            elif ai_new > C - snap:
                ai_new = C
            d_i = ai_new - alpha[i]
            alpha[i] = ai_new
            alpha[j] = aj_new
            b_i_scale = d_i * ym[i]
            b_j_scale = d_j * ym[j]
            for t in range(n):
                E[t] = E[t] + (b_i_scale * Km[i, t] + b_j_scale * Km[j, t])

        bias = _bias_from_errors(alpha, ym, E, C, n)

    return alpha_arr, bias, iterations, converged


cdef double _bias_from_errors(double[::1] alpha, double[::1] y,
                              double[::1] E, double C, Py_ssize_t n) nogil:
    cdef double total = 0.0
    cdef long count = 0
    cdef Py_ssize_t t
    cdef double lo = -INFINITY
    cdef double hi = INFINITY
    cdef bint in_up, in_low
    for t in range(n):
        if 0.0 < alpha[t] < C:
            total = total + (-E[t])
            count += 1
    if count > 0:
        return total / count
    for t in range(n):
        in_up = (y[t] > 0.0 and alpha[t] < C) or (y[t] < 0.0 and alpha[t] > 0.0)
        in_low = (y[t] < 0.0 and alpha[t] < C) or (y[t] > 0.0 and alpha[t] > 0.0)
        if in_up and -E[t] > lo:
            lo = -E[t]
        if in_low and -E[t] < hi:
            hi = -E[t]
    if lo == -INFINITY and hi == INFINITY:
        return 0.0
    if lo == -INFINITY:
        return hi
    if hi == INFINITY:
        return lo
    return (lo + hi) / 2.0


def grow_tree(X, y, order, weights, tree_seed, long max_features):
    """Compiled weighted CART grower; see _pykernels.grow_tree."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t M = X.shape[1]
    cdef long k = max_features if max_features < <long>M else <long>M

    decreases_arr = np.zeros(M)
    cdef double[::1] decreases = decreases_arr
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef unsigned char[::1] lab = np.ascontiguousarray(y, dtype=np.uint8)
    cdef long long[:, ::1] ordv = np.ascontiguousarray(order, dtype=np.int64)
    cdef long long[::1] w = np.ascontiguousarray(weights, dtype=np.int64)

    rows_arr = np.nonzero(np.asarray(weights) > 0)[0].astype(np.int64)
    cdef Py_ssize_t n_root = rows_arr.shape[0]
    cdef long long[::1] rows = rows_arr
    cdef long long[::1] temp = np.empty(max(n_root, 1), dtype=np.int64)
    cdef unsigned char[::1] in_node = np.zeros(n, dtype=np.uint8)
    # each split pushes two ranges; depth bounded by the leaf count
    cdef long long[:, ::1] stack = np.empty((2 * n_root + 4, 2), dtype=np.int64)
    cdef long long[::1] chosen = np.empty(max(k, 1), dtype=np.int64)
    cdef unsigned long long seed = <unsigned long long>(int(tree_seed) & 0xFFFFFFFFFFFFFFFF)

    if n_root > 0:
        with nogil:
            _grow(Xv, lab, ordv, w, rows, temp, in_node, stack, chosen,
                  decreases, seed, k, n, M, n_root)
    return decreases_arr


cdef void _grow(double[:, ::1] X, unsigned char[::1] lab, long long[:, ::1] order,
                long long[::1] w, long long[::1] rows, long long[::1] temp,
                unsigned char[::1] in_node, long long[:, ::1] stack,
                long long[::1] chosen, double[::1] decreases,
                unsigned long long tree_seed, long k, Py_ssize_t n,
                Py_ssize_t M, Py_ssize_t n_root) nogil:
    cdef Py_ssize_t sp = 0
    cdef unsigned long long node_counter = 0, state, draw
    cdef Py_ssize_t start, end, t, r, ci, f, idx
    cdef long long m, n1, n0, nl, nl1, nl0, nr, nr1, nr0, cumw, cum1, j, tt, m_seen
    cdef double node_imp_x_n, child, best_child, dec, best_dec, v, prev_v
    cdef Py_ssize_t best_feat, best_s, cur_s
    cdef long n_chosen
    cdef bint already

    stack[0, 0] = 0
    stack[0, 1] = n_root
    sp = 1
    while sp > 0:
        sp -= 1
        start = stack[sp, 0]
        end = stack[sp, 1]
        state = _sm64(tree_seed)
        state = _sm64(state ^ node_counter)
        node_counter += 1
        m = 0
        n1 = 0
        for t in range(start, end):
            m += w[rows[t]]
            n1 += w[rows[t]] * lab[rows[t]]
        if n1 == 0 or n1 == m or m < 2:
            continue
        n0 = m - n1
        node_imp_x_n = <double>m - <double>(n1 * n1 + n0 * n0) / <double>m

        # Floyd's sample of k distinct features, then ascending sort
        n_chosen = 0
        for j in range(M - k, M):
            state = _sm64(state)
            draw = state % <unsigned long long>(j + 1)
            already = False
            for tt in range(n_chosen):
                if chosen[tt] == <long long>draw:
                    already = True
                    break
            if already:
                chosen[n_chosen] = j
            else:
                chosen[n_chosen] = <long long>draw
            n_chosen += 1
        for tt in range(1, n_chosen):
            j = chosen[tt]
            idx = tt
            while idx > 0 and chosen[idx - 1] > j:
                chosen[idx] = chosen[idx - 1]
                idx -= 1
            chosen[idx] = j

        for t in range(start, end):
            in_node[rows[t]] = 1

        best_dec = 0.0
        best_feat = -1
        best_s = -1
        for ci in range(n_chosen):
            f = <Py_ssize_t>chosen[ci]
            m_seen = 0
            cumw = 0
            cum1 = 0
            prev_v = 0.0
            best_child = INFINITY
            cur_s = -1
            for t in range(n):
                r = <Py_ssize_t>order[t, f]
                if not in_node[r]:
                    continue
                v = X[r, f]
                if m_seen > 0 and v != prev_v:
                    nl = cumw
                    nl1 = cum1
                    nl0 = nl - nl1
                    nr = m - nl
                    nr1 = n1 - nl1
                    nr0 = nr - nr1
                    child = (<double>nl - <double>(nl1 * nl1 + nl0 * nl0) / <double>nl) \
                        + (<double>nr - <double>(nr1 * nr1 + nr0 * nr0) / <double>nr)
                    if child < best_child:
                        best_child = child
                        cur_s = <Py_ssize_t>m_seen
                prev_v = v
                cumw += w[r]
                cum1 += w[r] * lab[r]
                m_seen += 1
            if cur_s < 0:
                continue
            dec = node_imp_x_n - best_child
            if dec > best_dec:
                best_dec = dec
                best_feat = f
                best_s = cur_s

        for t in range(start, end):
            in_node[rows[t]] = 0

        if best_feat < 0:
            continue
        decreases[best_feat] += best_dec

        # re-walk the winning feature's order to realize the partition
        for t in range(start, end):
            in_node[rows[t]] = 1
        m_seen = 0
        for t in range(n):
            r = <Py_ssize_t>order[t, best_feat]
            if in_node[r]:
                temp[m_seen] = r
                m_seen += 1
        for t in range(start, end):
            in_node[rows[t]] = 0
        for t in range(end - start):
            rows[start + t] = temp[t]

        stack[sp, 0] = start + best_s
        stack[sp, 1] = end
        sp += 1
        stack[sp, 0] = start
        stack[sp, 1] = start + best_s
        sp += 1
