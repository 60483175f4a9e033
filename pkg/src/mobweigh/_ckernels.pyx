# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tree-growing, tree-walking and SMO kernels.

Behaviour matches ``_pykernels`` exactly; see that module for the contract.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, fabs
from libc.stdlib cimport malloc, free, qsort
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

BACKEND = "cython"


cdef inline uint64_t _splitmix(uint64_t* state) noexcept nogil:
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef struct Pair:
    double x
    double y
    int64_t pos


cdef int _cmp_pair(const void* a, const void* b) noexcept nogil:
    cdef const Pair* pa = <const Pair*>a
    cdef const Pair* pb = <const Pair*>b
    if pa.x < pb.x:
        return -1
    if pa.x > pb.x:
        return 1
    # stable: fall back to original position
    if pa.pos < pb.pos:
        return -1
    if pa.pos > pb.pos:
        return 1
    return 0


def build_tree(X, y, samples, int max_depth, int min_samples_split,
               int features_per_split, seed):
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    idx_arr = np.array(samples, dtype=np.int64)
    cdef int64_t[::1] idx = idx_arr
    cdef Py_ssize_t m = idx.shape[0]
    cdef Py_ssize_t n_features = Xv.shape[1]
    cdef uint64_t state = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)

    cdef Py_ssize_t cap = 2 * m - 1 if m > 0 else 1
    feature_arr = np.full(cap, -1, dtype=np.int64)
    threshold_arr = np.zeros(cap)
    left_arr = np.full(cap, -1, dtype=np.int64)
    right_arr = np.full(cap, -1, dtype=np.int64)
    value_arr = np.zeros(cap)
    counts_arr = np.zeros(cap, dtype=np.int64)
    cdef int64_t[::1] feature = feature_arr
    cdef double[::1] threshold = threshold_arr
    cdef int64_t[::1] left = left_arr
    cdef int64_t[::1] right = right_arr
    cdef double[::1] value = value_arr
    cdef int64_t[::1] counts = counts_arr

    cdef int64_t* perm = <int64_t*>malloc(n_features * sizeof(int64_t))
    cdef Pair* pairs = <Pair*>malloc((m if m > 0 else 1) * sizeof(Pair))
    cdef int64_t* tmp = <int64_t*>malloc((m if m > 0 else 1) * sizeof(int64_t))
    # stack of (start, end, depth, parent, is_left)
    cdef int64_t* stack = <int64_t*>malloc(5 * (cap + 1) * sizeof(int64_t))
    if perm == NULL or pairs == NULL or tmp == NULL or stack == NULL:
        free(perm); free(pairs); free(tmp); free(stack)
        raise MemoryError()

    cdef Py_ssize_t sp = 0, node_count = 0, node, start, end, n, depth, parent, k, p, i, j, f, fi
    cdef Py_ssize_t best_f, evaluated, n_left
    cdef int64_t swap
    cdef bint is_left
    cdef double y0, s, mean, ymin, ymax, xmin, xmax, xv, total, sl, sr, nl, score
    cdef double best_thr, best_score, thr, a, b

    for k in range(n_features):
        perm[k] = k

    with nogil:
        stack[0] = 0; stack[1] = m; stack[2] = 0; stack[3] = -1; stack[4] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            start = stack[5 * sp]; end = stack[5 * sp + 1]; depth = stack[5 * sp + 2]
            parent = stack[5 * sp + 3]; is_left = stack[5 * sp + 4]
            node = node_count
            node_count += 1
            if parent >= 0:
                if is_left:
                    left[parent] = node
                else:
                    right[parent] = node
            n = end - start
            y0 = yv[idx[start]]
            s = 0.0
            ymin = y0; ymax = y0
            for k in range(start, end):
                s += yv[idx[k]] - y0
                if yv[idx[k]] < ymin:
                    ymin = yv[idx[k]]
                if yv[idx[k]] > ymax:
                    ymax = yv[idx[k]]
            mean = y0 + s / n
            value[node] = mean
            counts[node] = n
            if n < min_samples_split or depth == max_depth or ymax == ymin:
                continue

            i = n_features - 1
            while i > 0:
                j = <Py_ssize_t>(_splitmix(&state) % <uint64_t>(i + 1))
                swap = perm[i]; perm[i] = perm[j]; perm[j] = swap
                i -= 1

            best_f = -1; best_thr = 0.0; best_score = -INFINITY
            evaluated = 0
            for fi in range(n_features):
                if evaluated >= features_per_split:
                    break
                f = perm[fi]
                xmin = Xv[idx[start], f]; xmax = xmin
                for k in range(start, end):
                    xv = Xv[idx[k], f]
                    if xv < xmin:
                        xmin = xv
                    if xv > xmax:
                        xmax = xv
                if xmax == xmin:
                    continue
                evaluated += 1
                for k in range(n):
                    pairs[k].x = Xv[idx[start + k], f]
                    pairs[k].y = yv[idx[start + k]] - mean
                    pairs[k].pos = k
                qsort(pairs, n, sizeof(Pair), _cmp_pair)
                total = 0.0
                for k in range(n):
                    total += pairs[k].y
                sl = 0.0
                for p in range(n - 1):
                    sl += pairs[p].y
                    if not (pairs[p].x < pairs[p + 1].x):
                        continue
                    nl = <double>(p + 1)
                    sr = total - sl
                    score = sl * sl / nl + sr * sr / (<double>n - nl)
                    if score > best_score or (score == best_score and f < best_f):
                        a = pairs[p].x; b = pairs[p + 1].x
                        thr = (a + b) / 2.0
                        if not thr < b:
                            thr = a
                        best_f = f; best_thr = thr; best_score = score
            if best_f < 0:
                continue

            # stable partition
            n_left = 0
            for k in range(start, end):
                if Xv[idx[k], best_f] <= best_thr:
                    n_left += 1
            j = 0
            p = 0
            for k in range(start, end):
                if Xv[idx[k], best_f] <= best_thr:
                    tmp[j] = idx[k]
                    j += 1
                else:
                    tmp[n_left + p] = idx[k]
                    p += 1
            for k in range(n):
                idx[start + k] = tmp[k]
            feature[node] = best_f
            threshold[node] = best_thr
            stack[5 * sp] = start + n_left; stack[5 * sp + 1] = end; stack[5 * sp + 2] = depth + 1
            stack[5 * sp + 3] = node; stack[5 * sp + 4] = 0
            sp += 1
            stack[5 * sp] = start; stack[5 * sp + 1] = start + n_left; stack[5 * sp + 2] = depth + 1
            stack[5 * sp + 3] = node; stack[5 * sp + 4] = 1
            sp += 1

    free(perm); free(pairs); free(tmp); free(stack)
    k = node_count
    return (feature_arr[:k].copy(), threshold_arr[:k].copy(), left_arr[:k].copy(),
            right_arr[:k].copy(), value_arr[:k].copy(), counts_arr[:k].copy())


def predict_tree(feature, threshold, left, right, value, X):
    cdef int64_t[::1] fv = np.ascontiguousarray(feature, dtype=np.int64)
    cdef double[::1] tv = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef int64_t[::1] lv = np.ascontiguousarray(left, dtype=np.int64)
    cdef int64_t[::1] rv = np.ascontiguousarray(right, dtype=np.int64)
    cdef double[::1] vv = np.ascontiguousarray(value, dtype=np.float64)
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], r
    cdef int64_t node
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    with nogil:
        for r in range(n):
            node = 0
            while fv[node] >= 0:
                if Xv[r, fv[node]] <= tv[node]:
                    node = lv[node]
                else:
                    node = rv[node]
            out[r] = vv[node]
    return out_arr


cdef inline void _bound(double beta, double g, double C, double eps,
                        double* lo, double* hi) noexcept nogil:
    lo[0] = -g - eps
    hi[0] = -g + eps
    if beta > 0 and beta < C:
        hi[0] = lo[0]
    elif beta < 0 and beta > -C:
        lo[0] = hi[0]
    if beta == C:
        hi[0] = -g - eps
        lo[0] = -INFINITY
    elif beta == -C:
        lo[0] = -g + eps
        hi[0] = INFINITY


cdef inline double _phi(double t, double bi, double bj, double gi, double gj,
                        double eta, double eps) noexcept nogil:
    return 0.5 * eta * t * t + t * (gi - gj) + eps * (fabs(bi + t) + fabs(bj - t))


cdef double _pair_step(double bi, double bj, double gi, double gj, double eta,
                       double C, double eps) noexcept nogil:
    cdef double lo_t = -C - bi
    cdef double hi_t = C - bi
    if bj - C > lo_t:
        lo_t = bj - C
    if bj + C < hi_t:
        hi_t = bj + C
    cdef double pts[4]
    cdef int npts = 0, q
    cdef double b1 = -bi, b2 = bj, swap
    if b2 < b1:
        swap = b1; b1 = b2; b2 = swap
    pts[npts] = lo_t; npts += 1
    if lo_t < b1 and b1 < hi_t:
        pts[npts] = b1; npts += 1
    if lo_t < b2 and b2 < hi_t:
        pts[npts] = b2; npts += 1
    pts[npts] = hi_t; npts += 1

    cdef double best_t = 0.0
    cdef double best_v = _phi(0.0, bi, bj, gi, gj, eta, eps)
    cdef double v, t, a, b, mid, si, sj
    for q in range(npts):
        v = _phi(pts[q], bi, bj, gi, gj, eta, eps)
        if v < best_v:
            best_t = pts[q]; best_v = v
    if eta > 0:
        for q in range(npts - 1):
            a = pts[q]; b = pts[q + 1]
            mid = 0.5 * (a + b)
            si = 1.0 if bi + mid > 0 else -1.0
            sj = 1.0 if bj - mid > 0 else -1.0
            t = -(gi - gj + eps * (si - sj)) / eta
            if t < a:
                t = a
            if t > b:
                t = b
            v = _phi(t, bi, bj, gi, gj, eta, eps)
            if v < best_v:
                best_t = t; best_v = v
    return best_t


cdef inline double _snap(double v, double C) noexcept nogil:
    cdef double tiny = 1e-12 * C
    if v > C - tiny:
        return C
    if v < -C + tiny:
        return -C
    if -tiny < v and v < tiny:
        return 0.0
    return v


def smo_solve(K, y, double C, double eps, double tol, long max_iter, seed):
    cdef double[:, ::1] Kv = np.ascontiguousarray(K, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0], k, i, j
    beta_arr = np.zeros(n)
    g_arr = -np.asarray(yv).copy()
    cdef double[::1] beta = beta_arr
    cdef double[::1] g = g_arr
    cdef uint64_t state = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef bint converged = False
    cdef long it = 0
    cdef double lo, hi, lo_max, hi_min, t, new_i, new_j, di, dj, gmax, gmin, mid
    with nogil:
        while it < max_iter:
            i = 0; j = 0
            lo_max = -INFINITY; hi_min = INFINITY
            for k in range(n):
                _bound(beta[k], g[k], C, eps, &lo, &hi)
                if lo > lo_max:
                    lo_max = lo; i = k
                if hi < hi_min:
                    hi_min = hi; j = k
            if lo_max - hi_min <= tol:
                converged = True
                break
            it += 1
            t = _pair_step(beta[i], beta[j], g[i], g[j], Kv[i, i] + Kv[j, j] - 2.0 * Kv[i, j], C, eps)
            if t == 0.0 and n > 2:
                j = <Py_ssize_t>(_splitmix(&state) % <uint64_t>(n - 1))
                if j >= i:
                    j += 1
                t = _pair_step(beta[i], beta[j], g[i], g[j], Kv[i, i] + Kv[j, j] - 2.0 * Kv[i, j], C, eps)
            if t == 0.0:
                break
            new_i = _snap(beta[i] + t, C)
            new_j = _snap(beta[j] - t, C)
            di = new_i - beta[i]
            dj = new_j - beta[j]
            beta[i] = new_i
            beta[j] = new_j
            for k in range(n):
                g[k] += di * Kv[i, k] + dj * Kv[j, k]

        lo_max = -INFINITY; hi_min = INFINITY
        gmax = -INFINITY; gmin = INFINITY
        for k in range(n):
            _bound(beta[k], g[k], C, eps, &lo, &hi)
            if lo > lo_max:
                lo_max = lo
            if hi < hi_min:
                hi_min = hi
            if -g[k] > gmax:
                gmax = -g[k]
            if -g[k] < gmin:
                gmin = -g[k]
    if lo_max == -INFINITY:
        bias = hi_min
    elif hi_min == INFINITY:
        bias = lo_max
    elif lo_max <= hi_min:
        mid = 0.5 * (gmax + gmin)
        bias = min(max(mid, lo_max), hi_min)
    else:
        bias = 0.5 * (lo_max + hi_min)
    return beta_arr, float(bias), int(it), bool(converged)
