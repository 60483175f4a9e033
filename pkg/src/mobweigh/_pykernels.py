"""Pure-Python/numpy reference kernels.

Mirrors ``_ckernels.pyx`` operation for operation (same PRNG, same
summation order, same tie-breaking) so both backends grow the same trees
and walk the same SMO path.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

_MASK = (1 << 64) - 1


class SplitMix64:
    """splitmix64; shared with the compiled kernels for cross-backend determinism."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return self.next() % n


def _seq_sum(a: np.ndarray) -> float:
    # left-to-right, matching the compiled loop bit for bit
    return float(np.cumsum(a)[-1]) if a.size else 0.0


def build_tree(X, y, samples, max_depth: int, min_samples_split: int,
               features_per_split: int, seed: int):
    """Grow one regression tree on ``X[samples]``.

    Returns ``(feature, threshold, left, right, value, n_samples)`` arrays
    in preorder; ``feature == -1`` marks a leaf. ``max_depth < 0`` means
    unlimited.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    idx = np.array(samples, dtype=np.int64)
    n_features = X.shape[1]
    rng = SplitMix64(seed)

    cap = max(1, 2 * idx.size - 1)
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    counts = np.zeros(cap, dtype=np.int64)
    perm = np.arange(n_features, dtype=np.int64)

    node_count = 0
    # (start, end, depth, parent, is_left)
    stack = [(0, idx.size, 0, -1, False)]
    while stack:
        start, end, depth, parent, is_left = stack.pop()
        node = node_count
        node_count += 1
        if parent >= 0:
            if is_left:
                left[parent] = node
            else:
                right[parent] = node
        rows = idx[start:end]
        n = end - start
        yn = y[rows]
        y0 = yn[0]
        mean = y0 + _seq_sum(yn - y0) / n
        value[node] = mean
        counts[node] = n
        if n < min_samples_split or depth == max_depth or yn.max() == yn.min():
            continue

        for i in range(n_features - 1, 0, -1):
            j = rng.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]

        best_f, best_thr, best_score = -1, 0.0, -math.inf
        evaluated = 0
        yc_all = yn - mean
        for f in perm:
            if evaluated >= features_per_split:
                break
            xs = X[rows, f]
            if xs.max() == xs.min():
                continue
            evaluated += 1
            order = np.argsort(xs, kind="stable")
            xs = xs[order]
            cs = np.cumsum(yc_all[order])
            total = cs[-1]
            nl = np.arange(1, n, dtype=np.float64)
            sl = cs[:-1]
            score = sl * sl / nl + (total - sl) * (total - sl) / (n - nl)
            valid = xs[:-1] < xs[1:]
            score = np.where(valid, score, -math.inf)
            p = int(np.argmax(score))
            s = score[p]
            if s > best_score or (s == best_score and f < best_f):
                a, b = xs[p], xs[p + 1]
                thr = (a + b) / 2.0
                if not thr < b:
                    thr = a
                best_f, best_thr, best_score = int(f), thr, s
        if best_f < 0:
            continue

        mask = X[rows, best_f] <= best_thr
        n_left = int(mask.sum())
        idx[start:end] = np.concatenate([rows[mask], rows[~mask]])
        feature[node] = best_f
        threshold[node] = best_thr
        stack.append((start + n_left, end, depth + 1, node, False))
        stack.append((start, start + n_left, depth + 1, node, True))

    k = node_count
    return feature[:k], threshold[:k], left[:k], right[:k], value[:k], counts[:k]


def predict_tree(feature, threshold, left, right, value, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = feature[node] >= 0
    while active.any():
        rows = np.nonzero(active)[0]
        cur = node[rows]
        go_left = X[rows, feature[cur]] <= threshold[cur]
        node[rows] = np.where(go_left, left[cur], right[cur])
        active = feature[node] >= 0
    return value[node].copy()


def _bounds(beta, g, C, eps):
    lo = -g - eps
    hi = -g + eps
    free_pos = (beta > 0) & (beta < C)
    free_neg = (beta < 0) & (beta > -C)
    hi = np.where(free_pos, lo, hi)
    lo = np.where(free_neg, hi, lo)
    hi = np.where(beta == C, -g - eps, hi)
    lo = np.where(beta == C, -math.inf, lo)
    lo = np.where(beta == -C, -g + eps, lo)
    hi = np.where(beta == -C, math.inf, hi)
    return lo, hi


def _pair_step(bi, bj, gi, gj, eta, C, eps):
    """Exact minimiser of the pair objective along beta_i += t, beta_j -= t."""
    lo_t = max(-C - bi, bj - C)
    hi_t = min(C - bi, bj + C)
    pts = [lo_t]
    for bp in sorted((-bi, bj)):
        if lo_t < bp < hi_t:
            pts.append(bp)
    pts.append(hi_t)

    def phi(t):
        return 0.5 * eta * t * t + t * (gi - gj) + eps * (abs(bi + t) + abs(bj - t))

    cands = [0.0] + pts
    if eta > 0:
        for a, b in zip(pts, pts[1:]):
            mid = 0.5 * (a + b)
            si = 1.0 if bi + mid > 0 else -1.0
            sj = 1.0 if bj - mid > 0 else -1.0
            t = -(gi - gj + eps * (si - sj)) / eta
            cands.append(min(max(t, a), b))
    best_t, best_v = 0.0, phi(0.0)
    for t in cands:
        v = phi(t)
        if v < best_v:
            best_t, best_v = t, v
    return best_t


def _snap(v, C):
    tiny = 1e-12 * C
    if v > C - tiny:
        return C
    if v < -C + tiny:
        return -C
    if -tiny < v < tiny:
        return 0.0
    return v


def smo_solve(K, y, C: float, eps: float, tol: float, max_iter: int, seed: int):
    """Pairwise coordinate descent on the epsilon-insensitive dual.

    Minimises 1/2 b'Kb + eps*|b|_1 - y'b subject to sum(b) = 0 and
    |b_i| <= C. Returns ``(beta, bias, iterations, converged)``.
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.shape[0]
    beta = np.zeros(n)
    g = -y.copy()
    rng = SplitMix64(seed)
    converged = False
    it = 0
    while it < max_iter:
        lo, hi = _bounds(beta, g, C, eps)
        i = int(np.argmax(lo))
        j = int(np.argmin(hi))
        if lo[i] - hi[j] <= tol:
            converged = True
            break
        it += 1
        t = _pair_step(beta[i], beta[j], g[i], g[j], K[i, i] + K[j, j] - 2.0 * K[i, j], C, eps)
        if t == 0.0 and n > 2:
            j = rng.below(n - 1)
            if j >= i:
                j += 1
            t = _pair_step(beta[i], beta[j], g[i], g[j], K[i, i] + K[j, j] - 2.0 * K[i, j], C, eps)
        if t == 0.0:
            break
        new_i = _snap(beta[i] + t, C)
        new_j = _snap(beta[j] - t, C)
        di = new_i - beta[i]
        dj = new_j - beta[j]
        beta[i] = new_i
        beta[j] = new_j
        g += di * K[i] + dj * K[j]

    lo, hi = _bounds(beta, g, C, eps)
    bias = _bias(g, lo, hi)
    return beta, bias, it, converged


def _bias(g, lo, hi) -> float:
    lo_max = float(np.max(lo))
    hi_min = float(np.min(hi))
    if not math.isfinite(lo_max):
        return hi_min
    if not math.isfinite(hi_min):
        return lo_max
    if lo_max <= hi_min:
        mid = 0.5 * (float(np.max(-g)) + float(np.min(-g)))
        return min(max(mid, lo_max), hi_min)
    return 0.5 * (lo_max + hi_min)
