"""Random forest of CART trees (Gini, bootstrap, per-node feature sampling).

All randomness inside a tree comes from a 32-bit xorshift stream seeded per
tree, so the compiled and the NumPy paths grow the same trees. Split quality
is the Gini proxy ``sum_c L_c^2 / N_L + sum_c R_c^2 / N_R`` computed from
integer bootstrap counts and a single division, which keeps tie-breaking
identical across backends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import USE_NUMBA, jit

_MASK32 = 0xFFFFFFFF


@jit
def _rand(state):
    x = state[0]
    x ^= (x << 13) & _MASK32
    x ^= x >> 17
    x ^= (x << 5) & _MASK32
    state[0] = x
    return x


@jit
def _split_feature_loop(X, G, GV, y, w, idx, start, end, node, node_of, f, cnt_tot, n_tot,
                        n_classes, left, order_buf, vals_buf):
    """Best threshold of feature ``f`` for the node ``idx[start:end]``.

    Large nodes are scanned in the forest-wide presorted order ``G[f]``
    filtered by ``node_of``; small nodes are insertion-sorted.
    Returns ``(found, proxy, threshold)``.
    """
    n_s = end - start
    m = X.shape[0]
    for c in range(n_classes):
        left[c] = 0
    sl = 0
    sr = 0
    for c in range(n_classes):
        sr += cnt_tot[c] * cnt_tot[c]
    nl = 0
    found = False
    best_num = -1
    best_den = 1
    best_thr = 0.0
    if n_s <= 24:
        for i in range(n_s):
            r = idx[start + i]
            v = X[r, f]
            j = i - 1
            while j >= 0 and vals_buf[j] > v:
                vals_buf[j + 1] = vals_buf[j]
                order_buf[j + 1] = order_buf[j]
                j -= 1
            vals_buf[j + 1] = v
            order_buf[j + 1] = r
        n_sorted = n_s
    else:
        n_sorted = 0
        for i in range(m):
            r = G[f, i]
            if node_of[r] == node:
                order_buf[n_sorted] = r
                vals_buf[n_sorted] = GV[f, i]
                n_sorted += 1
    for i in range(n_sorted - 1):
        r = order_buf[i]
        c = y[r]
        wt = w[r]
        lo = left[c]
        ro = cnt_tot[c] - lo
        sl += wt * (2 * lo + wt)
        sr += wt * (wt - 2 * ro)
        left[c] = lo + wt
        nl += wt
        a = vals_buf[i]
        b = vals_buf[i + 1]
        if a < b:
            nr = n_tot - nl
            num = sl * nr + sr * nl
            den = nl * nr
            # exact comparison of num/den against the incumbent
            if num * best_den > best_num * den:
                best_num = num
                best_den = den
                thr = (a + b) / 2.0
                if thr >= b:
                    thr = a
                best_thr = thr
                found = True
    if not found:
        return False, -1.0, 0.0
    return True, float(best_num) / float(best_den), best_thr


def _split_feature_numpy(X, G, GV, y, w, idx, start, end, node, node_of, f, cnt_tot, n_tot,
                         n_classes, left, order_buf, vals_buf):
    rows = idx[start:end]
    vals = X[rows, f]
    order = np.argsort(vals, kind="stable")
    vs = vals[order]
    valid = vs[:-1] < vs[1:]
    if not valid.any():
        return False, -1.0, 0.0
    rs = rows[order]
    onehot = np.zeros((rows.shape[0], n_classes), dtype=np.int64)
    onehot[np.arange(rows.shape[0]), y[rs]] = w[rs]
    cum = np.cumsum(onehot, axis=0)[:-1]
    nl = cum.sum(axis=1)
    nr = n_tot - nl
    sl = (cum * cum).sum(axis=1)
    rc = cnt_tot[None, :] - cum
    sr = (rc * rc).sum(axis=1)
    proxy = (sl * nr + sr * nl).astype(np.float64) / (nl * nr).astype(np.float64)
    pos = np.flatnonzero(valid)
    i = pos[int(np.argmax(proxy[pos]))]
    a = vs[i]
    b = vs[i + 1]
    thr = (a + b) / 2.0
    if thr >= b:
        thr = a
    return True, float(proxy[i]), float(thr)


_split_feature = _split_feature_loop if USE_NUMBA else _split_feature_numpy


@jit
def _presort(X):
    k = X.shape[1]
    m = X.shape[0]
    G = np.empty((k, m), dtype=np.int64)
    GV = np.empty((k, m))
    for f in range(k):
        G[f] = np.argsort(X[:, f], kind="mergesort")
        for i in range(m):
            GV[f, i] = X[G[f, i], f]
    return G, GV


@jit
def _grow_tree(X, G, GV, y, w, n_classes, mtry, nodesize, max_depth, state,
               feat, thr, left_child, right_child, value, work):
    """Grow one tree into the preallocated node arrays; returns the node count.

    ``w`` holds integer sample multiplicities (bootstrap counts); rows with
    zero weight are ignored. ``max_depth < 0`` means unlimited. ``G`` is the
    per-feature argsort of ``X`` and ``work`` an int64 scratch of shape (8, m).
    """
    m, k = X.shape
    idx = work[0]
    node_of = work[1]
    order_buf = work[2]
    st_start = work[3]
    st_end = work[4]
    st_node = work[5]
    st_depth = work[6]
    perm = work[7, :k]
    vals_buf = np.empty(m)
    nu = 0
    for i in range(m):
        if w[i] > 0:
            idx[nu] = i
            node_of[i] = 0
            nu += 1
        else:
            node_of[i] = -1
    for j in range(k):
        perm[j] = j
    cnt = np.zeros(n_classes, dtype=np.int64)
    left_buf = np.zeros(n_classes, dtype=np.int64)
    st_start[0] = 0
    st_end[0] = nu
    st_node[0] = 0
    st_depth[0] = 0
    sp = 1
    n_nodes = 1
    while sp > 0:
        sp -= 1
        start = st_start[sp]
        end = st_end[sp]
        node = st_node[sp]
        depth = st_depth[sp]
        for c in range(n_classes):
            cnt[c] = 0
        for i in range(start, end):
            r = idx[i]
            cnt[y[r]] += w[r]
        n_tot = 0
        best_c = 0
        n_present = 0
        for c in range(n_classes):
            n_tot += cnt[c]
            if cnt[c] > cnt[best_c]:
                best_c = c
            if cnt[c] > 0:
                n_present += 1
        value[node] = best_c
        feat[node] = -1
        if n_present <= 1 or n_tot < nodesize or (max_depth >= 0 and depth >= max_depth):
            continue
        # sample features without replacement until mtry non-constant ones were tried
        best = -1.0
        best_f = -1
        best_thr = 0.0
        tried = 0
        for j in range(k):
            jj = j + _rand(state) % (k - j)
            tmp = perm[j]
            perm[j] = perm[jj]
            perm[jj] = tmp
            f = perm[j]
            found, proxy, t = _split_feature(X, G, GV, y, w, idx, start, end, node, node_of, f,
                                             cnt, n_tot, n_classes, left_buf, order_buf, vals_buf)
            if found:
                tried += 1
                if proxy > best:
                    best = proxy
                    best_f = f
                    best_thr = t
                if tried >= mtry:
                    break
        if best_f < 0:
            continue
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        # partition idx[start:end] into <= thr | > thr
        lo = start
        hi = end - 1
        while lo <= hi:
            r = idx[lo]
            if X[r, best_f] <= best_thr:
                node_of[r] = lc
                lo += 1
            else:
                node_of[r] = rc
                idx[lo] = idx[hi]
                idx[hi] = r
                hi -= 1
        feat[node] = best_f
        thr[node] = best_thr
        left_child[node] = lc
        right_child[node] = rc
        st_start[sp] = lo
        st_end[sp] = end
        st_node[sp] = rc
        st_depth[sp] = depth + 1
        sp += 1
        st_start[sp] = start
        st_end[sp] = lo
        st_node[sp] = lc
        st_depth[sp] = depth + 1
        sp += 1
    return n_nodes


@jit
def _draw_weights(m, bootstrap, state, w):
    if bootstrap:
        for i in range(m):
            w[i] = 0
        for _ in range(m):
            w[_rand(state) % m] += 1
    else:
        for i in range(m):
            w[i] = 1


@jit
def _predict_tree_loop(Xq, feat, thr, left_child, right_child, value, out):
    for i in range(Xq.shape[0]):
        node = 0
        while feat[node] >= 0:
            if Xq[i, feat[node]] <= thr[node]:
                node = left_child[node]
            else:
                node = right_child[node]
        out[i] = value[node]


def _predict_tree_numpy(Xq, feat, thr, left_child, right_child, value, out):
    node = np.zeros(Xq.shape[0], dtype=np.int64)
    rows = np.arange(Xq.shape[0])
    active = feat[node] >= 0
    while active.any():
        a = rows[active]
        nd = node[a]
        go_left = Xq[a, feat[nd]] <= thr[nd]
        node[a] = np.where(go_left, left_child[nd], right_child[nd])
        active = feat[node] >= 0
    out[:] = value[node]


_predict_tree = _predict_tree_loop if USE_NUMBA else _predict_tree_numpy


@jit
def _forest_votes(X, y, n_classes, Xq, mtry, nodesize, max_depth, bootstrap, seeds):
    """Grow ``len(seeds)`` trees and return the (n_query, n_classes) vote matrix."""
    m, k = X.shape
    cap = 2 * m + 1
    G, GV = _presort(X)
    work = np.empty((8, max(cap, k)), dtype=np.int64)
    w = np.empty(m, dtype=np.int64)
    feat = np.empty(cap, dtype=np.int64)
    thr = np.empty(cap)
    lc = np.empty(cap, dtype=np.int64)
    rc = np.empty(cap, dtype=np.int64)
    value = np.empty(cap, dtype=np.int64)
    votes = np.zeros((Xq.shape[0], n_classes), dtype=np.int64)
    pred = np.empty(Xq.shape[0], dtype=np.int64)
    state = np.zeros(1, dtype=np.int64)
    for t in range(seeds.shape[0]):
        state[0] = seeds[t]
        _draw_weights(m, bootstrap, state, w)
        _grow_tree(X, G, GV, y, w, n_classes, mtry, nodesize, max_depth, state,
                   feat, thr, lc, rc, value, work)
        _predict_tree(Xq, feat, thr, lc, rc, value, pred)
        for i in range(Xq.shape[0]):
            votes[i, pred[i]] += 1
    return votes


@jit
def _forest_fit(X, y, n_classes, mtry, nodesize, max_depth, bootstrap, seeds):
    ntree = seeds.shape[0]
    m, k = X.shape
    cap = 2 * m + 1
    G, GV = _presort(X)
    work = np.empty((8, max(cap, k)), dtype=np.int64)
    w = np.empty(m, dtype=np.int64)
    feat = np.full((ntree, cap), -1, dtype=np.int64)
    thr = np.zeros((ntree, cap))
    lc = np.zeros((ntree, cap), dtype=np.int64)
    rc = np.zeros((ntree, cap), dtype=np.int64)
    value = np.zeros((ntree, cap), dtype=np.int64)
    n_nodes = np.zeros(ntree, dtype=np.int64)
    state = np.zeros(1, dtype=np.int64)
    for t in range(ntree):
        state[0] = seeds[t]
        _draw_weights(m, bootstrap, state, w)
        n_nodes[t] = _grow_tree(X, G, GV, y, w, n_classes, mtry, nodesize, max_depth, state,
                                feat[t], thr[t], lc[t], rc[t], value[t], work)
    return feat, thr, lc, rc, value, n_nodes


def tree_seeds(seed, ntree: int, stream: int = 0) -> np.ndarray:
    """Nonzero 32-bit xorshift seeds for ``ntree`` trees of one forest."""
    raw = np.random.SeedSequence([int(seed) & _MASK32, int(stream)]).generate_state(ntree, dtype=np.uint32)
    return (raw.astype(np.int64) % _MASK32) + 1


def mtry_sqrt(n_features: int) -> int:
    return max(1, math.isqrt(n_features))


def majority_vote(votes: np.ndarray) -> np.ndarray:
    # argmax returns the first maximum, i.e. the lowest class index on ties
    return np.argmax(votes, axis=1)


class DegenerateTrainingError(ValueError):
    """Training labels contain fewer than two classes."""


@dataclass(frozen=True)
class ForestModel:
    feat: np.ndarray
    thr: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_nodes: np.ndarray
    n_classes: int

    @property
    def ntree(self) -> int:
        return self.feat.shape[0]

    def votes(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        votes = np.zeros((X.shape[0], self.n_classes), dtype=np.int64)
        pred = np.empty(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        for t in range(self.ntree):
            _predict_tree(X, self.feat[t], self.thr[t], self.left[t], self.right[t], self.value[t], pred)
            np.add.at(votes, (rows, pred), 1)
        return votes

    def predict(self, X: np.ndarray) -> np.ndarray:
        return majority_vote(self.votes(X))


def _check_xy(X, y, n_classes):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError("need at least one feature column")
    if X.shape[0] != y.shape[0]:
        raise ValueError("X and y row counts differ")
    if np.unique(y).size < 2:
        raise DegenerateTrainingError("training labels contain a single class")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    return X, y, int(n_classes)


def fit_forest(X, y, *, ntree=100, nodesize=1, seed=0, n_classes=None,
               mtry=None, max_depth=-1, bootstrap=True, stream=0) -> ForestModel:
    X, y, n_classes = _check_xy(X, y, n_classes)
    if mtry is None:
        mtry = mtry_sqrt(X.shape[1])
    seeds = tree_seeds(seed, ntree, stream)
    feat, thr, lc, rc, value, n_nodes = _forest_fit(X, y, n_classes, int(mtry), int(nodesize),
                                                     int(max_depth), bool(bootstrap), seeds)
    return ForestModel(feat, thr, lc, rc, value, n_nodes, n_classes)


def fit_predict(X, y, Xq, *, seeds, nodesize=1, n_classes=None, mtry=None,
                max_depth=-1, bootstrap=True) -> np.ndarray:
    """Grow a forest on (X, y) and return majority-vote predictions for ``Xq``.

    The fused path never stores the trees; it is what cross-validation uses.
    """
    X, y, n_classes = _check_xy(X, y, n_classes)
    Xq = np.ascontiguousarray(Xq, dtype=np.float64)
    if mtry is None:
        mtry = mtry_sqrt(X.shape[1])
    votes = _forest_votes(X, y, n_classes, Xq, int(mtry), int(nodesize), int(max_depth),
                          bool(bootstrap), np.ascontiguousarray(seeds, dtype=np.int64))
    return majority_vote(votes)
