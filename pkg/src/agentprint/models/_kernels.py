"""Numba kernels for exact greedy tree growth.

Both kernels grow a binary tree level by level over presorted feature
columns. Candidate thresholds are midpoints between distinct adjacent
values; rows with a missing (NaN) value follow a per-split default
direction learned by evaluating both routings. All loops are sequential,
so results are bit-reproducible and the kernels can run on worker threads
(nogil).

Tree arrays (index = node id):
  feat      split feature, -1 for leaves
  thr       split threshold; non-missing rows with value < thr go left
  miss_left default direction for missing values
  left/right child node ids
"""

from __future__ import annotations

import numpy as np
from numba import njit

_INF = np.inf


@njit(cache=True, nogil=True, inline="always")
def _l1_threshold(g: float, alpha: float) -> float:
    if g > alpha:
        return g - alpha
    if g < -alpha:
        return g + alpha
    return 0.0


@njit(cache=True, nogil=True, inline="always")
def _score(g: float, h: float, lam: float, alpha: float) -> float:
    t = _l1_threshold(g, alpha)
    denom = h + lam
    if denom <= 0.0:
        return 0.0
    return t * t / denom


@njit(cache=True, nogil=True, inline="always")
def _leaf_weight(g: float, h: float, lam: float, alpha: float) -> float:
    denom = h + lam
    if denom <= 0.0:
        return 0.0
    return -_l1_threshold(g, alpha) / denom


@njit(cache=True, nogil=True)
def grow_tree_gbt(
    Xt,  # (F, n) float64
    order,  # (F, n) int32, rows sorted by value, NaNs last
    n_nonmiss,  # (F,) int64
    g,  # (n,) float64
    h,  # (n,) float64
    in_sample,  # (n,) bool
    feat_ids,  # (m,) int64
    max_depth: int,
    lam: float,
    alpha: float,
    gamma: float,
    min_child_weight: float,
    learning_rate: float,
):
    n = g.shape[0]
    max_nodes = 2 * n + 1
    feat = np.full(max_nodes, -1, np.int64)
    thr = np.zeros(max_nodes, np.float64)
    miss_left = np.zeros(max_nodes, np.bool_)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    value = np.zeros(max_nodes, np.float64)

    pos = np.full(n, -1, np.int64)
    root_g = 0.0
    root_h = 0.0
    for i in range(n):
        if in_sample[i]:
            pos[i] = 0
            root_g += g[i]
            root_h += h[i]

    slot = np.full(max_nodes, -1, np.int64)
    level = np.empty(max_nodes, np.int64)
    level[0] = 0
    n_level = 1
    n_nodes = 1
    node_g = np.zeros(max_nodes, np.float64)
    node_h = np.zeros(max_nodes, np.float64)
    node_g[0] = root_g
    node_h[0] = root_h

    depth = 0
    while n_level > 0:
        if depth >= max_depth:
            for s in range(n_level):
                nd = level[s]
                value[nd] = learning_rate * _leaf_weight(node_g[nd], node_h[nd], lam, alpha)
            break

        for s in range(n_level):
            slot[level[s]] = s

        best_gain = np.full(n_level, 0.0, np.float64)
        best_feat = np.full(n_level, -1, np.int64)
        best_thr = np.zeros(n_level, np.float64)
        best_miss_left = np.zeros(n_level, np.bool_)
        parent_score = np.empty(n_level, np.float64)
        for s in range(n_level):
            nd = level[s]
            parent_score[s] = _score(node_g[nd], node_h[nd], lam, alpha)

        nm_g = np.empty(n_level, np.float64)
        nm_h = np.empty(n_level, np.float64)
        pref_g = np.empty(n_level, np.float64)
        pref_h = np.empty(n_level, np.float64)
        prev_v = np.empty(n_level, np.float64)
        seen = np.empty(n_level, np.int64)

        for fi in range(feat_ids.shape[0]):
            f = feat_ids[fi]
            kmax = n_nonmiss[f]
            for s in range(n_level):
                nm_g[s] = 0.0
                nm_h[s] = 0.0
            for k in range(kmax):
                row = order[f, k]
                nd = pos[row]
                if nd < 0:
                    continue
                s = slot[nd]
                if s < 0:
                    continue
                nm_g[s] += g[row]
                nm_h[s] += h[row]

            for s in range(n_level):
                pref_g[s] = 0.0
                pref_h[s] = 0.0
                seen[s] = 0
                prev_v[s] = 0.0

            for k in range(kmax):
                row = order[f, k]
                nd = pos[row]
                if nd < 0:
                    continue
                s = slot[nd]
                if s < 0:
                    continue
                v = Xt[f, row]
                if seen[s] > 0 and v != prev_v[s]:
                    t = 0.5 * (prev_v[s] + v)
                    if not (prev_v[s] < t):  # adjacent floats: keep the partition scanned
                        t = v
                    tot_g = node_g[nd]
                    tot_h = node_h[nd]
                    miss_g = tot_g - nm_g[s]
                    miss_h = tot_h - nm_h[s]
                    # missing -> right
                    gl = pref_g[s]
                    hl = pref_h[s]
                    gr = tot_g - gl
                    hr = tot_h - hl
                    if hl >= min_child_weight and hr >= min_child_weight:
                        gain = 0.5 * (
                            _score(gl, hl, lam, alpha)
                            + _score(gr, hr, lam, alpha)
                            - parent_score[s]
                        ) - gamma
                        if gain > best_gain[s]:
                            best_gain[s] = gain
                            best_feat[s] = f
                            best_thr[s] = t
                            best_miss_left[s] = False
                    # missing -> left (distinct only when missing rows exist)
                    if miss_h != 0.0 or miss_g != 0.0:
                        gl = pref_g[s] + miss_g
                        hl = pref_h[s] + miss_h
                        gr = tot_g - gl
                        hr = tot_h - hl
                        if hl >= min_child_weight and hr >= min_child_weight:
                            gain = 0.5 * (
                                _score(gl, hl, lam, alpha)
                                + _score(gr, hr, lam, alpha)
                                - parent_score[s]
                            ) - gamma
                            if gain > best_gain[s]:
                                best_gain[s] = gain
                                best_feat[s] = f
                                best_thr[s] = t
                                best_miss_left[s] = True
                pref_g[s] += g[row]
                pref_h[s] += h[row]
                prev_v[s] = v
                seen[s] += 1

        # materialize splits / leaves
        next_level = np.empty(max_nodes, np.int64)
        n_next = 0
        for s in range(n_level):
            nd = level[s]
            if best_feat[s] >= 0 and best_gain[s] > 0.0:
                feat[nd] = best_feat[s]
                thr[nd] = best_thr[s]
                miss_left[nd] = best_miss_left[s]
                left[nd] = n_nodes
                right[nd] = n_nodes + 1
                next_level[n_next] = n_nodes
                next_level[n_next + 1] = n_nodes + 1
                n_next += 2
                n_nodes += 2
            else:
                value[nd] = learning_rate * _leaf_weight(node_g[nd], node_h[nd], lam, alpha)

        if n_next == 0:
            break

        for i in range(n):
            nd = pos[i]
            if nd < 0 or feat[nd] < 0:
                continue
            f = feat[nd]
            v = Xt[f, i]
            if np.isnan(v):
                child = left[nd] if miss_left[nd] else right[nd]
            elif v < thr[nd]:
                child = left[nd]
            else:
                child = right[nd]
            pos[i] = child
            node_g[child] += g[i]
            node_h[child] += h[i]

        for s in range(n_level):
            slot[level[s]] = -1
        level[:n_next] = next_level[:n_next]
        n_level = n_next
        depth += 1

    return feat[:n_nodes], thr[:n_nodes], miss_left[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes]


@njit(cache=True, nogil=True)
def tree_leaf_ids(Xt, feat, thr, miss_left, left, right):
    n = Xt.shape[1]
    out = np.empty(n, np.int64)
    for i in range(n):
        nd = 0
        while feat[nd] >= 0:
            v = Xt[feat[nd], i]
            if np.isnan(v):
                nd = left[nd] if miss_left[nd] else right[nd]
            elif v < thr[nd]:
                nd = left[nd]
            else:
                nd = right[nd]
        out[i] = nd
    return out


@njit(cache=True, nogil=True)
def add_tree_scores(Xt, feat, thr, miss_left, left, right, value, out):
    n = Xt.shape[1]
    for i in range(n):
        nd = 0
        while feat[nd] >= 0:
            v = Xt[feat[nd], i]
            if np.isnan(v):
                nd = left[nd] if miss_left[nd] else right[nd]
            elif v < thr[nd]:
                nd = left[nd]
            else:
                nd = right[nd]
        out[i] += value[nd]


@njit(cache=True, nogil=True, inline="always")
def _splitmix64(state: np.uint64) -> np.uint64:
    z = state + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _node_feature_subset(seed: np.uint64, node_id: int, n_features: int, m: int, out):
    """Draw m distinct feature ids for one node (partial Fisher-Yates)."""
    pool = np.empty(n_features, np.int64)
    for i in range(n_features):
        pool[i] = i
    state = _splitmix64(seed ^ (np.uint64(node_id) * np.uint64(0xD1342543DE82EF95)))
    for j in range(m):
        state = _splitmix64(state)
        pick = j + int(state % np.uint64(n_features - j))
        tmp = pool[j]
        pool[j] = pool[pick]
        pool[pick] = tmp
        out[j] = pool[j]


@njit(cache=True, nogil=True)
def grow_tree_gini(
    Xt,  # (F, n) float64
    order,  # (F, n) int32
    n_nonmiss,  # (F,) int64
    labels,  # (n,) int64
    weights,  # (n,) float64 bootstrap multiplicities; 0 = out of bag
    n_classes: int,
    max_features: int,
    max_depth: int,
    min_samples_split: float,
    node_seed: np.uint64,
):
    n = labels.shape[0]
    n_features = Xt.shape[0]
    max_nodes = 2 * n + 1
    feat = np.full(max_nodes, -1, np.int64)
    thr = np.zeros(max_nodes, np.float64)
    miss_left = np.zeros(max_nodes, np.bool_)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    counts = np.zeros((max_nodes, n_classes), np.float64)

    pos = np.full(n, -1, np.int64)
    for i in range(n):
        if weights[i] > 0.0:
            pos[i] = 0
            counts[0, labels[i]] += weights[i]

    slot = np.full(max_nodes, -1, np.int64)
    level = np.empty(max_nodes, np.int64)
    level[0] = 0
    n_level = 1
    n_nodes = 1

    depth = 0
    while n_level > 0:
        if depth >= max_depth:
            break  # remaining nodes stay leaves; counts already set

        for s in range(n_level):
            slot[level[s]] = s

        # per-node candidate features
        node_feats = np.empty((n_level, max_features), np.int64)
        splittable = np.zeros(n_level, np.bool_)
        tot_w = np.zeros(n_level, np.float64)
        tot_sq = np.zeros(n_level, np.float64)
        for s in range(n_level):
            nd = level[s]
            w = 0.0
            sq = 0.0
            for c in range(n_classes):
                w += counts[nd, c]
                sq += counts[nd, c] * counts[nd, c]
            tot_w[s] = w
            tot_sq[s] = sq
            # skip pure nodes and nodes below the split size
            if w >= min_samples_split and sq < w * w - 1e-9:
                splittable[s] = True
                _node_feature_subset(node_seed, nd, n_features, max_features, node_feats[s])

        in_subset = np.zeros((n_level, n_features), np.bool_)
        any_use = np.zeros(n_features, np.bool_)
        for s in range(n_level):
            if splittable[s]:
                for j in range(max_features):
                    in_subset[s, node_feats[s, j]] = True
                    any_use[node_feats[s, j]] = True

        best_dec = np.full(n_level, 1e-12, np.float64)
        best_feat = np.full(n_level, -1, np.int64)
        best_thr = np.zeros(n_level, np.float64)
        best_miss_left = np.zeros(n_level, np.bool_)

        pref = np.zeros((n_level, n_classes), np.float64)
        miss = np.zeros((n_level, n_classes), np.float64)
        miss_w = np.zeros(n_level, np.float64)
        miss_sq = np.zeros(n_level, np.float64)
        nm_w = np.zeros(n_level, np.float64)
        pref_w = np.zeros(n_level, np.float64)
        sq_l = np.zeros(n_level, np.float64)  # prefix^2, missing right
        sq_r = np.zeros(n_level, np.float64)  # (tot-prefix)^2
        sq_lm = np.zeros(n_level, np.float64)  # (prefix+miss)^2
        sq_rm = np.zeros(n_level, np.float64)  # (nonmiss-prefix)^2
        prev_v = np.empty(n_level, np.float64)
        seen = np.empty(n_level, np.int64)

        for f in range(n_features):
            if not any_use[f]:
                continue
            kmax = n_nonmiss[f]
            # pass 1: per-node missing class counts for this feature
            for s in range(n_level):
                if not splittable[s] or not in_subset[s, f]:
                    continue
                nd = level[s]
                for c in range(n_classes):
                    miss[s, c] = counts[nd, c]
                miss_w[s] = tot_w[s]
            for k in range(kmax):
                row = order[f, k]
                nd = pos[row]
                if nd < 0:
                    continue
                s = slot[nd]
                if s < 0 or not splittable[s] or not in_subset[s, f]:
                    continue
                miss[s, labels[row]] -= weights[row]
                miss_w[s] -= weights[row]
            for s in range(n_level):
                if not splittable[s] or not in_subset[s, f]:
                    continue
                sq = 0.0
                for c in range(n_classes):
                    sq += miss[s, c] * miss[s, c]
                miss_sq[s] = sq
                nm_w[s] = tot_w[s] - miss_w[s]
                pref_w[s] = 0.0
                sq_l[s] = 0.0
                sq_r[s] = tot_sq[s]
                sq_lm[s] = miss_sq[s]
                # (nonmiss - prefix)^2 at prefix=0 is sum over nonmiss counts
                sqnm = 0.0
                nd = level[s]
                for c in range(n_classes):
                    d = counts[nd, c] - miss[s, c]
                    sqnm += d * d
                sq_rm[s] = sqnm
                seen[s] = 0
                prev_v[s] = 0.0
                for c in range(n_classes):
                    pref[s, c] = 0.0

            # pass 2: boundary scan
            for k in range(kmax):
                row = order[f, k]
                nd = pos[row]
                if nd < 0:
                    continue
                s = slot[nd]
                if s < 0 or not splittable[s] or not in_subset[s, f]:
                    continue
                v = Xt[f, row]
                if seen[s] > 0 and v != prev_v[s]:
                    t = 0.5 * (prev_v[s] + v)
                    if not (prev_v[s] < t):
                        t = v
                    parent_term = tot_sq[s] / tot_w[s]
                    # missing -> right
                    wl = pref_w[s]
                    wr = tot_w[s] - wl
                    if wl > 0.0 and wr > 0.0:
                        dec = sq_l[s] / wl + sq_r[s] / wr - parent_term
                        if dec > best_dec[s]:
                            best_dec[s] = dec
                            best_feat[s] = f
                            best_thr[s] = t
                            best_miss_left[s] = False
                    # missing -> left
                    if miss_w[s] > 0.0:
                        wl = pref_w[s] + miss_w[s]
                        wr = nm_w[s] - pref_w[s]
                        if wl > 0.0 and wr > 0.0:
                            dec = sq_lm[s] / wl + sq_rm[s] / wr - parent_term
                            if dec > best_dec[s]:
                                best_dec[s] = dec
                                best_feat[s] = f
                                best_thr[s] = t
                                best_miss_left[s] = True
                c = labels[row]
                wt = weights[row]
                nd2 = level[s]
                sq_l[s] += 2.0 * pref[s, c] * wt + wt * wt
                sq_lm[s] += 2.0 * (pref[s, c] + miss[s, c]) * wt + wt * wt
                rc = counts[nd2, c] - pref[s, c]
                sq_r[s] += -2.0 * rc * wt + wt * wt
                rcm = counts[nd2, c] - miss[s, c] - pref[s, c]
                sq_rm[s] += -2.0 * rcm * wt + wt * wt
                pref[s, c] += wt
                pref_w[s] += wt
                prev_v[s] = v
                seen[s] += 1

        next_level = np.empty(max_nodes, np.int64)
        n_next = 0
        for s in range(n_level):
            nd = level[s]
            if best_feat[s] >= 0:
                feat[nd] = best_feat[s]
                thr[nd] = best_thr[s]
                miss_left[nd] = best_miss_left[s]
                left[nd] = n_nodes
                right[nd] = n_nodes + 1
                next_level[n_next] = n_nodes
                next_level[n_next + 1] = n_nodes + 1
                n_next += 2
                n_nodes += 2

        if n_next == 0:
            break

        for i in range(n):
            nd = pos[i]
            if nd < 0 or feat[nd] < 0:
                continue
            f = feat[nd]
            v = Xt[f, i]
            if np.isnan(v):
                child = left[nd] if miss_left[nd] else right[nd]
            elif v < thr[nd]:
                child = left[nd]
            else:
                child = right[nd]
            pos[i] = child
            counts[child, labels[i]] += weights[i]

        for s in range(n_level):
            slot[level[s]] = -1
        level[:n_next] = next_level[:n_next]
        n_level = n_next
        depth += 1

    # leaf class distributions
    dist = np.zeros((n_nodes, n_classes), np.float64)
    for nd in range(n_nodes):
        if feat[nd] >= 0:
            continue
        w = 0.0
        for c in range(n_classes):
            w += counts[nd, c]
        if w > 0.0:
            for c in range(n_classes):
                dist[nd, c] = counts[nd, c] / w
    return feat[:n_nodes], thr[:n_nodes], miss_left[:n_nodes], left[:n_nodes], right[:n_nodes], dist


def presort_columns(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Transpose X and presort each column (NaNs last, stable).

    Returns (Xt, order, n_nonmiss) in the layouts the kernels expect.
    """
    Xt = np.ascontiguousarray(X.T, dtype=np.float64)
    n_features, n = Xt.shape
    order = np.empty((n_features, n), np.int32)
    n_nonmiss = np.empty(n_features, np.int64)
    for f in range(n_features):
        order[f] = np.argsort(Xt[f], kind="stable").astype(np.int32)
        n_nonmiss[f] = n - np.count_nonzero(np.isnan(Xt[f]))
    return Xt, order, n_nonmiss
