"""Numba kernels for histogram-based regression tree ensembles.

Predictors are pre-binned into uint8 codes laid out feature-major
(shape (p, n)) so split search reduces to per-bin count/sum scans.
Split quality is the usual SSE reduction written as
sum_l^2/n_l + sum_r^2/n_r - sum^2/n. All tie-breaking is deterministic
(lowest feature, then lowest bin), randomness comes from an explicit
splitmix64 stream, and whole ensembles are fit inside one kernel call
so the Python layer never loops over trees.

Forests are stored flat: per-node arrays plus per-tree offsets.
"""

import numpy as np
from numba import njit

MAX_TREE_DEPTH = 64  # effectively unlimited for weekly-panel fit sizes


@njit(cache=True, inline="always")
def _mix64(state):
    state = (state + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = state
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True)
def _grow_tree(
    Xb, y, idx, lo0, hi0,
    max_depth, max_leaves, min_leaf, mtry, n_bins, state,
    feature, thr, left, right, value, node_base,
    node_lo, node_hi, node_depth, node_gain, node_sf, node_sb, open_leaf,
    tbl, buf, feats, pool, pred, use_pred,
):
    """Grow one tree over idx[lo0:hi0) into the flat arrays at node_base.

    Depth-wise when max_leaves <= 0 (expand every splittable node, FIFO),
    best-first otherwise (expand the highest-gain leaf until the budget).
    When use_pred, leaf values are added into pred for the training rows
    (used by the boosting driver). Returns (n_nodes, new_rng_state).
    """
    p = Xb.shape[0]
    best_first = max_leaves > 0

    # root bounds/candidate were prepared by _root_candidate
    node_lo[0] = lo0
    node_hi[0] = hi0
    node_depth[0] = 0
    open_leaf[0] = 1
    n_nodes = 1
    n_leaves = 1

    # queue processing: depth-wise uses FIFO order; best-first picks max gain
    head = 0
    while True:
        if best_first:
            if n_leaves >= max_leaves:
                break
            nid = -1
            bg = 1e-12
            for j in range(n_nodes):
                if open_leaf[j] == 1 and node_gain[j] > bg:
                    bg = node_gain[j]
                    nid = j
            if nid < 0:
                break
        else:
            if head >= n_nodes:
                break
            nid = head
            head += 1
            if open_leaf[nid] != 1 or node_gain[nid] <= 1e-12:
                continue

        lo = node_lo[nid]
        hi = node_hi[nid]
        f = node_sf[nid]
        b = node_sb[nid]
        # partition idx[lo:hi) stably on bin <= b
        row = Xb[f]
        nl = 0
        for k in range(lo, hi):
            if row[idx[k]] <= b:
                buf[lo + nl] = idx[k]
                nl += 1
        nr = 0
        for k in range(lo, hi):
            if row[idx[k]] > b:
                buf[lo + nl + nr] = idx[k]
                nr += 1
        for k in range(lo, hi):
            idx[k] = buf[k]
        mid = lo + nl

        gid = node_base + nid
        feature[gid] = np.int32(f)
        thr[gid] = np.int32(b)
        left[gid] = np.int32(node_base + n_nodes)
        right[gid] = np.int32(node_base + n_nodes + 1)
        open_leaf[nid] = 0
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        n_leaves += 1

        for c in range(2):
            child = lc if c == 0 else rc
            clo = lo if c == 0 else mid
            chi = mid if c == 0 else hi
            node_lo[child] = clo
            node_hi[child] = chi
            node_depth[child] = node_depth[nid] + 1
            open_leaf[child] = 1
            cn = chi - clo
            cs = 0.0
            for k in range(clo, chi):
                cs += y[idx[k]]
            value[node_base + child] = cs / cn
            node_gain[child] = -1.0
            if cn >= 2 * min_leaf and node_depth[child] < max_depth:
                state = _candidate_split(
                    Xb, y, idx, clo, chi, cn, cs, min_leaf, mtry, n_bins, state,
                    tbl, feats, pool, node_gain, node_sf, node_sb, child,
                )

        # depth-wise keeps FIFO order but children were appended after head;
        # nothing else to do here
        if best_first and n_leaves >= max_leaves:
            break

    if use_pred:
        for j in range(n_nodes):
            if open_leaf[j] == 1:
                v = value[node_base + j]
                for k in range(node_lo[j], node_hi[j]):
                    pred[idx[k]] += v
    return n_nodes, state


@njit(cache=True, inline="always")
def _candidate_split(
    Xb, y, idx, lo, hi, tot_c, tot_s, min_leaf, mtry, n_bins, state,
    tbl, feats, pool, node_gain, node_sf, node_sb, nid,
):
    """Find the best split of idx[lo:hi), writing it into the node arrays."""
    p = Xb.shape[0]
    if mtry < p:
        for i in range(p):
            pool[i] = i
        for i in range(mtry):
            state, z = _mix64(state)
            j = i + np.int64(z % np.uint64(p - i))
            tmp = pool[i]
            pool[i] = pool[j]
            pool[j] = tmp
            feats[i] = pool[i]
        nf = mtry
    else:
        for i in range(p):
            feats[i] = i
        nf = p

    parent = tot_s * tot_s / tot_c
    best_gain = 1e-12
    best_f = -1
    best_b = -1
    small = tot_c < n_bins
    for fi in range(nf):
        f = feats[fi]
        row = Xb[f]
        # accumulate fused (sum, count) pairs; zero only touched bins after
        for k in range(lo, hi):
            i = idx[k]
            bb = np.int64(row[i]) * 2
            tbl[bb] += y[i]
            tbl[bb + 1] += 1.0
        cl = 0.0
        sl = 0.0
        for b in range(n_bins - 1):
            cl += tbl[2 * b + 1]
            sl += tbl[2 * b]
            if cl < min_leaf:
                continue
            cr = tot_c - cl
            if cr < min_leaf:
                break
            sr = tot_s - sl
            g = sl * sl / cl + sr * sr / cr - parent
            if g > best_gain:
                best_gain = g
                best_f = f
                best_b = b
        if small:
            for k in range(lo, hi):
                bb = np.int64(row[idx[k]]) * 2
                tbl[bb] = 0.0
                tbl[bb + 1] = 0.0
        else:
            for b in range(2 * n_bins):
                tbl[b] = 0.0
    if best_f >= 0:
        node_gain[nid] = best_gain
        node_sf[nid] = best_f
        node_sb[nid] = best_b
    else:
        node_gain[nid] = -1.0
    return state


@njit(cache=True)
def _root_candidate(
    Xb, y, idx, lo0, hi0, min_leaf, mtry, n_bins, state,
    node_lo, node_hi, node_depth, node_gain, node_sf, node_sb, open_leaf,
    value, node_base, tbl, feats, pool, max_depth,
):
    n = hi0 - lo0
    s = 0.0
    for k in range(lo0, hi0):
        s += y[idx[k]]
    value[node_base] = s / n
    node_gain[0] = -1.0
    if n >= 2 * min_leaf and max_depth > 0:
        state = _candidate_split(
            Xb, y, idx, lo0, hi0, n, s, min_leaf, mtry, n_bins, state,
            tbl, feats, pool, node_gain, node_sf, node_sb, 0,
        )
    return state


@njit(cache=True)
def forest_fit(Xb, y, n_trees, mtry, min_leaf, max_depth, n_bins, seed):
    """Bagged forest: n_trees trees on bootstrap resamples, plain average.

    Returns flat node arrays plus per-tree offsets.
    """
    p, n = Xb.shape
    cap_nodes = 2 * n + 3
    total_cap = n_trees * cap_nodes
    feature = np.full(total_cap, -1, dtype=np.int32)
    thr = np.zeros(total_cap, dtype=np.int32)
    left = np.full(total_cap, -1, dtype=np.int32)
    right = np.full(total_cap, -1, dtype=np.int32)
    value = np.zeros(total_cap, dtype=np.float64)
    offsets = np.zeros(n_trees + 1, dtype=np.int64)

    node_lo = np.zeros(cap_nodes, dtype=np.int64)
    node_hi = np.zeros(cap_nodes, dtype=np.int64)
    node_depth = np.zeros(cap_nodes, dtype=np.int32)
    node_gain = np.zeros(cap_nodes, dtype=np.float64)
    node_sf = np.zeros(cap_nodes, dtype=np.int64)
    node_sb = np.zeros(cap_nodes, dtype=np.int64)
    open_leaf = np.zeros(cap_nodes, dtype=np.uint8)
    tbl = np.zeros(2 * n_bins, dtype=np.float64)
    buf = np.empty(n, dtype=np.int64)
    idx = np.empty(n, dtype=np.int64)
    feats = np.zeros(p, dtype=np.int64)
    pool = np.zeros(p, dtype=np.int64)
    pred_dummy = np.zeros(1, dtype=np.float64)

    state = np.uint64(seed)
    base = 0
    for m in range(n_trees):
        for k in range(n):
            state, z = _mix64(state)
            idx[k] = np.int64(z % np.uint64(n))
        state = _root_candidate(
            Xb, y, idx, 0, n, min_leaf, mtry, n_bins, state,
            node_lo, node_hi, node_depth, node_gain, node_sf, node_sb, open_leaf,
            value, base, tbl, feats, pool, max_depth,
        )
        nn, state = _grow_tree(
            Xb, y, idx, 0, n,
            max_depth, 0, min_leaf, mtry, n_bins, state,
            feature, thr, left, right, value, base,
            node_lo, node_hi, node_depth, node_gain, node_sf, node_sb, open_leaf,
            tbl, buf, feats, pool, pred_dummy, False,
        )
        base += nn
        offsets[m + 1] = base
    return feature[:base], thr[:base], left[:base], right[:base], value[:base], offsets


@njit(cache=True)
def gbm_fit(Xb, y, n_trees, learning_rate, max_depth, max_leaves, min_leaf, n_bins, rel_tol, seed):
    """Stagewise boosted trees under squared loss.

    The first tree is fit to the raw targets and enters unshrunken (it is
    the model initialization); later trees fit current residuals and are
    scaled by the learning rate. Stops early once the relative training
    RMSE improvement falls below rel_tol. Returns flat node arrays,
    per-tree offsets, per-tree scales, and the realized tree count.
    """
    p, n = Xb.shape
    eff_depth = max_depth if max_leaves <= 0 else MAX_TREE_DEPTH
    if max_leaves > 0:
        cap_nodes = 2 * max_leaves + 3
    else:
        cap_nodes = min(2 ** (max_depth + 1) + 1, 2 * n + 3)
    total_cap = n_trees * cap_nodes
    feature = np.full(total_cap, -1, dtype=np.int32)
    thr = np.zeros(total_cap, dtype=np.int32)
    left = np.full(total_cap, -1, dtype=np.int32)
    right = np.full(total_cap, -1, dtype=np.int32)
    value = np.zeros(total_cap, dtype=np.float64)
    offsets = np.zeros(n_trees + 1, dtype=np.int64)
    scales = np.zeros(n_trees, dtype=np.float64)

    node_lo = np.zeros(cap_nodes, dtype=np.int64)
    node_hi = np.zeros(cap_nodes, dtype=np.int64)
    node_depth = np.zeros(cap_nodes, dtype=np.int32)
    node_gain = np.zeros(cap_nodes, dtype=np.float64)
    node_sf = np.zeros(cap_nodes, dtype=np.int64)
    node_sb = np.zeros(cap_nodes, dtype=np.int64)
    open_leaf = np.zeros(cap_nodes, dtype=np.uint8)
    tbl = np.zeros(2 * n_bins, dtype=np.float64)
    buf = np.empty(n, dtype=np.int64)
    idx = np.empty(n, dtype=np.int64)
    resid = np.empty(n, dtype=np.float64)
    step = np.zeros(n, dtype=np.float64)
    pred = np.zeros(n, dtype=np.float64)

    feats = np.zeros(p, dtype=np.int64)
    pool = np.zeros(p, dtype=np.int64)
    state = np.uint64(seed)

    prev_rmse = -1.0
    base = 0
    n_used = 0
    for m in range(n_trees):
        for i in range(n):
            idx[i] = i
            resid[i] = y[i] - pred[i]
            step[i] = 0.0
        state = _root_candidate(
            Xb, resid, idx, 0, n, min_leaf, p, n_bins, state,
            node_lo, node_hi, node_depth, node_gain, node_sf, node_sb, open_leaf,
            value, base, tbl, feats, pool, eff_depth,
        )
        nn, state = _grow_tree(
            Xb, resid, idx, 0, n,
            eff_depth, max_leaves, min_leaf, p, n_bins, state,
            feature, thr, left, right, value, base,
            node_lo, node_hi, node_depth, node_gain, node_sf, node_sb, open_leaf,
            tbl, buf, feats, pool, step, True,
        )
        scale = 1.0 if m == 0 else learning_rate
        sse = 0.0
        for i in range(n):
            pred[i] += scale * step[i]
            e = y[i] - pred[i]
            sse += e * e
        base += nn
        offsets[m + 1] = base
        scales[m] = scale
        n_used = m + 1
        rmse = np.sqrt(sse / n)
        if prev_rmse >= 0.0:
            if prev_rmse <= 0.0 or (prev_rmse - rmse) < rel_tol * prev_rmse:
                break
        prev_rmse = rmse
    return (
        feature[:base], thr[:base], left[:base], right[:base], value[:base],
        offsets[: n_used + 1], scales[:n_used], n_used,
    )


@njit(cache=True)
def ensemble_predict(feature, thr, left, right, value, offsets, scales, Xq):
    """Weighted sum of per-tree predictions for query rows Xq (m, p) of bins."""
    m = Xq.shape[0]
    n_trees = offsets.shape[0] - 1
    out = np.zeros(m, dtype=np.float64)
    for r in range(m):
        acc = 0.0
        for t in range(n_trees):
            nid = offsets[t]
            while feature[nid] >= 0:
                if Xq[r, feature[nid]] <= thr[nid]:
                    nid = left[nid]
                else:
                    nid = right[nid]
            acc += scales[t] * value[nid]
        out[r] = acc
    return out
