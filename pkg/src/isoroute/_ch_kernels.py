"""Jitted contraction, level-order sweep, and upward-search primitives."""

from __future__ import annotations

import numpy as np
from numba import njit

from ._kernels import _grow_i32, _heap_pop, _heap_push

INF = np.int64(2**62)

JIT = dict(cache=True, nogil=True)


@njit(**JIT)
def _grow_i64(arr, size):
    if size == arr.shape[0]:
        na = np.empty(arr.shape[0] * 2, dtype=np.int64)
        na[:size] = arr
        return na
    return arr


@njit(**JIT)
def contract_kernel(
    n, et, eh, ew, keep,
    hop_caps, settle_caps, stage_fracs,
):
    """Witness-search contraction of all vertices outside `keep`.

    Priority is 2 * edge difference + contracted neighbors + level, with
    lazy re-evaluation.  Witness searches are staged: while the fraction
    of contracted vertices is below stage_fracs[i], hop_caps[i] and
    settle_caps[i] bound the search.  Extra shortcuts from exhausted
    witness budgets only cost space, never correctness.

    Returns (rank, level, sc_t, sc_h, sc_w, n_sc); rank is the
    contraction step for contracted vertices and -1 for kept ones.
    """
    m0 = et.shape[0]
    cap = 2 * m0 + 64
    fo_head = np.empty(cap, dtype=np.int32)
    fo_w = np.empty(cap, dtype=np.int64)
    fo_next = np.empty(cap, dtype=np.int64)
    fi_tail = np.empty(cap, dtype=np.int32)
    fi_w = np.empty(cap, dtype=np.int64)
    fi_next = np.empty(cap, dtype=np.int64)
    first_out = np.full(n, -1, dtype=np.int64)
    first_in = np.full(n, -1, dtype=np.int64)
    n_pool = 0
    for e in range(m0):
        fo_head[n_pool] = eh[e]
        fo_w[n_pool] = ew[e]
        fo_next[n_pool] = first_out[et[e]]
        first_out[et[e]] = n_pool
        fi_tail[n_pool] = et[e]
        fi_w[n_pool] = ew[e]
        fi_next[n_pool] = first_in[eh[e]]
        first_in[eh[e]] = n_pool
        n_pool += 1

    contracted = np.zeros(n, dtype=np.uint8)
    rank = np.full(n, -1, dtype=np.int32)
    level = np.zeros(n, dtype=np.int32)
    del_nb = np.zeros(n, dtype=np.int32)

    # witness scratch
    wdist = np.empty(n, dtype=np.int64)
    whop = np.empty(n, dtype=np.int32)
    wver = np.zeros(n, dtype=np.int64)
    wrun = np.int64(0)
    tmark = np.zeros(n, dtype=np.int64)
    trun = np.int64(0)

    # neighbor harvest scratch (deduplicated, min weight)
    seen = np.zeros(n, dtype=np.int64)
    seen_pos = np.empty(n, dtype=np.int32)
    srun = np.int64(0)
    nb_in = np.empty(n, dtype=np.int32)
    nw_in = np.empty(n, dtype=np.int64)
    nb_out = np.empty(n, dtype=np.int32)
    nw_out = np.empty(n, dtype=np.int64)

    sc_t = np.empty(256, dtype=np.int32)
    sc_h = np.empty(256, dtype=np.int32)
    sc_w = np.empty(256, dtype=np.int64)
    n_sc = 0

    to_contract = 0
    for v in range(n):
        if keep[v] == 0:
            to_contract += 1
    if to_contract == 0:
        return rank, level, sc_t[:0], sc_h[:0], sc_w[:0], 0

    heap_keys = np.empty(1024, dtype=np.int64)
    heap_vals = np.empty(1024, dtype=np.int32)
    heap_size = 0

    step = 0

    # initial priorities (the same harvest + witness loop as below)
    order0 = np.empty(to_contract, dtype=np.int32)
    oi = 0
    for v in range(n):
        if keep[v] == 0:
            order0[oi] = v
            oi += 1

    stage = 0

    for oi in range(to_contract):
        v = order0[oi]
        # harvest neighbors
        srun += 1
        cnt_in = 0
        e = first_in[v]
        while e != -1:
            u = fi_tail[e]
            if contracted[u] == 0 and u != v:
                if seen[u] != srun:
                    seen[u] = srun
                    seen_pos[u] = cnt_in
                    nb_in[cnt_in] = u
                    nw_in[cnt_in] = fi_w[e]
                    cnt_in += 1
                elif fi_w[e] < nw_in[seen_pos[u]]:
                    nw_in[seen_pos[u]] = fi_w[e]
            e = fi_next[e]
        srun += 1
        cnt_out = 0
        e = first_out[v]
        while e != -1:
            u = fo_head[e]
            if contracted[u] == 0 and u != v:
                if seen[u] != srun:
                    seen[u] = srun
                    seen_pos[u] = cnt_out
                    nb_out[cnt_out] = u
                    nw_out[cnt_out] = fo_w[e]
                    cnt_out += 1
                elif fo_w[e] < nw_out[seen_pos[u]]:
                    nw_out[seen_pos[u]] = fo_w[e]
            e = fo_next[e]
        # simulate: count needed shortcuts with cheap witness budget
        n_need = 0
        for ii in range(cnt_in):
            u = nb_in[ii]
            wuv = nw_in[ii]
            # bound and target set
            trun += 1
            n_targets = 0
            bound = np.int64(0)
            for jj in range(cnt_out):
                w2 = nb_out[jj]
                if w2 == u:
                    continue
                tmark[w2] = trun
                n_targets += 1
                b = wuv + nw_out[jj]
                if b > bound:
                    bound = b
            if n_targets == 0:
                continue
            # witness dijkstra from u avoiding v
            wrun += 1
            wdist[u] = 0
            whop[u] = 0
            wver[u] = wrun
            hk = np.empty(64, dtype=np.int64)
            hv = np.empty(64, dtype=np.int32)
            hs = 0
            hk, hv, hs = _heap_push(hk, hv, hs, 0, u)
            settles = 0
            found = 0
            while hs > 0 and found < n_targets:
                if hk[0] > bound:
                    break
                key, x, hs = _heap_pop(hk, hv, hs)
                if wver[x] != wrun or key > wdist[x]:
                    continue
                if wdist[x] < 0:
                    continue
                wdist[x] = -wdist[x] - 1
                settles += 1
                if tmark[x] == trun:
                    found += 1
                if settles > settle_caps[stage]:
                    break
                if whop[x] >= hop_caps[stage]:
                    continue
                e = first_out[x]
                while e != -1:
                    y = fo_head[e]
                    if contracted[y] == 0 and y != v:
                        nd = key + fo_w[e]
                        if nd <= bound:
                            if wver[y] != wrun:
                                wver[y] = wrun
                                wdist[y] = nd
                                whop[y] = whop[x] + 1
                                hk, hv, hs = _heap_push(hk, hv, hs, nd, y)
                            elif wdist[y] >= 0 and nd < wdist[y]:
                                wdist[y] = nd
                                whop[y] = whop[x] + 1
                                hk, hv, hs = _heap_push(hk, hv, hs, nd, y)
                    e = fo_next[e]
            for jj in range(cnt_out):
                w2 = nb_out[jj]
                if w2 == u:
                    continue
                lim = wuv + nw_out[jj]
                dw = INF
                if wver[w2] == wrun:
                    dw = -wdist[w2] - 1 if wdist[w2] < 0 else wdist[w2]
                if dw > lim:
                    n_need += 1
        prio = 2 * (n_need - cnt_in - cnt_out) + del_nb[v] + level[v]
        heap_keys, heap_vals, heap_size = _heap_push(
            heap_keys, heap_vals, heap_size,
            (np.int64(prio) << 32) | np.int64(v), v,
        )

    while heap_size > 0:
        key, v, heap_size = _heap_pop(heap_keys, heap_vals, heap_size)
        if contracted[v] == 1:
            continue
        if step * 10 >= to_contract * 9:
            stage = 1 if len(hop_caps) > 1 else 0
        # re-evaluate priority lazily
        srun += 1
        cnt_in = 0
        e = first_in[v]
        while e != -1:
            u = fi_tail[e]
            if contracted[u] == 0 and u != v:
                if seen[u] != srun:
                    seen[u] = srun
                    seen_pos[u] = cnt_in
                    nb_in[cnt_in] = u
                    nw_in[cnt_in] = fi_w[e]
                    cnt_in += 1
                elif fi_w[e] < nw_in[seen_pos[u]]:
                    nw_in[seen_pos[u]] = fi_w[e]
            e = fi_next[e]
        srun += 1
        cnt_out = 0
        e = first_out[v]
        while e != -1:
            u = fo_head[e]
            if contracted[u] == 0 and u != v:
                if seen[u] != srun:
                    seen[u] = srun
                    seen_pos[u] = cnt_out
                    nb_out[cnt_out] = u
                    nw_out[cnt_out] = fo_w[e]
                    cnt_out += 1
                elif fo_w[e] < nw_out[seen_pos[u]]:
                    nw_out[seen_pos[u]] = fo_w[e]
            e = fo_next[e]

        # full witness pass: remember which pairs need shortcuts
        need_t = np.empty(cnt_in * cnt_out + 1, dtype=np.int32)
        need_h = np.empty(cnt_in * cnt_out + 1, dtype=np.int32)
        need_w = np.empty(cnt_in * cnt_out + 1, dtype=np.int64)
        n_need = 0
        for ii in range(cnt_in):
            u = nb_in[ii]
            wuv = nw_in[ii]
            trun += 1
            n_targets = 0
            bound = np.int64(0)
            for jj in range(cnt_out):
                w2 = nb_out[jj]
                if w2 == u:
                    continue
                tmark[w2] = trun
                n_targets += 1
                b = wuv + nw_out[jj]
                if b > bound:
                    bound = b
            if n_targets == 0:
                continue
            wrun += 1
            wdist[u] = 0
            whop[u] = 0
            wver[u] = wrun
            hk = np.empty(64, dtype=np.int64)
            hv = np.empty(64, dtype=np.int32)
            hs = 0
            hk, hv, hs = _heap_push(hk, hv, hs, 0, u)
            settles = 0
            found = 0
            while hs > 0 and found < n_targets:
                if hk[0] > bound:
                    break
                key2, x, hs = _heap_pop(hk, hv, hs)
                if wver[x] != wrun or key2 > wdist[x]:
                    continue
                if wdist[x] < 0:
                    continue
                wdist[x] = -wdist[x] - 1
                settles += 1
                if tmark[x] == trun:
                    found += 1
                if settles > settle_caps[stage]:
                    break
                if whop[x] >= hop_caps[stage]:
                    continue
                e = first_out[x]
                while e != -1:
                    y = fo_head[e]
                    if contracted[y] == 0 and y != v:
                        nd = key2 + fo_w[e]
                        if nd <= bound:
                            if wver[y] != wrun:
                                wver[y] = wrun
                                wdist[y] = nd
                                whop[y] = whop[x] + 1
                                hk, hv, hs = _heap_push(hk, hv, hs, nd, y)
                            elif wdist[y] >= 0 and nd < wdist[y]:
                                wdist[y] = nd
                                whop[y] = whop[x] + 1
                                hk, hv, hs = _heap_push(hk, hv, hs, nd, y)
                    e = fo_next[e]
            for jj in range(cnt_out):
                w2 = nb_out[jj]
                if w2 == u:
                    continue
                lim = wuv + nw_out[jj]
                dw = INF
                if wver[w2] == wrun:
                    dw = -wdist[w2] - 1 if wdist[w2] < 0 else wdist[w2]
                if dw > lim:
                    need_t[n_need] = u
                    need_h[n_need] = w2
                    need_w[n_need] = lim
                    n_need += 1
        prio = 2 * (n_need - cnt_in - cnt_out) + del_nb[v] + level[v]
        newkey = (np.int64(prio) << 32) | np.int64(v)
        if heap_size > 0 and newkey > heap_keys[0]:
            heap_keys, heap_vals, heap_size = _heap_push(
                heap_keys, heap_vals, heap_size, newkey, v
            )
            continue

        # contract v
        contracted[v] = 1
        rank[v] = step
        step += 1
        for ii in range(cnt_in):
            u = nb_in[ii]
            del_nb[u] += 1
            if level[v] + 1 > level[u]:
                level[u] = level[v] + 1
        for jj in range(cnt_out):
            u = nb_out[jj]
            del_nb[u] += 1
            if level[v] + 1 > level[u]:
                level[u] = level[v] + 1
        for q in range(n_need):
            t = need_t[q]
            h = need_h[q]
            w = need_w[q]
            if n_pool == fo_head.shape[0]:
                fo_head = _grow_i32(fo_head, n_pool)
                fo_w = _grow_i64(fo_w, n_pool)
                fo_next = _grow_i64(fo_next, n_pool)
                fi_tail = _grow_i32(fi_tail, n_pool)
                fi_w = _grow_i64(fi_w, n_pool)
                fi_next = _grow_i64(fi_next, n_pool)
            fo_head[n_pool] = h
            fo_w[n_pool] = w
            fo_next[n_pool] = first_out[t]
            first_out[t] = n_pool
            fi_tail[n_pool] = t
            fi_w[n_pool] = w
            fi_next[n_pool] = first_in[h]
            first_in[h] = n_pool
            n_pool += 1
            sc_t = _grow_i32(sc_t, n_sc)
            sc_h = _grow_i32(sc_h, n_sc)
            sc_w = _grow_i64(sc_w, n_sc)
            sc_t[n_sc] = t
            sc_h[n_sc] = h
            sc_w[n_sc] = w
            n_sc += 1

    return rank, level, sc_t[:n_sc], sc_h[:n_sc], sc_w[:n_sc], n_sc


@njit(**JIT)
def upward_search_kernel(
    up_index, up_head, up_w,
    sources, offsets, stop_at,
    dist, ver, cur,
):
    """Multi-source Dijkstra on the upward graph.  Returns settled count.
    stop_at < 0 means run to queue exhaustion.

    Pushes happen only on strict improvement, so each vertex is popped at
    its final key exactly once; no settled marks are needed."""
    heap_keys = np.empty(1024, dtype=np.int64)
    heap_vals = np.empty(1024, dtype=np.int32)
    heap_size = 0
    settled = 0
    for i in range(sources.shape[0]):
        s = sources[i]
        d0 = offsets[i]
        if ver[s] != cur or d0 < dist[s]:
            dist[s] = d0
            ver[s] = cur
            heap_keys, heap_vals, heap_size = _heap_push(
                heap_keys, heap_vals, heap_size, d0, s
            )
    while heap_size > 0:
        if stop_at >= 0 and heap_keys[0] > stop_at:
            break
        key, u, heap_size = _heap_pop(heap_keys, heap_vals, heap_size)
        if ver[u] != cur or key > dist[u]:
            continue
        settled += 1
        for i in range(up_index[u], up_index[u + 1]):
            v = up_head[i]
            nd = key + up_w[i]
            if ver[v] != cur:
                ver[v] = cur
                dist[v] = nd
                heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, nd, v)
            elif nd < dist[v]:
                dist[v] = nd
                heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, nd, v)
    return settled


@njit(**JIT)
def phast_sweep_kernel(
    dn_order, dn_start, dn_tail, dn_w,
    lo, hi,
    dist, ver, cur,
):
    """Level-order sweep over positions [lo, hi): each vertex takes the
    minimum of its own label and tail label + weight over incoming
    downward edges."""
    for pos in range(lo, hi):
        v = dn_order[pos]
        best = dist[v] if ver[v] == cur else INF
        for i in range(dn_start[pos], dn_start[pos + 1]):
            t = dn_tail[i]
            dt = dist[t] if ver[t] == cur else INF
            if dt < INF:
                nd = dt + dn_w[i]
                if nd < best:
                    best = nd
        dist[v] = best
        ver[v] = cur

@njit(**JIT)
def ch_bidirectional_kernel(
    up_index, up_head, up_w,
    dn_pos, dn_start, dn_tail, dn_w,
    s, t,
    fdist, fver, bdist, bver, cur,
):
    """Point-to-point hierarchy query: forward search on the upward graph
    meets a backward search along downward edges; returns the best meet."""
    best = INF
    # forward
    hk = np.empty(256, dtype=np.int64)
    hv = np.empty(256, dtype=np.int32)
    hs = 0
    fdist[s] = 0
    fver[s] = cur
    hk, hv, hs = _heap_push(hk, hv, hs, 0, s)
    while hs > 0:
        key, u, hs = _heap_pop(hk, hv, hs)
        if fver[u] != cur or key > fdist[u]:
            continue
        if key >= best:
            break
        for i in range(up_index[u], up_index[u + 1]):
            v = up_head[i]
            nd = key + up_w[i]
            if fver[v] != cur:
                fver[v] = cur
                fdist[v] = nd
                hk, hv, hs = _heap_push(hk, hv, hs, nd, v)
            elif nd < fdist[v]:
                fdist[v] = nd
                hk, hv, hs = _heap_push(hk, hv, hs, nd, v)
    # backward over downward edges (head -> tail raises rank)
    hk = np.empty(256, dtype=np.int64)
    hv = np.empty(256, dtype=np.int32)
    hs = 0
    bdist[t] = 0
    bver[t] = cur
    hk, hv, hs = _heap_push(hk, hv, hs, 0, t)
    while hs > 0:
        key, u, hs = _heap_pop(hk, hv, hs)
        if bver[u] != cur or key > bdist[u]:
            continue
        if key >= best:
            break
        if fver[u] == cur and fdist[u] + key < best:
            best = fdist[u] + key
        p = dn_pos[u]
        for i in range(dn_start[p], dn_start[p + 1]):
            v = dn_tail[i]
            nd = key + dn_w[i]
            if bver[v] != cur:
                bver[v] = cur
                bdist[v] = nd
                hk, hv, hs = _heap_push(hk, hv, hs, nd, v)
            elif nd < bdist[v]:
                bdist[v] = nd
                hk, hv, hs = _heap_push(hk, hv, hs, nd, v)
    # meets found while settling backward cover all candidates except
    # forward-settled vertices the backward search only labeled
    return best
