"""Jitted kernels for the contraction-based isochrone strategies."""

from __future__ import annotations

import numpy as np
from numba import njit

from ._kernels import _grow_i32, _grow_u8, _heap_pop, _heap_push

INF = np.int64(2**62)

JIT = dict(cache=True, nogil=True)


@njit(**JIT)
def cd_phase12_kernel(
    up_index, up_head, up_w, up_eid, up_emit,
    rup_index, rup_tail, rup_eid, rup_emit,
    is_core, cell_of,
    ecc, cpair_start, cpair_v,
    source, tau,
    dist, ver, cur, state, touched,
    i_flag, o_flag,
):
    """Isochrone search on the upward graph: an upward hierarchy search
    inside the source cell that becomes a plain search on the core.
    Cell flags are maintained at core settles; the final queue sweep
    emits original core-to-core edges with exactly one endpoint in range.
    """
    heap_keys = np.empty(1024, dtype=np.int64)
    heap_vals = np.empty(1024, dtype=np.int32)
    heap_size = 0
    n_touched = 0
    settled = 0

    dist[source] = 0
    ver[source] = cur
    state[source] = 1
    touched[n_touched] = source
    n_touched += 1
    heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, 0, source)

    while heap_size > 0:
        if heap_keys[0] > tau:
            break
        key, u, heap_size = _heap_pop(heap_keys, heap_vals, heap_size)
        if state[u] == 2 or key > dist[u]:
            continue
        state[u] = 2
        settled += 1
        du = dist[u]
        if is_core[u] == 1:
            c = cell_of[u]
            if i_flag[c] == 0:
                i_flag[c] = 1
            if o_flag[c] == 1 and ecc[u] < INF and du + ecc[u] <= tau:
                ok = True
                for pi in range(cpair_start[u], cpair_start[u + 1]):
                    p = cpair_v[pi]
                    dp = dist[p] if ver[p] == cur else INF
                    if dp >= INF or ecc[p] >= INF or dp + ecc[p] > tau:
                        ok = False
                        break
                if ok:
                    o_flag[c] = 0
        for i in range(up_index[u], up_index[u + 1]):
            v = up_head[i]
            nd = du + up_w[i]
            if ver[v] != cur:
                ver[v] = cur
                state[v] = 1
                dist[v] = nd
                touched[n_touched] = v
                n_touched += 1
                heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, nd, v)
            elif nd < dist[v]:
                dist[v] = nd
                if state[v] != 2:
                    heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, nd, v)
        if is_core[u] == 1:
            # only core tails matter: the final sweep reports core-to-core
            # edges, interior edges are handled by the cell sweeps
            for i in range(rup_index[u], rup_index[u + 1]):
                t = rup_tail[i]
                if is_core[t] == 1 and ver[t] != cur:
                    ver[t] = cur
                    state[t] = 1
                    dist[t] = INF
                    touched[n_touched] = t
                    n_touched += 1
                    heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, INF, t)

    out_edges = np.empty(256, dtype=np.int32)
    out_dirs = np.empty(256, dtype=np.uint8)
    n_out = 0
    for ti in range(n_touched):
        q = touched[ti]
        if state[q] == 2 or is_core[q] == 0:
            continue
        for i in range(rup_index[q], rup_index[q + 1]):
            if rup_emit[i] == 1:
                t = rup_tail[i]
                if ver[t] == cur and state[t] == 2 and dist[t] <= tau:
                    out_edges = _grow_i32(out_edges, n_out)
                    out_dirs = _grow_u8(out_dirs, n_out)
                    out_edges[n_out] = rup_eid[i]
                    out_dirs[n_out] = 0
                    n_out += 1
        for i in range(up_index[q], up_index[q + 1]):
            if up_emit[i] == 1:
                h = up_head[i]
                if ver[h] == cur and state[h] == 2 and dist[h] <= tau:
                    out_edges = _grow_i32(out_edges, n_out)
                    out_dirs = _grow_u8(out_dirs, n_out)
                    out_edges[n_out] = up_eid[i]
                    out_dirs[n_out] = 1
                    n_out += 1
    return out_edges, out_dirs, n_out, settled


@njit(**JIT)
def entry_sweep_kernel(
    verts, vlo, vhi, estart, emid,
    e_tail, e_w, e_eid, e_emit,
    edge_tail, fwd_head,
    tau,
    dist, ver, cur,
    do_emit,
):
    """Label pass over verts[vlo:vhi] from the real incoming entries
    (the prefix up to emid; dummy mirrors carry INF weights and are only
    emission candidates); flagged original entries are emitted in the
    same pass, since every tail label is final by the time its head is
    processed."""
    out_edges = np.empty(64, dtype=np.int32)
    out_dirs = np.empty(64, dtype=np.uint8)
    n_out = 0
    for pos in range(vlo, vhi):
        v = verts[pos]
        best = dist[v] if ver[v] == cur else INF
        lo = estart[pos]
        hi = estart[pos + 1]
        for i in range(lo, emid[pos]):
            t = e_tail[i]
            dt = dist[t] if ver[t] == cur else INF
            w = e_w[i]
            if dt < INF and w < INF:
                nd = dt + w
                if nd < best:
                    best = nd
        dist[v] = best
        ver[v] = cur
        if do_emit:
            for i in range(lo, hi):
                if e_emit[i] == 1:
                    e = e_eid[i]
                    t = edge_tail[e]
                    h = fwd_head[e]
                    rt = ver[t] == cur and dist[t] <= tau
                    rh = ver[h] == cur and dist[h] <= tau
                    if rt != rh:
                        out_edges = _grow_i32(out_edges, n_out)
                        out_dirs = _grow_u8(out_dirs, n_out)
                        out_edges[n_out] = e
                        out_dirs[n_out] = 0 if rt else 1
                        n_out += 1
    return out_edges, out_dirs, n_out, vhi - vlo


@njit(**JIT)
def cell_core_ecc_kernel(
    members,
    ccore_index, ccore_head, ccore_w,
    iverts, ivlo, ivhi, ie_start, ie_tail, ie_w,
    dist, dver, counter,
):
    """Restricted eccentricities for one cell's core vertices: a search
    on the cell-restricted core graph, then a level-order sweep over the
    cell's interior vertices.  INF marks core vertices that cannot reach
    every interior vertex within the cell; unreachable same-cell core
    partners are returned as pairs."""
    nm = members.shape[0]
    ecc_out = np.full(nm, INF, dtype=np.int64)
    pair_src = np.empty(16, dtype=np.int32)
    pair_dst = np.empty(16, dtype=np.int32)
    n_pairs = 0
    n_int = ivhi - ivlo
    for mi in range(nm):
        u = members[mi]
        counter[0] += 1
        run = counter[0]
        hk = np.empty(256, dtype=np.int64)
        hv = np.empty(256, dtype=np.int32)
        hs = 0
        dist[u] = 0
        dver[u] = run
        hk, hv, hs = _heap_push(hk, hv, hs, 0, u)
        ecc = np.int64(0)
        while hs > 0:
            key, x, hs = _heap_pop(hk, hv, hs)
            if dver[x] != run or key > dist[x]:
                continue
            if key > ecc:
                ecc = key
            for i in range(ccore_index[x], ccore_index[x + 1]):
                y = ccore_head[i]
                nd = key + ccore_w[i]
                if dver[y] != run:
                    dver[y] = run
                    dist[y] = nd
                    hk, hv, hs = _heap_push(hk, hv, hs, nd, y)
                elif nd < dist[y]:
                    dist[y] = nd
                    hk, hv, hs = _heap_push(hk, hv, hs, nd, y)
        # unreachable same-cell core partners
        for mj in range(nm):
            v = members[mj]
            if dver[v] != run:
                if n_pairs == pair_src.shape[0]:
                    pair_src = _grow_i32(pair_src, n_pairs)
                    pair_dst = _grow_i32(pair_dst, n_pairs)
                pair_src[n_pairs] = u
                pair_dst[n_pairs] = v
                n_pairs += 1
        # interior sweep, restricted to the cell
        unreachable_interior = False
        for pos in range(ivlo, ivhi):
            v = iverts[pos]
            best = INF
            for i in range(ie_start[pos], ie_start[pos + 1]):
                t = ie_tail[i]
                dt = dist[t] if dver[t] == run else INF
                w = ie_w[i]
                if dt < INF and w < INF:
                    nd = dt + w
                    if nd < best:
                        best = nd
            dist[v] = best
            dver[v] = run
            if best >= INF:
                unreachable_interior = True
            elif best > ecc:
                ecc = best
        if unreachable_interior and n_int > 0:
            ecc_out[mi] = INF
        else:
            ecc_out[mi] = ecc
    return ecc_out, pair_src[:n_pairs], pair_dst[:n_pairs], n_pairs


@njit(**JIT)
def reverse_cell_sweep_kernel(
    up_index, up_head, up_w,
    iverts, ivlo, ivhi,
    dist, dver, run,
):
    """Backward-distance fill for one cell's interior vertices: scan each
    vertex's upward (in-cell) edges against already-final reverse labels,
    in the same descending-level order used by forward sweeps."""
    best_max = np.int64(0)
    for pos in range(ivlo, ivhi):
        v = iverts[pos]
        best = INF
        for i in range(up_index[v], up_index[v + 1]):
            h = up_head[i]
            dh = dist[h] if dver[h] == run else INF
            if dh < 0:
                dh = -dh - 1  # settled marker from the core search
            if dh < INF:
                nd = dh + up_w[i]
                if nd < best:
                    best = nd
        dist[v] = best
        dver[v] = run
        if best < INF and best > best_max:
            best_max = best
    return best_max


@njit(**JIT)
def reverse_core_until_kernel(
    rcore_index, rcore_tail, rcore_w,
    source, cell_boundary, bmark, bstamp,
    dist, dver, run,
):
    """Dijkstra on the reverse core graph from one boundary vertex,
    aborted once every boundary vertex of its cell has settled (checked
    with a counter).  Returns the max settled cell-boundary label."""
    hk = np.empty(256, dtype=np.int64)
    hv = np.empty(256, dtype=np.int32)
    hs = 0
    dist[source] = 0
    dver[source] = run
    hk, hv, hs = _heap_push(hk, hv, hs, 0, source)
    remaining = cell_boundary.shape[0]
    max_b = np.int64(0)
    while hs > 0 and remaining > 0:
        key, x, hs = _heap_pop(hk, hv, hs)
        if dver[x] != run or key > dist[x]:
            continue
        if dist[x] < 0:
            continue
        dist[x] = -dist[x] - 1
        if bmark[x] == bstamp:
            remaining -= 1
            if key > max_b:
                max_b = key
        for i in range(rcore_index[x], rcore_index[x + 1]):
            y = rcore_tail[i]
            nd = key + rcore_w[i]
            if dver[y] != run:
                dver[y] = run
                dist[y] = nd
                hk, hv, hs = _heap_push(hk, hv, hs, nd, y)
            elif dist[y] >= 0 and nd < dist[y]:
                dist[y] = nd
                hk, hv, hs = _heap_push(hk, hv, hs, nd, y)
    return max_b


@njit(**JIT)
def minmax_per_cell_kernel(cv_start, cv_verts, dist, ver, cur, lo_out, hi_out):
    """Min and max labels over each cell's vertex set."""
    k = cv_start.shape[0] - 1
    for c in range(k):
        lo = INF
        hi = np.int64(0)
        for i in range(cv_start[c], cv_start[c + 1]):
            v = cv_verts[i]
            d = dist[v] if ver[v] == cur else INF
            if d < lo:
                lo = d
            if d > hi:
                hi = d
        lo_out[c] = lo
        hi_out[c] = hi


@njit(**JIT)
def cp_flags_kernel(
    cstart, cverts, ecc, cpair_start, cpair_v,
    tau, dist, ver, cur, relaxed,
    i_flag, o_flag,
):
    """Post-sweep flag evaluation per cell on final core labels.  The
    relaxed rule skips unreachable-pair checks (marking a superset)."""
    k = cstart.shape[0] - 1
    for c in range(k):
        has_in = i_flag[c] == 1
        all_cover = True
        some_cover = False
        for i in range(cstart[c], cstart[c + 1]):
            u = cverts[i]
            du = dist[u] if ver[u] == cur else INF
            if du <= tau:
                has_in = True
            covered = du < INF and ecc[u] < INF and du + ecc[u] <= tau
            if not covered:
                all_cover = False
            elif not some_cover:
                ok = True
                for pi in range(cpair_start[u], cpair_start[u + 1]):
                    p = cpair_v[pi]
                    dp = dist[p] if ver[p] == cur else INF
                    if dp >= INF or ecc[p] >= INF or dp + ecc[p] > tau:
                        ok = False
                        break
                if ok:
                    some_cover = True
        i_flag[c] = 1 if has_in else 0
        if relaxed:
            o_flag[c] = 0 if (all_cover and cstart[c + 1] > cstart[c]) else 1
        else:
            o_flag[c] = 0 if some_cover else 1


@njit(**JIT)
def closure_kernel(dn_pos, dn_start, dn_tail, targets, visited, vstamp):
    """Vertices reachable from the targets by walking downward entries
    head-to-tail; returned unordered."""
    out = np.empty(max(64, targets.shape[0] * 2), dtype=np.int32)
    n_out = 0
    stack = np.empty(64, dtype=np.int32)
    sp = 0
    for i in range(targets.shape[0]):
        t = targets[i]
        if visited[t] != vstamp:
            visited[t] = vstamp
            if sp == stack.shape[0]:
                stack = _grow_i32(stack, sp)
            stack[sp] = t
            sp += 1
            out = _grow_i32(out, n_out)
            out[n_out] = t
            n_out += 1
    while sp > 0:
        sp -= 1
        v = stack[sp]
        pos = dn_pos[v]
        for i in range(dn_start[pos], dn_start[pos + 1]):
            t = dn_tail[i]
            if visited[t] != vstamp:
                visited[t] = vstamp
                if sp == stack.shape[0]:
                    stack = _grow_i32(stack, sp)
                stack[sp] = t
                sp += 1
                out = _grow_i32(out, n_out)
                out[n_out] = t
                n_out += 1
    return out[:n_out], n_out

INF32 = np.int64(2**31 - 1)


@njit(**JIT)
def dt_phase1_kernel(up_index, up_head, up_w, source, dist32):
    """Upward search to exhaustion over a freshly reset int32 label array."""
    hk = np.empty(256, dtype=np.int64)
    hv = np.empty(256, dtype=np.int32)
    hs = 0
    dist32[source] = 0
    hk, hv, hs = _heap_push(hk, hv, hs, 0, source)
    settled = 0
    while hs > 0:
        key, u, hs = _heap_pop(hk, hv, hs)
        if key > dist32[u]:
            continue
        settled += 1
        for i in range(up_index[u], up_index[u + 1]):
            v = up_head[i]
            nd = key + up_w[i]
            if nd < dist32[v]:
                dist32[v] = np.int32(nd)
                hk, hv, hs = _heap_push(hk, hv, hs, nd, v)
    return settled


@njit(**JIT)
def dt_sweep_kernel(
    verts, vlo, vhi, estart, emid,
    e_pack, e_eid, e_emit,
    edge_tail, fwd_head,
    tau,
    dist32,
    do_emit,
):
    """Selection-graph sweep over packed (tail, weight) entries against a
    per-query int32 label array."""
    out_edges = np.empty(64, dtype=np.int32)
    out_dirs = np.empty(64, dtype=np.uint8)
    n_out = 0
    for pos in range(vlo, vhi):
        v = verts[pos]
        best = np.int64(dist32[v])
        lo = estart[pos]
        hi = estart[pos + 1]
        for i in range(lo, emid[pos]):
            p = e_pack[i]
            t = p >> 32
            dt = np.int64(dist32[t])
            nd = dt + (p & 0xFFFFFFFF)
            if nd < best:
                best = nd
        if best > INF32:
            best = INF32
        dist32[v] = np.int32(best)
        if do_emit:
            for i in range(lo, hi):
                if e_emit[i] == 1:
                    e = e_eid[i]
                    t = edge_tail[e]
                    h = fwd_head[e]
                    rt = dist32[t] <= tau
                    rh = dist32[h] <= tau
                    if rt != rh:
                        out_edges = _grow_i32(out_edges, n_out)
                        out_dirs = _grow_u8(out_dirs, n_out)
                        out_edges[n_out] = e
                        out_dirs[n_out] = 0 if rt else 1
                        n_out += 1
    return out_edges, out_dirs, n_out, vhi - vlo
