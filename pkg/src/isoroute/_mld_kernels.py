"""Jitted kernels for multilevel customization and queries.

Conventions shared by all kernels here:

- Vertices keep their original graph ids; the query-friendly ordering is
  carried by `crp_idx` (position each vertex would have after the
  boundary-first permutation).
- `cells_ln[(l-1)*n + v]` is the cell of v at level l (1-based levels).
- `bl[v]` is the highest level at which v is a boundary vertex (0 = none).
- Leveled adjacency: per-vertex edge lists sorted by descending crossing
  level; `cut[v*(L+2)+j]` is the end of the edges crossing at level >= j,
  so edges crossing exactly at level j occupy [cut(v,j+1), cut(v,j)).
- Overlay arrays are flattened over levels: `lvl_k0` offsets cell ids,
  `lvl_b0` boundary-vertex positions, `lvl_c0` per-level bstart rows.
- Labels are versioned: dist[v] is valid iff ver[v] == cur.
"""

from __future__ import annotations

import numpy as np
from numba import get_thread_id, njit, prange

from ._kernels import _grow_i32, _grow_u8, _heap_pop, _heap_push

INF = np.int64(2**62)

JIT = dict(cache=True, nogil=True)

CHECK_SIMPLE = 0  # unrestricted-bound column, single comparison
CHECK_MATRIX = 1  # restricted column + clique-row scan of INF entries
CHECK_SEP = 2  # restricted column + precomputed unreachable-pair lists


@njit(inline="always")
def _sat_add(a, b):
    if a >= INF or b >= INF:
        return INF
    return a + b


@njit(**JIT)
def _settle_flags(
    u, du, tau, lmax,
    n, cells_ln, lvl_k0, lvl_b0, lvl_c0,
    bstart_all, bvert_all, bpos_ln,
    mat_off, mat_all, ecc_r_all, ecc_u_all,
    pair_start, pair_pos,
    check_kind,
    dist, ver, cur,
    i_flag, o_flag,
):
    """Per-settle cell-flag maintenance for levels 1..lmax."""
    for l in range(1, lmax + 1):
        c = cells_ln[(l - 1) * n + u]
        ki = lvl_k0[l - 1] + c
        if i_flag[ki] == 0:
            i_flag[ki] = 1
        if o_flag[ki] == 0:
            continue
        pos = bpos_ln[(l - 1) * n + u]
        if pos < 0:
            continue
        if check_kind == CHECK_SIMPLE:
            e = ecc_u_all[pos]
            if e < INF and du + e <= tau:
                o_flag[ki] = 0
            continue
        e = ecc_r_all[pos]
        if e >= INF or du + e > tau:
            continue
        ok = True
        if check_kind == CHECK_SEP:
            for pi in range(pair_start[pos], pair_start[pos + 1]):
                p2 = pair_pos[pi]
                v = bvert_all[p2]
                dv = dist[v] if ver[v] == cur else INF
                e2 = ecc_r_all[p2]
                if dv >= INF or e2 >= INF or dv + e2 > tau:
                    ok = False
                    break
        else:  # CHECK_MATRIX: scan the clique row for unreachable partners
            row0 = lvl_c0[l - 1] + c
            first = lvl_b0[l - 1] + bstart_all[row0]
            bc = bstart_all[row0 + 1] - bstart_all[row0]
            off = mat_off[ki]
            il = pos - first
            for j in range(bc):
                if mat_all[off + il * bc + j] >= INF:
                    p2 = first + j
                    v = bvert_all[p2]
                    dv = dist[v] if ver[v] == cur else INF
                    e2 = ecc_r_all[p2]
                    if dv >= INF or e2 >= INF or dv + e2 > tau:
                        ok = False
                        break
        if ok:
            o_flag[ki] = 0


@njit(inline="always")
def _qlev(u, src, L, n, cells_ln):
    for l in range(L, 0, -1):
        if cells_ln[(l - 1) * n + u] != cells_ln[(l - 1) * n + src]:
            return l
    return 0


@njit(**JIT)
def upward_kernel(
    # leveled adjacency
    fwd_index, lf_head, lf_w, lf_eid, lf_cut,
    rev_index, lr_tail, lr_eid, lr_cut,
    # overlay
    L, cells_ln, bl,
    lvl_k0, lvl_b0, lvl_c0,
    bstart_all, bvert_all, bpos_ln,
    mat_off, mat_all, ecc_r_all, ecc_u_all,
    pair_start, pair_pos,
    check_kind,
    # query
    source, tau,
    # state
    dist, ver, cur, state, touched,
    i_flag, o_flag,
    emit,
):
    """Isochrone search over the union of the top-level overlay and the
    source's cell subgraphs, maintaining cell flags at every settle.

    Scans, at a settled vertex u, the original edges crossing at level
    >= qlev(u) plus (for qlev >= 1) the clique row of u's qlev-cell.
    With `emit`, unlabeled tails of incoming edges are inserted at key
    INF and the final queue sweep reports boundary/original edges with
    exactly one endpoint in range.
    """
    n = dist.shape[0]
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

    stride = L + 2
    while heap_size > 0:
        if heap_keys[0] > tau:
            break
        key, u, heap_size = _heap_pop(heap_keys, heap_vals, heap_size)
        if state[u] == 2 or key > dist[u]:
            continue
        state[u] = 2
        settled += 1
        du = dist[u]
        _settle_flags(
            u, du, tau, bl[u],
            n, cells_ln, lvl_k0, lvl_b0, lvl_c0,
            bstart_all, bvert_all, bpos_ln,
            mat_off, mat_all, ecc_r_all, ecc_u_all,
            pair_start, pair_pos, check_kind,
            dist, ver, cur, i_flag, o_flag,
        )
        q = _qlev(u, source, L, n, cells_ln)
        # original edges crossing at level >= q
        for i in range(fwd_index[u], lf_cut[u * stride + q]):
            v = lf_head[i]
            nd = du + lf_w[i]
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
        if q >= 1:
            # clique row of u's level-q cell
            c = cells_ln[(q - 1) * n + u]
            row0 = lvl_c0[q - 1] + c
            first = lvl_b0[q - 1] + bstart_all[row0]
            bc = bstart_all[row0 + 1] - bstart_all[row0]
            off = mat_off[lvl_k0[q - 1] + c]
            il = bpos_ln[(q - 1) * n + u] - first
            for j in range(bc):
                w = mat_all[off + il * bc + j]
                if w < INF:
                    v = bvert_all[first + j]
                    nd = du + w
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
        if emit:
            # insert unlabeled tails of incoming edges for the final sweep
            for i in range(rev_index[u], lr_cut[u * stride + q]):
                t = lr_tail[i]
                if ver[t] != cur:
                    ver[t] = cur
                    state[t] = 1
                    dist[t] = INF
                    touched[n_touched] = t
                    n_touched += 1
                    heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, INF, t)

    out_edges = np.empty(256, dtype=np.int32)
    out_dirs = np.empty(256, dtype=np.uint8)
    n_out = 0
    if emit:
        for ti in range(n_touched):
            qv = touched[ti]
            if state[qv] == 2:
                continue
            lq = _qlev(qv, source, L, n, cells_ln)
            for i in range(rev_index[qv], lr_cut[qv * stride + lq]):
                t = lr_tail[i]
                if ver[t] == cur and dist[t] <= tau:
                    out_edges = _grow_i32(out_edges, n_out)
                    out_dirs = _grow_u8(out_dirs, n_out)
                    out_edges[n_out] = lr_eid[i]
                    out_dirs[n_out] = 0
                    n_out += 1
            for i in range(fwd_index[qv], lf_cut[qv * stride + lq]):
                h = lf_head[i]
                if ver[h] == cur and dist[h] <= tau:
                    out_edges = _grow_i32(out_edges, n_out)
                    out_dirs = _grow_u8(out_dirs, n_out)
                    out_edges[n_out] = lf_eid[i]
                    out_dirs[n_out] = 1
                    n_out += 1
    return out_edges, out_dirs, n_out, settled, n_touched


@njit(**JIT)
def scan_edge_list(edge_ids, lo, hi, edge_tail, fwd_head, dist, ver, cur, tau,
                   out_edges, out_dirs, n_out):
    """Emit edges from a scan list whose endpoints straddle the limit."""
    for i in range(lo, hi):
        e = edge_ids[i]
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
    return out_edges, out_dirs, n_out


@njit(**JIT)
def crp_descend_kernel(
    root_level, root_cell,
    # leveled adjacency
    fwd_index, lf_head, lf_w, lf_eid, lf_cut,
    rev_index, lr_tail, lr_eid, lr_cut,
    # overlay
    L, cells_ln, bl,
    lvl_k0, lvl_b0, lvl_c0,
    bstart_all, bvert_all, bpos_ln,
    mat_off, mat_all, ecc_r_all, ecc_u_all,
    pair_start, pair_pos,
    check_kind,
    # children csr (lvl_c0-indexed rows, valid for levels >= 2)
    ch_start, ch_cell,
    tau,
    dist, ver, cur, sweep_ver, touch_ver, stamp_base,
    i_flag, o_flag,
):
    """Process one active top cell and its active descendants.

    Each cell runs the isochrone search on its level-(l-1) search graph
    (subcell cliques plus edges crossing exactly at level l-1), seeded
    with the cell's boundary labels; boundary/original edges with one
    endpoint in range are emitted, and flags for lower levels maintained.
    """
    n = dist.shape[0]
    stride = L + 2
    out_edges = np.empty(256, dtype=np.int32)
    out_dirs = np.empty(256, dtype=np.uint8)
    n_out = 0
    settled_total = 0
    swept_cells = 0
    touched = np.empty(1024, dtype=np.int32)

    stack_lev = np.empty(64, dtype=np.int64)
    stack_cell = np.empty(64, dtype=np.int64)
    sp = 0
    stack_lev[sp] = root_level
    stack_cell[sp] = root_cell
    sp += 1

    heap_keys = np.empty(1024, dtype=np.int64)
    heap_vals = np.empty(1024, dtype=np.int32)

    while sp > 0:
        sp -= 1
        lev = stack_lev[sp]
        cell = stack_cell[sp]
        swept_cells += 1
        stamp = stamp_base + lvl_k0[lev - 1] + cell + 1
        heap_size = 0
        n_loc = 0

        row0 = lvl_c0[lev - 1] + cell
        bfirst = lvl_b0[lev - 1] + bstart_all[row0]
        blast = lvl_b0[lev - 1] + bstart_all[row0 + 1]
        for bi in range(bfirst, blast):
            b = bvert_all[bi]
            db = dist[b] if ver[b] == cur else INF
            if ver[b] != cur:
                ver[b] = cur
                dist[b] = INF
            touch_ver[b] = stamp
            touched = _grow_i32(touched, n_loc)
            touched[n_loc] = b
            n_loc += 1
            heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, db, b)

        while heap_size > 0:
            if heap_keys[0] > tau:
                break
            key, u, heap_size = _heap_pop(heap_keys, heap_vals, heap_size)
            if sweep_ver[u] == stamp or key > dist[u]:
                continue
            sweep_ver[u] = stamp
            settled_total += 1
            du = dist[u]
            lmax = bl[u]
            if lmax > lev - 1:
                lmax = lev - 1
            if lmax > 0:
                _settle_flags(
                    u, du, tau, lmax,
                    n, cells_ln, lvl_k0, lvl_b0, lvl_c0,
                    bstart_all, bvert_all, bpos_ln,
                    mat_off, mat_all, ecc_r_all, ecc_u_all,
                    pair_start, pair_pos, check_kind,
                    dist, ver, cur, i_flag, o_flag,
                )
            # original edges crossing exactly at level lev-1 (in-cell)
            for i in range(lf_cut[u * stride + lev], lf_cut[u * stride + lev - 1]):
                v = lf_head[i]
                nd = du + lf_w[i]
                dv = dist[v] if ver[v] == cur else INF
                if nd < dv:
                    dist[v] = nd
                    ver[v] = cur
                    if touch_ver[v] != stamp:
                        touch_ver[v] = stamp
                        touched = _grow_i32(touched, n_loc)
                        touched[n_loc] = v
                        n_loc += 1
                    if sweep_ver[v] != stamp:
                        heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, nd, v)
            if lev >= 2:
                # clique row of u's level-(lev-1) cell
                c2 = cells_ln[(lev - 2) * n + u]
                r2 = lvl_c0[lev - 2] + c2
                first2 = lvl_b0[lev - 2] + bstart_all[r2]
                bc2 = bstart_all[r2 + 1] - bstart_all[r2]
                off2 = mat_off[lvl_k0[lev - 2] + c2]
                il2 = bpos_ln[(lev - 2) * n + u] - first2
                for j in range(bc2):
                    w = mat_all[off2 + il2 * bc2 + j]
                    if w < INF:
                        v = bvert_all[first2 + j]
                        nd = du + w
                        dv = dist[v] if ver[v] == cur else INF
                        if nd < dv:
                            dist[v] = nd
                            ver[v] = cur
                            if touch_ver[v] != stamp:
                                touch_ver[v] = stamp
                                touched = _grow_i32(touched, n_loc)
                                touched[n_loc] = v
                                n_loc += 1
                            if sweep_ver[v] != stamp:
                                heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, nd, v)
            # queue out-of-range tails of in-cell incoming edges
            for i in range(lr_cut[u * stride + lev], lr_cut[u * stride + lev - 1]):
                t = lr_tail[i]
                dt = dist[t] if ver[t] == cur else INF
                if dt >= INF and touch_ver[t] != stamp:
                    ver[t] = cur
                    dist[t] = INF
                    touch_ver[t] = stamp
                    touched = _grow_i32(touched, n_loc)
                    touched[n_loc] = t
                    n_loc += 1
                    heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, INF, t)

        # emit isochrone edges among this cell's level-(lev-1) edges
        for ti in range(n_loc):
            qv = touched[ti]
            if sweep_ver[qv] == stamp:
                continue
            for i in range(lr_cut[qv * stride + lev], lr_cut[qv * stride + lev - 1]):
                t = lr_tail[i]
                if ver[t] == cur and dist[t] <= tau:
                    out_edges = _grow_i32(out_edges, n_out)
                    out_dirs = _grow_u8(out_dirs, n_out)
                    out_edges[n_out] = lr_eid[i]
                    out_dirs[n_out] = 0
                    n_out += 1
            for i in range(lf_cut[qv * stride + lev], lf_cut[qv * stride + lev - 1]):
                h = lf_head[i]
                if ver[h] == cur and dist[h] <= tau:
                    out_edges = _grow_i32(out_edges, n_out)
                    out_dirs = _grow_u8(out_dirs, n_out)
                    out_edges[n_out] = lf_eid[i]
                    out_dirs[n_out] = 1
                    n_out += 1

        if lev >= 2:
            r = lvl_c0[lev - 1] + cell
            for j in range(ch_start[r + 1] - 1, ch_start[r] - 1, -1):
                sc = ch_cell[j]
                ki = lvl_k0[lev - 2] + sc
                if i_flag[ki] == 1 and o_flag[ki] == 1:
                    if sp == stack_lev.shape[0]:
                        nl = np.empty(sp * 2, dtype=np.int64)
                        nc = np.empty(sp * 2, dtype=np.int64)
                        nl[:sp] = stack_lev
                        nc[:sp] = stack_cell
                        stack_lev, stack_cell = nl, nc
                    stack_lev[sp] = lev - 1
                    stack_cell[sp] = sc
                    sp += 1

    return out_edges, out_dirs, n_out, settled_total, swept_cells


@njit(**JIT)
def grasp_descend_kernel(
    root_level, root_cell,
    edge_tail, fwd_head,
    L, cells_ln, bl,
    lvl_k0, lvl_b0, lvl_c0,
    bstart_all, bvert_all, bpos_ln,
    mat_off, mat_all, ecc_r_all, ecc_u_all,
    pair_start, pair_pos,
    check_kind,
    # downward graph: per cell internal-vertex lists + incoming edges
    gcs_all, gverts_all, gestart_all, gsrc_all, glen_all,
    # scan lists per cell
    scs_all, sedge_all,
    ch_start, ch_cell,
    tau,
    dist, ver, cur,
    i_flag, o_flag,
):
    """Linear-sweep variant of the downward phase: label each active
    cell's internal vertices from incoming downward edges, then emit
    isochrone edges from the cell's scan list."""
    n = dist.shape[0]
    out_edges = np.empty(256, dtype=np.int32)
    out_dirs = np.empty(256, dtype=np.uint8)
    n_out = 0
    settled_total = 0
    swept_cells = 0

    stack_lev = np.empty(64, dtype=np.int64)
    stack_cell = np.empty(64, dtype=np.int64)
    sp = 0
    stack_lev[sp] = root_level
    stack_cell[sp] = root_cell
    sp += 1

    while sp > 0:
        sp -= 1
        lev = stack_lev[sp]
        cell = stack_cell[sp]
        swept_cells += 1
        row = lvl_c0[lev - 1] + cell
        # label sweep over internal vertices (ascending order)
        for gi in range(gcs_all[row], gcs_all[row + 1]):
            v = gverts_all[gi]
            best = INF
            for ei in range(gestart_all[gi], gestart_all[gi + 1]):
                b = gsrc_all[ei]
                db = dist[b] if ver[b] == cur else INF
                nd = _sat_add(db, glen_all[ei])
                if nd < best:
                    best = nd
            dist[v] = best
            ver[v] = cur
            settled_total += 1
            if best <= tau and lev >= 2:
                _settle_flags(
                    v, best, tau, lev - 1,
                    n, cells_ln, lvl_k0, lvl_b0, lvl_c0,
                    bstart_all, bvert_all, bpos_ln,
                    mat_off, mat_all, ecc_r_all, ecc_u_all,
                    pair_start, pair_pos, check_kind,
                    dist, ver, cur, i_flag, o_flag,
                )
        # second sweep: emit straddling edges owned by this cell
        out_edges, out_dirs, n_out = scan_edge_list(
            sedge_all, scs_all[row], scs_all[row + 1],
            edge_tail, fwd_head, dist, ver, cur, tau,
            out_edges, out_dirs, n_out,
        )
        if lev >= 2:
            for j in range(ch_start[row + 1] - 1, ch_start[row] - 1, -1):
                sc = ch_cell[j]
                ki = lvl_k0[lev - 2] + sc
                if i_flag[ki] == 1 and o_flag[ki] == 1:
                    if sp == stack_lev.shape[0]:
                        nl = np.empty(sp * 2, dtype=np.int64)
                        nc = np.empty(sp * 2, dtype=np.int64)
                        nl[:sp] = stack_lev
                        nc[:sp] = stack_cell
                        stack_lev, stack_cell = nl, nc
                    stack_lev[sp] = lev - 1
                    stack_cell[sp] = sc
                    sp += 1

    return out_edges, out_dirs, n_out, settled_total, swept_cells


@njit(cache=True, parallel=True)
def customize_level_kernel(
    level, n, L,
    cells_ln,
    fwd_index, lf_head, lf_w, lf_cut,
    # this level
    k_l, bstart_l, bvert_l, mat_off_l, subcount_l, ecc_base,
    # previous level overlay (used when level >= 2)
    lvl_k0, lvl_b0, lvl_c0, bstart_all, bvert_all, bpos_ln, mat_off, mat_all,
    # outputs
    mat_all_out, ecc_r_all, ecc_u_all,
    # scratch, one row per thread
    sdist, sver, scounter,
):
    """Fill one overlay level: per-cell boundary-to-boundary clique rows
    plus restricted and unrestricted-bound eccentricity columns.

    Each boundary Dijkstra runs to queue exhaustion on the cell's
    level-(level-1) search graph (original edges at level 1, subcell
    cliques plus crossing edges above)."""
    stride = L + 2
    for c in prange(k_l):
        tid = get_thread_id()
        dist = sdist[tid]
        dver = sver[tid]
        first = bstart_l[c]
        last = bstart_l[c + 1]
        bc = last - first
        off = mat_off_l[c]
        for src_i in range(first, last):
            scounter[tid] += 1
            run = scounter[tid]
            src = bvert_l[src_i]
            heap_keys = np.empty(256, dtype=np.int64)
            heap_vals = np.empty(256, dtype=np.int32)
            heap_size = 0
            dist[src] = 0
            dver[src] = run
            heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, 0, src)
            reached = 0
            ecc_r = np.int64(0)
            ecc_u = np.int64(0)
            while heap_size > 0:
                key, u, heap_size = _heap_pop(heap_keys, heap_vals, heap_size)
                if key > dist[u] or dver[u] != run:
                    continue
                if dist[u] < 0:
                    continue  # settled marker
                dist[u] = -dist[u] - 1  # mark settled, keep value
                reached += 1
                du = key
                if level == 1:
                    if du > ecc_r:
                        ecc_r = du
                    if du > ecc_u:
                        ecc_u = du
                else:
                    p = bpos_ln[(level - 2) * n + u]
                    er = _sat_add(du, ecc_r_all[p])
                    if er < INF and er > ecc_r:
                        ecc_r = er
                    eu = _sat_add(du, ecc_u_all[p])
                    if eu > ecc_u:
                        ecc_u = eu
                # original edges crossing exactly at level-1
                for i in range(lf_cut[u * stride + level], lf_cut[u * stride + level - 1]):
                    v = lf_head[i]
                    nd = du + lf_w[i]
                    if dver[v] != run:
                        dver[v] = run
                        dist[v] = nd
                        heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, nd, v)
                    elif dist[v] >= 0 and nd < dist[v]:
                        dist[v] = nd
                        heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, nd, v)
                if level >= 2:
                    c2 = cells_ln[(level - 2) * n + u]
                    r2 = lvl_c0[level - 2] + c2
                    first2 = lvl_b0[level - 2] + bstart_all[r2]
                    bc2 = bstart_all[r2 + 1] - bstart_all[r2]
                    off2 = mat_off[lvl_k0[level - 2] + c2]
                    il2 = bpos_ln[(level - 2) * n + u] - first2
                    for j in range(bc2):
                        w = mat_all[off2 + il2 * bc2 + j]
                        if w < INF:
                            v = bvert_all[first2 + j]
                            nd = du + w
                            if dver[v] != run:
                                dver[v] = run
                                dist[v] = nd
                                heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, nd, v)
                            elif dist[v] >= 0 and nd < dist[v]:
                                dist[v] = nd
                                heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, nd, v)
            il = src_i - first
            for j in range(bc):
                t = bvert_l[first + j]
                if dver[t] == run and dist[t] < 0:
                    mat_all_out[off + il * bc + j] = -dist[t] - 1
                else:
                    mat_all_out[off + il * bc + j] = INF
            ecc_r_all[ecc_base + src_i] = ecc_r
            if reached < subcount_l[c]:
                ecc_u_all[ecc_base + src_i] = INF
            else:
                ecc_u_all[ecc_base + src_i] = ecc_u


@njit(cache=True, parallel=True)
def grasp_collect_kernel(
    level, n, L,
    cells_ln,
    fwd_index, lf_head, lf_w, lf_cut,
    k_l, bstart_l, bvert_l,
    gcs_l, gverts_all, gidx_of,  # internal lists of this level; gidx_of: local col of v
    raw_off, raw,  # per-cell b_c x icount matrices (flat)
    lvl_k0, lvl_b0, lvl_c0, bstart_all, bvert_all, bpos_ln, mat_off, mat_all,
    sdist, sver, scounter,
):
    """Restricted distances from every cell boundary vertex to the cell's
    internal vertices (downward-edge raw lengths)."""
    stride = L + 2
    for c in prange(k_l):
        tid = get_thread_id()
        dist = sdist[tid]
        dver = sver[tid]
        first = bstart_l[c]
        last = bstart_l[c + 1]
        icount = gcs_l[c + 1] - gcs_l[c]
        if icount == 0:
            continue
        for src_i in range(first, last):
            scounter[tid] += 1
            run = scounter[tid]
            src = bvert_l[src_i]
            heap_keys = np.empty(256, dtype=np.int64)
            heap_vals = np.empty(256, dtype=np.int32)
            heap_size = 0
            dist[src] = 0
            dver[src] = run
            heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, 0, src)
            base = raw_off[c] + (src_i - first) * icount
            for j in range(icount):
                raw[base + j] = INF
            while heap_size > 0:
                key, u, heap_size = _heap_pop(heap_keys, heap_vals, heap_size)
                if key > dist[u] or dver[u] != run:
                    continue
                if dist[u] < 0:
                    continue
                dist[u] = -dist[u] - 1
                du = key
                gj = gidx_of[u]
                if gj >= 0:
                    raw[base + gj] = du
                for i in range(lf_cut[u * stride + level], lf_cut[u * stride + level - 1]):
                    v = lf_head[i]
                    nd = du + lf_w[i]
                    if dver[v] != run:
                        dver[v] = run
                        dist[v] = nd
                        heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, nd, v)
                    elif dist[v] >= 0 and nd < dist[v]:
                        dist[v] = nd
                        heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, nd, v)
                if level >= 2:
                    c2 = cells_ln[(level - 2) * n + u]
                    r2 = lvl_c0[level - 2] + c2
                    first2 = lvl_b0[level - 2] + bstart_all[r2]
                    bc2 = bstart_all[r2 + 1] - bstart_all[r2]
                    off2 = mat_off[lvl_k0[level - 2] + c2]
                    il2 = bpos_ln[(level - 2) * n + u] - first2
                    for j in range(bc2):
                        w = mat_all[off2 + il2 * bc2 + j]
                        if w < INF:
                            v = bvert_all[first2 + j]
                            nd = du + w
                            if dver[v] != run:
                                dver[v] = run
                                dist[v] = nd
                                heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, nd, v)
                            elif dist[v] >= 0 and nd < dist[v]:
                                dist[v] = nd
                                heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, nd, v)


@njit(cache=True, parallel=True)
def grasp_reduce_kernel(k_l, bstart_l, gcs_l, raw_off, raw, mat_off_l, mat_all,
                        keep):
    """Downward-edge reduction: drop (b_i, v) when it is matched or beaten
    via another boundary vertex (ties break toward the lower row, so a
    zero-length cycle keeps exactly one witness)."""
    for c in prange(k_l):
        bc = bstart_l[c + 1] - bstart_l[c]
        icount = gcs_l[c + 1] - gcs_l[c]
        if icount == 0:
            continue
        off = raw_off[c]
        moff = mat_off_l[c]
        for i in range(bc):
            for j in range(icount):
                dij = raw[off + i * icount + j]
                if dij >= INF:
                    keep[off + i * icount + j] = 0
                    continue
                kp = 1
                for i2 in range(bc):
                    if i2 == i:
                        continue
                    w = mat_all[moff + i * bc + i2]
                    if w >= INF:
                        continue
                    alt = w + raw[off + i2 * icount + j]
                    if alt < dij or (alt == dij and i2 < i):
                        kp = 0
                        break
                keep[off + i * icount + j] = kp


@njit(**JIT)
def refine_ecc_kernel(
    level, n, mode_all, use_clique_shortcut,
    cells_ln,
    fwd_index, fwd_head, fwd_weight,
    k_l, bstart_l, bvert_l, member_count_l, ecc_base,
    lvl_b0, lvl_c0, mat_off_l, mat_all,
    ecc_u_all,
    dist, dver, counter,
):
    """Replace unrestricted-bound eccentricities by running unbounded
    Dijkstra searches on the full graph, aborted once every cell member
    has been settled.  mode_all refines every boundary vertex, otherwise
    only those currently at INF; use_clique_shortcut first tries
    len(u,v) + ecc(v) over outgoing finite clique entries."""
    lvl = level - 1
    for c in range(k_l):
        first = bstart_l[c]
        last = bstart_l[c + 1]
        bc = last - first
        moff = mat_off_l[c]
        for src_i in range(first, last):
            cur_e = ecc_u_all[ecc_base + src_i]
            if not mode_all and cur_e < INF:
                continue
            if use_clique_shortcut:
                best = INF
                il = src_i - first
                for j in range(bc):
                    w = mat_all[moff + il * bc + j]
                    if w < INF:
                        e2 = ecc_u_all[ecc_base + first + j]
                        if e2 < INF and w + e2 < best:
                            best = w + e2
                if best < INF:
                    ecc_u_all[ecc_base + src_i] = best
                    continue
            src = bvert_l[src_i]
            counter[0] += 1
            run = counter[0]
            heap_keys = np.empty(1024, dtype=np.int64)
            heap_vals = np.empty(1024, dtype=np.int32)
            heap_size = 0
            dist[src] = 0
            dver[src] = run
            heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, 0, src)
            remaining = member_count_l[c]
            ecc = np.int64(0)
            while heap_size > 0 and remaining > 0:
                key, u, heap_size = _heap_pop(heap_keys, heap_vals, heap_size)
                if dver[u] != run or key > dist[u]:
                    continue
                if dist[u] < 0:
                    continue
                dist[u] = -dist[u] - 1
                if cells_ln[lvl * n + u] == c:
                    remaining -= 1
                    ecc = key
                for i in range(fwd_index[u], fwd_index[u + 1]):
                    v = fwd_head[i]
                    nd = key + fwd_weight[i]
                    if dver[v] != run:
                        dver[v] = run
                        dist[v] = nd
                        heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, nd, v)
                    elif dist[v] >= 0 and nd < dist[v]:
                        dist[v] = nd
                        heap_keys, heap_vals, heap_size = _heap_push(heap_keys, heap_vals, heap_size, nd, v)
            ecc_u_all[ecc_base + src_i] = ecc if remaining == 0 else INF

@njit(**JIT)
def grasp_sweep_rows_kernel(
    rows,
    gcs_all, gverts_all, gestart_all, gsrc_all, glen_all,
    dist, ver, cur,
):
    """Unconditional label sweeps over the given cell rows (top level
    first); used for one-to-all reconstruction."""
    count = 0
    for ri in range(rows.shape[0]):
        row = rows[ri]
        for gi in range(gcs_all[row], gcs_all[row + 1]):
            v = gverts_all[gi]
            best = INF
            for ei in range(gestart_all[gi], gestart_all[gi + 1]):
                b = gsrc_all[ei]
                db = dist[b] if ver[b] == cur else INF
                nd = _sat_add(db, glen_all[ei])
                if nd < best:
                    best = nd
            dist[v] = best
            ver[v] = cur
            count += 1
    return count

@njit(**JIT)
def scan_touched_kernel(
    touched, n_touched,
    fwd_index, fwd_head, rev_index, rev_tail, rev_edge_id,
    edge_home, anc_rows, top_row,
    tau, dist, ver, cur,
):
    """Emit top- and ancestor-owned straddling edges by scanning the
    incident edges of every in-range vertex the upward phase touched.
    An isochrone edge has exactly one in-range endpoint, so emitting
    from that endpoint reports each edge once."""
    out_edges = np.empty(256, dtype=np.int32)
    out_dirs = np.empty(256, dtype=np.uint8)
    n_out = 0
    L1 = anc_rows.shape[0]
    for ti in range(n_touched):
        v = touched[ti]
        if ver[v] != cur or dist[v] > tau:
            continue
        for i in range(fwd_index[v], fwd_index[v + 1]):
            h = fwd_head[i]
            if ver[h] == cur and dist[h] <= tau:
                continue
            row = edge_home[i]
            ok = row == top_row
            if not ok:
                for a in range(L1):
                    if row == anc_rows[a]:
                        ok = True
                        break
            if ok:
                out_edges = _grow_i32(out_edges, n_out)
                out_dirs = _grow_u8(out_dirs, n_out)
                out_edges[n_out] = i
                out_dirs[n_out] = 0
                n_out += 1
        for i in range(rev_index[v], rev_index[v + 1]):
            t = rev_tail[i]
            if ver[t] == cur and dist[t] <= tau:
                continue
            e = rev_edge_id[i]
            row = edge_home[e]
            ok = row == top_row
            if not ok:
                for a in range(L1):
                    if row == anc_rows[a]:
                        ok = True
                        break
            if ok:
                out_edges = _grow_i32(out_edges, n_out)
                out_dirs = _grow_u8(out_dirs, n_out)
                out_edges[n_out] = e
                out_dirs[n_out] = 1
                n_out += 1
    return out_edges, out_dirs, n_out
