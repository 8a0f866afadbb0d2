"""Low-level jitted primitives: growable binary heap, baseline searches.

All kernels are integer-only, release the GIL, and use versioned label
arrays so query state resets in O(1).
"""

from __future__ import annotations

import numpy as np
from numba import njit

INF = np.int64(2**62)

# state codes (valid only when ver[v] == cur)
ST_QUEUED = np.uint8(1)
ST_SETTLED = np.uint8(2)

JIT = dict(cache=True, nogil=True)


@njit(**JIT)
def _heap_push(keys, vals, size, key, val):
    """Push onto a binary min-heap, growing the arrays if needed.

    Returns (keys, vals, size).  Callers must rebind all three.
    """
    if size == keys.shape[0]:
        nk = np.empty(keys.shape[0] * 2, dtype=np.int64)
        nv = np.empty(vals.shape[0] * 2, dtype=np.int32)
        nk[:size] = keys
        nv[:size] = vals
        keys, vals = nk, nv
    i = size
    keys[i] = key
    vals[i] = val
    size += 1
    while i > 0:
        p = (i - 1) >> 1
        if keys[p] <= keys[i]:
            break
        keys[p], keys[i] = keys[i], keys[p]
        vals[p], vals[i] = vals[i], vals[p]
        i = p
    return keys, vals, size


@njit(**JIT)
def _heap_pop(keys, vals, size):
    """Pop the minimum. Returns (key, val, size)."""
    key = keys[0]
    val = vals[0]
    size -= 1
    if size > 0:
        keys[0] = keys[size]
        vals[0] = vals[size]
        i = 0
        while True:
            l = 2 * i + 1
            if l >= size:
                break
            r = l + 1
            c = l
            if r < size and keys[r] < keys[l]:
                c = r
            if keys[i] <= keys[c]:
                break
            keys[i], keys[c] = keys[c], keys[i]
            vals[i], vals[c] = vals[c], vals[i]
            i = c
    return key, val, size


@njit(**JIT)
def _grow_i32(arr, size):
    if size == arr.shape[0]:
        na = np.empty(arr.shape[0] * 2, dtype=np.int32)
        na[:size] = arr
        return na
    return arr


@njit(**JIT)
def _grow_u8(arr, size):
    if size == arr.shape[0]:
        na = np.empty(arr.shape[0] * 2, dtype=np.uint8)
        na[:size] = arr
        return na
    return arr


@njit(**JIT)
def iso_dijkstra_kernel(
    fwd_index, fwd_head, fwd_weight,
    rev_index, rev_tail, rev_weight, rev_edge_id,
    source, tau,
    dist, state, ver, cur,
    touched,
):
    """Baseline isochrone search on the full graph.

    Runs Dijkstra from `source`, stopping once the minimum queue key
    exceeds tau.  While settling u, tails of incoming edges that are
    still unlabeled are inserted with key INF so that both kinds of
    isochrone edges end up in the queue.  The final sweep over queued
    vertices emits edges with exactly one endpoint in range.

    Returns (edge_ids, dirs, n_edges, settled, n_touched).
    dirs: 0 = in_out (tail in range), 1 = out_in.
    """
    heap_keys = np.empty(1024, dtype=np.int64)
    heap_vals = np.empty(1024, dtype=np.int32)
    heap_size = 0
    n_touched = 0
    settled = 0

    dist[source] = 0
    state[source] = ST_QUEUED
    ver[source] = cur
    touched[n_touched] = source
    n_touched += 1
    heap_keys, heap_vals, heap_size = _heap_push(
        heap_keys, heap_vals, heap_size, 0, source
    )

    while heap_size > 0:
        key = heap_keys[0]
        if key > tau:
            break
        key, u, heap_size = _heap_pop(heap_keys, heap_vals, heap_size)
        if state[u] == ST_SETTLED or key > dist[u]:
            continue
        state[u] = ST_SETTLED
        settled += 1
        du = dist[u]
        for i in range(fwd_index[u], fwd_index[u + 1]):
            v = fwd_head[i]
            nd = du + fwd_weight[i]
            if ver[v] != cur:
                ver[v] = cur
                state[v] = ST_QUEUED
                dist[v] = nd
                touched[n_touched] = v
                n_touched += 1
                heap_keys, heap_vals, heap_size = _heap_push(
                    heap_keys, heap_vals, heap_size, nd, v
                )
            elif nd < dist[v]:
                dist[v] = nd
                heap_keys, heap_vals, heap_size = _heap_push(
                    heap_keys, heap_vals, heap_size, nd, v
                )
        for i in range(rev_index[u], rev_index[u + 1]):
            v = rev_tail[i]
            if ver[v] != cur:
                ver[v] = cur
                state[v] = ST_QUEUED
                dist[v] = INF
                touched[n_touched] = v
                n_touched += 1
                # key INF: never popped (tau < INF), kept for the sweep
                heap_keys, heap_vals, heap_size = _heap_push(
                    heap_keys, heap_vals, heap_size, INF, v
                )

    out_edges = np.empty(256, dtype=np.int32)
    out_dirs = np.empty(256, dtype=np.uint8)
    n_out = 0
    for t in range(n_touched):
        q = touched[t]
        if state[q] == ST_SETTLED:
            continue
        # q is out of range; incoming edges from in-range tails
        for i in range(rev_index[q], rev_index[q + 1]):
            u = rev_tail[i]
            if ver[u] == cur and state[u] == ST_SETTLED and dist[u] <= tau:
                out_edges = _grow_i32(out_edges, n_out)
                out_dirs = _grow_u8(out_dirs, n_out)
                out_edges[n_out] = rev_edge_id[i]
                out_dirs[n_out] = 0
                n_out += 1
        # outgoing edges to in-range heads
        for i in range(fwd_index[q], fwd_index[q + 1]):
            w = fwd_head[i]
            if ver[w] == cur and state[w] == ST_SETTLED and dist[w] <= tau:
                out_edges = _grow_i32(out_edges, n_out)
                out_dirs = _grow_u8(out_dirs, n_out)
                out_edges[n_out] = i
                out_dirs[n_out] = 1
                n_out += 1
    return out_edges, out_dirs, n_out, settled, n_touched


@njit(**JIT)
def dijkstra_all_kernel(fwd_index, fwd_head, fwd_weight, source, dist):
    """Plain one-to-all Dijkstra; fills dist (pre-set to INF)."""
    n = dist.shape[0]
    heap_keys = np.empty(1024, dtype=np.int64)
    heap_vals = np.empty(1024, dtype=np.int32)
    heap_size = 0
    done = np.zeros(n, dtype=np.uint8)
    dist[source] = 0
    heap_keys, heap_vals, heap_size = _heap_push(
        heap_keys, heap_vals, heap_size, 0, source
    )
    while heap_size > 0:
        key, u, heap_size = _heap_pop(heap_keys, heap_vals, heap_size)
        if done[u]:
            continue
        done[u] = 1
        for i in range(fwd_index[u], fwd_index[u + 1]):
            v = fwd_head[i]
            nd = key + fwd_weight[i]
            if nd < dist[v]:
                dist[v] = nd
                heap_keys, heap_vals, heap_size = _heap_push(
                    heap_keys, heap_vals, heap_size, nd, v
                )
    return dist
