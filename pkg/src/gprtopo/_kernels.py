"""Compiled union-find kernels for persistence on 2D cubical complexes.

All arrays are indexed by filtration position. Roots are kept at the
elder cell of each component so the elder rule is a single comparison.
"""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True, nogil=True)
def pair_components(dims, faces):
    """Elder-rule pairing of vertices with the edges that merge them.

    Returns ``(killer, positive)``: ``killer[v]`` is the edge position that
    kills vertex ``v`` (-1 if it never dies) and ``positive[e]`` marks edges
    that close a loop.
    """
    n = dims.shape[0]
    parent = np.arange(n)
    killer = np.full(n, -1, dtype=np.int64)
    positive = np.zeros(n, dtype=np.bool_)
    for p in range(n):
        if dims[p] != 1:
            continue
        a = _find(parent, faces[p, 0])
        b = _find(parent, faces[p, 1])
        if a == b:
            positive[p] = True
        elif a < b:
            parent[b] = a
            killer[b] = p
        else:
            parent[a] = b
            killer[a] = p
    return killer, positive


@njit(cache=True, nogil=True)
def pair_loops(dims, cofaces):
    """Pair loop-creating edges with the squares that fill them.

    Sweeps the filtration backwards over the dual graph (squares plus one
    exterior node, position ``n``). An edge joining two dual components
    creates the loop bounding the younger one, i.e. the component whose
    latest square comes first; that square kills it.

    Returns ``(killer, merged_into)``: ``killer[e]`` is the square killing
    edge ``e`` (-1 otherwise), ``merged_into[s]`` the root absorbing square
    ``s`` when its component dies.
    """
    n = dims.shape[0]
    ext = n
    parent = np.arange(n + 1)
    killer = np.full(n, -1, dtype=np.int64)
    merged_into = np.full(n, -1, dtype=np.int64)
    for p in range(n - 1, -1, -1):
        if dims[p] != 1:
            continue
        a = cofaces[p, 0]
        b = cofaces[p, 1]
        a = ext if a < 0 else _find(parent, a)
        b = ext if b < 0 else _find(parent, b)
        if a == b:
            continue
        if a < b:
            young, old = a, b
        else:
            young, old = b, a
        parent[young] = old
        killer[p] = young
        merged_into[young] = old
    return killer, merged_into


@njit(cache=True, nogil=True)
def region_boundaries(merged_into, faces, targets):
    """Mod-2 boundary of the dual component each target square closes.

    The component of square ``j`` at its death is ``j`` plus everything
    that merged into it earlier, recursively. Returns ``(offsets, edges)``
    in CSR form, edges as positions.
    """
    n = merged_into.shape[0]
    counts = np.zeros(n + 2, dtype=np.int64)
    for k in range(n):
        if merged_into[k] >= 0:
            counts[merged_into[k] + 1] += 1
    child_off = np.cumsum(counts)
    fill = child_off.copy()
    children = np.empty(child_off[-1], dtype=np.int64)
    for k in range(n):
        m = merged_into[k]
        if m >= 0:
            children[fill[m]] = k
            fill[m] += 1

    parity = np.zeros(n, dtype=np.uint8)
    stamp = np.zeros(n, dtype=np.int64)
    touched = np.empty(n, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    offsets = np.zeros(targets.shape[0] + 1, dtype=np.int64)
    out = np.empty(max(16, 4 * targets.shape[0]), dtype=np.int64)
    size = 0
    for t in range(targets.shape[0]):
        top = 1
        stack[0] = targets[t]
        nt = 0
        while top > 0:
            top -= 1
            s = stack[top]
            for f in range(4):
                e = faces[s, f]
                if stamp[e] != t + 1:
                    stamp[e] = t + 1
                    touched[nt] = e
                    nt += 1
                parity[e] ^= 1
            for q in range(child_off[s], child_off[s + 1]):
                stack[top] = children[q]
                top += 1
        for q in range(nt):
            e = touched[q]
            if parity[e]:
                if size == out.shape[0]:
                    grown = np.empty(2 * size, dtype=np.int64)
                    grown[:size] = out
                    out = grown
                out[size] = e
                size += 1
                parity[e] = 0
        offsets[t + 1] = size
    return offsets, out[:size]
