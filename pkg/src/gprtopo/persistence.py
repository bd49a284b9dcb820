"""Persistent homology of cubical sublevel filtrations over Z/2.

Three interchangeable engines produce the same pairing:

``"standard"``
    Textbook left-to-right column reduction of the boundary matrix.
``"twist"``
    The same reduction with clearing: square columns first, and edge columns
    that are already pivots of a square are zeroed without work.
``"unionfind"`` (default)
    Compiled elder-rule union-find for H0 and its dual over squares for H1.
    In a planar grid the reduced column of a square is always the boundary
    of the dual component it closes, so representative cycles match the
    reductions exactly. This is the only engine fast enough for full B-scans.

For a dim-1 pair the representative cycle is the reduced column of the
square that kills it.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import _kernels
from .cubical import ORIENTATION_NAMES, FilteredComplex, check_complex

METHODS = ("unionfind", "standard", "twist")


class PersistencePair(NamedTuple):
    dim: int
    birth: float
    death: float
    birth_cell: int
    death_cell: int | None = None
    rep_cycle: tuple[int, ...] = ()

    @property
    def essential(self) -> bool:
        return self.death_cell is None

    @property
    def lifetime(self) -> float:
        return lifetime(self)


@dataclass(frozen=True)
class PersistenceDiagram:
    pairs: tuple[PersistencePair, ...]
    source_dims: tuple[int, int]
    includes_zero_persistence: bool = False

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def of_dim(self, dim: int) -> list[PersistencePair]:
        return [p for p in self.pairs if p.dim == dim]


def lifetime(p: PersistencePair) -> float:
    """``death - birth``; infinite for essential classes."""
    if p.death_cell is None or math.isinf(p.death):
        return math.inf
    return p.death - p.birth


def filter_by_lifetime(d: PersistenceDiagram, min_lifetime: float) -> PersistenceDiagram:
    if min_lifetime < 0:
        raise ValueError("min_lifetime must be non-negative")
    kept = tuple(p for p in d.pairs if p.essential or lifetime(p) >= min_lifetime)
    return replace(d, pairs=kept)


def betti_curve(d: PersistenceDiagram, dim: int, eps: float) -> int:
    """Number of ``dim``-classes alive at ``eps`` (``birth <= eps < death``)."""
    return sum(1 for p in d.pairs if p.dim == dim and p.birth <= eps < p.death)


# ---------------------------------------------------------------- engines


def compute_persistence(c: FilteredComplex, method: str = "unionfind",
                        include_zero_persistence: bool = False,
                        validate: bool = True) -> PersistenceDiagram:
    """Persistence diagram of the filtered complex ``c``.

    Pairs are ordered by dimension, then by filtration position of the
    birth cell. Zero-persistence pairs (birth == death) are dropped unless
    ``include_zero_persistence`` is set.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    if validate:
        check_complex(c)
    if method == "unionfind":
        raw = _pairs_unionfind(c, include_zero_persistence)
    else:
        raw = _pairs_reduction(c, twist=(method == "twist"))
    raw.sort(key=lambda r: (r[0], r[1]))
    values = c.values.tolist()
    ids = c.ids.tolist()
    pairs = []
    for dim, i, j, cycle in raw:
        birth = values[i]
        death = math.inf if j < 0 else values[j]
        if not include_zero_persistence and death == birth:
            continue
        rep = tuple(np.sort(c.ids[np.asarray(cycle, dtype=np.int64)]).tolist()) if dim == 1 else ()
        pairs.append(PersistencePair(dim, birth, death, ids[i],
                                     None if j < 0 else ids[j], rep))
    return PersistenceDiagram(tuple(pairs), c.source_dims, include_zero_persistence)


def _pairs_unionfind(c: FilteredComplex, include_zero: bool):
    dims = np.ascontiguousarray(c.dims)
    kill0, positive = _kernels.pair_components(dims, c.faces)
    kill1, merged_into = _kernels.pair_loops(dims, c.cofaces)
    if not np.array_equal(positive, kill1 >= 0):
        raise RuntimeError("loop pairing inconsistent with component pairing")

    out = []
    verts = np.flatnonzero(dims == 0)
    for v in verts[kill0[verts] < 0]:
        out.append((0, int(v), -1, ()))
    dying = verts[kill0[verts] >= 0]
    if not include_zero:
        dying = dying[c.values[kill0[dying]] > c.values[dying]]
    for v in dying:
        out.append((0, int(v), int(kill0[v]), ()))

    edges = np.flatnonzero(kill1 >= 0)
    if not include_zero:
        edges = edges[c.values[kill1[edges]] > c.values[edges]]
    squares = kill1[edges]
    offsets, cyc = _kernels.region_boundaries(merged_into, c.faces, squares)
    for k, e in enumerate(edges):
        out.append((1, int(e), int(squares[k]), cyc[offsets[k]:offsets[k + 1]]))
    return out


def _bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def _pairs_reduction(c: FilteredComplex, twist: bool):
    """Z/2 column reduction with Python ints as bit-set columns."""
    n = len(c)
    dims = c.dims
    boundary = [0] * n
    for k in range(n):
        col = 0
        for f in c.faces[k]:
            if f >= 0:
                col |= 1 << int(f)
        boundary[k] = col

    if twist:
        order = [int(k) for d in (2, 1) for k in np.flatnonzero(dims == d)]
    else:
        order = range(n)

    pivot_col = {}  # low row -> column that owns it
    reduced = {}
    for j in order:
        if twist and j in pivot_col:
            continue  # cleared: this edge already births a loop
        col = boundary[j]
        while col:
            k = pivot_col.get(col.bit_length() - 1)
            if k is None:
                break
            col ^= reduced[k]
        if col:
            pivot_col[col.bit_length() - 1] = j
            reduced[j] = col

    out = []
    for i, j in pivot_col.items():
        cycle = list(_bits(reduced[j])) if dims[j] == 2 else ()
        out.append((int(dims[i]), i, j, cycle))
    for k in range(n):
        if k not in reduced and k not in pivot_col:
            out.append((int(dims[k]), k, -1, ()))
    return out


# ---------------------------------------------------------------- export


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


def write_diagram_csv(d: PersistenceDiagram, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["dim", "birth", "death", "lifetime", "n_cycle_edges"])
        for p in d.pairs:
            wr.writerow([p.dim, _fmt(p.birth), _fmt(p.death), _fmt(lifetime(p)),
                         len(p.rep_cycle)])


def read_diagram_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["dim"] = int(r["dim"])
        for k in ("birth", "death", "lifetime"):
            r[k] = float(r[k])
        r["n_cycle_edges"] = int(r["n_cycle_edges"])
    return rows


def write_cycles_csv(d: PersistenceDiagram, c: FilteredComplex, path) -> None:
    """One row per representative-cycle edge: pair index, (row, col, orientation)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["pair", "birth", "death", "row", "col", "orientation"])
        for idx, p in enumerate(d.pairs):
            for e in p.rep_cycle:
                cube = c.by_id(e)
                wr.writerow([idx, _fmt(p.birth), _fmt(p.death), cube.row, cube.col,
                             ORIENTATION_NAMES[cube.orientation]])


def cycle_boundary(c: FilteredComplex, edge_ids) -> set[int]:
    """Vertex ids touched an odd number of times by ``edge_ids``."""
    odd = set()
    for e in edge_ids:
        for v in c.face_ids(int(c.position[e])):
            odd ^= {v}
    return odd
