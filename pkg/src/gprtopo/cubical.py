"""Sublevel-set cubical complexes of grayscale images.

One vertex per pixel, an edge between every pair of 4-neighbors and a unit
square over every 2x2 block. Vertices carry the pixel intensity; edges and
squares the max over their vertices, so a cell enters the filtration once all
its pixels are below the threshold.

Cube ids are dense and row-major within each block::

    vertex (r, c)           r*w + c
    horizontal edge (r, c)  V + r*(w-1) + c          joins (r, c)-(r, c+1)
    vertical edge (r, c)    V + H + r*w + c          joins (r, c)-(r+1, c)
    square (r, c)           V + E + r*(w-1) + c      over rows r..r+1, cols c..c+1
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .image import GrayImage

NONE, HORIZONTAL, VERTICAL = 0, 1, 2
ORIENTATION_NAMES = ("none", "horizontal", "vertical")


class Cube(NamedTuple):
    id: int
    dim: int
    row: int
    col: int
    orientation: int
    value: float


@dataclass(frozen=True, eq=False)
class FilteredComplex:
    """All cells of an image, stored in filtration order.

    Arrays are indexed by filtration position ``k`` (cells sorted by
    ``(value, dim, id)``). ``faces[k]`` lists the positions of the
    codimension-1 faces of cell ``k`` (padded with -1) and ``cofaces[k]``
    the positions of the squares on either side of an edge (-1 where the
    edge lies on the image border).
    """

    width: int
    height: int
    ids: np.ndarray
    dims: np.ndarray
    values: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    orientation: np.ndarray
    faces: np.ndarray
    cofaces: np.ndarray
    position: np.ndarray  # cube id -> filtration position

    def __len__(self):
        return len(self.ids)

    @property
    def source_dims(self) -> tuple[int, int]:
        return (self.width, self.height)

    def counts(self) -> tuple[int, int, int]:
        return tuple(int(np.count_nonzero(self.dims == d)) for d in range(3))

    def cell(self, k: int) -> Cube:
        return Cube(int(self.ids[k]), int(self.dims[k]), int(self.rows[k]),
                    int(self.cols[k]), int(self.orientation[k]), float(self.values[k]))

    def face_ids(self, k: int) -> list[int]:
        return [int(self.ids[f]) for f in self.faces[k] if f >= 0]

    def by_id(self, cube_id: int) -> Cube:
        return self.cell(int(self.position[cube_id]))

    def edge_vertices(self, edge_ids) -> np.ndarray:
        """``(n, 2, 2)`` array of the (row, col) endpoints of the given edges."""
        pos = self.position[np.asarray(edge_ids, dtype=np.int64)]
        r, c, o = self.rows[pos], self.cols[pos], self.orientation[pos]
        r2 = r + (o == VERTICAL)
        c2 = c + (o == HORIZONTAL)
        return np.stack([np.stack([r, c], -1), np.stack([r2, c2], -1)], 1)


def build_sublevel_complex(img: GrayImage) -> FilteredComplex:
    """Cubical complex of ``img`` with lower-star (max) cell values."""
    px = img.pixels
    h, w = px.shape
    n_v = h * w
    n_h = h * (w - 1)
    n_vert = (h - 1) * w
    n_e = n_h + n_vert
    n_f = (h - 1) * (w - 1)
    n = n_v + n_e + n_f

    vid = np.arange(n_v).reshape(h, w)
    hid = n_v + np.arange(n_h).reshape(h, w - 1)
    veid = n_v + n_h + np.arange(n_vert).reshape(h - 1, w)
    sid = n_v + n_e + np.arange(n_f).reshape(h - 1, w - 1)

    dims = np.empty(n, dtype=np.int8)
    values = np.empty(n)
    rows = np.empty(n, dtype=np.int64)
    cols = np.empty(n, dtype=np.int64)
    orient = np.zeros(n, dtype=np.int8)
    faces = np.full((n, 4), -1, dtype=np.int64)
    cofaces = np.full((n, 2), -1, dtype=np.int64)
    rr, cc = np.indices((h, w))

    dims[vid] = 0
    values[vid] = px
    rows[vid], cols[vid] = rr, cc

    dims[hid] = 1
    values[hid] = np.maximum(px[:, :-1], px[:, 1:])
    rows[hid], cols[hid] = rr[:, :-1], cc[:, :-1]
    orient[hid] = HORIZONTAL
    faces[hid.ravel(), 0] = vid[:, :-1].ravel()
    faces[hid.ravel(), 1] = vid[:, 1:].ravel()

    dims[veid] = 1
    values[veid] = np.maximum(px[:-1, :], px[1:, :])
    rows[veid], cols[veid] = rr[:-1, :], cc[:-1, :]
    orient[veid] = VERTICAL
    faces[veid.ravel(), 0] = vid[:-1, :].ravel()
    faces[veid.ravel(), 1] = vid[1:, :].ravel()

    if n_f:
        dims[sid] = 2
        values[sid] = np.maximum(np.maximum(px[:-1, :-1], px[:-1, 1:]),
                                 np.maximum(px[1:, :-1], px[1:, 1:]))
        rows[sid], cols[sid] = rr[:-1, :-1], cc[:-1, :-1]
        s = sid.ravel()
        faces[s, 0] = hid[:-1, :].ravel()   # top
        faces[s, 1] = hid[1:, :].ravel()    # bottom
        faces[s, 2] = veid[:, :-1].ravel()  # left
        faces[s, 3] = veid[:, 1:].ravel()   # right
        cofaces[hid[:-1, :].ravel(), 1] = s  # square below a horizontal edge
        cofaces[hid[1:, :].ravel(), 0] = s   # square above
        cofaces[veid[:, :-1].ravel(), 1] = s  # square right of a vertical edge
        cofaces[veid[:, 1:].ravel(), 0] = s   # square left

    ids = np.arange(n, dtype=np.int64)
    order = np.lexsort((ids, dims, values))
    position = np.empty(n, dtype=np.int64)
    position[order] = np.arange(n)

    def remap(a):
        out = a[order]
        return np.where(out >= 0, position[np.maximum(out, 0)], -1)

    return FilteredComplex(
        width=w, height=h, ids=ids[order], dims=dims[order], values=values[order],
        rows=rows[order], cols=cols[order], orientation=orient[order],
        faces=remap(faces), cofaces=remap(cofaces), position=position,
    )


def check_complex(c: FilteredComplex) -> None:
    """Raise ``ValueError`` unless ``c`` is sorted and monotone."""
    v, d = c.values, c.dims
    if np.any(np.diff(v) < 0):
        raise ValueError("malformed complex: values not sorted")
    same = np.diff(v) == 0
    if np.any(same & (np.diff(d.astype(np.int64)) < 0)):
        raise ValueError("malformed complex: dims out of order among equal values")
    k = np.arange(len(c))[:, None]
    mask = c.faces >= 0
    if np.any(mask & (c.faces >= k)):
        raise ValueError("malformed complex: a face follows its coface")
    face_vals = np.where(mask, c.values[np.maximum(c.faces, 0)], -np.inf)
    if np.any(face_vals > v[:, None]):
        raise ValueError("malformed complex: face value exceeds coface value")
    n_faces = mask.sum(axis=1)
    if np.any(n_faces != np.array([0, 2, 4])[d]):
        raise ValueError("malformed complex: wrong number of faces")


# ---------------------------------------------------------------- brute force


class UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def betti_oracle(c: FilteredComplex, eps: float) -> tuple[int, int]:
    """Betti numbers of the sublevel complex at ``eps`` by direct counting.

    beta_0 from union-find over included vertices and edges; beta_1 from the
    Euler characteristic, ``beta_1 = beta_0 - (V - E + F)``.
    """
    inc = c.values <= eps
    n_v = int(np.count_nonzero(inc & (c.dims == 0)))
    n_e = int(np.count_nonzero(inc & (c.dims == 1)))
    n_f = int(np.count_nonzero(inc & (c.dims == 2)))
    uf = UnionFind(len(c))
    merges = 0
    for k in np.flatnonzero(inc & (c.dims == 1)):
        if uf.union(int(c.faces[k, 0]), int(c.faces[k, 1])):
            merges += 1
    b0 = n_v - merges
    chi = n_v - n_e + n_f
    return b0, b0 - chi


def write_cells_csv(c: FilteredComplex, path) -> None:
    """Debug dump of the complex in filtration order."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["id", "dim", "row", "col", "value"])
        for k in range(len(c)):
            wr.writerow([int(c.ids[k]), int(c.dims[k]), int(c.rows[k]),
                         int(c.cols[k]), repr(float(c.values[k]))])
