"""Lifetime-weighted rendering of H1 generators and fusion with the raw image."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage

from .cubical import FilteredComplex, build_sublevel_complex
from .image import GrayImage, invert, quantize
from .persistence import PersistenceDiagram, compute_persistence, filter_by_lifetime, lifetime

MODES = ("boundary", "filled")


@dataclass(frozen=True, eq=False)
class ShapeMap:
    """Per-pixel generator intensity in [0, 1]; 1 marks the longest-lived loop."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or v.min(initial=0) < 0 or v.max(initial=0) > 1:
            raise ValueError("shape map must be a 2D array with values in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class FusedImage:
    raw: np.ndarray
    topo: np.ndarray
    blend: np.ndarray
    alpha: float

    @property
    def width(self) -> int:
        return self.raw.shape[1]

    @property
    def height(self) -> int:
        return self.raw.shape[0]

    def channels(self) -> np.ndarray:
        """``(height, width, 3)`` stack of raw, topo and blend planes."""
        return np.stack([self.raw, self.topo, self.blend], axis=-1)


@dataclass(frozen=True)
class Generator:
    """One rendered loop: its pair, intensity and the pixels it covers."""

    birth: float
    death: float
    lifetime: float
    intensity: float
    pixels: np.ndarray  # (n, 2) row, col

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        r0, c0 = self.pixels.min(axis=0)
        r1, c1 = self.pixels.max(axis=0)
        return int(r0), int(c0), int(r1), int(c1)


def _cycle_pixels(edge_ids, width: int, height: int) -> np.ndarray:
    """Endpoint pixels of the given edge ids (id layout of ``cubical``)."""
    e = np.asarray(edge_ids, dtype=np.int64) - width * height
    n_h = height * (width - 1)
    horiz = e < n_h
    eh, ev = e[horiz], e[~horiz] - n_h
    if width > 1:
        rh, ch = np.divmod(eh, width - 1)
    else:
        rh = ch = np.empty(0, dtype=np.int64)
    rv, cv = np.divmod(ev, width)
    rows = np.concatenate([rh, rh, rv, rv + 1])
    cols = np.concatenate([ch, ch + 1, cv, cv])
    return np.stack([rows, cols], axis=-1)


def _loop_pixels(edge_ids, dims: tuple[int, int], mode: str) -> np.ndarray:
    """Sorted ``(n, 2)`` row/col pixels a loop covers, computed on its bounding box.

    Any background pixel outside the box reaches the image border, so filling
    holes inside the box padded by one pixel matches filling the full image.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    width, height = dims
    px = _cycle_pixels(edge_ids, width, height)
    if len(px) == 0:
        return px.reshape(0, 2)
    lo = px.min(axis=0) - 1
    hi = px.max(axis=0) + 1
    local = np.zeros(tuple(hi - lo + 1), dtype=bool)
    local[px[:, 0] - lo[0], px[:, 1] - lo[1]] = True
    if mode == "filled":
        local = ndimage.binary_fill_holes(local)
    return np.argwhere(local) + lo


def generator_pixels(edge_ids, dims: tuple[int, int], mode: str = "boundary") -> np.ndarray:
    """Boolean ``(height, width)`` mask of the pixels a loop covers.

    ``filled`` adds everything not reachable from outside the image through
    4-connected non-cycle pixels.
    """
    width, height = dims
    mask = np.zeros((height, width), dtype=bool)
    px = _loop_pixels(edge_ids, dims, mode)
    mask[px[:, 0], px[:, 1]] = True
    return mask


def rendered_generators(d: PersistenceDiagram, dims: tuple[int, int],
                        mode: str = "boundary", min_lifetime: float = 0.0) -> list[Generator]:
    """Surviving finite dim-1 pairs with their normalized intensities."""
    if tuple(dims) != tuple(d.source_dims):
        raise ValueError(f"dims {tuple(dims)} do not match diagram {d.source_dims}")
    kept = [p for p in filter_by_lifetime(d, min_lifetime).pairs
            if p.dim == 1 and not p.essential]
    if not kept:
        return []
    l_max = max(lifetime(p) for p in kept)
    gens = []
    for p in kept:
        if not p.rep_cycle:
            raise ValueError("dim-1 pair without a representative cycle")
        lt = lifetime(p)
        gens.append(Generator(p.birth, p.death, lt, lt / l_max if l_max > 0 else 0.0,
                              _loop_pixels(p.rep_cycle, dims, mode)))
    return gens


def render_shape_map(d: PersistenceDiagram, dims: tuple[int, int], mode: str = "boundary",
                     min_lifetime: float = 0.0) -> ShapeMap:
    """Draw every surviving loop at ``lifetime / max_lifetime``; overlaps take the max."""
    width, height = dims
    out = np.zeros((height, width))
    if mode == "boundary":
        if tuple(dims) != tuple(d.source_dims):
            raise ValueError(f"dims {tuple(dims)} do not match diagram {d.source_dims}")
        kept = [p for p in filter_by_lifetime(d, min_lifetime).pairs
                if p.dim == 1 and not p.essential]
        if not kept:
            return ShapeMap(out)
        lts = np.array([lifetime(p) for p in kept])
        l_max = lts.max()
        inten = lts / l_max if l_max > 0 else np.zeros_like(lts)
        sizes = np.array([len(p.rep_cycle) for p in kept])
        if np.any(sizes == 0):
            raise ValueError("dim-1 pair without a representative cycle")
        edges = np.fromiter((e for p in kept for e in p.rep_cycle), dtype=np.int64,
                            count=int(sizes.sum()))
        px = _cycle_pixels(edges, width, height)
        # each edge contributes two endpoint pixels, grouped by orientation
        per_edge = np.repeat(inten, sizes)
        horiz = edges - width * height < height * (width - 1)
        vals = np.concatenate([per_edge[horiz], per_edge[horiz],
                               per_edge[~horiz], per_edge[~horiz]])
        np.maximum.at(out, (px[:, 0], px[:, 1]), vals)
        return ShapeMap(out)
    for g in rendered_generators(d, dims, mode, min_lifetime):
        r, c = g.pixels[:, 0], g.pixels[:, 1]
        out[r, c] = np.maximum(out[r, c], g.intensity)
    return ShapeMap(out)


def fuse(raw: GrayImage, topo: ShapeMap, alpha: float = 0.5) -> FusedImage:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if raw.shape != topo.values.shape:
        raise ValueError(f"raw image {raw.shape} and shape map {topo.values.shape} differ")
    blend = alpha * raw.pixels + (1.0 - alpha) * topo.values
    return FusedImage(raw.pixels, topo.values, blend, float(alpha))


# ---------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class TopoConfig:
    invert: bool = False
    levels: int | None = 64
    min_lifetime: float = 0.0
    mode: str = "boundary"
    alpha: float = 0.5
    method: str = "unionfind"


@dataclass(frozen=True, eq=False)
class TopoResult:
    complex: FilteredComplex
    diagram: PersistenceDiagram
    shape_map: ShapeMap
    fused: FusedImage


def topo_features(img: GrayImage, cfg: TopoConfig = TopoConfig()) -> TopoResult:
    """Quantize, optionally invert, filter, and render ``img``.

    The raw plane of the fused output is the unmodified input.
    """
    work = img
    if cfg.levels is not None:
        work = quantize(work, cfg.levels)
    if cfg.invert:
        work = invert(work)
    cx = build_sublevel_complex(work)
    diagram = compute_persistence(cx, method=cfg.method)
    smap = render_shape_map(diagram, (img.width, img.height), cfg.mode, cfg.min_lifetime)
    return TopoResult(cx, diagram, smap, fuse(img, smap, cfg.alpha))


def topo_pipeline(img: GrayImage, cfg: TopoConfig = TopoConfig()) -> FusedImage:
    return topo_features(img, cfg).fused


# ---------------------------------------------------------------- output


def _bytes8(plane: np.ndarray) -> np.ndarray:
    return np.floor(np.clip(plane, 0.0, 1.0) * 255 + 0.5).astype(np.uint8)


def save_fused(f: FusedImage, path, blend_only: bool = False) -> None:
    """RGB PNG with R=raw, G=topo, B=blend, or the blend plane alone."""
    if blend_only:
        Image.fromarray(_bytes8(f.blend)).save(path)
    else:
        Image.fromarray(_bytes8(f.channels())).save(path)


def write_generators_csv(gens: list[Generator], path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["birth", "death", "lifetime", "intensity", "n_pixels",
                     "row_min", "col_min", "row_max", "col_max"])
        for g in sorted(gens, key=lambda g: (-g.lifetime, g.birth)):
            wr.writerow([repr(g.birth), repr(g.death), repr(g.lifetime),
                         repr(g.intensity), len(g.pixels), *g.bbox])
