"""Analytic synthetic B-scans of buried cylinders.

Each pipe contributes a Ricker pulse along its diffraction hyperbola in a
homogeneous half-space, scaled by reflectivity and a ``1/max(1, r)``
spreading factor. White noise and flat clutter reflections are optional.
Every scene comes with one YOLO-style ground-truth box per pipe.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .image import save_image
from .preproc import Bscan, to_image, write_bscan

C0 = 2.998e8  # m/s

PIPE_DIAMETERS = (0.3, 0.5, 1.0)
PIPE_X_RANGE = (5.0, 11.0)
PIPE_Y_RANGE = (3.5, 5.3)

TAIL_FRACTION = 0.1


@dataclass(frozen=True)
class PipeSpec:
    x_c: float
    y_c: float
    diameter: float
    reflectivity: float = 1.0

    def __post_init__(self):
        if not self.diameter > 0:
            raise ValueError("pipe diameter must be positive")
        if not self.y_c > self.diameter / 2:
            raise ValueError("pipe must be fully buried (y_c > diameter/2)")
        if not 0 < self.reflectivity <= 1:
            raise ValueError("reflectivity must lie in (0, 1]")


@dataclass(frozen=True)
class SceneSpec:
    """Survey geometry, medium, sampling and the buried pipes.

    Defaults follow the simulated survey: 16 m x 6 m section, 456 traces at
    0.024 m, 350 MHz source. ``dt`` of 0.25 ns keeps 1.9 GHz below Nyquist.
    """

    width: float = 16.0
    depth: float = 6.0
    n_traces: int = 456
    trace_spacing: float = 0.024
    center_freq: float = 350e6
    rel_permittivity: float = 9.0
    dt: float = 0.25e-9
    n_samples: int = 512
    noise_rms: float = 0.0
    clutter_bands: int = 0
    clutter_amp: float = 0.02
    pipes: tuple[PipeSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "pipes", tuple(self.pipes))
        if self.n_traces < 1 or self.n_samples < 2:
            raise ValueError("scene needs >= 1 trace and >= 2 samples")
        if self.n_traces * self.trace_spacing > self.width * (1 + 1e-12):
            raise ValueError("survey line longer than the scene width")
        if self.rel_permittivity < 1:
            raise ValueError("relative permittivity must be >= 1")
        if not self.dt > 0 or not self.center_freq > 0:
            raise ValueError("dt and center_freq must be positive")
        if self.noise_rms < 0 or self.clutter_bands < 0:
            raise ValueError("noise_rms and clutter_bands must be non-negative")
        if self.n_samples * self.dt < 2 * self.depth / self.velocity * (1 - 1e-12):
            raise ValueError("time window too short for the scene depth")

    @property
    def velocity(self) -> float:
        return C0 / math.sqrt(self.rel_permittivity)

    @property
    def aperture(self) -> float:
        """Horizontal position of the last trace; traces sit at ``j * spacing``."""
        return (self.n_traces - 1) * self.trace_spacing


@dataclass(frozen=True)
class GroundTruthBox:
    """Normalized ``(cx, cy, w, h)`` box, YOLO convention."""

    cx: float
    cy: float
    w: float
    h: float
    class_id: int = 0

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"box {name}={v} outside [0, 1]")
        if not (self.w > 0 and self.h > 0):
            raise ValueError("box width and height must be positive")

    @classmethod
    def from_pixels(cls, cx, cy, w, h, width, height, class_id=0):
        return cls(cx / width, cy / height, w / width, h / height, class_id)

    @property
    def xyxy(self) -> tuple[float, float, float, float]:
        return (self.cx - self.w / 2, self.cy - self.h / 2,
                self.cx + self.w / 2, self.cy + self.h / 2)


def ricker(f, t):
    """Ricker wavelet ``(1 - 2 pi^2 f^2 t^2) exp(-pi^2 f^2 t^2)``; peak 1 at t=0."""
    if not f > 0:
        raise ValueError("Ricker frequency must be positive")
    a = (np.pi * f * np.asarray(t, dtype=np.float64)) ** 2
    return (1.0 - 2.0 * a) * np.exp(-a)


def hyperbola_traveltime(p: PipeSpec, x, v: float):
    """Two-way time from antenna position ``x`` to the nearest pipe surface."""
    if not v > 0:
        raise ValueError("velocity must be positive")
    dist = np.hypot(np.asarray(x, dtype=np.float64) - p.x_c, p.y_c)
    if np.any(dist < p.diameter / 2):
        raise ValueError("antenna position inside the pipe radius")
    return 2.0 * (dist - p.diameter / 2) / v


def _surface_distance(p: PipeSpec, x):
    return np.hypot(np.asarray(x, dtype=np.float64) - p.x_c, p.y_c) - p.diameter / 2


def _check_pipe(s: SceneSpec, p: PipeSpec) -> None:
    if not 0.0 <= p.x_c <= s.width or p.y_c + p.diameter / 2 > s.depth:
        raise ValueError(f"pipe {p} lies outside the {s.width} x {s.depth} m scene")
    if p.x_c > s.aperture:
        raise ValueError(f"pipe apex x_c={p.x_c} beyond the last trace "
                         f"at {s.aperture:.3f} m")


def render_hyperbola(s: SceneSpec, p: PipeSpec) -> np.ndarray:
    """Noise-free response of one pipe, ``(n_samples, n_traces)``."""
    x = np.arange(s.n_traces) * s.trace_spacing
    t = np.arange(s.n_samples) * s.dt
    tt = hyperbola_traveltime(p, x, s.velocity)
    amp = p.reflectivity / np.maximum(1.0, _surface_distance(p, x))
    return amp[None, :] * ricker(s.center_freq, t[:, None] - tt[None, :])


def pipe_box(s: SceneSpec, p: PipeSpec, tail_fraction: float = TAIL_FRACTION) -> GroundTruthBox:
    """Box around the hyperbola from its apex out to the amplitude tail.

    The horizontal extent reaches where the spreading factor drops below
    ``tail_fraction`` of its apex value, shrunk symmetrically to stay inside
    the image so the box stays centered on the apex column. Vertically it
    spans the apex arrival to the arrival at the box edge, padded by one
    wavelet period.
    """
    width_px, height_px = s.n_traces, s.n_samples
    r0 = max(1.0, float(_surface_distance(p, p.x_c)))
    r_tail = r0 / tail_fraction + p.diameter / 2
    dx_tail = math.sqrt(max(r_tail**2 - p.y_c**2, 0.0))

    col_c = p.x_c / s.trace_spacing + 0.5  # pixel-center coordinates
    half = min(dx_tail / s.trace_spacing, col_c, width_px - col_c)
    half = max(half, 0.5)
    x0 = max(0.0, col_c - half)
    x1 = min(float(width_px), col_c + half)

    v = s.velocity
    pad = 1.0 / s.center_freq
    t_top = float(hyperbola_traveltime(p, p.x_c, v)) - pad
    x_edge = p.x_c + half * s.trace_spacing
    t_bot = float(hyperbola_traveltime(p, x_edge, v)) + pad
    y0 = min(max(0.0, t_top / s.dt + 0.5), height_px - 1.0)
    y1 = min(float(height_px), max(t_bot / s.dt + 0.5, y0 + 1.0))
    return GroundTruthBox.from_pixels((x0 + x1) / 2, (y0 + y1) / 2,
                                      x1 - x0, y1 - y0, width_px, height_px)


def render_scene(s: SceneSpec, seed: int = 0) -> tuple[Bscan, list[GroundTruthBox]]:
    """Superpose all pipe hyperbolas, then add clutter and noise drawn from ``seed``."""
    for p in s.pipes:
        _check_pipe(s, p)
    data = np.zeros((s.n_samples, s.n_traces))
    for p in s.pipes:
        data += render_hyperbola(s, p)
    rng = np.random.default_rng(seed)
    if s.clutter_bands:
        t = np.arange(s.n_samples) * s.dt
        for _ in range(s.clutter_bands):
            t0 = rng.uniform(0.0, t[-1])
            a = s.clutter_amp * rng.uniform(0.5, 1.0) * rng.choice((-1.0, 1.0))
            data += (a * ricker(s.center_freq, t - t0))[:, None]
    if s.noise_rms > 0:
        data += rng.normal(0.0, s.noise_rms, size=data.shape)
    boxes = [pipe_box(s, p) for p in s.pipes]
    return Bscan(data, s.dt, s.trace_spacing), boxes


# ---------------------------------------------------------------- datasets


@dataclass(frozen=True)
class DatasetConfig:
    """Sampling ranges for random scenes. Scalars are fixed per scene."""

    diameters: tuple[float, ...] = PIPE_DIAMETERS
    x_range: tuple[float, float] = PIPE_X_RANGE
    y_range: tuple[float, float] = PIPE_Y_RANGE
    reflectivity_range: tuple[float, float] = (0.5, 1.0)
    max_pipes: int = 1
    noise_rms: float = 0.005
    clutter_bands: int = 2
    image_format: str = "png"
    scene: SceneSpec = field(default_factory=SceneSpec)


def sample_scene(cfg: DatasetConfig, seed: int) -> SceneSpec:
    """Draw one scene; pipe centers are restricted to the survey aperture."""
    rng = np.random.default_rng(seed)
    base = cfg.scene
    x_lo = cfg.x_range[0]
    x_hi = min(cfg.x_range[1], base.aperture)
    if x_hi < x_lo:
        raise ValueError("pipe x range does not overlap the survey aperture")
    n_pipes = int(rng.integers(1, cfg.max_pipes + 1))
    pipes = []
    for _ in range(n_pipes):
        d = float(cfg.diameters[int(rng.integers(len(cfg.diameters)))])
        pipes.append(PipeSpec(
            x_c=float(rng.uniform(x_lo, x_hi)),
            y_c=float(rng.uniform(*cfg.y_range)),
            diameter=d,
            reflectivity=float(rng.uniform(*cfg.reflectivity_range)),
        ))
    return replace(base, pipes=tuple(pipes), noise_rms=cfg.noise_rms,
                   clutter_bands=cfg.clutter_bands)


def format_label(boxes) -> str:
    return "".join(f"{b.class_id} {b.cx:.6f} {b.cy:.6f} {b.w:.6f} {b.h:.6f}\n" for b in boxes)


@dataclass
class DatasetManifest:
    path: Path
    items: list[tuple[str, str]]


def generate_dataset(out_dir, n: int, seed: int = 0, cfg: DatasetConfig | None = None,
                     clip_pct: float = 99.0) -> DatasetManifest:
    """Write ``n`` random scenes as B-scan, image and YOLO label files.

    Item ``i`` is drawn and rendered from seed ``seed + i``, so items can be
    produced in any order. The manifest (``manifest.txt``, one
    ``image<TAB>label`` line per item, paths relative to ``out_dir``) is
    written last.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    cfg = cfg or DatasetConfig()
    out = Path(out_dir)
    for sub in ("bscans", "images", "labels"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    items = []
    for i in range(n):
        item_seed = seed + i
        scene = sample_scene(cfg, item_seed)
        bscan, boxes = render_scene(scene, item_seed)
        stem = f"scene_{i:05d}"
        write_bscan(bscan, out / "bscans" / f"{stem}.gprb")
        img_rel = f"images/{stem}.{cfg.image_format}"
        lbl_rel = f"labels/{stem}.txt"
        save_image(to_image(bscan, clip_pct), out / img_rel)
        (out / lbl_rel).write_text(format_label(boxes))
        items.append((img_rel, lbl_rel))
    manifest = out / "manifest.txt"
    manifest.write_text("".join(f"{a}\t{b}\n" for a, b in items))
    return DatasetManifest(manifest, items)
