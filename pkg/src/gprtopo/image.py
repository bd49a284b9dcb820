"""Grayscale images on [0, 1]: I/O, normalization, polarity and quantization.

Every image entering the topology pipeline is a :class:`GrayImage`, a 2D
float64 array with values in [0, 1] regardless of the source bit depth.
PGM (P2/P5) and grayscale PNG are read; PGM and PNG are written.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

# ITU-R BT.601 luma weights
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Row-major intensity grid with values in [0, 1].

    ``pixels`` has shape ``(height, width)``; it is copied to float64 and
    made read-only on construction.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64)
        if px.ndim != 2:
            raise ValueError(f"expected a 2D pixel array, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if not np.all(np.isfinite(px)):
            raise ValueError("pixel values must be finite")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    __hash__ = None


def normalize(img: GrayImage, mode: str = "minmax") -> GrayImage:
    """Linearly stretch ``img`` so its minimum maps to 0 and maximum to 1.

    A constant image maps to all 0.5. ``mode="none"`` returns ``img`` unchanged.
    """
    if mode == "none":
        return img
    if mode != "minmax":
        raise ValueError(f"unknown normalization mode {mode!r}")
    px = img.pixels
    lo, hi = px.min(), px.max()
    if hi == lo:
        return GrayImage(np.full(px.shape, 0.5))
    out = (px - lo) / (hi - lo)
    # guard the endpoints against rounding
    return GrayImage(np.clip(out, 0.0, 1.0))


def invert(img: GrayImage) -> GrayImage:
    return GrayImage(1.0 - img.pixels)


def quantize(img: GrayImage, levels: int) -> GrayImage:
    """Snap every pixel to the grid ``k / (levels - 1)``, rounding half up."""
    if int(levels) != levels or levels < 2:
        raise ValueError(f"levels must be an integer >= 2, got {levels!r}")
    steps = levels - 1
    k = np.floor(img.pixels * steps + 0.5)
    return GrayImage(k / steps)


# ---------------------------------------------------------------- reading


def load_image(path, luma: bool = False) -> GrayImage:
    """Read a PGM (P2/P5) or PNG file into a :class:`GrayImage`.

    Samples are divided by the native maximum (PGM ``maxval``, or
    ``2**bitdepth - 1`` for PNG). Color PNGs are rejected unless ``luma`` is
    set, in which case they are converted with BT.601 weights.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head in (b"P2", b"P5"):
        return _read_pgm(path)
    if head == b"\x89P":
        return _read_png(path, luma)
    raise ValueError(f"unsupported image format: {path}")


def _pgm_tokens(data: bytes, count: int, start: int):
    """Pull ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    i = start
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and not data[j : j + 1].isspace():
            j += 1
        if j == i:
            raise ValueError("truncated PGM header")
        tokens.append(int(data[i:j]))
        i = j
    return tokens, i


def _read_pgm(path: Path) -> GrayImage:
    data = path.read_bytes()
    magic = data[:2]
    (width, height, maxval), pos = _pgm_tokens(data, 3, 2)
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ValueError(f"bad PGM header in {path}")
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        nbytes = width * height * dtype.itemsize
        raw = data[pos : pos + nbytes]
        if len(raw) != nbytes:
            raise ValueError(f"truncated PGM raster in {path}")
        values = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    else:
        values = np.array(data[pos:].split(), dtype=np.float64)
        if values.size != width * height:
            raise ValueError(f"PGM raster in {path} has {values.size} samples, "
                             f"expected {width * height}")
    if values.max(initial=0) > maxval:
        raise ValueError(f"PGM sample exceeds maxval in {path}")
    return GrayImage(values.reshape(height, width) / maxval)


def _read_png(path: Path, luma: bool) -> GrayImage:
    with Image.open(path) as im:
        im.load()
        mode = im.mode
        if mode in ("L", "1"):
            arr = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
        elif mode in ("I;16", "I;16B", "I;16L", "I"):
            arr = np.asarray(im, dtype=np.float64)
            # Pillow opens 16-bit grayscale PNGs as I or I;16
            arr = arr / 65535.0
        elif mode in ("LA",):
            arr = np.asarray(im.getchannel("L"), dtype=np.float64) / 255.0
        elif mode in ("RGB", "RGBA", "P", "PA"):
            if not luma:
                raise ValueError(f"color input: {path} (use luma conversion)")
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
            arr = rgb @ np.asarray(LUMA_WEIGHTS)
        else:
            raise ValueError(f"unsupported PNG mode {mode!r}: {path}")
    return GrayImage(np.clip(arr, 0.0, 1.0))


# ---------------------------------------------------------------- writing


def _to_ints(img: GrayImage, maxval: int) -> np.ndarray:
    return np.floor(img.pixels * maxval + 0.5).astype(np.int64)


def write_pgm(img: GrayImage, path, maxval: int = 255, ascii: bool = False) -> None:
    if not 0 < maxval < 65536:
        raise ValueError("maxval must be in 1..65535")
    vals = _to_ints(img, maxval)
    header = f"{'P2' if ascii else 'P5'}\n{img.width} {img.height}\n{maxval}\n".encode()
    if ascii:
        body = "\n".join(" ".join(str(v) for v in row) for row in vals).encode() + b"\n"
    else:
        dtype = ">u2" if maxval > 255 else "u1"
        body = vals.astype(dtype).tobytes()
    Path(path).write_bytes(header + body)


def write_png(img: GrayImage, path, bitdepth: int = 8) -> None:
    if bitdepth == 8:
        Image.fromarray(_to_ints(img, 255).astype(np.uint8)).save(path)
    elif bitdepth == 16:
        im = Image.fromarray(_to_ints(img, 65535).astype(np.uint16))
        im.save(path)
    else:
        raise ValueError("PNG bit depth must be 8 or 16")


def save_image(img: GrayImage, path, bitdepth: int = 8) -> None:
    """Write ``img`` as PGM (``.pgm``) or PNG (anything else) at ``bitdepth``."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        write_pgm(img, path, maxval=2**bitdepth - 1)
    else:
        write_png(img, path, bitdepth=bitdepth)
