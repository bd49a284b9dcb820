"""Detector-ready dataset layout with a per-origin train/val split.

Output tree::

    out_dir/
      images/{train,val}/<origin>_<index>.<ext>
      labels/{train,val}/<origin>_<index>.txt
      manifest.txt

Each origin group (e.g. simulated, field) is shuffled and split on its
own, with ``round(n * train_frac)`` items going to train.
"""
from __future__ import annotations

import math
import shutil
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .image import GrayImage, save_image
from .shape_map import FusedImage, save_fused
from .synth import GroundTruthBox, format_label

SPLITS = ("train", "val")


@dataclass
class AnnotatedItem:
    """An image plus its boxes. ``image`` may also be a path to an existing file."""

    image: GrayImage | FusedImage | Path | str | None
    boxes: list[GroundTruthBox] = field(default_factory=list)
    origin: str = "simulated"


@dataclass
class ExportManifest:
    path: Path
    counts: dict[tuple[str, str], int]
    entries: list[tuple[str, str, str, str]]  # split, origin, image, label


def split_count(n: int, train_frac: float) -> int:
    """Train share of ``n`` items, rounded half up."""
    return int(math.floor(n * train_frac + 0.5))


def _write_image(image, dest_stem: Path) -> Path:
    if isinstance(image, FusedImage):
        dest = dest_stem.with_suffix(".png")
        save_fused(image, dest)
    elif isinstance(image, GrayImage):
        dest = dest_stem.with_suffix(".png")
        save_image(image, dest)
    else:
        src = Path(image)
        if not src.is_file():
            raise FileNotFoundError(f"image file not found: {src}")
        dest = dest_stem.with_suffix(src.suffix)
        shutil.copyfile(src, dest)
    return dest


def export_yolo(items, out_dir, train_frac: float = 0.7, seed: int = 0) -> ExportManifest:
    """Write ``items`` into a YOLO tree and return the manifest.

    Shuffling is seeded per origin, so the same inputs and seed give a
    byte-identical tree. The manifest is written last.
    """
    items = list(items)
    if not items:
        raise ValueError("nothing to export")
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must lie strictly between 0 and 1")
    for k, it in enumerate(items):
        if it.image is None:
            raise ValueError(f"item {k} has no image data")

    out = Path(out_dir)
    for kind in ("images", "labels"):
        for split in SPLITS:
            (out / kind / split).mkdir(parents=True, exist_ok=True)

    groups: dict[str, list[int]] = {}
    for k, it in enumerate(items):
        groups.setdefault(it.origin, []).append(k)

    counts = {}
    entries = []
    for g, origin in enumerate(sorted(groups)):
        members = groups[origin]
        order = np.random.default_rng([seed, g]).permutation(len(members))
        n_train = split_count(len(members), train_frac)
        counts[("train", origin)] = n_train
        counts[("val", origin)] = len(members) - n_train
        for rank, m in enumerate(order):
            split = "train" if rank < n_train else "val"
            k = members[m]
            stem = f"{origin}_{m:05d}"
            img_path = _write_image(items[k].image, out / "images" / split / stem)
            lbl_path = out / "labels" / split / f"{stem}.txt"
            lbl_path.write_text(format_label(items[k].boxes))
            entries.append((split, origin, img_path.relative_to(out).as_posix(),
                            lbl_path.relative_to(out).as_posix()))

    entries.sort()
    header = "#counts\t" + "\t".join(f"{s}:{o}={counts[(s, o)]}"
                                     for s in SPLITS for o in sorted(groups))
    lines = [header] + ["\t".join(e) for e in entries]
    manifest = out / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n")
    return ExportManifest(manifest, counts, entries)


def read_manifest_counts(path) -> dict[tuple[str, str], int]:
    header = Path(path).read_text().splitlines()[0]
    counts = {}
    for tok in header.split("\t")[1:]:
        key, n = tok.split("=")
        split, origin = key.split(":")
        counts[(split, origin)] = int(n)
    return counts
