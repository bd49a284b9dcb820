"""From synthetic scenes to a YOLO tree, then scoring a mock detector.

Generates a handful of labelled scenes, exports them with the 70/30
per-origin split, and evaluates jittered copies of the ground truth as if
they were detector output.
"""
from pathlib import Path

import numpy as np

from gprtopo.export import AnnotatedItem, export_yolo
from gprtopo.metrics import Detection, evaluate, read_label_file
from gprtopo.synth import DatasetConfig, generate_dataset

root = Path("demo_out/dataset")
sim = generate_dataset(root / "sim", 6, seed=0)
field = generate_dataset(root / "field", 4, seed=100, cfg=DatasetConfig(noise_rms=0.02))

items = [AnnotatedItem(root / "sim" / img, read_label_file(root / "sim" / lbl), "simulated")
         for img, lbl in sim.items]
items += [AnnotatedItem(root / "field" / img, read_label_file(root / "field" / lbl), "field")
          for img, lbl in field.items]
manifest = export_yolo(items, root / "yolo", train_frac=0.7, seed=0)
print("split counts:", manifest.counts)

rng = np.random.default_rng(3)
gts, preds = {}, []
for k, it in enumerate(items):
    gts[f"item{k}"] = it.boxes
    for b in it.boxes:
        dx, dy = rng.normal(0, 0.01, 2)
        preds.append(Detection(f"item{k}", min(max(b.cx + dx, 0), 1),
                               min(max(b.cy + dy, 0), 1), b.w, b.h, float(rng.random())))
    preds.append(Detection(f"item{k}", 0.1, 0.1, 0.05, 0.05, 0.05))  # a stray box

print(evaluate(preds, gts).text())
