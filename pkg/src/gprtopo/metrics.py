"""Single-class detection metrics: IoU, AP, mAP@0.5 and mAP@0.5:0.95.

AP uses greedy confidence-ordered matching (each prediction takes the
highest-IoU unmatched ground truth in its image) and all-point interpolation
of the precision envelope.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .synth import GroundTruthBox

IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * k, 2) for k in range(10))


@dataclass(frozen=True)
class Detection:
    image_id: str
    cx: float
    cy: float
    w: float
    h: float
    confidence: float
    class_id: int = 0

    def __post_init__(self):
        for name in ("cx", "cy", "w", "h", "confidence"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"detection {name}={v} outside [0, 1]")

    @property
    def xyxy(self):
        return (self.cx - self.w / 2, self.cy - self.h / 2,
                self.cx + self.w / 2, self.cy + self.h / 2)


def iou_xyxy(a, b) -> float:
    """IoU of two ``(x1, y1, x2, y2)`` rectangles."""
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0


def iou(a, b) -> float:
    """IoU of two boxes with ``cx, cy, w, h`` attributes."""
    return iou_xyxy(a.xyxy, b.xyxy)


def _match(preds, gts, iou_thresh):
    """Confidence-ordered greedy matching; returns TP flags in ranked order."""
    order = sorted(range(len(preds)),
                   key=lambda k: (-preds[k].confidence, preds[k].image_id, k))
    used = {img: np.zeros(len(boxes), dtype=bool) for img, boxes in gts.items()}
    tp = np.zeros(len(order), dtype=bool)
    for rank, k in enumerate(order):
        p = preds[k]
        boxes = gts.get(p.image_id, [])
        best, best_iou = -1, -1.0
        for g, box in enumerate(boxes):
            if used[p.image_id][g]:
                continue
            v = iou(p, box)
            if v > best_iou:
                best, best_iou = g, v
        if best >= 0 and best_iou >= iou_thresh:
            used[p.image_id][best] = True
            tp[rank] = True
    return tp


def pr_curve(preds, gts, iou_thresh: float = 0.5):
    """Cumulative ``(precision, recall)`` arrays in confidence order."""
    n_gt = sum(len(b) for b in gts.values())
    tp = _match(list(preds), gts, iou_thresh)
    ctp = np.cumsum(tp)
    cfp = np.cumsum(~tp)
    precision = ctp / np.maximum(ctp + cfp, 1)
    recall = ctp / n_gt if n_gt else np.zeros_like(ctp, dtype=float)
    return precision, recall


def average_precision(preds, gts, iou_thresh: float = 0.5) -> float:
    """Area under the precision envelope over recall.

    ``gts`` maps image id to a list of ground-truth boxes.
    """
    preds = list(preds)
    n_gt = sum(len(b) for b in gts.values())
    if not preds or n_gt == 0:
        return 0.0
    precision, recall = pr_curve(preds, gts, iou_thresh)
    mrec = np.concatenate([[0.0], recall, [1.0]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    steps = np.flatnonzero(mrec[1:] != mrec[:-1])
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def ap_per_threshold(preds, gts, thresholds=IOU_THRESHOLDS) -> dict[float, float]:
    preds = list(preds)
    return {t: average_precision(preds, gts, t) for t in thresholds}


def map_range(preds, gts) -> tuple[float, float]:
    """``(mAP@0.5, mAP@0.5:0.95)`` for a single class."""
    aps = ap_per_threshold(preds, gts)
    return aps[0.5], float(np.mean([aps[t] for t in IOU_THRESHOLDS]))


def precision_recall(preds, gts, iou_thresh: float = 0.5, conf_thresh: float = 0.25):
    """Precision and recall of the predictions at or above ``conf_thresh``."""
    kept = [p for p in preds if p.confidence >= conf_thresh]
    n_gt = sum(len(b) for b in gts.values())
    tp = int(_match(kept, gts, iou_thresh).sum())
    precision = tp / len(kept) if kept else 0.0
    recall = tp / n_gt if n_gt else 0.0
    return precision, recall


# ---------------------------------------------------------------- files

PRED_COLUMNS = ("image_id", "class_id", "cx", "cy", "w", "h", "confidence")


def read_predictions_csv(path) -> list[Detection]:
    """Parse ``image_id,class_id,cx,cy,w,h,confidence`` rows (header optional)."""
    preds = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (lineno == 1 and row[0].strip() == "image_id"):
                continue
            try:
                if len(row) != len(PRED_COLUMNS):
                    raise ValueError(f"expected {len(PRED_COLUMNS)} fields, got {len(row)}")
                cls = int(row[1])
                cx, cy, w, h, conf = (float(v) for v in row[2:])
                preds.append(Detection(row[0].strip(), cx, cy, w, h, conf, cls))
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
    return preds


def read_label_file(path) -> list[GroundTruthBox]:
    boxes = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        try:
            if len(parts) != 5:
                raise ValueError(f"expected 5 fields, got {len(parts)}")
            cx, cy, w, h = (float(v) for v in parts[1:])
            boxes.append(GroundTruthBox(cx, cy, w, h, int(parts[0])))
        except ValueError as exc:
            raise ValueError(f"{path}: line {lineno}: {exc}") from None
    return boxes


def read_labels_dir(path) -> dict[str, list[GroundTruthBox]]:
    """Ground truth keyed by label-file stem, searched recursively."""
    return {p.stem: read_label_file(p) for p in sorted(Path(path).rglob("*.txt"))}


@dataclass
class MetricsReport:
    ap: dict[float, float]
    map50: float
    map50_95: float
    precision: float
    recall: float

    def text(self) -> str:
        lines = [f"AP@{t:.2f}\t{v:.6f}" for t, v in self.ap.items()]
        lines += [f"precision\t{self.precision:.6f}", f"recall\t{self.recall:.6f}",
                  f"mAP@0.5\t{self.map50:.6f}", f"mAP@0.5:0.95\t{self.map50_95:.6f}"]
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["metric", "value"])
            for t, v in self.ap.items():
                wr.writerow([f"AP@{t:.2f}", f"{v:.6f}"])
            wr.writerow(["precision", f"{self.precision:.6f}"])
            wr.writerow(["recall", f"{self.recall:.6f}"])
            wr.writerow(["mAP@0.5", f"{self.map50:.6f}"])
            wr.writerow(["mAP@0.5:0.95", f"{self.map50_95:.6f}"])


def evaluate(preds, gts) -> MetricsReport:
    preds = list(preds)
    aps = ap_per_threshold(preds, gts)
    p, r = precision_recall(preds, gts)
    return MetricsReport(aps, aps[0.5], float(np.mean(list(aps.values()))), p, r)
