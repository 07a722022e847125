"""IoU-based lane accuracy.

Ground-truth lanes are drawn 16 px wide and predictions 30 px wide (both
relative to an 800 px canvas width), with round caps and joins.  A ground
truth counts as a true positive at threshold ``t`` when the prediction
assigned to it has IoU ``>= t``; accuracy is ``n_tp / n_gt``.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

GT_WIDTH = 16.0
PRED_WIDTH = 30.0
REFERENCE_WIDTH = 800.0
DEFAULT_THRESHOLDS = (0.3, 0.4, 0.5)


@dataclass(frozen=True, eq=False)
class LanePolyline:
    points: np.ndarray
    frame: int = 0

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if len(p) < 2:
            raise ValueError("a lane polyline needs at least 2 points")
        object.__setattr__(self, "points", p)


@dataclass(frozen=True)
class AccuracyRow:
    iou_threshold: float
    n_tp: int
    n_gt: int

    @property
    def accuracy(self) -> float:
        return self.n_tp / self.n_gt if self.n_gt else 0.0


@dataclass(frozen=True)
class AccuracyReport:
    rows: tuple[AccuracyRow, ...]

    def at(self, threshold: float) -> float:
        for row in self.rows:
            if math.isclose(row.iou_threshold, threshold):
                return row.accuracy
        raise KeyError(threshold)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["threshold", "n_tp", "n_gt", "accuracy"])
            for row in self.rows:
                w.writerow([f"{row.iou_threshold:g}", row.n_tp, row.n_gt, repr(row.accuracy)])


def rasterize(points, width_px: float, canvas) -> np.ndarray:
    """Boolean mask of pixels whose centre lies within ``width_px/2`` of the polyline.

    ``width_px`` is in canvas pixels; callers scale reference widths themselves
    (see :func:`scaled_width`).
    """
    W, H = canvas
    pts = points.points if isinstance(points, LanePolyline) else np.asarray(points, float)
    mask = np.zeros((H, W), dtype=bool)
    rad = width_px / 2.0
    r2 = rad * rad
    for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
        xa = max(int(math.floor(min(x0, x1) - rad)), 0)
        xb = min(int(math.ceil(max(x0, x1) + rad)), W - 1)
        ya = max(int(math.floor(min(y0, y1) - rad)), 0)
        yb = min(int(math.ceil(max(y0, y1) + rad)), H - 1)
        if xa > xb or ya > yb:
            continue
        gx, gy = np.meshgrid(np.arange(xa, xb + 1, dtype=np.float64),
                             np.arange(ya, yb + 1, dtype=np.float64))
        dx, dy = x1 - x0, y1 - y0
        ll = dx * dx + dy * dy
        if ll > 0:
            t = np.clip(((gx - x0) * dx + (gy - y0) * dy) / ll, 0.0, 1.0)
        else:
            t = 0.0
        ex = gx - (x0 + t * dx)
        ey = gy - (y0 + t * dy)
        mask[ya:yb + 1, xa:xb + 1] |= ex * ex + ey * ey <= r2
    return mask


def scaled_width(ref_width: float, canvas) -> float:
    return ref_width * canvas[0] / REFERENCE_WIDTH


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.count_nonzero(a | b)
    if union == 0:
        return 0.0
    return np.count_nonzero(a & b) / union


def lane_iou(gt, pred, canvas, gt_width=GT_WIDTH, pred_width=PRED_WIDTH) -> float:
    return mask_iou(rasterize(gt, scaled_width(gt_width, canvas), canvas),
                    rasterize(pred, scaled_width(pred_width, canvas), canvas))


def iou_matrix(gts, preds, canvas) -> np.ndarray:
    gm = [rasterize(g, scaled_width(GT_WIDTH, canvas), canvas) for g in gts]
    pm = [rasterize(p, scaled_width(PRED_WIDTH, canvas), canvas) for p in preds]
    out = np.zeros((len(gm), len(pm)))
    for i, a in enumerate(gm):
        for j, b in enumerate(pm):
            out[i, j] = mask_iou(a, b)
    return out


def assign(ious: np.ndarray) -> np.ndarray:
    """Greedy one-to-one assignment by descending IoU; best IoU per ground truth (0 if none)."""
    n_gt, n_pred = ious.shape
    best = np.zeros(n_gt)
    if n_gt == 0 or n_pred == 0:
        return best
    order = np.argsort(-ious, axis=None, kind="stable")
    gt_used = np.zeros(n_gt, bool)
    pred_used = np.zeros(n_pred, bool)
    for flat in order:
        i, j = divmod(int(flat), n_pred)
        if ious[i, j] <= 0:
            break
        if gt_used[i] or pred_used[j]:
            continue
        gt_used[i] = pred_used[j] = True
        best[i] = ious[i, j]
    return best


def accuracy(gt_set: dict, pred_set: dict, thresholds=DEFAULT_THRESHOLDS, canvas=(800, 288)) -> AccuracyReport:
    """Accuracy per IoU threshold over frames keyed by index.

    Values of ``gt_set`` / ``pred_set`` are lists of polylines (or ``(n, 2)`` arrays).
    """
    thresholds = [float(t) for t in thresholds]
    for t in thresholds:
        if not 0 < t < 1:
            raise ValueError(f"threshold {t} outside (0, 1)")
    for f in sorted(set(pred_set) - set(gt_set)):
        log.warning("frame %s has predictions but no ground truth; skipped", f)
    tp = np.zeros(len(thresholds), dtype=int)
    n_gt = 0
    for f in sorted(gt_set):
        gts = gt_set[f]
        n_gt += len(gts)
        best = assign(iou_matrix(gts, pred_set.get(f, []), canvas))
        for k, t in enumerate(thresholds):
            tp[k] += int(np.count_nonzero(best >= t))
    return AccuracyReport(tuple(AccuracyRow(t, int(tp[k]), n_gt) for k, t in enumerate(thresholds)))


# -- lane text files -------------------------------------------------------

def read_lanes(path, scale: float = 1.0) -> list[np.ndarray]:
    """One lane per line, ``x1 y1 x2 y2 ...``; coordinates multiplied by ``scale``."""
    lanes = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            vals = line.split()
            if not vals:
                continue
            if len(vals) % 2:
                raise ValueError(f"{path}:{lineno}: odd number of coordinates")
            pts = np.array(vals, dtype=np.float64).reshape(-1, 2) * scale
            if len(pts) >= 2:
                lanes.append(pts)
    return lanes


def write_lanes(path, lanes) -> None:
    with open(path, "w") as f:
        for lane in lanes:
            pts = lane.points if isinstance(lane, LanePolyline) else np.asarray(lane)
            f.write(" ".join(f"{v:.3f}" for v in pts.ravel()) + "\n")


def read_lane_dir(directory, suffix=".lines.txt", scale: float = 1.0) -> dict:
    """Map frame index -> lanes for files named ``<index><suffix>``."""
    out = {}
    for name in sorted(os.listdir(directory)):
        if not name.endswith(suffix):
            continue
        stem = name[: -len(suffix)]
        if not stem.isdigit():
            continue
        out[int(stem)] = read_lanes(os.path.join(directory, name), scale)
    return out
