"""Evaluation metrics and the per-split report.

EA-Score definition adopted here (identity -> 1, perpendicular -> 0):
both lines are clipped to the unit square, then
S_angle = max(0, 1 - acute_angle / (pi/2)),
S_dist  = max(0, 1 - |midpoint difference| / sqrt(2)),
EA = S_angle * S_dist.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .datamodel import (ArticulationClass, BoxXYXY, Mask, MovableClass,
                        SceneSample)
from .geometry import GeometryError, Line2D, clip_line_to_rect, gaussian_bump


@dataclass
class MetricReport:
    movable_acc: float = float("nan")
    rigidity_acc: float = float("nan")
    articulation_acc: float = float("nan")
    action_acc: float = float("nan")
    box_iou: float = float("nan")
    mask_iou: float = float("nan")
    axis_ea: float = float("nan")
    affordance_sim: float = float("nan")
    depth_delta_125: float = float("nan")
    depth_delta_125_2: float = float("nan")

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        """Human-readable row in the standard column order."""
        cols = [
            ("Movable", self.movable_acc), ("Box", self.box_iou),
            ("Mask", self.mask_iou), ("Rigidity", self.rigidity_acc),
            ("Articulation Cat.", self.articulation_acc), ("Axis", self.axis_ea),
            ("Action", self.action_acc), ("Affordance", self.affordance_sim),
            ("Depth d<1.25", self.depth_delta_125),
            ("Depth d<1.25^2", self.depth_delta_125_2),
        ]
        header = " | ".join(f"{n:>17s}" for n, _ in cols)
        row = " | ".join(f"{v:17.4f}" for _, v in cols)
        return header + "\n" + row


def box_iou(a: BoxXYXY, b: BoxXYXY) -> float:
    ix = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    iy = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    inter = ix * iy
    union = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter
    return inter / union if union > 0 else 0.0


def mask_iou(a: Mask, b: Mask) -> float:
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError("mask dimensions differ")
    aa, ba = a.to_array(), b.to_array()
    union = np.logical_or(aa, ba).sum()
    if union == 0:
        return 1.0  # both empty, by convention
    return float(np.logical_and(aa, ba).sum() / union)


def _clipped_midpoint(line: Line2D) -> np.ndarray:
    seg = clip_line_to_rect(line, 0.0, 0.0, 1.0, 1.0)
    if seg is None:
        raise GeometryError("line does not intersect the unit image square")
    return (seg[0] + seg[1]) / 2.0


def ea_score(pred: Line2D, gt: Line2D) -> float:
    mp, mg = _clipped_midpoint(pred), _clipped_midpoint(gt)
    dtheta = abs(pred.theta - gt.theta) % math.pi
    dtheta = min(dtheta, math.pi - dtheta)  # acute angle, theta+pi invariant
    s_angle = max(0.0, 1.0 - dtheta / (math.pi / 2.0))
    s_dist = max(0.0, 1.0 - float(np.linalg.norm(mp - mg)) / math.sqrt(2.0))
    return s_angle * s_dist


def _normalize_dist(grid: np.ndarray) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if np.any(g < 0):
        raise ValueError("distribution grids must be nonnegative")
    s = g.sum()
    if s <= 0:
        return np.full_like(g, 1.0 / g.size)
    return g / s


def sim(pred: np.ndarray, gt: np.ndarray) -> float:
    """Histogram intersection of sum-normalized grids."""
    p, q = _normalize_dist(pred), _normalize_dist(gt)
    if p.shape != q.shape:
        raise ValueError("grids must share a shape")
    return float(np.minimum(p, q).sum())


def depth_delta(pred: np.ndarray, gt: np.ndarray, thresh: float = 1.25,
                align: bool = True) -> float:
    """Fraction of pixels with max(p/g, g/p) < thresh, after median scale
    alignment of pred to gt (set align=False to skip)."""
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if np.any(pred <= 0) or np.any(gt <= 0):
        raise ValueError("depth grids must be positive")
    if align:
        pred = pred * (np.median(gt) / np.median(pred))
    ratio = np.maximum(pred / gt, gt / pred)
    return float((ratio < thresh).mean())


def align_depth_affine(pred: np.ndarray, gt: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Median/MAD alignment of a scale- and shift-free prediction into the
    ground-truth depth's units, clamped positive."""
    pm, gm = np.median(pred), np.median(gt)
    ps = max(np.mean(np.abs(pred - pm)), eps)
    gs = max(np.mean(np.abs(gt - gm)), eps)
    out = (pred - pm) / ps * gs + gm
    return np.maximum(out, eps)


def _resize_nn(grid: np.ndarray, h: int, w: int) -> np.ndarray:
    ys = (np.arange(h) + 0.5) * grid.shape[0] / h - 0.5
    xs = (np.arange(w) + 0.5) * grid.shape[1] / w - 0.5
    yi = np.clip(np.round(ys).astype(int), 0, grid.shape[0] - 1)
    xi = np.clip(np.round(xs).astype(int), 0, grid.shape[1] - 1)
    return grid[yi][:, xi]


def evaluate(samples, predict_fn) -> MetricReport:
    """Per-property means over queries where the property is annotated.

    ``predict_fn(sample)`` must return (list[InteractionPrediction-like],
    depth grid or None); one prediction per annotated query, in order.
    Prediction objects carry numpy fields: movable_logits, rigidity_logits,
    articulation_logits, action_logits, box (BoxXYXY), axis_enc (3,),
    mask_logits (grid), affordance_logits (grid).
    """
    from .geometry import decode_axis, AxisEncoding

    acc = {k: [] for k in ("movable", "rigidity", "articulation", "action")}
    ious_box, ious_mask, eas, sims, d1, d2 = [], [], [], [], [], []
    for sample in samples:
        preds, depth_pred = predict_fn(sample)
        if len(preds) != len(sample.queries):
            raise ValueError(f"{sample.image_id}: prediction missing for some query")
        h, w = sample.image.shape[:2]
        for q, p in zip(sample.queries, preds):
            acc["movable"].append(int(np.argmax(p.movable_logits)) == _movable_idx(q.movable))
            if q.rigidity is not None:
                acc["rigidity"].append(int(np.argmax(p.rigidity_logits)) == _rigidity_idx(q.rigidity))
            if q.articulation is not None:
                acc["articulation"].append(
                    int(np.argmax(p.articulation_logits)) == _articulation_idx(q.articulation))
            if q.action is not None:
                acc["action"].append(int(np.argmax(p.action_logits)) == _action_idx(q.action))
            if q.box is not None:
                ious_box.append(box_iou(p.box, q.box))
            if q.mask is not None:
                pm = _resize_nn(np.asarray(p.mask_logits, dtype=float), h, w) > 0.0
                ious_mask.append(mask_iou(Mask.from_array(pm), q.mask))
            if q.axis is not None:
                try:
                    pl = decode_axis(AxisEncoding(*np.asarray(p.axis_enc, dtype=float)))
                    eas.append(ea_score(pl, q.axis))
                except GeometryError:
                    eas.append(0.0)
            if q.affordance is not None and q.affordance.keypoint is not None:
                heat = 1.0 / (1.0 + np.exp(-np.asarray(p.affordance_logits, dtype=float)))
                gh, gw = heat.shape
                bump = gaussian_bump(q.affordance.keypoint, q.affordance.radius_px, gw, gh)
                sims.append(sim(heat, bump))
        if depth_pred is not None and sample.depth is not None:
            gh, gw = np.asarray(depth_pred).shape
            gt = _resize_nn(sample.depth.astype(float), gh, gw)
            aligned = align_depth_affine(np.asarray(depth_pred, dtype=float), gt)
            d1.append(depth_delta(aligned, gt, 1.25, align=False))
            d2.append(depth_delta(aligned, gt, 1.25 ** 2, align=False))

    def mean(xs):
        return float(np.mean(xs)) if xs else float("nan")

    return MetricReport(
        movable_acc=mean(acc["movable"]), rigidity_acc=mean(acc["rigidity"]),
        articulation_acc=mean(acc["articulation"]), action_acc=mean(acc["action"]),
        box_iou=mean(ious_box), mask_iou=mean(ious_mask),
        axis_ea=mean(eas), affordance_sim=mean(sims),
        depth_delta_125=mean(d1), depth_delta_125_2=mean(d2),
    )


MOVABLE_ORDER = [MovableClass.FIXTURE, MovableClass.ONE_HAND, MovableClass.TWO_HANDS]
ARTICULATION_ORDER = [ArticulationClass.ROTATION, ArticulationClass.TRANSLATION,
                      ArticulationClass.FREEFORM]


def _movable_idx(v):
    return MOVABLE_ORDER.index(v)


def _rigidity_idx(v):
    from .datamodel import RigidityClass
    return [RigidityClass.RIGID, RigidityClass.NONRIGID].index(v)


def _articulation_idx(v):
    return ARTICULATION_ORDER.index(v)


def _action_idx(v):
    from .datamodel import ActionClass
    return [ActionClass.PULL, ActionClass.PUSH, ActionClass.OTHER].index(v)


# public label <-> index mapping shared with the trainer and service
movable_index = _movable_idx
rigidity_index = _rigidity_idx
articulation_index = _articulation_idx
action_index = _action_idx
