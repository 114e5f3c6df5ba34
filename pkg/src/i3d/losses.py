"""Training losses and their weighted combination.

Every function takes and returns torch tensors and is differentiable.
Per-term normalization is the mean over valid queries (or valid pixels),
so values are batch-size independent.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import torch
import torch.nn.functional as F

LOGIT_CLAMP = 15.0
MAD_EPS = 1e-6


@dataclass
class LossConfig:
    w_movable: float = 0.5
    w_rigidity: float = 0.5
    w_articulation: float = 0.5
    w_action: float = 0.5
    w_mask_focal: float = 2.0
    w_mask_dice: float = 2.0
    w_box_l1: float = 5.0
    w_box_giou: float = 2.0
    w_axis_angle: float = 1.0
    w_axis_offset: float = 10.0
    w_affordance: float = 100.0
    w_depth: float = 1.0
    focal_gamma: float = 2.0
    mask_focal_alpha: float = 0.25
    affordance_alpha: float = 0.95

    def __post_init__(self):
        for name, v in asdict(self).items():
            if name.startswith("w_") and v < 0:
                raise ValueError(f"{name} must be >= 0")

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, s: str) -> "LossConfig":
        return cls(**json.loads(s))


@dataclass
class LossReport:
    terms: dict = field(default_factory=dict)
    weighted: dict = field(default_factory=dict)
    total: torch.Tensor = None

    def scalars(self) -> dict:
        out = {k: float(v) for k, v in self.terms.items()}
        out["total"] = float(self.total)
        return out


def ce_loss(logits: torch.Tensor, label: torch.Tensor) -> torch.Tensor:
    """-log softmax(logits)[label], averaged when batched."""
    if logits.dim() == 1:
        logits = logits[None]
        label = label.reshape(1)
    return F.cross_entropy(logits, label)


def focal_loss(logits: torch.Tensor, target: torch.Tensor,
               alpha: float = 0.25, gamma: float = 2.0) -> torch.Tensor:
    """Binary focal loss over a grid, mean over pixels.

    -alpha * (1-p)^gamma * t * log(p) - (1-alpha) * p^gamma * (1-t) * log(1-p)
    with p = sigmoid(logit). Targets may be soft (gaussian bumps).
    """
    logits = logits.clamp(-LOGIT_CLAMP, LOGIT_CLAMP)
    p = torch.sigmoid(logits)
    log_p = F.logsigmoid(logits)
    log_1p = F.logsigmoid(-logits)
    pos = -alpha * (1 - p).pow(gamma) * target * log_p
    neg = -(1 - alpha) * p.pow(gamma) * (1 - target) * log_1p
    return (pos + neg).mean()


def dice_loss(prob: torch.Tensor, target: torch.Tensor, eps: float = 1.0) -> torch.Tensor:
    """1 - (2*sum(p*t) + eps) / (sum(p) + sum(t) + eps)."""
    inter = (prob * target).sum()
    return 1.0 - (2.0 * inter + eps) / (prob.sum() + target.sum() + eps)


def _box_area(b: torch.Tensor) -> torch.Tensor:
    return (b[..., 2] - b[..., 0]).clamp(min=0) * (b[..., 3] - b[..., 1]).clamp(min=0)


def giou(pred: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    """Generalized IoU of xyxy boxes (elementwise over trailing dim 4)."""
    lt = torch.maximum(pred[..., :2], gt[..., :2])
    rb = torch.minimum(pred[..., 2:], gt[..., 2:])
    inter = (rb - lt).clamp(min=0)
    inter_a = inter[..., 0] * inter[..., 1]
    union = _box_area(pred) + _box_area(gt) - inter_a
    iou = inter_a / union.clamp(min=1e-12)
    elt = torch.minimum(pred[..., :2], gt[..., :2])
    erb = torch.maximum(pred[..., 2:], gt[..., 2:])
    enc = (erb - elt).clamp(min=0)
    enc_a = (enc[..., 0] * enc[..., 1]).clamp(min=1e-12)
    return iou - (enc_a - union) / enc_a


def box_losses(pred: torch.Tensor, gt: torch.Tensor):
    """(L1 over the 4 normalized coords, 1 - GIoU). Errors on degenerate gt."""
    if torch.any(gt[..., 2] <= gt[..., 0]) or torch.any(gt[..., 3] <= gt[..., 1]):
        raise ValueError("degenerate ground-truth box")
    l1 = (pred - gt).abs().sum(dim=-1).mean()
    g = 1.0 - giou(pred, gt).mean()
    return l1, g


def axis_loss(pred_enc: torch.Tensor, gt_enc: torch.Tensor):
    """L1 on the continuous encoding: angle term over (s2, c2), offset on r."""
    angle = (pred_enc[..., :2] - gt_enc[..., :2]).abs().sum(dim=-1).mean()
    offset = (pred_enc[..., 2] - gt_enc[..., 2]).abs().mean()
    return angle, offset


def _align(grid: torch.Tensor, valid: torch.Tensor):
    """Shift by median, scale by mean absolute deviation from the median."""
    vals = grid[valid]
    shift = vals.median()
    scale = (vals - shift).abs().mean().clamp(min=MAD_EPS)
    return (grid - shift) / scale


def ssi_depth_loss(pred: torch.Tensor, gt: torch.Tensor, valid: torch.Tensor) -> torch.Tensor:
    """Scale- and shift-invariant L1: both grids aligned per image first."""
    if valid.sum() < 2:
        raise ValueError("ssi_depth_loss needs >= 2 valid pixels")
    pa = _align(pred, valid)
    ga = _align(gt, valid)
    return (pa - ga).abs()[valid].mean()


def gradient_matching_loss(pred: torch.Tensor, gt: torch.Tensor,
                           valid: torch.Tensor, scales: int = 4) -> torch.Tensor:
    """Mean L1 of h+v gradients of the aligned residual over dyadic scales."""
    if valid.sum() < 2:
        raise ValueError("gradient_matching_loss needs >= 2 valid pixels")
    res = _align(pred, valid) - _align(gt, valid)
    total = pred.new_zeros(())
    for k in range(scales):
        step = 2 ** k
        r = res[::step, ::step]
        v = valid[::step, ::step]
        gx = (r[:, 1:] - r[:, :-1]).abs()
        vx = v[:, 1:] & v[:, :-1]
        gy = (r[1:, :] - r[:-1, :]).abs()
        vy = v[1:, :] & v[:-1, :]
        cnt = vx.sum() + vy.sum()
        if cnt > 0:
            total = total + (gx[vx].sum() + gy[vy].sum()) / cnt
    return total


def total_loss(outputs: dict, targets: dict, cfg: LossConfig) -> LossReport:
    """Weighted combination over a padded batch.

    ``outputs``/``targets`` follow the tensor contract assembled by
    trainer.build_targets: per-query class labels with presence masks,
    grids at mask resolution, and per-image depth with a validity mask.
    Padded queries and absent annotations contribute exactly zero.
    """
    qvalid = targets["query_valid"]
    if qvalid.sum() == 0:
        raise ValueError("no valid query in batch")
    dev = outputs["movable_logits"].device
    zero = torch.zeros((), device=dev, dtype=outputs["movable_logits"].dtype)
    terms = {}

    def cls_term(name, n_cls):
        m = targets[f"{name}_mask"]
        if m.sum() == 0:
            return zero
        return ce_loss(outputs[f"{name}_logits"][m].reshape(-1, n_cls),
                       targets[name][m].reshape(-1))

    terms["movable"] = cls_term("movable", 3)
    terms["rigidity"] = cls_term("rigidity", 2)
    terms["articulation"] = cls_term("articulation", 3)
    terms["action"] = cls_term("action", 3)

    bm = targets["box_mask"]
    if bm.sum() > 0:
        l1, g = box_losses(outputs["box"][bm], targets["box"][bm])
        terms["box_l1"], terms["box_giou"] = l1, g
    else:
        terms["box_l1"] = terms["box_giou"] = zero

    mm = targets["mask_mask"]
    if mm.sum() > 0:
        logits = outputs["mask_logits"][mm]
        tgt = targets["mask"][mm]
        terms["mask_focal"] = focal_loss(logits, tgt, cfg.mask_focal_alpha, cfg.focal_gamma)
        probs = torch.sigmoid(logits.clamp(-LOGIT_CLAMP, LOGIT_CLAMP))
        dims = list(range(1, probs.dim()))
        inter = (probs * tgt).sum(dim=dims)
        terms["mask_dice"] = (1.0 - (2 * inter + 1.0) /
                              (probs.sum(dim=dims) + tgt.sum(dim=dims) + 1.0)).mean()
    else:
        terms["mask_focal"] = terms["mask_dice"] = zero

    am = targets["axis_mask"]
    if am.sum() > 0:
        angle, offset = axis_loss(outputs["axis_enc"][am], targets["axis"][am])
        terms["axis_angle"], terms["axis_offset"] = angle, offset
    else:
        terms["axis_angle"] = terms["axis_offset"] = zero

    fm = targets["affordance_mask"]
    if fm.sum() > 0:
        terms["affordance"] = focal_loss(outputs["affordance_logits"][fm],
                                         targets["affordance"][fm],
                                         cfg.affordance_alpha, cfg.focal_gamma)
    else:
        terms["affordance"] = zero

    # depth: only images that carry depth ground truth
    terms["depth_ssi"] = zero
    terms["depth_grad"] = zero
    dvalid = targets["depth_mask"]
    with_depth = [b for b in range(dvalid.shape[0]) if dvalid[b].sum() >= 2]
    if with_depth:
        ssi = zero
        grad = zero
        for b in with_depth:
            ssi = ssi + ssi_depth_loss(outputs["depth"][b], targets["depth"][b], dvalid[b])
            grad = grad + gradient_matching_loss(outputs["depth"][b], targets["depth"][b], dvalid[b])
        terms["depth_ssi"] = ssi / len(with_depth)
        terms["depth_grad"] = grad / len(with_depth)

    weights = {
        "movable": cfg.w_movable, "rigidity": cfg.w_rigidity,
        "articulation": cfg.w_articulation, "action": cfg.w_action,
        "mask_focal": cfg.w_mask_focal, "mask_dice": cfg.w_mask_dice,
        "box_l1": cfg.w_box_l1, "box_giou": cfg.w_box_giou,
        "axis_angle": cfg.w_axis_angle, "axis_offset": cfg.w_axis_offset,
        "affordance": cfg.w_affordance,
        "depth_ssi": cfg.w_depth, "depth_grad": cfg.w_depth,
    }
    weighted = {k: weights[k] * v for k, v in terms.items()}
    total = sum(weighted.values())
    return LossReport(terms=terms, weighted=weighted, total=total)
