"""Training loop: batching with query padding, AdamW, checkpointing,
per-epoch loss logging and the synthetic-overfit harness."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import cv2
import numpy as np
import torch

from . import metrics as M
from .datamodel import MovableClass, SceneSample, pad_queries
from .geometry import encode_axis, gaussian_bump
from .losses import LossConfig, total_loss
from .network import (InteractionNet, NetworkConfig, image_to_tensor,
                      load_checkpoint, predict, save_checkpoint)


@dataclass
class TrainConfig:
    lr: float = 1e-4
    epochs: int = 60
    batch_size: int = 2
    weight_decay: float = 1e-4
    grad_clip: float = 1.0  # set <= 0 to disable
    checkpoint_interval: int = 10
    seed: int = 0
    lr_final_frac: float = 0.1  # cosine decay floor, as a fraction of lr

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


class TrainingDiverged(RuntimeError):
    pass


def _resize_mask(arr: np.ndarray, mh: int, mw: int) -> np.ndarray:
    r = cv2.resize(arr.astype(np.float32), (mw, mh), interpolation=cv2.INTER_AREA)
    return (r >= 0.5).astype(np.float32)


def build_targets(samples: list, cfg: NetworkConfig, device="cpu") -> tuple:
    """Assemble (images, points, targets) tensors for a batch of SceneSamples.

    Padded queries and absent annotations get zeroed masks so they contribute
    exactly nothing to any loss term.
    """
    b = len(samples)
    q = cfg.n_queries
    mh, mw = cfg.mask_res
    images = torch.cat([image_to_tensor(s.image, cfg) for s in samples]).to(device)
    points = torch.zeros(b, q, 2)
    t = {
        "query_valid": torch.zeros(b, q, dtype=torch.bool),
        "movable": torch.zeros(b, q, dtype=torch.long),
        "movable_mask": torch.zeros(b, q, dtype=torch.bool),
        "rigidity": torch.zeros(b, q, dtype=torch.long),
        "rigidity_mask": torch.zeros(b, q, dtype=torch.bool),
        "articulation": torch.zeros(b, q, dtype=torch.long),
        "articulation_mask": torch.zeros(b, q, dtype=torch.bool),
        "action": torch.zeros(b, q, dtype=torch.long),
        "action_mask": torch.zeros(b, q, dtype=torch.bool),
        "box": torch.zeros(b, q, 4),
        "box_mask": torch.zeros(b, q, dtype=torch.bool),
        "mask": torch.zeros(b, q, mh, mw),
        "mask_mask": torch.zeros(b, q, dtype=torch.bool),
        "axis": torch.zeros(b, q, 3),
        "axis_mask": torch.zeros(b, q, dtype=torch.bool),
        "affordance": torch.zeros(b, q, mh, mw),
        "affordance_mask": torch.zeros(b, q, dtype=torch.bool),
        "depth": torch.ones(b, mh, mw),
        "depth_mask": torch.zeros(b, mh, mw, dtype=torch.bool),
    }
    for bi, s in enumerate(samples):
        padded, valid = pad_queries([a.point for a in s.queries])
        points[bi] = torch.tensor([[p.x, p.y] for p in padded])
        t["query_valid"][bi] = torch.from_numpy(valid)
        for qi, ann in enumerate(s.queries):
            t["movable"][bi, qi] = M.movable_index(ann.movable)
            t["movable_mask"][bi, qi] = True
            if ann.rigidity is not None:
                t["rigidity"][bi, qi] = M.rigidity_index(ann.rigidity)
                t["rigidity_mask"][bi, qi] = True
            if ann.articulation is not None:
                t["articulation"][bi, qi] = M.articulation_index(ann.articulation)
                t["articulation_mask"][bi, qi] = True
            if ann.action is not None:
                t["action"][bi, qi] = M.action_index(ann.action)
                t["action_mask"][bi, qi] = True
            if ann.box is not None:
                t["box"][bi, qi] = torch.tensor(ann.box.as_tuple())
                t["box_mask"][bi, qi] = True
            if ann.mask is not None:
                t["mask"][bi, qi] = torch.from_numpy(
                    _resize_mask(ann.mask.to_array(), mh, mw))
                t["mask_mask"][bi, qi] = True
            if ann.axis is not None:
                e = encode_axis(ann.axis)
                t["axis"][bi, qi] = torch.tensor([e.s2, e.c2, e.r])
                t["axis_mask"][bi, qi] = True
            if ann.affordance is not None and ann.affordance.keypoint is not None:
                bump = gaussian_bump(ann.affordance.keypoint,
                                     ann.affordance.radius_px, mw, mh)
                t["affordance"][bi, qi] = torch.from_numpy(bump.astype(np.float32))
                t["affordance_mask"][bi, qi] = True
        if s.depth is not None:
            d = cv2.resize(s.depth.astype(np.float32), (mw, mh),
                           interpolation=cv2.INTER_AREA)
            t["depth"][bi] = torch.from_numpy(d)
            t["depth_mask"][bi] = torch.from_numpy(d > 0)
    return images.to(device), points.to(device), {k: v.to(device) for k, v in t.items()}


LOSS_TERM_ORDER = ["movable", "rigidity", "articulation", "action",
                   "mask_focal", "mask_dice", "box_l1", "box_giou",
                   "axis_angle", "axis_offset", "affordance",
                   "depth_ssi", "depth_grad"]


def train(model: InteractionNet, train_samples: list, out_dir,
          cfg: TrainConfig, loss_cfg: LossConfig = None,
          val_samples: list = None, resume_from=None, log=print) -> Path:
    """Train in place; writes loss_curve.csv and checkpoints under out_dir.

    Returns the path of the best checkpoint (lowest validation loss, or
    lowest training loss when no validation split is given).
    """
    loss_cfg = loss_cfg or LossConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    opt = torch.optim.AdamW(model.parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    start_epoch = 0
    if resume_from is not None:
        payload = torch.load(resume_from, map_location="cpu", weights_only=False)
        model.load_state_dict(payload["state_dict"])
        extra = payload.get("extra", {})
        if "optimizer" in extra:
            opt.load_state_dict(extra["optimizer"])
        start_epoch = extra.get("epoch", 0)

    curve_path = out_dir / "loss_curve.csv"
    best_path = out_dir / "checkpoint_best.pt"
    last_path = out_dir / "checkpoint_last.pt"
    best_loss = math.inf
    mode = "a" if (resume_from is not None and curve_path.exists()) else "w"
    with open(curve_path, mode, newline="") as fh:
        writer = csv.writer(fh)
        if mode == "w":
            writer.writerow(["epoch"] + LOSS_TERM_ORDER + ["total"])
        for epoch in range(start_epoch, cfg.epochs):
            # cosine decay to lr_final_frac * lr so late epochs settle
            frac = max(0.0, min(1.0, cfg.lr_final_frac))
            cos = 0.5 * (1.0 + math.cos(math.pi * epoch / max(1, cfg.epochs - 1)))
            for group in opt.param_groups:
                group["lr"] = cfg.lr * (frac + (1.0 - frac) * cos)
            model.train()
            order = rng.permutation(len(train_samples))
            sums = {k: 0.0 for k in LOSS_TERM_ORDER}
            total_sum, n_batches = 0.0, 0
            for i in range(0, len(order), cfg.batch_size):
                batch = [train_samples[j] for j in order[i:i + cfg.batch_size]]
                images, points, targets = build_targets(batch, model.cfg)
                out = model(images, points)
                report = total_loss(out, targets, loss_cfg)
                if not torch.isfinite(report.total):
                    bad = [k for k, v in report.terms.items() if not torch.isfinite(v)]
                    raise TrainingDiverged(
                        f"non-finite loss at epoch {epoch}: offending terms {bad}")
                opt.zero_grad()
                report.total.backward()
                if cfg.grad_clip > 0:
                    torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
                opt.step()
                for k in LOSS_TERM_ORDER:
                    sums[k] += float(report.terms[k].detach())
                total_sum += float(report.total.detach())
                n_batches += 1
            means = [sums[k] / n_batches for k in LOSS_TERM_ORDER]
            epoch_loss = total_sum / n_batches
            writer.writerow([epoch] + [f"{m:.6f}" for m in means] + [f"{epoch_loss:.6f}"])
            fh.flush()
            if (epoch + 1) % max(1, cfg.checkpoint_interval) == 0 or epoch == cfg.epochs - 1:
                save_checkpoint(last_path, model,
                                extra={"epoch": epoch + 1, "optimizer": opt.state_dict()})
            score = epoch_loss
            if val_samples:
                score = _eval_loss(model, val_samples, cfg.batch_size, loss_cfg)
            if score < best_loss:
                best_loss = score
                save_checkpoint(best_path, model, extra={"epoch": epoch + 1})
            if epoch % 10 == 0 or epoch == cfg.epochs - 1:
                log(f"epoch {epoch}: loss {epoch_loss:.4f}")
    if not best_path.exists():
        save_checkpoint(best_path, model, extra={"epoch": cfg.epochs})
    return best_path


@torch.no_grad()
def _eval_loss(model, samples, batch_size, loss_cfg) -> float:
    model.eval()
    tot, n = 0.0, 0
    for i in range(0, len(samples), batch_size):
        batch = samples[i:i + batch_size]
        images, points, targets = build_targets(batch, model.cfg)
        report = total_loss(model(images, points), targets, loss_cfg)
        tot += float(report.total)
        n += 1
    return tot / n


def model_predict_fn(model: InteractionNet):
    """Adapter matching the metrics.evaluate predict_fn contract."""

    def fn(sample: SceneSample):
        return predict(model, sample.image, [q.point for q in sample.queries])

    return fn


OVERFIT_THRESHOLDS = {
    "movable_acc": 0.95,
    "articulation_acc": 0.90,
    "axis_ea": 0.75,
    "mask_iou": 0.60,
    "affordance_sim": 0.50,
    "depth_delta_125": 0.90,
}


def overfit_check(model: InteractionNet, samples: list,
                  thresholds: dict = None, log=print):
    """Evaluate the acceptance thresholds on (typically) the training set.

    Returns (MetricReport, dict of criterion -> bool).
    """
    thresholds = thresholds or OVERFIT_THRESHOLDS
    report = M.evaluate(samples, model_predict_fn(model))
    values = report.to_dict()
    results = {}
    for key, thr in thresholds.items():
        ok = values[key] >= thr
        results[key] = bool(ok)
        log(f"[{'PASS' if ok else 'FAIL'}] {key}: {values[key]:.4f} (>= {thr})")
    return report, results
