#!/usr/bin/env python3
"""Overfit experiment: train the toy model on a small synthetic split and
report the training-set metrics against the acceptance thresholds."""

import argparse
import json
import time
from pathlib import Path

import torch

from i3d.losses import LossConfig
from i3d.network import InteractionNet, NetworkConfig, load_checkpoint
from i3d.synthgen import generate_split
from i3d.trainer import TrainConfig, overfit_check, train


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="out_overfit")
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--epochs", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--lr", type=float, default=3e-4)
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    samples = [g.sample for g in generate_split(args.n, seed=args.seed)]
    model = InteractionNet(NetworkConfig())
    cfg = TrainConfig(epochs=args.epochs, seed=args.seed, lr=args.lr)
    t0 = time.time()
    best = train(model, samples, args.out, cfg, LossConfig())
    print(f"trained in {time.time() - t0:.0f}s, best checkpoint {best}")
    model, _ = load_checkpoint(best)
    report, results = overfit_check(model, samples)
    Path(args.out, "overfit_report.json").write_text(
        json.dumps({"metrics": report.to_dict(), "pass": results}, indent=1))
    print(json.dumps(report.to_dict(), indent=1))


if __name__ == "__main__":
    main()
