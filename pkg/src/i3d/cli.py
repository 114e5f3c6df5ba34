"""Command-line entry points: gen-data, train, eval, predict,
render-interaction and serve."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np


@click.group()
def main():
    """Query-point 3D object interaction toolkit."""


@main.command("gen-data")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--n", "n", required=True, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--split", default="train", type=click.Choice(["train", "val", "test"]))
def gen_data(out_dir, n, seed, split):
    """Generate a synthetic split into the dataset layout."""
    from .datamodel import save_sample
    from .synthgen import generate_split

    target = Path(out_dir) / split
    for gen in generate_split(n, seed):
        save_sample(gen.sample, target)
    click.echo(f"wrote {n} samples to {target}")


@main.command("train")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_file", type=click.Path(exists=True))
@click.option("--resume", "resume_from", type=click.Path(exists=True))
def train_cmd(data_dir, out_dir, config_file, resume_from):
    """Train on dataset/{train,val} splits; writes checkpoints + loss curve."""
    from .datamodel import load_split
    from .losses import LossConfig
    from .network import InteractionNet, NetworkConfig
    from .trainer import TrainConfig, train

    doc = json.loads(Path(config_file).read_text()) if config_file else {}
    net_cfg = NetworkConfig(**doc.get("network", {}))
    train_cfg = TrainConfig(**doc.get("train", {}))
    loss_cfg = LossConfig(**doc.get("loss", {}))
    data_dir = Path(data_dir)
    train_samples = load_split(data_dir / "train" if (data_dir / "train").exists() else data_dir)
    if not train_samples:
        raise click.ClickException(f"no samples under {data_dir}")
    val_samples = load_split(data_dir / "val") if (data_dir / "val").exists() else None
    import torch
    torch.manual_seed(train_cfg.seed)
    model = InteractionNet(net_cfg)
    best = train(model, train_samples, out_dir, train_cfg, loss_cfg,
                 val_samples=val_samples, resume_from=resume_from, log=click.echo)
    click.echo(f"best checkpoint: {best}")


@main.command("eval")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
def eval_cmd(data_dir, checkpoint):
    """Print a MetricReport as JSON (stdout) and a table (stderr)."""
    from .datamodel import load_split
    from .metrics import evaluate
    from .network import load_checkpoint
    from .trainer import model_predict_fn

    model, _ = load_checkpoint(checkpoint)
    samples = load_split(data_dir)
    if not samples:
        raise click.ClickException(f"no samples under {data_dir}")
    report = evaluate(samples, model_predict_fn(model))
    click.echo(json.dumps(report.to_dict(), indent=1))
    click.echo(report.table(), err=True)


def _parse_point(text):
    from .datamodel import QueryPoint

    try:
        x, y = (float(v) for v in text.split(","))
        return QueryPoint(x, y)
    except Exception as e:
        raise click.ClickException(f"bad --point {text!r}: {e}")


@main.command("predict")
@click.option("--image", "image_file", required=True, type=click.Path(exists=True))
@click.option("--point", "points", multiple=True, required=True,
              help="normalized x,y — repeatable, up to 15")
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--include-depth", is_flag=True, default=False)
def predict_cmd(image_file, points, checkpoint, include_depth):
    """Offline prediction: prints the PredictResponse JSON."""
    from PIL import Image

    from .network import load_checkpoint, predict
    from .service import prediction_to_json, _quantize_u8

    pts = [_parse_point(p) for p in points]
    if len(pts) > 15:
        raise click.ClickException("at most 15 points")
    model, _ = load_checkpoint(checkpoint)
    image = np.asarray(Image.open(image_file).convert("RGB"))
    preds, depth = predict(model, image, pts)
    doc = {"points": [prediction_to_json(p) for p in preds]}
    if include_depth:
        doc["depth"] = _quantize_u8(depth)
    click.echo(json.dumps(doc, sort_keys=True))


@main.command("render-interaction")
@click.option("--image", "image_file", required=True, type=click.Path(exists=True))
@click.option("--point", required=True, help="normalized x,y")
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--frames", default=5, type=int)
@click.option("--max-angle-deg", default=45.0, type=float)
def render_cmd(image_file, point, checkpoint, out_dir, frames, max_angle_deg):
    """Write numbered PNG frames + manifest.json depicting the 3D motion."""
    import base64
    import math

    from PIL import Image

    from .network import load_checkpoint
    from .service import _render_to_cache

    model, _ = load_checkpoint(checkpoint)
    image = np.asarray(Image.open(image_file).convert("RGB"))
    pt = _parse_point(point)
    angles = list(np.linspace(0.0, math.radians(max_angle_deg), max(1, frames)))
    manifest = _render_to_cache(model, image, pt, angles, None,
                                Path(out_dir), Path(out_dir).name)
    click.echo(json.dumps({k: manifest[k] for k in
                           ("kind", "parameters", "homographies", "frame_urls")}))


@main.command("serve")
@click.option("--port", default=8000, type=int)
@click.option("--host", default="127.0.0.1")
@click.option("--checkpoint", type=click.Path(exists=True))
def serve_cmd(port, host, checkpoint):
    """Run the HTTP inference service (I3D_CHECKPOINT overrides --checkpoint)."""
    import uvicorn

    from .service import create_app

    checkpoint = os.environ.get("I3D_CHECKPOINT", checkpoint)
    if checkpoint is None:
        click.echo("warning: serving without a checkpoint (degraded)", err=True)
    app = create_app(checkpoint)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
