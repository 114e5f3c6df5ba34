"""Stateless HTTP inference service.

Endpoints: POST /predict, POST /render, GET /health, GET /frames/...
Requests never mutate the model; render results are cached under a hash of
the request body.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import math
import tempfile
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from PIL import Image

from .datamodel import MAX_QUERIES, Mask, QueryPoint, SchemaError
from .geometry import AxisEncoding, CameraModel, GeometryError, decode_axis
from .network import load_checkpoint, predict
from .renderer import render_rotation, render_translation

MAX_IMAGE_BYTES = 8 * 1024 * 1024
MAX_IMAGE_SIDE = 4096

MOVABLE_LABELS = ["fixture", "one_hand", "two_hands"]
RIGIDITY_LABELS = ["rigid", "nonrigid"]
ARTICULATION_LABELS = ["rotation", "translation", "freeform"]
ACTION_LABELS = ["pull", "push", "other"]


def _softmax(x):
    x = np.asarray(x, dtype=float)
    e = np.exp(x - x.max())
    return e / e.sum()


def _head(logits, labels):
    p = _softmax(logits)
    # renormalize after rounding so the published invariant (sum == 1) holds
    r = [round(float(v), 6) for v in p]
    r[int(np.argmax(p))] += round(1.0 - sum(r), 6)
    return {"label": labels[int(np.argmax(p))],
            "probs": {lbl: round(float(v), 6) for lbl, v in zip(labels, r)}}


def _quantize_u8(grid: np.ndarray) -> dict:
    g = np.asarray(grid, dtype=float)
    lo, hi = float(g.min()), float(g.max())
    scale = (hi - lo) or 1.0
    q = np.round((g - lo) / scale * 255).astype(np.uint8)
    return {"width": g.shape[1], "height": g.shape[0],
            "encoding": "base64_u8", "lo": round(lo, 6), "hi": round(hi, 6),
            "data": base64.b64encode(q.tobytes()).decode("ascii")}


def prediction_to_json(pred, include_logit_grids=True) -> dict:
    """Serialize one InteractionPrediction into the response schema."""
    art = _head(pred.articulation_logits, ARTICULATION_LABELS)
    axis = None
    if art["label"] == "rotation":
        try:
            line = decode_axis(AxisEncoding(*map(float, pred.axis_enc)))
            axis = {"theta": round(line.theta, 6), "r": round(line.r, 6)}
        except GeometryError:
            axis = None
    mask_prob = 1.0 / (1.0 + np.exp(-np.asarray(pred.mask_logits, dtype=float)))
    mask = Mask.from_array(mask_prob >= 0.5)
    heat = 1.0 / (1.0 + np.exp(-np.asarray(pred.affordance_logits, dtype=float)))
    peak = np.unravel_index(int(np.argmax(heat)), heat.shape)
    gh, gw = heat.shape
    return {
        "movable": _head(pred.movable_logits, MOVABLE_LABELS),
        "rigidity": _head(pred.rigidity_logits, RIGIDITY_LABELS),
        "articulation": art,
        "action": _head(pred.action_logits, ACTION_LABELS),
        "box": {"x1": round(pred.box.x1, 6), "y1": round(pred.box.y1, 6),
                "x2": round(pred.box.x2, 6), "y2": round(pred.box.y2, 6)},
        "axis": axis,
        "mask": {"width": mask.width, "height": mask.height,
                 "counts": list(mask.counts)},
        "affordance": {
            "heatmap": _quantize_u8(heat) if include_logit_grids else None,
            "point": {"x": round((peak[1] + 0.5) / gw, 6),
                      "y": round((peak[0] + 0.5) / gh, 6)},
        },
    }


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def _decode_image(b64: str):
    try:
        raw = base64.b64decode(b64, validate=True)
    except Exception:
        raise ValueError("image is not valid base64")
    return _image_from_bytes(raw)


def _image_from_bytes(raw: bytes):
    if len(raw) > MAX_IMAGE_BYTES:
        raise OverflowError("image payload too large")
    try:
        img = Image.open(io.BytesIO(raw)).convert("RGB")
    except Exception:
        raise ValueError("image bytes are not a decodable image")
    if img.width > MAX_IMAGE_SIDE or img.height > MAX_IMAGE_SIDE:
        raise OverflowError("image dimensions too large")
    return np.asarray(img)


def _parse_points(raw) -> list:
    if not isinstance(raw, list) or len(raw) == 0:
        raise ValueError("points must be a non-empty list")
    if len(raw) > MAX_QUERIES:
        raise IndexError(f"at most {MAX_QUERIES} points per request")
    pts = []
    for p in raw:
        try:
            pts.append(QueryPoint(float(p["x"]), float(p["y"])))
        except (KeyError, TypeError):
            raise ValueError("each point needs numeric x and y")
        except SchemaError as e:
            raise ValueError(str(e))
    return pts


def create_app(checkpoint_path=None, cache_dir=None) -> FastAPI:
    app = FastAPI(title="i3d inference service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    cache_dir = Path(cache_dir or tempfile.mkdtemp(prefix="i3d_frames_"))
    cache_dir.mkdir(parents=True, exist_ok=True)
    state = {"model": None, "checkpoint_id": None, "lock": threading.Lock()}
    if checkpoint_path:
        model, _ = load_checkpoint(checkpoint_path)
        state["model"] = model
        state["checkpoint_id"] = hashlib.sha256(
            Path(checkpoint_path).read_bytes()).hexdigest()

    @app.get("/health")
    def health():
        model = state["model"]
        return {
            "status": "ok" if model is not None else "degraded",
            "checkpoint_id": state["checkpoint_id"],
            "config": None if model is None else {
                k: getattr(model.cfg, k) for k in
                ("input_h", "input_w", "patch_size", "embed_dim",
                 "encoder_depth", "decoder_depth", "num_heads",
                 "mask_down", "n_queries")},
        }

    async def _read_predict_request(request: Request):
        ctype = request.headers.get("content-type", "")
        if ctype.startswith("multipart/"):
            form = await request.form()
            if "image" not in form:
                raise ValueError("multipart request needs an 'image' file")
            raw = await form["image"].read()
            image = _image_from_bytes(raw)
            points = _parse_points(json.loads(form.get("points", "[]")))
            include_depth = str(form.get("include_depth", "false")).lower() == "true"
            return image, points, include_depth
        body = await request.body()
        try:
            doc = json.loads(body)
        except json.JSONDecodeError:
            raise ValueError("request body is not valid JSON")
        if not isinstance(doc, dict) or "image" not in doc:
            raise ValueError("request needs an 'image' field")
        image = _decode_image(doc["image"])
        points = _parse_points(doc.get("points"))
        return image, points, bool(doc.get("include_depth", False))

    @app.post("/predict")
    async def predict_endpoint(request: Request):
        if state["model"] is None:
            return _error(500, "no checkpoint loaded")
        try:
            image, points, include_depth = await _read_predict_request(request)
        except OverflowError as e:
            return _error(413, str(e))
        except IndexError as e:
            return _error(422, str(e))
        except ValueError as e:
            return _error(400, str(e))
        try:
            preds, depth = predict(state["model"], image, points)
        except Exception as e:  # inference failure diagnostics
            return _error(500, f"inference failed: {e}")
        doc = {"points": [prediction_to_json(p) for p in preds]}
        if include_depth:
            doc["depth"] = _quantize_u8(depth)
        payload = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return Response(content=payload, media_type="application/json")

    @app.post("/render")
    async def render_endpoint(request: Request):
        if state["model"] is None:
            return _error(500, "no checkpoint loaded")
        body = await request.body()
        try:
            doc = json.loads(body)
            image = _decode_image(doc["image"])
            point = _parse_points([doc["point"]])[0]
        except OverflowError as e:
            return _error(413, str(e))
        except (ValueError, KeyError, TypeError) as e:
            return _error(400, f"malformed render request: {e}")
        angles = doc.get("angles")
        offsets = doc.get("offsets")
        key = hashlib.sha256(body).hexdigest()[:24]
        manifest_path = cache_dir / key / "manifest.json"
        with state["lock"]:
            if manifest_path.exists():
                return json.loads(manifest_path.read_text())
            try:
                manifest = _render_to_cache(state["model"], image, point,
                                            angles, offsets, cache_dir / key, key)
            except GeometryError as e:
                return _error(422, f"cannot render articulation: {e}")
            except Exception as e:
                return _error(500, f"render failed: {e}")
            return manifest

    @app.get("/frames/{key}/{name}")
    def get_frame(key: str, name: str):
        path = cache_dir / key / name
        if not path.exists() or not name.endswith(".png"):
            return _error(404, "no such frame")
        return Response(content=path.read_bytes(), media_type="image/png")

    app.state.i3d = state
    return app


def _render_to_cache(model, image, point, angles, offsets, out_dir: Path, key: str) -> dict:
    import cv2

    preds, depth = predict(model, image, [point])
    pred = preds[0]
    doc = prediction_to_json(pred, include_logit_grids=False)
    cfg = model.cfg
    cam = CameraModel.default_for(cfg.input_w, cfg.input_h)
    small = cv2.resize(image, (cfg.input_w, cfg.input_h), interpolation=cv2.INTER_AREA)
    mask_prob = 1.0 / (1.0 + np.exp(-np.asarray(pred.mask_logits, dtype=float)))
    mask = cv2.resize((mask_prob >= 0.5).astype(np.uint8),
                      (cfg.input_w, cfg.input_h), interpolation=cv2.INTER_NEAREST) > 0
    dgrid = cv2.resize(np.asarray(depth, dtype=np.float32),
                       (cfg.input_w, cfg.input_h), interpolation=cv2.INTER_LINEAR)
    # the predicted depth is scale/shift free; pin it to a nominal desk range
    lo, hi = float(dgrid.min()), float(dgrid.max())
    dgrid = 2.5 + 2.0 * (dgrid - lo) / ((hi - lo) or 1.0)
    art = doc["articulation"]["label"]
    if offsets is not None or (art == "translation" and angles is None):
        offsets = offsets or [0.0, 0.1, 0.2, 0.3, 0.4]
        clip = render_translation(small, mask, dgrid, cam, offsets)
    else:
        if angles is None:
            angles = list(np.linspace(0.0, math.radians(45.0), 5))
        if doc["axis"] is None:
            raise GeometryError("no rotation axis predicted at this point")
        from .geometry import Line2D
        axis = Line2D.make(doc["axis"]["theta"], doc["axis"]["r"])
        clip = render_rotation(small, mask, axis, dgrid, cam, angles)
    out_dir.mkdir(parents=True, exist_ok=True)
    urls = []
    for i, frame in enumerate(clip.frames):
        name = f"frame_{i:03d}.png"
        Image.fromarray(frame.image).save(out_dir / name)
        urls.append(f"/frames/{key}/{name}")
    manifest = {
        "key": key,
        "kind": clip.kind,
        "parameters": clip.parameters(),
        "homographies": [[list(r) for r in f.homography.matrix] for f in clip.frames],
        "frame_urls": urls,
        "prediction": doc,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest))
    return manifest
