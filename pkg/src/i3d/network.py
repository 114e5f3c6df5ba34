"""Query-conditioned multi-head predictor.

A small ViT-style encoder maps the image to a token memory; point queries
(Fourier positional encodings) and one learnable depth query read it through
separate two-way decoders. Cross-query attention is deliberately absent:
every query is processed against its own copy of the memory, so per-query
outputs are exactly independent of the other queries.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

from .datamodel import MAX_QUERIES, BoxXYXY
from .geometry import AxisEncoding


@dataclass
class NetworkConfig:
    input_h: int = 192
    input_w: int = 256
    patch_size: int = 16
    embed_dim: int = 128
    encoder_depth: int = 4
    decoder_depth: int = 2
    num_heads: int = 4
    mask_down: int = 4  # mask/affordance/depth grids at input/mask_down
    n_queries: int = MAX_QUERIES
    affordance_radius_px: float = 5.0  # bump radius on the affordance grid

    def __post_init__(self):
        if self.input_h % self.patch_size or self.input_w % self.patch_size:
            raise ValueError("input size must be divisible by patch_size")
        if self.n_queries != MAX_QUERIES:
            raise ValueError(f"n_queries is fixed at {MAX_QUERIES}")

    @property
    def mask_res(self):
        return (self.input_h // self.mask_down, self.input_w // self.mask_down)

    @property
    def grid_hw(self):
        return (self.input_h // self.patch_size, self.input_w // self.patch_size)


FOURIER_OCTAVES = 6


def fourier_features(points: torch.Tensor) -> torch.Tensor:
    """Positional encoding of normalized (x, y) with octave-decaying
    amplitudes, so feature distance grows monotonically with point distance."""
    feats = []
    for k in range(FOURIER_OCTAVES):
        freq = 0.5 * (2 ** k)
        amp = 4.0 ** (-k)
        ang = 2 * math.pi * freq * points
        feats.append(amp * torch.sin(ang))
        feats.append(amp * torch.cos(ang))
    return torch.cat(feats, dim=-1)


class Mlp(nn.Module):
    def __init__(self, dim, hidden, out=None, layers=2):
        super().__init__()
        out = out or dim
        mods = []
        d = dim
        for i in range(layers - 1):
            mods += [nn.Linear(d, hidden), nn.GELU()]
            d = hidden
        mods.append(nn.Linear(d, out))
        self.net = nn.Sequential(*mods)

    def forward(self, x):
        return self.net(x)


class EncoderBlock(nn.Module):
    def __init__(self, dim, heads):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = Mlp(dim, dim * 4, layers=2)

    def forward(self, x):
        h = self.norm1(x)
        x = x + self.attn(h, h, h, need_weights=False)[0]
        x = x + self.mlp(self.norm2(x))
        return x


class ImageEncoder(nn.Module):
    """Convolutional patch embed + transformer blocks, trained from scratch."""

    def __init__(self, cfg: NetworkConfig):
        super().__init__()
        self.patch = nn.Conv2d(3, cfg.embed_dim, cfg.patch_size, cfg.patch_size)
        gh, gw = cfg.grid_hw
        self.pos = nn.Parameter(torch.zeros(1, gh * gw, cfg.embed_dim))
        nn.init.trunc_normal_(self.pos, std=0.02)
        self.blocks = nn.ModuleList(
            EncoderBlock(cfg.embed_dim, cfg.num_heads) for _ in range(cfg.encoder_depth))
        self.norm = nn.LayerNorm(cfg.embed_dim)

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        x = self.patch(image).flatten(2).transpose(1, 2) + self.pos
        for blk in self.blocks:
            x = blk(x)
        return self.norm(x)


class TwoWayBlock(nn.Module):
    """Query reads memory, query MLP, memory reads query back.

    The memory side carries no MLP: attention-only updates keep the block
    cheap while still letting query information reshape the pixel features.
    """

    def __init__(self, dim, heads):
        super().__init__()
        self.q_norm = nn.LayerNorm(dim)
        self.q2m = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.q_mlp_norm = nn.LayerNorm(dim)
        self.q_mlp = Mlp(dim, dim * 2, layers=2)
        self.m_norm = nn.LayerNorm(dim)
        self.m2q = nn.MultiheadAttention(dim, heads, batch_first=True)

    def forward(self, q, m):
        q = q + self.q2m(self.q_norm(q), m, m, need_weights=False)[0]
        q = q + self.q_mlp(self.q_mlp_norm(q))
        m = m + self.m2q(self.m_norm(m), q, q, need_weights=False)[0]
        return q, m


class TwoWayDecoder(nn.Module):
    """Stack of two-way blocks plus a strided upscale of the final memory to
    mask resolution; returns (pooled query feature, pixel features)."""

    def __init__(self, cfg: NetworkConfig, pixel_dim: int = 32):
        super().__init__()
        self.cfg = cfg
        self.blocks = nn.ModuleList(
            TwoWayBlock(cfg.embed_dim, cfg.num_heads) for _ in range(cfg.decoder_depth))
        self.q_out_norm = nn.LayerNorm(cfg.embed_dim)
        up = cfg.patch_size // cfg.mask_down
        self.upscale = nn.ConvTranspose2d(cfg.embed_dim, pixel_dim, up, up)
        self.pixel_dim = pixel_dim

    def forward(self, queries: torch.Tensor, memory: torch.Tensor):
        # queries: (N, 1, D); memory: (N, T, D) — one memory copy per query
        q, m = queries, memory
        for blk in self.blocks:
            q, m = blk(q, m)
        gh, gw = self.cfg.grid_hw
        grid = m.transpose(1, 2).reshape(-1, self.cfg.embed_dim, gh, gw)
        return self.q_out_norm(q[:, 0]), self.upscale(grid)


class InteractionNet(nn.Module):
    def __init__(self, cfg: NetworkConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.embed_dim
        self.encoder = ImageEncoder(cfg)
        self.point_proj = nn.Linear(4 * FOURIER_OCTAVES, d)
        with torch.no_grad():  # distance-preserving init for the point encoder
            nn.init.orthogonal_(self.point_proj.weight)
            self.point_proj.bias.zero_()
        self.depth_query = nn.Parameter(torch.zeros(1, 1, d))
        nn.init.trunc_normal_(self.depth_query, std=0.02)
        self.mask_decoder = TwoWayDecoder(cfg)
        self.affordance_decoder = TwoWayDecoder(cfg)
        self.depth_decoder = TwoWayDecoder(cfg)
        pd = self.mask_decoder.pixel_dim
        self.movable_head = nn.Linear(d, 3)
        self.rigidity_head = nn.Linear(d, 2)
        self.articulation_head = nn.Linear(d, 3)
        self.action_head = nn.Linear(d, 3)
        self.box_head = Mlp(d, d, out=4, layers=3)
        self.axis_head = Mlp(d, d, out=3, layers=3)
        self.mask_embed = Mlp(d, d, out=pd, layers=3)
        self.affordance_embed = Mlp(d, d, out=pd, layers=3)
        self.depth_embed = Mlp(d, d, out=pd, layers=3)
        self.depth_bias = nn.Parameter(torch.zeros(1))

    def encode_image(self, image: torch.Tensor) -> torch.Tensor:
        """(B, 3, H, W) normalized image -> (B, T, D) memory."""
        b, c, h, w = image.shape
        if (h, w) != (self.cfg.input_h, self.cfg.input_w):
            raise ValueError(f"expected {self.cfg.input_h}x{self.cfg.input_w} input, got {h}x{w}")
        return self.encoder(image)

    def encode_query_points(self, points: torch.Tensor) -> torch.Tensor:
        """(B, Q, 2) normalized points -> (B, Q, D) embeddings."""
        if torch.any(points < 0) or torch.any(points > 1):
            raise ValueError("query points must lie in [0,1]^2")
        return self.point_proj(fourier_features(points))

    def _affordance_bump_logits(self, raw: torch.Tensor) -> torch.Tensor:
        """Soft-argmax keypoint head: the dense scores pick an expected grid
        position and the output is the logit of the analytic gaussian bump at
        that position.

        The affordance target family is a fixed-radius bump, so emitting the
        bump directly lets the focal term pull the keypoint quadratically
        toward the target instead of having to carve a sparse dense map.
        """
        n, mh, mw = raw.shape
        # sharp softmax so secondary score mass barely drags the keypoint
        weights = torch.softmax(4.0 * raw.reshape(n, -1), dim=-1).reshape(n, mh, mw)
        vs = torch.arange(mh, dtype=raw.dtype, device=raw.device)
        us = torch.arange(mw, dtype=raw.dtype, device=raw.device)
        ky = (weights.sum(dim=2) * vs).sum(dim=1)  # (n,) in grid cells
        kx = (weights.sum(dim=1) * us).sum(dim=1)
        sigma = self.cfg.affordance_radius_px / 3.0
        d2 = (us[None, None, :] - kx[:, None, None]) ** 2 \
            + (vs[None, :, None] - ky[:, None, None]) ** 2
        log_b = -d2 / (2.0 * sigma * sigma)
        # logit(exp(log_b)) = log_b - log(1 - exp(log_b)), clamped to the
        # same range the losses use
        b = torch.exp(log_b).clamp(max=1.0 - 1e-7)
        return (log_b - torch.log1p(-b)).clamp(-15.0, 15.0)

    @staticmethod
    def _axis_from_raw(raw: torch.Tensor) -> torch.Tensor:
        t = torch.tanh(raw[..., :2])
        norm = torch.linalg.norm(t, dim=-1, keepdim=True).clamp(min=1e-6)
        return torch.cat([t / norm, raw[..., 2:]], dim=-1)

    @staticmethod
    def box_cxcywh_to_xyxy(box: torch.Tensor) -> torch.Tensor:
        cx, cy, w, h = box.unbind(-1)
        return torch.stack([(cx - w / 2).clamp(0, 1), (cy - h / 2).clamp(0, 1),
                            (cx + w / 2).clamp(0, 1), (cy + h / 2).clamp(0, 1)], dim=-1)

    def forward(self, image: torch.Tensor, points: torch.Tensor) -> dict:
        """Full forward pass.

        image: (B, 3, H, W) float in [0, 1]; points: (B, Q, 2) normalized.
        Returns per-query logits/regressions plus the per-image depth grid.
        """
        b, q = points.shape[:2]
        memory = self.encode_image(image)
        qe = self.encode_query_points(points)  # (B, Q, D)
        t, d = memory.shape[1:]
        mem_pq = memory[:, None].expand(b, q, t, d).reshape(b * q, t, d)
        q_flat = qe.reshape(b * q, 1, d)

        h_mask, px_mask = self.mask_decoder(q_flat, mem_pq)
        h_aff, px_aff = self.affordance_decoder(q_flat, mem_pq)
        h_d, px_depth = self.depth_decoder(self.depth_query.expand(b, 1, d), memory)

        mask_logits = torch.einsum("nc,nchw->nhw", self.mask_embed(h_mask), px_mask)
        aff_raw = torch.einsum("nc,nchw->nhw", self.affordance_embed(h_aff), px_aff)
        aff_logits = self._affordance_bump_logits(aff_raw)
        depth = torch.einsum("nc,nchw->nhw", self.depth_embed(h_d), px_depth) + self.depth_bias
        mh, mw = self.cfg.mask_res
        box = torch.sigmoid(self.box_head(h_mask)).reshape(b, q, 4)
        return {
            "movable_logits": self.movable_head(h_mask).reshape(b, q, 3),
            "rigidity_logits": self.rigidity_head(h_mask).reshape(b, q, 2),
            "articulation_logits": self.articulation_head(h_mask).reshape(b, q, 3),
            "action_logits": self.action_head(h_mask).reshape(b, q, 3),
            "box_cxcywh": box,
            "box": self.box_cxcywh_to_xyxy(box),
            "axis_enc": self._axis_from_raw(self.axis_head(h_mask)).reshape(b, q, 3),
            "mask_logits": mask_logits.reshape(b, q, mh, mw),
            "affordance_logits": aff_logits.reshape(b, q, mh, mw),
            "depth": depth.reshape(b, mh, mw),
            "pooled": h_mask.reshape(b, q, d),
        }


@dataclass
class InteractionPrediction:
    """Per-query network answer with numpy fields (API boundary object)."""

    movable_logits: np.ndarray
    rigidity_logits: np.ndarray
    articulation_logits: np.ndarray
    action_logits: np.ndarray
    box: BoxXYXY
    axis_enc: np.ndarray
    mask_logits: np.ndarray
    affordance_logits: np.ndarray

    def axis(self) -> AxisEncoding:
        return AxisEncoding(*map(float, self.axis_enc))


IMG_MEAN = 0.45
IMG_STD = 0.27


def image_to_tensor(image: np.ndarray, cfg: NetworkConfig) -> torch.Tensor:
    """HxWx3 uint8 -> normalized (1, 3, H, W), resized if necessary."""
    import cv2

    if image.shape[:2] != (cfg.input_h, cfg.input_w):
        image = cv2.resize(image, (cfg.input_w, cfg.input_h), interpolation=cv2.INTER_AREA)
    x = torch.from_numpy(np.ascontiguousarray(image).copy()).float() / 255.0
    x = (x - IMG_MEAN) / IMG_STD
    return x.permute(2, 0, 1)[None]


def _box_from_xyxy(t: np.ndarray) -> BoxXYXY:
    """Clamp a raw xyxy tensor into a strictly valid BoxXYXY."""
    eps = 1e-4
    x1, y1, x2, y2 = [float(np.clip(v, 0.0, 1.0)) for v in t]
    if x2 - x1 < eps:
        cx = min(max((x1 + x2) / 2, eps), 1 - eps)
        x1, x2 = cx - eps / 2, cx + eps / 2
    if y2 - y1 < eps:
        cy = min(max((y1 + y2) / 2, eps), 1 - eps)
        y1, y2 = cy - eps / 2, cy + eps / 2
    return BoxXYXY(x1, y1, x2, y2)


@torch.no_grad()
def predict(model: InteractionNet, image: np.ndarray, points) -> tuple:
    """Convenience single-image inference.

    points: list of QueryPoint-like (.x, .y). Returns (list of
    InteractionPrediction, depth grid) for exactly those points.
    """
    from .datamodel import pad_queries

    model.eval()
    cfg = model.cfg
    padded, valid = pad_queries(list(points))
    pts = torch.tensor([[p.x, p.y] for p in padded], dtype=torch.float32)[None]
    out = model(image_to_tensor(image, cfg), pts)
    preds = []
    for i in range(len(points)):
        preds.append(InteractionPrediction(
            movable_logits=out["movable_logits"][0, i].numpy(),
            rigidity_logits=out["rigidity_logits"][0, i].numpy(),
            articulation_logits=out["articulation_logits"][0, i].numpy(),
            action_logits=out["action_logits"][0, i].numpy(),
            box=_box_from_xyxy(out["box"][0, i].numpy()),
            axis_enc=out["axis_enc"][0, i].numpy(),
            mask_logits=out["mask_logits"][0, i].numpy(),
            affordance_logits=out["affordance_logits"][0, i].numpy(),
        ))
    return preds, out["depth"][0].numpy()


CHECKPOINT_FORMAT = "i3d-checkpoint-v1"


def save_checkpoint(path, model: InteractionNet, extra: dict = None):
    payload = {
        "format": CHECKPOINT_FORMAT,
        "config_json": json.dumps(asdict(model.cfg)),
        "state_dict": model.state_dict(),
    }
    if extra:
        payload["extra"] = extra
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(payload, tmp)
    tmp.replace(path)


def load_checkpoint(path) -> tuple:
    """Returns (model in eval mode, extra dict). Validates the config header."""
    payload = torch.load(path, map_location="cpu", weights_only=False)
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} archive")
    cfg = NetworkConfig(**json.loads(payload["config_json"]))
    model = InteractionNet(cfg)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload.get("extra", {})
