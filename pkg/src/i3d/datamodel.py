"""Annotation and prediction schema shared by every other module.

Dataset layout on disk::

    dataset/{split}/{image_id}.json          # annotations (schema below)
    dataset/{split}/{image_id}.png           # RGB image
    dataset/{split}/{image_id}_depth.npy     # optional float32 depth grid
    dataset/{split}/{image_id}_normals.npy   # optional float32 HxWx3 normals

All coordinates are stored normalized to [0, 1]. Masks are stored as
COCO-style uncompressed RLE (column-major counts, starting with the zero
run). Rotation axes are stored as {"theta": ..., "r": ...}.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .geometry import Line2D

MAX_QUERIES = 15


class SchemaError(ValueError):
    """Schema or invariant violation; carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class MovableClass(enum.Enum):
    FIXTURE = "fixture"
    ONE_HAND = "one_hand"
    TWO_HANDS = "two_hands"


class RigidityClass(enum.Enum):
    RIGID = "rigid"
    NONRIGID = "nonrigid"


class ArticulationClass(enum.Enum):
    ROTATION = "rotation"
    TRANSLATION = "translation"
    FREEFORM = "freeform"


class ActionClass(enum.Enum):
    PULL = "pull"
    PUSH = "push"
    OTHER = "other"


@dataclass(frozen=True)
class QueryPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (0.0 <= self.x <= 1.0 and 0.0 <= self.y <= 1.0):
            raise SchemaError("point", f"query point ({self.x}, {self.y}) outside [0,1]^2")


@dataclass(frozen=True)
class BoxXYXY:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        for name in ("x1", "y1", "x2", "y2"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise SchemaError(f"box.{name}", f"{v} outside [0,1]")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise SchemaError("box", "requires x1 < x2 and y1 < y2")

    def as_tuple(self):
        return (self.x1, self.y1, self.x2, self.y2)


def rle_encode(mask: np.ndarray) -> list[int]:
    """Column-major run-length counts, alternating zeros/ones, zeros first."""
    flat = np.asarray(mask, dtype=bool).flatten(order="F").astype(np.int8)
    if flat.size == 0:
        return []
    changes = np.flatnonzero(np.diff(flat))
    runs = np.diff(np.concatenate([[0], changes + 1, [flat.size]])).tolist()
    if flat[0] == 1:
        runs = [0] + runs
    return [int(c) for c in runs]


def rle_decode(counts: list[int], width: int, height: int) -> np.ndarray:
    total = sum(counts)
    if total != width * height:
        raise SchemaError("mask", f"RLE decodes to {total} cells, expected {width * height}")
    flat = np.zeros(total, dtype=bool)
    pos = 0
    val = False
    for c in counts:
        if val:
            flat[pos:pos + c] = True
        pos += c
        val = not val
    return flat.reshape((height, width), order="F")


@dataclass(frozen=True)
class Mask:
    width: int
    height: int
    counts: tuple

    def __post_init__(self):
        if sum(self.counts) != self.width * self.height:
            raise SchemaError("mask", "RLE counts do not cover width*height cells")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Mask":
        h, w = arr.shape
        return cls(width=w, height=h, counts=tuple(rle_encode(arr)))

    def to_array(self) -> np.ndarray:
        return rle_decode(list(self.counts), self.width, self.height)

    def area(self) -> int:
        return int(sum(self.counts[1::2]))

    def bbox_norm(self) -> tuple:
        """Normalized xyxy bounding box of the foreground pixels."""
        arr = self.to_array()
        ys, xs = np.nonzero(arr)
        if len(xs) == 0:
            raise SchemaError("mask", "empty mask has no bounding box")
        return (xs.min() / self.width, ys.min() / self.height,
                (xs.max() + 1) / self.width, (ys.max() + 1) / self.height)


@dataclass(frozen=True)
class AffordanceTarget:
    keypoint: Optional[QueryPoint]
    radius_px: int = 5

    def __post_init__(self):
        if self.radius_px < 1:
            raise SchemaError("affordance.radius_px", "must be >= 1")


@dataclass(frozen=True)
class QueryAnnotation:
    point: QueryPoint
    movable: MovableClass
    rigidity: Optional[RigidityClass] = None
    articulation: Optional[ArticulationClass] = None
    action: Optional[ActionClass] = None
    box: Optional[BoxXYXY] = None
    mask: Optional[Mask] = None
    axis: Optional[Line2D] = None
    affordance: Optional[AffordanceTarget] = None

    def validate(self, path: str = "query"):
        if self.movable == MovableClass.FIXTURE:
            for name in ("rigidity", "articulation", "action", "box", "mask", "axis", "affordance"):
                if getattr(self, name) is not None:
                    raise SchemaError(f"{path}.{name}", "fixtures carry no further annotations")
        has_axis = self.axis is not None
        is_rotation = self.articulation == ArticulationClass.ROTATION
        if has_axis != is_rotation:
            raise SchemaError(f"{path}.axis", "axis present iff articulation == rotation")
        if self.rigidity == RigidityClass.NONRIGID and self.articulation is not None:
            raise SchemaError(f"{path}.articulation", "nonrigid objects have no articulation")


@dataclass
class SceneSample:
    image_id: str
    image: np.ndarray  # HxWx3 uint8
    queries: list  # list[QueryAnnotation]
    depth: Optional[np.ndarray] = None  # HxW positive floats, per-image units
    normals: Optional[np.ndarray] = None  # HxWx3 unit vectors
    source: str = ""

    def validate(self):
        if self.image.ndim != 3 or self.image.shape[2] != 3:
            raise SchemaError("image", "expected HxWx3 RGB grid")
        if not (1 <= len(self.queries) <= MAX_QUERIES):
            raise SchemaError("queries", f"need 1..{MAX_QUERIES} queries, got {len(self.queries)}")
        for i, q in enumerate(self.queries):
            q.validate(path=f"queries[{i}]")
        if self.depth is not None:
            if self.depth.shape != self.image.shape[:2]:
                raise SchemaError("depth", "depth grid must match image shape")
            if not np.all(self.depth > 0):
                raise SchemaError("depth", "depth values must be positive")


def _enum_or_none(cls, value, path):
    if value is None:
        return None
    try:
        return cls(value)
    except ValueError:
        raise SchemaError(path, f"invalid value {value!r} for {cls.__name__}") from None


def query_to_dict(q: QueryAnnotation) -> dict:
    return {
        "point": {"x": q.point.x, "y": q.point.y},
        "movable": q.movable.value,
        "rigidity": q.rigidity.value if q.rigidity else None,
        "articulation": q.articulation.value if q.articulation else None,
        "action": q.action.value if q.action else None,
        "box": {"x1": q.box.x1, "y1": q.box.y1, "x2": q.box.x2, "y2": q.box.y2} if q.box else None,
        "mask": {"width": q.mask.width, "height": q.mask.height,
                 "counts": list(q.mask.counts)} if q.mask else None,
        "axis": {"theta": q.axis.theta, "r": q.axis.r} if q.axis else None,
        "affordance": {
            "keypoint": ({"x": q.affordance.keypoint.x, "y": q.affordance.keypoint.y}
                         if q.affordance.keypoint else None),
            "radius_px": q.affordance.radius_px,
        } if q.affordance else None,
    }


def query_from_dict(d: dict, path: str = "query") -> QueryAnnotation:
    try:
        point = QueryPoint(float(d["point"]["x"]), float(d["point"]["y"]))
    except (KeyError, TypeError):
        raise SchemaError(f"{path}.point", "missing or malformed query point") from None
    box = d.get("box")
    mask = d.get("mask")
    axis = d.get("axis")
    aff = d.get("affordance")
    q = QueryAnnotation(
        point=point,
        movable=_enum_or_none(MovableClass, d.get("movable"), f"{path}.movable"),
        rigidity=_enum_or_none(RigidityClass, d.get("rigidity"), f"{path}.rigidity"),
        articulation=_enum_or_none(ArticulationClass, d.get("articulation"), f"{path}.articulation"),
        action=_enum_or_none(ActionClass, d.get("action"), f"{path}.action"),
        box=BoxXYXY(box["x1"], box["y1"], box["x2"], box["y2"]) if box else None,
        mask=Mask(mask["width"], mask["height"], tuple(mask["counts"])) if mask else None,
        axis=Line2D.make(axis["theta"], axis["r"]) if axis else None,
        affordance=AffordanceTarget(
            keypoint=QueryPoint(aff["keypoint"]["x"], aff["keypoint"]["y"]) if aff.get("keypoint") else None,
            radius_px=int(aff.get("radius_px", 5)),
        ) if aff else None,
    )
    if q.movable is None:
        raise SchemaError(f"{path}.movable", "movable class is required")
    q.validate(path=path)
    return q


def save_sample(s: SceneSample, out_dir) -> Path:
    """Write {image_id}.json + {image_id}.png (+ optional depth/normals .npy)."""
    s.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    Image.fromarray(s.image).save(out_dir / f"{s.image_id}.png")
    if s.depth is not None:
        np.save(out_dir / f"{s.image_id}_depth.npy", s.depth.astype(np.float32))
    if s.normals is not None:
        np.save(out_dir / f"{s.image_id}_normals.npy", s.normals.astype(np.float32))
    doc = {
        "image_id": s.image_id,
        "source": s.source,
        "queries": [query_to_dict(q) for q in s.queries],
    }
    path = out_dir / f"{s.image_id}.json"
    path.write_text(json.dumps(doc, indent=1))
    return path


def load_sample(json_path) -> SceneSample:
    """Read a sample back; validates every invariant, reporting the first
    violation with its field path."""
    json_path = Path(json_path)
    try:
        doc = json.loads(json_path.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(str(json_path), f"invalid JSON: {e}") from None
    image_id = doc.get("image_id")
    if not isinstance(image_id, str) or not image_id:
        raise SchemaError("image_id", "missing image_id")
    image = np.asarray(Image.open(json_path.parent / f"{image_id}.png").convert("RGB"))
    depth_path = json_path.parent / f"{image_id}_depth.npy"
    depth = np.load(depth_path) if depth_path.exists() else None
    normals_path = json_path.parent / f"{image_id}_normals.npy"
    normals = np.load(normals_path) if normals_path.exists() else None
    queries_raw = doc.get("queries")
    if not isinstance(queries_raw, list):
        raise SchemaError("queries", "missing queries list")
    queries = [query_from_dict(d, path=f"queries[{i}]") for i, d in enumerate(queries_raw)]
    sample = SceneSample(image_id=image_id, image=image, queries=queries,
                         depth=depth, normals=normals, source=doc.get("source", ""))
    sample.validate()
    return sample


def load_split(data_dir) -> list:
    """All samples under a split directory, sorted by image_id."""
    data_dir = Path(data_dir)
    return [load_sample(p) for p in sorted(data_dir.glob("*.json"))]


def pad_queries(qs: list, n: int = MAX_QUERIES):
    """Pad a query-point list to n entries; returns (points, validity).

    Padded entries are flagged invalid and must be excluded from every loss.
    """
    if len(qs) > n:
        raise SchemaError("queries", f"more than {n} queries")
    valid = np.zeros(n, dtype=bool)
    valid[:len(qs)] = True
    padded = list(qs) + [QueryPoint(0.5, 0.5)] * (n - len(qs))
    return padded, valid
