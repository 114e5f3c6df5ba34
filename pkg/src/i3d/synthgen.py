"""Deterministic synthetic-scene generator with exact analytic annotations.

Scenes are desk-scale: a camera at the origin looking down +z (image y down),
a back wall plane, a floor plane, and a handful of planar objects:

  * doors: rectangles hinged on one edge, opened by a small angle；axis and
    3D hinge are stored exactly;
  * drawer faces: frontoparallel rectangles translating along their normal;
  * freeform rigid boxes (one hand when small, two hands when large);
  * nonrigid blobs (wobbly polygons).

Every surface is a plane, so depth, normals, masks and projected axes are
all closed-form. The generator doubles as the verification oracle: any door
or drawer can be re-rendered at a different articulation state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .datamodel import (ActionClass, AffordanceTarget, ArticulationClass,
                        BoxXYXY, Mask, MovableClass, QueryAnnotation,
                        QueryPoint, RigidityClass, SceneSample)
from .geometry import CameraModel, Line2D, Line3D, norm_from_px

DEFAULT_W, DEFAULT_H = 256, 192


class ObjectKind(enum.Enum):
    ROTATION_DOOR = "rotation_door"
    TRANSLATION_DRAWER = "translation_drawer"
    FREEFORM_RIGID = "freeform_rigid"
    NONRIGID_BLOB = "nonrigid_blob"


@dataclass(frozen=True)
class ObjectSpec:
    kind: ObjectKind
    center: tuple  # 3D center of the at-rest face
    half_u: float  # half extent along the first in-plane axis (3D units)
    half_v: float  # half extent along the second in-plane axis
    tilt: float = 0.0  # in-plane orientation of the first axis, radians
    open_angle: float = 0.0  # door opening, radians
    open_offset: float = 0.0  # drawer translation toward the camera
    hinge_side: int = -1  # -1: hinge on the -u edge, +1: on the +u edge
    two_hands: bool = False  # freeform boxes only: large enough to need both
    albedo: tuple = (0.5, 0.5, 0.5)
    wobble: tuple = ()  # radial blob irregularity, empty for rectangles


@dataclass(frozen=True)
class SceneSpec:
    seed: int
    width: int = DEFAULT_W
    height: int = DEFAULT_H
    wall_z: float = 5.0
    floor_y: float = 1.3
    objects: tuple = ()
    cam: Optional[CameraModel] = None

    def camera(self) -> CameraModel:
        return self.cam or CameraModel.default_for(self.width, self.height)


@dataclass
class GeneratedSample:
    sample: SceneSample
    spec: SceneSpec
    # query index -> hidden ground truth
    hinges: dict = field(default_factory=dict)  # Line3D per door query
    translation_dirs: dict = field(default_factory=dict)  # unit 3-vector per drawer query
    object_of_query: dict = field(default_factory=dict)  # query index -> object index


def _in_plane_axes(tilt: float):
    """In-plane axes of a z-constant plane: u along (sin t, cos t) family."""
    d = np.array([math.sin(tilt), math.cos(tilt), 0.0])  # near-vertical
    w = np.array([math.cos(tilt), -math.sin(tilt), 0.0])
    return d, w


def _rotate_about(v: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    axis = axis / np.linalg.norm(axis)
    return (v * math.cos(angle) + np.cross(axis, v) * math.sin(angle)
            + axis * np.dot(axis, v) * (1 - math.cos(angle)))


def object_polygon(obj: ObjectSpec):
    """3D polygon (Nx3) of the object face in its articulated state, plus the
    hinge (Line3D or None) and handle point."""
    c = np.asarray(obj.center, dtype=float)
    d, w = _in_plane_axes(obj.tilt)
    if obj.kind == ObjectKind.ROTATION_DOOR:
        hinge_c = c + obj.hinge_side * obj.half_u * w
        a = hinge_c - obj.half_v * d
        b = hinge_c + obj.half_v * d
        swing = -obj.hinge_side * w * (2 * obj.half_u)
        swing_rot = _rotate_about(swing, d, obj.open_angle)
        if swing_rot[2] > 0:  # open toward the camera
            swing_rot = _rotate_about(swing, d, -obj.open_angle)
        poly = np.stack([a, b, b + swing_rot, a + swing_rot])
        hinge = Line3D(tuple(hinge_c), tuple(d / np.linalg.norm(d)))
        handle = hinge_c + 0.88 * swing_rot
        return poly, hinge, handle
    if obj.kind == ObjectKind.NONRIGID_BLOB:
        n = len(obj.wobble) or 12
        wob = np.asarray(obj.wobble) if obj.wobble else np.ones(12)
        ang = np.linspace(0, 2 * math.pi, n, endpoint=False)
        pts = [c + obj.half_u * wob[i] * math.cos(a) * w + obj.half_v * wob[i] * math.sin(a) * d
               for i, a in enumerate(ang)]
        return np.stack(pts), None, c
    # drawer face or rigid box: frontoparallel rectangle
    cz = c + np.array([0.0, 0.0, -obj.open_offset])
    poly = np.stack([cz - obj.half_u * w - obj.half_v * d,
                     cz + obj.half_u * w - obj.half_v * d,
                     cz + obj.half_u * w + obj.half_v * d,
                     cz - obj.half_u * w + obj.half_v * d])
    return poly, None, cz


def _plane_of(poly: np.ndarray):
    n = np.cross(poly[1] - poly[0], poly[2] - poly[0])
    n = n / np.linalg.norm(n)
    if n[2] > 0:
        n = -n
    return n, poly[0]


def _project_poly(poly: np.ndarray, cam: CameraModel) -> np.ndarray:
    z = poly[:, 2]
    return np.stack([cam.fx * poly[:, 0] / z + cam.cx,
                     cam.fy * poly[:, 1] / z + cam.cy], axis=-1)


def _raster_polygon(poly2d: np.ndarray, width: int, height: int) -> np.ndarray:
    """Pixel-center point-in-polygon by the crossing-number test."""
    mask = np.zeros((height, width), dtype=bool)
    x0 = max(int(math.floor(poly2d[:, 0].min())), 0)
    x1 = min(int(math.ceil(poly2d[:, 0].max())), width - 1)
    y0 = max(int(math.floor(poly2d[:, 1].min())), 0)
    y1 = min(int(math.ceil(poly2d[:, 1].max())), height - 1)
    if x0 > x1 or y0 > y1:
        return mask
    ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    inside = np.zeros(xs.shape, dtype=bool)
    n = len(poly2d)
    for i in range(n):
        xa, ya = poly2d[i]
        xb, yb = poly2d[(i + 1) % n]
        straddles = (ya > ys) != (yb > ys)
        with np.errstate(divide="ignore", invalid="ignore"):
            xhit = xa + (ys - ya) * (xb - xa) / (yb - ya)
        inside ^= straddles & (xs < xhit)
    mask[y0:y1 + 1, x0:x1 + 1] = inside
    return mask


def _ray_dirs(width: int, height: int, cam: CameraModel):
    v, u = np.mgrid[0:height, 0:width].astype(float)
    return np.stack([(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy,
                     np.ones_like(u)], axis=-1)


def _shade(albedo, normal) -> np.ndarray:
    light = np.array([0.35, -0.45, -0.82])
    light = light / np.linalg.norm(light)
    lam = max(0.0, float(np.dot(np.asarray(normal), light)))
    c = np.asarray(albedo) * (0.45 + 0.55 * lam)
    return np.clip(c * 255.0, 0, 255)


def render_scene(spec: SceneSpec):
    """Flat-shaded analytic render.

    Returns (image uint8, depth float32, normals float32, masks list of bool
    grids — the visible pixels of each object after z-buffering).
    """
    w, h, cam = spec.width, spec.height, spec.camera()
    rays = _ray_dirs(w, h, cam)
    # background: wall everywhere, floor where the ray dips below floor_y first
    depth = np.full((h, w), spec.wall_z, dtype=float)
    normals = np.zeros((h, w, 3), dtype=float)
    normals[..., 2] = -1.0
    image = np.zeros((h, w, 3), dtype=float)
    image[:] = _shade((0.72, 0.70, 0.66), (0, 0, -1))
    ry = rays[..., 1]
    with np.errstate(divide="ignore"):
        t_floor = np.where(ry > 1e-9, spec.floor_y / ry, np.inf)
    floor_hit = t_floor < depth
    depth[floor_hit] = t_floor[floor_hit]
    normals[floor_hit] = (0.0, -1.0, 0.0)
    image[floor_hit] = _shade((0.38, 0.34, 0.30), (0, -1, 0))
    owner = np.full((h, w), -1, dtype=int)

    infos = []
    for idx, obj in enumerate(spec.objects):
        poly, hinge, handle = object_polygon(obj)
        n, p0 = _plane_of(poly)
        poly2d = _project_poly(poly, cam)
        raster = _raster_polygon(poly2d, w, h)
        denom = rays @ n
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(np.abs(denom) > 1e-12, np.dot(p0, n) / denom, np.inf)
        hit = raster & (t > 0.05) & (t < depth)
        depth[hit] = t[hit]
        normals[hit] = n
        image[hit] = _shade(obj.albedo, n)
        owner[hit] = idx
        infos.append({"poly": poly, "hinge": hinge, "handle": handle, "normal": n})

    # visible masks + handle dots (visual cue only, drawn after ownership)
    masks = [owner == i for i in range(len(spec.objects))]
    for idx, (obj, info) in enumerate(zip(spec.objects, infos)):
        if obj.kind in (ObjectKind.ROTATION_DOOR, ObjectKind.TRANSLATION_DRAWER):
            hp = info["handle"]
            u0 = cam.fx * hp[0] / hp[2] + cam.cx
            v0 = cam.fy * hp[1] / hp[2] + cam.cy
            yy, xx = np.mgrid[0:h, 0:w]
            dot = ((xx - u0) ** 2 + (yy - v0) ** 2 <= 2.5 ** 2) & masks[idx]
            image[dot] = (30, 30, 30)

    return (image.astype(np.uint8), depth.astype(np.float32),
            normals.astype(np.float32), masks, infos)


def _sample_point_in_mask(mask: np.ndarray, rng) -> QueryPoint:
    ys, xs = np.nonzero(mask)
    i = int(rng.integers(len(xs)))
    h, w = mask.shape
    return QueryPoint(norm_from_px(float(xs[i]), w), norm_from_px(float(ys[i]), h))


def _annotation_for(obj: ObjectSpec, info: dict, mask: np.ndarray,
                    cam: CameraModel, rng) -> QueryAnnotation:
    h, w = mask.shape
    m = Mask.from_array(mask)
    box = BoxXYXY(*m.bbox_norm())
    point = _sample_point_in_mask(mask, rng)
    handle = info["handle"]
    hx = norm_from_px(cam.fx * handle[0] / handle[2] + cam.cx, w)
    hy = norm_from_px(cam.fy * handle[1] / handle[2] + cam.cy, h)
    affordance = AffordanceTarget(QueryPoint(float(np.clip(hx, 0, 1)),
                                             float(np.clip(hy, 0, 1))))
    if obj.kind == ObjectKind.ROTATION_DOOR:
        hinge = info["hinge"]
        o = np.asarray(hinge.origin)
        d = np.asarray(hinge.direction)
        pa, pb = o - 0.5 * d, o + 0.5 * d
        a2 = (norm_from_px(cam.fx * pa[0] / pa[2] + cam.cx, w),
              norm_from_px(cam.fy * pa[1] / pa[2] + cam.cy, h))
        b2 = (norm_from_px(cam.fx * pb[0] / pb[2] + cam.cx, w),
              norm_from_px(cam.fy * pb[1] / pb[2] + cam.cy, h))
        return QueryAnnotation(point=point, movable=MovableClass.ONE_HAND,
                               rigidity=RigidityClass.RIGID,
                               articulation=ArticulationClass.ROTATION,
                               action=ActionClass.PULL, box=box, mask=m,
                               axis=Line2D.through(a2, b2), affordance=affordance)
    if obj.kind == ObjectKind.TRANSLATION_DRAWER:
        return QueryAnnotation(point=point, movable=MovableClass.ONE_HAND,
                               rigidity=RigidityClass.RIGID,
                               articulation=ArticulationClass.TRANSLATION,
                               action=ActionClass.PULL, box=box, mask=m,
                               affordance=affordance)
    if obj.kind == ObjectKind.FREEFORM_RIGID:
        return QueryAnnotation(point=point,
                               movable=MovableClass.TWO_HANDS if obj.two_hands else MovableClass.ONE_HAND,
                               rigidity=RigidityClass.RIGID,
                               articulation=ArticulationClass.FREEFORM,
                               action=ActionClass.OTHER, box=box, mask=m,
                               affordance=affordance)
    return QueryAnnotation(point=point, movable=MovableClass.ONE_HAND,
                           rigidity=RigidityClass.NONRIGID,
                           action=ActionClass.OTHER, box=box, mask=m,
                           affordance=affordance)


class GenerationError(RuntimeError):
    pass


def generate(spec: SceneSpec, image_id: str = None) -> GeneratedSample:
    """Render a spec into a fully annotated sample. Deterministic per seed."""
    rng = np.random.default_rng(spec.seed)
    image, depth, normals, masks, infos = render_scene(spec)
    cam = spec.camera()
    queries = []
    gen = GeneratedSample(sample=None, spec=spec)
    for idx, (obj, info, mask) in enumerate(zip(spec.objects, infos, masks)):
        if mask.sum() < 12:
            raise GenerationError(f"object {idx} almost invisible after z-buffering")
        ann = _annotation_for(obj, info, mask, cam, rng)
        qi = len(queries)
        queries.append(ann)
        gen.object_of_query[qi] = idx
        if obj.kind == ObjectKind.ROTATION_DOOR:
            gen.hinges[qi] = info["hinge"]
        if obj.kind == ObjectKind.TRANSLATION_DRAWER:
            gen.translation_dirs[qi] = (0.0, 0.0, -1.0)
    # fixture queries on the uncovered background
    background = np.ones(depth.shape, dtype=bool)
    for m in masks:
        background &= ~m
    for _ in range(2):
        if len(queries) >= 15:
            break
        queries.append(QueryAnnotation(point=_sample_point_in_mask(background, rng),
                                       movable=MovableClass.FIXTURE))
    sample = SceneSample(image_id=image_id or f"syn_{spec.seed:010d}",
                         image=image, queries=queries, depth=depth,
                         normals=normals, source="synthgen")
    sample.validate()
    gen.sample = sample
    return gen


def rerender_object_mask(spec: SceneSpec, obj_index: int, open_angle: float = None,
                         open_offset: float = None) -> np.ndarray:
    """Ground-truth visible mask of one object at an altered articulation state."""
    obj = spec.objects[obj_index]
    kwargs = {}
    if open_angle is not None:
        kwargs["open_angle"] = open_angle
    if open_offset is not None:
        kwargs["open_offset"] = open_offset
    objects = list(spec.objects)
    objects[obj_index] = replace(obj, **kwargs)
    _, _, _, masks, _ = render_scene(replace(spec, objects=tuple(objects)))
    return masks[obj_index]


_KIND_CYCLE = [ObjectKind.ROTATION_DOOR, ObjectKind.TRANSLATION_DRAWER,
               ObjectKind.FREEFORM_RIGID, ObjectKind.NONRIGID_BLOB]

_KIND_HUES = {
    ObjectKind.ROTATION_DOOR: (0.62, 0.42, 0.26),
    ObjectKind.TRANSLATION_DRAWER: (0.30, 0.42, 0.68),
    ObjectKind.FREEFORM_RIGID: (0.32, 0.58, 0.34),
    ObjectKind.NONRIGID_BLOB: (0.74, 0.28, 0.30),
}


def _make_object(kind: ObjectKind, footprint, z0: float, cam: CameraModel,
                 rng, big: bool = False) -> ObjectSpec:
    """Build a 3D object whose image footprint approximates the given
    normalized (cx, cy, half_w, half_h) rectangle at depth z0."""
    cxn, cyn, hwn, hhn = footprint
    w_img = cam.cx * 2
    h_img = cam.cy * 2
    center = np.array([(cxn * w_img - cam.cx) * z0 / cam.fx,
                       (cyn * h_img - cam.cy) * z0 / cam.fy, z0])
    half_u = hwn * w_img * z0 / cam.fx
    half_v = hhn * h_img * z0 / cam.fy
    albedo = np.clip(np.asarray(_KIND_HUES[kind]) + rng.uniform(-0.08, 0.08, 3), 0.05, 0.95)
    common = dict(center=tuple(center), albedo=tuple(albedo))
    if kind == ObjectKind.ROTATION_DOOR:
        return ObjectSpec(kind=kind, half_u=half_u, half_v=half_v,
                          tilt=float(rng.uniform(-0.5, 0.5)),
                          open_angle=float(rng.uniform(0.06, 0.3)),
                          hinge_side=int(rng.choice([-1, 1])), **common)
    if kind == ObjectKind.TRANSLATION_DRAWER:
        return ObjectSpec(kind=kind, half_u=half_u, half_v=half_v * 0.6, **common)
    if kind == ObjectKind.NONRIGID_BLOB:
        wobble = tuple(rng.uniform(0.6, 1.0, 12))
        return ObjectSpec(kind=kind, half_u=half_u, half_v=half_v, wobble=wobble, **common)
    return ObjectSpec(kind=kind, half_u=half_u, half_v=half_v,
                      tilt=0.0, two_hands=big, **common)


def _rect_iou(a, b) -> float:
    ax0, ay0, ax1, ay1 = a[0] - a[2], a[1] - a[3], a[0] + a[2], a[1] + a[3]
    bx0, by0, bx1, by1 = b[0] - b[2], b[1] - b[3], b[0] + b[2], b[1] + b[3]
    ix = max(0.0, min(ax1, bx1) - max(ax0, bx0))
    iy = max(0.0, min(ay1, by1) - max(ay0, by0))
    inter = ix * iy
    union = 4 * a[2] * a[3] + 4 * b[2] * b[3] - inter
    return inter / union if union > 0 else 0.0


def make_scene_spec(seed: int, n_objects: int = 3, kind_offset: int = 0,
                    width: int = DEFAULT_W, height: int = DEFAULT_H) -> SceneSpec:
    """Random non-overlapping layout; object kinds rotate for balance."""
    rng = np.random.default_rng(seed)
    cam = CameraModel.default_for(width, height)
    footprints = []
    objects = []
    for j in range(n_objects):
        kind = _KIND_CYCLE[(kind_offset + j) % len(_KIND_CYCLE)]
        big = kind == ObjectKind.FREEFORM_RIGID and rng.random() < 0.5
        for attempt in range(100):
            if big:
                hw = rng.uniform(0.13, 0.18)
                hh = rng.uniform(0.16, 0.22)
            else:
                hw = rng.uniform(0.055, 0.10)
                hh = rng.uniform(0.08, 0.14)
            fp = (rng.uniform(0.18, 0.82), rng.uniform(0.22, 0.72), hw, hh)
            if all(_rect_iou(fp, other) <= 0.2 for other in footprints):
                footprints.append(fp)
                break
        else:
            raise GenerationError("unsatisfiable layout after 100 placement attempts")
        z0 = float(rng.uniform(3.0, 4.5))
        objects.append(_make_object(kind, fp, z0, cam, rng, big=big))
    return SceneSpec(seed=seed, width=width, height=height, objects=tuple(objects))


def generate_split(n: int, seed: int, width: int = DEFAULT_W,
                   height: int = DEFAULT_H) -> list:
    """n varied samples; kinds balanced across the split, >= 1 fixture query
    per image, per-sample seeds derived by counter."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = []
    for i in range(n):
        child = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        n_objects = 2 + (i % 3)
        for retry in range(10):
            spec = make_scene_spec(child + retry, n_objects=n_objects,
                                   kind_offset=i % len(_KIND_CYCLE),
                                   width=width, height=height)
            try:
                gen = generate(spec, image_id=f"syn_{seed:08d}_{i:04d}")
                break
            except GenerationError:
                continue
        else:
            raise GenerationError(f"could not generate sample {i}")
        out.append(gen)
    return out
