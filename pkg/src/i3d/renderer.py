"""3D-interaction animation: rotate a part about its lifted hinge or slide it
along its mean surface normal, refit a homography between the original and
moved pixels, and warp the object region into frames."""

from __future__ import annotations

from dataclasses import dataclass, field

import cv2
import numpy as np

from .geometry import (CameraModel, GeometryError, Homography, Line2D,
                       bilinear_sample, fit_homography_ransac,
                       lift_axis_to_3d, normals_from_depth, project,
                       rotate_points_about_axis, translate_points)

MAX_CORRESPONDENCES = 2000


@dataclass
class ClipFrame:
    image: np.ndarray  # HxWx4 RGBA, out-of-frame pixels transparent
    mask: np.ndarray  # HxW bool, warped object mask
    homography: Homography
    parameter: float  # angle (rad) or offset for this frame


@dataclass
class ArticulationClip:
    frames: list = field(default_factory=list)
    kind: str = ""  # "rotation" | "translation"

    def parameters(self):
        return [f.parameter for f in self.frames]


def _mask_points(mask: np.ndarray, limit: int = MAX_CORRESPONDENCES):
    ys, xs = np.nonzero(mask)
    if len(xs) < 4:
        raise GeometryError("mask too small to articulate")
    if len(xs) > limit:
        idx = np.linspace(0, len(xs) - 1, limit).astype(int)
        ys, xs = ys[idx], xs[idx]
    return xs.astype(float), ys.astype(float)


def _warp_frame(image: np.ndarray, mask: np.ndarray, h: Homography, parameter: float) -> ClipFrame:
    hh, ww = mask.shape
    hm = h.as_array()
    rgba = np.dstack([image, np.where(mask, 255, 0).astype(np.uint8)])
    warped = cv2.warpPerspective(rgba, hm, (ww, hh), flags=cv2.INTER_LINEAR,
                                 borderMode=cv2.BORDER_CONSTANT, borderValue=0)
    wmask = cv2.warpPerspective(mask.astype(np.uint8), hm, (ww, hh),
                                flags=cv2.INTER_NEAREST) > 0
    warped[..., 3] = np.where(wmask, warped[..., 3], 0)
    return ClipFrame(image=warped, mask=wmask, homography=h, parameter=parameter)


def _moved_homography(xs, ys, depth, cam, move_fn, seed: int) -> Homography:
    ds = bilinear_sample(np.asarray(depth, dtype=float), xs, ys)
    ok = ds > 0
    if ok.sum() < 4:
        raise GeometryError("not enough valid depth under the mask")
    pts3 = np.stack([ds[ok] * (xs[ok] - cam.cx) / cam.fx,
                     ds[ok] * (ys[ok] - cam.cy) / cam.fy, ds[ok]], axis=-1)
    moved = move_fn(pts3)
    if np.any(moved[:, 2] <= 1e-6):
        keep = moved[:, 2] > 1e-6
        if keep.sum() < 4:
            raise GeometryError("moved points fall behind the camera")
        pts3, moved = pts3[keep], moved[keep]
        xs, ys = xs[ok][keep], ys[ok][keep]
    else:
        xs, ys = xs[ok], ys[ok]
    src = np.stack([xs, ys], axis=-1)
    dst = project(moved, cam)
    h, _ = fit_homography_ransac(src, dst, thresh_px=2.0, seed=seed)
    return h


def render_rotation(image: np.ndarray, mask: np.ndarray, axis2d: Line2D,
                    depth: np.ndarray, cam: CameraModel, angles,
                    seed: int = 0) -> ArticulationClip:
    """Per angle: lift the 2D axis to 3D, rotate the backprojected mask
    pixels, reproject, fit a homography and warp. Angle 0 is the identity."""
    ys_all, xs_all = np.nonzero(mask)
    if len(xs_all) == 0:
        raise GeometryError("empty mask")
    h_img, w_img = mask.shape
    bbox = (xs_all.min() / w_img, ys_all.min() / h_img,
            (xs_all.max() + 1) / w_img, (ys_all.max() + 1) / h_img)
    axis3d = lift_axis_to_3d(axis2d, depth, bbox, cam)
    xs, ys = _mask_points(mask)
    clip = ArticulationClip(kind="rotation")
    for angle in angles:
        if abs(angle) < 1e-12:
            clip.frames.append(_warp_frame(image, mask, Homography.identity(), 0.0))
            continue
        h = _moved_homography(
            xs, ys, depth, cam,
            lambda p, a=angle: rotate_points_about_axis(p, axis3d, a), seed)
        clip.frames.append(_warp_frame(image, mask, h, float(angle)))
    return clip


def render_translation(image: np.ndarray, mask: np.ndarray, depth: np.ndarray,
                       cam: CameraModel, offsets, seed: int = 0) -> ArticulationClip:
    """Translate along the mean surface normal over the mask (toward the
    camera for positive offsets)."""
    normals = normals_from_depth(depth, cam)
    n = normals[mask].mean(axis=0)
    nn = np.linalg.norm(n)
    if nn < 1e-9:
        raise GeometryError("degenerate mean normal over the mask")
    n = n / nn
    xs, ys = _mask_points(mask)
    clip = ArticulationClip(kind="translation")
    for off in offsets:
        if abs(off) < 1e-12:
            clip.frames.append(_warp_frame(image, mask, Homography.identity(), 0.0))
            continue
        h = _moved_homography(xs, ys, depth, cam,
                              lambda p, o=off: translate_points(p, n, o), seed)
        clip.frames.append(_warp_frame(image, mask, h, float(off)))
    return clip
