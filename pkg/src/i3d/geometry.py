"""Non-learned math: 2D line algebra, axis encoding, pinhole camera ops,
depth-derived normals, 3D axis lifting, Rodrigues rotation and RANSAC
homography fitting.

Conventions used everywhere in this package:
  * normalized image coordinates are fractions of width/height in [0, 1];
  * continuous pixel coordinates have pixel centers at integers, so
    ``u = x * width - 0.5`` and ``x = (u + 0.5) / width``;
  * a 2D line is ``x cos(theta) + y sin(theta) = r`` in normalized
    coordinates, ``theta`` in [0, pi), ``r`` possibly negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation


class GeometryError(ValueError):
    """Raised on degenerate geometric input."""


def px_from_norm(x: float, size: int) -> float:
    """Normalized fraction -> continuous pixel coordinate (centers at ints)."""
    return x * size - 0.5


def norm_from_px(u: float, size: int) -> float:
    """Continuous pixel coordinate -> normalized fraction."""
    return (u + 0.5) / size


@dataclass(frozen=True)
class Line2D:
    """Line x*cos(theta) + y*sin(theta) = r with theta canonicalized to [0, pi)."""

    theta: float
    r: float

    def __post_init__(self):
        if not (0.0 <= self.theta < math.pi):
            raise GeometryError(f"theta {self.theta} outside [0, pi); use Line2D.make")

    @classmethod
    def make(cls, theta: float, r: float) -> "Line2D":
        """Canonicalize: (theta + pi, r) describes the same line as (theta, -r)."""
        k = math.floor(theta / math.pi)
        t = theta - k * math.pi
        if t >= math.pi:  # guard float roundoff at the boundary
            t -= math.pi
            k += 1
        return cls(t, r if k % 2 == 0 else -r)

    @classmethod
    def through(cls, p0, p1) -> "Line2D":
        """Line through two distinct 2D points."""
        dx, dy = p1[0] - p0[0], p1[1] - p0[1]
        n = math.hypot(dx, dy)
        if n < 1e-12:
            raise GeometryError("points coincide")
        # normal to the direction
        nx, ny = -dy / n, dx / n
        theta = math.atan2(ny, nx)
        r = nx * p0[0] + ny * p0[1]
        return cls.make(theta, r)

    def normal(self) -> np.ndarray:
        return np.array([math.cos(self.theta), math.sin(self.theta)])

    def direction(self) -> np.ndarray:
        return np.array([-math.sin(self.theta), math.cos(self.theta)])

    def point_on(self) -> np.ndarray:
        return self.r * self.normal()

    def distance(self, x: float, y: float) -> float:
        return abs(x * math.cos(self.theta) + y * math.sin(self.theta) - self.r)


@dataclass(frozen=True)
class AxisEncoding:
    """Continuous (sin 2theta, cos 2theta, r) encoding of a Line2D."""

    s2: float
    c2: float
    r: float


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise GeometryError("focal lengths must be positive")

    @classmethod
    def default_for(cls, width: int, height: int, vfov_deg: float = 60.0) -> "CameraModel":
        """Fallback intrinsics: given vertical FOV, principal point at center."""
        fy = (height / 2.0) / math.tan(math.radians(vfov_deg) / 2.0)
        return cls(fx=fy, fy=fy, cx=width / 2.0, cy=height / 2.0)


@dataclass(frozen=True)
class Line3D:
    origin: tuple
    direction: tuple

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-6:
            raise GeometryError("Line3D direction must be unit length")


@dataclass(frozen=True)
class Homography:
    """3x3 projective map, normalized so H[2,2] == 1."""

    matrix: tuple

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Homography":
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise GeometryError("homography must be 3x3")
        if abs(m[2, 2]) < 1e-12:
            raise GeometryError("homography not normalizable (H[2,2] ~ 0)")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) < 1e-12:
            raise GeometryError("homography is singular")
        return cls(tuple(map(tuple, m)))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)

    @classmethod
    def identity(cls) -> "Homography":
        return cls.from_matrix(np.eye(3))

    def apply(self, pts: np.ndarray) -> np.ndarray:
        """Apply to Nx2 points."""
        pts = np.asarray(pts, dtype=float)
        h = self.as_array()
        ones = np.ones((pts.shape[0], 1))
        p = np.hstack([pts, ones]) @ h.T
        return p[:, :2] / p[:, 2:3]


def encode_axis(line: Line2D) -> AxisEncoding:
    return AxisEncoding(math.sin(2 * line.theta), math.cos(2 * line.theta), line.r)


def decode_axis(enc: AxisEncoding) -> Line2D:
    norm = math.hypot(enc.s2, enc.c2)
    if norm < 1e-9:
        raise GeometryError("degenerate axis encoding: (s2, c2) ~ (0, 0)")
    s, c = enc.s2 / norm, enc.c2 / norm
    theta = math.atan2(s, c) / 2.0
    if theta < 0:
        theta += math.pi
    if theta >= math.pi:
        theta -= math.pi
    return Line2D(theta, enc.r)


def gaussian_bump(center, radius_px: int, out_w: int, out_h: int) -> np.ndarray:
    """Soft keypoint target: peak exactly 1 at the pixel nearest to center,
    falling off as exp(-d^2 / (2 sigma^2)) with sigma = radius_px / 3.
    """
    cu = int(np.clip(round(px_from_norm(center.x, out_w)), 0, out_w - 1))
    cv = int(np.clip(round(px_from_norm(center.y, out_h)), 0, out_h - 1))
    sigma = radius_px / 3.0
    v, u = np.mgrid[0:out_h, 0:out_w]
    d2 = (u - cu) ** 2 + (v - cv) ** 2
    return np.exp(-d2 / (2.0 * sigma * sigma))


def backproject(u: float, v: float, depth: float, cam: CameraModel) -> np.ndarray:
    if depth <= 0:
        raise GeometryError("depth must be positive")
    return np.array([depth * (u - cam.cx) / cam.fx, depth * (v - cam.cy) / cam.fy, depth])


def project(p, cam: CameraModel) -> np.ndarray:
    """Inverse of backproject: 3D point -> pixel (u, v)."""
    p = np.asarray(p, dtype=float)
    if p.ndim == 1:
        p = p[None]
    z = p[:, 2]
    uv = np.stack([cam.fx * p[:, 0] / z + cam.cx, cam.fy * p[:, 1] / z + cam.cy], axis=-1)
    return uv[0] if uv.shape[0] == 1 else uv


def backproject_grid(depth: np.ndarray, cam: CameraModel) -> np.ndarray:
    """Per-pixel 3D points (H, W, 3) from a dense depth map."""
    h, w = depth.shape
    v, u = np.mgrid[0:h, 0:w].astype(float)
    x = depth * (u - cam.cx) / cam.fx
    y = depth * (v - cam.cy) / cam.fy
    return np.stack([x, y, depth], axis=-1)


def normals_from_depth(depth: np.ndarray, cam: CameraModel) -> np.ndarray:
    """Unit surface normals oriented toward the camera (n_z <= 0).

    Cross product of backprojected finite differences; np.gradient uses
    central differences inside and one-sided at the borders.
    """
    pts = backproject_grid(np.asarray(depth, dtype=float), cam)
    dv, du = np.gradient(pts, axis=(0, 1))
    n = np.cross(du, dv)
    norm = np.linalg.norm(n, axis=-1, keepdims=True)
    norm = np.where(norm < 1e-12, 1.0, norm)
    n = n / norm
    flip = n[..., 2] > 0
    n[flip] *= -1.0
    return n


def clip_line_to_rect(line: Line2D, xmin: float, ymin: float, xmax: float, ymax: float):
    """Segment of the infinite line inside an axis-aligned rectangle, or None.

    Liang-Barsky on the parametric form p(t) = p0 + t * direction.
    """
    p0 = line.point_on()
    d = line.direction()
    t_lo, t_hi = -np.inf, np.inf
    for p, dd, lo, hi in ((p0[0], d[0], xmin, xmax), (p0[1], d[1], ymin, ymax)):
        if abs(dd) < 1e-15:
            if p < lo or p > hi:
                return None
        else:
            t0, t1 = (lo - p) / dd, (hi - p) / dd
            if t0 > t1:
                t0, t1 = t1, t0
            t_lo, t_hi = max(t_lo, t0), min(t_hi, t1)
    if t_lo > t_hi:
        return None
    return p0 + t_lo * d, p0 + t_hi * d


def bilinear_sample(grid: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Bilinear lookup at continuous pixel coords, clamped at the borders."""
    h, w = grid.shape
    u = np.clip(u, 0.0, w - 1.0)
    v = np.clip(v, 0.0, h - 1.0)
    u0 = np.floor(u).astype(int)
    v0 = np.floor(v).astype(int)
    u1 = np.minimum(u0 + 1, w - 1)
    v1 = np.minimum(v0 + 1, h - 1)
    fu, fv = u - u0, v - v0
    top = grid[v0, u0] * (1 - fu) + grid[v0, u1] * fu
    bot = grid[v1, u0] * (1 - fu) + grid[v1, u1] * fu
    return top * (1 - fv) + bot * fv


def lift_axis_to_3d(
    axis: Line2D,
    depth: np.ndarray,
    mask_bbox_norm,
    cam: CameraModel,
    n_samples: int = 32,
) -> Line3D:
    """Lift a 2D axis to 3D by sampling depth along it.

    The axis is clipped to the mask bounding box (normalized xyxy) dilated by
    10%, sampled at >= 16 points, backprojected with bilinear depth, filtered
    by median-absolute-deviation rejection, and fit by principal direction.
    """
    n_samples = max(16, n_samples)
    x1, y1, x2, y2 = mask_bbox_norm
    dx, dy = 0.1 * (x2 - x1), 0.1 * (y2 - y1)
    seg = clip_line_to_rect(axis, max(0.0, x1 - dx), max(0.0, y1 - dy),
                            min(1.0, x2 + dx), min(1.0, y2 + dy))
    if seg is None:
        raise GeometryError("axis does not intersect the dilated mask bbox")
    a, b = seg
    t = np.linspace(0.0, 1.0, n_samples)
    xs = a[0] + t * (b[0] - a[0])
    ys = a[1] + t * (b[1] - a[1])
    h, w = depth.shape
    us = xs * w - 0.5
    vs = ys * h - 0.5
    # the axis usually sits on the part's silhouette, where bilinear depth
    # mixes part and background; sample two rows nudged toward the part
    # interior and extrapolate each pair back onto the axis
    cx_px, cy_px = (x1 + x2) / 2 * w - 0.5, (y1 + y2) / 2 * h - 0.5
    normal = np.array([math.cos(axis.theta), math.sin(axis.theta)])
    side = math.copysign(1.0, (cx_px - us.mean()) * normal[0]
                         + (cy_px - vs.mean()) * normal[1]) or 1.0
    dgrid = np.asarray(depth, dtype=float)
    step = 2.0  # pixels
    d1 = bilinear_sample(dgrid, us + side * step * normal[0],
                         vs + side * step * normal[1])
    d2 = bilinear_sample(dgrid, us + side * 2 * step * normal[0],
                         vs + side * 2 * step * normal[1])
    ds = 2.0 * d1 - d2  # first-order extrapolation to offset zero
    valid = (d1 > 0) & (d2 > 0) & (ds > 0)
    # drop samples whose two offset rows disagree: those straddle an
    # occlusion boundary rather than the part's surface
    if valid.sum() >= 4:
        gap = np.abs(d2 - d1)
        tol = 3.0 * np.median(gap[valid]) + 1e-3
        valid &= gap <= tol
    # MAD rejection of depth outliers along the axis
    if valid.sum() >= 4:
        med = np.median(ds[valid])
        mad = np.median(np.abs(ds[valid] - med))
        if mad > 1e-12:
            valid &= np.abs(ds - med) <= 3.0 * mad + 1e-12
    if valid.sum() < 2:
        raise GeometryError("fewer than 2 valid depth samples on the axis")
    pts = np.stack(
        [ds[valid] * (us[valid] - cam.cx) / cam.fx,
         ds[valid] * (vs[valid] - cam.cy) / cam.fy,
         ds[valid]], axis=-1)
    centroid = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - centroid, full_matrices=False)
    d = vt[0]
    # deterministic sign: largest-magnitude component positive
    k = int(np.argmax(np.abs(d)))
    if d[k] < 0:
        d = -d
    d = d / np.linalg.norm(d)
    return Line3D(tuple(centroid), tuple(d))


def rotate_points_about_axis(pts: np.ndarray, axis: Line3D, angle: float) -> np.ndarray:
    """Rodrigues rotation of Nx3 points about the axis through axis.origin."""
    pts = np.asarray(pts, dtype=float)
    rot = Rotation.from_rotvec(angle * np.asarray(axis.direction, dtype=float))
    origin = np.asarray(axis.origin, dtype=float)
    return rot.apply(pts - origin) + origin


def translate_points(pts: np.ndarray, direction, offset: float) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    return pts + offset * np.asarray(direction, dtype=float)


def _dlt_homography(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Direct linear transform with Hartley normalization."""

    def normalizer(p):
        mean = p.mean(axis=0)
        scale = math.sqrt(2) / max(np.mean(np.linalg.norm(p - mean, axis=1)), 1e-12)
        t = np.array([[scale, 0, -scale * mean[0]],
                      [0, scale, -scale * mean[1]],
                      [0, 0, 1.0]])
        return t

    ts, td = normalizer(src), normalizer(dst)
    s = (np.hstack([src, np.ones((len(src), 1))]) @ ts.T)[:, :2]
    d = (np.hstack([dst, np.ones((len(dst), 1))]) @ td.T)[:, :2]
    n = len(s)
    a = np.zeros((2 * n, 9))
    a[0::2, 0:2] = s
    a[0::2, 2] = 1
    a[0::2, 6:8] = -s * d[:, 0:1]
    a[0::2, 8] = -d[:, 0]
    a[1::2, 3:5] = s
    a[1::2, 5] = 1
    a[1::2, 6:8] = -s * d[:, 1:2]
    a[1::2, 8] = -d[:, 1]
    _, sv, vt = np.linalg.svd(a)
    if sv[-2] < 1e-10 * max(sv[0], 1e-300):
        raise GeometryError("degenerate correspondences for DLT")
    h = vt[-1].reshape(3, 3)
    h = np.linalg.inv(td) @ h @ ts
    return h / h[2, 2]


def fit_homography_ransac(
    src,
    dst,
    thresh_px: float = 2.0,
    iters: int = 1000,
    seed: int = 0,
):
    """RANSAC homography: 4-point DLT hypotheses, final DLT refit on inliers.

    Deterministic given seed. Returns (Homography, inlier bool array).
    """
    src = np.asarray(src, dtype=float)
    dst = np.asarray(dst, dtype=float)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2:
        raise GeometryError("src/dst must be matching Nx2 arrays")
    n = len(src)
    if n < 4:
        raise GeometryError("need at least 4 correspondences")
    rng = np.random.default_rng(seed)
    best_inliers = None
    best_count = 0
    for _ in range(iters):
        idx = rng.choice(n, size=4, replace=False)
        try:
            h = _dlt_homography(src[idx], dst[idx])
            hyp = Homography.from_matrix(h)
        except (GeometryError, np.linalg.LinAlgError):
            continue
        proj = hyp.apply(src)
        err = np.linalg.norm(proj - dst, axis=1)
        inl = err < thresh_px
        if inl.sum() > best_count:
            best_count = int(inl.sum())
            best_inliers = inl
    if best_inliers is None or best_count < 4:
        raise GeometryError("RANSAC found no model with >= 4 inliers")
    h = _dlt_homography(src[best_inliers], dst[best_inliers])
    return Homography.from_matrix(h), best_inliers
