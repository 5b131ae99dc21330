"""Camera modeling and cooperative perception: ground-plane back-projection of
laser-spot detections, field-of-view footprints, occlusion against wall
segments, and fusion of all camera streams into a single 2D point set."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .geometry import (
    Point2,
    Polyline,
    RigidTransform3,
    point_in_polygon,
    segments_intersect,
    signed_area,
)

DEFAULT_SIGMA_STATIONARY = 0.02
DEFAULT_SIGMA_MOBILE = 0.04


class CameraKind(Enum):
    STATIONARY = "stationary"
    MOBILE = "mobile"


class ProjectionError(ValueError):
    """A viewing ray does not meet the ground plane in front of the camera."""


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx <= self.width and 0 <= self.cy <= self.height):
            raise ValueError("principal point must lie inside the image")


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Calibrated camera. ``pose`` maps camera coordinates (x right, y down,
    z along the optical axis) into the map frame (z up, ground at z=0)."""

    id: str
    intrinsics: CameraIntrinsics
    pose: RigidTransform3
    kind: CameraKind = CameraKind.STATIONARY
    frame_rate: float = 25.0

    def __post_init__(self):
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be positive")


def camera_pose(
    x: float, y: float, z: float, yaw: float, pitch: float
) -> RigidTransform3:
    """Camera-to-map transform for a camera at (x, y, z), optical axis heading
    ``yaw`` (map frame, 0 = +x) and tilted ``pitch`` radians below horizontal
    (pi/2 = straight down)."""
    cy_, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    forward = np.array([cy_ * cp, sy * cp, -sp])
    right = np.array([sy, -cy_, 0.0])
    down = np.cross(forward, right)
    rot = np.column_stack([right, down, forward])
    return RigidTransform3(rot, np.array([x, y, z]))


@dataclass(frozen=True)
class GroundPoint:
    """A single fused-frame observation of the laser spot on the floor."""

    position: Point2
    source: str
    timestamp: float


@dataclass(frozen=True)
class PixelProjection:
    u: float
    v: float
    visible: bool  # in front of the camera and inside the image


def backproject_ground(cam: CameraModel, pixel: tuple[float, float]) -> Point2:
    """Intersect the viewing ray through ``pixel`` with the ground plane z=0.

    The image domain is treated as continuous, [0, width] x [0, height].
    Raises ProjectionError for rays parallel to the floor or leaving it behind
    the camera.
    """
    u, v = pixel
    intr = cam.intrinsics
    if not (0 <= u <= intr.width and 0 <= v <= intr.height):
        raise ProjectionError(f"pixel ({u}, {v}) outside image")
    d_cam = np.array([(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0])
    d_map = cam.pose.rotation @ d_cam
    origin = cam.pose.translation
    if abs(d_map[2]) < 1e-12:
        raise ProjectionError("viewing ray is parallel to the ground plane")
    s = -origin[2] / d_map[2]
    if s <= 0:
        raise ProjectionError("viewing ray points away from the ground plane")
    hit = origin + s * d_map
    return Point2(float(hit[0]), float(hit[1]))


def project_to_image(cam: CameraModel, p: Point2) -> PixelProjection:
    """Pinhole projection of the ground point (p.x, p.y, 0).

    Points behind the camera are reported as not visible rather than raised.
    """
    intr = cam.intrinsics
    p_cam = cam.pose.inverse_transform(np.array([p.x, p.y, 0.0]))
    if p_cam[2] <= 1e-12:
        return PixelProjection(math.nan, math.nan, False)
    u = float(intr.fx * p_cam[0] / p_cam[2] + intr.cx)
    v = float(intr.fy * p_cam[1] / p_cam[2] + intr.cy)
    inside = bool(0 <= u <= intr.width and 0 <= v <= intr.height)
    return PixelProjection(u, v, inside)


def fov_polygon(cam: CameraModel) -> Polyline:
    """Ground footprint of the camera: the four image-corner rays intersected
    with the floor, ordered counterclockwise and explicitly closed."""
    intr = cam.intrinsics
    corners = [(0.0, 0.0), (intr.width, 0.0), (intr.width, intr.height), (0.0, intr.height)]
    pts = [backproject_ground(cam, c) for c in corners]
    quad = Polyline(pts + [pts[0]])
    if signed_area(quad) < 0:
        pts = pts[::-1]
        quad = Polyline(pts + [pts[0]])
    return quad


def footprint_center(cam: CameraModel) -> Point2:
    """Ground intersection of the principal ray (used as the occlusion anchor)."""
    return backproject_ground(cam, (cam.intrinsics.cx, cam.intrinsics.cy))


def _occluded(
    center: Point2, spot: Point2, walls: Sequence[tuple[Point2, Point2]]
) -> bool:
    for w0, w1 in walls:
        if segments_intersect(center, spot, w0, w1):
            return True
    return False


def _footprint_cached(cam: CameraModel) -> tuple[Polyline, Point2]:
    """Footprint polygon and center, memoized on the (immutable) camera."""
    cached = getattr(cam, "_footprint_memo", None)
    if cached is None:
        cached = (fov_polygon(cam), footprint_center(cam))
        object.__setattr__(cam, "_footprint_memo", cached)
    return cached


def sees_ground_point(
    cam: CameraModel,
    spot: Point2,
    walls: Sequence[tuple[Point2, Point2]] = (),
) -> bool:
    """True if ``spot`` is inside the camera footprint and the ground segment
    from the footprint center to the spot crosses no wall segment."""
    try:
        fov, center = _footprint_cached(cam)
    except ProjectionError:
        return False
    if not point_in_polygon(spot, fov):
        return False
    return not _occluded(center, spot, walls)


def simulate_detection(
    world,
    cams: Sequence[CameraModel],
    robot_cam: CameraModel | None,
    true_spot: Point2,
    rng_seed: int | np.random.Generator | None = 0,
    now: float = 0.0,
    noise_scale: float = 1.0,
) -> list[GroundPoint]:
    """Per-camera detection of a true laser spot.

    Each camera that has the spot inside its ground footprint and an
    unoccluded ground line from its footprint center emits one observation,
    perturbed by zero-mean isotropic Gaussian noise with the camera's sigma
    from ``world`` (stationary/mobile defaults when unspecified). Deterministic
    given the seed; an empty list means no camera saw the spot.
    """
    rng = np.random.default_rng(rng_seed)
    walls = occluder_segments(world)
    out: list[GroundPoint] = []
    all_cams = list(cams) + ([robot_cam] if robot_cam is not None else [])
    for cam in all_cams:
        if not sees_ground_point(cam, true_spot, walls):
            continue
        sigma = noise_sigma_for(world, cam) * noise_scale
        if sigma > 0:
            dx, dy = rng.normal(0.0, sigma, size=2)
        else:
            dx = dy = 0.0
        out.append(
            GroundPoint(Point2(true_spot.x + dx, true_spot.y + dy), cam.id, now)
        )
    return out


def noise_sigma_for(world, cam: CameraModel) -> float:
    """Camera noise from the scenario: per-id override, else per-kind, else
    the artifact defaults (0.02 m stationary, 0.04 m mobile)."""
    sigmas = getattr(world, "noise_sigma", None) or {}
    if cam.id in sigmas:
        return float(sigmas[cam.id])
    if cam.kind.value in sigmas:
        return float(sigmas[cam.kind.value])
    if cam.kind is CameraKind.MOBILE:
        return DEFAULT_SIGMA_MOBILE
    return DEFAULT_SIGMA_STATIONARY


def occluder_segments(world) -> list[tuple[Point2, Point2]]:
    """Wall segments of a scenario-like object as Point2 pairs (memoized)."""
    cached = getattr(world, "_occluder_memo", None)
    if cached is not None:
        return cached
    segs = []
    for seg in getattr(world, "walls", []) or []:
        if isinstance(seg, (tuple, list)) and len(seg) == 4:
            x0, y0, x1, y1 = seg
            segs.append((Point2(x0, y0), Point2(x1, y1)))
        else:
            a, b = seg
            segs.append(
                (
                    a if isinstance(a, Point2) else Point2(*a),
                    b if isinstance(b, Point2) else Point2(*b),
                )
            )
    try:
        setattr(world, "_occluder_memo", segs)
    except (AttributeError, TypeError):
        pass
    return segs


def fuse(streams: Iterable[Iterable[GroundPoint]]) -> list[Point2]:
    """Merge per-camera observation streams into one 2D point set, ordered by
    timestamp (stable), source tags dropped, duplicates kept."""
    merged: list[GroundPoint] = []
    for stream in streams:
        merged.extend(stream)
    merged.sort(key=lambda g: g.timestamp)
    return [g.position for g in merged]
