"""Plain 2D/3D geometric primitives and predicates shared by all modules."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


def normalize_angle(theta: float) -> float:
    """Wrap an angle into the canonical interval (-pi, pi]."""
    r = math.remainder(theta, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


@dataclass(frozen=True)
class Point2:
    """A point on the ground plane, in meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates: ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class Pose2:
    """3-DoF pose: 2D position and heading, theta normalized to (-pi, pi]."""

    position: Point2
    theta: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError(f"non-finite heading: {self.theta}")
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @property
    def x(self) -> float:
        return self.position.x

    @property
    def y(self) -> float:
        return self.position.y


@dataclass(frozen=True, eq=False)
class RigidTransform3:
    """Rigid motion in 3D: rotation (3x3, orthonormal, det +1) plus translation.

    Maps points from the child frame into the parent frame:
    ``p_parent = rotation @ p_child + translation``.
    """

    rotation: np.ndarray
    translation: np.ndarray

    _ORTHO_TOL = 1e-9

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=float)
        trans = np.array(self.translation, dtype=float).reshape(3)
        if rot.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {rot.shape}")
        if not np.all(np.isfinite(rot)) or not np.all(np.isfinite(trans)):
            raise ValueError("non-finite transform entries")
        if np.max(np.abs(rot.T @ rot - np.eye(3))) > self._ORTHO_TOL:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(rot) - 1.0) > self._ORTHO_TOL:
            raise ValueError("rotation determinant is not +1")
        rot.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @classmethod
    def identity(cls) -> "RigidTransform3":
        return cls(np.eye(3), np.zeros(3))

    def transform(self, p: Sequence[float]) -> np.ndarray:
        return self.rotation @ np.asarray(p, dtype=float) + self.translation

    def inverse_transform(self, p: Sequence[float]) -> np.ndarray:
        return self.rotation.T @ (np.asarray(p, dtype=float) - self.translation)


@dataclass(frozen=True)
class Polyline:
    """Ordered chain of ground-plane vertices (at least two, consecutive distinct)."""

    vertices: tuple[Point2, ...]

    def __init__(self, vertices: Iterable[Point2]):
        vts = tuple(
            v if isinstance(v, Point2) else Point2(float(v[0]), float(v[1]))
            for v in vertices
        )
        if len(vts) < 2:
            raise ValueError(f"polyline needs >= 2 vertices, got {len(vts)}")
        for a, b in zip(vts, vts[1:]):
            if a.x == b.x and a.y == b.y:
                raise ValueError(f"consecutive duplicate vertex at ({a.x}, {a.y})")
        object.__setattr__(self, "vertices", vts)

    def __len__(self) -> int:
        return len(self.vertices)

    def __getitem__(self, i):
        return self.vertices[i]

    @property
    def is_closed(self) -> bool:
        a, b = self.vertices[0], self.vertices[-1]
        return a.x == b.x and a.y == b.y

    def as_array(self) -> np.ndarray:
        return np.array([[v.x, v.y] for v in self.vertices], dtype=float)


def distance(a: Point2, b: Point2) -> float:
    """Euclidean distance between two ground points."""
    return math.hypot(a.x - b.x, a.y - b.y)


def as_xy(points: Iterable[Point2] | np.ndarray) -> np.ndarray:
    """Normalize a point collection to an (n, 2) float array."""
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
        if arr.size == 0:
            return arr.reshape(0, 2)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"expected (n, 2) array, got shape {arr.shape}")
        return arr
    pts = list(points)
    if not pts:
        return np.zeros((0, 2), dtype=float)
    return np.array([[p.x, p.y] for p in pts], dtype=float)


def aabb_diagonal(points: Iterable[Point2] | np.ndarray) -> float:
    """Diagonal of the axis-aligned bounding box of a nonempty point set."""
    arr = as_xy(points)
    if arr.shape[0] == 0:
        raise ValueError("aabb_diagonal of an empty point set")
    mins = arr.min(axis=0)
    maxs = arr.max(axis=0)
    return float(math.hypot(maxs[0] - mins[0], maxs[1] - mins[1]))


def polyline_length(poly: Polyline) -> float:
    """Total length of a polygonal chain."""
    arr = poly.as_array()
    return float(np.sum(np.hypot(np.diff(arr[:, 0]), np.diff(arr[:, 1]))))


def _polygon_ring(poly: Polyline) -> np.ndarray:
    ring = poly.as_array()
    if poly.is_closed:
        ring = ring[:-1]
    if ring.shape[0] < 3:
        raise ValueError("polygon needs at least 3 distinct vertices")
    return ring


def signed_area(poly: Polyline) -> float:
    """Shoelace area of a closed chain; positive for counterclockwise order."""
    ring = _polygon_ring(poly)
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def point_on_segment(p: Point2, a: Point2, b: Point2, tol: float = 1e-12) -> bool:
    """Whether p lies on the segment a-b (within a small absolute tolerance)."""
    cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
    scale = max(1.0, abs(b.x - a.x), abs(b.y - a.y))
    if abs(cross) > tol * scale:
        return False
    dot = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)
    sq_len = (b.x - a.x) ** 2 + (b.y - a.y) ** 2
    return -tol <= dot <= sq_len + tol


def point_in_polygon(p: Point2, poly: Polyline) -> bool:
    """Even-odd containment test; points on the boundary count as inside.

    The polygon may repeat its first vertex at the end or leave the closure
    implied. Degenerate polygons (zero area) are rejected.
    """
    ring = _polygon_ring(poly)
    x, y = ring[:, 0], ring[:, 1]
    area2 = abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))
    span = max(x.max() - x.min(), y.max() - y.min(), 1.0)
    if area2 <= 1e-12 * span * span:
        raise ValueError("degenerate polygon (zero area)")

    n = ring.shape[0]
    for i in range(n):
        a = Point2(ring[i][0], ring[i][1])
        b = Point2(ring[(i + 1) % n][0], ring[(i + 1) % n][1])
        if point_on_segment(p, a, b):
            return True

    inside = False
    j = n - 1
    for i in range(n):
        xi, yi = ring[i]
        xj, yj = ring[j]
        if (yi > p.y) != (yj > p.y):
            x_cross = (xj - xi) * (p.y - yi) / (yj - yi) + xi
            if p.x < x_cross:
                inside = not inside
        j = i
    return inside


def _orient(ax, ay, bx, by, cx, cy) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def segments_intersect(
    a1: Point2, a2: Point2, b1: Point2, b2: Point2
) -> bool:
    """Whether segments a1-a2 and b1-b2 share any point (touching counts)."""
    d1 = _orient(b1.x, b1.y, b2.x, b2.y, a1.x, a1.y)
    d2 = _orient(b1.x, b1.y, b2.x, b2.y, a2.x, a2.y)
    d3 = _orient(a1.x, a1.y, a2.x, a2.y, b1.x, b1.y)
    d4 = _orient(a1.x, a1.y, a2.x, a2.y, b2.x, b2.y)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0 and point_on_segment(a1, b1, b2):
        return True
    if d2 == 0 and point_on_segment(a2, b1, b2):
        return True
    if d3 == 0 and point_on_segment(b1, a1, a2):
        return True
    if d4 == 0 and point_on_segment(b2, a1, a2):
        return True
    return False
