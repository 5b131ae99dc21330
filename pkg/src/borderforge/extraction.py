"""Three-stage virtual-border extraction from a noisy multi-camera point set:
density clustering, cluster selection by spatial expansion, neighborhood
thinning, and two-phase polygonal-chain growth; plus seed extraction and
assembly of the final border."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .geometry import Point2, Polyline, aabb_diagonal, as_xy, distance, signed_area
from .gridmap import BorderKind, VirtualBorder

log = logging.getLogger(__name__)


class ExtractionError(RuntimeError):
    """A pipeline stage could not produce its output; carries the stage name."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"{stage}: {message}")


@dataclass(frozen=True)
class ExtractionParams:
    """Tuning knobs for the extraction stages.

    Defaults follow the experimentally determined values: clustering
    eps=0.5 m / min_pts=1 / expansion window (0.3 m, inf) / min cluster size
    10; thinning neighborhood 0.1 m; chain growth neighborhood 0.5 m. The
    closure distance deciding polygon vs. separating curve is an artifact
    addition, defaulting to the chain-growth neighborhood.
    """

    eps: float = 0.5
    min_pts: int = 1
    min_exp: float = 0.3
    max_exp: float = math.inf
    min_size: int = 10
    thin_dist: float = 0.1
    poly_dist: float = 0.5
    closure_dist: float = 0.5

    def __post_init__(self):
        for name in ("eps", "min_exp", "thin_dist", "poly_dist", "closure_dist"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.min_pts < 1:
            raise ValueError("min_pts must be >= 1")
        if not self.min_exp < self.max_exp:
            raise ValueError("min_exp must be below max_exp")

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "min_pts": self.min_pts,
            "min_exp": self.min_exp,
            "max_exp": None if math.isinf(self.max_exp) else self.max_exp,
            "min_size": self.min_size,
            "thin_dist": self.thin_dist,
            "poly_dist": self.poly_dist,
            "closure_dist": self.closure_dist,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExtractionParams":
        kwargs = dict(data)
        if kwargs.get("max_exp") is None:
            kwargs["max_exp"] = math.inf
        return cls(**kwargs)


@dataclass(frozen=True)
class Cluster:
    """A nonempty group of spatially nearby points, in input order."""

    points: tuple[Point2, ...]
    first_index: int  # lowest input index, used for deterministic ordering

    def __post_init__(self):
        if not self.points:
            raise ValueError("cluster must be nonempty")

    def __len__(self) -> int:
        return len(self.points)


def _neighbor_matrix(xy: np.ndarray, radius: float) -> np.ndarray:
    """Boolean (n, n) adjacency: within ``radius``, self excluded."""
    d2 = np.sum((xy[:, None, :] - xy[None, :, :]) ** 2, axis=-1)
    adj = d2 <= radius * radius
    np.fill_diagonal(adj, False)
    return adj


def dbscan(
    points, eps: float, min_pts: int
) -> tuple[list[Cluster], list[Point2]]:
    """Density-based clustering with deterministic, index-ordered expansion.

    A core point has at least ``min_pts`` OTHER points within ``eps`` (the
    point itself does not count; with the default min_pts=1 an isolated point
    is therefore noise, so noise rejection stays meaningful). Every input
    point lands in exactly one cluster or in the noise list; cluster ids
    follow first-seen input index.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    pts = [p if isinstance(p, Point2) else Point2(p[0], p[1]) for p in points]
    n = len(pts)
    if n == 0:
        return [], []
    xy = as_xy(pts)
    adj = _neighbor_matrix(xy, eps)
    neighbor_count = adj.sum(axis=1)
    is_core = neighbor_count >= min_pts

    UNVISITED, NOISE = -1, -2
    labels = np.full(n, UNVISITED, dtype=int)
    cluster_id = 0
    for i in range(n):
        if labels[i] != UNVISITED:
            continue
        if not is_core[i]:
            labels[i] = NOISE
            continue
        labels[i] = cluster_id
        queue = list(np.flatnonzero(adj[i]))
        qi = 0
        while qi < len(queue):
            j = queue[qi]
            qi += 1
            if labels[j] == NOISE:
                labels[j] = cluster_id  # border point adopted by this cluster
            if labels[j] != UNVISITED:
                continue
            labels[j] = cluster_id
            if is_core[j]:
                queue.extend(np.flatnonzero(adj[j]))
        cluster_id += 1

    clusters: list[Cluster] = []
    for cid in range(cluster_id):
        idx = np.flatnonzero(labels == cid)
        clusters.append(
            Cluster(tuple(pts[k] for k in idx), first_index=int(idx[0]))
        )
    noise = [pts[k] for k in np.flatnonzero(labels == NOISE)]
    return clusters, noise


def select_border_cluster(
    clusters: list[Cluster], params: ExtractionParams
) -> Cluster | None:
    """Largest sufficiently-big cluster whose bounding-box diagonal falls
    strictly inside the expansion window; None when nothing qualifies."""
    eligible = [c for c in clusters if len(c) >= params.min_size]
    eligible.sort(key=lambda c: (-len(c), c.first_index))
    for c in eligible:
        if params.min_exp < aabb_diagonal(c.points) < params.max_exp:
            return c
    return None


@dataclass(frozen=True)
class ThinResult:
    points: list[Point2]
    groups: list[list[int]]  # input indices merged into each emitted mean
    survivors: list[int]  # input indices that kept their original value


def thin_detailed(points, thin_dist: float) -> ThinResult:
    """Thinning with bookkeeping of which inputs built each mean.

    Repeatedly takes the point with the most neighbors within ``thin_dist``
    (ties to the lowest input index), replaces it and its neighbors by their
    arithmetic mean, and removes them from the working set. Means go straight
    to the output and are not reprocessed. When no point has a neighbor, the
    remaining points are appended unchanged, in input order.
    """
    if thin_dist <= 0:
        raise ValueError("thin_dist must be positive")
    pts = [p if isinstance(p, Point2) else Point2(p[0], p[1]) for p in points]
    xy = as_xy(pts)
    alive = np.arange(len(pts))
    means: list[Point2] = []
    groups: list[list[int]] = []
    while len(alive) > 1:
        sub = xy[alive]
        adj = _neighbor_matrix(sub, thin_dist)
        counts = adj.sum(axis=1)
        best = int(counts.argmax())  # argmax takes the lowest index on ties
        if counts[best] == 0:
            break
        members = np.concatenate(([best], np.flatnonzero(adj[best])))
        members.sort()
        group_idx = alive[members]
        mean = xy[group_idx].mean(axis=0)
        means.append(Point2(float(mean[0]), float(mean[1])))
        groups.append([int(k) for k in group_idx])
        keep = np.ones(len(alive), dtype=bool)
        keep[members] = False
        alive = alive[keep]
    survivors = [int(k) for k in alive]
    out = means + [pts[k] for k in survivors]
    return ThinResult(out, groups, survivors)


def thin(points, thin_dist: float) -> list[Point2]:
    """Merge neighborhoods of redundant points into their means."""
    return thin_detailed(points, thin_dist).points


# Widest turn the chain walk accepts per hop, measured against the direction
# of the last few hops. Without this gate, a stroke shorter than poly_dist
# lets the walk jump back across its own start once a direction is exhausted,
# putting the chain endpoints mid-stroke (which then breaks closure
# classification and end-segment extension). Smoothing over recent hops keeps
# genuine 90-degree border corners inside the gate even when the hop right
# before the corner was a small noise zigzag.
MAX_TURN_COS = math.cos(math.radians(135.0))
_TURN_WINDOW = 3  # hops averaged into the reference direction


def generate_polygon(points, poly_dist: float) -> Polyline:
    """Order a thinned point set into a polygonal chain by two-phase growth.

    Starting from the first point, the chain repeatedly absorbs the nearest
    unmarked neighbor within ``poly_dist`` (ties to the lowest index) that does
    not reverse the recent walk direction by more than the turn gate; when one
    direction is exhausted the walk restarts from the first point in the other
    direction, and the first direction is reversed and concatenated with the
    second. Points unreachable within ``poly_dist`` are dropped.
    """
    pts = [p if isinstance(p, Point2) else Point2(p[0], p[1]) for p in points]
    if len(pts) < 2:
        raise ExtractionError("polygon", "need at least 2 points")
    xy = as_xy(pts)
    n = len(pts)
    # The start point is arbitrary for the growth scheme; picking the point
    # farthest from the cluster centroid lands on a chain endpoint whenever
    # the border is open, which keeps the greedy walk one-directional instead
    # of splitting it mid-chain (ties go to the lowest index).
    start = int(np.argmax(np.sum((xy - xy.mean(axis=0)) ** 2, axis=1)))
    marked = np.zeros(n, dtype=bool)
    marked[start] = True
    dir1 = [start]
    dir2: list[int] = []
    forward = True
    cur = start
    hops: list[np.ndarray] = []  # recent hop vectors of the active walk
    while not marked.all():
        delta = xy - xy[cur]
        d2 = np.sum(delta**2, axis=1)
        d2[marked] = np.inf
        d2[d2 > poly_dist * poly_dist] = np.inf
        if hops:
            ref = np.sum(hops[-_TURN_WINDOW:], axis=0)
            ref_norm = float(np.hypot(ref[0], ref[1]))
            if ref_norm > 0:
                ref /= ref_norm
                with np.errstate(invalid="ignore"):
                    norms = np.sqrt(d2)
                    cos = (delta @ ref) / np.where(norms > 0, norms, 1.0)
                d2[cos < MAX_TURN_COS] = np.inf
        nearest = int(d2.argmin())
        if math.isfinite(d2[nearest]):
            hops.append(delta[nearest])
            (dir1 if forward else dir2).append(nearest)
            marked[nearest] = True
            cur = nearest
        elif forward:
            cur = start
            forward = False
            hops = []
        else:
            break
    chain_idx = dir1[::-1] + dir2
    dropped = n - len(chain_idx)
    if dropped:
        log.debug("generate_polygon dropped %d unreachable points", dropped)
    if len(chain_idx) < 2:
        raise ExtractionError("polygon", "border too sparse to form a chain")
    return Polyline([pts[k] for k in chain_idx])


def extract_seed(points, params: ExtractionParams) -> Point2:
    """Centroid of the largest density cluster of the seed-state buffer.

    The minimum-cluster-size filter is not applied: a seed is a brief dwell
    and produces few points.
    """
    clusters, _ = dbscan(points, params.eps, params.min_pts)
    if not clusters:
        raise ExtractionError("seed", "no stable seed: all points are noise")
    best = max(clusters, key=lambda c: (len(c), -c.first_index))
    xy = as_xy(best.points)
    centroid = xy.mean(axis=0)
    return Point2(float(centroid[0]), float(centroid[1]))


# A closed chain only counts as a polygon when it encloses real area: short
# noisy stubs can end with their endpoints nearby, but the resulting ring is a
# sliver that divides nothing, and closing it would leave the restriction
# unsealed instead of triggering the wall extension.
POLYGON_MIN_AREA = 0.15  # m^2


def _classify_chain(chain: Polyline, params: ExtractionParams) -> BorderKind:
    if distance(chain[0], chain[-1]) > params.closure_dist or len(chain) < 3:
        return BorderKind.SEPARATING_CURVE
    ring = chain if chain.is_closed else Polyline(list(chain.vertices) + [chain[0]])
    try:
        area = abs(signed_area(ring))
    except ValueError:
        return BorderKind.SEPARATING_CURVE
    return BorderKind.POLYGON if area >= POLYGON_MIN_AREA else BorderKind.SEPARATING_CURVE


@dataclass(frozen=True)
class ExtractionReport:
    border: VirtualBorder
    cluster_size: int
    thinned_size: int
    chain_size: int
    noise_points: int
    dropped_points: int  # thinned points unreachable during chain growth


def extract_border_with_report(
    border_points, seed_points, params: ExtractionParams | None = None
) -> ExtractionReport:
    """Full pipeline with diagnostics: cluster, select, thin, chain, classify
    polygon vs. separating curve by endpoint distance, and extract the seed."""
    params = params or ExtractionParams()
    clusters, noise = dbscan(border_points, params.eps, params.min_pts)
    cluster = select_border_cluster(clusters, params)
    if cluster is None:
        raise ExtractionError(
            "clustering",
            "no border found: no cluster satisfies size and expansion limits",
        )
    thinned = thin(cluster.points, params.thin_dist)
    chain = generate_polygon(thinned, params.poly_dist)
    kind = _classify_chain(chain, params)
    seed = extract_seed(seed_points, params)
    border = VirtualBorder(chain=chain, seed=seed, occupancy=1.0, kind=kind)
    return ExtractionReport(
        border=border,
        cluster_size=len(cluster),
        thinned_size=len(thinned),
        chain_size=len(chain),
        noise_points=len(noise),
        dropped_points=len(thinned) - len(chain),
    )


def extract_border(
    border_points, seed_points, params: ExtractionParams | None = None
) -> VirtualBorder:
    """Extract a virtual border from raw border/seed point buffers."""
    return extract_border_with_report(border_points, seed_points, params).border
