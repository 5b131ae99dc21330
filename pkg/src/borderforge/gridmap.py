"""Occupancy grid maps: representation, persistence, rasterization, border
integration via seeded flood fill, and the Jaccard similarity accuracy metric."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum, IntEnum
from pathlib import Path
from typing import Iterable

import numpy as np
import yaml
from scipy import ndimage

from .geometry import Point2, Polyline, Pose2, distance

# PGM gray values written on save; load maps bands around them (see load_map).
PGM_OCCUPIED = 0
PGM_UNKNOWN = 205
PGM_FREE = 254


class Occupancy(IntEnum):
    FREE = 0
    OCCUPIED = 1
    UNKNOWN = 2


class BorderKind(Enum):
    POLYGON = "polygon"
    SEPARATING_CURVE = "separating_curve"


class OutOfBoundsError(ValueError):
    """A world coordinate fell outside the grid."""

    def __init__(self, point: Point2, message: str | None = None):
        self.point = point
        super().__init__(message or f"point ({point.x}, {point.y}) is outside the map")


class SeedPlacementError(ValueError):
    """The seed point cannot start a fill (on the border, occupied or unknown)."""


class FillBudgetError(RuntimeError):
    """The flood fill grew past the configured cell budget."""


class MapMismatchError(ValueError):
    """Two grids do not share dimensions, resolution and origin."""


class MapFormatError(ValueError):
    """A map file is malformed; carries the byte offset of the defect."""

    def __init__(self, message: str, byte_offset: int):
        self.byte_offset = byte_offset
        super().__init__(f"{message} (byte offset {byte_offset})")


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Trinary occupancy grid. Immutable after construction; operations return
    new grids. ``cells`` is row-major with shape (height, width); ``origin``
    is the world pose of the corner of cell (0, 0)."""

    width: int
    height: int
    resolution: float
    origin: Pose2
    cells: np.ndarray

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")
        cells = np.asarray(self.cells, dtype=np.uint8)
        if cells.shape != (self.height, self.width):
            raise ValueError(
                f"cells shape {cells.shape} != (height={self.height}, width={self.width})"
            )
        if cells.size and cells.max() > 2:
            raise ValueError("cells contain values outside {FREE, OCCUPIED, UNKNOWN}")
        cells = cells.copy()
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def filled(
        cls,
        width: int,
        height: int,
        resolution: float,
        origin: Pose2 | None = None,
        value: Occupancy = Occupancy.FREE,
    ) -> "OccupancyGrid":
        origin = origin or Pose2(Point2(0.0, 0.0), 0.0)
        cells = np.full((height, width), int(value), dtype=np.uint8)
        return cls(width, height, resolution, origin, cells)

    def with_cells(self, cells: np.ndarray) -> "OccupancyGrid":
        return OccupancyGrid(self.width, self.height, self.resolution, self.origin, cells)

    def same_frame(self, other: "OccupancyGrid") -> bool:
        return (
            self.width == other.width
            and self.height == other.height
            and self.resolution == other.resolution
            and self.origin == other.origin
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return self.same_frame(other) and bool(np.array_equal(self.cells, other.cells))

    def occupancy_at(self, col: int, row: int) -> Occupancy:
        return Occupancy(int(self.cells[row, col]))

    # -- world/grid frame conversion ------------------------------------

    def _to_grid_frame(self, p: Point2) -> tuple[float, float]:
        dx = p.x - self.origin.x
        dy = p.y - self.origin.y
        c, s = math.cos(self.origin.theta), math.sin(self.origin.theta)
        return (c * dx + s * dy) / self.resolution, (-s * dx + c * dy) / self.resolution

    def _from_grid_frame(self, gx: float, gy: float) -> Point2:
        wx = gx * self.resolution
        wy = gy * self.resolution
        c, s = math.cos(self.origin.theta), math.sin(self.origin.theta)
        return Point2(self.origin.x + c * wx - s * wy, self.origin.y + s * wx + c * wy)


def _grid_index(grid: OccupancyGrid, g: float, extent: int) -> int:
    # Snap coordinates within float noise of a cell boundary onto it, so
    # points meant to lie exactly on a grid line land on its positive side
    # regardless of rounding direction (2.65/0.025 evaluates to 105.999...).
    nearest = round(g)
    if abs(g - nearest) < 1e-9:
        g = nearest
    idx = math.floor(g)
    # Points exactly on the far edge belong to the last cell.
    if idx == extent and g == extent:
        idx = extent - 1
    return idx


def world_to_cell(grid: OccupancyGrid, p: Point2) -> tuple[int, int]:
    """Map a world point to its (col, row) cell index.

    Raises OutOfBoundsError (carrying the point) if p is outside the grid.
    """
    gx, gy = grid._to_grid_frame(p)
    col = _grid_index(grid, gx, grid.width)
    row = _grid_index(grid, gy, grid.height)
    if not (0 <= col < grid.width and 0 <= row < grid.height):
        raise OutOfBoundsError(p)
    return col, row


def cell_to_world(grid: OccupancyGrid, col: int, row: int) -> Point2:
    """World coordinates of the center of cell (col, row)."""
    return grid._from_grid_frame(col + 0.5, row + 0.5)


def in_bounds(grid: OccupancyGrid, p: Point2) -> bool:
    try:
        world_to_cell(grid, p)
        return True
    except OutOfBoundsError:
        return False


def _traverse_segment(
    grid: OccupancyGrid, a: Point2, b: Point2
) -> Iterable[tuple[int, int]]:
    """All cells a segment passes through (grid line walk; corner crossings
    step diagonally, so an exact diagonal yields only the diagonal cells)."""
    gx0, gy0 = grid._to_grid_frame(a)
    gx1, gy1 = grid._to_grid_frame(b)
    x = _grid_index(grid, gx0, grid.width)
    y = _grid_index(grid, gy0, grid.height)
    xe = _grid_index(grid, gx1, grid.width)
    ye = _grid_index(grid, gy1, grid.height)
    yield x, y

    dx = gx1 - gx0
    dy = gy1 - gy0
    step_x = 1 if dx > 0 else -1
    step_y = 1 if dy > 0 else -1
    if dx != 0:
        t_delta_x = abs(1.0 / dx)
        next_xb = x + 1 if step_x > 0 else x
        t_max_x = (next_xb - gx0) / dx
    else:
        t_delta_x = math.inf
        t_max_x = math.inf
    if dy != 0:
        t_delta_y = abs(1.0 / dy)
        next_yb = y + 1 if step_y > 0 else y
        t_max_y = (next_yb - gy0) / dy
    else:
        t_delta_y = math.inf
        t_max_y = math.inf

    # Step only through boundary crossings strictly inside the segment
    # (t < 1); an endpoint exactly on a cell boundary would otherwise walk
    # one crossing too far. The end cell itself is appended afterwards.
    guard = 2 * (abs(xe - x) + abs(ye - y)) + 8
    while guard > 0 and min(t_max_x, t_max_y) < 1.0 - 1e-12:
        guard -= 1
        if abs(t_max_x - t_max_y) < 1e-12:
            x += step_x
            y += step_y
            t_max_x += t_delta_x
            t_max_y += t_delta_y
        elif t_max_x < t_max_y:
            x += step_x
            t_max_x += t_delta_x
        else:
            y += step_y
            t_max_y += t_delta_y
        yield x, y
    yield xe, ye


def rasterize_chain(grid: OccupancyGrid, chain: Polyline) -> list[tuple[int, int]]:
    """Cells covered by a polygonal chain, 8-connected per segment, duplicates
    removed, in first-visit order. Every vertex must be in bounds."""
    for v in chain.vertices:
        world_to_cell(grid, v)  # raises OutOfBoundsError on violation
    seen: dict[tuple[int, int], None] = {}
    for a, b in zip(chain.vertices, chain.vertices[1:]):
        for cell in _traverse_segment(grid, a, b):
            seen.setdefault(cell, None)
    return list(seen.keys())


@dataclass(frozen=True)
class VirtualBorder:
    """User-defined border: chain of points, seed marking the restricted side,
    and the occupancy assigned to the filled area (fixed to 1.0 here)."""

    chain: Polyline
    seed: Point2
    occupancy: float = 1.0
    kind: BorderKind = BorderKind.POLYGON

    def __post_init__(self):
        if not 0.0 <= self.occupancy <= 1.0:
            raise ValueError(f"occupancy must be in [0, 1], got {self.occupancy}")


def extend_to_physical_borders(grid: OccupancyGrid, chain: Polyline) -> Polyline:
    """Extend a separating curve's end segments until they meet occupied or
    unknown cells or the map edge.

    Marches from the first vertex against the first segment direction and from
    the last vertex along the last segment direction, in steps of half a cell;
    the new endpoint is the last free position before the stop cell. Endpoints
    that cannot move (already touching) are left unchanged.
    """

    def extended_endpoint(anchor: Point2, toward: Point2) -> Point2 | None:
        dx = anchor.x - toward.x
        dy = anchor.y - toward.y
        norm = math.hypot(dx, dy)
        if norm <= 1e-12:
            raise ValueError("zero-length end segment cannot be extended")
        ux, uy = dx / norm, dy / norm
        step = grid.resolution / 2.0
        last_free: Point2 | None = None
        max_steps = int(2 * (grid.width + grid.height)) + 4
        for k in range(1, max_steps):
            p = Point2(anchor.x + ux * step * k, anchor.y + uy * step * k)
            try:
                col, row = world_to_cell(grid, p)
            except OutOfBoundsError:
                break  # map edge reached
            if grid.cells[row, col] != Occupancy.FREE:
                break
            last_free = p
        return last_free

    verts = list(chain.vertices)
    head = extended_endpoint(verts[0], verts[1])
    tail = extended_endpoint(verts[-1], verts[-2])
    out = list(verts)
    if head is not None:
        out.insert(0, head)
    if tail is not None:
        out.append(tail)
    return Polyline(out)


_FILL_STRUCTURE = ndimage.generate_binary_structure(2, 1)  # 4-connectivity


def integrate_border(
    prior: OccupancyGrid, border: VirtualBorder, fill_budget: int | None = None
) -> OccupancyGrid:
    """Integrate a virtual border into a map: rasterize the (possibly extended)
    chain as occupied, then flood-fill the free region containing the seed.

    The fill is 4-connected while the chain raster is 8-connected, so the fill
    cannot leak diagonally through the border. Occupied cells never revert.
    Re-integrating a border that is already fully present is a no-op, which
    keeps integration idempotent; any other non-free seed is an error.
    """
    chain = border.chain
    if border.kind is BorderKind.SEPARATING_CURVE:
        chain = extend_to_physical_borders(prior, chain)
    elif not chain.is_closed:
        # polygons are closed rings: bridge the endpoint gap before rasterizing
        chain = Polyline(list(chain.vertices) + [chain.vertices[0]])
    border_cells = rasterize_chain(prior, chain)

    seed_col, seed_row = world_to_cell(prior, border.seed)
    seed_occ = Occupancy(int(prior.cells[seed_row, seed_col]))
    border_set = set(border_cells)
    if seed_occ is not Occupancy.FREE or (seed_col, seed_row) in border_set:
        already = all(
            prior.cells[r, c] == Occupancy.OCCUPIED for c, r in border_cells
        )
        if already and seed_occ is Occupancy.OCCUPIED:
            return prior  # border already integrated
        if (seed_col, seed_row) in border_set:
            raise SeedPlacementError(
                f"seed ({border.seed.x}, {border.seed.y}) lies on the border line"
            )
        raise SeedPlacementError(
            f"seed ({border.seed.x}, {border.seed.y}) is in a "
            f"{seed_occ.name.lower()} cell, not free space"
        )

    work = np.array(prior.cells, dtype=np.uint8)
    cols = np.fromiter((c for c, _ in border_cells), dtype=int)
    rows = np.fromiter((r for _, r in border_cells), dtype=int)
    work[rows, cols] = Occupancy.OCCUPIED

    free = work == Occupancy.FREE
    labels, _ = ndimage.label(free, structure=_FILL_STRUCTURE)
    component = labels[seed_row, seed_col]
    fill_mask = labels == component
    fill_count = int(fill_mask.sum())
    if fill_budget is not None and fill_count > fill_budget:
        raise FillBudgetError(
            f"flood fill of {fill_count} cells exceeds budget {fill_budget}"
        )
    work[fill_mask] = Occupancy.OCCUPIED
    return prior.with_cells(work)


def jsi(
    gt: OccupancyGrid, ud: OccupancyGrid, prior: OccupancyGrid | None = None
) -> float:
    """Jaccard similarity of the two restriction areas.

    With a shared prior, the restriction area of each map is its set of newly
    occupied cells relative to that prior; without one, all occupied cells
    count. Returns 1.0 when both areas are empty.
    """
    if not gt.same_frame(ud) or (prior is not None and not gt.same_frame(prior)):
        raise MapMismatchError("grids differ in dimensions, resolution or origin")
    gt_occ = gt.cells == Occupancy.OCCUPIED
    ud_occ = ud.cells == Occupancy.OCCUPIED
    if prior is not None:
        base = prior.cells == Occupancy.OCCUPIED
        gt_occ = gt_occ & ~base
        ud_occ = ud_occ & ~base
    union = int(np.sum(gt_occ | ud_occ))
    if union == 0:
        return 1.0
    inter = int(np.sum(gt_occ & ud_occ))
    return inter / union


# -- persistence: binary PGM (P5) + YAML metadata -----------------------

_OCC_TO_PGM = np.zeros(3, dtype=np.uint8)
_OCC_TO_PGM[Occupancy.FREE] = PGM_FREE
_OCC_TO_PGM[Occupancy.OCCUPIED] = PGM_OCCUPIED
_OCC_TO_PGM[Occupancy.UNKNOWN] = PGM_UNKNOWN


def pgm_bytes(grid: OccupancyGrid) -> bytes:
    """Serialize a grid as a binary PGM image (row 0 = top = max-y map row)."""
    header = f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii")
    pixels = _OCC_TO_PGM[np.flipud(grid.cells)]
    return header + pixels.tobytes()


def _pgm_to_occupancy(pixels: np.ndarray) -> np.ndarray:
    occ = np.full(pixels.shape, int(Occupancy.UNKNOWN), dtype=np.uint8)
    occ[pixels <= 49] = Occupancy.OCCUPIED
    occ[pixels >= 206] = Occupancy.FREE
    return occ


def parse_pgm(data: bytes) -> tuple[int, int, np.ndarray]:
    """Parse binary PGM bytes into (width, height, pixel array).

    Raises MapFormatError naming the byte offset of the first defect.
    """
    if not data.startswith(b"P5"):
        raise MapFormatError("not a binary PGM (missing P5 magic)", 0)
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not re.fullmatch(rb"\d+", token):
            raise MapFormatError(f"bad header token {token!r}", start)
        fields.append(int(token))
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise MapFormatError("missing whitespace after maxval", pos)
    pos += 1
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise MapFormatError(f"bad dimensions {width}x{height}", 2)
    if maxval != 255:
        raise MapFormatError(f"unsupported maxval {maxval} (expected 255)", 2)
    expected = width * height
    body = data[pos:]
    if len(body) < expected:
        raise MapFormatError(
            f"truncated pixel data: expected {expected} bytes, got {len(body)}",
            pos + len(body),
        )
    if len(body) > expected:
        raise MapFormatError("trailing bytes after pixel data", pos + expected)
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(height, width)
    return width, height, pixels


def save_map(grid: OccupancyGrid, path: str | Path) -> tuple[Path, Path]:
    """Write ``<stem>.pgm`` and ``<stem>.yaml``; returns both paths."""
    path = Path(path)
    stem = path.with_suffix("") if path.suffix in {".pgm", ".yaml"} else path
    pgm_path = stem.with_suffix(".pgm")
    yaml_path = stem.with_suffix(".yaml")
    pgm_path.write_bytes(pgm_bytes(grid))
    meta = (
        f"image: {pgm_path.name}\n"
        f"resolution: {grid.resolution!r}\n"
        f"origin: [{grid.origin.x!r}, {grid.origin.y!r}, {grid.origin.theta!r}]\n"
    )
    yaml_path.write_text(meta)
    return pgm_path, yaml_path


def load_map(path: str | Path) -> OccupancyGrid:
    """Load a map from its YAML metadata file (or a PGM with a sibling YAML)."""
    path = Path(path)
    yaml_path = path if path.suffix == ".yaml" else path.with_suffix(".yaml")
    if not yaml_path.exists():
        raise FileNotFoundError(f"map metadata not found: {yaml_path}")
    meta = yaml.safe_load(yaml_path.read_text())
    if not isinstance(meta, dict):
        raise MapFormatError(f"metadata file {yaml_path} is not a mapping", 0)
    for key in ("image", "resolution", "origin"):
        if key not in meta:
            raise MapFormatError(f"metadata missing field {key!r}", 0)
    pgm_path = yaml_path.parent / str(meta["image"])
    data = pgm_path.read_bytes()
    width, height, pixels = parse_pgm(data)
    origin_vals = list(meta["origin"])
    if len(origin_vals) != 3:
        raise MapFormatError("origin must be [x, y, theta]", 0)
    origin = Pose2(Point2(float(origin_vals[0]), float(origin_vals[1])), float(origin_vals[2]))
    cells = _pgm_to_occupancy(np.flipud(pixels))
    return OccupancyGrid(width, height, float(meta["resolution"]), origin, cells)
