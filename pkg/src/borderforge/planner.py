"""Grid path planning: A* over 8-connected free cells with obstacle inflation,
used both to dispatch the simulated robot and to verify that integrated
borders actually change navigational behavior."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import Point2
from .gridmap import Occupancy, OccupancyGrid, cell_to_world, world_to_cell

DEFAULT_INFLATION = 0.18  # m, roughly a TurtleBot-class footprint radius

SQRT2 = math.sqrt(2.0)


class PlanningError(ValueError):
    """Start or goal is unusable (out of bounds or inside an inflated obstacle)."""


@dataclass(frozen=True)
class Path:
    """Grid path as a sequence of cell centers; length in meters under the
    octile metric (straight steps cost one resolution, diagonals sqrt(2))."""

    waypoints: tuple[Point2, ...]
    length: float

    def __len__(self) -> int:
        return len(self.waypoints)


def inflated_blocked(grid: OccupancyGrid, inflation: float) -> np.ndarray:
    """Boolean (height, width) mask of untraversable cells: occupied or
    unknown, grown by the Euclidean distance transform threshold."""
    blocked = grid.cells != Occupancy.FREE
    if inflation > 0 and blocked.any():
        dist_cells = ndimage.distance_transform_edt(~blocked)
        blocked = dist_cells * grid.resolution < inflation
    return blocked


_MOVES = [
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, SQRT2),
    (1, -1, SQRT2),
    (-1, 1, SQRT2),
    (-1, -1, SQRT2),
]


def _octile(ac: int, ar: int, bc: int, br: int) -> float:
    dc = abs(ac - bc)
    dr = abs(ar - br)
    return max(dc, dr) + (SQRT2 - 1.0) * min(dc, dr)


class GridNav:
    """Reusable planner over one grid + inflation (the blocked mask is the
    expensive part, so batch callers share one instance per map)."""

    def __init__(self, grid: OccupancyGrid, inflation: float = DEFAULT_INFLATION):
        self.grid = grid
        self.inflation = inflation
        self.blocked = inflated_blocked(grid, inflation)

    def cell_ok(self, col: int, row: int) -> bool:
        return (
            0 <= col < self.grid.width
            and 0 <= row < self.grid.height
            and not self.blocked[row, col]
        )

    def nearest_free_cell(
        self, p: Point2, max_radius: float = 0.6
    ) -> tuple[int, int] | None:
        """Closest plannable cell to p (BFS rings), or None within the radius."""
        try:
            col, row = world_to_cell(self.grid, p)
        except Exception:
            return None
        if self.cell_ok(col, row):
            return col, row
        max_r = int(math.ceil(max_radius / self.grid.resolution))
        for r in range(1, max_r + 1):
            best = None
            best_d2 = None
            for dc in range(-r, r + 1):
                for dr in (-r, r) if abs(dc) < r else range(-r, r + 1):
                    c, w = col + dc, row + dr
                    if self.cell_ok(c, w):
                        d2 = dc * dc + dr * dr
                        if best_d2 is None or d2 < best_d2:
                            best, best_d2 = (c, w), d2
            if best is not None:
                return best
        return None

    def plan_cells(
        self, start: tuple[int, int], goal: tuple[int, int]
    ) -> list[tuple[int, int]] | None:
        """A* between cell indices; None when the goal is unreachable."""
        sc, sr = start
        gc, gr = goal
        if not self.cell_ok(sc, sr):
            raise PlanningError(f"start cell {start} is blocked or out of bounds")
        if not self.cell_ok(gc, gr):
            raise PlanningError(f"goal cell {goal} is blocked or out of bounds")
        if start == goal:
            return [start]

        width = self.grid.width
        blocked = self.blocked
        g_cost: dict[int, float] = {sr * width + sc: 0.0}
        came: dict[int, int] = {}
        tie = 0
        open_heap: list[tuple[float, int, int]] = [
            (_octile(sc, sr, gc, gr), tie, sr * width + sc)
        ]
        goal_key = gr * width + gc
        closed: set[int] = set()
        while open_heap:
            _, _, key = heapq.heappop(open_heap)
            if key in closed:
                continue
            if key == goal_key:
                cells = [key]
                while key in came:
                    key = came[key]
                    cells.append(key)
                cells.reverse()
                return [(k % width, k // width) for k in cells]
            closed.add(key)
            col, row = key % width, key // width
            base = g_cost[key]
            for dc, dr, cost in _MOVES:
                nc, nr = col + dc, row + dr
                if not (0 <= nc < width and 0 <= nr < self.grid.height):
                    continue
                if blocked[nr, nc]:
                    continue
                if dc != 0 and dr != 0 and (blocked[row, nc] or blocked[nr, col]):
                    continue  # no cutting corners through blocked cells
                nkey = nr * width + nc
                ng = base + cost
                if ng < g_cost.get(nkey, math.inf):
                    g_cost[nkey] = ng
                    came[nkey] = key
                    tie += 1
                    heapq.heappush(
                        open_heap, (ng + _octile(nc, nr, gc, gr), tie, nkey)
                    )
        return None

    def plan(self, start: Point2, goal: Point2) -> Path | None:
        start_cell = world_to_cell(self.grid, start)
        goal_cell = world_to_cell(self.grid, goal)
        cells = self.plan_cells(start_cell, goal_cell)
        if cells is None:
            return None
        length = 0.0
        for (c0, r0), (c1, r1) in zip(cells, cells[1:]):
            length += SQRT2 if (c0 != c1 and r0 != r1) else 1.0
        waypoints = tuple(cell_to_world(self.grid, c, r) for c, r in cells)
        return Path(waypoints, length * self.grid.resolution)


def plan(
    grid: OccupancyGrid,
    start: Point2,
    goal: Point2,
    inflation: float = DEFAULT_INFLATION,
) -> Path | None:
    """Octile-optimal A* path between world points, or None if unreachable.

    Occupied and unknown cells block, inflated by ``inflation`` meters.
    Raises PlanningError when start or goal is out of bounds or blocked.
    """
    return GridNav(grid, inflation).plan(start, goal)


def reachable(
    grid: OccupancyGrid,
    start: Point2,
    goal: Point2,
    inflation: float = DEFAULT_INFLATION,
) -> bool:
    """Whether planning between the two points succeeds."""
    return plan(grid, start, goal, inflation) is not None
