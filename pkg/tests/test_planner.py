import heapq
import math

import numpy as np
import pytest

from borderforge.geometry import Point2, Polyline
from borderforge.gridmap import (
    BorderKind,
    Occupancy,
    OccupancyGrid,
    VirtualBorder,
    integrate_border,
    world_to_cell,
)
from borderforge.planner import GridNav, PlanningError, inflated_blocked, plan, reachable

SQRT2 = math.sqrt(2)


def dijkstra_oracle(blocked, start, goal):
    """Reference shortest path cost (cells) under the same movement rule."""
    h, w = blocked.shape
    moves = [(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0)] + [
        (dc, dr, SQRT2) for dc in (-1, 1) for dr in (-1, 1)
    ]
    dist = {start: 0.0}
    heap = [(0.0, start)]
    while heap:
        d, cell = heapq.heappop(heap)
        if cell == goal:
            return d
        if d > dist.get(cell, math.inf):
            continue
        col, row = cell
        for dc, dr, cost in moves:
            nc, nr = col + dc, row + dr
            if not (0 <= nc < w and 0 <= nr < h) or blocked[nr, nc]:
                continue
            if dc != 0 and dr != 0 and (blocked[row, nc] or blocked[nr, col]):
                continue
            nd = d + cost
            if nd < dist.get((nc, nr), math.inf):
                dist[(nc, nr)] = nd
                heapq.heappush(heap, (nd, (nc, nr)))
    return None


class TestPlan:
    def test_open_diagonal(self):
        g = OccupancyGrid.filled(10, 10, 0.05)
        path = plan(g, Point2(0.025, 0.025), Point2(0.475, 0.475), inflation=0.0)
        assert path is not None
        assert path.length == pytest.approx(9 * SQRT2 * 0.05)

    def test_enclosed_goal_unreachable(self):
        g = OccupancyGrid.filled(20, 20, 0.1)
        cells = np.array(g.cells)
        cells[8:13, 8] = Occupancy.OCCUPIED
        cells[8:13, 12] = Occupancy.OCCUPIED
        cells[8, 8:13] = Occupancy.OCCUPIED
        cells[12, 8:13] = Occupancy.OCCUPIED
        g = g.with_cells(cells)
        assert plan(g, Point2(0.15, 0.15), Point2(1.05, 1.05), inflation=0.0) is None
        assert not reachable(g, Point2(0.15, 0.15), Point2(1.05, 1.05), inflation=0.0)

    def test_unknown_blocks(self):
        g = OccupancyGrid.filled(10, 3, 0.1)
        cells = np.array(g.cells)
        cells[:, 5] = Occupancy.UNKNOWN
        g = g.with_cells(cells)
        assert plan(g, Point2(0.15, 0.15), Point2(0.85, 0.15), inflation=0.0) is None

    def test_start_in_obstacle_rejected(self):
        g = OccupancyGrid.filled(10, 10, 0.1)
        cells = np.array(g.cells)
        cells[1, 1] = Occupancy.OCCUPIED
        g = g.with_cells(cells)
        with pytest.raises(PlanningError):
            plan(g, Point2(0.15, 0.15), Point2(0.85, 0.85), inflation=0.0)

    def test_out_of_bounds_rejected(self):
        g = OccupancyGrid.filled(10, 10, 0.1)
        with pytest.raises(ValueError):
            plan(g, Point2(-5, 0.5), Point2(0.5, 0.5))

    def test_matches_dijkstra_on_random_grids(self):
        rng = np.random.default_rng(17)
        checked = 0
        while checked < 50:
            size = 30
            cells = np.zeros((size, size), dtype=np.uint8)
            for _ in range(rng.integers(3, 9)):
                r0, c0 = rng.integers(0, size - 5, 2)
                hh, ww = rng.integers(2, 7, 2)
                cells[r0 : r0 + hh, c0 : c0 + ww] = Occupancy.OCCUPIED
            g = OccupancyGrid.filled(size, size, 0.1).with_cells(cells)
            nav = GridNav(g, inflation=0.0)
            free = np.argwhere(~nav.blocked)
            if len(free) < 2:
                continue
            s = tuple(free[rng.integers(len(free))][::-1])
            t = tuple(free[rng.integers(len(free))][::-1])
            cells_path = nav.plan_cells(s, t)
            oracle = dijkstra_oracle(nav.blocked, s, t)
            if cells_path is None:
                assert oracle is None
            else:
                cost = 0.0
                for (c0, r0), (c1, r1) in zip(cells_path, cells_path[1:]):
                    assert max(abs(c1 - c0), abs(r1 - r0)) == 1
                    cost += SQRT2 if (c0 != c1 and r0 != r1) else 1.0
                assert cost == pytest.approx(oracle, abs=1e-9)
            checked += 1

    def test_path_waypoints_are_8_neighbors_with_step_costs(self):
        g = OccupancyGrid.filled(20, 20, 0.05)
        path = plan(g, Point2(0.125, 0.125), Point2(0.875, 0.425), inflation=0.0)
        total = 0.0
        for a, b in zip(path.waypoints, path.waypoints[1:]):
            dx = round(abs(b.x - a.x) / 0.05)
            dy = round(abs(b.y - a.y) / 0.05)
            assert (dx, dy) in ((1, 0), (0, 1), (1, 1))
            total += SQRT2 * 0.05 if dx and dy else 0.05
        assert path.length == pytest.approx(total)


class TestInflation:
    def test_inflation_blocks_near_walls(self):
        g = OccupancyGrid.filled(40, 40, 0.05)
        cells = np.array(g.cells)
        cells[:, 20] = Occupancy.OCCUPIED
        g = g.with_cells(cells)
        blocked = inflated_blocked(g, 0.18)
        assert blocked[10, 20]
        assert blocked[10, 18] and blocked[10, 22]  # within 0.10 m
        assert not blocked[10, 24]  # 0.20 m away

    def test_zero_inflation_only_obstacles(self):
        g = OccupancyGrid.filled(10, 10, 0.1)
        cells = np.array(g.cells)
        cells[5, 5] = Occupancy.OCCUPIED
        g = g.with_cells(cells)
        blocked = inflated_blocked(g, 0.0)
        assert blocked.sum() == 1

    def test_narrow_gap_closes_under_inflation(self):
        g = OccupancyGrid.filled(40, 40, 0.05)
        cells = np.array(g.cells)
        cells[0:18, 20] = Occupancy.OCCUPIED
        cells[22:40, 20] = Occupancy.OCCUPIED  # 0.20 m doorway
        g = g.with_cells(cells)
        start, goal = Point2(0.5, 1.0), Point2(1.5, 1.0)
        assert reachable(g, start, goal, inflation=0.0)
        assert not reachable(g, start, goal, inflation=0.18)


class TestBorderEfficacy:
    def test_posterior_restricts_navigation(self):
        g = OccupancyGrid.filled(80, 80, 0.05)
        chain = Polyline(
            [Point2(1, 1), Point2(3, 1), Point2(3, 3), Point2(1, 3), Point2(1, 1)]
        )
        border = VirtualBorder(chain, Point2(2, 2), kind=BorderKind.POLYGON)
        post = integrate_border(g, border)
        start, goal = Point2(0.3, 0.3), Point2(2.0, 2.0)
        assert reachable(g, start, goal, inflation=0.1)
        # goal cell became occupied: planning into it must fail
        with pytest.raises(PlanningError):
            plan(post, start, goal, inflation=0.1)

    def test_posterior_paths_remain_valid_on_prior(self):
        g = OccupancyGrid.filled(60, 60, 0.05)
        cells = np.array(g.cells)
        cells[0, :] = Occupancy.OCCUPIED
        cells[-1, :] = Occupancy.OCCUPIED
        cells[:, 0] = Occupancy.OCCUPIED
        cells[:, -1] = Occupancy.OCCUPIED
        g = g.with_cells(cells)
        # curve splits the room down x=1; the west side becomes restricted
        chain = Polyline([Point2(1, 0.5), Point2(1, 2.5)])
        border = VirtualBorder(chain, Point2(0.5, 1.5), kind=BorderKind.SEPARATING_CURVE)
        post = integrate_border(g, border)
        prior_nav = GridNav(g, 0.1)
        post_nav = GridNav(post, 0.1)
        path = post_nav.plan(Point2(1.5, 0.3), Point2(2.5, 2.5))
        assert path is not None
        for p in path.waypoints:
            col, row = world_to_cell(g, p)
            assert not prior_nav.blocked[row, col]
