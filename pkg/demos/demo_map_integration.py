"""Integrate virtual borders into an occupancy grid: a closed polygon around a
carpet and a separating curve across a doorway, then score both against
ground truth with the Jaccard index and round-trip the maps through PGM+YAML.
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from borderforge import (
    BorderKind,
    Occupancy,
    OccupancyGrid,
    Point2,
    Polyline,
    VirtualBorder,
    integrate_border,
    jsi,
    load_map,
    rasterize_chain,
    save_map,
)


def build_room():
    """5 m x 4 m room with a dividing wall and a 0.8 m doorway."""
    grid = OccupancyGrid.filled(200, 160, 0.025)
    cells = np.array(grid.cells)
    cells[0, :] = cells[-1, :] = Occupancy.OCCUPIED
    cells[:, 0] = cells[:, -1] = Occupancy.OCCUPIED
    wall = Polyline([Point2(2.5, 0.0), Point2(2.5, 2.0)])
    for c, r in rasterize_chain(grid, wall):
        cells[r, c] = Occupancy.OCCUPIED
    return grid.with_cells(cells)


def occupied_area(grid, prior):
    delta = (grid.cells == Occupancy.OCCUPIED) & (prior.cells != Occupancy.OCCUPIED)
    return delta.sum() * grid.resolution**2


def main():
    prior = build_room()
    print(f"prior: {prior.width}x{prior.height} cells at {prior.resolution} m")

    carpet = VirtualBorder(
        chain=Polyline(
            [Point2(0.8, 2.6), Point2(2.0, 2.6), Point2(2.0, 3.4), Point2(0.8, 3.4), Point2(0.8, 2.6)]
        ),
        seed=Point2(1.4, 3.0),
        kind=BorderKind.POLYGON,
    )
    after_carpet = integrate_border(prior, carpet)
    print(f"carpet polygon restricts {occupied_area(after_carpet, prior):.2f} m^2")

    doorway = VirtualBorder(
        chain=Polyline([Point2(2.5, 2.2), Point2(2.5, 3.0)]),
        seed=Point2(1.2, 1.0),
        kind=BorderKind.SEPARATING_CURVE,
    )
    # iteration: the carpet posterior becomes the prior of the next process
    posterior = integrate_border(after_carpet, doorway)
    print(f"adding the doorway curve: total restricted "
          f"{occupied_area(posterior, prior):.2f} m^2")

    # a hand-drawn attempt vs the intended carpet: accuracy via JSI
    sloppy = VirtualBorder(
        chain=Polyline(
            [Point2(0.85, 2.55), Point2(2.1, 2.65), Point2(1.95, 3.45), Point2(0.75, 3.35), Point2(0.85, 2.55)]
        ),
        seed=Point2(1.4, 3.0),
        kind=BorderKind.POLYGON,
    )
    attempt = integrate_border(prior, sloppy)
    score = jsi(after_carpet, attempt, prior=prior)
    print(f"JSI of the sloppy attempt vs ground truth: {score:.3f}")

    with tempfile.TemporaryDirectory() as tmp:
        pgm, yml = save_map(posterior, Path(tmp) / "posterior")
        print(f"saved {pgm.name} ({pgm.stat().st_size} bytes) + {yml.name}")
        reloaded = load_map(yml)
        print(f"round trip exact: {reloaded == posterior}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
