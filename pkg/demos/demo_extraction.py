"""Walk the three-stage border extraction on a synthetic multi-camera point
set: a noisy loop around a carpet-sized area, a false blob, and scattered
detector noise. Run with `python3 demos/demo_extraction.py`; pass --plot to
write extraction_stages.png next to this script.
"""

import argparse
import sys

import numpy as np

from borderforge import (
    ExtractionParams,
    Point2,
    dbscan,
    extract_border,
    generate_polygon,
    select_border_cluster,
    thin,
)


def noisy_loop(rng, sigma=0.02):
    pts = []
    corners = [(1.0, 1.0), (3.0, 1.0), (3.0, 2.25), (1.0, 2.25)]
    for i in range(4):
        a, b = corners[i], corners[(i + 1) % 4]
        steps = int(np.hypot(b[0] - a[0], b[1] - a[1]) / 0.016)
        for t in np.linspace(0, 1, steps, endpoint=False):
            x = a[0] + (b[0] - a[0]) * t + rng.normal(0, sigma)
            y = a[1] + (b[1] - a[1]) * t + rng.normal(0, sigma)
            pts.append(Point2(x, y))
    return pts


def main(argv=None):
    parser = argparse.ArgumentParser()
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args(argv)

    rng = np.random.default_rng(7)
    stroke = noisy_loop(rng)
    blob = [Point2(*rng.normal([5.5, 3.0], 0.04)) for _ in range(8)]
    scattered = [Point2(*rng.uniform((0, 0), (6, 4))) for _ in range(6)]
    cloud = stroke + blob + scattered
    rng.shuffle(cloud)
    print(f"input: {len(cloud)} points ({len(stroke)} on the border, "
          f"{len(blob)} false blob, {len(scattered)} scatter)")

    params = ExtractionParams()
    clusters, noise = dbscan(cloud, params.eps, params.min_pts)
    print(f"stage 1 clustering: {len(clusters)} clusters, {len(noise)} noise points")
    for c in clusters:
        print(f"  cluster size {len(c)}")

    cluster = select_border_cluster(clusters, params)
    print(f"selected border cluster: {len(cluster)} points")

    thinned = thin(cluster.points, params.thin_dist)
    print(f"stage 2 thinning: {len(cluster)} -> {len(thinned)} points")

    chain = generate_polygon(thinned, params.poly_dist)
    print(f"stage 3 polygon generation: chain of {len(chain)} vertices")

    seed_cloud = [Point2(*rng.normal([2.0, 1.6], 0.02)) for _ in range(25)]
    border = extract_border(cloud, seed_cloud, params)
    print(f"assembled border: kind={border.kind.value} seed=({border.seed.x:.3f}, "
          f"{border.seed.y:.3f}) occupancy={border.occupancy}")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, 4, figsize=(16, 4), sharex=True, sharey=True)
        xy = np.array([[p.x, p.y] for p in cloud])
        axes[0].scatter(xy[:, 0], xy[:, 1], s=4, c="k")
        axes[0].set_title("input point set")
        cxy = np.array([[p.x, p.y] for p in cluster.points])
        axes[1].scatter(xy[:, 0], xy[:, 1], s=4, c="0.8")
        axes[1].scatter(cxy[:, 0], cxy[:, 1], s=4, c="g")
        axes[1].set_title("border cluster")
        txy = np.array([[p.x, p.y] for p in thinned])
        axes[2].scatter(txy[:, 0], txy[:, 1], s=10, c="r")
        axes[2].set_title("thinned")
        pxy = np.array([[v.x, v.y] for v in chain.vertices])
        axes[3].plot(pxy[:, 0], pxy[:, 1], "b.-")
        axes[3].set_title("polygonal chain")
        out = __file__.replace("demo_extraction.py", "extraction_stages.png")
        fig.savefig(out, dpi=110, bbox_inches="tight")
        print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
