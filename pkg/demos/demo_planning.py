"""Show a border changing navigational behavior: plan to the carpet center on
the prior map, integrate the ground-truth border, and watch the same goal
become unreachable while detours around the area still work.
"""

import sys

from borderforge import Point2, builtin_scenarios, plan
from borderforge.planner import GridNav, PlanningError


def main():
    carpet = builtin_scenarios()[1]
    prior = carpet.prior()
    posterior = carpet.ground_truth_map()
    start = carpet.robot_start.position
    goal = carpet.ground_truth_border.seed  # carpet center

    before = plan(prior, start, goal)
    print(f"prior: path to the carpet center = {before.length:.2f} m "
          f"({len(before)} waypoints)")

    try:
        after = plan(posterior, start, goal)
        print(f"posterior: {'still reachable?!' if after else 'unreachable'}")
    except PlanningError as exc:
        print(f"posterior: goal rejected - {exc}")

    # a goal past the carpet is still reachable, just along a longer route
    nav_prior = GridNav(prior)
    nav_post = GridNav(posterior)
    beyond = Point2(2.8, 3.0)
    p0 = nav_prior.plan(start, beyond)
    p1 = nav_post.plan(start, beyond)
    print(f"goal behind the carpet: prior {p0.length:.2f} m, "
          f"posterior {p1.length:.2f} m (detour {p1.length - p0.length:+.2f} m)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
