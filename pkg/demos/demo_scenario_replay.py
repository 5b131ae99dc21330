"""Replay the three builtin evaluation scenarios with the scripted user in
both interaction modes and print the aggregate table: per-state times,
completeness and accuracy, and the NRS speedup over the robot-only baseline.
"""

import sys

from borderforge import builtin_scenarios, run_scenario
from borderforge.harness import batch_report
from borderforge.interaction import Mode


def main():
    scenarios = builtin_scenarios()
    print("single run, carpet exclusion, both modes (seed 0):")
    for mode in (Mode.NRS, Mode.ROBOT_ONLY):
        r = run_scenario(scenarios[1], mode, rng_seed=0)
        t = r.timing
        print(f"  {mode.value:10s} success={r.success} jsi={r.jsi:.3f} "
              f"guide={t['guide']:5.1f}s border={t['border']:5.1f}s "
              f"seed={t['seed']:4.1f}s total={t['total']:5.1f}s "
              f"points={r.points_collected}")

    print("\nbatch over 5 seeds:")
    report = batch_report(scenarios, seeds=range(5))
    print(report.table())
    return 0


if __name__ == "__main__":
    sys.exit(main())
