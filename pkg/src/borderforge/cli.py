"""Command-line interface: scenario replay, batch metrics, the pure
extraction pipeline on recorded points, and the session service."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import yaml

from .extraction import ExtractionError, ExtractionParams, extract_border_with_report
from .geometry import Point2
from .gridmap import SeedPlacementError, integrate_border, load_map, save_map
from .harness import batch_report, builtin_scenarios, get_scenario, run_scenario
from .interaction import Mode


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = get_scenario(args.scenario)
    report = run_scenario(
        scenario,
        Mode(args.mode),
        rng_seed=args.seed,
        noise_scale=args.noise_scale,
        out_dir=args.out,
    )
    print(json.dumps(report.to_dict(), indent=2))
    return 0 if report.success else 1


def _cmd_batch(args: argparse.Namespace) -> int:
    scenarios = (
        [get_scenario(ref) for ref in args.scenarios]
        if args.scenarios
        else builtin_scenarios()
    )
    report = batch_report(
        scenarios=scenarios,
        seeds=range(args.seeds),
        noise_scale=args.noise_scale,
        out_dir=args.out,
    )
    print(report.table())
    failures = [r for r in report.runs if not r.success]
    if failures:
        print(f"{len(failures)} run(s) failed", file=sys.stderr)
        return 1
    return 0


def _read_points_csv(path: Path) -> list[Point2]:
    points = []
    with path.open(newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() in ("x", "# x", "#x"):
                continue
            points.append(Point2(float(row[0]), float(row[1])))
    return points


def _load_params(path: str | None) -> ExtractionParams:
    if not path:
        return ExtractionParams()
    text = Path(path).read_text()
    data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    return ExtractionParams.from_dict(data)


def _cmd_extract(args: argparse.Namespace) -> int:
    points = _read_points_csv(Path(args.points))
    params = _load_params(args.params)
    seed_xy = [float(v) for v in args.seed.split(",")]
    if len(seed_xy) != 2:
        print("--seed must be 'x,y'", file=sys.stderr)
        return 2
    seed_points = [
        Point2(seed_xy[0] + dx, seed_xy[1] + dy)
        for dx, dy in ((0.0, 0.0), (0.005, 0.0), (0.0, 0.005), (-0.005, -0.005))
    ]
    prior = load_map(args.map)
    try:
        report = extract_border_with_report(points, seed_points, params)
        posterior = integrate_border(prior, report.border)
    except (ExtractionError, SeedPlacementError, ValueError) as exc:
        print(f"extraction failed: {exc}", file=sys.stderr)
        return 1
    pgm, yml = save_map(posterior, args.out)
    print(
        json.dumps(
            {
                "kind": report.border.kind.value,
                "chain_vertices": report.chain_size,
                "cluster_size": report.cluster_size,
                "noise_points": report.noise_points,
                "dropped_points": report.dropped_points,
                "map": str(pgm),
                "metadata": str(yml),
            },
            indent=2,
        )
    )
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="borderforge",
        description="virtual-border workbench: scripted replay, extraction, metrics and live service",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="replay one scripted scenario run")
    run.add_argument("--scenario", required=True, help="builtin:1..3 or a scenario YAML file")
    run.add_argument("--mode", choices=[m.value for m in Mode], default="nrs")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--noise-scale", type=float, default=1.0)
    run.add_argument("--out", help="directory for report, maps and event log")
    run.set_defaults(func=_cmd_run)

    batch = sub.add_parser("batch", help="run scenarios x modes x seeds and aggregate")
    batch.add_argument("--seeds", type=int, default=10, help="number of seeds per combination")
    batch.add_argument("--scenarios", nargs="*", help="scenario refs (default: all builtins)")
    batch.add_argument("--noise-scale", type=float, default=1.0)
    batch.add_argument("--out", help="directory for batch.csv and batch.json")
    batch.set_defaults(func=_cmd_batch)

    extract = sub.add_parser(
        "extract", help="pure pipeline: recorded points -> border -> posterior map"
    )
    extract.add_argument("--points", required=True, help="CSV of x,y in meters, one per line")
    extract.add_argument("--params", help="extraction parameters (YAML or JSON)")
    extract.add_argument("--map", required=True, help="prior map (.pgm with sibling .yaml)")
    extract.add_argument("--seed", required=True, help="seed point 'x,y' in meters")
    extract.add_argument("--out", required=True, help="output posterior map path")
    extract.set_defaults(func=_cmd_extract)

    serve = sub.add_parser("serve", help="start the session service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8340)
    serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
