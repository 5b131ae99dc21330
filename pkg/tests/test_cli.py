import csv
import json

import numpy as np
import pytest

from borderforge.cli import main
from borderforge.geometry import Point2, Pose2
from borderforge.gridmap import OccupancyGrid, load_map, save_map


class TestRun:
    def test_run_builtin_writes_outputs(self, tmp_path, capsys):
        rc = main(
            [
                "run",
                "--scenario",
                "builtin:1",
                "--mode",
                "nrs",
                "--seed",
                "4",
                "--out",
                str(tmp_path),
            ]
        )
        assert rc == 0
        report = json.loads(capsys.readouterr().out)
        assert report["success"] is True
        assert (tmp_path / "report.json").exists()
        assert (tmp_path / "events.jsonl").exists()
        assert (tmp_path / "posterior.pgm").exists()
        assert (tmp_path / "posterior.yaml").exists()

    def test_bad_scenario_ref_is_runtime_error(self, capsys):
        assert main(["run", "--scenario", "builtin:12"]) == 1

    def test_usage_error_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["run"])  # missing --scenario
        assert exc.value.code == 2

    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["probe"])
        assert exc.value.code == 2


class TestBatch:
    def test_small_batch(self, tmp_path, capsys):
        rc = main(
            [
                "batch",
                "--seeds",
                "1",
                "--scenarios",
                "builtin:3",
                "--out",
                str(tmp_path),
            ]
        )
        assert rc == 0
        out = capsys.readouterr().out
        assert "spot-cleanin" in out
        with (tmp_path / "batch.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        assert {r["mode"] for r in rows} == {"nrs", "robot-only"}


class TestExtract:
    def test_extract_pipeline(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        pts = []
        for t in np.linspace(0, 1, 300, endpoint=False):
            s = t * 4.0
            if s < 1.0:
                p = (1.0 + s, 1.0)
            elif s < 2.0:
                p = (2.0, 1.0 + (s - 1.0))
            elif s < 3.0:
                p = (2.0 - (s - 2.0), 2.0)
            else:
                p = (1.0, 2.0 - (s - 3.0))
            pts.append((p[0] + rng.normal(0, 0.01), p[1] + rng.normal(0, 0.01)))
        points_csv = tmp_path / "points.csv"
        points_csv.write_text("x,y\n" + "\n".join(f"{x},{y}" for x, y in pts))

        prior = OccupancyGrid.filled(120, 120, 0.025)
        save_map(prior, tmp_path / "prior")

        out = tmp_path / "posterior"
        rc = main(
            [
                "extract",
                "--points",
                str(points_csv),
                "--map",
                str(tmp_path / "prior.pgm"),
                "--seed",
                "1.5,1.5",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        info = json.loads(capsys.readouterr().out)
        assert info["kind"] == "polygon"
        posterior = load_map(tmp_path / "posterior.yaml")
        assert (posterior.cells == 1).sum() > (prior.cells == 1).sum()

    def test_extract_failure_exits_1(self, tmp_path, capsys):
        points_csv = tmp_path / "points.csv"
        points_csv.write_text("0.0,0.0\n5.0,5.0\n")
        prior = OccupancyGrid.filled(40, 40, 0.2)
        save_map(prior, tmp_path / "prior")
        rc = main(
            [
                "extract",
                "--points",
                str(points_csv),
                "--map",
                str(tmp_path / "prior.pgm"),
                "--seed",
                "1.0,1.0",
                "--out",
                str(tmp_path / "posterior"),
            ]
        )
        assert rc == 1
