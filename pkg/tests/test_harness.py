import json
import statistics

import numpy as np
import pytest
from scipy import ndimage

from borderforge.geometry import Point2, point_in_polygon, signed_area
from borderforge.gridmap import BorderKind, Occupancy, jsi, load_map
from borderforge.harness import (
    Scenario,
    batch_report,
    builtin_scenarios,
    get_scenario,
    load_scenario,
    run_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
from borderforge.interaction import Mode
from borderforge.perception import CameraKind, fov_polygon


@pytest.fixture(scope="module")
def scenarios():
    return builtin_scenarios()


class TestBuiltinWorld:
    def test_three_scenarios(self, scenarios):
        assert [s.name for s in scenarios] == [
            "room-exclusion",
            "carpet-exclusion",
            "spot-cleaning",
        ]

    def test_room_area_anchor(self, scenarios):
        area = abs(signed_area(scenarios[0].gt_area_polygon))
        assert area == pytest.approx(8.00, rel=0.05)

    def test_room_border_length_anchor(self, scenarios):
        from borderforge.geometry import polyline_length

        assert polyline_length(scenarios[0].ground_truth_border.chain) == pytest.approx(
            0.70, abs=0.01
        )

    def test_carpet_border_length_anchor(self, scenarios):
        from borderforge.geometry import polyline_length

        length = polyline_length(scenarios[1].ground_truth_border.chain)
        assert length == pytest.approx(6.50, rel=0.02)

    def test_spot_area_anchor(self, scenarios):
        area = abs(signed_area(scenarios[2].gt_area_polygon))
        assert area == pytest.approx(3.20, rel=0.05)

    def test_spot_curve_length_anchor(self, scenarios):
        from borderforge.geometry import polyline_length

        length = polyline_length(scenarios[2].ground_truth_border.chain)
        assert length == pytest.approx(3.60, abs=0.01)

    def test_three_stationary_cameras_at_25hz(self, scenarios):
        for sc in scenarios:
            assert len(sc.cameras) == 3
            assert all(c.kind is CameraKind.STATIONARY for c in sc.cameras)
            assert all(c.frame_rate == 25.0 for c in sc.cameras)

    def test_robot_start_uncovered(self, scenarios):
        for sc in scenarios:
            start = sc.robot_start.position
            assert not any(
                point_in_polygon(start, fov_polygon(c)) for c in sc.cameras
            )

    def test_border_strokes_covered_by_stationary_cameras(self, scenarios):
        for sc in scenarios:
            fovs = [fov_polygon(c) for c in sc.cameras]
            for stroke in sc.border_strokes():
                for i in range(41):
                    p = stroke.at(stroke.length * i / 40)
                    assert any(point_in_polygon(p, f) for f in fovs), (sc.name, p)

    def test_prior_free_space_is_one_component(self, scenarios):
        for sc in scenarios:
            free = sc.prior().cells == Occupancy.FREE
            _, n = ndimage.label(free, structure=ndimage.generate_binary_structure(2, 1))
            assert n == 1

    def test_ground_truth_seeds_in_free_space(self, scenarios):
        from borderforge.gridmap import world_to_cell

        for sc in scenarios:
            col, row = world_to_cell(sc.prior(), sc.ground_truth_border.seed)
            assert sc.prior().cells[row, col] == Occupancy.FREE

    def test_ground_truth_kinds(self, scenarios):
        assert scenarios[0].ground_truth_border.kind is BorderKind.SEPARATING_CURVE
        assert scenarios[1].ground_truth_border.kind is BorderKind.POLYGON
        assert scenarios[2].ground_truth_border.kind is BorderKind.SEPARATING_CURVE

    def test_get_scenario_builtin_refs(self):
        assert get_scenario("builtin:2").name == "carpet-exclusion"
        with pytest.raises(ValueError):
            get_scenario("builtin:7")


class TestScenarioFiles:
    def test_yaml_round_trip(self, scenarios, tmp_path):
        for sc in scenarios:
            path = tmp_path / f"{sc.name}.yaml"
            save_scenario(sc, path)
            loaded = load_scenario(path)
            assert scenario_to_dict(loaded) == scenario_to_dict(sc)

    def test_loaded_scenario_replays_identically(self, scenarios, tmp_path):
        sc = scenarios[0]
        path = tmp_path / "s.yaml"
        save_scenario(sc, path)
        loaded = load_scenario(path)
        a = run_scenario(sc, Mode.NRS, rng_seed=5)
        b = run_scenario(loaded, Mode.NRS, rng_seed=5)
        assert a.to_dict() == b.to_dict()


class TestRunScenario:
    def test_replay_determinism(self, scenarios):
        sc = scenarios[2]
        a = run_scenario(sc, Mode.NRS, rng_seed=9)
        b = run_scenario(sc, Mode.NRS, rng_seed=9)
        assert a.to_dict() == b.to_dict()

    def test_noise_free_nrs_accuracy(self, scenarios):
        for sc in scenarios:
            r = run_scenario(sc, Mode.NRS, rng_seed=0, noise_scale=0.0)
            assert r.success, r.reason
            assert r.jsi >= 0.95

    def test_robot_only_guide_meets_kinematic_bound(self, scenarios):
        r = run_scenario(scenarios[1], Mode.ROBOT_ONLY, rng_seed=0)
        assert r.success
        assert r.timing["guide"] >= 2.50 / 0.2

    def test_nrs_faster_than_robot_only(self, scenarios):
        for sc in scenarios:
            nrs = run_scenario(sc, Mode.NRS, rng_seed=3)
            ro = run_scenario(sc, Mode.ROBOT_ONLY, rng_seed=3)
            assert nrs.timing["total"] < ro.timing["total"]
            assert nrs.timing["guide"] == 0.0

    def test_report_jsi_matches_saved_maps(self, scenarios, tmp_path):
        sc = scenarios[1]
        r = run_scenario(sc, Mode.NRS, rng_seed=2, out_dir=tmp_path)
        gt = load_map(tmp_path / "ground_truth.yaml")
        ud = load_map(tmp_path / "posterior.yaml")
        prior = load_map(tmp_path / "prior.yaml")
        assert jsi(gt, ud, prior=prior) == pytest.approx(r.jsi, abs=1e-12)
        events = (tmp_path / "events.jsonl").read_text().splitlines()
        assert events
        seqs = [json.loads(line)["seq"] for line in events]
        assert seqs == list(range(len(seqs)))
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["scenario"] == sc.name

    def test_more_noise_does_not_improve_accuracy(self, scenarios):
        sc = scenarios[1]
        low = statistics.median(
            run_scenario(sc, Mode.NRS, rng_seed=s, noise_scale=0.0).jsi for s in range(4)
        )
        high = statistics.median(
            run_scenario(sc, Mode.NRS, rng_seed=s, noise_scale=3.0).jsi for s in range(4)
        )
        assert high <= low + 0.02


class TestBatch:
    def test_batch_counts_and_success(self, scenarios, tmp_path):
        rep = batch_report(scenarios, seeds=range(2), out_dir=tmp_path)
        assert len(rep.runs) == len(scenarios) * 2 * 2
        assert all(r.success for r in rep.runs)
        rows = rep.rows()
        assert len(rows) == len(scenarios) * 2
        assert all(row["success_rate"] == 1.0 for row in rows)
        csv_text = (tmp_path / "batch.csv").read_text()
        assert csv_text.startswith("scenario,")
        assert len(csv_text.splitlines()) == len(rows) + 1
        assert (tmp_path / "batch.json").exists()

    def test_speedup_column(self, scenarios):
        rep = batch_report([scenarios[0]], seeds=range(1))
        speedups = [row["speedup"] for row in rep.rows() if row["mode"] == "nrs"]
        assert len(speedups) == 1 and speedups[0] > 1.0
        assert "speedup" in rep.table() or "x" in rep.table()
