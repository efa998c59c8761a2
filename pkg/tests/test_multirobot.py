import json
from dataclasses import asdict

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hotspot_ipp.field import Region, Sensor
from hotspot_ipp.gp import GPModel
from hotspot_ipp.multirobot import (FleetConfig, compute_partition, run_fleet, weighted_centroid,
                                    weighted_centroid_from_weights)
from hotspot_ipp.planner import PlannerConfig, Pose
from hotspot_ipp.strategy import MissionConfig, adaptive_base, mission_streams, run_mission
from oracles import brute_voronoi

LINE_STARTS = [(-153.0, 11.0), (-150.0, 11.0), (-147.0, 11.0), (-144.0, 11.0)]


class TestPartition:
    def test_single_generator(self):
        grid = Region(0, 10, 0, 10).grid(11)
        assert np.all(compute_partition([[3.0, 4.0]], grid).assignment == 0)

    def test_bisector(self):
        grid = Region(0, 10, 0, 10).grid(11)
        a = compute_partition([[0.0, 0.0], [10.0, 0.0]], grid).assignment
        x = grid[:, 0]
        assert np.all(a[x < 5] == 0) and np.all(a[x > 5] == 1)
        assert np.all(a[x == 5] == 0)

    def test_against_brute_force(self, rng):
        grid = Region(0, 10, 0, 10).grid(40)
        for _ in range(10):
            gens = rng.uniform(0, 10, size=(int(rng.integers(1, 7)), 2))
            np.testing.assert_array_equal(compute_partition(gens, grid).assignment,
                                          brute_voronoi(grid, gens))

    def test_duplicate_generators_get_ties_only(self, caplog):
        grid = Region(0, 1, 0, 1).grid(5)
        part = compute_partition([[0.5, 0.5], [0.5, 0.5]], grid)
        assert part.counts().tolist() == [25, 0]
        assert "duplicate" in caplog.text

    def test_empty(self):
        with pytest.raises(ValueError):
            compute_partition(np.empty((0, 2)), Region(0, 1, 0, 1).grid(3))


class TestCentroid:
    def test_uniform(self, rng):
        pts = rng.uniform(size=(30, 2))
        np.testing.assert_allclose(weighted_centroid_from_weights(pts, np.full(30, 2.5)), pts.mean(axis=0))

    def test_three_quarters(self):
        c = weighted_centroid_from_weights([[0.0, 0.0], [4.0, 8.0]], [1.0, 3.0])
        assert c == pytest.approx((3.0, 6.0))

    @settings(max_examples=1000, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), c=st.floats(1e-3, 1e3))
    def test_scale_invariant(self, seed, c):
        r = np.random.default_rng(seed)
        pts = r.uniform(-5, 5, size=(8, 2))
        w = r.uniform(0.01, 2.0, size=8)
        np.testing.assert_allclose(weighted_centroid_from_weights(pts, c * w),
                                   weighted_centroid_from_weights(pts, w), rtol=1e-9, atol=1e-12)

    def test_floor_keeps_denominator_positive(self):
        c = weighted_centroid_from_weights([[0.0, 0.0], [2.0, 0.0]], [-1.0, -1.0])
        assert c == pytest.approx((1.0, 0.0))

    def test_gp_weights_inside_cell(self, true_hyper, four_field):
        gp = GPModel(true_hyper)
        gp.add((-140.0, 20.0), 0.8)
        cell = four_field.region.grid(20)[:50]
        cx, cy = weighted_centroid(cell, gp, 2, PlannerConfig())
        assert cell[:, 0].min() <= cx <= cell[:, 0].max()
        assert cell[:, 1].min() <= cy <= cell[:, 1].max()


def _strip_gp_time(log):
    return [{k: v for k, v in asdict(s).items() if k != "gp_time"} for s in log.steps]


@pytest.mark.parametrize("strategy", ["TrueGP", "AdaptGP", "OptGP"])
@pytest.mark.parametrize("mode", ["none", "voronoi"])
def test_single_robot_matches_mission(four_field, true_hyper, strategy, mode):
    start = Pose.facing(-149.0, 16.0, four_field.region.center)
    hyper = true_hyper if strategy == "TrueGP" else adaptive_base(four_field.region, 0.0025)
    fleet = run_fleet(four_field, FleetConfig(1, 4, 5, [start], mode, strategy, hyper, 20.0,
                                              noise_std=0.05, seed=7, eval_resolution=30))
    rng, sensor_seed = mission_streams(7)
    single = run_mission(four_field, Sensor(0.05, sensor_seed),
                         MissionConfig(20.0, start, strategy, hyper, seed=7, eval_resolution=30), rng)
    assert _strip_gp_time(fleet.logs[0]) == _strip_gp_time(single)
    assert fleet.report == single.report
    assert fleet.combined.hyper == single.final_hyper


@pytest.fixture(scope="module")
def voronoi(four_field, true_hyper):
    starts = [Pose.facing(x, y, four_field.region.center) for x, y in LINE_STARTS]
    return run_fleet(four_field, FleetConfig(4, 3, 4, starts, "voronoi", "TrueGP", true_hyper,
                                             noise_std=0.05, seed=1, eval_resolution=30))


class TestFleet:

    def test_pooled_sample_count(self, voronoi):
        assert len(voronoi.combined) == sum(len(log.steps) for log in voronoi.logs) == 48
        assert len(voronoi.sample_owner) == 48

    def test_steps_respect_cells(self, voronoi):
        for log in voronoi.logs:
            for epoch in range(3):
                steps = log.steps[4 * epoch:4 * epoch + 4]
                gens = np.array(voronoi.epochs[epoch]["generators"])
                for s in steps:
                    if s.in_cell:
                        own = brute_voronoi(np.array([[s.x, s.y]]), gens)[0]
                        assert own == s.robot

    def test_generators_are_epoch_start_positions(self, voronoi):
        for log in voronoi.logs:
            gen = voronoi.epochs[1]["generators"][log.steps[0].robot]
            assert gen == pytest.approx([log.steps[3].x, log.steps[3].y])

    def test_replicas_are_isolated(self, four_field, true_hyper):
        # one epoch: each robot only sees its own samples, so a robot's plan
        # cannot depend on how many robots share the epoch
        starts = [Pose.facing(x, y, four_field.region.center) for x, y in LINE_STARTS[:2]]
        two = run_fleet(four_field, FleetConfig(2, 1, 6, starts, "none", "TrueGP", true_hyper,
                                                noise_std=0.05, seed=2, eval_resolution=30))
        one = run_fleet(four_field, FleetConfig(1, 1, 6, starts[:1], "none", "TrueGP", true_hyper,
                                                noise_std=0.05, seed=2, eval_resolution=30))
        assert _strip_gp_time(two.logs[0]) == _strip_gp_time(one.logs[0])

    def test_budget_and_detection(self, voronoi):
        for log in voronoi.logs:
            log.check_budget()
        times = [voronoi.detection_times[j] for j in sorted(voronoi.detection_times)]
        assert times == sorted(times)

    def test_write(self, voronoi, tmp_path):
        voronoi.write(tmp_path, "trial")
        assert sorted(p.name for p in tmp_path.iterdir()) == [
            "trial_fleet.json", "trial_robot0.csv", "trial_robot1.csv", "trial_robot2.csv",
            "trial_robot3.csv"]
        data = json.loads((tmp_path / "trial_fleet.json").read_text())
        assert data["combined_samples"] == 48

    def test_stop_when_all_detected(self, four_field, true_hyper):
        starts = [Pose(*m, 0.0) for m in four_field.maxima]
        res = run_fleet(four_field, FleetConfig(4, 5, 5, starts, "none", "TrueGP", true_hyper,
                                                seed=0, eval_resolution=30, stop_when_all_detected=True))
        assert res.detection_times[4] == 0.0
        assert len(res.combined) == 4  # one step each, then the epoch stops

    def test_invalid(self, true_hyper):
        with pytest.raises(ValueError):
            FleetConfig(2, 1, 1, [Pose(0, 0)], initial_hyper=true_hyper)
        with pytest.raises(ValueError):
            FleetConfig(1, 1, 1, [Pose(0, 0)], strategy="BST", initial_hyper=true_hyper)
        with pytest.raises(ValueError):
            FleetConfig(1, 1, 1, [Pose(0, 0)])
