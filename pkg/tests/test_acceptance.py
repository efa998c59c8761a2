"""Acceptance suite.

Each test checks one acceptance criterion at its stated tolerance and
writes a PASS/FAIL line straight to the terminal (visible even when
pytest captures output).  The long missions are session fixtures shared
between criteria; the whole file takes roughly twenty minutes on one core.
"""
import math
import sys
import time
from dataclasses import asdict

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ACCEPTANCE_LINES
from hotspot_ipp.baseline import random_plan, run_bst_mission
from hotspot_ipp.config import bundled_config, load
from hotspot_ipp.field import PACIFIC_REGION, Sensor, reference_stats
from hotspot_ipp.gp import GPModel, Hyperparameters, optimize_hyperparameters
from hotspot_ipp.multirobot import (FleetConfig, compute_partition, run_fleet,
                                    weighted_centroid_from_weights)
from hotspot_ipp.planner import (MctsNode, PlannerConfig, Pose, _Search, beta,
                                 check_visit_counts, uct_select)
from hotspot_ipp.strategy import (MissionConfig, adaptive_base, mission_streams, run_mission,
                                  update_adaptive_hyper)
from oracles import brute_voronoi, dense_posterior, random_hyper, uct_score

SEEDS = range(10)
BUDGET = 350.0
TRUE_SIGMA, TRUE_L = 0.251, 5.04
WINDOWS = ((1, 100), (101, 200), (201, 350))
GRID_FIT_NOISE = 1e-5  # noise variance held fixed when fitting the noise-free grid

ALL_LOGS = []  # every mission run here, for the budget criterion


def report(tag, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {tag} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)  # repeated in the terminal summary, which capture cannot hide
    sys.__stdout__.write(f"\n{line}\n")
    sys.__stdout__.flush()


@pytest.fixture(scope="session")
def setting(four_field):
    stats = reference_stats(four_field, 130)
    noise_std = 0.05 * stats.range
    start = Pose.facing(-149.0, 16.0, four_field.region.center)
    true = Hyperparameters(TRUE_SIGMA, (TRUE_L, TRUE_L), noise_std ** 2)
    adapt = adaptive_base(four_field.region, noise_std ** 2)
    return {"noise_std": noise_std, "start": start, "TrueGP": true, "AdaptGP": adapt,
            "OptGP": adapt}


def _mission(field_, setting, strategy, seed, checkpoint_every=None):
    rng, sensor_seed = mission_streams(seed)
    cfg = MissionConfig(BUDGET, setting["start"], strategy, setting[strategy], seed=seed,
                        checkpoint_every=checkpoint_every)
    log = run_mission(field_, Sensor(setting["noise_std"], sensor_seed), cfg, rng)
    ALL_LOGS.append(log)
    return log


@pytest.fixture(scope="session")
def mcts_runs(four_field, setting):
    return {s: [_mission(four_field, setting, s, seed, 10.0) for seed in SEEDS]
            for s in ("TrueGP", "AdaptGP")}


@pytest.fixture(scope="session")
def bst_runs(four_field, setting):
    logs = []
    for seed in SEEDS:
        rng, sensor_seed = mission_streams(seed)
        plan = random_plan(four_field.region, 2.0 * TRUE_L, rng)
        log = run_bst_mission(four_field, Sensor(setting["noise_std"], sensor_seed), plan, BUDGET,
                              0.0, setting["TrueGP"], 1.0, seed)
        ALL_LOGS.append(log)
        logs.append(log)
    return logs


@pytest.fixture(scope="session")
def opt_run(four_field, setting):
    return _mission(four_field, setting, "OptGP", 0)


def _fleet_trials(four_field, name):
    exp = load(bundled_config(name))
    raw, fl = exp.raw, exp.raw["fleet"]
    noise_std = raw["noise_percent"] / 100.0 * reference_stats(four_field, 130).range
    hyper = exp.true_hyper(noise_std)
    starts = [Pose.facing(p[0], p[1], four_field.region.center) for p in fl["start_poses"]]
    out = {}
    for mode in fl["partition_modes"]:
        times = []
        for seed in raw["seeds"]:
            cfg = FleetConfig(fl["k"], fl["epochs"], fl["steps_per_epoch"], starts, mode,
                              "TrueGP", hyper, raw["budget"], raw["eta"], noise_std, exp.planner,
                              seed, raw["eval_resolution"], fl["detection_radius"],
                              fl["stop_when_all_detected"])
            res = run_fleet(four_field, cfg)
            ALL_LOGS.extend(res.logs)
            # a trial that never sees every hotspot is censored at the budget
            times.append(res.detection_times.get(len(four_field.maxima), raw["budget"]))
        out[mode] = times
    return fl["k"], out


@pytest.fixture(scope="session")
def fleet_runs(four_field):
    return [_fleet_trials(four_field, "fleet_4.json"), _fleet_trials(four_field, "fleet_3.json")]


def _rel_err(got, ref, scale):
    # relative error; the floor only guards values that are zero to machine precision
    return float(np.max(np.abs(got - ref) / np.maximum(np.abs(ref), 1e-12 * scale)))


def test_ac01_gp_oracle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(200):
        h = random_hyper(rng)
        n = int(rng.integers(1, 51))
        X = rng.uniform(0, 10, size=(n, 2))
        y = rng.normal(size=n)
        Q = rng.uniform(-1, 11, size=(15, 2))
        mean, std = GPModel(h, X, y).predict(Q)
        m_ref, v_ref = dense_posterior(X, y, Q, h.signal_std, *h.length_scales, h.noise_var)
        worst = max(worst, _rel_err(mean, m_ref, np.abs(y).max()),
                    _rel_err(std ** 2, v_ref, h.signal_std ** 2))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 10.0
    report("AC1", "GP posterior vs dense oracle", ok, f"max rel err {worst:.2e}, {elapsed:.1f}s")
    assert ok


def test_ac02_hyperparameter_recovery(four_field):
    grid = four_field.region.grid(30)
    init = adaptive_base(four_field.region, GRID_FIT_NOISE)
    t0 = time.perf_counter()
    fit = optimize_hyperparameters(GPModel(init, grid, four_field(grid)), init, fix_noise=True,
                                   diameter=four_field.region.diagonal(), seed=0)
    elapsed = time.perf_counter() - t0
    rel = [abs(fit.signal_std / TRUE_SIGMA - 1)] + [abs(l / TRUE_L - 1) for l in fit.length_scales]
    ok = max(rel) <= 0.2 and elapsed < 60.0
    report("AC2", "hyperparameter recovery on 30x30 grid", ok,
           f"sigma {fit.signal_std:.3f}, l ({fit.length_scales[0]:.2f}, {fit.length_scales[1]:.2f}),"
           f" worst rel err {max(rel):.1%}, {elapsed:.1f}s")
    assert ok


def _child(parent, q, n):
    c = MctsNode(Pose(0, 0), 1, parent, q=q, visits=n)
    parent.children[len(parent.children)] = c
    return c


def test_ac03_uct(four_field, true_hyper):
    root = MctsNode(Pose(0, 0), visits=6)
    _child(root, 10.0, 5)
    b = _child(root, 3.0, 1)
    hand = uct_select(root) is b and uct_score(3.0, 1, 6) == pytest.approx(3.0 + 2 * math.sqrt(math.log(6)))
    tie = MctsNode(Pose(0, 0), visits=4)
    first = _child(tie, 1.0, 2)
    _child(tie, 1.0, 2)
    hand = hand and uct_select(tie) is first
    gp = GPModel(true_hyper)
    r = np.random.default_rng(0)
    for p in r.uniform([-155, 9], [-130, 35], size=(20, 2)):
        gp.add(p, four_field(p))
    search = _Search(gp, Pose.facing(-149.0, 16.0, four_field.region.center), 60, len(gp) + 1,
                     PlannerConfig(), r, four_field.region, None)
    consistent = True
    for _ in range(1000):
        search.iterate()
        consistent = consistent and check_visit_counts(search.root)
    ok = hand and consistent and search.root.visits == 1000
    report("AC3", "UCT selection and visit counts", ok,
           f"hand cases {'ok' if hand else 'wrong'}, consistency over 1000 iterations "
           f"{'held' if consistent else 'broke'}")
    assert ok


@pytest.mark.slow
def test_ac04_strategy_ordering(mcts_runs, bst_runs):
    true = np.mean([log.metrics.terminal_regret for log in mcts_runs["TrueGP"]])
    bst = np.mean([log.metrics.terminal_regret for log in bst_runs])
    ok = true < bst and true < 15.0
    report("AC4", "TrueGP-MCTS beats BST", ok,
           f"terminal regret TrueGP {true:.2f}% vs BST {bst:.2f}%")
    assert ok


def _window_gaps(mcts_runs):
    gaps = []
    for lo, hi in WINDOWS:
        diffs = []
        for a, t in zip(mcts_runs["AdaptGP"], mcts_runs["TrueGP"]):
            ta = {round(c["budget"]): c["terminal_regret"] for c in a.checkpoints}
            tt = {round(c["budget"]): c["terminal_regret"] for c in t.checkpoints}
            diffs += [ta[b] - tt[b] for b in ta if lo <= b <= hi and b in tt]
        gaps.append(float(np.mean(diffs)))
    return gaps


@pytest.mark.slow
def test_ac05_adaptive_gap_shrinks(mcts_runs):
    g1, g2, g3 = _window_gaps(mcts_runs)
    ok = g2 < g1 and g3 < g1 and g3 < 5.0
    report("AC5", "AdaptGP gap to TrueGP shrinks", ok,
           f"mean gaps {g1:.2f} / {g2:.2f} / {g3:.2f} points")
    assert ok


@pytest.mark.slow
def test_ac06_gp_time_scaling(mcts_runs, opt_run):
    opt = np.array(opt_run.gp_time_series)
    half, full = opt[len(opt) // 2 - 1], opt[-1]
    superlinear = full / half > 2.0
    adapt = np.mean([log.gp_time_series[-1] for log in mcts_runs["AdaptGP"]])
    true = np.mean([log.gp_time_series[-1] for log in mcts_runs["TrueGP"]])
    ok = superlinear and full >= 3 * adapt and adapt <= 1.5 * true
    report("AC6", "GP time scaling", ok,
           f"OptGP {full:.1f}s (x{full / half:.1f} over the second half), AdaptGP {adapt:.2f}s, "
           f"TrueGP {true:.2f}s")
    assert ok


def test_ac07_voronoi_oracle(four_field):
    grid = four_field.region.grid(130)
    r = np.random.default_rng(77)
    mismatches = 0
    for _ in range(50):
        gens = r.uniform([-155.5, 9.0], [-129.5, 35.0], size=(int(r.integers(1, 9)), 2))
        mismatches += int(np.sum(compute_partition(gens, grid).assignment != brute_voronoi(grid, gens)))
    ok = mismatches == 0
    report("AC7", "Voronoi partition vs brute force", ok, f"{mismatches} mismatched points over 50 sets")
    assert ok


@pytest.mark.slow
def test_ac08_partition_speeds_detection(fleet_runs):
    ok = True
    parts = []
    for k, times in fleet_runs:
        none, vor = np.mean(times["none"]), np.mean(times["voronoi"])
        ok = ok and vor < none
        parts.append(f"k={k}: voronoi {vor:.1f} vs none {none:.1f}")
    report("AC8", "Voronoi partition detects all hotspots sooner", ok, "; ".join(parts))
    assert ok


@pytest.mark.slow
def test_ac09_budget_invariant(mcts_runs, bst_runs, opt_run, fleet_runs):
    violations = [log for log in ALL_LOGS
                  if log.travel_length + len(log.steps) * log.eta > log.budget + 1e-9]
    ok = not violations and len(ALL_LOGS) > 0
    report("AC9", "budget invariant", ok, f"{len(violations)} violations in {len(ALL_LOGS)} missions")
    assert ok


def test_ac10_schedule_properties():
    cfg = PlannerConfig()
    base = adaptive_base(PACIFIC_REGION, 0.0025)
    failures = []

    @settings(max_examples=1000, deadline=None)
    @given(t=st.integers(1, 10 ** 6))
    def beta_increasing(t):
        assert beta(t + 1, cfg) > beta(t, cfg)

    @settings(max_examples=1000, deadline=None)
    @given(t=st.integers(2, 10 ** 6))
    def adaptive_monotone(t):
        a, b = update_adaptive_hyper(base, t), update_adaptive_hyper(base, t + 1)
        assert b.signal_std >= a.signal_std
        assert all(y <= x for x, y in zip(a.length_scales, b.length_scales))

    @settings(max_examples=1000, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), c=st.floats(1e-3, 1e3))
    def centroid_scale_invariant(seed, c):
        r = np.random.default_rng(seed)
        pts = r.uniform(-5, 5, size=(10, 2))
        w = r.uniform(0.01, 3.0, size=10)
        np.testing.assert_allclose(weighted_centroid_from_weights(pts, c * w),
                                   weighted_centroid_from_weights(pts, w), rtol=1e-9, atol=1e-12)

    for prop in (beta_increasing, adaptive_monotone, centroid_scale_invariant):
        try:
            prop()
        except Exception as exc:  # noqa: BLE001 - reported, then re-raised below
            failures.append(f"{prop.__name__}: {exc}")
    ok = not failures
    report("AC10", "schedule properties (1000 cases each)", ok,
           "all held" if ok else "; ".join(failures))
    assert ok


def _steps(log):
    return [{k: v for k, v in asdict(s).items() if k != "gp_time"} for s in log.steps]


def test_ac11_single_robot_fleet(four_field, setting):
    mismatched = []
    for strategy in ("TrueGP", "AdaptGP", "OptGP"):
        for mode in ("none", "voronoi"):
            rng, sensor_seed = mission_streams(3)
            single = run_mission(four_field, Sensor(setting["noise_std"], sensor_seed),
                                 MissionConfig(40.0, setting["start"], strategy, setting[strategy],
                                               seed=3), rng)
            fleet = run_fleet(four_field, FleetConfig(1, 4, 10, [setting["start"]], mode, strategy,
                                                      setting[strategy], 40.0,
                                                      noise_std=setting["noise_std"], seed=3))
            ALL_LOGS.extend([single, *fleet.logs])
            same = (_steps(single) == _steps(fleet.logs[0]) and single.report == fleet.report
                    and single.final_hyper == fleet.combined.hyper)
            if not same:
                mismatched.append(f"{strategy}/{mode}")
    ok = not mismatched
    report("AC11", "k=1 fleet equals single mission", ok,
           "6/6 identical" if ok else f"differs for {', '.join(mismatched)}")
    assert ok
