"""Acceptance gate.  Each test carries a ``criterion`` mark; the terminal
summary prints one PASS/FAIL line per criterion number."""
import math

import numpy as np
import pytest

from losstolerant import (
    ChannelModel,
    LossConstraints,
    SaConfig,
    analyze,
    build_transition_matrix,
    grid_search_oracle,
    locate_eps_out_star,
    outage_from_power,
    power_from_outage,
    sa_optimize,
    simulate_policy,
    solve_n1,
    steady_state,
    sweep_n1,
)
from losstolerant.experiment import load_config, run_experiment

from conftest import random_policies
from oracles import stationary_by_linear_solve

RAYLEIGH = ChannelModel.rayleigh(rate=1.0, noise=1.0)
SA = SaConfig()

# Criterion 1 / 7 anchors.
ANCHOR_EPS0 = 0.225
ANCHOR_PI = (0.8, 0.2)
ANCHOR_POWERS = (3.92324, 9.49122)
ANCHOR_P_AVG = 4.93684

GRID_99 = np.round(np.arange(1, 100) / 100, 10)
GRID_05 = np.round(np.arange(1, 20) * 0.05, 10)


def cf_minimizer(gamma):
    rows = sweep_n1(LossConstraints(gamma, 1, 0.5), GRID_99, RAYLEIGH)
    p = np.array([r.p_avg for r in rows])
    return float(GRID_99[np.nanargmin(p)])


_sa_cache: dict = {}


def sa_point(gamma, n_max, eps_out, seed=0):
    key = (gamma, n_max, eps_out, seed)
    if key not in _sa_cache:
        c = LossConstraints(gamma, n_max, eps_out)
        _sa_cache[key] = sa_optimize(c, RAYLEIGH, SaConfig(seed=seed))
    return _sa_cache[key]


def cf_p_avg(gamma, eps_out):
    return solve_n1(LossConstraints(gamma, 1, eps_out), RAYLEIGH).p_avg


# --------------------------------------------------------------------------


@pytest.mark.criterion(1, "N=1 closed-form anchor")
def test_criterion_1_closed_form_anchor():
    res = solve_n1(LossConstraints(0.2, 1, 0.1), RAYLEIGH)
    problems = []
    if abs(res.eps[0] - ANCHOR_EPS0) > 1e-12:
        problems.append(f"eps_0 = {res.eps[0]!r}")
    if np.max(np.abs(res.pi - ANCHOR_PI)) > 1e-12:
        problems.append(f"pi = {res.pi}")
    if abs(res.gamma_r - 0.2) > 1e-12:
        problems.append(f"gamma_r = {res.gamma_r!r}")
    for i, (got, want) in enumerate(zip(res.powers, ANCHOR_POWERS)):
        if abs(got - want) > 1e-4:
            problems.append(f"P_{i} = {got:.7f}, anchor {want}")
    if abs(res.p_avg - ANCHOR_P_AVG) > 1e-4:
        problems.append(f"P_a = {res.p_avg:.7f}, anchor {ANCHOR_P_AVG}")
    print(f"computed P = {res.powers}, P_a = {res.p_avg!r}")
    assert not problems, "; ".join(problems)


@pytest.mark.criterion(2, "SA matches closed form left of the minimizer")
@pytest.mark.parametrize("gamma", [0.1, 0.2])
def test_criterion_2_sa_matches_closed_form(gamma):
    star = cf_minimizer(gamma)
    left = [float(e) for e in GRID_05 if e < star]
    assert left
    worst = 0.0
    for e in left:
        cf = cf_p_avg(gamma, e)
        sa = sa_point(gamma, 1, e).p_avg
        worst = max(worst, abs(sa - cf) / cf)
    print(f"gamma={gamma}: {len(left)} points, worst relative gap {worst:.2e}")
    assert worst <= 0.02


@pytest.mark.criterion(3, "SA dominates the boundary solution right of the minimizer")
@pytest.mark.parametrize("gamma", [0.1, 0.2])
def test_criterion_3_sa_dominates(gamma):
    star = cf_minimizer(gamma)
    right = [float(e) for e in GRID_05 if e > star]
    assert right
    for e in right:
        res = sa_point(gamma, 1, e)
        assert res.feasible
        assert res.p_avg <= cf_p_avg(gamma, e), e
        assert res.best_analysis.eps_n < e, e
        assert res.best_analysis.gamma_r >= gamma - 0.01, e


ORACLE_POINTS = [(0.1, 0.05), (0.1, 0.3), (0.2, 0.05), (0.2, 0.1), (0.2, 0.5)]


@pytest.mark.criterion(4, "SA within 1% of the grid oracle")
@pytest.mark.parametrize("n_max,resolution", [(1, 1e-3), (2, 5e-3)])
@pytest.mark.parametrize("gamma,eps_out", ORACLE_POINTS)
def test_criterion_4_oracle_equivalence(n_max, resolution, gamma, eps_out):
    c = LossConstraints(gamma, n_max, eps_out)
    oracle = grid_search_oracle(c, RAYLEIGH, resolution)
    sa = sa_point(gamma, n_max, eps_out)
    assert abs(sa.p_avg - oracle.p_avg) / oracle.p_avg <= 0.01


def _sa_curve(n_max):
    return np.array([sa_point(0.2, n_max, float(e)).p_avg for e in GRID_05])


@pytest.mark.criterion(5, "eps_out* and min P_a stable across N")
def test_criterion_5_eps_star_stable():
    stars, minima = [], []
    for n_max in (1, 2, 3):
        p = _sa_curve(n_max)
        stars.append(locate_eps_out_star(GRID_05, p, rtol=2e-4))
        minima.append(float(p.min()))
    print(f"eps_out* = {stars}, min P_a = {minima}")
    assert max(stars) / min(stars) - 1 <= 0.10
    assert max(minima) / min(minima) - 1 <= 0.10


@pytest.mark.criterion(6, "P_a non-increasing in N at eps_out = 0.05")
def test_criterion_6_burst_tolerance():
    p = [sa_point(0.2, n, 0.05).p_avg for n in (1, 2, 3)]
    print(f"P_a(N=1,2,3) = {p}")
    assert p[0] >= p[1] >= p[2]


@pytest.mark.criterion(7, "Monte Carlo agrees with the chain")
def test_criterion_7_monte_carlo():
    res = solve_n1(LossConstraints(0.2, 1, 0.1), RAYLEIGH)
    stats = simulate_policy(res, RAYLEIGH, 1_000_000, seed=7)
    problems = []
    if abs(stats.empirical_gamma_r - 0.2) > 0.005:
        problems.append(f"gamma_r {stats.empirical_gamma_r}")
    if np.max(np.abs(stats.state_occupancy - ANCHOR_PI)) > 0.005:
        problems.append(f"occupancy {stats.state_occupancy}")
    if abs(stats.empirical_eps_cond - res.eps_n) > 0.01:
        problems.append(f"eps_cond {stats.empirical_eps_cond}")
    gap = abs(stats.empirical_p_avg - ANCHOR_P_AVG) / ANCHOR_P_AVG
    if gap > 0.01:
        problems.append(
            f"empirical P_a {stats.empirical_p_avg:.5f} is {gap:.2%} from anchor {ANCHOR_P_AVG} "
            f"(chain value {res.p_avg:.5f})"
        )
    assert not problems, "; ".join(problems)


@pytest.mark.criterion(8, "structural invariants over 1000 random policies")
def test_criterion_8_structural_suite():
    gen = np.random.default_rng(99)
    for eps in random_policies(1000, n_range=(1, 6), seed=8):
        a = build_transition_matrix(eps)
        assert np.max(np.abs(a.sum(axis=1) - 1)) <= 1e-12
        pi = steady_state(a)
        assert abs(pi.sum() - 1) <= 1e-12
        assert np.max(np.abs(pi - stationary_by_linear_solve(a))) <= 1e-10
        d = int(gen.integers(1, 5))
        for model in (RAYLEIGH, ChannelModel.diversity(d)):
            back = outage_from_power(power_from_outage(eps, model), model)
            assert np.max(np.abs(back - eps)) <= 1e-9
        p_r = power_from_outage(eps, RAYLEIGH)
        p_d1 = power_from_outage(eps, ChannelModel.diversity(1))
        assert np.max(np.abs(p_d1 - p_r) / p_r) <= 1e-10
        assert np.max(np.abs(outage_from_power(p_r, ChannelModel.diversity(1)) - outage_from_power(p_r, RAYLEIGH))) <= 1e-10


@pytest.mark.criterion(9, "closed-form P_a(eps_out) is unimodal")
def test_criterion_9_unimodal():
    for gamma in (0.1, 0.2):
        rows = sweep_n1(LossConstraints(gamma, 1, 0.5), GRID_99, RAYLEIGH)
        p = np.array([r.p_avg for r in rows])
        assert np.all(np.isfinite(p))
        inner = (p[1:-1] < p[:-2]) & (p[1:-1] < p[2:])
        ends = int(p[0] < p[1]) + int(p[-1] < p[-2])
        assert int(inner.sum()) + ends == 1


@pytest.mark.criterion(10, "byte-identical CSV on rerun")
def test_criterion_10_reproducible(tmp_path):
    (tmp_path / "exp.toml").write_text(
        'seed = 11\nmethods = ["closed_form", "sa", "simulate"]\nsim_slots = 20000\n'
        "[constraints]\ngamma = 0.2\nn_max = 1\neps_out = 0.1\n"
        '[sweep]\nvariable = "eps_out"\nvalues = [0.05, 0.1, 0.3]\n'
        "[sa]\ntemperature_iterations = 50\n"
    )
    cfg = load_config(tmp_path / "exp.toml")
    run_experiment(cfg, out=tmp_path / "a.csv")
    run_experiment(cfg, out=tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
