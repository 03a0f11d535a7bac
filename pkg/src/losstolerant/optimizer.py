"""Minimum average power over outage policies, for any N.

:func:`sa_optimize` runs simulated annealing with the fast-annealing
schedule ``T_b = T0 / (c_sa * b + 1)``.  Candidates that break a constraint
are discarded before their power is compared.  :func:`grid_search_oracle`
enumerates every non-increasing outage vector on a grid and serves as a
brute-force reference for small N.
"""
from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .chain import ChainAnalysis, OutagePolicy, analyze
from .channel import ChannelModel, power_from_outage
from .closedform import LossConstraints
from .errors import InfeasibleError, ParameterError

__all__ = [
    "SaConfig",
    "OptResult",
    "FeasibilityVerdict",
    "TracePoint",
    "check_feasibility",
    "cooling_temperature",
    "propose_candidate",
    "accept_candidate",
    "sa_optimize",
    "grid_search_oracle",
    "locate_eps_out_star",
]

EDGE = 1e-6
GAMMA_TOL = 1e-12
EPS_OUT_TOL = 1e-12
PEAK_RTOL = 1e-12
ACTIVE_RTOL = 1e-2
MAX_ORACLE_VECTORS = 5e8
MIN_STEP = 1e-9


@dataclass(frozen=True)
class SaConfig:
    """Annealing hyperparameters.

    ``t0=None`` sets the starting temperature to 10% of the initial policy's
    average power.  ``proposal_step`` caps the per-coordinate move.  With
    ``adapt_step`` the move amplitude is retuned after every temperature so
    that between 40% and 60% of proposals are accepted; the optimum sits on
    the loss-rate boundary, and fixed-size moves mostly land outside it.
    """

    t0: float | None = None
    c_sa: float = 1.0
    steps_per_temperature: int = 100
    temperature_iterations: int = 200
    proposal_step: float = 0.05
    seed: int = 0
    stall_limit: int = 20
    adapt_step: bool = True

    def __post_init__(self):
        if self.t0 is not None and not self.t0 > 0:
            raise ParameterError(f"t0 must be positive, got {self.t0!r}")
        if not self.c_sa > 0:
            raise ParameterError(f"c_sa must be positive, got {self.c_sa!r}")
        for name in ("steps_per_temperature", "temperature_iterations", "stall_limit"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise ParameterError(f"{name} must be an integer >= 1, got {value!r}")
        if not 0 <= self.proposal_step < 1:
            raise ParameterError(f"proposal_step must lie in [0, 1), got {self.proposal_step!r}")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


class TracePoint(NamedTuple):
    iteration: int
    temperature: float
    best_p_avg: float


@dataclass(frozen=True)
class FeasibilityVerdict:
    gamma_ok: bool
    eps_out_ok: bool
    peak_ok: bool
    analysis: ChainAnalysis

    @property
    def feasible(self) -> bool:
        return self.gamma_ok and self.eps_out_ok and self.peak_ok

    @property
    def violated(self) -> tuple[str, ...]:
        flags = (("C1", self.gamma_ok), ("C2", self.eps_out_ok), ("C3", self.peak_ok))
        return tuple(name for name, ok in flags if not ok)

    def __bool__(self):
        return self.feasible


@dataclass(frozen=True)
class OptResult:
    best_policy: OutagePolicy
    best_analysis: ChainAnalysis
    feasible: bool
    eps_n_active: bool
    trace: list[TracePoint] = field(default_factory=list)

    @property
    def p_avg(self) -> float:
        return self.best_analysis.p_avg


def _verdict(analysis: ChainAnalysis, constraints: LossConstraints) -> FeasibilityVerdict:
    return FeasibilityVerdict(
        gamma_ok=analysis.gamma_r <= constraints.gamma + GAMMA_TOL,
        eps_out_ok=analysis.eps_n <= constraints.eps_out + EPS_OUT_TOL,
        # Powers are non-decreasing along the chain, so P_N is the peak.
        peak_ok=analysis.p_n <= constraints.p_peak * (1.0 + PEAK_RTOL),
        analysis=analysis,
    )


def check_feasibility(policy, constraints: LossConstraints, model: ChannelModel) -> FeasibilityVerdict:
    """Evaluate C1 (average loss), C2 (``eps_N <= eps_out``) and C3 (``P_N <= P_m``)."""
    analysis = policy if isinstance(policy, ChainAnalysis) else analyze(policy, model)
    if analysis.n_max != constraints.n_max:
        raise ParameterError(
            f"policy has N = {analysis.n_max} but constraints use N = {constraints.n_max}"
        )
    return _verdict(analysis, constraints)


def _is_active(eps_n: float, eps_out: float) -> bool:
    return eps_n >= eps_out * (1.0 - ACTIVE_RTOL)


def cooling_temperature(b: int, config: SaConfig) -> float:
    if b < 0:
        raise ParameterError(f"temperature index must be >= 0, got {b!r}")
    if config.t0 is None:
        raise ParameterError("config.t0 is unset; sa_optimize resolves it from the initial policy")
    return config.t0 / (config.c_sa * b + 1.0)


def propose_candidate(current: OutagePolicy, config: SaConfig, rng: np.random.Generator, step=None) -> OutagePolicy:
    """Nudge one random coordinate by up to ``step`` (default ``config.proposal_step``).

    The vector is then sorted back into non-increasing order and clipped to
    ``[EDGE, 1 - EDGE]``.
    """
    step = config.proposal_step if step is None else step
    return OutagePolicy(_perturb(current.eps, step, rng))


def _perturb(eps: np.ndarray, step: float, rng: np.random.Generator) -> np.ndarray:
    eps = eps.copy()
    i = rng.integers(eps.size)
    eps[i] += rng.uniform(-step, step)
    return np.clip(np.sort(eps)[::-1], EDGE, 1.0 - EDGE)


def _adapted_step(step: float, acceptance: float, cap: float) -> float:
    if acceptance > 0.6:
        step *= 1.0 + 2.0 * (acceptance - 0.6) / 0.4
    elif acceptance < 0.4:
        step /= 1.0 + 2.0 * (0.4 - acceptance) / 0.4
    return min(max(step, MIN_STEP), cap)


def accept_candidate(delta_pa: float, temperature: float, rng: np.random.Generator) -> bool:
    """Metropolis rule: always take improvements, else with ``exp(-delta/T)``."""
    if delta_pa <= 0:
        return True
    if temperature <= 0:
        return False
    return bool(rng.random() < math.exp(-delta_pa / temperature))


def _initial_policy(constraints, model, rng, attempts=50) -> tuple[OutagePolicy, FeasibilityVerdict]:
    n = constraints.n_max + 1
    level = 0.9 * min(constraints.gamma, constraints.eps_out)
    policy = OutagePolicy(np.full(n, level))
    verdict = check_feasibility(policy, constraints, model)
    first = verdict
    if verdict:
        return policy, verdict
    for _ in range(attempts):
        draw = np.clip(np.sort(rng.uniform(EDGE, 1.0 - EDGE, n))[::-1], EDGE, 1.0 - EDGE)
        # Let the last state stretch up to eps_out so C2 is not the usual blocker.
        draw[-1] = min(draw[-1], constraints.eps_out)
        policy = OutagePolicy(draw)
        verdict = check_feasibility(policy, constraints, model)
        if verdict:
            return policy, verdict
    raise InfeasibleError(
        f"no feasible starting policy for {constraints} (initial guess violated {', '.join(first.violated)})",
        reasons=first.violated,
        verdict=first,
    )


def sa_optimize(constraints: LossConstraints, model: ChannelModel, config: SaConfig | None = None) -> OptResult:
    """Simulated annealing over non-increasing outage vectors.

    Stops after ``config.temperature_iterations`` temperatures, or earlier
    once ``config.stall_limit`` temperatures in a row accepted nothing.
    Raises :class:`InfeasibleError` if no feasible start can be found.
    """
    config = config or SaConfig()
    rng = np.random.default_rng(config.seed)
    _, verdict = _initial_policy(constraints, model, rng)
    cur = verdict.analysis
    if config.t0 is None:
        config = dataclasses.replace(config, t0=0.1 * cur.p_avg)
    best = cur
    step = config.proposal_step
    trace = []
    stall = 0
    for b in range(config.temperature_iterations):
        temperature = cooling_temperature(b, config)
        accepted = 0
        for _ in range(config.steps_per_temperature):
            cand = analyze(_perturb(cur.eps, step, rng), model)
            if not _verdict(cand, constraints):
                continue
            if accept_candidate(cand.p_avg - cur.p_avg, temperature, rng):
                cur = cand
                accepted += 1
                if cur.p_avg < best.p_avg:
                    best = cur
        trace.append(TracePoint(b, temperature, best.p_avg))
        if config.adapt_step:
            step = _adapted_step(step, accepted / config.steps_per_temperature, config.proposal_step)
        stall = 0 if accepted else stall + 1
        if stall >= config.stall_limit:
            break
    return OptResult(
        best_policy=OutagePolicy(best.eps),
        best_analysis=best,
        feasible=True,
        eps_n_active=_is_active(best.eps_n, constraints.eps_out),
        trace=trace,
    )


def _grid_metrics(cols, power_cols):
    """Loss rate and average power for a batch; ``cols[i]`` holds ``eps_i``."""
    weight = np.ones_like(cols[0])
    weights = [weight]
    for e in cols[:-2]:
        weight = weight * e
        weights.append(weight)
    weights.append(weight * cols[-2] / (1.0 - cols[-1]))
    total = sum(weights)
    gamma_r = sum(w * e for w, e in zip(weights, cols)) / total
    p_avg = sum(w * p for w, p in zip(weights, power_cols)) / total
    return gamma_r, p_avg


def grid_search_oracle(constraints: LossConstraints, model: ChannelModel, resolution: float) -> OptResult:
    """Exhaustive minimum over non-increasing outage vectors on a grid.

    The grid is ``{k * resolution}`` strictly inside (0, 1).  Restricted to
    ``N <= 3`` and ``resolution >= 1e-3``, and to at most
    ``MAX_ORACLE_VECTORS`` candidate vectors.
    """
    n = constraints.n_max
    if n > 3:
        raise ParameterError(f"grid oracle supports N <= 3, got N = {n}")
    if not 1e-3 <= resolution < 0.5:
        raise ParameterError(f"resolution must lie in [1e-3, 0.5), got {resolution!r}")
    count = math.ceil(1.0 / resolution - 1e-9) - 1
    values = np.round(np.arange(1, count + 1) * resolution, 12)
    values = values[(values > 0) & (values < 1)]
    powers = np.asarray(power_from_outage(values, model), dtype=float)

    last_ok = (values <= constraints.eps_out + EPS_OUT_TOL) & (
        powers <= constraints.p_peak * (1.0 + PEAK_RTOL)
    )
    last_idx = np.flatnonzero(last_ok)
    if last_idx.size == 0:
        raise InfeasibleError("no grid value satisfies both eps_out and peak power", reasons=("C2", "C3"))

    # (second-to-last, last) index pairs with values non-increasing, sorted by the former.
    j, k = np.meshgrid(np.arange(values.size), last_idx, indexing="ij")
    keep = j >= k
    pair_j, pair_k = j[keep], k[keep]
    order = np.argsort(pair_j, kind="stable")
    pair_j, pair_k = pair_j[order], pair_k[order]

    n_prefixes = math.comb(values.size + n - 2, n - 1) if n > 1 else 1
    if n_prefixes * pair_j.size > MAX_ORACLE_VECTORS:
        raise ParameterError(
            f"grid oracle would enumerate ~{n_prefixes * pair_j.size:.3g} vectors; "
            f"use a coarser resolution"
        )

    best_pa = math.inf
    best_vec = None
    prefixes = itertools.combinations_with_replacement(range(values.size), n - 1) if n > 1 else [()]
    for prefix in prefixes:
        prefix = prefix[::-1]
        cut = pair_j.size if not prefix else np.searchsorted(pair_j, prefix[-1], side="right")
        if cut == 0:
            continue
        sel_j, sel_k = pair_j[:cut], pair_k[:cut]
        idx_cols = [np.full(cut, p) for p in prefix] + [sel_j, sel_k]
        cols = [values[c] for c in idx_cols]
        gamma_r, p_avg = _grid_metrics(cols, [powers[c] for c in idx_cols])
        p_avg = np.where(gamma_r <= constraints.gamma + GAMMA_TOL, p_avg, np.inf)
        m = int(np.argmin(p_avg))
        if p_avg[m] < best_pa:
            best_pa = float(p_avg[m])
            best_vec = [int(c[m]) for c in idx_cols]

    if best_vec is None:
        raise InfeasibleError("no grid policy satisfies the loss constraints", reasons=("C1",))
    policy = OutagePolicy(values[best_vec])
    verdict = check_feasibility(policy, constraints, model)
    return OptResult(
        best_policy=policy,
        best_analysis=verdict.analysis,
        feasible=verdict.feasible,
        eps_n_active=_is_active(verdict.analysis.eps_n, constraints.eps_out),
    )


def locate_eps_out_star(eps_out_values, p_avg_values, rtol=1e-4) -> float:
    """Smallest ``eps_out`` whose average power is within ``rtol`` of the sweep minimum.

    Past the optimum the constraint on ``eps_N`` goes slack and the power
    curve is flat, so a plain argmin would pick an arbitrary plateau point.
    NaN entries (infeasible points) are ignored.
    """
    x = np.asarray(eps_out_values, dtype=float)
    y = np.asarray(p_avg_values, dtype=float)
    ok = np.isfinite(y)
    if not ok.any():
        raise ParameterError("no feasible sweep points")
    x, y = x[ok], y[ok]
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    return float(x[np.flatnonzero(y <= y.min() * (1.0 + rtol))[0]])
