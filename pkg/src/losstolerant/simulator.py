"""Slot-level Monte Carlo of the ACK/NAK power-control loop.

Each slot draws an independent block-fading gain, transmits at the power of
the current loss-run state, and loses the packet when
``log2(1 + P * gain / N0) < R``.  Feedback is instantaneous and error free;
a lost packet is dropped for good.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .chain import ChainAnalysis, analyze, _as_eps
from .channel import ChannelModel, power_from_outage
from .errors import ParameterError

__all__ = [
    "SimStats",
    "MetricCheck",
    "ValidationReport",
    "sample_channel_gain",
    "simulate_policy",
    "validate_against_chain",
]

GainSampler = Callable[[np.random.Generator, int], np.ndarray]

_CHUNK = 1 << 16


def sample_channel_gain(model: ChannelModel, rng: np.random.Generator, size=None):
    """Fading power gain ``|h|^2`` with unit mean.

    Rayleigh gives an exponential; ``d`` diversity branches give the mean of
    ``d`` unit exponentials, a Gamma(d, 1/d) variable, whose lower tail is the
    regularized incomplete gamma used by :func:`outage_from_power`.
    """
    if model.branches is None:
        return rng.exponential(1.0, size)
    d = model.branches
    return rng.gamma(d, 1.0 / d, size)


@dataclass(frozen=True, eq=False)
class SimStats:
    """Raw counts from a simulation run; rates are derived on access.

    ``burst_histogram[k]`` counts successful packets preceded by exactly
    ``k`` consecutive losses, i.e. the distance between consecutive ACKs
    minus one.  A loss run still open when the run ends is not counted.
    """

    slots: int
    state_visits: np.ndarray
    state_losses: np.ndarray
    energy: float
    burst_histogram: np.ndarray

    @property
    def n_max(self) -> int:
        return self.state_visits.size - 1

    @property
    def state_occupancy(self) -> np.ndarray:
        return self.state_visits / self.slots

    @property
    def per_state_loss(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.state_visits > 0, self.state_losses / np.maximum(self.state_visits, 1), np.nan)

    @property
    def empirical_gamma_r(self) -> float:
        return float(self.state_losses.sum() / self.slots)

    @property
    def empirical_p_avg(self) -> float:
        return self.energy / self.slots

    @property
    def empirical_eps_cond(self) -> float:
        visits = self.state_visits[-1]
        return float(self.state_losses[-1] / visits) if visits else float("nan")

    def combine(self, other: "SimStats") -> "SimStats":
        """Pool two runs over disjoint seeds."""
        if other.n_max != self.n_max:
            raise ParameterError("cannot combine runs with different N")
        size = max(self.burst_histogram.size, other.burst_histogram.size)
        hist = np.zeros(size, dtype=np.int64)
        hist[: self.burst_histogram.size] += self.burst_histogram
        hist[: other.burst_histogram.size] += other.burst_histogram
        return SimStats(
            slots=self.slots + other.slots,
            state_visits=self.state_visits + other.state_visits,
            state_losses=self.state_losses + other.state_losses,
            energy=self.energy + other.energy,
            burst_histogram=hist,
        )

    def to_record(self) -> dict:
        """Flat ``str -> number`` mapping for tabular output."""
        rec = {
            "slots": self.slots,
            "empirical_gamma_r": self.empirical_gamma_r,
            "empirical_p_avg": self.empirical_p_avg,
            "empirical_eps_cond": self.empirical_eps_cond,
        }
        for i, occ in enumerate(self.state_occupancy):
            rec[f"occupancy_{i}"] = float(occ)
        for k, count in enumerate(self.burst_histogram):
            rec[f"burst_{k}"] = int(count)
        return rec

    def __eq__(self, other):
        if not isinstance(other, SimStats):
            return NotImplemented
        return (
            self.slots == other.slots
            and self.energy == other.energy
            and np.array_equal(self.state_visits, other.state_visits)
            and np.array_equal(self.state_losses, other.state_losses)
            and np.array_equal(self.burst_histogram, other.burst_histogram)
        )


def simulate_policy(
    policy,
    model: ChannelModel,
    slots: int,
    seed: int = 0,
    gain_sampler: GainSampler | None = None,
) -> SimStats:
    """Run the state machine for ``slots`` slots starting from state 0.

    ``gain_sampler(rng, n)`` replaces the fading draw when given, which lets
    tests pin the channel.
    """
    if isinstance(policy, ChainAnalysis):
        eps, powers = policy.eps, np.asarray(policy.powers)
    else:
        eps = _as_eps(policy)
        powers = np.asarray(power_from_outage(eps, model), dtype=float)
    if isinstance(slots, bool) or int(slots) != slots or slots < 1:
        raise ParameterError(f"slots must be a positive integer, got {slots!r}")
    slots = int(slots)
    n = eps.size - 1
    rng = np.random.default_rng(seed)
    sampler = gain_sampler or (lambda r, k: sample_channel_gain(model, r, k))

    # Loss iff log2(1 + P g / N0) < R, i.e. g < (2^R - 1) N0 / P.
    thresholds = [model.gain_threshold_numerator / p for p in powers.tolist()]
    power_list = powers.tolist()
    visits = [0] * (n + 1)
    losses = [0] * (n + 1)
    runs: dict[int, int] = {}
    energy = 0.0
    state = 0
    run = 0
    done = 0
    while done < slots:
        chunk = sampler(rng, min(_CHUNK, slots - done)).tolist()
        for gain in chunk:
            visits[state] += 1
            energy += power_list[state]
            if gain < thresholds[state]:
                losses[state] += 1
                run += 1
                if state < n:
                    state += 1
            else:
                runs[run] = runs.get(run, 0) + 1
                run = 0
                state = 0
        done += len(chunk)

    hist = np.zeros(max(runs, default=0) + 1, dtype=np.int64)
    for length, count in runs.items():
        hist[length] = count
    return SimStats(
        slots=slots,
        state_visits=np.array(visits, dtype=np.int64),
        state_losses=np.array(losses, dtype=np.int64),
        energy=energy,
        burst_histogram=hist,
    )


class MetricCheck(NamedTuple):
    name: str
    empirical: float
    analytical: float
    delta: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class ValidationReport:
    stats: SimStats
    analysis: ChainAnalysis
    checks: list[MetricCheck]
    strict: bool

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[MetricCheck]:
        return [c for c in self.checks if not c.passed]

    def summary(self) -> str:
        lines = [f"{'metric':<22} {'empirical':>12} {'analytical':>12} {'delta':>10} {'tol':>8}  result"]
        for c in self.checks:
            lines.append(
                f"{c.name:<22} {c.empirical:>12.6f} {c.analytical:>12.6f} {c.delta:>10.2e} "
                f"{c.tolerance:>8.4f}  {'PASS' if c.passed else 'FAIL'}"
            )
        return "\n".join(lines)


def validate_against_chain(
    policy,
    model: ChannelModel,
    slots: int,
    seed: int = 0,
    prob_tol: float = 0.01,
    power_rtol: float = 0.01,
    strict: bool = True,
    analysis: ChainAnalysis | None = None,
) -> ValidationReport:
    """Compare a simulation run with the analytical chain for the same policy.

    Probabilities (state occupancy, loss rate, ``eps_N``) are compared in
    absolute terms, average power in relative terms.  In strict mode the run
    must be long enough for a 3-sigma binomial band at p = 1/2 to fit inside
    ``prob_tol``; otherwise the tolerances are widened to that band.
    ``analysis`` overrides the reference (used for negative controls).
    """
    min_slots = int(np.ceil((1.5 / prob_tol) ** 2))
    if strict and slots < min_slots:
        raise ParameterError(
            f"strict validation at prob_tol={prob_tol} needs >= {min_slots} slots, got {slots}"
        )
    band = 1.5 / np.sqrt(slots)
    p_tol = max(prob_tol, band) if not strict else prob_tol
    w_tol = max(power_rtol, 2 * band) if not strict else power_rtol

    ref = analysis if analysis is not None else analyze(policy, model)
    stats = simulate_policy(policy, model, slots, seed)
    checks = []

    def add(name, emp, ana, tol, relative=False):
        delta = abs(emp - ana) / abs(ana) if relative else abs(emp - ana)
        checks.append(MetricCheck(name, float(emp), float(ana), float(delta), float(tol), bool(delta <= tol)))

    if ref.pi.size != stats.state_visits.size:
        raise ParameterError("reference analysis has a different number of states")
    for i, (emp, ana) in enumerate(zip(stats.state_occupancy, ref.pi)):
        add(f"occupancy[{i}]", emp, ana, p_tol)
    add("gamma_r", stats.empirical_gamma_r, ref.gamma_r, p_tol)
    add("eps_cond", stats.empirical_eps_cond, ref.eps_n, p_tol)
    add("p_avg (relative)", stats.empirical_p_avg, ref.p_avg, w_tol, relative=True)
    return ValidationReport(stats=stats, analysis=ref, checks=checks, strict=strict)
