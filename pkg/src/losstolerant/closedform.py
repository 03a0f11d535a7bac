"""Exact boundary solution for a single tolerated loss (N = 1).

With ``eps_1`` pinned at ``eps_out`` and the average-loss constraint tight,
``gamma_r = eps_0 / (1 + eps_0 - eps_out)`` solves to
``eps_0 = (1 - eps_out) * gamma / (1 - gamma)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .chain import ChainAnalysis, analyze
from .channel import ChannelModel
from .errors import InfeasibleError, ParameterError

__all__ = ["LossConstraints", "SweepPoint", "solve_n1", "sweep_n1"]


@dataclass(frozen=True)
class LossConstraints:
    """Application loss tolerance plus the transmitter's peak power.

    gamma:    permitted long-run fraction of lost packets.
    n_max:    number of successive losses tolerated (N).
    eps_out:  permitted probability of losing yet another packet once N
              packets in a row have been lost.
    p_peak:   peak transmit power in watts; ``inf`` means unbounded.
    """

    gamma: float
    n_max: int
    eps_out: float
    p_peak: float = math.inf

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ParameterError(f"gamma must lie in (0, 1), got {self.gamma!r}")
        if not 0 < self.eps_out < 1:
            raise ParameterError(f"eps_out must lie in (0, 1), got {self.eps_out!r}")
        if isinstance(self.n_max, bool) or int(self.n_max) != self.n_max or self.n_max < 1:
            raise ParameterError(f"n_max must be an integer >= 1, got {self.n_max!r}")
        object.__setattr__(self, "n_max", int(self.n_max))
        if not self.p_peak > 0:
            raise ParameterError(f"p_peak must be positive, got {self.p_peak!r}")

    def replace(self, **changes) -> "LossConstraints":
        fields = dict(gamma=self.gamma, n_max=self.n_max, eps_out=self.eps_out, p_peak=self.p_peak)
        fields.update(changes)
        return LossConstraints(**fields)


class SweepPoint(NamedTuple):
    eps_out: float
    p_avg: float
    gamma_r: float
    eps_n: float
    feasible: bool
    power_monotone: bool
    reason: str = ""


def n1_state0_outage(gamma: float, eps_out: float) -> float:
    return (1.0 - eps_out) * gamma / (1.0 - gamma)


def solve_n1(constraints: LossConstraints, model: ChannelModel) -> ChainAnalysis:
    """Boundary policy ``(eps_0, eps_out)`` with both loss constraints tight.

    The result may have ``P_0 > P_1`` (check ``power_monotone``); that is the
    regime where pinning ``eps_1 = eps_out`` stops being optimal.

    Raises :class:`InfeasibleError` when ``eps_0`` leaves (0, 1) or ``P_1``
    exceeds the peak power.
    """
    if constraints.n_max != 1:
        raise ParameterError(f"closed form needs n_max == 1, got {constraints.n_max}")
    eps0 = n1_state0_outage(constraints.gamma, constraints.eps_out)
    if not 0 < eps0 < 1:
        raise InfeasibleError(
            f"eps_0 = {eps0:.6g} lies outside (0, 1); gamma is too large for eps_out",
            reasons=("eps0_out_of_range",),
        )
    result = analyze([eps0, constraints.eps_out], model)
    if result.p_n > constraints.p_peak:
        raise InfeasibleError(
            f"P_1 = {result.p_n:.6g} W exceeds the peak power {constraints.p_peak:.6g} W",
            reasons=("C3",),
        )
    return result


def sweep_n1(constraints: LossConstraints, eps_out_grid, model: ChannelModel) -> list[SweepPoint]:
    """Closed-form solution at each ``eps_out`` in the grid.

    Infeasible grid points are kept, with NaN numbers and ``feasible=False``.
    """
    grid = np.atleast_1d(np.asarray(eps_out_grid, dtype=float))
    if grid.size == 0:
        raise ParameterError("eps_out grid is empty")
    rows = []
    for eps_out in grid:
        try:
            res = solve_n1(constraints.replace(eps_out=float(eps_out), n_max=1), model)
        except InfeasibleError as exc:
            nan = math.nan
            rows.append(SweepPoint(float(eps_out), nan, nan, nan, False, False, ",".join(exc.reasons)))
            continue
        rows.append(
            SweepPoint(float(eps_out), res.p_avg, res.gamma_r, res.eps_n, True, res.power_monotone)
        )
    return rows
