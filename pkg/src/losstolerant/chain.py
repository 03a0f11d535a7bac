"""Markov chain of successive packet losses.

State ``i`` counts the packets lost in a row just before the current slot.
An ACK in any state returns the chain to 0; a NAK moves it from ``i`` to
``i + 1``, and state ``N`` loops on itself.  Each state carries its own
outage probability ``eps[i]`` (equivalently, its own transmit power).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelModel, power_from_outage
from .errors import DegenerateChainError, ParameterError

__all__ = [
    "OutagePolicy",
    "ChainAnalysis",
    "build_transition_matrix",
    "steady_state",
    "analyze",
]


def _as_eps(eps, *, open_interval=True) -> np.ndarray:
    if isinstance(eps, OutagePolicy):
        return eps.eps
    e = np.array(eps, dtype=float)
    if e.ndim != 1 or e.size < 2:
        raise ParameterError("an outage vector needs N + 1 >= 2 entries")
    if open_interval:
        bad = ~((e > 0) & (e < 1))
    else:
        bad = ~((e >= 0) & (e <= 1))
    if np.any(bad):
        interval = "(0, 1)" if open_interval else "[0, 1]"
        raise ParameterError(f"outage probabilities must lie in {interval}, got {e.tolist()}")
    return e


@dataclass(frozen=True, eq=False)
class OutagePolicy:
    """Per-state outage probabilities ``eps[0..N]``.

    Entries lie strictly in (0, 1) and never increase with the state index,
    i.e. the transmit power never drops as losses accumulate.
    """

    eps: np.ndarray

    def __post_init__(self):
        e = _as_eps(self.eps)
        if np.any(np.diff(e) > 0):
            raise ParameterError(f"outage probabilities must be non-increasing, got {e.tolist()}")
        e = e.copy()
        e.setflags(write=False)
        object.__setattr__(self, "eps", e)

    @property
    def n_max(self) -> int:
        return self.eps.size - 1

    def __len__(self):
        return self.eps.size

    def __eq__(self, other):
        if not isinstance(other, OutagePolicy):
            return NotImplemented
        return np.array_equal(self.eps, other.eps)

    def __repr__(self):
        return f"OutagePolicy({self.eps.tolist()})"


@dataclass(frozen=True, eq=False)
class ChainAnalysis:
    """Steady-state quantities derived from an outage vector and a channel."""

    eps: np.ndarray
    pi: np.ndarray
    gamma_r: float
    powers: np.ndarray
    p_avg: float

    @property
    def n_max(self) -> int:
        return self.eps.size - 1

    @property
    def eps_n(self) -> float:
        return float(self.eps[-1])

    @property
    def p_n(self) -> float:
        return float(self.powers[-1])

    @property
    def power_monotone(self) -> bool:
        """True when powers never decrease along the chain."""
        return bool(np.all(np.diff(self.powers) >= 0))

    def __repr__(self):
        return (
            f"ChainAnalysis(eps={self.eps.tolist()}, pi={self.pi.tolist()}, "
            f"gamma_r={self.gamma_r!r}, powers={self.powers.tolist()}, p_avg={self.p_avg!r})"
        )


def build_transition_matrix(eps) -> np.ndarray:
    """Row-stochastic ``(N+1) x (N+1)`` matrix of the loss-run chain.

    Boundary values 0 and 1 are accepted here so degenerate chains can be
    inspected; :func:`steady_state` rejects ``eps[N] == 1``.
    """
    e = _as_eps(eps, open_interval=False)
    n = e.size - 1
    a = np.zeros((n + 1, n + 1))
    a[:, 0] = 1.0 - e
    rows = np.arange(n + 1)
    a[rows, np.minimum(rows + 1, n)] += e
    return a


def _outages_from_matrix(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
        raise ParameterError("transition matrix must be square with at least 2 states")
    n = a.shape[0] - 1
    rows = np.arange(n + 1)
    e = a[rows, np.minimum(rows + 1, n)].copy()
    expected = build_transition_matrix(np.clip(e, 0.0, 1.0))
    if not np.allclose(a, expected, rtol=0.0, atol=1e-12):
        raise ParameterError("matrix does not have the loss-run sparsity pattern")
    return e


def _product_form(e: np.ndarray) -> np.ndarray:
    if e[-1] >= 1.0:
        raise DegenerateChainError("eps[N] = 1 makes the last state absorbing")
    n = e.size - 1
    w = np.empty(n + 1)
    w[0] = 1.0
    w[1:] = np.cumprod(e[:-1])
    w[n] /= 1.0 - e[n]
    return w / w.sum()


def steady_state(a) -> np.ndarray:
    """Stationary distribution ``pi`` with ``pi @ a == pi``.

    Uses the product form ``pi_i ~ prod_{k<i} eps_k`` (``i < N``) and
    ``pi_N ~ prod_{k<N} eps_k / (1 - eps_N)``.
    """
    return _product_form(_outages_from_matrix(a))


def analyze(eps, model: ChannelModel) -> ChainAnalysis:
    """Steady state, achieved loss rate and average power for ``eps``.

    ``eps`` may be an :class:`OutagePolicy` or any vector in (0, 1)^(N+1);
    monotonicity is not required here so that boundary solutions can be
    evaluated as-is.
    """
    e = _as_eps(eps).copy()
    pi = _product_form(e)
    powers = np.asarray(power_from_outage(e, model), dtype=float)
    for arr in (e, pi, powers):
        arr.setflags(write=False)
    return ChainAnalysis(
        eps=e,
        pi=pi,
        gamma_r=float(e @ pi),
        powers=powers,
        p_avg=float(powers @ pi),
    )
