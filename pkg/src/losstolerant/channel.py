"""Power/outage maps for slow block-fading links without transmit CSI.

A packet sent at rate ``R`` with power ``P`` is lost when
``log2(1 + P |h|^2 / N0) < R``.  With unit-mean fading gain that happens
with probability

* Rayleigh:           ``1 - exp(-(2^R - 1) N0 / P)``
* ``d``-fold diversity: ``P(d, d (2^R - 1) N0 / P)``, the regularized lower
  incomplete gamma function with shape ``d``.

The diversity map has no closed-form inverse, so :func:`power_from_outage`
brackets and root-finds it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import NumericError, ParameterError

__all__ = [
    "ChannelModel",
    "outage_from_power",
    "power_from_outage",
    "regularized_lower_gamma",
    "watts_to_dbw",
    "dbw_to_watts",
]

_ROOT_RTOL = 1e-13
_MAX_BRACKET_STEPS = 400


@dataclass(frozen=True)
class ChannelModel:
    """Fading family plus link parameters.

    ``branches=None`` selects Rayleigh fading; an integer selects the
    single-stream diversity channel with that many branches.
    """

    rate: float = 1.0
    noise: float = 1.0
    branches: int | None = None

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ParameterError(f"rate must be positive and finite, got {self.rate!r}")
        if not (self.noise > 0 and math.isfinite(self.noise)):
            raise ParameterError(f"noise must be positive and finite, got {self.noise!r}")
        if self.branches is not None:
            if isinstance(self.branches, bool) or int(self.branches) != self.branches or self.branches < 1:
                raise ParameterError(f"branches must be a positive integer, got {self.branches!r}")
            object.__setattr__(self, "branches", int(self.branches))

    @classmethod
    def rayleigh(cls, rate=1.0, noise=1.0):
        return cls(rate=rate, noise=noise)

    @classmethod
    def diversity(cls, branches, rate=1.0, noise=1.0):
        return cls(rate=rate, noise=noise, branches=branches)

    @property
    def kind(self) -> str:
        return "rayleigh" if self.branches is None else "diversity"

    @property
    def gain_threshold_numerator(self) -> float:
        """``(2^R - 1) N0``; a packet at power P is lost iff gain < this / P."""
        return math.expm1(self.rate * math.log(2.0)) * self.noise


def regularized_lower_gamma(a, x):
    """Regularized lower incomplete gamma ``gamma(a, x) / Gamma(a)``.

    Accepts scalars or arrays; ``x = inf`` maps to 1.
    """
    a_arr = np.asarray(a, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    if np.any(~(a_arr > 0)) or np.any(~np.isfinite(a_arr)):
        raise ParameterError("shape a must be positive and finite")
    if np.any(~(x_arr >= 0)):
        raise ParameterError("argument x must be non-negative")
    out = special.gammainc(a_arr, x_arr)
    return float(out) if out.ndim == 0 else out


def outage_from_power(power, model: ChannelModel):
    """Outage probability for transmit power ``power`` (watts, > 0)."""
    p = np.asarray(power, dtype=float)
    if np.any(~(p > 0)):
        raise ParameterError("transmit power must be positive")
    scaled = model.gain_threshold_numerator / p
    if model.branches is None:
        out = -np.expm1(-scaled)
    else:
        d = model.branches
        out = special.gammainc(d, d * scaled)
    return float(out) if out.ndim == 0 else out


def _check_outage(eps):
    e = np.asarray(eps, dtype=float)
    if np.any(~((e > 0) & (e < 1))):
        raise ParameterError("outage probability must lie strictly inside (0, 1)")
    return e


def _diversity_power(eps: float, model: ChannelModel) -> float:
    def excess(p):
        return outage_from_power(p, model) - eps

    # Rayleigh inverse is a good starting scale for the bracket.
    guess = model.gain_threshold_numerator / -math.log1p(-eps)
    lo = hi = guess
    for _ in range(_MAX_BRACKET_STEPS):
        if excess(lo) > 0:
            break
        lo *= 0.5
    else:
        raise NumericError(f"could not bracket power for outage {eps!r} from below")
    for _ in range(_MAX_BRACKET_STEPS):
        if excess(hi) < 0:
            break
        hi *= 2.0
    else:
        raise NumericError(f"could not bracket power for outage {eps!r} from above")
    if lo == hi:
        return lo
    root, info = optimize.brentq(
        excess, lo, hi, xtol=1e-300, rtol=_ROOT_RTOL, maxiter=500, full_output=True
    )
    if not info.converged:
        raise NumericError(f"root finding did not converge for outage {eps!r}")
    return root


def power_from_outage(eps, model: ChannelModel):
    """Transmit power (watts) whose outage probability equals ``eps``."""
    e = _check_outage(eps)
    if model.branches is None:
        out = model.gain_threshold_numerator / -np.log1p(-e)
    elif e.ndim == 0:
        return _diversity_power(float(e), model)
    else:
        out = np.array([_diversity_power(v, model) for v in e.ravel()]).reshape(e.shape)
    return float(out) if np.ndim(out) == 0 else out


def watts_to_dbw(watts):
    out = 10.0 * np.log10(np.asarray(watts, dtype=float))
    return float(out) if out.ndim == 0 else out


def dbw_to_watts(dbw):
    out = 10.0 ** (np.asarray(dbw, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out
