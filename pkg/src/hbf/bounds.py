"""Closed-form error bounds and threshold formulas for the decoder.

Everything here is a pure function of scalars. The probability bounds
clamp to [0, 1] since the raw expressions can exceed 1. The standard
normal quantile is a rational approximation polished by one Halley step
against an erf-based CDF, giving |Phi(inv_norm_cdf(p)) - p| well below
1e-9 across (0, 1).
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .errors import InvalidArgumentError

__all__ = [
    "MarginFailureBound",
    "evt_threshold_approx",
    "evt_threshold_exact",
    "fn_bound",
    "fp_bound",
    "fp_threshold",
    "inv_norm_cdf",
    "margin_failure_bound",
    "norm_cdf",
    "signal_mean",
]


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidArgumentError(message)


def fp_bound(n: int, d: int, tau: float) -> float:
    """Union bound on the false-positive probability: min(1, n e^{-tau^2/(2d)}).

    ``n`` counts the candidates that could spuriously clear the
    threshold; ``tau`` is measured in units where a single impostor
    score has variance d.
    """
    _require(n >= 0, "n must be non-negative")
    _require(d >= 1, "d must be positive")
    _require(tau >= 0.0, "tau must be non-negative")
    return min(1.0, n * math.exp(-(tau * tau) / (2.0 * d)))


def fp_threshold(n: int, d: int, eps: float) -> float:
    """The tau at which fp_bound equals eps: sqrt(2 d ln(n / eps))."""
    _require(n >= 1, "n must be at least 1")
    _require(d >= 1, "d must be positive")
    _require(0.0 < eps < 1.0, "eps must lie in (0, 1)")
    return math.sqrt(2.0 * d * math.log(n / eps))


def signal_mean(d: int, hamming: float, p_e: float) -> float:
    """Expected aligned component (d - 2H)(1 - 2 p_e) for a member query.

    H key-coordinate flips cost 2H of inner product; memory sign flips
    shrink the correlation by (1 - 2 p_e) in expectation.
    """
    _require(d >= 1, "d must be positive")
    _require(0 <= hamming <= d / 2, "hamming must lie in [0, d/2]")
    _require(0.0 <= p_e < 0.5, "p_e must lie in [0, 0.5)")
    return (d - 2.0 * hamming) * (1.0 - 2.0 * p_e)


def fn_bound(d: int, hamming: float, p_e: float, n: int, t: float | None = None) -> float:
    """Two-term false-negative bound with a free split point t.

    exp(-((mu - t)^2)/(2d)) + n exp(-t^2/(2d)) with mu the signal mean;
    t defaults to mu/2, which balances the two exponents.
    """
    _require(n >= 0, "n must be non-negative")
    mu = signal_mean(d, hamming, p_e)
    if t is None:
        t = mu / 2.0
    if not 0.0 < t < mu:
        raise InvalidArgumentError(f"t must lie strictly inside (0, {mu})")
    miss = math.exp(-((mu - t) ** 2) / (2.0 * d))
    impostor = n * math.exp(-(t * t) / (2.0 * d))
    return min(1.0, miss + impostor)


class MarginFailureBound(NamedTuple):
    probability: float
    tau: float
    delta: float


def margin_failure_bound(rho: float, d: int, c: float, m: int) -> MarginFailureBound:
    """Failure bound for the margin decoder at high signal-to-noise.

    2 e^{-rho^2 d/(8c)} + 2 m e^{-rho^2 d/(32c)}, assuming non-match
    scores are sub-Gaussian with variance proxy c*d, alongside the
    implied settings tau = rho d / 2 and delta = rho d / 4.
    """
    _require(rho > 0.0, "rho must be positive")
    _require(d >= 1, "d must be positive")
    _require(c > 0.0, "c must be positive")
    _require(m >= 0, "m must be non-negative")
    exponent = rho * rho * d / c
    probability = min(1.0, 2.0 * math.exp(-exponent / 8.0) + 2.0 * m * math.exp(-exponent / 32.0))
    return MarginFailureBound(probability, rho * d / 2.0, rho * d / 4.0)


def norm_cdf(x: float) -> float:
    """Standard normal CDF via erfc (accurate in both tails)."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


# Rational approximation coefficients (Acklam's minimax fit; relative
# error below 1.15e-9 before refinement).
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)

_P_LOW = 0.02425
_P_HIGH = 1.0 - _P_LOW


def inv_norm_cdf(p: float) -> float:
    """Standard normal quantile Phi^{-1}(p) for p in (0, 1).

    Rational initial estimate plus one Halley step against the erf-based
    CDF; the round-trip |Phi(x) - p| lands near machine precision.
    """
    _require(0.0 < p < 1.0, "p must lie in (0, 1)")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
             / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    elif p <= _P_HIGH:
        q = p - 0.5
        r = q * q
        x = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
              / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))

    # One Halley refinement against the reference CDF.
    err = norm_cdf(x) - p
    u = err * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def evt_threshold_exact(sigma: float, m: int, eps: float) -> float:
    """Exact upper quantile of the max of m i.i.d. N(0, sigma^2) draws.

    Solves P{max > t} = eps, i.e. t = sigma * Phi^{-1}((1 - eps)^{1/m}).
    """
    _require(sigma > 0.0, "sigma must be positive")
    _require(m >= 1, "m must be at least 1")
    _require(0.0 < eps < 1.0, "eps must lie in (0, 1)")
    return sigma * inv_norm_cdf((1.0 - eps) ** (1.0 / m))


def evt_threshold_approx(sigma: float, m: int, order: str = "first") -> float:
    """Asymptotic location of the Gaussian maximum.

    order='first' gives sigma sqrt(2 ln m); order='gumbel' subtracts the
    (ln ln m + ln 4 pi) / (2 sqrt(2 ln m)) correction, which requires
    m >= 3 so the correction is defined and positive.
    """
    _require(sigma > 0.0, "sigma must be positive")
    if order == "first":
        _require(m >= 1, "m must be at least 1")
        return sigma * math.sqrt(2.0 * math.log(m))
    if order == "gumbel":
        _require(m >= 3, "gumbel order requires m >= 3")
        lead = math.sqrt(2.0 * math.log(m))
        correction = (math.log(math.log(m)) + math.log(4.0 * math.pi)) / (2.0 * lead)
        return sigma * (lead - correction)
    raise InvalidArgumentError(f"order must be 'first' or 'gumbel', got {order!r}")
