"""Closed-form spectral inequalities for the Dirichlet log-Laplacian.

All functions are cheap, pure evaluations.  Volumes are Lebesgue measures,
``lam`` is a spectral parameter on the eigenvalue scale of ``(1/2) log(-Delta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional

from .errors import DomainError, PreconditionError
from .specfun import EULER_GAMMA, digamma, gamma_ln, log_ball_volume, zeta_digamma

_LOG2 = math.log(2.0)
_LOG2PI = math.log(2.0 * math.pi)


def _check_dim(d) -> int:
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d!r}")
    return int(d)


def _check_volume(volume) -> float:
    volume = float(volume)
    if not volume > 0 or math.isinf(volume):
        raise DomainError(f"volume must be finite and positive, got {volume!r}")
    return volume


def _log_weyl_const(d: int, volume: float) -> float:
    # log(|Omega| |B_d| / (2 pi)^d)
    return math.log(volume) + log_ball_volume(d) - d * _LOG2PI


def riesz_upper(d: int, volume: float, lam: float) -> float:
    """Berezin-type upper bound for the Riesz mean sum_k (lam - lam_k)_+.

    Returns |Omega| |B_d| e^{d lam} / ((2 pi)^d d).
    """
    d = _check_dim(d)
    volume = _check_volume(volume)
    return math.exp(_log_weyl_const(d, volume) + d * lam) / d


def count_upper(d: int, volume: float, lam: float) -> float:
    """Upper bound e^{d lam + 1} |Omega| |B_d| / (2 pi)^d on the counting function."""
    d = _check_dim(d)
    volume = _check_volume(volume)
    return math.exp(_log_weyl_const(d, volume) + d * lam + 1.0)


def lambda1_lower_general(d: int, volume: float) -> float:
    """Lower bound for the first eigenvalue valid for every set of measure ``volume``.

    (1/d) log((2 pi)^d / (e |Omega| |B_d|))
    """
    d = _check_dim(d)
    volume = _check_volume(volume)
    return -(_log_weyl_const(d, volume) + 1.0) / d


@dataclass(frozen=True)
class Lambda1Bounds:
    """Four lower bounds for the first eigenvalue of the unit ball.

    ``b2`` is ``None`` for d = 1 where it is not defined.
    """

    d: int
    b1: float
    b2: Optional[float]
    b3: float
    b4: float

    @property
    def best(self) -> float:
        return max(b for b in (self.b1, self.b2, self.b3, self.b4) if b is not None)

    def entries(self):
        return (self.b1, self.b2, self.b3, self.b4)


def lambda1_ball_bounds(d: int) -> Lambda1Bounds:
    """Bounds b1..b4 for lambda_1 of the unit ball B_d.

    b1  general-set bound specialised to |B_d|
    b2  Bessel-function bound (d >= 2 only)
    b3  Beckner's logarithmic uncertainty bound, psi(d/4) + log 2
    b4  zeta_d
    """
    d = _check_dim(d)
    b1 = (2.0 / d) * gamma_ln(0.5 * d) + _LOG2 + (2.0 / d) * math.log(0.5 * d) - 1.0 / d
    b2 = None
    if d >= 2:
        log_corr = (
            (d + 1) * _LOG2
            + 2.0 * log_ball_volume(d)
            + 0.5 * d * math.log(d + 2.0)
            - math.log(d)
            - 2 * d * _LOG2PI
        )
        b2 = math.log(2.0 * math.sqrt(d + 2.0)) - math.exp(log_corr)
    b3 = digamma(0.25 * d) + _LOG2
    return Lambda1Bounds(d=d, b1=b1, b2=b2, b3=b3, b4=zeta_digamma(d))


def round_half_away(x: float, digits: int = 2) -> float:
    """Round to ``digits`` decimals, ties away from zero (on the decimal repr)."""
    q = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


def faber_krahn_transfer(d: int, volume: float, lambda1_ball_lower: float) -> float:
    """Transfer a lower bound for lambda_1(B_d) to any set of measure ``volume``.

    The result lambda1_ball_lower + (1/d) log(|B_d| / volume) is a valid lower
    bound only for bounded Lipschitz sets; checking that is up to the caller.
    """
    d = _check_dim(d)
    volume = _check_volume(volume)
    return lambda1_ball_lower + (log_ball_volume(d) - math.log(volume)) / d


@dataclass(frozen=True)
class TraceBoundParams:
    d: int
    volume: float
    tau: float
    c_tau: float

    def __post_init__(self):
        _check_dim(self.d)
        _check_volume(self.volume)
        if not 0.0 < self.tau < 1.0:
            raise DomainError(f"tau must lie in (0, 1), got {self.tau!r}")
        if not self.c_tau >= 0.0:
            raise DomainError(f"c_tau must be non-negative, got {self.c_tau!r}")


def trace_coefficients(d: int, tau: float) -> tuple[float, float]:
    """Coefficients a_tau = (d(d - tau) - 1)/(d - tau) and b_tau = 4 d tau."""
    return (d * (d - tau) - 1.0) / (d - tau), 4.0 * d * tau


def riesz_lower_exact(params: TraceBoundParams, lam: float) -> float:
    """Lower bound for the Riesz mean, valid for lam >= 2 C_{Omega,tau} and d >= 2.

    The value may be negative (vacuous) close to the threshold; it is not
    clamped.
    """
    d, tau, C = params.d, params.tau, params.c_tau
    if d < 2:
        raise DomainError("the lower trace bound needs d >= 2")
    if lam < 2.0 * C:
        raise PreconditionError(f"lam={lam} below 2 C = {2.0 * C}")
    a, b = trace_coefficients(d, tau)
    pref = math.exp(_log_weyl_const(d, params.volume)) / d
    bracket = (
        math.exp(d * lam)
        - a * C * math.exp((d - tau) * lam)
        - b * C * C * math.exp((d - 2.0 * tau) * lam)
        - (d * lam + 1.0)
    )
    return pref * bracket


def weyl_constants(d: int, volume: float) -> tuple[float, float]:
    """Limits of e^{-d lam} times the Riesz mean and the counting function."""
    d = _check_dim(d)
    volume = _check_volume(volume)
    count = math.exp(_log_weyl_const(d, volume))
    return count / d, count


def elem_log_bound_check(r: float, s: float, tau: float) -> bool:
    """Check log(1 + r/s) <= max(1/s, s^-tau) (1 + r)^tau log(1 + r)."""
    if r < 0 or not s > 0 or not 0.0 < tau < 1.0:
        raise DomainError("need r >= 0, s > 0 and 0 < tau < 1")
    lhs = math.log1p(r / s)
    rhs = max(1.0 / s, s ** (-tau)) * (1.0 + r) ** tau * math.log1p(r)
    # rounding slack for r/s in the subnormal range
    return lhs <= rhs * (1.0 + 8.0 * 2.0**-52)


def asymptotic_bounds(d: int) -> tuple[float, float, float, float]:
    """Leading-order large-d forms of b1, b2, b3, b4.

    (log d - 1, log sqrt(d + 2) + log 2, log d - log 2, log sqrt(d) + log 2 - gamma/2)
    """
    d = _check_dim(d)
    return (
        math.log(d) - 1.0,
        0.5 * math.log(d + 2.0) + _LOG2,
        math.log(d) - _LOG2,
        0.5 * math.log(d) + _LOG2 - 0.5 * EULER_GAMMA,
    )
