"""Circular statistics: modified Bessel function I0, the von Mises density,
its peak normalization, and distance on the circle.
"""

import math
from dataclasses import dataclass

from scipy import integrate

from .errors import DomainError

# e**kappa must stay representable in float64.
KAPPA_MAX = 700.0

_SERIES_RTOL = 1e-16
_SERIES_MAX_TERMS = 500


@dataclass(frozen=True)
class VonMisesParams:
    """Mean direction mu (radians) and concentration kappa >= 0."""

    mu: float
    kappa: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu}")
        if not (0.0 <= self.kappa <= KAPPA_MAX):
            raise DomainError(f"kappa must be in [0, {KAPPA_MAX:g}], got {self.kappa}")


def bessel_i0(kappa: float) -> float:
    """Modified Bessel function of the first kind, order 0.

    Power series sum_m (kappa/2)^(2m) / (m!)^2, accumulated until a term
    drops below 1e-16 of the partial sum.
    """
    if not math.isfinite(kappa) or kappa < 0.0 or kappa > KAPPA_MAX:
        raise DomainError(f"kappa must be in [0, {KAPPA_MAX:g}], got {kappa}")
    half_sq = (kappa / 2.0) ** 2
    term = 1.0
    total = 1.0
    for m in range(1, _SERIES_MAX_TERMS + 1):
        term *= half_sq / (m * m)
        total += term
        if term < _SERIES_RTOL * total:
            return total
    raise DomainError(f"I0 series did not converge for kappa={kappa}")


def bessel_ip_integral(p: int, kappa: float) -> float:
    """Order-p modified Bessel function by adaptive quadrature of
    (1/2pi) * integral_0^2pi cos(p*t) * exp(kappa*cos(t)) dt.

    Independent of the power-series path; used as a cross-check oracle.
    """
    if not isinstance(p, int) or p < 0 or p > 10:
        raise DomainError(f"p must be an integer in [0, 10], got {p}")
    if not math.isfinite(kappa) or kappa < 0.0 or kappa > KAPPA_MAX:
        raise DomainError(f"kappa must be in [0, {KAPPA_MAX:g}], got {kappa}")

    def integrand(t):
        return math.cos(p * t) * math.exp(kappa * math.cos(t))

    # full_output suppresses QUADPACK's roundoff chatter at large kappa;
    # accuracy is gated explicitly below instead.
    value, abserr = integrate.quad(integrand, 0.0, 2.0 * math.pi,
                                   epsabs=0.0, epsrel=1e-10, limit=200,
                                   full_output=1)[:2]
    if abserr > 1e-6 * (abs(value) + 1.0):
        raise DomainError(f"quadrature failed to converge for p={p}, kappa={kappa}")
    return value / (2.0 * math.pi)


def von_mises_pdf(x: float, params: VonMisesParams) -> float:
    """Density exp(kappa*cos(x - mu)) / (2pi * I0(kappa))."""
    return math.exp(params.kappa * math.cos(x - params.mu)) / (
        2.0 * math.pi * bessel_i0(params.kappa)
    )


def exact_gamma(kappa: float) -> float:
    """Peak of the von Mises density: exp(kappa) / (2pi * I0(kappa)).

    Serves as the normalization that pins the angle loss minimum at zero.
    The commonly tabulated (kappa, gamma) pairs are roundings of this value.
    """
    return math.exp(kappa) / (2.0 * math.pi * bessel_i0(kappa))


def circular_distance(a: float, b: float, period: float) -> float:
    """Shortest distance between a and b on a circle of the given period,
    min over integers k of |a - b - k*period|; result in [0, period/2].
    """
    if not (period > 0.0) or not math.isfinite(period):
        raise DomainError(f"period must be positive and finite, got {period}")
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("circular_distance requires finite inputs")
    return abs(math.remainder(a - b, period))
