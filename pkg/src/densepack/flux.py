"""Interparticle flux coefficients between two nearly touching balls.

The coefficient of a neck with gap ``delta`` is the integral over the
(d-1)-ball of radius r of ``(delta + R^2/r)^(1-p)``. Three routes evaluate it:

* :func:`g0_main` -- the leading singular term ``c * delta**(-beta)`` with
  ``beta = p - (d+1)/2`` (or ``pi r ln(r/delta)`` when d=3, p=2);
* :func:`g0_hypergeometric` -- the exact value through 2F1 with an integer
  second parameter, reduced to elementary functions by recurrences;
* :func:`g0_quadrature` -- direct adaptive quadrature of the radial integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import mpmath
import numpy as np
from scipy.integrate import quad

from .errors import (
    AccuracyError,
    HypergeometricRangeError,
    InvalidInputError,
    UnsupportedRegimeError,
)

Regime = Literal["power", "logarithmic", "regular"]


def double_factorial(m: int) -> int:
    """m!! with the conventions (-1)!! = 0!! = 1."""
    if m < -1:
        raise ValueError(f"double factorial undefined for {m}")
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def gamma_half(m: int) -> float:
    """Gamma(m/2) for a positive integer m without a general Gamma routine.

    Odd m: ``(m-2)!! sqrt(pi) / 2^((m-1)/2)``. Even m: ``(m/2 - 1)!``.
    """
    if m <= 0:
        raise ValueError("gamma_half needs a positive integer")
    if m % 2:
        return double_factorial(m - 2) * math.sqrt(math.pi) / 2 ** ((m - 1) // 2)
    return float(math.factorial(m // 2 - 1))


@dataclass(frozen=True)
class FluxModel:
    d: int
    p: int
    r: float
    beta: float = field(init=False)
    regime: Regime = field(init=False)
    c: float = field(init=False)

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise InvalidInputError(f"dimension must be an integer >= 2, got {self.d}")
        if int(self.p) != self.p or self.p < 2:
            raise InvalidInputError(f"exponent p must be an integer >= 2, got {self.p}")
        if not self.r > 0:
            raise InvalidInputError(f"radius must be positive, got {self.r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "r", float(self.r))
        twice_beta = 2 * self.p - self.d - 1
        beta = twice_beta / 2
        regime: Regime = "power" if twice_beta > 0 else "logarithmic" if twice_beta == 0 else "regular"
        c = main_constant(self.d, self.p, self.r) if regime == "power" else math.nan
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "regime", regime)
        object.__setattr__(self, "c", c)

    def with_r(self, r: float) -> FluxModel:
        return FluxModel(self.d, self.p, r)


def main_constant(d: int, p: int, r: float) -> float:
    """Constant of the leading term, valid for 2p > d + 1."""
    if 2 * p <= d + 1:
        raise UnsupportedRegimeError(f"no power-law main term for d={d}, p={p}")
    num = 2 * (math.pi * r) ** ((d - 1) / 2) * gamma_half(d + 1) * gamma_half(2 * p - d - 1)
    den = (d - 1) * gamma_half(d - 1) * math.factorial(p - 2)
    return num / den


def main_constant_odd(d: int, p: int, r: float) -> float:
    """Factorial form of the main-term constant for odd d."""
    if d % 2 == 0:
        raise ValueError("odd-d form needs odd d")
    if 2 * p <= d + 1:
        raise UnsupportedRegimeError(f"no power-law main term for d={d}, p={p}")
    return (math.pi * r) ** ((d - 1) / 2) * math.factorial(p - (d + 3) // 2) / math.factorial(p - 2)


def main_constant_even_printed(d: int, p: int, r: float) -> float:
    """Even-d constant exactly as printed in the source.

    Kept only to measure its disagreement with :func:`main_constant`; it
    does not follow from the general constant (the half-integer Gamma
    identity it relies on holds for odd arguments only).
    """
    if d % 2:
        raise ValueError("even-d form needs even d")
    if 2 * p <= d + 1 or p == 2:
        raise UnsupportedRegimeError(f"printed even-d form undefined for d={d}, p={p}")
    k = p - (d + 1) / 2
    return (
        math.sqrt(math.pi) * (math.pi * r) ** ((d - 1) / 2) * double_factorial(2 * p - d - 3)
        / (2**k * (p - 2))
    )


def keller_2d_nonlinear(p: int, r: float) -> float:
    """Constant of the quoted 2D p-Laplacian coefficient, ``(2p-5)!!/(2p-4)!! pi^1.5 r^0.5``."""
    return (
        double_factorial(2 * p - 5) / double_factorial(2 * p - 4) * math.pi**1.5 / r ** (p - 2)
        * r ** (p - 1.5)
    )


def keller_3d_nonlinear(p: int, r: float) -> float:
    """Constant of the quoted 3D coefficient ``pi / ((p-2) r^(p-3)) * r^(p-2)``, p > 2."""
    return math.pi / ((p - 2) * r ** (p - 3)) * r ** (p - 2)


def g0_main(model: FluxModel, delta):
    """Leading singular term of the flux coefficient."""
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0):
        raise InvalidInputError("gap must be positive")
    if model.regime == "power":
        out = model.c * delta ** (-model.beta)
    elif model.regime == "logarithmic":
        if model.d != 3:
            raise UnsupportedRegimeError(
                f"logarithmic coefficient is only available for d=3, p=2 (got d={model.d})"
            )
        out = math.pi * model.r * np.log(model.r / delta)
    else:
        raise UnsupportedRegimeError(
            f"d={model.d}, p={model.p}: coefficient stays bounded as the gap closes"
        )
    return float(out) if out.ndim == 0 else out


def _angular_factor(d: int) -> float:
    """Surface measure of the unit sphere in R^(d-1)."""
    return 2 * math.pi ** ((d - 1) / 2) / gamma_half(d - 1)


def g0_quadrature(model: FluxModel, delta: float, rel_tol: float = 1e-10) -> float:
    """Adaptive quadrature of the gap integral.

    The radial variable is mapped by ``R = sqrt(r delta) tan(theta)``, which
    turns the integrand into ``sin^(d-2) cos^(2p-d-2)`` on
    ``[0, arctan(sqrt(r/delta))]``.
    """
    d, p, r = model.d, model.p, model.r
    delta = float(delta)
    if not delta > 0:
        raise InvalidInputError("gap must be positive")
    top = math.atan(math.sqrt(r / delta))
    e_sin, e_cos = d - 2, 2 * p - d - 2

    def integrand(t):
        return math.sin(t) ** e_sin * math.cos(t) ** e_cos

    val, err = quad(integrand, 0.0, top, epsabs=0.0, epsrel=rel_tol, limit=1000)
    if not np.isfinite(val) or err > max(rel_tol * abs(val), 1e-300):
        raise AccuracyError(
            f"quadrature did not reach rel_tol={rel_tol:g} (error estimate {err:.3g})",
            estimate=val,
            error=err,
        )
    pref = (r * delta) ** ((d - 1) / 2) * delta ** (1 - p)
    return _angular_factor(d) * pref * val


def hyp2f1_unit_shift(a: float, b: int, Z, dps: int = 30):
    """``2F1(a, b; a+1; -Z)`` for half-integer a > 0, integer b >= 1, Z >= 0.

    Uses the Pfaff transform and its convergent series for Z <= 1, and for
    Z > 1 the integral ``a * int_0^1 t^(a-1) (1+Zt)^(-b) dt`` reduced by the
    recurrences in a (from a = 1/2 or 1) and in b. Returns an mpmath number.
    """
    if b < 1 or int(b) != b:
        raise ValueError("b must be a positive integer")
    if 2 * a != int(2 * a) or a <= 0:
        raise ValueError("a must be a positive half-integer")
    with mpmath.workdps(dps):
        Z = mpmath.mpf(Z)
        a_mp = mpmath.mpf(a)
        if Z <= 1:
            w = Z / (1 + Z)
            term = mpmath.mpf(1)
            total = mpmath.mpf(1)
            n = 0
            eps = mpmath.mpf(10) ** (-dps)
            while abs(term) > eps * abs(total):
                term *= (b + n) / (a_mp + 1 + n) * w
                total += term
                n += 1
            return +((1 + Z) ** (-b) * total)
        # J(a, 1) = int_0^1 t^(a-1) / (1 + Z t) dt
        if int(2 * a) % 2:
            s = mpmath.sqrt(Z)
            j, cur = 2 * mpmath.atan(s) / s, mpmath.mpf(0.5)
        else:
            j, cur = mpmath.log1p(Z) / Z, mpmath.mpf(1)
        while cur < a_mp:
            j = (1 / cur - j) / Z
            cur += 1
        # J(a, k) = ((1+Z)^(1-k) + (k-1-a) J(a, k-1)) / (k-1)
        for k in range(2, b + 1):
            j = ((1 + Z) ** (1 - k) + (k - 1 - a_mp) * j) / (k - 1)
        return +(a_mp * j)


def g0_hypergeometric(model: FluxModel, delta: float) -> float:
    """Exact gap integral via the 2F1 closed form."""
    d, p, r = model.d, model.p, model.r
    delta = float(delta)
    if not delta > 0 or not math.isfinite(delta):
        raise HypergeometricRangeError(f"gap {delta!r} outside the representable range")
    a = (d - 1) / 2
    Z = r / delta
    digits = int(abs(math.log10(Z))) * (p + d) if Z > 1 else 0
    with mpmath.workdps(30 + digits):
        F = hyp2f1_unit_shift(a, p - 1, Z, dps=30 + digits)
        val = (
            2 * mpmath.pi ** mpmath.mpf(a) / mpmath.gamma(mpmath.mpf(a))
            * mpmath.mpf(r) ** (d - 1) * F / (mpmath.mpf(delta) ** (p - 1) * (d - 1))
        )
        out = float(val)
    if not math.isfinite(out) or out == 0.0:
        raise HypergeometricRangeError(f"coefficient at gap {delta:g} is not representable as a float")
    return out


def edge_weight_function(model: FluxModel) -> Callable[[np.ndarray], np.ndarray]:
    """``f(x) = c (x - 2r)^(-beta)`` as a function of center distance x."""
    if model.regime != "power":
        g0_main(model, 1.0)  # raises the regime-specific error
        raise UnsupportedRegimeError("edge weight function needs the power regime")
    c, beta, two_r = model.c, model.beta, 2 * model.r

    def f(x):
        x = np.asarray(x, dtype=float)
        gap = x - two_r
        with np.errstate(divide="ignore"):
            out = np.where(gap > 0, c * np.abs(gap) ** (-beta), np.inf)
        return float(out) if out.ndim == 0 else out

    return f


def coefficient(model: FluxModel, delta, method: str = "main") -> float:
    if method == "main":
        return g0_main(model, delta)
    if method == "quad":
        return g0_quadrature(model, delta)
    if method == "hyp":
        return g0_hypergeometric(model, delta)
    raise InvalidInputError(f"unknown method {method!r}")
