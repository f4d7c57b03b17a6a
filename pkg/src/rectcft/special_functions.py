"""Modular and elliptic special functions used by the rectangle amplitudes.

Conventions, fixed once and used everywhere:

* tau = i*L'/L is the modular parameter of an L x L' rectangle (height over
  width), so the half-nome qhat = exp(i*pi*tau) is real in (0,1) for a
  physical rectangle.  q = qhat**2.
* elliptic_k takes the *parameter* m = k**2 (not the modulus k).  The
  crossing-probability formulas call it directly with the anharmonic ratio,
  K(zeta), matching that usage.
* theta functions are series in qhat: theta3 = sum_n qhat**(n^2) etc.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

_TRUNC_TOL = 1e-18


class DomainError(ValueError):
    """Argument outside the domain an operation is defined on."""


class ConvergenceError(ArithmeticError):
    """A series or iteration failed to reach the requested tolerance."""


@dataclass(frozen=True)
class ModularPoint:
    """Modular parameter with its derived nomes."""

    tau: complex
    q: complex = field(init=False)
    qhat: complex = field(init=False)

    def __post_init__(self):
        tau = complex(self.tau)
        if tau.imag <= 0:
            raise DomainError(f"modular parameter needs Im tau > 0, got {tau}")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "q", cmath.exp(2j * cmath.pi * tau))
        object.__setattr__(self, "qhat", cmath.exp(1j * cmath.pi * tau))

    @staticmethod
    def from_aspect(height_over_width: float) -> "ModularPoint":
        return ModularPoint(1j * height_over_width)

    def check(self, tol: float = 1e-12) -> None:
        assert abs(self.qhat ** 2 - self.q) <= tol * max(1.0, abs(self.q))
        assert abs(self.q) < 1.0


def _as_point(tau) -> ModularPoint:
    return tau if isinstance(tau, ModularPoint) else ModularPoint(tau)


def dedekind_eta(tau, terms: int = 200) -> complex:
    """q**(1/24) * prod_{n<=terms} (1 - q**n), truncated adaptively."""
    pt = _as_point(tau)
    if terms < 1:
        raise DomainError("terms must be >= 1")
    q = pt.q
    prod = 1.0 + 0j
    qn = q
    for _ in range(terms):
        prod *= 1.0 - qn
        if abs(qn) < _TRUNC_TOL:
            break
        qn *= q
    return cmath.exp(2j * cmath.pi * pt.tau / 24) * prod


def jacobi_theta(index: int, tau, terms: int = 200) -> complex:
    """theta_2, theta_3 or theta_4 at the given modular point (series form)."""
    pt = _as_point(tau)
    qh = pt.qhat
    if index == 3 or index == 4:
        sgn = 1 if index == 3 else -1
        total = 1.0 + 0j
        for n in range(1, terms + 1):
            term = 2 * (sgn ** n) * qh ** (n * n)
            total += term
            if abs(term) < _TRUNC_TOL:
                break
        return total
    if index == 2:
        total = 0j
        for n in range(terms):
            term = 2 * qh ** ((n + 0.5) ** 2)
            total += term
            if abs(term) < _TRUNC_TOL:
                break
        return total
    raise DomainError(f"theta index must be 2, 3 or 4, got {index}")


def elliptic_k(m: float) -> float:
    """Complete elliptic integral of the first kind, parameter convention K(m=k^2).

    Evaluated by the arithmetic-geometric mean, K(m) = pi / (2 AGM(1, sqrt(1-m))).
    """
    if not 0.0 <= m < 1.0:
        raise DomainError(f"elliptic parameter must be in [0,1), got {m}")
    a, b = 1.0, math.sqrt(1.0 - m)
    for _ in range(64):
        if abs(a - b) <= 2e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    else:
        raise ConvergenceError("AGM did not converge")
    return math.pi / (2.0 * a)


def modulus_from_tau(tau, terms: int = 200) -> float:
    """Elliptic modulus k of the rectangle, from the theta quotient at 2*tau."""
    pt = _as_point(tau)
    t2 = ModularPoint(2 * pt.tau)
    k = (jacobi_theta(2, t2, terms) / jacobi_theta(3, t2, terms)) ** 2
    if abs(k.imag) < 1e-13 * max(1.0, abs(k)):
        return k.real
    return k  # precision-tracked complex tau


def anharmonic_ratio(tau, terms: int = 200):
    """zeta = (theta4/theta3)**4; real in (0,1) on the imaginary axis."""
    pt = _as_point(tau)
    z = (jacobi_theta(4, pt, terms) / jacobi_theta(3, pt, terms)) ** 4
    if abs(z.imag) < 1e-13 * max(1.0, abs(z)):
        return z.real
    return z


def hyp2f1(a: float, b: float, c: float, z, tol: float = 1e-15) -> complex:
    """Gauss hypergeometric 2F1 on |z| < 1, with the z -> 1-z connection
    formula applied for 1/2 < |z| < 1.

    Logarithmic cases (c-a-b integral, needed near z=1) are not continued
    here; the dedicated limit routines in `amplitudes` handle those.
    """
    if c <= 0 and c == int(c):
        raise DomainError(f"2F1 pole: c = {c} is a non-positive integer")
    zc = complex(z)
    s = c - a - b
    s_integral = abs(s - round(s)) < 1e-12
    if abs(zc) <= 0.5 or (abs(zc) < 1.0 and abs(1 - zc) > 0.75):
        return _hyp2f1_series(a, b, c, zc, tol)
    if s_integral and abs(zc) < 1.0 and s > 0:
        # the connection formula degenerates; the direct series still
        # converges (algebraically near |z|=1), so use it with a big budget
        return _hyp2f1_series(a, b, c, zc, tol)
    if abs(1 - zc) < 1.0:
        if s_integral:
            raise DomainError("c-a-b integral: use the dedicated logarithmic limits")
        g = math.gamma
        f1 = g(c) * g(s) / (g(c - a) * g(c - b)) * _hyp2f1_series(a, b, 1 - s, 1 - zc, tol)
        f2 = (g(c) * g(-s) / (g(a) * g(b)) * (1 - zc) ** s
              * _hyp2f1_series(c - a, c - b, 1 + s, 1 - zc, tol))
        return f1 + f2
    raise ConvergenceError(f"2F1 argument {z} outside supported region")


def _hyp2f1_series(a, b, c, z: complex, tol: float) -> complex:
    total = 1.0 + 0j
    term = 1.0 + 0j
    for k in range(1, 500000):
        term *= (a + k - 1) * (b + k - 1) / ((c + k - 1) * k) * z
        total += term
        if abs(term) <= tol * max(1.0, abs(total)):
            return total
        if term == 0:
            return total
    raise ConvergenceError("2F1 series did not converge")


def self_avoiding_block(zeta: float) -> float:
    """S2(zeta) = zeta**2 * 2F1(-1/2, 3/2; 3; zeta), the dilute-polymer block."""
    if zeta == 1.0:
        # 2F1(-1/2,3/2;3;1) = Gamma(3)Gamma(2)/(Gamma(7/2)Gamma(3/2)) = 32/(15 pi)
        return 32.0 / (15.0 * math.pi)
    return zeta ** 2 * hyp2f1(-0.5, 1.5, 3.0, zeta).real
