"""Exact truncated power series in the half-nome.

Closed-form rectangle amplitudes are products of eta/theta functions and
hypergeometric blocks.  Expanded in the half-nome x = exp(i*pi*tau) they have
the shape

    2**log2 * x**shift * (c0 + c1*x + c2*x**2 + ...)

with rational c_n and rational exponents ``log2``/``shift``.  Keeping the
power-of-two prefactor and the leading x-power outside the coefficient list
makes every coefficient an exact Fraction, so series produced by exact
Verma-module contractions can be compared term by term with no floating
point at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

Q = Fraction


def _as_frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _log2_exact(r: Fraction):
    """Return e with r == 2**e, or None if r is not a signed power of two."""
    if r <= 0:
        return None
    num, den = r.numerator, r.denominator
    if num & (num - 1) or den & (den - 1):
        return None
    return num.bit_length() - den.bit_length()


@dataclass(frozen=True)
class PowerSeries:
    """2**log2 * x**shift * sum_n coeffs[n] x**n, truncated at len(coeffs)-1."""

    shift: Fraction
    log2: Fraction
    coeffs: tuple

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @staticmethod
    def from_coeffs(coeffs: Iterable, order: int, shift=0, log2=0) -> "PowerSeries":
        c = [_as_frac(v) for v in coeffs][: order + 1]
        c += [Q(0)] * (order + 1 - len(c))
        return PowerSeries(_as_frac(shift), _as_frac(log2), tuple(c))

    @staticmethod
    def one(order: int) -> "PowerSeries":
        return PowerSeries.from_coeffs([1], order)

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def valuation(self) -> int:
        for n, c in enumerate(self.coeffs):
            if c != 0:
                return n
        raise ValueError("valuation of zero series")

    def __mul__(self, other):
        if isinstance(other, PowerSeries):
            order = min(self.order, other.order)
            out = [Q(0)] * (order + 1)
            for i, a in enumerate(self.coeffs[: order + 1]):
                if a == 0:
                    continue
                for j in range(order + 1 - i):
                    b = other.coeffs[j]
                    if b != 0:
                        out[i + j] += a * b
            return PowerSeries(self.shift + other.shift, self.log2 + other.log2, tuple(out))
        f = _as_frac(other)
        e = _log2_exact(abs(f)) if f != 0 else None
        if f != 0 and e is not None and f > 0:
            return PowerSeries(self.shift, self.log2 + e, self.coeffs)
        return PowerSeries(self.shift, self.log2, tuple(c * f for c in self.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, PowerSeries):
            return self * other.inverse()
        return self * (1 / _as_frac(other))

    def __add__(self, other):
        if not isinstance(other, PowerSeries):
            other = PowerSeries.from_coeffs([other], self.order, shift=0, log2=0)
        dl = self.log2 - other.log2
        if dl.denominator != 1:
            raise ValueError("cannot add series with incompatible 2**log2 prefactors")
        ds = self.shift - other.shift
        if ds.denominator != 1:
            raise ValueError("cannot add series with incompatible x-power shifts")
        ds = int(ds)
        # align on the smaller shift
        a, b, = self, other
        if ds < 0:
            a, b, ds = other, self, -ds
        # now a.shift = b.shift + ds
        order = min(a.order + ds, b.order)
        fac = Q(2) ** int(a.log2 - b.log2)
        out = list(b.coeffs[: order + 1]) + [Q(0)] * (order + 1 - len(b.coeffs))
        for n in range(order + 1 - ds):
            out[n + ds] += fac * a.coeffs[n]
        return PowerSeries(b.shift, b.log2, tuple(out))

    def __sub__(self, other):
        return self + (other * Q(-1) if isinstance(other, PowerSeries) else -_as_frac(other))

    def __rsub__(self, other):
        return (self * Q(-1)) + other

    __radd__ = __add__

    def inverse(self) -> "PowerSeries":
        c0 = self.coeffs[0]
        if c0 == 0:
            raise ValueError("inverse of series with zero constant term")
        order = self.order
        out = [Q(0)] * (order + 1)
        out[0] = 1 / c0
        for n in range(1, order + 1):
            s = Q(0)
            for k in range(1, n + 1):
                s += self.coeffs[k] * out[n - k]
            out[n] = -s / c0
        return PowerSeries(-self.shift, -self.log2, tuple(out))

    def pow(self, e) -> "PowerSeries":
        """Raise to a rational power.

        The leading coefficient must be a power of two so the prefactor stays
        exact; integer powers work for any leading coefficient.
        """
        e = _as_frac(e)
        if self.is_zero():
            if e > 0:
                return self
            raise ValueError("zero series to non-positive power")
        v = self.valuation()
        lead = self.coeffs[v]
        order = self.order - v
        body = self.coeffs[v : self.order + 1]
        l2 = _log2_exact(lead)
        if l2 is None:
            if e.denominator != 1:
                raise ValueError(f"leading coefficient {lead} not a power of two; "
                                 "fractional power would be irrational")
            lead_pow = lead ** int(e)
            extra_log2 = Q(0)
        else:
            lead_pow = Q(1)
            extra_log2 = l2 * e
        u = [c / lead for c in body]  # u[0] == 1
        # binomial series (1+w)**e with w = u - 1, via the standard recursion
        out = [Q(0)] * (order + 1)
        out[0] = Q(1)
        for n in range(1, order + 1):
            s = Q(0)
            for k in range(1, n + 1):
                s += (e * k - (n - k)) * u[k] * out[n - k]
            out[n] = s / n
        coeffs = tuple(lead_pow * c for c in out)
        return PowerSeries((self.shift + v) * e, self.log2 * e + extra_log2, coeffs)

    def truncate(self, order: int) -> "PowerSeries":
        return PowerSeries(self.shift, self.log2, self.coeffs[: order + 1])

    def relative_coeffs(self) -> list:
        """Coefficients normalized so the leading one equals 1."""
        v = self.valuation()
        lead = self.coeffs[v]
        return [c / lead for c in self.coeffs[v:]]

    def leading_exponent(self) -> Fraction:
        return self.shift + self.valuation()

    def evaluate(self, x: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + float(c)
        return (2.0 ** float(self.log2)) * x ** float(self.shift) * acc


def eta_series(scale, power, order: int) -> PowerSeries:
    """(eta(scale*tau))**power as a series in the half-nome of tau.

    scale must make 2*scale*n an integer for all n >= 1 (1/2, 1 and 2 are the
    cases that occur in rectangle amplitudes).
    """
    scale = _as_frac(scale)
    step = 2 * scale
    if step.denominator != 1:
        raise ValueError("eta argument scale must be a half-integer multiple")
    step = int(step)
    prod = PowerSeries.one(order)
    n = 1
    while step * n <= order:
        term = [Q(0)] * (order + 1)
        term[0] = Q(1)
        term[step * n] = Q(-1)
        prod = prod * PowerSeries.from_coeffs(term, order)
        n += 1
    prod = PowerSeries(scale / 12, Q(0), prod.coeffs)
    return prod.pow(power)


def theta3_series(order: int) -> PowerSeries:
    c = [Q(0)] * (order + 1)
    c[0] = Q(1)
    n = 1
    while n * n <= order:
        c[n * n] = Q(2)
        n += 1
    return PowerSeries.from_coeffs(c, order)


def theta4_series(order: int) -> PowerSeries:
    c = [Q(0)] * (order + 1)
    c[0] = Q(1)
    n = 1
    while n * n <= order:
        c[n * n] = Q(2) if n % 2 == 0 else Q(-2)
        n += 1
    return PowerSeries.from_coeffs(c, order)


def theta2_series(order: int) -> PowerSeries:
    # theta2 = 2 x^{1/4} sum_{n>=0} x^{n(n+1)}
    c = [Q(0)] * (order + 1)
    n = 0
    while n * (n + 1) <= order:
        c[n * (n + 1)] = Q(1)
        n += 1
    return PowerSeries(Q(1, 4), Q(1), tuple(c))


def zeta_series(order: int) -> PowerSeries:
    """Anharmonic ratio (theta4/theta3)**4 of the rectangle, as a series."""
    return (theta4_series(order) / theta3_series(order)).pow(4)


def one_minus_zeta_series(order: int) -> PowerSeries:
    one = PowerSeries.one(order)
    return one - zeta_series(order)


def hyp2f1_series(a, b, c, arg: PowerSeries) -> PowerSeries:
    """Gauss hypergeometric sum of a series argument with positive valuation."""
    a, b, c = _as_frac(a), _as_frac(b), _as_frac(c)
    if arg.shift != 0 or arg.log2 != 0:
        raise ValueError("hypergeometric argument must be a plain series")
    if not arg.is_zero() and arg.valuation() < 1:
        raise ValueError("hypergeometric argument must vanish at x=0")
    order = arg.order
    acc = PowerSeries.one(order)
    term = PowerSeries.one(order)
    for k in range(1, order + 1):
        if c + k - 1 == 0:
            raise ValueError("hypergeometric parameter c hits a non-positive integer")
        term = term * arg * ((a + k - 1) * (b + k - 1) / ((c + k - 1) * k))
        if term.is_zero():
            break
        acc = acc + term
    return acc
