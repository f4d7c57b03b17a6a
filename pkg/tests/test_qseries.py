"""Exact series engine: algebra, modular series, hypergeometric composition."""

from fractions import Fraction as Q

import pytest

from rectcft.qseries import (PowerSeries, eta_series, theta2_series,
                             theta3_series, theta4_series, zeta_series,
                             one_minus_zeta_series, hyp2f1_series)
from rectcft.special_functions import (ModularPoint, dedekind_eta,
                                       jacobi_theta, anharmonic_ratio)

X = 0.21  # evaluation point for float cross-checks (qhat of tau ~ 1.0i)


def _pt_from_x(x):
    import math
    return ModularPoint(1j * (-math.log(x) / math.pi))


def test_mul_inverse_roundtrip():
    s = eta_series(1, Q(3), 30)
    t = s * s.inverse()
    assert t.shift == 0 and t.log2 == 0
    assert t.coeffs[0] == 1 and all(c == 0 for c in t.coeffs[1:])


def test_pow_matches_repeated_multiplication():
    s = theta3_series(24)
    assert s.pow(3).coeffs == (s * s * s).coeffs


def test_eta_series_vs_float():
    pt = _pt_from_x(X)
    for scale in (Q(1, 2), Q(1), Q(2)):
        val = dedekind_eta(ModularPoint(scale * pt.tau)).real
        assert eta_series(scale, 1, 60).evaluate(X) == pytest.approx(val, abs=1e-14)


def test_theta_series_vs_float():
    pt = _pt_from_x(X)
    for idx, ser in ((2, theta2_series(40)), (3, theta3_series(40)),
                     (4, theta4_series(40))):
        assert ser.evaluate(X) == pytest.approx(jacobi_theta(idx, pt).real, abs=1e-14)


def test_zeta_series_vs_float():
    pt = _pt_from_x(X)
    z = anharmonic_ratio(pt)
    assert zeta_series(40).evaluate(X) == pytest.approx(z, abs=1e-13)
    assert one_minus_zeta_series(40).evaluate(X) == pytest.approx(1 - z, abs=1e-13)


def test_one_minus_zeta_leading_terms():
    # 1 - zeta = 16 qhat - 128 qhat^2 + ...
    s = one_minus_zeta_series(8)
    assert s.coeffs[0] == 0
    assert s.coeffs[1] == 16
    assert s.coeffs[2] == -128


def test_fractional_power_tracks_two_exponent():
    s = one_minus_zeta_series(10).pow(Q(1, 3))
    # (16 qhat)^(1/3) = 2^(4/3) qhat^(1/3) (1 + ...)
    assert s.shift == Q(1, 3)
    assert s.log2 == Q(4, 3)
    assert s.coeffs[0] == 1


def test_hyp2f1_series_composition():
    from rectcft.special_functions import hyp2f1
    arg = one_minus_zeta_series(30)
    ser = hyp2f1_series(Q(1, 3), Q(2, 3), Q(4, 3), arg)
    pt = _pt_from_x(X)
    want = hyp2f1(1 / 3, 2 / 3, 4 / 3, 1 - anharmonic_ratio(pt)).real
    assert ser.evaluate(X) == pytest.approx(want, rel=1e-12)


def test_addition_requires_compatible_prefactors():
    a = PowerSeries.from_coeffs([1, 1], 4, shift=Q(1, 2))
    b = PowerSeries.from_coeffs([1, 1], 4, shift=Q(0))
    with pytest.raises(ValueError):
        a + b
