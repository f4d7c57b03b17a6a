"""Modular/elliptic function checks: defining series, transformation laws,
and the closed-form identities the amplitude formulas rest on."""

import cmath
import math
import random

import pytest
from scipy.integrate import quad
from scipy.special import hyp2f1 as scipy_hyp2f1

from rectcft.special_functions import (ModularPoint, DomainError, dedekind_eta,
                                       jacobi_theta, elliptic_k,
                                       modulus_from_tau, anharmonic_ratio,
                                       hyp2f1, self_avoiding_block)


def fundamental_domain_points(n, seed=7):
    rng = random.Random(seed)
    pts = []
    while len(pts) < n:
        x = rng.uniform(-0.5, 0.5)
        y = rng.uniform(0.9, 2.2)
        if abs(complex(x, y)) > 1.001:
            pts.append(complex(x, y))
    return pts


class TestEta:
    def test_value_at_i_against_long_product(self):
        short = dedekind_eta(ModularPoint(1j), terms=60)
        long = dedekind_eta(ModularPoint(1j), terms=500)
        assert abs(short - long) < 1e-15
        assert short.real == pytest.approx(0.7682254, abs=1e-6)

    def test_inversion(self):
        tau = 0.3 + 1.1j
        lhs = dedekind_eta(ModularPoint(-1 / tau))
        rhs = cmath.sqrt(-1j * tau) * dedekind_eta(ModularPoint(tau))
        assert abs(lhs - rhs) < 1e-12

    def test_translation_phase(self):
        tau = 2j
        ratio = dedekind_eta(ModularPoint(tau + 1)) / dedekind_eta(ModularPoint(tau))
        assert abs(ratio - cmath.exp(1j * cmath.pi / 12)) < 1e-13

    def test_domain_error(self):
        with pytest.raises(DomainError):
            ModularPoint(1.0 - 0.2j)


class TestTheta:
    def test_q_to_zero_limit(self):
        assert abs(jacobi_theta(3, ModularPoint(40j)) - 1) < 1e-15

    def test_eta_quotient(self):
        pt = ModularPoint(1.3j)
        t2, t3, t4 = (jacobi_theta(i, pt) for i in (2, 3, 4))
        assert abs((t2 * t3 * t4 / 2) ** (1 / 3) - dedekind_eta(pt)) < 1e-12

    def test_inversion(self):
        tau = 0.2 + 0.9j
        lhs = jacobi_theta(3, ModularPoint(-1 / tau))
        rhs = cmath.sqrt(-1j * tau) * jacobi_theta(3, ModularPoint(tau))
        assert abs(lhs - rhs) < 1e-12

    def test_bad_index(self):
        with pytest.raises(DomainError):
            jacobi_theta(1, ModularPoint(1j))

    def test_modular_list_on_random_points(self):
        for tau in fundamental_domain_points(20):
            s = cmath.sqrt(-1j * tau)
            pt, pti = ModularPoint(tau), ModularPoint(-1 / tau)
            ptt = ModularPoint(tau + 1)
            assert abs(dedekind_eta(pti) - s * dedekind_eta(pt)) < 1e-10 * abs(s)
            assert abs(jacobi_theta(2, pti) - s * jacobi_theta(4, pt)) < 1e-10 * abs(s)
            assert abs(jacobi_theta(3, pti) - s * jacobi_theta(3, pt)) < 1e-10 * abs(s)
            assert abs(jacobi_theta(4, pti) - s * jacobi_theta(2, pt)) < 1e-10 * abs(s)
            assert abs(jacobi_theta(3, ptt) - jacobi_theta(4, pt)) < 1e-10
            assert abs(jacobi_theta(4, ptt) - jacobi_theta(3, pt)) < 1e-10


class TestEllipticK:
    def test_zero_parameter(self):
        assert elliptic_k(0.0) == pytest.approx(math.pi / 2, abs=1e-15)

    def test_domain(self):
        with pytest.raises(DomainError):
            elliptic_k(1.0)

    def test_theta_identity(self):
        pt = ModularPoint(1.5j)
        z = anharmonic_ratio(pt)
        assert 2 * elliptic_k(1 - z) == pytest.approx(
            math.pi * jacobi_theta(3, pt).real ** 2, rel=1e-14)

    def test_quarter_period_from_modulus(self):
        pt = ModularPoint(0.8j)
        k = modulus_from_tau(pt)
        want = (math.pi / 4) * (jacobi_theta(3, pt).real ** 2
                                + jacobi_theta(4, pt).real ** 2)
        assert elliptic_k(k * k) == pytest.approx(want, rel=1e-12)

    def test_against_quadrature(self):
        for m in (0.12, 0.5, 0.93):
            val, _ = quad(lambda t: 1 / math.sqrt((1 - t * t) * (1 - m * t * t)), 0, 1)
            assert elliptic_k(m) == pytest.approx(val, rel=1e-10)


class TestModulus:
    def test_large_imaginary_limit(self):
        assert abs(modulus_from_tau(ModularPoint(25j))) < 1e-15

    def test_three_expressions_agree(self):
        pt = ModularPoint(0.6j)
        k = modulus_from_tau(pt)
        t3, t4 = jacobi_theta(3, pt).real, jacobi_theta(4, pt).real
        assert k == pytest.approx((t3 ** 2 - t4 ** 2) / (t3 ** 2 + t4 ** 2), abs=1e-12)
        t2 = jacobi_theta(2, pt).real
        K = elliptic_k(k * k)
        assert k == pytest.approx((math.pi * t2 ** 2 / (4 * K)) ** 2, abs=1e-12)

    def test_square_point_cross_check(self):
        # at tau = i the rectangle is a square and zeta = 1/2
        assert anharmonic_ratio(ModularPoint(1j)) == pytest.approx(0.5, abs=1e-13)
        k = modulus_from_tau(ModularPoint(1j))
        assert ((1 - k) / (1 + k)) ** 2 == pytest.approx(0.5, abs=1e-12)


class TestAnharmonicRatio:
    def test_nome_to_zero(self):
        assert 1 - anharmonic_ratio(ModularPoint(12j)) < 1e-14

    def test_monotone_increasing_in_height(self):
        vals = [anharmonic_ratio(ModularPoint(1j * y)) for y in (0.5, 1.0, 2.0, 3.0)]
        assert vals == sorted(vals)

    def test_translation(self):
        tau = 0.4 + 1.2j
        lhs = anharmonic_ratio(ModularPoint(tau + 1))
        rhs = 1 / anharmonic_ratio(ModularPoint(tau))
        assert abs(lhs - rhs) < 1e-11 * abs(rhs)

    def test_inversion_sum_on_imaginary_axis(self):
        for y in (0.6, 1.0, 1.7, 2.5):
            s = anharmonic_ratio(ModularPoint(1j * y)) + \
                anharmonic_ratio(ModularPoint(1j / y))
            assert s == pytest.approx(1.0, abs=1e-12)


class TestHyp2F1:
    def test_at_zero(self):
        assert hyp2f1(0.3, 1.1, 2.7, 0.0) == 1.0

    def test_against_scipy(self):
        cases = [(1 / 3, 2 / 3, 4 / 3, 0.45), (1 / 3, 2 / 3, 4 / 3, 0.93),
                 (0.21, 1.7, 2.3, 0.87), (-0.5, 1.5, 3.0, 0.97)]
        for a, b, c, z in cases:
            assert abs(hyp2f1(a, b, c, z) - scipy_hyp2f1(a, b, c, z)) < 1e-11

    def test_pole_parameter(self):
        with pytest.raises(DomainError):
            hyp2f1(0.5, 0.5, -1.0, 0.3)

    def test_dilute_block_euler_integral(self):
        # S2(z) = z^2 2F1(-1/2, 3/2; 3; z) against the Euler representation
        a, b, c = -0.5, 1.5, 3.0
        pref = math.gamma(c) / (math.gamma(b) * math.gamma(c - b))
        for z in (0.3, 0.8):
            val, _ = quad(lambda t: t ** (b - 1) * (1 - t) ** (c - b - 1)
                          * (1 - z * t) ** (-a), 0, 1)
            assert self_avoiding_block(z) == pytest.approx(z * z * pref * val, rel=1e-9)

    def test_dilute_block_midpoint_symmetry(self):
        s = self_avoiding_block(0.5)
        assert self_avoiding_block(0.5) + self_avoiding_block(1 - 0.5) == \
            pytest.approx(2 * s, rel=1e-14)


class TestTwoPointBlockIdentities:
    # closed-form eta-quotient identities behind the two-insertion amplitudes
    def test_bottom_edge_identity(self):
        h = 0.37
        for y in (0.6, 0.85, 1.0, 1.4, 2.0):
            pt = ModularPoint(1j * y)
            z = anharmonic_ratio(pt)
            lhs = (z / (1 - z) ** 2) ** (h / 3)
            eta1 = dedekind_eta(pt).real
            eta2 = dedekind_eta(ModularPoint(2j * y)).real
            rhs = 4.0 ** (-4 * h / 3) * (eta1 / eta2) ** (8 * h)
            assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_diagonal_identity(self):
        h = 0.37
        for y in (0.6, 0.85, 1.0, 1.4, 2.0):
            pt = ModularPoint(1j * y)
            z = anharmonic_ratio(pt)
            lhs = (z * (1 - z)) ** (h / 3)
            eta1 = dedekind_eta(pt).real
            eta2 = dedekind_eta(ModularPoint(2j * y)).real
            etah = dedekind_eta(ModularPoint(0.5j * y)).real
            rhs = 2.0 ** (4 * h / 3) * (eta2 * etah / eta1 ** 2) ** (8 * h)
            assert lhs == pytest.approx(rhs, rel=1e-9)
