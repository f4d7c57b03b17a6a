"""Exact Verma-module arithmetic: generator action, Gram/Kac structure,
descent clouds, boundary basis states, and the corner gluing condition."""

from fractions import Fraction as Q

import pytest

from rectcft.virasoro import (CentralChargeParam, VermaVector,
                              DegenerateModuleError, FusionError,
                              apply_generator, basis_state, corner_state,
                              gd_apply, gluing_residual, gram_matrix,
                              graded_overlap, ope_beta, partitions,
                              primary_state, translate_exp)

PARAM = CentralChargeParam.from_p(Q(13, 5))
P3 = CentralChargeParam.from_p(Q(3))


def coeff(v, *parts):
    return v.coeffs.get(tuple(parts), Q(0))


class TestParam:
    def test_ising_point(self):
        assert P3.c == Q(1, 2)
        assert P3.kac_weight(1) == Q(1, 16)
        assert P3.kac_weight(2) == Q(1, 2)

    def test_kac_table_consistency(self):
        # h_{1,1+j} from the loop parametrization equals the (r,s) table
        for p in (Q(13, 5), Q(4), Q(7, 2)):
            par = CentralChargeParam.from_p(p)
            for j in range(4):
                assert par.kac_weight(j) == par.weight_rs(1, 1 + j)

    def test_symbolic_p(self):
        import sympy
        par = CentralChargeParam.symbolic()
        c = sympy.simplify(par.c - (1 - 6 / (par.p * (par.p + 1))))
        assert c == 0


class TestGeneratorAction:
    def test_lowering_then_raising(self):
        h = Q(5, 7)
        v = VermaVector(h, PARAM, {(1,): Q(1)}, 3)
        assert apply_generator(1, v).coeffs == {(): 2 * h}

    def test_central_term(self):
        h = Q(5, 7)
        v = VermaVector(h, PARAM, {(2,): Q(1)}, 3)
        assert apply_generator(2, v).coeffs == {(): 4 * h + PARAM.c / 2}

    def test_mixed_word_against_commutator_oracle(self):
        # independent oracle: L_1 L_{-2} L_{-1}|h> = [L_1, L_{-2}] L_{-1}|h>
        # + L_{-2} L_1 L_{-1}|h> = 3 L_{-1}^2|h> + 2h L_{-2}|h>
        import random
        rng = random.Random(3)
        for _ in range(5):
            h = Q(rng.randint(1, 40), rng.randint(1, 17))
            p = Q(rng.randint(2, 23), rng.randint(1, 5))
            par = CentralChargeParam.from_p(p)
            v = VermaVector(h, par, {(2, 1): Q(1)}, 3)
            assert apply_generator(1, v).coeffs == {(1, 1): Q(3), (2,): 2 * h}

    def test_truncation(self):
        v = primary_state(Q(1, 3), PARAM, 2)
        w = apply_generator(-3, v)
        assert w.coeffs == {}


class TestGram:
    def test_level_zero_and_one(self):
        h = Q(5, 7)
        basis0, mat0 = gram_matrix(h, PARAM, 0)
        assert mat0 == [[1]]
        basis1, mat1 = gram_matrix(h, PARAM, 1)
        assert mat1 == [[2 * h]]

    def test_level_two_textbook(self):
        h = Q(5, 7)
        c = PARAM.c
        basis, mat = gram_matrix(h, PARAM, 2)
        assert basis == ((2,), (1, 1))
        assert mat == [[4 * h + c / 2, 6 * h], [6 * h, 4 * h * (2 * h + 1)]]

    def test_level_two_determinant_vanishes_at_degenerate_weight(self):
        # the determinant has a zero exactly at the level-2 degenerate weight
        for p in (Q(13, 5), Q(4)):
            par = CentralChargeParam.from_p(p)
            h = par.weight_rs(1, 2)
            _, mat = gram_matrix(h, par, 2)
            det = mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]
            assert det == 0

    def test_vacuum_quotient_basis(self):
        basis, _ = gram_matrix(Q(0), PARAM, 4, vacuum=True)
        assert basis == ((4,), (2, 2))


class TestCornerMapAndTranslation:
    def test_corner_map_on_vacuum(self):
        v = gd_apply(primary_state(Q(0), PARAM, 4, vacuum=True))
        assert v.coeffs == {(): 1, (2,): -1, (4,): Q(-1, 2), (2, 2): Q(1, 2)}

    def test_corner_map_identity_at_level_zero(self):
        v = gd_apply(primary_state(Q(1, 3), PARAM, 0))
        assert v.coeffs == {(): 1}

    def test_translation_levels(self):
        v = translate_exp(2, Q(1, 3), PARAM, 2)
        assert v.coeffs == {(): 1, (1,): 2, (1, 1): 2}
        assert translate_exp(0, Q(1, 3), PARAM, 3).coeffs == {(): 1}

    def test_corner_times_translation_signs(self):
        # single left insertion: |phi> - 2 L_{-1}|phi> - L_{-2}|phi> + 2 L_{-1}^2|phi> ...
        v = basis_state(1, 0, 1, PARAM, 2)
        assert coeff(v) == 1 and coeff(v, 1) == -2
        assert coeff(v, 2) == -1 and coeff(v, 1, 1) == 2


class TestOpeBeta:
    def test_level_zero_normalization(self):
        t = ope_beta(Q(1, 3), Q(1, 5), Q(2, 7), PARAM, 0)
        assert t.beta == {(): 1}

    def test_level_one_descent(self):
        hi, hj, hs = Q(1, 3), Q(1, 5), Q(2, 7)
        t = ope_beta(hi, hj, hs, PARAM, 1)
        assert t.beta[(1,)] == (hs + hi - hj) / (2 * hs)

    def test_identity_channel_with_equal_fields_is_singular(self):
        h = Q(1, 3)
        with pytest.raises(DegenerateModuleError):
            # full Verma of h=0 is singular at level 1; the strict solve refuses
            ope_beta(h, h, Q(0), PARAM, 1, mode="strict")

    def test_vacuum_channel_energy_coefficient(self):
        h = Q(1, 3)
        t = ope_beta(h, h, Q(0), PARAM, 2)
        assert t.beta[(2,)] == 2 * h / PARAM.c

    def test_jet_continuation_equals_rational_function_route(self):
        from rectcft.virasoro import _ope_beta_continued_exact
        h1, h2 = PARAM.kac_weight(1), PARAM.kac_weight(2)
        fast = ope_beta(h1, h1, h2, PARAM, 5, mode="continued")
        slow = _ope_beta_continued_exact(h1, h1, h2, PARAM, 5)
        assert fast.beta == slow.beta


class TestBasisStates:
    def test_homogeneous_case_is_pure_corner_map(self):
        v = basis_state(0, 0, 0, PARAM, 4)
        assert v.coeffs == gd_apply(primary_state(Q(0), PARAM, 4, vacuum=True)).coeffs
        assert v.log2_prefactor == 0

    def test_fusion_error(self):
        with pytest.raises(FusionError):
            basis_state(1, 1, 1, PARAM, 2)
        with pytest.raises(FusionError):
            basis_state(1, 0, 2, PARAM, 2)

    def test_identity_channel_level_two(self):
        for p in (Q(3), Q(7, 2)):
            par = CentralChargeParam.from_p(p)
            v = basis_state(1, 1, 0, par, 2)
            assert coeff(v, 2) == 7 - Q(24) / (p + 3)

    def test_generic_weights_level_two_and_four(self):
        c, h = PARAM.c, Q(3, 11)
        v = corner_state(h, h, Q(0), PARAM, 4)
        assert coeff(v, 2) == 32 * h / c - 1
        assert coeff(v, 2, 2) == \
            (c * (22 + 5 * c) - 64 * (6 + 5 * c) * h + 5120 * h * h) / (2 * c * (22 + 5 * c))
        assert coeff(v, 4) == \
            -(c * (22 + 5 * c) - 256 * (2 + c) * h + 3072 * h * h) / (2 * c * (22 + 5 * c))

    def test_prefactor_exponent(self):
        v = basis_state(1, 1, 2, PARAM, 2)
        h1, h2 = PARAM.kac_weight(1), PARAM.kac_weight(2)
        assert v.log2_prefactor == 2 * (h2 - 2 * h1)

    def test_two_channel_state_level_two(self):
        p = PARAM.p
        v = basis_state(1, 1, 2, PARAM, 2)
        assert coeff(v, 2) == (5 * p - 1) / (3 * p + 1)
        assert coeff(v, 1, 1) == -2 * (p + 1) / (3 * p + 1)
        assert coeff(v, 1) == 0

    def test_even_parity_of_symmetric_states(self):
        v = basis_state(1, 1, 2, PARAM, 5)
        assert all(c == 0 for g, c in v.coeffs.items() if sum(g) % 2 == 1)

    def test_mirror_swaps_corners(self):
        a = basis_state(1, 0, 1, PARAM, 4)
        b = basis_state(0, 1, 1, PARAM, 4)
        assert a.mirror().coeffs == b.coeffs

    def test_single_insertion_factorizes(self):
        # left-corner state is exactly corner map o translation by -2
        h1 = PARAM.kac_weight(1)
        direct = basis_state(1, 0, 1, PARAM, 5)
        composed = gd_apply(translate_exp(-2, h1, PARAM, 5))
        assert direct.coeffs == composed.coeffs
        mirrored = gd_apply(translate_exp(2, h1, PARAM, 5))
        assert basis_state(0, 1, 1, PARAM, 5).coeffs == mirrored.coeffs

    def test_symbolic_mode_level_two(self):
        import sympy
        par = CentralChargeParam.symbolic()
        v = basis_state(1, 1, 0, par, 2)
        p = par.p
        assert sympy.simplify(v.coeffs[(2,)] - (7 - 24 / (p + 3))) == 0


class TestGluing:
    # the gluing condition ties h-tilde of the two edge labels; for a state
    # built as basis_state(i, j, s) the condition holds with (h_l, h_r)
    # = (h_j, h_i) in this implementation's corner chart orientation
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_single_insertion_state(self, n):
        h1 = P3.kac_weight(1)
        v = basis_state(1, 0, 1, P3, 8)
        r = gluing_residual(v, Q(0), h1, P3, n)
        assert r.coeffs == {}

    @pytest.mark.parametrize("n", [0, 1, 2, 3, 4])
    def test_homogeneous_state(self, n):
        v = basis_state(0, 0, 0, PARAM, 8)
        r = gluing_residual(v, Q(0), Q(0), PARAM, n)
        assert r.coeffs == {}

    @pytest.mark.parametrize("ijs", [(1, 1, 0), (1, 1, 2), (2, 1, 1), (2, 1, 3)])
    def test_two_insertion_states(self, ijs):
        i, j, s = ijs
        v = basis_state(i, j, s, PARAM, 6)
        hl, hr = PARAM.kac_weight(j), PARAM.kac_weight(i)
        for n in (1, 2, 3):
            assert gluing_residual(v, hl, hr, PARAM, n).coeffs == {}


class TestSerialization:
    def test_roundtrip(self):
        v = basis_state(1, 1, 2, PARAM, 4)
        w = VermaVector.from_json(v.to_json())
        assert w.coeffs == v.coeffs
        assert w.h == v.h
        assert w.log2_prefactor == v.log2_prefactor
        assert w.max_level == v.max_level


class TestGradedOverlap:
    def test_primary_norm(self):
        v = primary_state(Q(1, 3), PARAM, 3)
        assert graded_overlap(v, v, 3) == [1, 0, 0, 0]

    def test_mixed_module_rejected(self):
        a = primary_state(Q(1, 3), PARAM, 2)
        b = primary_state(Q(1, 5), PARAM, 2)
        with pytest.raises(ValueError):
            graded_overlap(a, b, 2)


def test_partition_counts():
    assert len(partitions(8)) == 22
    assert len(partitions(8, 2)) == 7
    assert partitions(0) == ((),)
