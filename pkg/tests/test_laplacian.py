"""Grid Laplacian tests: spectra, tree counting, and universal parts."""

import math

import numpy as np
import pytest

from rectcft.laplacian import (ETA_PREDICTIONS, GridBC, GridError,
                               brute_force_tree_count, free_boson_check,
                               grid_laplacian, log_det, segment_matrix,
                               segment_modes, spanning_tree_count,
                               tau_difference_check, universal_part, family)

SIZES = list(range(40, 181, 20))


class TestSegments:
    @pytest.mark.parametrize("ends", [("D", "D"), ("N", "N"), ("N", "D"), ("D", "N")])
    def test_modes_match_dense(self, ends):
        for n in (1, 2, 5, 9):
            dense = np.linalg.eigvalsh(segment_matrix(n, *ends))
            assert np.sort(segment_modes(n, *ends)) == pytest.approx(dense, abs=1e-12)

    def test_wired_spectrum_closed_form(self):
        n = 7
        want = [2 - 2 * math.cos(math.pi * k / (n + 1)) for k in range(1, n + 1)]
        assert np.sort(segment_modes(n, "D", "D")) == pytest.approx(sorted(want))


class TestGridOperator:
    def test_tensor_sum_equals_assembly(self):
        spec = GridBC("D", "N", "D", "N", 6, 8)
        dense = float(np.linalg.slogdet(grid_laplacian(spec))[1])
        assert log_det(spec) == pytest.approx(dense, rel=1e-12)

    def test_monotone_in_size(self):
        vals = [log_det(GridBC("D", "D", "D", "D", n, n)) for n in (4, 6, 8)]
        assert vals == sorted(vals)

    def test_all_free_needs_tree_route(self):
        with pytest.raises(GridError):
            grid_laplacian(GridBC("N", "N", "N", "N", 3, 3))

    def test_bad_side(self):
        with pytest.raises(GridError):
            GridBC("X", "N", "N", "N", 2, 2)


class TestTreeCounting:
    @pytest.mark.parametrize("shape", [(2, 2), (2, 3), (3, 3)])
    def test_matrix_tree_equals_enumeration(self, shape):
        c, r = shape
        assert spanning_tree_count(c, r) == brute_force_tree_count(c, r)

    def test_two_by_two_is_four(self):
        assert spanning_tree_count(2, 2) == 4

    def test_mode_product_route(self):
        for (c, r) in [(2, 2), (3, 3), (3, 4)]:
            spec = GridBC("N", "N", "N", "N", c, r)
            assert math.exp(log_det(spec)) == pytest.approx(
                spanning_tree_count(c, r), rel=1e-10)


class TestUniversalParts:
    @pytest.mark.parametrize("bc", list(ETA_PREDICTIONS))
    def test_tau_difference_matches_eta_quotient(self, bc):
        res = tau_difference_check(bc, base_sizes=SIZES)
        assert res["error"] < 1e-3
        assert res["fit_residual"] < 1e-6

    def test_wired_log_slope(self):
        # the fitted log L coefficient floats to -1/2 for four wired sides
        fits = universal_part(family("DDDD", 1.0, SIZES))
        assert fits.log_slope == pytest.approx(-0.5, abs=2e-3)

    def test_wired_vertical_log_slope(self):
        fits = universal_part(family("DNDN", 1.0, SIZES))
        assert fits.log_slope == pytest.approx(+0.5, abs=2e-3)

    def test_free_boson_power_relation(self):
        assert free_boson_check(base_sizes=SIZES) < 1e-3

    def test_dense_polymer_cross_check(self):
        # the sqrt(L) eta form of the wired-verticals family equals the
        # two-line loop partition function: same eta factor, slope +1/2
        res = tau_difference_check("DNDN", base_sizes=SIZES)
        assert res["error"] < 1e-3
        assert ETA_PREDICTIONS["DNDN"]["kind"] == "sqrtL_eta"
