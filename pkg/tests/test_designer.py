from fractions import Fraction as F
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwboot.designer import (
    CertificateError,
    SingularSystemError,
    design_continuous,
    design_metastable,
    projection_solve,
)
from gwboot.dynamics import CASE2, CASE3, classify, critical_q
from gwboot.offspring import OffspringDistribution, delta
from gwboot.ratpoly import RationalPolynomial as P


class TestContinuous:
    def test_regular_tree(self):
        d = design_continuous(2, 1)
        assert d.xi == delta(2)
        assert d.g_chi == P([1, F(-1, 2)])
        assert d.P == P([F(1, 2)])
        assert d.q_c == F(1, 2)

    def test_cubic(self):
        d = design_continuous(2, 2)
        assert d.xi == OffspringDistribution(2, {2: F(3, 4), 3: F(1, 4)})
        assert d.g_chi == P([1, 0, F(-1, 3)])
        assert d.P == P([F(1, 3)])
        assert d.q_c == F(2, 3)

    def test_threshold_three(self):
        d = design_continuous(3, 1)
        assert d.g_chi == P([1, -1, F(1, 3)])
        assert d.P == P([1, F(-1, 3)])
        assert d.q_c == F(1, 3)

    @pytest.mark.parametrize("r", [2, 3, 4, 5])
    @pytest.mark.parametrize("nu", [1, 2, 3, 4, 5])
    def test_identity_and_p0(self, r, nu):
        d = design_continuous(r, nu)
        assert d.identity_residual().is_zero()
        assert d.P(0) == F(r - 1, (nu + r) * (nu + r - 1)) * comb(nu + r, r - 1)
        assert d.certificate.ok and d.certificate.roots_in_unit == []
        c = classify(d.xi)
        assert c.case == CASE2 and c.continuous_exponent[0] == nu
        assert c.q_c == d.q_c


class TestProjection:
    def test_hand_solved(self):
        P_bar, chi = projection_solve(2, [1], [F(1, 10)])
        assert P_bar == P([F(100, 261)])
        assert chi.weights == {2: F(130, 261), 3: F(50, 261)}
        # (130 (2 - x) + 50 (3x - 2x^2)) / 261 = 1 - (100/261)(x - 1/10)^2
        lhs = (P([2, -1]) * 130 + P([0, 3, -2]) * 50) / 261
        assert lhs == 1 - P.from_roots([F(1, 10)], [2]) * F(100, 261)

    def test_zero_level_is_continuous(self):
        P_bar, chi = projection_solve(2, [1], [0])
        assert P_bar == P([F(1, 3)])
        assert chi.weights == {2: F(1, 2), 3: F(1, 6)}

    def test_quartic_well_identity(self):
        P_bar, chi = projection_solve(2, [2], [F(1, 10)])
        assert P_bar.degree == 0
        assert chi.g_poly + P.from_roots([F(1, 10)], [4]) * P_bar == P([1])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 4), st.lists(st.integers(1, 2), min_size=1, max_size=2), st.data())
    def test_identity_wherever_solvable(self, r, nus, data):
        xs = sorted(
            data.draw(st.lists(st.fractions(F(1, 50), F(49, 50), max_denominator=50), min_size=len(nus), max_size=len(nus), unique=True)),
            reverse=True,
        )
        try:
            P_bar, chi = projection_solve(r, nus, xs)
        except (CertificateError, SingularSystemError):
            return
        M = P.from_roots(xs, [2 * n for n in nus])
        assert chi.g_poly + M * P_bar == P([1])
        assert P_bar.degree <= r - 2

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            projection_solve(2, [1, 1], [F(1, 10)])


class TestMetastable:
    def test_hand_solved(self):
        d = design_metastable(2, [1], [F(1, 10)])
        assert d.xi.support == {2: F(13, 18), 3: F(5, 18)}
        assert d.q_c == F(20, 29)
        assert d.x_list == (F(1, 10),)
        assert d.P == P([F(100, 261)])
        assert d.identity_residual().is_zero()
        assert critical_q(d.xi)[0] == F(20, 29)

    def test_certificate_failure_is_not_success(self):
        with pytest.raises(CertificateError) as err:
            design_metastable(2, [1], [F(9, 10)])
        assert err.value.violations

    def test_bad_levels(self):
        with pytest.raises(ValueError):
            design_metastable(2, [1, 1], [F(1, 10), F(2, 10)])
        with pytest.raises(ValueError):
            design_metastable(2, [0])

    @pytest.mark.parametrize("r", [2, 3, 4])
    @pytest.mark.parametrize("nus", [(1,), (2,), (1, 1), (2, 1), (1, 1, 1)])
    def test_closed_loop(self, r, nus):
        d = design_metastable(r, nus)
        assert d.certificate.ok and d.identity_residual().is_zero()
        assert all(a > b for a, b in zip(d.x_list, d.x_list[1:])) and d.x_list[-1] > 0
        c = classify(d.xi)
        assert c.case == CASE3
        assert c.nus == tuple(nus)
        assert c.xs == d.x_list
        assert c.q_c == d.q_c

    def test_json(self):
        js = design_metastable(2, [1], [F(1, 10)]).to_json()
        assert js["q_c"] == "20/29"
        assert js["xi"]["support"] == {"2": "13/18", "3": "5/18"}
        assert js["certificate"]["violations"] == []
