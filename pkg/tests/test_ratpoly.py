from fractions import Fraction as F
from math import comb

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from gwboot.ratpoly import (
    RationalPolynomial as P,
    count_roots,
    express_in_basis,
    gk_polynomial,
    is_positive_on,
    isolate_roots,
    mixed_basis,
    rational_root_in,
    refine_root,
    solve_linear,
    square_free_decomposition,
    to_fraction,
)

X = sp.Symbol("x")

small_fracs = st.fractions(min_value=-5, max_value=5, max_denominator=12)
polys = st.lists(small_fracs, min_size=0, max_size=6).map(P)
nonzero_polys = polys.filter(lambda p: not p.is_zero())


def to_sympy(p: P):
    return sum((sp.Rational(c.numerator, c.denominator) * X**i for i, c in enumerate(p.coeffs)), sp.Integer(0))


def gk_oracle(k, r):
    """Binomial sum expanded by sympy."""
    expr = sum(sp.binomial(k, i) * (1 - X) ** i * X ** (k - i - 1) for i in range(r))
    return sp.Poly(sp.expand(expr), X)


class TestGk:
    def test_hand_expansions(self):
        assert gk_polynomial(2, 2) == P([2, -1])
        assert gk_polynomial(3, 2) == P([0, 3, -2])
        assert gk_polynomial(3, 3) == P([3, -3, 1])

    @pytest.mark.parametrize("k,r", [(k, r) for r in range(2, 6) for k in range(r, r + 7)])
    def test_matches_symbolic_binomial_sum(self, k, r):
        assert to_sympy(gk_polynomial(k, r)).equals(gk_oracle(k, r).as_expr())

    @pytest.mark.parametrize("k,r", [(k, r) for r in range(2, 6) for k in range(r, r + 7)])
    def test_value_one_at_one(self, k, r):
        assert gk_polynomial(k, r)(F(1)) == 1

    @pytest.mark.parametrize("k,r", [(k, r) for r in range(2, 6) for k in range(r, r + 7)])
    def test_degree_and_lowest_term(self, k, r):
        g = gk_polynomial(k, r)
        assert g.degree == k - 1
        # only the i = r-1 term survives at the bottom: C(k, r-1) x^(k-r)
        assert g.lowest_degree() == k - r
        assert g.coeff(k - r) == comb(k, r - 1)

    def test_rejects_k_below_r(self):
        with pytest.raises(ValueError):
            gk_polynomial(2, 3)


class TestArithmetic:
    @given(polys, polys, polys)
    def test_ring_laws(self, a, b, c):
        assert (a + b) * c == a * c + b * c
        assert (a * b) * c == a * (b * c)
        assert a - a == P()

    @given(polys, nonzero_polys)
    def test_division_identity(self, a, b):
        q, r = a.divmod(b)
        assert q * b + r == a
        assert r.degree < b.degree

    @given(polys, small_fracs)
    def test_evaluation_matches_sympy(self, a, x):
        assert a(x) == F(str(to_sympy(a).subs(X, sp.Rational(x.numerator, x.denominator))))

    @given(polys, st.integers(min_value=0, max_value=3), small_fracs)
    def test_taylor_coefficient(self, a, order, at):
        expected = sp.diff(to_sympy(a), X, order).subs(X, sp.Rational(at.numerator, at.denominator)) / sp.factorial(order)
        assert a.taylor_coefficient(order, at) == F(str(expected))

    def test_shift_down_requires_divisibility(self):
        assert P([0, 0, 3, 1]).shift_down(2) == P([3, 1])
        with pytest.raises(ValueError):
            P([1, 1]).shift_down(1)

    def test_float_and_mpfr_paths(self):
        import gmpy2

        p = P([F(6, 5), F(-3, 5), 0, 2, F(-8, 5)])
        assert p(0.5) == pytest.approx(float(p(F(1, 2))), rel=1e-15)
        with gmpy2.context(gmpy2.get_context(), precision=200):
            v = p(gmpy2.mpfr("0.5"))
        assert abs(F(*v.as_integer_ratio()) - p(F(1, 2))) < F(1, 10**50)

    def test_strings_round_trip(self):
        p = P([F(1, 3), 0, F(-7, 2)])
        assert P.from_strings(p.to_strings()) == p

    def test_to_fraction_uses_shortest_decimal(self):
        assert to_fraction(0.9) == F(9, 10)
        assert to_fraction("5/6") == F(5, 6)
        assert to_fraction("0.95") == F(19, 20)


class TestBasis:
    def test_smallest_cases(self):
        b = mixed_basis(2, 2)
        assert list(b.elements) == [P([2, -1]), P([0, 1])]
        b = mixed_basis(3, 3)
        # g-block is {g_3} alone, with constant term C(3, 2)
        assert b.n_g == 1
        assert b.elements[0] == P([3, -3, 1])
        assert list(b.elements[1:]) == [P([0, 1]), P([0, 0, 1])]

    def test_coordinates_of_one(self):
        b = mixed_basis(2, 3)
        assert list(b.elements) == [gk_polynomial(2, 2), gk_polynomial(3, 2), P([0, 0, 1])]
        assert express_in_basis(P([1]), b) == [F(1, 2), F(1, 6), F(1, 3)]
        assert express_in_basis(gk_polynomial(2, 2), b) == [1, 0, 0]
        assert express_in_basis(P([0, 0, F(7, 3)]), b) == [0, 0, F(7, 3)]

    @settings(max_examples=40)
    @given(st.integers(2, 5), st.integers(0, 4), st.data())
    def test_coordinates_recombine(self, r, extra, data):
        b = mixed_basis(r, r + extra)
        p = P(data.draw(st.lists(small_fracs, max_size=b.m)))
        assert b.combine(express_in_basis(p, b)) == p

    def test_too_high_degree(self):
        with pytest.raises(ValueError):
            express_in_basis(P([0, 0, 0, 1]), mixed_basis(2, 3))

    def test_singular_solve(self):
        with pytest.raises(ZeroDivisionError):
            solve_linear([[1, 2], [2, 4]], [1, 1])


class TestRoots:
    def test_no_roots(self):
        assert isolate_roots(P([2, -1]), 0, 1) == []

    def test_derivative_of_two_plus_five(self):
        g = P([F(6, 5), F(-3, 5), 0, 2, F(-8, 5)])
        roots = isolate_roots(g.derivative(), 0, 1, width=F(1, 10**6))
        assert len(roots) == 2
        oracle = sorted(float(r) for r in sp.Poly(to_sympy(g.derivative()), X).real_roots() if 0 <= r <= 1)
        for iv, ref in zip(roots, oracle):
            assert iv.width <= F(1, 10**6)
            assert iv.lo <= F(ref) <= iv.hi or abs(float(iv.midpoint) - ref) < 1e-9
        assert float(roots[0].midpoint) == pytest.approx(0.42966, abs=1e-5)
        assert float(roots[1].midpoint) == pytest.approx(0.78559, abs=1e-5)

    def test_double_root(self):
        p = P.from_roots([F(1, 10)], [2])
        (iv,) = isolate_roots(p, 0, 1)
        assert iv.multiplicity == 2
        assert rational_root_in(iv) == F(1, 10)
        assert square_free_decomposition(p) == [(P([F(-1, 10), 1]), 2)]

    def test_irrational_root_is_not_rational(self):
        (iv,) = isolate_roots(P([-2, 0, 1]), 0, 2)
        assert rational_root_in(iv) is None
        assert float(refine_root(iv, F(1, 10**12)).midpoint) == pytest.approx(2**0.5, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(nonzero_polys)
    def test_count_matches_sympy(self, p):
        if p.degree < 1:
            return
        distinct = {r for r in sp.Poly(to_sympy(p), X).real_roots() if 0 <= r <= 1}
        ivs = isolate_roots(p, 0, 1)
        assert len(ivs) == len(distinct)
        for a, b in zip(ivs, ivs[1:]):
            assert a.hi < b.lo
        # half-open count agrees on (0, 1]
        assert count_roots(p, 0, 1) == len({r for r in distinct if r > 0})

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.fractions(0, 1, max_denominator=9), min_size=1, max_size=3, unique=True), st.data())
    def test_rational_roots_recovered(self, roots, data):
        mults = data.draw(st.lists(st.integers(1, 3), min_size=len(roots), max_size=len(roots)))
        p = P.from_roots(roots, mults) * F(3, 7)
        ivs = isolate_roots(p, 0, 1)
        assert sorted(rational_root_in(iv) for iv in ivs) == sorted(roots)
        assert sorted((rational_root_in(iv), iv.multiplicity) for iv in ivs) == sorted(zip(roots, mults))

    def test_positivity(self):
        assert is_positive_on(P([1, F(-1, 3)]))
        assert not is_positive_on(P([1, -1]))
        assert not is_positive_on(P.from_roots([F(1, 2)], [2]))
