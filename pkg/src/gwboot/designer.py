"""Construct offspring laws with a prescribed critical behaviour.

Continuous mode: ``chi_k = (r-1)/(k(k-1))`` on ``r <= k <= nu+r-1`` gives
``g_chi = 1 - x^nu P(x)`` with ``P > 0`` on [0, 1], so the transition is
continuous with exponent ``nu``.

Metastable mode: for plateau orders ``(nu_1, ..., nu_n)`` and levels
``x_1 > ... > x_n`` the weights ``chi_bar`` and the polynomial ``P_bar`` of
degree ``r-2`` solve ``sum_k chi_bar_k g_k = 1 - prod (x - x_i)^(2 nu_i) P_bar``.
The solve is a projection onto the monomial block of the mixed basis; the
result is accepted only with exact positivity certificates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Sequence

from .offspring import OffspringDistribution, UnnormalizedWeights, chi_weights, normalize
from .ratpoly import (
    RationalPolynomial,
    RootInterval,
    express_in_basis,
    isolate_roots,
    mixed_basis,
    solve_linear,
    to_fraction,
)

__all__ = [
    "DesignResult",
    "Certificate",
    "CertificateError",
    "SingularSystemError",
    "SearchExhaustedError",
    "design_continuous",
    "projection_solve",
    "design_metastable",
    "certify_positive",
    "MAX_SHRINK_STEPS",
]

MAX_SHRINK_STEPS = 64


class CertificateError(ValueError):
    """A positivity condition failed; ``violations`` lists which."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class SingularSystemError(ZeroDivisionError):
    pass


class SearchExhaustedError(RuntimeError):
    pass


@dataclass
class Certificate:
    """Exact evidence for the positivity conditions.

    ``p_at_zero`` is ``P(0)``, ``roots_in_unit`` the isolating intervals of
    roots of ``P`` in [0, 1] (empty for a valid certificate) and
    ``weights_positive`` whether every ``chi_k > 0``.
    """

    p_at_zero: Fraction
    roots_in_unit: list[RootInterval]
    weights_positive: bool
    min_weight: Fraction
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "P_at_0": _s(self.p_at_zero),
            "roots_of_P_in_[0,1]": [[_s(iv.lo), _s(iv.hi)] for iv in self.roots_in_unit],
            "weights_positive": self.weights_positive,
            "min_weight": _s(self.min_weight),
            "violations": self.violations,
        }


def _s(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def certify_positive(p: RationalPolynomial) -> tuple[bool, list[RootInterval]]:
    """``p > 0`` on [0, 1] exactly: ``p(0) > 0`` and no root in [0, 1]."""
    if p.is_zero():
        return False, []
    roots = isolate_roots(p, 0, 1)
    return p(Fraction(0)) > 0 and not roots, roots


@dataclass
class DesignResult:
    xi: OffspringDistribution
    chi: UnnormalizedWeights
    q_c: Fraction
    x_list: tuple[Fraction, ...]
    nu_list: tuple[int, ...]
    P: RationalPolynomial
    g_chi: RationalPolynomial
    factor: RationalPolynomial
    certificate: Certificate
    shrink_steps: int = 0

    def identity_residual(self) -> RationalPolynomial:
        """``g_chi + factor * P - 1``; the zero polynomial for a valid design."""
        return self.g_chi + self.factor * self.P - 1

    def to_json(self) -> dict:
        return {
            "xi": self.xi.to_json(),
            "chi": {str(k): _s(w) for k, w in self.chi.weights.items()},
            "q_c": _s(self.q_c),
            "x_list": [_s(x) for x in self.x_list],
            "nu_list": list(self.nu_list),
            "P": {"coeffs": self.P.to_strings()},
            "g_chi": {"coeffs": self.g_chi.to_strings()},
            "factor": {"coeffs": self.factor.to_strings()},
            "certificate": self.certificate.to_json(),
            "shrink_steps": self.shrink_steps,
        }


def _certificate(P: RationalPolynomial, chi: UnnormalizedWeights, n_terms: int, strict: bool) -> Certificate:
    pos, roots = certify_positive(P)
    weights = [chi.weights.get(k, Fraction(0)) for k in range(chi.r, chi.r + n_terms)]
    min_w = min(weights)
    violations = []
    if P(Fraction(0)) <= 0:
        violations.append(f"P(0) = {P(Fraction(0))} is not positive")
    if roots:
        violations.append(f"P has {len(roots)} root(s) in [0, 1]")
    if strict and min_w <= 0:
        violations.append(f"min chi_k = {min_w} is not positive")
    elif min_w < 0:
        violations.append(f"min chi_k = {min_w} is negative")
    return Certificate(P(Fraction(0)), roots, min_w > 0, min_w, violations)


def design_continuous(r: int, nu: int) -> DesignResult:
    """Law with a continuous transition and critical exponent ``nu``."""
    chi = chi_weights(r, nu)
    g_chi = chi.g_poly
    one_minus = RationalPolynomial([1]) - g_chi
    P = one_minus.shift_down(nu)
    if P.degree > r - 2:
        raise AssertionError(f"P has degree {P.degree} > r-2")
    expected_p0 = Fraction(r - 1, (nu + r) * (nu + r - 1)) * comb(nu + r, r - 1)
    if P(Fraction(0)) != expected_p0:
        raise AssertionError(f"P(0) = {P(Fraction(0))}, expected {expected_p0}")
    cert = _certificate(P, chi, nu, strict=True)
    if not cert.ok:
        raise CertificateError("continuous design failed its certificate", cert.violations)
    return DesignResult(
        xi=normalize(chi),
        chi=chi,
        q_c=chi.mass,
        x_list=(),
        nu_list=(nu,),
        P=P,
        g_chi=g_chi,
        factor=RationalPolynomial.monomial(nu),
        certificate=cert,
    )


def _product(x_list, nu_list) -> RationalPolynomial:
    return RationalPolynomial.from_roots(x_list, [2 * n for n in nu_list])


def projection_solve(r: int, nu_list: Sequence[int], x_list: Sequence) -> tuple[RationalPolynomial, UnnormalizedWeights]:
    """Solve ``Pr M P_bar = Pr 1`` exactly.

    ``M`` multiplies by ``prod (x - x_i)^(2 nu_i)`` and ``Pr`` keeps the
    monomial-block coordinates in the mixed basis of degree ``nu + r - 2``.

    Returns
    -------
    P_bar : RationalPolynomial
        Degree at most ``r - 2``.
    chi_bar : UnnormalizedWeights
        The g-block coordinates of ``1 - M P_bar``.

    Raises
    ------
    SingularSystemError
        When ``Pr o M`` is not invertible at these levels.
    ValueError
        If some ``chi_bar_k`` comes out negative (it cannot be a weight).
    """
    nu_list = [int(n) for n in nu_list]
    x_list = [to_fraction(x) for x in x_list]
    if len(nu_list) != len(x_list):
        raise ValueError("nu_list and x_list must have equal length")
    if any(n < 1 for n in nu_list):
        raise ValueError("plateau orders must be positive integers")
    nu = 2 * sum(nu_list)
    m = nu + r - 1
    basis = mixed_basis(r, m)
    n_g = basis.n_g
    M = _product(x_list, nu_list)
    # columns: monomial-block coordinates of M * x^j, j = 0..r-2
    cols = []
    for j in range(r - 1):
        coords = express_in_basis(M * RationalPolynomial.monomial(j), basis)
        cols.append(coords[n_g:])
    A = [[cols[j][i] for j in range(r - 1)] for i in range(r - 1)]
    b = express_in_basis(RationalPolynomial([1]), basis)[n_g:]
    try:
        a = solve_linear(A, b)
    except ZeroDivisionError as exc:
        raise SingularSystemError(f"Pr o M is singular at x={x_list}") from exc
    P_bar = RationalPolynomial(a)
    rest = RationalPolynomial([1]) - M * P_bar
    coords = express_in_basis(rest, basis)
    if any(c != 0 for c in coords[n_g:]):
        raise AssertionError("projection solve left a monomial component")
    weights = {r + i: coords[i] for i in range(n_g)}
    if any(w < 0 for w in weights.values()):
        neg = {k: w for k, w in weights.items() if w < 0}
        raise CertificateError(f"negative weights {neg}", [f"chi_{k} = {w} < 0" for k, w in neg.items()])
    chi = UnnormalizedWeights(r, weights)
    # exact re-expansion of the identity
    if chi.g_poly + M * P_bar != RationalPolynomial([1]):
        raise AssertionError("factored identity does not re-expand to 1")
    return P_bar, chi


def _result(r, nu_list, x_list, P_bar, chi, strict, steps=0) -> DesignResult:
    nu = 2 * sum(nu_list)
    cert = _certificate(P_bar, chi, nu, strict=strict)
    if not cert.ok:
        raise CertificateError(f"certificate failed at x={list(map(str, x_list))}", cert.violations)
    return DesignResult(
        xi=normalize(chi),
        chi=chi,
        q_c=chi.mass,
        x_list=tuple(x_list),
        nu_list=tuple(nu_list),
        P=P_bar,
        g_chi=chi.g_poly,
        factor=_product(x_list, nu_list),
        certificate=cert,
        shrink_steps=steps,
    )


def design_metastable(r: int, nu_list: Sequence[int], x_list: Sequence | None = None) -> DesignResult:
    """Law whose critical point is ``(nu_1, ..., nu_n)``-metastable.

    With ``x_list`` the construction is attempted there and must pass its
    certificates. Without it, levels ``s * (n+1-i)/(10 n)`` are tried for
    ``s = 1, 1/2, 1/4, ...`` until both certificates pass.
    """
    if r < 2:
        raise ValueError("threshold r must be at least 2")
    nu_list = [int(n) for n in nu_list]
    if not nu_list or any(n < 1 for n in nu_list):
        raise ValueError("plateau orders must be positive integers")
    n = len(nu_list)
    if x_list is not None:
        xs = [to_fraction(x) for x in x_list]
        if len(xs) != n:
            raise ValueError("x_list and nu_list must have equal length")
        if any(not 0 <= x < 1 for x in xs) or any(a <= b for a, b in zip(xs, xs[1:])):
            if not all(x == 0 for x in xs):
                raise ValueError("x_list must be strictly decreasing in (0, 1)")
        all_zero = all(x == 0 for x in xs)
        if all_zero and n > 1:
            raise ValueError("repeated zero levels: use a single level with summed order")
        P_bar, chi = projection_solve(r, nu_list, xs)
        return _result(r, nu_list, xs, P_bar, chi, strict=not all_zero)

    seed = [Fraction(n + 1 - i, 10 * n) for i in range(1, n + 1)]
    scale = Fraction(1)
    last_error: Exception | None = None
    for step in range(MAX_SHRINK_STEPS + 1):
        xs = [scale * s for s in seed]
        try:
            P_bar, chi = projection_solve(r, nu_list, xs)
            return _result(r, nu_list, xs, P_bar, chi, strict=True, steps=step)
        except (CertificateError, SingularSystemError) as exc:
            last_error = exc
        scale /= 2
    raise SearchExhaustedError(
        f"no certified design after {MAX_SHRINK_STEPS} halvings (last: {last_error})"
    )
