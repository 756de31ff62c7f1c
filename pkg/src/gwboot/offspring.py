"""Offspring laws for the Galton-Watson tree and the functions h and g they induce.

An :class:`OffspringDistribution` carries the infection threshold ``r`` and
either a finite table of exact weights or the one built-in infinite family
``xi_k = (r-1)/(k(k-1))``. For finite tables ``g_xi = sum_k xi_k g_k`` is an
exact :class:`~gwboot.ratpoly.RationalPolynomial`; for the infinite family
it is evaluated as a truncated series with a rigorous tail bound.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping

from .ratpoly import RationalPolynomial, gk_polynomial, to_fraction

__all__ = [
    "OffspringDistribution",
    "UnnormalizedWeights",
    "UnsupportedError",
    "delta",
    "telescoping_law",
    "eval_h_k",
    "eval_g",
    "eval_g_series",
    "chi_weights",
    "normalize",
    "truncation_bound",
    "tail_mass",
]

TELESCOPING = "claim39"  # JSON family tag
MAX_SERIES_TERMS = 10**7


class UnsupportedError(ValueError):
    """Raised when a quantity has no available closed form."""


def _check_prob(name: str, v) -> None:
    if not 0 <= v <= 1:
        raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class UnnormalizedWeights:
    """Nonnegative finitely supported weights ``{k: w_k}`` on ``k >= r``."""

    r: int
    weights: Mapping[int, Fraction]

    def __post_init__(self):
        if self.r < 2:
            raise ValueError("threshold r must be at least 2")
        clean = {}
        for k, w in sorted(self.weights.items()):
            k, w = int(k), to_fraction(w)
            if k < self.r and w != 0:
                raise ValueError(f"weight on k={k} < r={self.r}")
            if w < 0:
                raise ValueError(f"negative weight {w} at k={k}")
            if w != 0:
                clean[k] = w
        object.__setattr__(self, "weights", clean)

    @property
    def mass(self) -> Fraction:
        return sum(self.weights.values(), Fraction(0))

    @cached_property
    def g_poly(self) -> RationalPolynomial:
        """``sum_k w_k g_k`` (not divided by the mass)."""
        out = RationalPolynomial()
        for k, w in self.weights.items():
            out = out + gk_polynomial(k, self.r) * w
        return out


@dataclass(frozen=True)
class OffspringDistribution:
    """Child-count law ``xi`` with infection threshold ``r``.

    Parameters
    ----------
    r : int
        Infection threshold, at least 2.
    support : mapping, optional
        ``{k: xi_k}`` with exact rational weights summing to one.
    family : str, optional
        ``"claim39"`` (the telescoping family) for ``xi_k = (r-1)/(k(k-1))``, ``k >= r``.
    """

    r: int
    support: Mapping[int, Fraction] | None = None
    family: str | None = None

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 2:
            raise ValueError(f"threshold r must be an integer >= 2, got {self.r}")
        if (self.support is None) == (self.family is None):
            raise ValueError("give exactly one of support or family")
        if self.family is not None:
            if self.family != TELESCOPING:
                raise ValueError(f"unknown family {self.family!r}")
            return
        clean: dict[int, Fraction] = {}
        for k, w in sorted(self.support.items(), key=lambda kv: int(kv[0])):
            k, w = int(k), to_fraction(w)
            if w < 0:
                raise ValueError(f"negative probability {w} at k={k}")
            if w == 0:
                continue
            if k < self.r:
                raise ValueError(f"xi_{k} > 0 but k < r={self.r}")
            clean[k] = w
        total = sum(clean.values(), Fraction(0))
        if total != 1:
            raise ValueError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "support", clean)

    # structure
    @property
    def is_finite(self) -> bool:
        return self.support is not None

    @property
    def simulation_safe(self) -> bool:
        """False for laws with infinite mean (the telescoping family)."""
        return self.is_finite

    @property
    def max_k(self) -> int | None:
        return max(self.support) if self.is_finite else None

    @property
    def mean(self) -> float:
        if not self.is_finite:
            return math.inf
        return float(sum(k * w for k, w in self.support.items()))

    def prob(self, k: int) -> Fraction:
        if self.is_finite:
            return self.support.get(k, Fraction(0))
        if k < self.r:
            return Fraction(0)
        return Fraction(self.r - 1, k * (k - 1))

    @cached_property
    def g_poly(self) -> RationalPolynomial:
        """Exact ``g_xi`` for finite support."""
        if not self.is_finite:
            raise UnsupportedError("g_xi is not a polynomial for infinite support")
        out = RationalPolynomial()
        for k, w in self.support.items():
            out = out + gk_polynomial(k, self.r) * w
        return out

    def h_poly(self, q) -> RationalPolynomial:
        """Exact ``h_xi(x) = q x g_xi(x)``."""
        return self.g_poly * RationalPolynomial([0, to_fraction(q)])

    # serialization
    def to_json(self) -> dict:
        if self.is_finite:
            return {
                "r": self.r,
                "support": {str(k): f"{w.numerator}/{w.denominator}" for k, w in self.support.items()},
            }
        return {"r": self.r, "family": self.family}

    @classmethod
    def from_json(cls, obj) -> "OffspringDistribution":
        if isinstance(obj, str):
            obj = json.loads(obj)
        unknown = set(obj) - {"r", "support", "family"}
        if unknown:
            raise ValueError(f"unknown keys in distribution: {sorted(unknown)}")
        if "family" in obj:
            return cls(r=int(obj["r"]), family=obj["family"])
        return cls(r=int(obj["r"]), support={int(k): Fraction(v) for k, v in obj["support"].items()})

    def __str__(self) -> str:
        if not self.is_finite:
            return f"telescoping_law(r={self.r})"
        body = ", ".join(f"{k}: {w}" for k, w in self.support.items())
        return f"xi(r={self.r}; {body})"


def delta(k: int, r: int = 2) -> OffspringDistribution:
    """Point mass on ``k`` children (the regular tree)."""
    return OffspringDistribution(r=r, support={k: Fraction(1)})


def telescoping_law(r: int = 2) -> OffspringDistribution:
    """The infinite law ``xi_k = (r-1)/(k(k-1))`` for ``k >= r``; its ``g`` is identically 1."""
    return OffspringDistribution(r=r, family=TELESCOPING)


# evaluation


def eval_h_k(k: int, r: int, q, x):
    """``h_k(x) = q P[Bin(k, 1-x) <= r-1]``, exact for rational inputs."""
    if k < r or r < 2:
        raise ValueError(f"need k >= r >= 2, got k={k}, r={r}")
    _check_prob("q", q)
    _check_prob("x", x)
    if isinstance(q, float) or isinstance(x, float):
        q, x = float(q), float(x)
        return q * x * gk_polynomial(k, r).eval_float(x)
    q, x = to_fraction(q), to_fraction(x)
    return q * x * gk_polynomial(k, r)(x)


def tail_mass(r: int, n: int) -> Fraction:
    """``sum_{k > n} (r-1)/(k(k-1)) = (r-1)/n`` for the telescoping family (``n >= r-1``)."""
    return Fraction(r - 1, max(n, r - 1))


def truncation_bound(xi: OffspringDistribution, tol, x_min) -> int:
    """Smallest ``N`` with ``T(N) / x_min <= tol``, using ``0 <= g_k(x) <= 1/x``."""
    if xi.is_finite:
        return xi.max_k
    tol, x_min = to_fraction(tol), to_fraction(x_min)
    if tol <= 0 or x_min <= 0:
        raise ValueError("tol and x_min must be positive")
    n = math.ceil((xi.r - 1) / (tol * x_min))
    return max(n, xi.r)


def _gk_values_float(x: float, r: int, n_max: int):
    """``g_k(x)`` for ``k = r..n_max`` in floating point via the binomial pmf recursion."""
    import numpy as np
    from scipy.stats import binom

    ks = np.arange(r, n_max + 1)
    return binom.cdf(r - 1, ks, 1.0 - x) / x


def eval_g_series(xi: OffspringDistribution, x, n: int):
    """Partial sum ``sum_{k <= n} xi_k g_k(x)`` and the rigorous tail bound ``T(n)/x``."""
    if xi.is_finite:
        return eval_g(xi, x, tol=0), 0.0
    xf = float(x)
    if not 0 < xf <= 1:
        raise ValueError("series evaluation needs 0 < x <= 1")
    import numpy as np

    ks = np.arange(xi.r, n + 1)
    weights = (xi.r - 1) / (ks * (ks - 1.0))
    partial = float(np.sum(weights * _gk_values_float(xf, xi.r, n)))
    return partial, float(tail_mass(xi.r, n)) / xf


def eval_g(xi: OffspringDistribution, x, tol=1e-6):
    """``g_xi(x)`` within ``tol``; exact for finite support and rational ``x``.

    For the telescoping family the limit at ``x = 0`` is its closed form 1.
    """
    if xi.is_finite:
        if isinstance(x, float):
            _check_prob("x", x)
            return xi.g_poly.eval_float(x)
        x = to_fraction(x)
        _check_prob("x", x)
        return xi.g_poly(x)
    _check_prob("x", float(x))
    if float(x) == 0:
        if xi.family == TELESCOPING:
            return 1.0
        raise UnsupportedError("g_xi(0) has no closed form for this family")
    if tol <= 0:
        raise ValueError("tol must be positive for series evaluation")
    n = truncation_bound(xi, tol, x)
    if n > MAX_SERIES_TERMS:
        raise ValueError(f"tolerance {tol} at x={x} needs {n} series terms (cap {MAX_SERIES_TERMS})")
    partial, bound = eval_g_series(xi, x, n)
    return partial + bound / 2


def chi_weights(r: int, nu: int) -> UnnormalizedWeights:
    """``chi_k = (r-1)/(k(k-1))`` for ``r <= k <= nu+r-1``, zero beyond."""
    if r < 2 or nu < 1:
        raise ValueError(f"need r >= 2 and nu >= 1, got r={r}, nu={nu}")
    return UnnormalizedWeights(r, {k: Fraction(r - 1, k * (k - 1)) for k in range(r, nu + r)})


def normalize(w: UnnormalizedWeights) -> OffspringDistribution:
    mass = w.mass
    if mass <= 0:
        raise ValueError("weights have no positive mass")
    return OffspringDistribution(r=w.r, support={k: v / mass for k, v in w.weights.items()})
