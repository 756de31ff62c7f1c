"""Exact univariate polynomials over the rationals.

Coefficients are stored densely as :class:`fractions.Fraction` objects,
lowest degree first. Besides ring arithmetic the module provides the
threshold polynomials ``g_k``, the mixed basis ``g_r, ..., g_m, x^(m-r+1),
..., x^(m-1)``, exact linear solves, square-free decomposition and real-root
isolation by Sturm sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Iterable, Sequence, Union

__all__ = [
    "RationalPolynomial",
    "RootInterval",
    "PolyBasis",
    "to_fraction",
    "gk_polynomial",
    "mixed_basis",
    "express_in_basis",
    "solve_linear",
    "square_free_decomposition",
    "sturm_sequence",
    "count_roots",
    "isolate_roots",
    "refine_root",
    "rational_root_in",
    "is_positive_on",
]

Number = Union[int, Fraction]


def to_fraction(value) -> Fraction:
    """Convert ints, Fractions, "num/den" strings and decimal strings exactly.

    Floats are converted through their shortest ``repr`` so that ``0.9``
    becomes ``9/10`` rather than its binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(float.__repr__(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    # gmpy2 mpq / numpy integers and the like
    return Fraction(str(value))


class RationalPolynomial:
    """Dense polynomial with exact rational coefficients.

    ``coeffs[i]`` is the coefficient of ``x**i``. Trailing zeros are stripped
    so the zero polynomial has an empty coefficient list and degree -1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [to_fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(cs)

    # construction helpers
    @classmethod
    def constant(cls, c) -> "RationalPolynomial":
        return cls([c])

    @classmethod
    def monomial(cls, degree: int, c=1) -> "RationalPolynomial":
        return cls([0] * degree + [c])

    @classmethod
    def x(cls) -> "RationalPolynomial":
        return cls([0, 1])

    @classmethod
    def from_roots(cls, roots: Iterable, multiplicities: Iterable[int] | None = None):
        roots = list(roots)
        mults = [1] * len(roots) if multiplicities is None else list(multiplicities)
        out = cls([1])
        for root, m in zip(roots, mults):
            out = out * cls([-to_fraction(root), 1]) ** m
        return out

    # basic properties
    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def leading(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def lowest_degree(self) -> int:
        """Index of the lowest nonzero coefficient (-1 for the zero polynomial)."""
        for i, c in enumerate(self.coeffs):
            if c != 0:
                return i
        return -1

    def coeff(self, i: int) -> Fraction:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Fraction(0)

    def __len__(self) -> int:
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, RationalPolynomial):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self.coeffs == RationalPolynomial([other]).coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __repr__(self) -> str:
        return f"RationalPolynomial([{', '.join(str(c) for c in self.coeffs)}])"

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            mono = "" if i == 0 else ("x" if i == 1 else f"x^{i}")
            if i and abs(c) == 1:
                term = mono
            elif i:
                term = f"({abs(c)})*{mono}" if c.denominator != 1 else f"{abs(c)}*{mono}"
            else:
                term = str(abs(c))
            terms.append(("-" if c < 0 else "+", term))
        head_sign, head = terms[0]
        out = ("-" if head_sign == "-" else "") + head
        for sign, term in terms[1:]:
            out += f" {sign} {term}"
        return out

    # arithmetic
    @staticmethod
    def _coerce(other) -> "RationalPolynomial":
        if isinstance(other, RationalPolynomial):
            return other
        return RationalPolynomial([other])

    def __add__(self, other) -> "RationalPolynomial":
        other = self._coerce(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return RationalPolynomial(self.coeff(i) + other.coeff(i) for i in range(n))

    __radd__ = __add__

    def __neg__(self) -> "RationalPolynomial":
        return RationalPolynomial(-c for c in self.coeffs)

    def __sub__(self, other) -> "RationalPolynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "RationalPolynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "RationalPolynomial":
        if not isinstance(other, RationalPolynomial):
            c = to_fraction(other)
            return RationalPolynomial(c * a for a in self.coeffs)
        if self.is_zero() or other.is_zero():
            return RationalPolynomial()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return RationalPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "RationalPolynomial":
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        result = RationalPolynomial([1])
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __truediv__(self, other) -> "RationalPolynomial":
        if isinstance(other, RationalPolynomial):
            q, r = self.divmod(other)
            if not r.is_zero():
                raise ValueError("polynomial division is not exact")
            return q
        c = to_fraction(other)
        return RationalPolynomial(a / c for a in self.coeffs)

    def divmod(self, other: "RationalPolynomial"):
        """Euclidean division, returns ``(quotient, remainder)``."""
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return RationalPolynomial(), self
        quot = [Fraction(0)] * (dq + 1)
        lead = other.coeffs[-1]
        for k in range(dq, -1, -1):
            c = rem[k + len(other.coeffs) - 1] / lead
            quot[k] = c
            if c:
                for j, b in enumerate(other.coeffs):
                    rem[k + j] -= c * b
        return RationalPolynomial(quot), RationalPolynomial(rem[: len(other.coeffs) - 1])

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def __mod__(self, other):
        return self.divmod(other)[1]

    def shift_down(self, k: int) -> "RationalPolynomial":
        """Exact division by ``x**k``; the low coefficients must vanish."""
        if any(c != 0 for c in self.coeffs[:k]):
            raise ValueError(f"polynomial is not divisible by x^{k}")
        return RationalPolynomial(self.coeffs[k:])

    # calculus and evaluation
    def derivative(self, order: int = 1) -> "RationalPolynomial":
        cs = list(self.coeffs)
        for _ in range(order):
            cs = [i * c for i, c in enumerate(cs)][1:]
        return RationalPolynomial(cs)

    def __call__(self, x):
        """Horner evaluation; exact for rational ``x``, otherwise in x's type."""
        if isinstance(x, (int, Fraction, str)):
            x = to_fraction(x)
            acc = Fraction(0)
            for c in reversed(self.coeffs):
                acc = acc * x + c
            return acc
        if isinstance(x, float):
            return self.eval_float(x)
        import gmpy2

        acc = 0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + gmpy2.mpq(c.numerator, c.denominator)
        return acc

    def eval_float(self, x: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + float(c)
        return acc

    def taylor_coefficient(self, order: int, at) -> Fraction:
        """``p^(order)(at) / order!`` computed exactly."""
        return self.derivative(order)(to_fraction(at)) / factorial(order)

    def compose_affine(self, a, b) -> "RationalPolynomial":
        """Return ``p(a*x + b)``."""
        lin = RationalPolynomial([b, a])
        out = RationalPolynomial()
        for c in reversed(self.coeffs):
            out = out * lin + c
        return out

    def monic(self) -> "RationalPolynomial":
        if self.is_zero():
            return self
        return self / self.leading

    def primitive_integer_coeffs(self) -> list[int]:
        """Integer coefficients of a positive rational multiple with content 1."""
        from math import gcd, lcm

        if self.is_zero():
            return []
        den = 1
        for c in self.coeffs:
            den = lcm(den, c.denominator)
        ints = [int(c * den) for c in self.coeffs]
        g = 0
        for v in ints:
            g = gcd(g, v)
        return [v // g for v in ints]

    def to_strings(self) -> list[str]:
        return [f"{c.numerator}/{c.denominator}" for c in self.coeffs]

    @classmethod
    def from_strings(cls, items: Sequence[str]) -> "RationalPolynomial":
        return cls(Fraction(s) for s in items)


def poly_gcd(a: RationalPolynomial, b: RationalPolynomial) -> RationalPolynomial:
    """Monic greatest common divisor (zero if both inputs are zero)."""
    while not b.is_zero():
        a, b = b, a % b
    return a.monic()


# threshold polynomials and the mixed basis


def gk_polynomial(k: int, r: int) -> RationalPolynomial:
    """``g_k(x) = sum_{i<r} C(k,i) (1-x)^i x^(k-i-1)`` for the threshold ``r``.

    This is ``P[Bin(k, 1-x) <= r-1] / x`` written as a polynomial.
    """
    if r < 2 or k < r:
        raise ValueError(f"need k >= r >= 2, got k={k}, r={r}")
    one_minus_x = RationalPolynomial([1, -1])
    out = RationalPolynomial()
    for i in range(r):
        out = out + comb(k, i) * one_minus_x**i * RationalPolynomial.monomial(k - i - 1)
    return out


def solve_linear(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> list[Fraction]:
    """Solve ``matrix @ x = rhs`` exactly by Gauss-Jordan elimination.

    Raises
    ------
    ZeroDivisionError
        If the matrix is singular.
    """
    n = len(matrix)
    aug = [[to_fraction(v) for v in row] + [to_fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        pivot = next((i for i in range(col, n) if aug[i][col] != 0), None)
        if pivot is None:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [vi - f * vc for vi, vc in zip(aug[i], aug[col])]
    return [row[n] for row in aug]


def _invert(matrix: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    n = len(matrix)
    cols = [solve_linear(matrix, [Fraction(int(i == j)) for i in range(n)]) for j in range(n)]
    return [[cols[j][i] for j in range(n)] for i in range(n)]


@dataclass(frozen=True)
class PolyBasis:
    """The basis ``g_r, ..., g_m, x^(m-r+1), ..., x^(m-1)`` of polynomials of degree < m.

    ``matrix[i][j]`` is the coefficient of ``x^j`` in element ``i``; it is
    upper triangular with a nonzero diagonal. ``inverse`` maps monomial
    coordinates back to coordinates in this basis.
    """

    r: int
    m: int
    elements: tuple[RationalPolynomial, ...]
    matrix: tuple[tuple[Fraction, ...], ...]
    inverse: tuple[tuple[Fraction, ...], ...]

    @property
    def dimension(self) -> int:
        return self.m

    @property
    def n_g(self) -> int:
        """Number of leading g-polynomials in the basis."""
        return self.m - self.r + 1

    def combine(self, coords: Sequence) -> RationalPolynomial:
        out = RationalPolynomial()
        for c, e in zip(coords, self.elements):
            out = out + e * to_fraction(c)
        return out


def mixed_basis(r: int, m: int) -> PolyBasis:
    if r < 2 or m < r:
        raise ValueError(f"need m >= r >= 2, got r={r}, m={m}")
    elements = [gk_polynomial(k, r) for k in range(r, m + 1)]
    elements += [RationalPolynomial.monomial(j) for j in range(m - r + 1, m)]
    matrix = [[e.coeff(j) for j in range(m)] for e in elements]
    for i in range(m):
        if matrix[i][i] == 0 or any(matrix[i][j] != 0 for j in range(i)):
            raise AssertionError("mixed basis matrix is not upper triangular")
    inverse = _invert(matrix)
    return PolyBasis(
        r=r,
        m=m,
        elements=tuple(elements),
        matrix=tuple(tuple(row) for row in matrix),
        inverse=tuple(tuple(row) for row in inverse),
    )


def express_in_basis(p: RationalPolynomial, basis: PolyBasis) -> list[Fraction]:
    """Coordinates ``c`` with ``sum_i c_i * basis.elements[i] == p``."""
    if p.degree > basis.m - 1:
        raise ValueError(f"degree {p.degree} exceeds basis range {basis.m - 1}")
    row = [p.coeff(j) for j in range(basis.m)]
    # c @ matrix = row  =>  c = row @ inverse
    return [
        sum((row[j] * basis.inverse[j][i] for j in range(basis.m)), Fraction(0))
        for i in range(basis.m)
    ]


# square-free decomposition and root isolation


def square_free_decomposition(p: RationalPolynomial) -> list[tuple[RationalPolynomial, int]]:
    """Yun's algorithm: ``p = c * prod f_i^i`` with pairwise coprime square-free ``f_i``.

    Returns the nonconstant factors with their multiplicities.
    """
    if p.is_zero():
        raise ValueError("zero polynomial has no square-free decomposition")
    out: list[tuple[RationalPolynomial, int]] = []
    if p.degree < 1:
        return out
    dp = p.derivative()
    a = poly_gcd(p, dp)
    b = p // a
    c = dp // a
    d = c - b.derivative()
    i = 1
    while b.degree > 0:
        f = poly_gcd(b, d)
        if f.degree > 0:
            out.append((f, i))
        b = b // f
        c = d // f
        d = c - b.derivative()
        i += 1
    return out


def sturm_sequence(p: RationalPolynomial) -> list[RationalPolynomial]:
    seq = [p, p.derivative()]
    while not seq[-1].is_zero():
        nxt = -(seq[-2] % seq[-1])
        if nxt.is_zero():
            break
        seq.append(nxt)
    return [s for s in seq if not s.is_zero()]


def _sign_changes(seq: Sequence[RationalPolynomial], x: Fraction) -> int:
    signs = [v for v in (s(x) for s in seq) if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a < 0) != (b < 0))


def count_roots(p: RationalPolynomial, lo, hi, seq=None) -> int:
    """Number of distinct real roots of ``p`` in the half-open interval ``(lo, hi]``."""
    seq = seq or sturm_sequence(p)
    return _sign_changes(seq, to_fraction(lo)) - _sign_changes(seq, to_fraction(hi))


@dataclass(frozen=True)
class RootInterval:
    """Closed interval ``[lo, hi]`` holding exactly one real root of multiplicity ``multiplicity``.

    ``factor`` is the square-free factor of which the root is a simple root,
    so the sign of ``factor`` changes strictly across the interval unless
    ``lo == hi`` (an exactly located rational root).
    """

    lo: Fraction
    hi: Fraction
    multiplicity: int = 1
    factor: RationalPolynomial = field(default=None, repr=False, compare=False)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    def __float__(self) -> float:
        return float(self.midpoint)


def _isolate_square_free(f: RationalPolynomial, lo: Fraction, hi: Fraction, mult: int):
    seq = sturm_sequence(f)
    out: list[RootInterval] = []
    if f(lo) == 0:
        out.append(RootInterval(lo, lo, mult, f))
    stack = [(lo, hi)]
    while stack:
        a, b = stack.pop()
        n = count_roots(f, a, b, seq)
        if n == 0:
            continue
        if n == 1:
            if f(b) == 0:
                out.append(RootInterval(b, b, mult, f))
                continue
            # the count is over (a, b]; if a is itself a root, move a off it
            while f(a) == 0:
                mid = (a + b) / 2
                if f(mid) == 0:
                    a = b = mid
                    break
                if count_roots(f, a, mid, seq) == 1:
                    b = mid
                else:
                    a = mid
            out.append(RootInterval(a, b, mult, f))
            continue
        mid = (a + b) / 2
        stack.append((a, mid))
        stack.append((mid, b))
    return out


def _bisect_once(iv: RootInterval) -> RootInterval:
    if iv.is_exact:
        return iv
    f = iv.factor
    mid = iv.midpoint
    fm = f(mid)
    if fm == 0:
        return RootInterval(mid, mid, iv.multiplicity, f)
    flo = f(iv.lo)
    if flo == 0:
        return RootInterval(iv.lo, iv.lo, iv.multiplicity, f)
    if (flo < 0) != (fm < 0):
        return RootInterval(iv.lo, mid, iv.multiplicity, f)
    return RootInterval(mid, iv.hi, iv.multiplicity, f)


def refine_root(iv: RootInterval, width) -> RootInterval:
    """Shrink an isolating interval by exact bisection until ``hi - lo <= width``."""
    width = to_fraction(width)
    if width <= 0:
        raise ValueError("width must be positive")
    while iv.width > width:
        iv = _bisect_once(iv)
    return iv


def isolate_roots(p: RationalPolynomial, lo=0, hi=1, width=None) -> list[RootInterval]:
    """Isolate every real root of ``p`` in the closed interval ``[lo, hi]``.

    Repeated roots are handled through the square-free decomposition and
    reported once with their multiplicity. The returned intervals are sorted
    and pairwise disjoint; if ``width`` is given each is refined below it.
    """
    if p.is_zero():
        raise ValueError("cannot isolate roots of the zero polynomial")
    lo, hi = to_fraction(lo), to_fraction(hi)
    if lo > hi:
        raise ValueError("empty search interval")
    intervals: list[RootInterval] = []
    for f, mult in square_free_decomposition(p):
        intervals.extend(_isolate_square_free(f, lo, hi, mult))
    intervals.sort(key=lambda iv: (iv.lo, iv.hi))
    # make the closed intervals pairwise disjoint
    changed = True
    while changed:
        changed = False
        for i in range(len(intervals) - 1):
            if intervals[i].hi >= intervals[i + 1].lo:
                intervals[i] = _bisect_once(intervals[i])
                intervals[i + 1] = _bisect_once(intervals[i + 1])
                changed = True
        intervals.sort(key=lambda iv: (iv.lo, iv.hi))
    if width is not None:
        intervals = [refine_root(iv, width) for iv in intervals]
    return intervals


def rational_root_in(iv: RootInterval) -> Fraction | None:
    """Return the root in ``iv`` if it is rational, else ``None``.

    A rational root ``a/b`` of an integer polynomial has ``b`` dividing the
    leading coefficient ``L``, so ``L * root`` is an integer; once the interval
    is narrower than ``1/L`` there is a single candidate to test.
    """
    if iv.is_exact:
        return iv.lo
    ints = iv.factor.primitive_integer_coeffs()
    lead = abs(ints[-1])
    iv = refine_root(iv, Fraction(1, 2 * lead))
    if iv.is_exact:
        return iv.lo
    cand_num = -((-iv.lo.numerator * lead) // iv.lo.denominator)  # ceil(L * lo)
    cand = Fraction(cand_num, lead)
    if iv.lo <= cand <= iv.hi and iv.factor(cand) == 0:
        return cand
    return None


def is_positive_on(p: RationalPolynomial, lo=0, hi=1) -> bool:
    """Exact certificate that ``p > 0`` on ``[lo, hi]``: no roots there and ``p(lo) > 0``."""
    if p.is_zero():
        return False
    if p(to_fraction(lo)) <= 0:
        return False
    return not isolate_roots(p, lo, hi)
