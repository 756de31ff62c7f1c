"""The recursion ``phi_{t+1} = h_xi(phi_t)`` and everything read off from it.

Exact analysis (critical probability, transition class, plateau data, phase
diagram) works on the rational polynomial ``g_xi``. Numerical iteration
works on the decrement polynomial ``D(x) = x - h_xi(x)``, whose
coefficients are formed exactly before being rounded once into the working
precision; this keeps cancellation out of the near-critical steps.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Sequence

import numpy as np

from .offspring import TELESCOPING, OffspringDistribution
from .ratpoly import (
    RationalPolynomial,
    RootInterval,
    isolate_roots,
    rational_root_in,
    refine_root,
    to_fraction,
)

__all__ = [
    "StopRule",
    "PhiTrace",
    "Plateau",
    "TransitionClass",
    "PlateauMeasurement",
    "PlateauFit",
    "MetastabilityReport",
    "DecayFit",
    "Transition",
    "PhaseDiagram",
    "DegenerateClassificationError",
    "NotExitedError",
    "NoPlateauError",
    "InsufficientRangeError",
    "iterate",
    "critical_q",
    "phi_infinity",
    "classify",
    "entrance_exit",
    "default_delta",
    "measure_metastability",
    "critical_decay",
    "phase_diagram",
    "loglog_fit",
]

log = logging.getLogger(__name__)

CASE1 = "Case1_qc_is_1"
CASE2 = "Case2_continuous"
CASE3 = "Case3_discontinuous"

# Work width for irrational critical points; value ties are judged at TIE_TOL.
_CRIT_WIDTH = Fraction(1, 2**140)
_TIE_TOL = Fraction(1, 10**30)
HIGH_PRECISION = 113


class DegenerateClassificationError(ValueError):
    """g_xi is constant, so the maximum is attained everywhere."""


class NotExitedError(RuntimeError):
    def __init__(self, message, last_value=None):
        super().__init__(message)
        self.last_value = last_value


class NoPlateauError(ValueError):
    pass


class InsufficientRangeError(ValueError):
    pass


# numerical backends


def _backend(precision_bits: int):
    """Return ``(convert, context)`` for the requested binary precision."""
    if precision_bits < 53:
        raise ValueError(f"precision_bits must be >= 53, got {precision_bits}")
    if precision_bits == 53:
        return (lambda v: float(to_fraction(v)) if not isinstance(v, float) else v), None
    import gmpy2

    ctx = gmpy2.context(precision=precision_bits)

    def convert(v):
        if isinstance(v, float):
            return gmpy2.mpfr(v, precision_bits)
        v = to_fraction(v)
        with gmpy2.context(ctx):
            return gmpy2.mpfr(gmpy2.mpq(v.numerator, v.denominator))

    return convert, ctx


def _decrement_poly(xi: OffspringDistribution, q: Fraction) -> RationalPolynomial | None:
    if xi.is_finite:
        return RationalPolynomial([0, 1]) - xi.h_poly(q)
    # telescoping law: g is identically 1, so x - h(x) = (1 - q) x
    return RationalPolynomial([0, 1 - q])


# traces


@dataclass(frozen=True)
class StopRule:
    """When to stop iterating; any combination of the three criteria.

    ``tol``: stop once a step moves by less than ``tol`` (converged).
    ``threshold``: stop once ``phi_t < threshold`` (exited).
    ``max_steps``: hard cap on the number of steps.
    """

    tol: float | None = None
    threshold: float | None = None
    max_steps: int = 10_000_000

    @classmethod
    def converged(cls, tol: float, max_steps: int = 10_000_000) -> "StopRule":
        return cls(tol=tol, max_steps=max_steps)

    @classmethod
    def below(cls, threshold: float, max_steps: int = 10_000_000) -> "StopRule":
        return cls(threshold=threshold, max_steps=max_steps)

    @classmethod
    def steps(cls, n: int) -> "StopRule":
        return cls(max_steps=n)


@dataclass
class PhiTrace:
    """``phi_0, ..., phi_T`` at a fixed ``q``.

    ``values`` is a float64 array at 53 bits, an object array of gmpy2
    ``mpfr`` at higher precision, or of ``Fraction`` in exact mode.
    """

    q: Fraction
    precision_bits: int
    values: np.ndarray
    stop_reason: str
    xi: OffspringDistribution | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def last(self):
        return self.values[-1]

    def as_float(self) -> np.ndarray:
        if self.values.dtype == np.float64:
            return self.values
        return np.array([float(v) for v in self.values], dtype=np.float64)

    def to_csv(self) -> str:
        lines = ["t,phi"]
        if self.values.dtype == object and self.values.size and isinstance(self.values[0], Fraction):
            lines += [f"{t},{v.numerator}/{v.denominator}" for t, v in enumerate(self.values)]
        else:
            lines += [f"{t},{float(v)!r}" for t, v in enumerate(self.values)]
        return "\n".join(lines) + "\n"


def iterate(
    xi: OffspringDistribution,
    q,
    stop: StopRule | None = None,
    precision_bits: int = 53,
    exact: bool = False,
) -> PhiTrace:
    """Run the recursion from ``phi_0 = q``.

    Parameters
    ----------
    xi : OffspringDistribution
    q : number
        Initial healthy probability; converted exactly to a rational.
    stop : StopRule
        Defaults to 1000 steps.
    precision_bits : int
        53 for float64; anything larger runs in gmpy2 ``mpfr``.
    exact : bool
        Iterate in exact rationals (only sensible for a few steps).

    Notes
    -----
    Each step is clamped so the trace never increases and stays in [0, 1]; a
    clamped step can only come from rounding at a fixed point and is
    reported as convergence.
    """
    q = to_fraction(q)
    if not 0 <= q <= 1:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    stop = stop or StopRule.steps(1000)
    dec = _decrement_poly(xi, q)
    if exact:
        coeffs = list(dec.coeffs)
        zero = Fraction(0)
        x = q
    else:
        convert, ctx = _backend(precision_bits)
        coeffs = [convert(c) for c in dec.coeffs]
        zero = convert(0)
        x = convert(q)
    coeffs_rev = coeffs[::-1]
    tol = None if stop.tol is None else (stop.tol if exact is False else to_fraction(stop.tol))
    thr = stop.threshold
    values = [x]
    reason = "max_steps"

    def run():
        nonlocal x, reason
        for _ in range(stop.max_steps):
            if thr is not None and x < thr:
                reason = "exited"
                return
            d = zero
            for c in coeffs_rev:
                d = d * x + c
            if d <= 0:
                # fixed point (or rounding at one)
                if tol is None and thr is None:
                    # a pure step count still gets its full trace
                    values.extend([x] * (stop.max_steps - len(values) + 1))
                    reason = "max_steps"
                else:
                    values.append(x)
                    reason = "converged"
                return
            nxt = x - d
            if nxt < 0:
                nxt = zero
            values.append(nxt)
            x = nxt
            if tol is not None and d < tol:
                reason = "converged"
                return
        if thr is not None and x < thr:
            reason = "exited"

    if not exact and precision_bits > 53:
        import gmpy2

        with gmpy2.context(ctx):
            run()
    else:
        run()
    if exact or precision_bits > 53:
        arr = np.empty(len(values), dtype=object)
        arr[:] = values
    else:
        arr = np.asarray(values, dtype=np.float64)
    return PhiTrace(q=q, precision_bits=0 if exact else precision_bits, values=arr, stop_reason=reason, xi=xi)


# critical points of g


@dataclass(frozen=True)
class _Critical:
    """A candidate maximizer of g on [0, 1]."""

    x: Fraction | None  # exact location when rational
    interval: RootInterval | None
    value: Fraction  # exact when ``exact`` else accurate to ~1e-40
    exact: bool
    order: int  # order of the first nonvanishing derivative (interior points)

    @property
    def location(self):
        return self.x if self.x is not None else float(self.interval.midpoint)

    @property
    def approx(self) -> Fraction:
        return self.x if self.x is not None else self.interval.midpoint


def _critical_points(g: RationalPolynomial) -> list[_Critical]:
    """Endpoints 0 and 1 plus every root of g' in (0, 1)."""
    dg = g.derivative()
    pts = [
        _Critical(Fraction(0), None, g(Fraction(0)), True, 0),
        _Critical(Fraction(1), None, g(Fraction(1)), True, 0),
    ]
    if dg.is_zero():
        return pts
    for iv in isolate_roots(dg, 0, 1):
        if iv.is_exact and iv.lo in (0, 1):
            continue
        root = rational_root_in(iv)
        if root is not None:
            if root in (0, 1):
                continue
            pts.append(_Critical(root, None, g(root), True, iv.multiplicity + 1))
            continue
        fine = refine_root(iv, _CRIT_WIDTH)
        if fine.hi <= 0 or fine.lo >= 1:
            continue
        pts.append(_Critical(None, fine, g(fine.midpoint), False, iv.multiplicity + 1))
    return pts


def _maximizers(g: RationalPolynomial):
    pts = _critical_points(g)
    top = max(p.value for p in pts)

    def ties(p):
        if p.exact and all(o.exact for o in pts if o.value == top):
            return p.value == top
        return abs(p.value - top) <= _TIE_TOL

    best = [p for p in pts if ties(p)]
    exact_val = next((p.value for p in best if p.exact), None)
    return best, (exact_val if exact_val is not None else top), exact_val is not None, pts


@dataclass(frozen=True)
class Argmax:
    """A maximizer of ``g_xi``: exact rational ``x`` or a float with an isolating interval."""

    x: Fraction | float
    exact: bool
    lo: Fraction | None = None
    hi: Fraction | None = None

    def __float__(self) -> float:
        return float(self.x)


def critical_q(xi: OffspringDistribution, tol=1e-12):
    """``q_c = 1 / max_[0,1] g_xi`` and the set of maximizers.

    Returns
    -------
    q_c : Fraction or float
        Exact whenever the maximum value is rational.
    argmax : list of Argmax
        Maximizers sorted decreasingly; for the constant telescoping law the
        whole interval is reported as a single ``Argmax`` spanning [0, 1].
    """
    if not xi.is_finite:
        if xi.family == TELESCOPING:
            return Fraction(1), [Argmax(Fraction(1, 2), False, Fraction(0), Fraction(1))]
        raise NotImplementedError(xi.family)
    best, top, exact, _ = _maximizers(xi.g_poly)
    qc = 1 / top if exact else 1 / float(top)
    tol = to_fraction(tol)
    out = []
    for p in best:
        if p.x is not None:
            out.append(Argmax(p.x, True, p.x, p.x))
        else:
            iv = p.interval if p.interval.width <= tol else refine_root(p.interval, tol)
            out.append(Argmax(float(iv.midpoint), False, iv.lo, iv.hi))
    out.sort(key=lambda a: -float(a.x))
    if not 0 < qc <= 1:
        raise AssertionError(f"critical probability {qc} outside (0, 1]")
    return qc, out


def phi_infinity(xi: OffspringDistribution, q, tol=1e-12):
    """Largest solution of ``g_xi(x) = 1/q`` in [0, 1], or 0 if none.

    The result is an exact ``Fraction`` when that root is rational and a
    float within ``tol`` otherwise.
    """
    q = to_fraction(q)
    if not 0 <= q <= 1:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    if q == 0:
        return Fraction(0)
    if not xi.is_finite:
        # g is identically 1
        return Fraction(1) if q == 1 else Fraction(0)
    eq = xi.g_poly - 1 / q
    roots = isolate_roots(eq, 0, 1)
    if not roots:
        return Fraction(0)
    top = roots[-1]
    exact = rational_root_in(top)
    if exact is not None:
        return exact
    return float(refine_root(top, to_fraction(tol)).midpoint)


# classification


@dataclass(frozen=True)
class Plateau:
    x: Fraction | float
    nu: int
    C: Fraction | float
    exact: bool = True


@dataclass(frozen=True)
class TransitionClass:
    case: str
    q_c: Fraction | float
    plateaus: tuple[Plateau, ...] = ()
    continuous_exponent: tuple[int, Fraction] | None = None
    boundary_max: bool = False
    exact: bool = True

    @property
    def n(self) -> int:
        return len(self.plateaus)

    @property
    def nus(self) -> tuple[int, ...]:
        return tuple(p.nu for p in self.plateaus)

    @property
    def xs(self) -> tuple:
        return tuple(p.x for p in self.plateaus)


def _curvature(g: RationalPolynomial, p: _Critical, order: int):
    if p.x is not None:
        return -g.taylor_coefficient(order, p.x)
    return -float(g.derivative(order)(p.interval.midpoint)) / factorial(order)


def classify(xi: OffspringDistribution) -> TransitionClass:
    """Assign the transition class from the location of the maximizers of ``g_xi``."""
    if not xi.is_finite:
        raise DegenerateClassificationError(
            "g_xi is identically 1 for this law; the maximum is attained on all of [0, 1]"
        )
    g = xi.g_poly
    if g.degree < 1:
        raise DegenerateClassificationError("g_xi is constant")
    best, top, exact, _ = _maximizers(g)
    qc = 1 / top if exact else 1 / float(top)
    at_one = any(p.x == 1 for p in best)
    at_zero = any(p.x == 0 for p in best)
    interior = [p for p in best if p.x not in (0, 1)]
    if at_one:
        return TransitionClass(CASE1, Fraction(1) if exact else 1.0, exact=exact)
    if at_zero and not interior:
        shifted = g - g(Fraction(0))
        nu = shifted.lowest_degree()
        return TransitionClass(CASE2, qc, continuous_exponent=(nu, -shifted.coeff(nu)), exact=exact)
    plateaus = []
    for p in sorted(interior, key=lambda p: -p.approx):
        order = p.order
        if order % 2:
            raise AssertionError(f"maximizer {p.location} has odd order {order}")
        plateaus.append(Plateau(p.location, order // 2, _curvature(g, p, order), p.x is not None))
    return TransitionClass(CASE3, qc, tuple(plateaus), boundary_max=at_zero, exact=exact)


# plateaus and metastability


@dataclass(frozen=True)
class PlateauMeasurement:
    x: float
    delta: float
    eps: float
    tau_minus: int
    tau_plus: int

    @property
    def plateau_length(self) -> int:
        return self.tau_plus - self.tau_minus


def _first_below(values: np.ndarray, level: float) -> int | None:
    below = values < level
    if not below.any():
        return None
    return int(np.argmax(below))


def entrance_exit(trace: PhiTrace, x, delta, eps: float = float("nan")) -> PlateauMeasurement:
    """``tau^- = min{t: phi_t < x + delta}`` and ``tau^+ = min{t: phi_t < x - delta}``."""
    vals = trace.as_float()
    x, delta = float(x), float(delta)
    tau_minus = _first_below(vals, x + delta)
    tau_plus = _first_below(vals, x - delta)
    if tau_plus is None or tau_minus is None:
        raise NotExitedError(
            f"trace never drops below {x - delta}; last value {float(vals[-1])}",
            last_value=float(vals[-1]),
        )
    return PlateauMeasurement(x, delta, eps, tau_minus, tau_plus)


def default_delta(points: Sequence[float]) -> float:
    """Half the smallest gap between plateau levels and the ends 0 and 1, capped at 0.05."""
    levels = sorted([0.0, 1.0] + [float(p) for p in points])
    gap = min(b - a for a, b in zip(levels, levels[1:]))
    return min(0.05, gap / 2)


def loglog_fit(xs: Sequence[float], ys: Sequence[float]):
    """Least-squares line ``log y = slope log x + intercept``; returns ``(slope, intercept, r2)``."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


@dataclass
class PlateauFit:
    x: float
    nu: int
    fitted_slope: float
    expected_slope: float
    r_squared: float
    eps_grid: list[float]
    lengths: list[int]
    intercept: float = float("nan")


@dataclass
class MetastabilityReport:
    classification: TransitionClass
    plateaus: list[PlateauFit]
    entrance_bounded: bool
    gaps_bounded: bool
    delta: float
    precision_bits: int
    measurements: list[list[PlateauMeasurement]] = field(default_factory=list)
    incomplete: bool = False


def _plateau_run(args):
    xi, q, levels, delta, t_max, bits, eps = args
    if bits == 53 and eps < 1e-6:
        bits = HIGH_PRECISION
    trace = iterate(xi, q, StopRule.below(delta, max_steps=t_max), precision_bits=bits)
    if bits == 53 and len(trace) > 1_000_000:
        bits = HIGH_PRECISION
        trace = iterate(xi, q, StopRule.below(delta, max_steps=t_max), precision_bits=bits)
    vals = trace.as_float()
    out = []
    for x in levels:
        tm = _first_below(vals, x + delta)
        tp = _first_below(vals, x - delta)
        out.append(None if tm is None or tp is None else PlateauMeasurement(x, delta, eps, tm, tp))
    t0 = _first_below(vals, delta)
    return out, t0, bits


def measure_metastability(
    xi: OffspringDistribution,
    delta: float | None = None,
    eps_grid: Sequence[float] = (1e-3, 1e-4, 1e-5, 1e-6),
    t_max: int = 50_000_000,
    precision_bits: int = 53,
    workers: int | None = None,
) -> MetastabilityReport:
    """Measure plateau lengths at ``q = q_c - eps`` over a decreasing grid of ``eps``.

    The entrance and gap conditions are checked operationally: the relevant
    step counts must coincide at the two smallest ``eps``.
    """
    cls = classify(xi)
    if cls.case != CASE3:
        raise NoPlateauError(f"{cls.case}: no plateaus to measure")
    eps_grid = [float(e) for e in eps_grid]
    if any(b >= a for a, b in zip(eps_grid, eps_grid[1:])) or min(eps_grid) <= 0:
        raise ValueError("eps_grid must be positive and strictly decreasing")
    levels = [float(p.x) for p in cls.plateaus]
    max_delta = default_delta(levels) if max(levels) < 1 else 0.0
    if delta is None:
        delta = max_delta
    delta = float(delta)
    half_gap = min(b - a for a, b in zip(sorted([0.0, 1.0] + levels), sorted([0.0, 1.0] + levels)[1:])) / 2
    if not 0 < delta <= half_gap:
        raise ValueError(f"delta={delta} must be positive and at most half the gap {half_gap}")
    qc = to_fraction(cls.q_c) if cls.exact else Fraction(cls.q_c)
    jobs = [(xi, qc - to_fraction(e), levels, delta, t_max, precision_bits, e) for e in eps_grid]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_plateau_run, jobs))
    else:
        results = [_plateau_run(j) for j in jobs]

    incomplete = any(m is None for res in results for m in res[0]) or any(r[1] is None for r in results)
    used_bits = max(r[2] for r in results)
    measurements = [res[0] for res in results]
    fits = []
    for i, p in enumerate(cls.plateaus):
        pairs = [(e, m[i].plateau_length) for e, m in zip(eps_grid, measurements) if m[i] is not None]
        good = [(e, n) for e, n in pairs if n > 0]
        if len(good) >= 2:
            slope, icpt, r2 = loglog_fit([e for e, _ in good], [n for _, n in good])
        else:
            slope, icpt, r2 = float("nan"), float("nan"), float("nan")
        fits.append(
            PlateauFit(
                x=float(p.x),
                nu=p.nu,
                fitted_slope=slope,
                expected_slope=-1 + 1 / (2 * p.nu),
                r_squared=r2,
                eps_grid=[e for e, _ in pairs],
                lengths=[n for _, n in pairs],
                intercept=icpt,
            )
        )

    entrance_ok = gaps_ok = False
    if not incomplete and len(eps_grid) >= 2:
        a, b = measurements[-2], measurements[-1]
        entrance_ok = a[0].tau_minus == b[0].tau_minus
        gaps = []
        for ms, t0 in ((a, results[-2][1]), (b, results[-1][1])):
            nxt = [m.tau_minus for m in ms[1:]] + [t0]
            gaps.append([n - m.tau_plus for m, n in zip(ms, nxt)])
        gaps_ok = gaps[0] == gaps[1]
    return MetastabilityReport(
        classification=cls,
        plateaus=fits,
        entrance_bounded=entrance_ok,
        gaps_bounded=gaps_ok,
        delta=delta,
        precision_bits=used_bits,
        measurements=measurements,
        incomplete=incomplete,
    )


# critical decay (continuous case)


@dataclass
class DecayFit:
    slope: float
    expected_slope: float
    q: Fraction | float
    t_range: tuple[int, int]
    r_squared: float
    bracket: tuple[float, float] | None = None


def _decay_slope(trace: PhiTrace, t_lo: int, t_hi: int, n_points: int = 200):
    ts = np.unique(np.geomspace(t_lo, t_hi, n_points).astype(int))
    ts = ts[ts < len(trace)]
    vals = trace.values[ts]
    vals = np.array([float(v) for v in vals])
    keep = vals > 0
    return loglog_fit(ts[keep], vals[keep])


def critical_decay(
    xi: OffspringDistribution,
    t_max: int = 1_000_000,
    precision_bits: int = 53,
    t_min: int | None = None,
) -> DecayFit:
    """Slope of ``log phi_t`` against ``log t`` at ``q = q_c`` over ``[t_min, t_max]``.

    ``t_min`` defaults to ``t_max / 10`` (the last decade).
    """
    if t_max < 1000:
        raise InsufficientRangeError(f"t_max={t_max} is too short to fit a power law")
    cls = classify(xi)
    if cls.case != CASE2:
        raise NoPlateauError(f"{cls.case}: critical decay applies to continuous transitions")
    nu = cls.continuous_exponent[0]
    t_min = t_min or t_max // 10
    if cls.exact:
        trace = iterate(xi, cls.q_c, StopRule.steps(t_max), precision_bits=precision_bits)
        if len(trace) <= t_max:
            raise InsufficientRangeError(f"trace stopped early ({trace.stop_reason}) at t={len(trace) - 1}")
        slope, _, r2 = _decay_slope(trace, t_min, t_max)
        return DecayFit(slope, -1 / nu, cls.q_c, (t_min, t_max), r2)
    # irrational q_c: bracket it from both sides
    lo_q = Fraction(cls.q_c) - Fraction(1, 10**12)
    hi_q = Fraction(cls.q_c) + Fraction(1, 10**12)
    slopes = []
    for q in (lo_q, hi_q):
        trace = iterate(xi, q, StopRule.steps(t_max), precision_bits=precision_bits)
        slopes.append(_decay_slope(trace, t_min, min(t_max, len(trace) - 1)))
    return DecayFit(slopes[0][0], -1 / nu, cls.q_c, (t_min, t_max), slopes[0][2], (slopes[0][0], slopes[1][0]))


# phase diagram


@dataclass(frozen=True)
class Transition:
    """A value ``q*`` where ``q -> phi_infinity(q)`` changes regime.

    ``kind`` is ``"continuous"`` (onset at x = 0), ``"discontinuous"`` (a jump
    of size ``jump`` down from ``x_star``) or ``"qc_is_1"``.
    """

    q: Fraction | float
    x_star: Fraction | float
    jump: Fraction | float
    kind: str
    exact: bool


@dataclass
class PhaseDiagram:
    transitions: list[Transition]
    q_c: Fraction | float
    grid: list[tuple[float, float]] = field(default_factory=list)


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def phase_diagram(xi: OffspringDistribution, q_grid: Sequence[float] | None = None, tol=1e-9) -> PhaseDiagram:
    """All values of ``q`` at which ``phi_infinity`` is born or jumps.

    A strict local maximum ``v`` of ``g_xi`` at ``x*`` in (0, 1) produces a jump
    at ``q* = 1/v`` when ``g_xi < v`` on all of ``(x*, 1]``; the jump runs from
    ``x*`` down to the next solution of ``g_xi = v`` below ``x*`` (or 0).
    """
    if not xi.is_finite:
        raise ValueError("phase_diagram needs a finitely supported law")
    g = xi.g_poly
    dg = g.derivative()
    tol = to_fraction(tol)
    pts = _critical_points(g)
    qc, _ = critical_q(xi)
    transitions: list[Transition] = []
    top = max(p.value for p in pts)
    zero_pt = pts[0]
    if g(Fraction(1)) == top or abs(g(Fraction(1)) - top) <= _TIE_TOL:
        transitions.append(Transition(Fraction(1), Fraction(1), Fraction(0), "qc_is_1", True))
    elif abs(zero_pt.value - top) <= _TIE_TOL:
        transitions.append(Transition(qc, Fraction(0), Fraction(0), "continuous", isinstance(qc, Fraction)))

    interior = sorted((p for p in pts if p.x not in (0, 1)), key=lambda p: p.approx)
    for idx, p in enumerate(interior):
        # strict local maximum: g' goes from + to - across the point
        if p.x is not None:
            order = p.order
            local_max = order % 2 == 0 and g.taylor_coefficient(order, p.x) < 0
        else:
            local_max = _sign(dg(p.interval.lo)) > 0 and _sign(dg(p.interval.hi)) < 0
        if not local_max:
            continue
        v = p.value
        right = [o.value for o in pts if o.approx > p.approx and o is not p]
        if any(w >= v - (_TIE_TOL if not p.exact else 0) for w in right):
            continue
        # next solution of g = v below x*: search left of the last local min below v
        mins = [o for o in interior[:idx] if o.value < v]
        lower = Fraction(0)
        exact_jump = p.exact
        if mins:
            m = mins[-1]
            eq = g - v
            roots = isolate_roots(eq, 0, m.approx)
            if roots:
                r0 = roots[-1]
                rr = rational_root_in(r0) if p.exact else None
                if rr is not None:
                    lower = rr
                else:
                    lower = refine_root(r0, tol).midpoint
                    exact_jump = False
        qstar = 1 / v if p.exact else 1 / float(v)
        x_star = p.x if p.x is not None else float(p.interval.midpoint)
        jump = (x_star - lower) if exact_jump else float(p.approx - lower)
        transitions.append(Transition(qstar, x_star, jump, "discontinuous", p.exact))

    transitions.sort(key=lambda t: float(t.q))
    grid = []
    if q_grid is not None:
        grid = [(float(q), float(phi_infinity(xi, to_fraction(q), tol=1e-12))) for q in q_grid]
    return PhaseDiagram(transitions, qc, grid)
