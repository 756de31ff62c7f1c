"""Scalar maps near a tangent bifurcation.

Two regimes are covered. At the bifurcation (``A1`` mode) the map
``f(y) ~ y - c (y - y0)^alpha`` has a fixed point ``y0`` that the orbit
approaches like ``n^(-1/(alpha-1))``; :func:`decay_bounds_check` verifies the
explicit two-sided bound at every step. Just before it (``A2`` mode) the map
``f_eps(y) ~ y - c (y - y0)^(2 alpha) - eps`` lets the orbit through a narrow
channel in about ``eps^(-1 + 1/(2 alpha))`` steps; :func:`exit_time` compares
the measured passage with the quadrature bounds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .ratpoly import to_fraction

__all__ = [
    "ScalarMapSpec",
    "EnvelopeViolatedError",
    "AssumptionError",
    "BoundsVacuousWarning",
    "ExitReport",
    "A1Report",
    "LimitReport",
    "iterate_map",
    "decay_bounds_check",
    "line_integral",
    "window_integral",
    "c4_constant",
    "c4_coarse",
    "kappa",
    "exit_time",
    "exit_time_limit",
    "plateau_model",
]

HIGH_PRECISION = 113
GRID_POINTS = 10_000


class EnvelopeViolatedError(RuntimeError):
    def __init__(self, message, step=None, value=None):
        super().__init__(message)
        self.step = step
        self.value = value


class AssumptionError(ValueError):
    """A hypothesis of the bound being checked fails for this map."""


class BoundsVacuousWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ScalarMapSpec:
    """A one-dimensional map near a tangency at ``y0``.

    The closed form is ``f(y) = y - c (y - y0)^exponent - eps``. Passing
    ``func`` replaces it with an arbitrary callback, in which case the
    envelope constants ``c_bar <= c_under`` must be supplied and are only
    checked on a dense grid.

    ``mode`` is ``"A1"`` (at the bifurcation, ``exponent = alpha``) or ``"A2"``
    (perturbed family, ``exponent = 2 alpha``).
    """

    exponent: int
    c: float | None = 1.0
    y0: float = 0.0
    eps: float = 0.0
    delta: float = 0.1
    x0: float = 0.05
    mode: str = "A2"
    c_bar: float | None = None
    c_under: float | None = None
    func: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.mode not in ("A1", "A2"):
            raise ValueError(f"mode must be 'A1' or 'A2', got {self.mode!r}")
        if self.exponent < 2 and self.mode == "A2":
            raise ValueError("exponent must be at least 2")
        if self.func is None:
            if self.c is None or self.c <= 0:
                raise ValueError("closed-form maps need a positive c")
            if self.c_bar is None:
                object.__setattr__(self, "c_bar", self.c)
            if self.c_under is None:
                object.__setattr__(self, "c_under", self.c)
        elif self.c_bar is None or self.c_under is None:
            raise ValueError("callback maps need explicit envelope constants c_bar and c_under")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    @property
    def alpha(self) -> float:
        return self.exponent if self.mode == "A1" else self.exponent / 2

    @property
    def closed_form(self) -> bool:
        return self.func is None

    def with_eps(self, eps: float) -> "ScalarMapSpec":
        return replace(self, eps=eps)

    def step_function(self, precision_bits: int = 53):
        """Return ``(f, convert)`` working in float64 or gmpy2 ``mpfr``."""
        if precision_bits == 53:
            convert = float
        else:
            import gmpy2

            def convert(v):
                # decimal inputs are read through their shortest repr, like to_fraction
                fr = to_fraction(v) if isinstance(v, (int, float, Fraction, str)) else Fraction(*v.as_integer_ratio())
                return gmpy2.mpfr(gmpy2.mpq(fr.numerator, fr.denominator))

        if self.func is not None:
            return self.func, convert
        c, y0, eps, e = self.c, self.y0, self.eps, self.exponent
        if precision_bits != 53:
            import gmpy2

            with gmpy2.context(gmpy2.get_context(), precision=precision_bits):
                c, y0, eps = convert(c), convert(y0), convert(eps)

        def f(y):
            z = y - y0
            return y - c * z**e - eps

        return f, convert

    def envelope_ok(self, lo: float, hi: float, eps: float | None = None) -> tuple[bool, float | None]:
        """Check the two-sided envelope on ``(lo, hi)``; exact for the closed form.

        Returns ``(ok, offending_y)``.
        """
        if self.func is None:
            return (self.c_bar <= self.c <= self.c_under), None
        eps = self.eps if eps is None else eps
        ys = np.linspace(lo, hi, GRID_POINTS + 2)[1:-1]
        for y in ys:
            z = y - self.y0
            fy = self.func(float(y))
            upper = y - self.c_bar * z**self.exponent - eps
            lower = y - self.c_under * z**self.exponent - eps
            slack = 1e-14 * max(1.0, abs(y))
            if not lower - slack <= fy <= upper + slack:
                return False, float(y)
        return True, None


def iterate_map(spec: ScalarMapSpec, n_max: int, precision_bits: int = 53, stop_below: float | None = None):
    """``x_0, ..., x_N`` with ``x_n = f(x_{n-1})``.

    In A1 mode each step must decrease and stay above ``y0``; otherwise
    :class:`EnvelopeViolatedError` names the step. ``stop_below`` ends the run
    at the first value under that level.
    """
    f, convert = spec.step_function(precision_bits)
    if precision_bits != 53:
        import gmpy2

        ctx = gmpy2.context(gmpy2.get_context(), precision=precision_bits)
    else:
        ctx = None
    y0 = spec.y0
    check = spec.mode == "A1" and not (spec.eps == 0 and spec.x0 == spec.y0)
    try:
        if ctx is not None:
            ctx.__enter__()
        x = convert(spec.x0)
        out = [x]
        for n in range(1, n_max + 1):
            if stop_below is not None and x < stop_below:
                break
            nxt = f(x)
            if check and not (y0 < nxt < x):
                raise EnvelopeViolatedError(
                    f"step {n}: x={float(nxt)!r} is not in (y0, x_prev)", step=n, value=float(nxt)
                )
            out.append(nxt)
            x = nxt
    finally:
        if ctx is not None:
            ctx.__exit__(None, None, None)
    if precision_bits == 53:
        return np.asarray(out, dtype=np.float64)
    arr = np.empty(len(out), dtype=object)
    arr[:] = out
    return arr


# at the bifurcation


@dataclass
class A1Report:
    a_under: float
    a_bar: float
    n0: float
    n_max: int
    holds: bool
    min_upper_margin: float
    min_lower_margin: float
    first_violation: int | None = None


def decay_bounds_check(spec: ScalarMapSpec, n_max: int) -> A1Report:
    """Check ``y0 + a_(n+n0)^(-1/(alpha-1)) <= x_n <= y0 + a^ n^(-1/(alpha-1))`` for ``1 <= n <= n_max``.

    Constants: ``a^ = [(alpha-1) c_bar]^(-1/(alpha-1))``,
    ``a_ = [(alpha-1)(1-delta)^(-alpha) c_under]^(-1/(alpha-1))`` and
    ``n0 = (x0-y0)^(1-alpha) / ((alpha-1)(1-delta)^(-alpha) c_under)``.
    """
    if spec.mode != "A1":
        raise AssumptionError("decay bounds need an A1-mode map")
    alpha, d = spec.alpha, spec.delta
    if not alpha > 1:
        raise AssumptionError(f"need alpha > 1, got {alpha}")
    if not 0 < spec.c_bar <= spec.c_under < d ** (-(alpha - 1)):
        raise AssumptionError(
            f"need 0 < c_bar <= c_under < delta^-(alpha-1); got {spec.c_bar}, {spec.c_under}"
        )
    if not spec.y0 < spec.x0 < spec.y0 + d:
        raise AssumptionError("x0 must lie in (y0, y0 + delta)")
    ok, bad = spec.envelope_ok(spec.y0, spec.y0 + d, eps=0.0)
    if not ok:
        raise AssumptionError(f"envelope fails at y={bad}")

    c_under_p = (alpha - 1) * (1 - d) ** (-alpha) * spec.c_under
    c_bar_p = (alpha - 1) * spec.c_bar
    a_under = c_under_p ** (-1 / (alpha - 1))
    a_bar = c_bar_p ** (-1 / (alpha - 1))
    n0 = (spec.x0 - spec.y0) ** (1 - alpha) / c_under_p

    xs = iterate_map(spec, n_max).astype(float)
    n = np.arange(1, len(xs), dtype=float)
    vals = xs[1:] - spec.y0
    upper = a_bar * n ** (-1 / (alpha - 1))
    lower = a_under * (n + n0) ** (-1 / (alpha - 1))
    up_margin = upper - vals
    lo_margin = vals - lower
    bad = np.nonzero((up_margin < 0) | (lo_margin < 0))[0]
    return A1Report(
        a_under=a_under,
        a_bar=a_bar,
        n0=n0,
        n_max=n_max,
        holds=bad.size == 0,
        min_upper_margin=float((up_margin / upper).min()),
        min_lower_margin=float((lo_margin / lower).min()),
        first_violation=int(bad[0]) + 1 if bad.size else None,
    )


# just before the bifurcation


def _integrand(c: float, alpha: float):
    p = 2 * alpha

    def h(theta):
        t = math.tan(theta)
        return (1 + t * t) / (c * abs(t) ** p + 1)

    return h


def line_integral(c: float, alpha: float) -> float:
    """``int_R du / (c u^(2 alpha) + 1)`` by adaptive quadrature after ``u = tan(theta)``."""
    val, err = integrate.quad(_integrand(c, alpha), -math.pi / 2, math.pi / 2, epsabs=0, epsrel=1e-11, limit=200)
    return val


def window_integral(c: float, alpha: float, lo: float, hi: float) -> float:
    """``int_lo^hi du / (c u^(2 alpha) + 1)`` (finite limits, same substitution)."""
    if hi <= lo:
        return 0.0
    val, _ = integrate.quad(
        _integrand(c, alpha), math.atan(lo), math.atan(hi), epsabs=0, epsrel=1e-11, limit=200
    )
    return val


def c4_constant(c: float, delta: float, alpha: float, eps0: float) -> float:
    """``C_4`` from the chain ``C_1 .. C_4``; infinite when ``c delta^(2 alpha - 1) >= 1``."""
    cd = c * delta ** (2 * alpha - 1)
    if cd >= 1:
        return math.inf
    c1 = 1 / (1 - cd)
    c2 = c * (1 - cd) ** (-2 * alpha)
    lead = 1 + c2 * eps0 ** (2 * alpha - 1)
    c3 = lead ** (2 * alpha) + c1 ** (2 * alpha)
    return lead * c3


def c4_coarse(c: float, alpha: float) -> float:
    """The closed bound ``(3 + 4^alpha c)^(4 alpha)``, valid for ``eps0 < 1`` and ``c delta^(2 alpha - 1) < 1/2``."""
    return (3 + 4**alpha * c) ** (4 * alpha)


def kappa(c: float, delta: float, alpha: float, eps0: float = 0.0) -> float:
    """``max(C_4 eps0^(2 alpha - 1), 2 alpha max(1, c) delta^(2 alpha - 1))``."""
    second = 2 * alpha * max(1.0, c) * delta ** (2 * alpha - 1)
    if eps0 == 0:
        return second
    c4 = c4_constant(c, delta, alpha, eps0)
    return max(c4 * eps0 ** (2 * alpha - 1), second)


@dataclass
class ExitReport:
    eps: float
    N: int
    rescaled: float
    lower: float
    upper: float
    lower_sharp: float
    kappa: float
    kappa_eps0: float
    I_bar: float
    I_under: float
    within_bounds: bool | None
    finite_lower: float
    finite_upper: float
    within_finite: bool | None
    precision_bits: int
    alpha_flag: str | None = None

    def csv_row(self) -> str:
        within = "" if self.within_bounds is None else str(self.within_bounds).lower()
        return f"{self.eps!r},{self.N},{self.rescaled!r},{self.lower!r},{self.upper!r},{within}"


EXIT_CSV_HEADER = "epsilon,N,rescaled,lower,upper,within"


def _check_a2(spec: ScalarMapSpec, eps0: float):
    if spec.mode != "A2":
        raise AssumptionError("exit times need an A2-mode map")
    if spec.exponent % 2:
        raise AssumptionError("A2 maps need an even exponent 2 alpha")
    if not 0 < spec.eps < eps0:
        raise AssumptionError(f"need 0 < eps < eps0, got eps={spec.eps}, eps0={eps0}")
    if not 0 < spec.x0 - spec.y0 < spec.delta:
        raise AssumptionError("need 0 < x0 - y0 < delta")
    ok, bad = spec.envelope_ok(spec.y0 - spec.delta, spec.y0 + spec.delta)
    if not ok:
        raise AssumptionError(f"envelope fails at y={bad}")


def _alpha_flag(alpha: float) -> str | None:
    if alpha > 1:
        return None
    return f"alpha={alpha:g} is outside the proven range alpha > 1; bounds are reported but not asserted"


def _count_steps(f, x, levels, n_max):
    """Steps until ``x`` first drops below each successive level."""
    counts = []
    n = 0
    for level in levels:
        while not x < level:
            if n >= n_max:
                raise EnvelopeViolatedError(f"no exit within n_max={n_max} steps", step=n, value=float(x))
            x = f(x)
            n += 1
        counts.append(n)
    return counts, x


def _run_exit(spec: ScalarMapSpec, levels, n_max, precision_bits):
    f, convert = spec.step_function(precision_bits)
    if precision_bits == 53:
        return _count_steps(f, convert(spec.x0), [convert(v) for v in levels], n_max)[0]
    import gmpy2

    with gmpy2.context(gmpy2.get_context(), precision=precision_bits):
        return _count_steps(f, convert(spec.x0), [convert(v) for v in levels], n_max)[0]


def exit_time(
    spec: ScalarMapSpec,
    eps0: float = 1.0,
    n_max: int | None = None,
    precision_bits: int | None = None,
) -> ExitReport:
    """Exit time ``N = min{n: x_n < y0 - delta}`` and its bounds.

    ``lower = (I_/2)/(1+kappa)`` and ``upper = I^/(1-kappa)`` use the
    small-``eps`` value ``kappa = 2 alpha max(1, c) delta^(2 alpha - 1)``; the
    finite-``eps`` bounds on ``N`` itself use ``kappa`` at ``eps0``.
    """
    _check_a2(spec, eps0)
    alpha, d, eps = spec.alpha, spec.delta, spec.eps
    if precision_bits is None:
        precision_bits = HIGH_PRECISION if eps <= 1e-6 else 53
    scale = eps ** (-1 + 1 / (2 * alpha))
    I_bar = line_integral(spec.c_bar, alpha)
    I_under = line_integral(spec.c_under, alpha)
    k0 = max(kappa(spec.c_bar, d, alpha), kappa(spec.c_under, d, alpha))
    k_eps = max(kappa(spec.c_bar, d, alpha, eps0), kappa(spec.c_under, d, alpha, eps0))

    # ODE passage times t(-delta) for both envelopes
    root = eps ** (1 / (2 * alpha))
    z0 = spec.x0 - spec.y0
    t_bar = scale * window_integral(spec.c_bar, alpha, -d / root, z0 / root)
    t_under = scale * window_integral(spec.c_under, alpha, -d / root, z0 / root)
    finite_lower = t_under / (1 + k_eps)
    finite_upper = 1 + t_bar / (1 - k_eps) if k_eps < 1 else math.inf
    if n_max is None:
        guess = finite_upper if math.isfinite(finite_upper) else 1 + t_bar
        n_max = int(10 * guess) + 1000

    (N,) = _run_exit(spec, [spec.y0 - d], n_max, precision_bits)
    rescaled = N / scale
    if k0 < 1:
        lower = 0.5 * I_under / (1 + k0)
        upper = I_bar / (1 - k0)
        within = lower <= rescaled <= upper
    else:
        warnings.warn(f"kappa={k0} >= 1: the bounds are vacuous", BoundsVacuousWarning, stacklevel=2)
        lower, upper, within = 0.0, math.inf, None
    within_finite = (finite_lower <= N <= finite_upper) if k_eps < 1 else None
    return ExitReport(
        eps=eps,
        N=N,
        rescaled=rescaled,
        lower=lower,
        upper=upper,
        lower_sharp=I_under / (1 + k0),
        kappa=k0,
        kappa_eps0=k_eps,
        I_bar=I_bar,
        I_under=I_under,
        within_bounds=within,
        finite_lower=finite_lower,
        finite_upper=finite_upper,
        within_finite=within_finite,
        precision_bits=precision_bits,
        alpha_flag=_alpha_flag(alpha),
    )


@dataclass
class LimitReport:
    limit: float
    eps_grid: list[float]
    N: list[int]
    phases: list[tuple[int, int, int]]
    rescaled: list[float]
    extrapolated: float
    relative_error: float
    alpha_flag: str | None = None


def exit_time_limit(
    spec: ScalarMapSpec,
    eps_grid: Sequence[float],
    delta_eps: Callable[[float], float] | None = None,
    precision_bits: int | None = None,
) -> LimitReport:
    """Measure ``N eps^(1 - 1/(2 alpha))`` with a shrinking inner window ``delta_eps``.

    The orbit is followed in three phases: down to ``y0 + delta_eps``, across
    the inner window to ``y0 - delta_eps``, then out to ``y0 - delta``. The
    total count is the exit time; the extrapolated limit comes from a linear
    fit of the rescaled counts against ``eps^(1 - 1/(2 alpha))``.
    """
    if spec.func is not None:
        raise AssumptionError("the shrinking-window limit needs the closed-form family")
    delta_eps = delta_eps or (lambda e: 1 / abs(math.log(e)))
    alpha = spec.alpha
    limit = line_integral(spec.c, alpha)
    Ns, phases, rescaled = [], [], []
    eps_grid = [float(e) for e in eps_grid]
    for eps in eps_grid:
        de = min(delta_eps(eps), spec.delta)
        s = spec.with_eps(eps)
        if not 0 < s.x0 - s.y0 < s.delta:
            raise AssumptionError("need 0 < x0 - y0 < delta")
        bits = precision_bits or (HIGH_PRECISION if eps <= 1e-6 else 53)
        scale = eps ** (-1 + 1 / (2 * alpha))
        n_max = int(20 * (limit * scale + 1)) + 100_000
        c1, c2, c3 = _run_exit(s, [s.y0 + de, s.y0 - de, s.y0 - s.delta], n_max, bits)
        phases.append((c1, c2 - c1, c3 - c2))
        Ns.append(c3)
        rescaled.append(c3 / scale)
    if len(eps_grid) >= 2:
        s_vals = np.array([e ** (1 - 1 / (2 * alpha)) for e in eps_grid])
        _, extrap = np.polyfit(s_vals, np.array(rescaled), 1)
    else:
        extrap = rescaled[0]
    smallest = int(np.argmin(eps_grid))
    return LimitReport(
        limit=limit,
        eps_grid=eps_grid,
        N=Ns,
        phases=phases,
        rescaled=rescaled,
        extrapolated=float(extrap),
        relative_error=abs(rescaled[smallest] - limit) / limit,
        alpha_flag=_alpha_flag(alpha),
    )


def plateau_model(x_i, nu_i: int, C_i, q_c, eps: float, delta: float, x0: float | None = None) -> ScalarMapSpec:
    """The A2 model of a plateau of ``phi -> h_xi(phi)`` at ``q = q_c - eps``.

    Near ``x_i`` the step is ``phi - h(phi) ~ (x_i/q_c) eps + C_i q_c x_i (phi - x_i)^(2 nu_i)``,
    so ``c = C_i q_c x_i`` and the effective perturbation is ``x_i eps / q_c``.
    """
    x_i, C_i, q_c = float(x_i), float(C_i), float(q_c)
    c_eff = C_i * q_c * x_i
    eps_eff = x_i * eps / q_c
    return ScalarMapSpec(
        exponent=2 * nu_i,
        c=c_eff,
        y0=x_i,
        eps=eps_eff,
        delta=delta,
        x0=x_i + delta * (1 - 1e-12) if x0 is None else x0,
        mode="A2",
    )
