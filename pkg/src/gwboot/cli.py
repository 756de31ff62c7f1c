"""Command-line front end: ``gwboot <command> [--flags]`` or ``gwboot --config run.json``.

Every command accepts the same options through a JSON config file::

    {"command": "qc", "parameters": {"xi": {"r": 2, "support": {"2": "3/5", "5": "2/5"}}},
     "output": {"path": "qc.json", "format": "json"}, "seed": null, "precision_bits": 53}

Reports carry ``"schema": "gwboot/1"`` and a manifest holding the fully
resolved config, so passing a report's manifest back through ``--config``
reproduces the run. Exit status: 0 success, 2 invalid input, 3 numerical or
certificate failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import __version__
from .bifurcation import (
    EXIT_CSV_HEADER,
    AssumptionError,
    EnvelopeViolatedError,
    ExitReport,
    ScalarMapSpec,
    decay_bounds_check,
    exit_time,
    exit_time_limit,
)
from .designer import CertificateError, SearchExhaustedError, SingularSystemError, design_continuous, design_metastable
from .dynamics import (
    DegenerateClassificationError,
    InsufficientRangeError,
    MetastabilityReport,
    NoPlateauError,
    NotExitedError,
    PhiTrace,
    StopRule,
    classify,
    critical_decay,
    critical_q,
    iterate,
    measure_metastability,
    phase_diagram,
)
from .mcsim import (
    RNG_ALGORITHM,
    MemoryGuardError,
    SimulationUnsafeError,
    estimate_phi,
    prevalence_sweep,
)
from .offspring import OffspringDistribution, UnsupportedError, delta, eval_g
from .ratpoly import gk_polynomial, to_fraction
from .reports import SCHEMA, encode, rational_str

__all__ = ["RunConfig", "ValidationError", "run", "emit_plot_data", "main", "parse_xi", "COMMANDS"]

log = logging.getLogger("gwboot")

PRECISION_ENV = "GWBOOT_PRECISION"
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
PLOT_KINDS = ("phi_vs_t", "loglog_plateau", "g_of_x", "rescaled_exit")

_REQUIRED = object()

# parameter defaults per command; _REQUIRED marks mandatory ones
COMMANDS: dict[str, dict[str, Any]] = {
    "gk": {"k": _REQUIRED, "r": 2, "x": None},
    "eval": {"xi": _REQUIRED, "x": None, "q": None, "tol": 1e-6, "points": 101, "qs": None},
    "iterate": {"xi": _REQUIRED, "q": _REQUIRED, "t": 1000, "tol": None, "threshold": None, "exact": False},
    "qc": {"xi": _REQUIRED, "tol": 1e-12},
    "classify": {"xi": _REQUIRED},
    "design": {"r": _REQUIRED, "nus": None, "xs": None, "nu": None},
    "metastability": {
        "xi": _REQUIRED,
        "delta": None,
        "eps_grid": [1e-3, 1e-4, 1e-5, 1e-6],
        "t_max": 50_000_000,
        "workers": None,
    },
    "phase-diagram": {"xi": _REQUIRED, "tol": 1e-9},
    "simulate": {"xi": _REQUIRED, "q": _REQUIRED, "t": _REQUIRED, "n_trees": 100_000, "workers": None},
    "prevalence": {
        "xi": _REQUIRED,
        "q": _REQUIRED,
        "R": _REQUIRED,
        "t": _REQUIRED,
        "w": None,
        "seeds": None,
        "node_cap": 50_000_000,
        "workers": None,
    },
    "bifurcation": {
        "mode": "A2",
        "exponent": 4,
        "c": 1.0,
        "y0": 0.0,
        "eps_grid": [1e-4],
        "delta": 0.1,
        "x0": 0.05,
        "eps0": None,
        "n_max": None,
        "limit": False,
    },
    "decay": {"xi": _REQUIRED, "t_max": 1_000_000, "t_min": None},
}

_FLAGS = {"exact", "limit"}
# which plot kind a command produces when asked for CSV
_CSV_KIND = {
    "iterate": "phi_vs_t",
    "metastability": "loglog_plateau",
    "eval": "g_of_x",
    "bifurcation": "rescaled_exit",
}


class ValidationError(ValueError):
    pass


# config


def default_precision() -> int:
    raw = os.environ.get(PRECISION_ENV)
    if raw is None:
        return 53
    try:
        bits = int(raw)
    except ValueError as exc:
        raise ValidationError(f"{PRECISION_ENV}={raw!r} is not an integer") from exc
    if bits < 53:
        raise ValidationError(f"{PRECISION_ENV} must be at least 53")
    return bits


@dataclass
class RunConfig:
    command: str
    parameters: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: {"path": None, "format": "json"})
    seed: int | None = None
    precision_bits: int = 53

    _KEYS = ("command", "parameters", "output", "seed", "precision_bits")

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        if not isinstance(obj, dict):
            raise ValidationError("config must be a JSON object")
        if "config" in obj and "schema" in obj:
            # a manifest: rerun its resolved config
            obj = obj["config"]
        unknown = set(obj) - set(cls._KEYS)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        if "command" not in obj:
            raise ValidationError("config needs a command")
        out = obj.get("output") or {}
        bad = set(out) - {"path", "format"}
        if bad:
            raise ValidationError(f"unknown output keys: {sorted(bad)}")
        return cls(
            command=obj["command"],
            parameters=dict(obj.get("parameters") or {}),
            output={"path": out.get("path"), "format": out.get("format", "json")},
            seed=obj.get("seed"),
            precision_bits=obj.get("precision_bits") or default_precision(),
        )

    def resolved(self) -> "RunConfig":
        """Validate and fill defaults; the result is what the manifest records."""
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}; choose from {sorted(COMMANDS)}")
        spec = COMMANDS[self.command]
        unknown = set(self.parameters) - set(spec)
        if unknown:
            raise ValidationError(f"unknown parameters for {self.command}: {sorted(unknown)}")
        params = {}
        for key, default in spec.items():
            if key in self.parameters:
                params[key] = self.parameters[key]
            elif default is _REQUIRED:
                raise ValidationError(f"{self.command} needs parameter {key!r}")
            else:
                params[key] = default
        if "xi" in params:
            params["xi"] = parse_xi(params["xi"]).to_json()
        fmt = self.output.get("format", "json")
        if fmt not in ("json", "csv"):
            raise ValidationError(f"output format must be json or csv, got {fmt!r}")
        if fmt == "csv" and self.command not in _CSV_KIND:
            raise ValidationError(f"{self.command} has no CSV form")
        if not isinstance(self.precision_bits, int) or self.precision_bits < 53:
            raise ValidationError("precision_bits must be an integer >= 53")
        if self.seed is not None and not isinstance(self.seed, int):
            raise ValidationError("seed must be an integer")
        return RunConfig(self.command, params, {"path": self.output.get("path"), "format": fmt}, self.seed, self.precision_bits)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "parameters": self.parameters,
            "output": self.output,
            "seed": self.seed,
            "precision_bits": self.precision_bits,
        }


def manifest(config: RunConfig) -> dict:
    return {"schema": SCHEMA, "tool": "gwboot", "version": __version__, "config": config.to_json()}


# parameter coercion


def parse_xi(value) -> OffspringDistribution:
    """Offspring law from JSON (object or text), ``"delta<k>"``/``"δ<k>"`` or ``"@file.json"``."""
    if isinstance(value, OffspringDistribution):
        return value
    if isinstance(value, str):
        text = value.strip()
        if text.startswith("@"):
            with open(text[1:]) as fh:
                return parse_xi(json.load(fh))
        for prefix in ("delta", "δ", "δ_", "delta_"):
            if text.startswith(prefix) and text[len(prefix):].isdigit():
                return delta(int(text[len(prefix):]))
        try:
            value = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"cannot parse offspring law {value!r}") from exc
    if not isinstance(value, dict):
        raise ValidationError(f"offspring law must be an object, got {value!r}")
    try:
        return OffspringDistribution.from_json(value)
    except (ValueError, KeyError, TypeError) as exc:
        raise ValidationError(f"invalid offspring law: {exc}") from exc


def _rat(v, name: str) -> Fraction:
    try:
        return to_fraction(v)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ValidationError(f"{name}={v!r} is not a number") from exc


def _int(v, name: str) -> int:
    if isinstance(v, bool):
        raise ValidationError(f"{name} must be an integer")
    try:
        f = to_fraction(v)
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"{name}={v!r} is not an integer") from exc
    if f.denominator != 1:
        raise ValidationError(f"{name}={v!r} is not an integer")
    return int(f)


def _float(v, name: str) -> float:
    return float(_rat(v, name))


def _list(v, conv, name: str) -> list:
    if v is None:
        return []
    if isinstance(v, str):
        items = [s for s in v.replace(" ", "").split(",") if s]
    elif isinstance(v, (list, tuple)):
        items = list(v)
    else:
        items = [v]
    return [conv(s, name) for s in items]


def _opt(v, conv, name):
    return None if v is None else conv(v, name)


# commands


@dataclass
class CriticalReport:
    q_c: Fraction | float
    argmax: list


def _cmd_gk(p, cfg):
    k, r = _int(p["k"], "k"), _int(p["r"], "r")
    if not k >= r >= 2:
        raise ValidationError("need k >= r >= 2")
    poly = gk_polynomial(k, r)
    out = {"k": k, "r": r, "coeffs": poly.to_strings()}
    if p["x"] is not None:
        x = _rat(p["x"], "x")
        out["x"] = rational_str(x)
        out["value"] = rational_str(poly(x))
    return out, None


def _cmd_eval(p, cfg):
    xi = parse_xi(p["xi"])
    qs = _list(p["qs"], _rat, "qs")
    if cfg.output["format"] == "csv":
        return None, emit_plot_data(xi, "g_of_x", points=_int(p["points"], "points"), qs=qs)
    if p["x"] is None:
        raise ValidationError("eval needs x (or CSV output for the g_of_x grid)")
    x = _rat(p["x"], "x")
    if not 0 <= x <= 1:
        raise ValidationError("x must lie in [0, 1]")
    g = eval_g(xi, x, tol=_float(p["tol"], "tol"))
    out = {"xi": xi.to_json(), "x": rational_str(x), "g": encode(g)}
    if p["q"] is not None:
        q = _rat(p["q"], "q")
        out["q"] = rational_str(q)
        out["h"] = encode(q * x * g if isinstance(g, Fraction) else float(q) * float(x) * g)
    return out, None


def _cmd_iterate(p, cfg):
    xi = parse_xi(p["xi"])
    q = _rat(p["q"], "q")
    stop = StopRule(
        tol=_opt(p["tol"], _float, "tol"),
        threshold=_opt(p["threshold"], _float, "threshold"),
        max_steps=_int(p["t"], "t"),
    )
    trace = iterate(xi, q, stop, precision_bits=cfg.precision_bits, exact=bool(p["exact"]))
    if cfg.output["format"] == "csv":
        return None, emit_plot_data(trace, "phi_vs_t")
    return {"trace": encode(trace)}, None


def _cmd_qc(p, cfg):
    q_c, argmax = critical_q(parse_xi(p["xi"]), tol=_rat(p["tol"], "tol"))
    return encode(CriticalReport(q_c, argmax)), None


def _cmd_classify(p, cfg):
    return encode(classify(parse_xi(p["xi"]))), None


def _cmd_design(p, cfg):
    r = _int(p["r"], "r")
    if p["nu"] is not None:
        if p["nus"] is not None or p["xs"] is not None:
            raise ValidationError("give either nu (continuous) or nus/xs (metastable)")
        res = design_continuous(r, _int(p["nu"], "nu"))
    else:
        nus = _list(p["nus"], _int, "nus")
        if not nus:
            raise ValidationError("design needs nu or nus")
        xs = _list(p["xs"], _rat, "xs") if p["xs"] is not None else None
        res = design_metastable(r, nus, xs)
    return res.to_json(), None


def _cmd_metastability(p, cfg):
    xi = parse_xi(p["xi"])
    eps = _list(p["eps_grid"], _float, "eps_grid")
    log.info("measuring plateaus over %d values of eps", len(eps))
    rep = measure_metastability(
        xi,
        delta=_opt(p["delta"], _float, "delta"),
        eps_grid=eps,
        t_max=_int(p["t_max"], "t_max"),
        precision_bits=cfg.precision_bits,
        workers=_opt(p["workers"], _int, "workers"),
    )
    if cfg.output["format"] == "csv":
        return None, emit_plot_data(rep, "loglog_plateau")
    return encode(rep), None


def _cmd_phase_diagram(p, cfg):
    return encode(phase_diagram(parse_xi(p["xi"]), tol=_rat(p["tol"], "tol"))), None


def _cmd_simulate(p, cfg):
    xi = parse_xi(p["xi"])
    seed = 0 if cfg.seed is None else cfg.seed
    est, se = estimate_phi(
        xi,
        _rat(p["q"], "q"),
        _int(p["t"], "t"),
        _int(p["n_trees"], "n_trees"),
        seed,
        workers=_opt(p["workers"], _int, "workers"),
    )
    return {"estimate": est, "std_error": se, "n_trees": _int(p["n_trees"], "n_trees"), "seed": seed, "rng": RNG_ALGORITHM}, None


def _cmd_prevalence(p, cfg):
    xi = parse_xi(p["xi"])
    seeds = _list(p["seeds"], _int, "seeds") or [0 if cfg.seed is None else cfg.seed]
    rows = prevalence_sweep(
        xi,
        _rat(p["q"], "q"),
        _int(p["R"], "R"),
        _int(p["t"], "t"),
        seeds,
        w=_opt(p["w"], _int, "w"),
        workers=_opt(p["workers"], _int, "workers"),
        node_cap=_int(p["node_cap"], "node_cap"),
    )
    return {"rng": RNG_ALGORITHM, "rows": [r.to_json() for r in rows]}, None


def _bifurcation_spec(p) -> ScalarMapSpec:
    try:
        return ScalarMapSpec(
            exponent=_int(p["exponent"], "exponent"),
            c=_float(p["c"], "c"),
            y0=_float(p["y0"], "y0"),
            delta=_float(p["delta"], "delta"),
            x0=_float(p["x0"], "x0"),
            mode=p["mode"],
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def _cmd_bifurcation(p, cfg):
    spec = _bifurcation_spec(p)
    eps = _list(p["eps_grid"], _float, "eps_grid")
    n_max = _opt(p["n_max"], _int, "n_max")
    bits = cfg.precision_bits if cfg.precision_bits != 53 else None
    if spec.mode == "A1":
        if n_max is None:
            raise ValidationError("A1 mode needs n_max")
        return encode(decay_bounds_check(spec, n_max)), None
    if p["limit"]:
        return encode(exit_time_limit(spec, eps, precision_bits=bits)), None
    eps0 = _opt(p["eps0"], _float, "eps0")
    if eps0 is None:
        eps0 = max(eps) * (1 + 1e-9)
    reports = [exit_time(spec.with_eps(e), eps0=eps0, n_max=n_max, precision_bits=bits) for e in eps]
    if cfg.output["format"] == "csv":
        return None, emit_plot_data(reports, "rescaled_exit")
    return {"reports": encode(reports)}, None


def _cmd_decay(p, cfg):
    fit = critical_decay(
        parse_xi(p["xi"]),
        t_max=_int(p["t_max"], "t_max"),
        precision_bits=cfg.precision_bits,
        t_min=_opt(p["t_min"], _int, "t_min"),
    )
    return encode(fit), None


_HANDLERS = {
    "gk": _cmd_gk,
    "eval": _cmd_eval,
    "iterate": _cmd_iterate,
    "qc": _cmd_qc,
    "classify": _cmd_classify,
    "design": _cmd_design,
    "metastability": _cmd_metastability,
    "phase-diagram": _cmd_phase_diagram,
    "simulate": _cmd_simulate,
    "prevalence": _cmd_prevalence,
    "bifurcation": _cmd_bifurcation,
    "decay": _cmd_decay,
}


# plot data


def emit_plot_data(obj, kind: str, points: int = 101, qs: Sequence = ()) -> str:
    """Plot-ready CSV (header row first) for a trace or report.

    ``g_of_x`` takes an :class:`OffspringDistribution` and adds one constant
    ``1/q`` column per entry of ``qs``.
    """
    if kind not in PLOT_KINDS:
        raise ValidationError(f"unknown plot kind {kind!r}")
    if kind == "phi_vs_t":
        if not isinstance(obj, PhiTrace):
            raise ValidationError("phi_vs_t needs a PhiTrace")
        return obj.to_csv()
    if kind == "loglog_plateau":
        if not isinstance(obj, MetastabilityReport):
            raise ValidationError("loglog_plateau needs a MetastabilityReport")
        lines = ["plateau,x,log_eps,log_length,fit_slope,fit_intercept"]
        for i, fit in enumerate(obj.plateaus):
            for e, n in zip(fit.eps_grid, fit.lengths):
                if n > 0:
                    lines.append(
                        f"{i},{fit.x!r},{math.log(e)!r},{math.log(n)!r},{fit.fitted_slope!r},{fit.intercept!r}"
                    )
        return "\n".join(lines) + "\n"
    if kind == "g_of_x":
        if not isinstance(obj, OffspringDistribution):
            raise ValidationError("g_of_x needs an OffspringDistribution")
        if points < 2:
            raise ValidationError("g_of_x needs at least two points")
        qs = [to_fraction(q) for q in qs]
        if any(not 0 < q <= 1 for q in qs):
            raise ValidationError("every q must lie in (0, 1]")
        header = ["x", "g"] + [f"inv_q_{rational_str(q)}" for q in qs]
        lines = [",".join(header)]
        xs = np.linspace(0.0, 1.0, points)
        for x in xs:
            g = obj.g_poly(Fraction(float(x))) if obj.is_finite else eval_g(obj, float(x))
            row = [repr(float(x)), repr(float(g))] + [repr(float(1 / q)) for q in qs]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"
    if isinstance(obj, ExitReport):
        reports = [obj]
    else:
        try:
            reports = list(obj)
        except TypeError:
            reports = []
    if not reports or not all(isinstance(r, ExitReport) for r in reports):
        raise ValidationError("rescaled_exit needs ExitReport objects")
    return "\n".join([EXIT_CSV_HEADER] + [r.csv_row() for r in reports]) + "\n"


# running


_NUMERICAL = (
    CertificateError,
    SingularSystemError,
    SearchExhaustedError,
    DegenerateClassificationError,
    NotExitedError,
    NoPlateauError,
    InsufficientRangeError,
    EnvelopeViolatedError,
    MemoryGuardError,
    UnsupportedError,
    ZeroDivisionError,
    ArithmeticError,
)
_INVALID = (ValidationError, SimulationUnsafeError, AssumptionError, ValueError, TypeError, KeyError)


def _failure(exc: Exception) -> dict:
    err = {"type": type(exc).__name__, "message": str(exc)}
    for attr in ("violations", "step", "value", "last_value", "projected"):
        if hasattr(exc, attr):
            err[attr] = encode(getattr(exc, attr))
    return err


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".gwboot-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    """Execute one run and write its artifacts; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg = config.resolved()
    except _INVALID as exc:
        print(_dump({"schema": SCHEMA, "error": _failure(exc)}), end="", file=stderr)
        return EXIT_INVALID
    man = manifest(cfg)
    path = cfg.output["path"]
    status = EXIT_OK
    try:
        report, csv_text = _HANDLERS[cfg.command](cfg.parameters, cfg)
    except _NUMERICAL as exc:
        report, csv_text, status = {"error": _failure(exc)}, None, EXIT_NUMERICAL
    except _INVALID as exc:
        report, csv_text, status = {"error": _failure(exc)}, None, EXIT_INVALID

    if csv_text is not None:
        text = csv_text
    else:
        body = {"schema": SCHEMA, "command": cfg.command}
        body.update(report)
        body["manifest"] = man
        text = _dump(body)
    try:
        if path is None:
            stdout.write(text)
            if csv_text is not None:
                stderr.write(json.dumps(man) + "\n")
        else:
            _write_atomic(path, text)
            _write_atomic(path + ".manifest.json", _dump(man))
    except OSError as exc:
        print(f"gwboot: cannot write output: {exc}", file=stderr)
        return EXIT_IO
    if status != EXIT_OK and path is not None:
        print(f"gwboot: {report['error']['type']}: {report['error']['message']}", file=stderr)
    return status


# argument parsing


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: standard output)")
    common.add_argument("--format", choices=("json", "csv"), help="report format (default json)")
    common.add_argument("--seed", type=int, help="random seed for simulations")
    common.add_argument("--precision", type=int, help=f"working precision in bits (default ${PRECISION_ENV} or 53)")
    common.add_argument("-v", "--verbose", action="store_true", help="progress messages on standard error")

    parser = argparse.ArgumentParser(
        prog="gwboot",
        description="Bootstrap percolation on Galton-Watson trees: recursion, design and verification.",
        parents=[common],
    )
    parser.add_argument("--config", help="JSON run config (or a manifest from an earlier run)")
    parser.add_argument("--version", action="version", version=f"gwboot {__version__}")
    sub = parser.add_subparsers(dest="command")
    for name, spec in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], argument_default=argparse.SUPPRESS)
        for key, default in spec.items():
            if key in _FLAGS:
                sp.add_argument(_flag(key), dest=key, action="store_true")
            else:
                hint = "required" if default is _REQUIRED else f"default {default}"
                sp.add_argument(_flag(key), dest=key, help=hint)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    logging.basicConfig(level=logging.INFO if args.get("verbose") else logging.WARNING, stream=sys.stderr)
    try:
        if args.get("config"):
            try:
                with open(args["config"]) as fh:
                    raw = json.load(fh)
            except OSError as exc:
                print(f"gwboot: cannot read config: {exc}", file=sys.stderr)
                return EXIT_IO
            except json.JSONDecodeError as exc:
                raise ValidationError(f"config is not valid JSON: {exc}") from exc
            cfg = RunConfig.from_json(raw)
        elif args.get("command"):
            params = {k: v for k, v in args.items() if k in COMMANDS[args["command"]]}
            cfg = RunConfig(args["command"], params, precision_bits=default_precision())
        else:
            parser.print_help(sys.stderr)
            return EXIT_INVALID
    except ValidationError as exc:
        print(f"gwboot: {exc}", file=sys.stderr)
        return EXIT_INVALID
    # command-line options override the config file
    if args.get("out") is not None:
        cfg.output["path"] = args["out"]
    if args.get("format") is not None:
        cfg.output["format"] = args["format"]
    if args.get("seed") is not None:
        cfg.seed = args["seed"]
    if args.get("precision") is not None:
        cfg.precision_bits = args["precision"]
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
