"""JSON encoding of result objects that decodes back into the same types.

Rationals travel as ``"num/den"`` strings and floats as JSON numbers (Python
writes the shortest round-tripping ``repr``), so ``decode(encode(obj), type)``
reproduces ``obj`` exactly. Decoding is driven by the dataclass type hints.
"""

from __future__ import annotations

import dataclasses
import functools
import types
import typing
from collections.abc import Mapping, Sequence
from fractions import Fraction

import numpy as np

from .dynamics import PhiTrace
from .offspring import OffspringDistribution
from .ratpoly import RationalPolynomial

__all__ = ["SCHEMA", "encode", "decode", "rational_str"]

SCHEMA = "gwboot/1"


def rational_str(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


_FUNCTION_TYPES = (types.FunctionType, types.BuiltinFunctionType, types.MethodType, functools.partial)


def _is_mpfr(v) -> bool:
    return type(v).__name__ == "mpfr"


def encode(obj):
    """Plain JSON-compatible structure for ``obj``."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, Fraction):
        return rational_str(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if _is_mpfr(obj):
        return rational_str(Fraction(*obj.as_integer_ratio()))
    if isinstance(obj, OffspringDistribution):
        return obj.to_json()
    if isinstance(obj, RationalPolynomial):
        return {"coeffs": obj.to_strings()}
    if isinstance(obj, PhiTrace):
        return {
            "q": rational_str(obj.q),
            "precision_bits": obj.precision_bits,
            "stop_reason": obj.stop_reason,
            "xi": None if obj.xi is None else obj.xi.to_json(),
            "values": [encode(v) for v in obj.values.tolist()],
        }
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {}
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            # callbacks (e.g. a custom map) are not data
            out[f.name] = None if isinstance(v, _FUNCTION_TYPES) else encode(v)
        return out
    if isinstance(obj, Mapping):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [encode(v) for v in obj]
    raise TypeError(f"cannot encode {type(obj).__name__}")


def _decode_trace(obj) -> PhiTrace:
    bits = obj["precision_bits"]
    vals = obj["values"]
    if vals and isinstance(vals[0], str):
        fracs = [Fraction(v) for v in vals]
        if bits == 0:
            # exact rational trace
            arr = np.empty(len(fracs), dtype=object)
            arr[:] = fracs
        else:
            import gmpy2

            with gmpy2.context(gmpy2.get_context(), precision=bits):
                arr = np.empty(len(fracs), dtype=object)
                arr[:] = [gmpy2.mpfr(gmpy2.mpq(f.numerator, f.denominator)) for f in fracs]
    else:
        arr = np.asarray(vals, dtype=np.float64)
    xi = None if obj.get("xi") is None else OffspringDistribution.from_json(obj["xi"])
    return PhiTrace(Fraction(obj["q"]), bits, arr, obj["stop_reason"], xi)


def _is_rational_string(v) -> bool:
    if not isinstance(v, str):
        return False
    try:
        Fraction(v)
    except ValueError:
        return False
    return True


def decode(obj, tp):
    """Rebuild a value of type ``tp`` from :func:`encode` output."""
    if tp is typing.Any or tp is None or obj is None:
        return obj
    if tp is type(None):
        return None
    origin = typing.get_origin(tp)
    if origin is typing.Union or origin is types.UnionType:
        args = typing.get_args(tp)
        if obj is None:
            return None
        if isinstance(obj, str) and Fraction in args and _is_rational_string(obj):
            return Fraction(obj)
        if isinstance(obj, bool) and bool in args:
            return obj
        if isinstance(obj, int) and int in args:
            return obj
        if isinstance(obj, (int, float)) and float in args:
            return float(obj)
        for a in args:
            if a is type(None):
                continue
            try:
                return decode(obj, a)
            except (TypeError, ValueError, KeyError):
                continue
        raise ValueError(f"no member of {tp} accepts {obj!r}")
    if tp is Fraction:
        return Fraction(obj)
    if tp is float:
        return float(obj)
    if tp is int:
        return int(obj)
    if tp in (bool, str):
        if not isinstance(obj, tp):
            raise TypeError(f"expected {tp.__name__}, got {obj!r}")
        return obj
    if tp is OffspringDistribution:
        return OffspringDistribution.from_json(obj)
    if tp is RationalPolynomial:
        return RationalPolynomial.from_strings(obj["coeffs"])
    if tp is PhiTrace:
        return _decode_trace(obj)
    if origin in (list, Sequence, typing.Sequence):
        (arg,) = typing.get_args(tp) or (typing.Any,)
        return [decode(v, arg) for v in obj]
    if origin is tuple:
        args = typing.get_args(tp)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(decode(v, args[0]) for v in obj)
        return tuple(decode(v, a) for v, a in zip(obj, args))
    if origin in (dict, Mapping, typing.Mapping):
        kt, vt = typing.get_args(tp)
        return {decode(int(k) if kt is int else k, kt): decode(v, vt) for k, v in obj.items()}
    if dataclasses.is_dataclass(tp):
        if not isinstance(obj, Mapping):
            raise TypeError(f"expected an object for {tp.__name__}")
        hints = typing.get_type_hints(tp)
        kwargs = {}
        for f in dataclasses.fields(tp):
            if f.name in obj:
                kwargs[f.name] = decode(obj[f.name], hints[f.name])
        return tp(**kwargs)
    if tp is np.ndarray:
        return np.asarray(obj)
    if isinstance(tp, type) and isinstance(obj, tp):
        return obj
    raise TypeError(f"cannot decode into {tp}")
