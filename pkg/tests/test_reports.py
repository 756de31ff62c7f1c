import json
import math
from fractions import Fraction as F

import gmpy2
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwboot.bifurcation import ExitReport, ScalarMapSpec, exit_time
from gwboot.designer import DesignResult, design_metastable
from gwboot.dynamics import (
    DecayFit,
    PhaseDiagram,
    PhiTrace,
    StopRule,
    TransitionClass,
    classify,
    iterate,
    phase_diagram,
)
from gwboot.mcsim import PrevalenceEstimate, prevalence
from gwboot.offspring import OffspringDistribution, delta
from gwboot.ratpoly import RationalPolynomial
from gwboot.reports import SCHEMA, decode, encode, rational_str

from .test_offspring import finite_laws


def through_json(obj, tp):
    text = json.dumps(encode(obj))
    back = decode(json.loads(text), tp)
    assert json.dumps(encode(back)) == text
    return back


def test_schema_tag():
    assert SCHEMA == "gwboot/1"
    assert rational_str(F(-3, 4)) == "-3/4"
    assert rational_str(F(2)) == "2/1"


def test_transition_class(two_plus_five, quad_well):
    for xi in (two_plus_five, quad_well, delta(2)):
        cls = classify(xi)
        assert through_json(cls, TransitionClass) == cls


def test_phase_diagram(two_plus_five):
    pd = phase_diagram(two_plus_five)
    back = through_json(pd, PhaseDiagram)
    assert back.q_c == pd.q_c
    assert back.transitions == pd.transitions


def test_design_result():
    res = design_metastable(2, [1], [F(1, 10)])
    back = through_json(res, DesignResult)
    assert back.xi == res.xi
    assert back.q_c == res.q_c == F(20, 29)
    assert back.P == res.P


@pytest.mark.parametrize("exact,bits", [(True, 53), (False, 53), (False, 113)])
def test_phi_trace(exact, bits):
    tr = iterate(delta(2), F(3, 5), StopRule.steps(8), exact=exact, precision_bits=bits)
    back = through_json(tr, PhiTrace)
    assert back.q == tr.q
    assert back.precision_bits == tr.precision_bits
    assert back.stop_reason == tr.stop_reason
    assert back.values.dtype == tr.values.dtype
    assert all(a == b for a, b in zip(back.values, tr.values))
    if bits == 113:
        assert isinstance(back.values[-1], type(gmpy2.mpfr(1)))
        assert back.values[-1].precision == 113


def test_exit_report():
    rep = exit_time(ScalarMapSpec(exponent=4, eps=1e-4))
    assert through_json(rep, ExitReport) == rep


def test_prevalence_estimate():
    est = prevalence(delta(2), F(9, 10), 6, 1, seed=3)
    back = through_json(est, PrevalenceEstimate)
    assert back.value == est.value
    assert back.seed == est.seed


def test_decay_fit():
    fit = DecayFit(-0.998, -1.0, F(1, 2), (100, 1000), 0.9999, (0.1, 0.2))
    assert through_json(fit, DecayFit) == fit


def test_polynomial():
    p = RationalPolynomial([F(1, 3), F(0), F(-7, 2)])
    assert through_json(p, RationalPolynomial) == p


@settings(max_examples=40, deadline=None)
@given(finite_laws())
def test_offspring_round_trip(xi):
    assert through_json(xi, OffspringDistribution) == xi


@settings(max_examples=60)
@given(st.floats(allow_nan=False, allow_infinity=False), st.fractions())
def test_scalars_bit_exact(x, fr):
    fit = DecayFit(x, -1.0, fr, (1, 2), 1.0)
    back = through_json(fit, DecayFit)
    assert math.copysign(1, back.slope) == math.copysign(1, x) and back.slope == x
    assert back.q == fr


def test_encode_rejects_unknown():
    with pytest.raises(TypeError):
        encode(object())


def test_numpy_scalars():
    assert encode(np.int64(3)) == 3
    assert encode(np.float64(0.25)) == 0.25
