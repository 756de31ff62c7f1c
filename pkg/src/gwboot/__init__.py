"""Metastability of bootstrap percolation on Galton-Watson trees.

Submodules
----------
ratpoly
    Exact rational polynomials, Sturm root isolation, the mixed basis.
offspring
    Offspring laws and the functions ``g_xi``, ``h_xi`` they induce.
dynamics
    The healthy-root recursion, critical probabilities, classification,
    plateau measurements and phase diagrams.
designer
    Offspring laws with prescribed critical behaviour, with certificates.
mcsim
    Monte Carlo on sampled trees.
bifurcation
    Passage times of scalar maps near a tangency.
cli
    The ``gwboot`` command.
"""

__version__ = "0.1.0"

from .designer import DesignResult, design_continuous, design_metastable, projection_solve
from .dynamics import (
    StopRule,
    classify,
    critical_decay,
    critical_q,
    iterate,
    measure_metastability,
    phase_diagram,
    phi_infinity,
)
from .offspring import OffspringDistribution, telescoping_law, delta, eval_g, eval_h_k
from .ratpoly import RationalPolynomial, gk_polynomial

__all__ = [
    "__version__",
    "RationalPolynomial",
    "gk_polynomial",
    "OffspringDistribution",
    "delta",
    "telescoping_law",
    "eval_g",
    "eval_h_k",
    "StopRule",
    "iterate",
    "critical_q",
    "phi_infinity",
    "classify",
    "measure_metastability",
    "critical_decay",
    "phase_diagram",
    "DesignResult",
    "design_continuous",
    "design_metastable",
    "projection_solve",
]
