"""Asymptotic O-curves at resonant elliptic equilibria: normal forms, rays, reduced systems and verification."""
from .algebra import CartesianPolynomial, PoissonSeries, poisson_bracket
from .normal_form import NormalFormResult, birkhoff_normalize
from .pipeline import Pipeline
from .resonance import ResonanceStructure, check_h1_h2, find_resonances

__all__ = [
    "CartesianPolynomial",
    "PoissonSeries",
    "poisson_bracket",
    "NormalFormResult",
    "birkhoff_normalize",
    "Pipeline",
    "ResonanceStructure",
    "check_h1_h2",
    "find_resonances",
]
