"""Connes-Kreimer renormalization of phi^3 graphs on flat tori."""
from .characters import Character, birkhoff, convolve, renormalized_value, star_inverse
from .graphs import FeynmanGraph, canonical_form, enumerate_1pi_graphs, generator_label
from .hopf import HopfAlgebra, HopfPolynomial
from .laurent import LaurentSeries
from .rg import beta, check_locality, scale
from .spectral import TorusBackend

__version__ = "0.1.0"

__all__ = [
    "Character", "FeynmanGraph", "HopfAlgebra", "HopfPolynomial", "LaurentSeries",
    "TorusBackend", "beta", "birkhoff", "canonical_form", "check_locality", "convolve",
    "enumerate_1pi_graphs", "generator_label", "renormalized_value", "scale", "star_inverse",
]
