"""Classicality tests for photon number distributions via Stieltjes moment positivity."""

from .classicality import ClassicalityReport, analyze, local3, local5, oscillation_analysis, pnd_from_q, poisson_dichotomy, zero_rule
from .duality import congruence_check, gamma_to_q, q_to_gamma, s_matrix
from .hankel import build_pair, determinant_hierarchy, psd_check, rescale_for_conditioning
from .moments import MomentSequence, gamma_closed_form, gamma_from_pnd, klauder_check, mandel_q, q_from_pnd
from .pnd import (
    PND,
    AtomicIntensity,
    Coherent,
    CoherentMixture,
    Fock,
    PhotonAdded,
    Superposition,
    Thermal,
    generate_pnd,
    photon_add,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "PND",
    "AtomicIntensity",
    "ClassicalityReport",
    "Coherent",
    "CoherentMixture",
    "Fock",
    "MomentSequence",
    "PhotonAdded",
    "Superposition",
    "Thermal",
    "analyze",
    "build_pair",
    "congruence_check",
    "determinant_hierarchy",
    "gamma_closed_form",
    "gamma_from_pnd",
    "gamma_to_q",
    "generate_pnd",
    "klauder_check",
    "local3",
    "local5",
    "mandel_q",
    "oscillation_analysis",
    "photon_add",
    "pnd_from_q",
    "poisson_dichotomy",
    "psd_check",
    "q_from_pnd",
    "q_to_gamma",
    "rescale_for_conditioning",
    "s_matrix",
    "validate",
    "zero_rule",
]
