"""Verification harness: manufactured solutions, identities, convergence, oracles."""

from .convergence import ConvergenceTable, convergence_study, energy_order
from .identities import IdentityReport, identity_suite
from .manufacture import ManufacturedCase, manufacture, strong_residual
from .oracle import oracle_bilinear

__all__ = [
    "ConvergenceTable",
    "IdentityReport",
    "ManufacturedCase",
    "convergence_study",
    "energy_order",
    "identity_suite",
    "manufacture",
    "oracle_bilinear",
    "strong_residual",
]
