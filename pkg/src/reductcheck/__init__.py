"""Numerical verification of dynamical-systems reductions between model pairs.

Certifies that a bridge map approximately commutes with low- and high-level
dynamics (within delta over timescale tau), respects dynamical symmetries,
and composes transitively, on concrete classical, quantum, open-quantum,
Bohmian and relativistic model families.
"""

from .core import (
    BridgeMap,
    DynamicalModel,
    NormedState,
    ReductionReport,
    ReductionSpec,
    SymmetryResult,
    SymmetryTransform,
    TransitivityReport,
    check_dsr,
    check_symmetry_commutation,
    check_symmetry_group,
    check_transitivity,
    compose_bridges,
    dsr_differential_residual,
    dsr_residual,
    weighted_sup_norm,
)
from .errors import CompositionError, ConfigurationError, DomainViolation, NumericalBlowup
from .scenarios import ScenarioResult, list_scenarios, run_scenario

__version__ = "0.1.0"

__all__ = [
    "BridgeMap",
    "CompositionError",
    "ConfigurationError",
    "DomainViolation",
    "DynamicalModel",
    "NormedState",
    "NumericalBlowup",
    "ReductionReport",
    "ReductionSpec",
    "ScenarioResult",
    "SymmetryResult",
    "SymmetryTransform",
    "TransitivityReport",
    "check_dsr",
    "check_symmetry_commutation",
    "check_symmetry_group",
    "check_transitivity",
    "compose_bridges",
    "dsr_differential_residual",
    "dsr_residual",
    "list_scenarios",
    "run_scenario",
    "weighted_sup_norm",
]
