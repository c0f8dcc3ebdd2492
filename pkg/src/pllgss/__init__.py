"""Transient stability of a PLL-synchronized converter on a weak grid.

Second-order PLL model in dimensionless form, equilibrium analysis, a
Lyapunov-based region-of-attraction estimate, an energy (EAC) baseline,
fault-scenario simulation and the true region of attraction from stable
manifolds.
"""

from .equilibria import EquilibriumKind, EquilibriumPoint, adjacent_saddles, sep
from .errors import (CriterionInapplicable, GssError, ModelValidityError, NoSEPError,
                     NumericalError, ParameterError, ScenarioError, StiffnessError)
from .lyapunov import assess, eac_assess, eac_baseline, lyapunov_context
from .model import DimlessParams, PhysicalParams, State, derive_dimless
from .sim import FaultScenario, IntegratorOptions, Outcome, run_fault_scenario

__all__ = [
    "CriterionInapplicable", "DimlessParams", "EquilibriumKind", "EquilibriumPoint",
    "FaultScenario", "GssError", "IntegratorOptions", "ModelValidityError",
    "NoSEPError", "NumericalError", "Outcome", "ParameterError", "PhysicalParams",
    "ScenarioError", "State", "StiffnessError", "adjacent_saddles", "assess",
    "derive_dimless", "eac_assess", "eac_baseline", "lyapunov_context",
    "run_fault_scenario", "sep",
]
