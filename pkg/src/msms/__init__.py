"""Structure-preserving 1D finite-element solver for ionized Maxwell-Stefan
mixtures coupled to a Poisson equation, formulated in entropy variables."""

from .fem1d import Grid1D
from .mixture import Composition, MixtureSpec
from .presets import preset, scenario_from_doc, validate_scenario
from .stepper import Scenario, SolverParams, State, advance, init_state, run

__version__ = "0.1.0"

__all__ = [
    "Composition",
    "Grid1D",
    "MixtureSpec",
    "Scenario",
    "SolverParams",
    "State",
    "advance",
    "init_state",
    "preset",
    "run",
    "scenario_from_doc",
    "validate_scenario",
    "__version__",
]
