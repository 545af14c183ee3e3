"""Planning under uncertain and incomplete information.

Evidence about the world arrives as mass functions over frames of
discernment; every plausible combination becomes a possible initial world,
described at several abstraction levels and ranked by belief.  Plans are
built for the best-supported world first, reused across the others where
they fit, and merged into a single branching super-plan whose branch points
either acquire the discriminating information or commit to the
best-believed arm.
"""

from ._core import backend_name, compiled_available
from .evidence import (
    CompatibilityRelation,
    EvidentialInterval,
    Frame,
    MassDistribution,
    Proposition,
    compare_intervals,
    interval,
    joint_mass,
    marginalize,
    plausibility,
    project,
    support,
)
from .errors import (
    ApplicationError,
    CausalDivergenceError,
    GenerationError,
    PlanningAbort,
    UplanError,
    ValidationError,
)
from .state import Atom, Fact, LevelDescription, Literal, PState

__version__ = "0.1.0"

__all__ = [
    "ApplicationError",
    "Atom",
    "CausalDivergenceError",
    "CompatibilityRelation",
    "EvidentialInterval",
    "Fact",
    "Frame",
    "GenerationError",
    "LevelDescription",
    "Literal",
    "MassDistribution",
    "PState",
    "PlanningAbort",
    "Proposition",
    "UplanError",
    "ValidationError",
    "backend_name",
    "compare_intervals",
    "compiled_available",
    "interval",
    "joint_mass",
    "marginalize",
    "plausibility",
    "project",
    "support",
]
