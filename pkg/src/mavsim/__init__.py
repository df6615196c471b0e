"""Two-lane cellular-automaton simulator of mixed traffic with modular autonomous vehicles."""

from .core import (
    ConfigError,
    Kind,
    Mode,
    NeighborView,
    RoadState,
    SimParams,
    SimulationFault,
    Vehicle,
    from_cells,
    neighbor_view,
    to_cells,
)
from .engine import RunOutput, init_state, run, step, step_with_draws

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "Kind", "Mode", "NeighborView", "RoadState", "RunOutput",
    "SimParams", "SimulationFault", "Vehicle", "from_cells", "init_state",
    "neighbor_view", "run", "step", "step_with_draws", "to_cells", "__version__",
]
