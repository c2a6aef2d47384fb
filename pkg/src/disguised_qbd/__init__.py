"""Queue with servers that arrive disguised as customers.

Matrix-geometric solver, truncated-chain oracle and event simulator for the
quasi-birth-death process on states ``(customers n, servers k)``.
"""

from .backend import BACKEND
from .errors import (
    ConfigError,
    ConvergenceError,
    InstabilityError,
    InvalidStateError,
    NearInstabilityError,
    SingularMatrixError,
)
from .metrics import Metrics
from .model import (
    BlockSet,
    ModelParams,
    State,
    StateSpace,
    assemble_truncated_generator,
    build_blocks,
    transition_rates,
    validate_generator,
)
from .oracle import OracleSolution, oracle_metrics, solve_truncated
from .qbd import SteadyState, compute_R, level_distribution, normalize, solve, solve_boundary
from .simulator import SimConfig, SimEstimates, Trajectory, estimate, sample_on_grid, simulate
from .stability import StabilityReport, ergodicity, stationary_of_A

__version__ = "0.1.0"
