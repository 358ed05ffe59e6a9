"""Three-robot formation acquisition with cooperative extremum seeking.

Simulates the closed loop on a scalar field and numerically certifies the
geometric and analytic guarantees of the scheme.
"""

from .controller import ControlOutput, Gains, compute_velocities, estimate_gradient
from .errors import (
    AssumptionViolationError,
    ConfigError,
    CsvFormatError,
    DegenerateFormationError,
    FormseekError,
    InvalidArgumentError,
    NearSingularFormationError,
    NoMaximizerError,
    PreconditionError,
    SimulationError,
)
from .field import PRESETS, Rect, RegularityConstants, ScalarField, estimate_regularity, evaluate, grad, hessian, maximizer, preset
from .geometry import FormationMatrix, FormationSpec, SwarmState, check_assumption2, invert, relative_positions, signed_sine
from .simulator import SimConfig, Trajectory, run, step

__version__ = "0.1.0"
