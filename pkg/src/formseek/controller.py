"""The distributed control law: three-point gradient estimate and velocity commands.

The controller only ever sees positions and sampled field values, never the
field object itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NearSingularFormationError
from .geometry import FormationSpec, SwarmState


@dataclass(frozen=True)
class Gains:
    """Scalar gains; the matrix gains are ``k_i * I2``.

    ``k0 = 0`` is accepted so the formation loop can be exercised on its own.
    """

    k0: float = 0.7
    k1: float = 0.05
    k2: float = 0.05

    def __post_init__(self):
        if not self.k0 >= 0:
            raise InvalidArgumentError("k0 must be nonnegative")
        if not (self.k1 > 0 and self.k2 > 0):
            raise InvalidArgumentError("k1 and k2 must be positive")


@dataclass(frozen=True, eq=False)
class ControlOutput:
    v0: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    g: np.ndarray


def gradient_from_samples(r1x, r1y, r2x, r2y, df1, df2, floor):
    """``R^{-1} (df1, df2)`` in scalar arithmetic; returns ``(gx, gy, det)``."""
    det = r1x * r2y - r1y * r2x
    if det == 0.0 or abs(det) < floor:
        raise NearSingularFormationError(det, floor)
    gx = (r2y * df1 - r1y * df2) / det
    gy = (r1x * df2 - r2x * df1) / det
    return gx, gy, det


def estimate_gradient(state: SwarmState, f0: float, f1: float, f2: float, floor: float = 0.0) -> np.ndarray:
    """Gradient estimate at ``x0`` from the three agents' measurements."""
    r1 = state.x1 - state.x0
    r2 = state.x2 - state.x0
    gx, gy, _ = gradient_from_samples(r1[0], r1[1], r2[0], r2[1], f1 - f0, f2 - f0, floor)
    return np.array([gx, gy])


def compute_velocities(state: SwarmState, spec: FormationSpec, gains: Gains, g) -> ControlOutput:
    g = np.asarray(g, dtype=float)
    v0 = gains.k0 * g
    d1 = (state.x1 - state.x0) - spec.r1_star
    d2 = (state.x2 - state.x0) - spec.r2_star
    v1 = -gains.k1 * d1 + v0
    v2 = -gains.k2 * d2 + v0
    return ControlOutput(v0=v0, v1=v1, v2=v2, g=g)
