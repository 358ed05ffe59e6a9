"""Relative positions, the formation matrix and its invertibility guarantees."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFormationError, InvalidArgumentError, NearSingularFormationError, PreconditionError

# Collinearity tolerance for the "same direction" test on r1(0) vs r1*.
SAME_DIRECTION_TOL = 1e-9


def _vec(v) -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (2,):
        raise InvalidArgumentError(f"expected a 2-vector, got {v!r}")
    return arr


def cross(u, v) -> float:
    """Scalar 2-D cross product ``u x v``."""
    return float(u[0]) * float(v[1]) - float(u[1]) * float(v[0])


@dataclass(frozen=True, eq=False)
class FormationSpec:
    """Desired relative positions of agents 1 and 2 with respect to agent 0."""

    r1_star: np.ndarray
    r2_star: np.ndarray

    def __post_init__(self):
        r1 = _vec(self.r1_star)
        r2 = _vec(self.r2_star)
        object.__setattr__(self, "r1_star", r1)
        object.__setattr__(self, "r2_star", r2)
        if not (np.linalg.norm(r1) > 0 and np.linalg.norm(r2) > 0):
            raise InvalidArgumentError("desired relative positions must be nonzero")
        if cross(r1, r2) == 0.0:
            raise InvalidArgumentError("r1_star and r2_star are parallel")

    @classmethod
    def from_size_angle(cls, size: float, angle_deg: float = 90.0, size2: float | None = None) -> "FormationSpec":
        """``r1*`` along +x with length ``size``, ``r2*`` rotated by ``angle_deg``."""
        if not size > 0:
            raise InvalidArgumentError("formation size must be positive")
        s2 = size if size2 is None else size2
        th = math.radians(angle_deg)
        return cls(np.array([size, 0.0]), np.array([s2 * math.cos(th), s2 * math.sin(th)]))

    @property
    def matrix(self) -> np.ndarray:
        return np.vstack([self.r1_star, self.r2_star])

    @property
    def rho_star(self) -> float:
        return signed_sine(self.r1_star, self.r2_star)

    def inverse(self) -> np.ndarray:
        return invert(FormationMatrix.from_rows(self.r1_star, self.r2_star), 0.0)

    @property
    def size_sum(self) -> float:
        """``||r1*||^2 + ||r2*||^2``."""
        return float(self.r1_star @ self.r1_star + self.r2_star @ self.r2_star)

    def __eq__(self, other):
        return (
            isinstance(other, FormationSpec)
            and np.array_equal(self.r1_star, other.r1_star)
            and np.array_equal(self.r2_star, other.r2_star)
        )


@dataclass(frozen=True, eq=False)
class SwarmState:
    t: float
    x0: np.ndarray
    x1: np.ndarray
    x2: np.ndarray

    def __post_init__(self):
        for name in ("x0", "x1", "x2"):
            v = _vec(getattr(self, name))
            if not np.all(np.isfinite(v)):
                raise InvalidArgumentError(f"{name} is not finite")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def from_relative(cls, x0, r1, r2, t: float = 0.0) -> "SwarmState":
        x0 = _vec(x0)
        return cls(t, x0, x0 + _vec(r1), x0 + _vec(r2))

    @property
    def positions(self) -> np.ndarray:
        return np.vstack([self.x0, self.x1, self.x2])

    def deltas(self, spec: FormationSpec) -> tuple[np.ndarray, np.ndarray]:
        r1, r2 = relative_positions(self)
        return r1 - spec.r1_star, r2 - spec.r2_star

    def __eq__(self, other):
        return isinstance(other, SwarmState) and self.t == other.t and np.array_equal(self.positions, other.positions)


@dataclass(frozen=True)
class FormationMatrix:
    """2x2 matrix with rows ``r1^T`` and ``r2^T``."""

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def from_rows(cls, r1, r2) -> "FormationMatrix":
        return cls(float(r1[0]), float(r1[1]), float(r2[0]), float(r2[1]))

    @classmethod
    def from_state(cls, state: SwarmState) -> "FormationMatrix":
        return cls.from_rows(*relative_positions(state))

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def to_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])


def relative_positions(state: SwarmState) -> tuple[np.ndarray, np.ndarray]:
    return state.x1 - state.x0, state.x2 - state.x0


def signed_sine(r1, r2) -> float:
    """``sin`` of the counterclockwise angle from ``r1`` to ``r2``."""
    n1 = math.hypot(float(r1[0]), float(r1[1]))
    n2 = math.hypot(float(r2[0]), float(r2[1]))
    if n1 == 0.0 or n2 == 0.0:
        raise DegenerateFormationError("zero-length relative position")
    s = cross(r1, r2) / (n1 * n2)
    return min(1.0, max(-1.0, s))


@dataclass(frozen=True)
class Assumption2Result:
    passed: bool
    same_direction: bool
    same_half_plane: bool
    rho0: float
    rho_star: float
    message: str

    def __bool__(self):
        return self.passed


def check_assumption2(initial: SwarmState, spec: FormationSpec, tol: float = SAME_DIRECTION_TOL) -> Assumption2Result:
    """Initial indexing/orientation conditions that keep ``R(t)`` invertible.

    (i) ``r1(0)`` points the same way as ``r1*``; (ii) ``x2(0)`` and
    ``x0(0) + r2*`` lie on the same side of the line through ``x0(0), x1(0)``.
    """
    pts = initial.positions
    for i in range(3):
        for j in range(i + 1, 3):
            if np.array_equal(pts[i], pts[j]):
                raise DegenerateFormationError(f"agents {i} and {j} coincide")
    r1, r2 = relative_positions(initial)
    rho0 = signed_sine(r1, r2)
    rho_star = spec.rho_star
    same_direction = abs(signed_sine(r1, spec.r1_star)) <= tol and float(r1 @ spec.r1_star) > 0
    same_half_plane = rho0 != 0.0 and math.copysign(1.0, rho0) == math.copysign(1.0, rho_star)
    problems = []
    if not same_direction:
        problems.append("r1(0) and r1* do not have the same direction")
    if not same_half_plane:
        problems.append(f"x2(0) and x0(0)+r2* lie on opposite half-planes (rho0={rho0:+.6g}, rho*={rho_star:+.6g})")
    passed = same_direction and same_half_plane
    return Assumption2Result(passed, same_direction, same_half_plane, rho0, rho_star, "; ".join(problems) or "ok")


def det_lower_bound(spec: FormationSpec, initial: SwarmState) -> float:
    """Multiplier ``min(|rho0|, |rho*|)`` in ``|det R(t)| >= m ||r1(t)|| ||r2(t)||``."""
    verdict = check_assumption2(initial, spec)
    if not verdict.passed:
        raise PreconditionError(f"assumption 2 fails: {verdict.message}")
    return min(abs(verdict.rho0), abs(verdict.rho_star))


def default_singularity_floor(spec: FormationSpec, initial: SwarmState, k1: float, k2: float, t_max: float) -> float:
    m = det_lower_bound(spec, initial)
    return 0.5 * m * float(np.linalg.norm(spec.r1_star) * np.linalg.norm(spec.r2_star)) * math.exp(-(k1 + k2) * t_max)


def invert(R: FormationMatrix, floor: float) -> np.ndarray:
    """Adjugate-over-determinant inverse; raises below the singularity floor."""
    if isinstance(R, np.ndarray):
        R = FormationMatrix(float(R[0, 0]), float(R[0, 1]), float(R[1, 0]), float(R[1, 1]))
    det = R.det
    if det == 0.0 or abs(det) < floor:
        raise NearSingularFormationError(det, floor)
    return np.array([[R.d, -R.b], [-R.c, R.a]]) / det
