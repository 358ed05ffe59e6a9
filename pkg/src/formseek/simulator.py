"""Fixed-step RK4 integration of the closed loop with trajectory recording."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .controller import Gains, gradient_from_samples
from .errors import AssumptionViolationError, InvalidArgumentError, NearSingularFormationError, NoMaximizerError, SimulationError
from .field import ScalarField, maximizer
from .geometry import Assumption2Result, FormationSpec, SwarmState, check_assumption2, default_singularity_floor


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.05
    t_max: float = 1000.0
    record_stride: int = 10
    stop_tolerance: float | None = None
    singularity_floor: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidArgumentError("dt must be positive")
        if not self.t_max >= self.dt:
            raise InvalidArgumentError("t_max must be at least dt")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise InvalidArgumentError("record_stride must be an integer >= 1")
        if self.stop_tolerance is not None and not self.stop_tolerance > 0:
            raise InvalidArgumentError("stop_tolerance must be positive")
        if self.singularity_floor is not None and not self.singularity_floor >= 0:
            raise InvalidArgumentError("singularity_floor must be nonnegative")

    @property
    def n_steps(self) -> int:
        return max(1, int(math.floor(self.t_max / self.dt + 1e-9)))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded samples plus run metadata.

    ``x`` has shape ``(n, 3, 2)`` (agent, coordinate); ``f`` holds the three
    measurements and ``g`` the gradient estimate at each sample.
    """

    t: np.ndarray
    x: np.ndarray
    g: np.ndarray
    f: np.ndarray
    det: np.ndarray
    spec: FormationSpec
    gains: Gains
    config: SimConfig
    x_star: np.ndarray | None = None
    assumption2: Assumption2Result | None = None
    field_name: str | None = None
    metadata: dict = dc_field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def r1(self) -> np.ndarray:
        return self.x[:, 1] - self.x[:, 0]

    @property
    def r2(self) -> np.ndarray:
        return self.x[:, 2] - self.x[:, 0]

    @property
    def delta1(self) -> np.ndarray:
        return self.r1 - self.spec.r1_star

    @property
    def delta2(self) -> np.ndarray:
        return self.r2 - self.spec.r2_star

    @property
    def z(self) -> np.ndarray | None:
        if self.x_star is None:
            return None
        return self.x[:, 0] - self.x_star

    @property
    def z_norm(self) -> np.ndarray | None:
        z = self.z
        return None if z is None else np.hypot(z[:, 0], z[:, 1])

    def state(self, i: int) -> SwarmState:
        return SwarmState(self.t[i], self.x[i, 0], self.x[i, 1], self.x[i, 2])

    def states(self):
        for i in range(len(self.t)):
            yield self.state(i)

    @property
    def final(self) -> SwarmState:
        return self.state(len(self.t) - 1)


def _make_rhs(field: ScalarField, spec: FormationSpec, gains: Gains, floor: float):
    f = field.scalar_function()
    k0, k1, k2 = gains.k0, gains.k1, gains.k2
    r1sx, r1sy = float(spec.r1_star[0]), float(spec.r1_star[1])
    r2sx, r2sy = float(spec.r2_star[0]), float(spec.r2_star[1])

    def rhs(s):
        x0x, x0y, x1x, x1y, x2x, x2y = s
        f0 = f(x0x, x0y)
        f1 = f(x1x, x1y)
        f2 = f(x2x, x2y)
        r1x, r1y = x1x - x0x, x1y - x0y
        r2x, r2y = x2x - x0x, x2y - x0y
        gx, gy, det = gradient_from_samples(r1x, r1y, r2x, r2y, f1 - f0, f2 - f0, floor)
        v0x, v0y = k0 * gx, k0 * gy
        deriv = (
            v0x,
            v0y,
            -k1 * (r1x - r1sx) + v0x,
            -k1 * (r1y - r1sy) + v0y,
            -k2 * (r2x - r2sx) + v0x,
            -k2 * (r2y - r2sy) + v0y,
        )
        return deriv, (gx, gy, f0, f1, f2, det)

    return rhs


def _rk4(rhs, s, dt, first=None):
    k1, aux = first if first is not None else rhs(s)
    h = 0.5 * dt
    k2, _ = rhs(tuple(si + h * ki for si, ki in zip(s, k1)))
    k3, _ = rhs(tuple(si + h * ki for si, ki in zip(s, k2)))
    k4, _ = rhs(tuple(si + dt * ki for si, ki in zip(s, k3)))
    c = dt / 6.0
    out = tuple(si + c * (a + 2.0 * b + 2.0 * cc + d) for si, a, b, cc, d in zip(s, k1, k2, k3, k4))
    return out, k1, aux


def _flat(state: SwarmState):
    return (
        float(state.x0[0]), float(state.x0[1]),
        float(state.x1[0]), float(state.x1[1]),
        float(state.x2[0]), float(state.x2[1]),
    )


def step(state: SwarmState, field: ScalarField, spec: FormationSpec, gains: Gains, dt: float, floor: float = 0.0) -> SwarmState:
    """One classical RK4 step of all six coordinates."""
    if not dt > 0:
        raise InvalidArgumentError("dt must be positive")
    rhs = _make_rhs(field, spec, gains, floor)
    try:
        s, _, _ = _rk4(rhs, _flat(state), dt)
    except NearSingularFormationError as exc:
        raise NearSingularFormationError(exc.det, exc.floor, state.t) from None
    if not all(math.isfinite(v) for v in s):
        raise SimulationError("non-finite state", state.t + dt)
    return SwarmState(state.t + dt, s[0:2], s[2:4], s[4:6])


def run(initial: SwarmState, field: ScalarField, spec: FormationSpec, gains: Gains, config: SimConfig = SimConfig()) -> Trajectory:
    """Integrate from ``initial`` to ``config.t_max`` and record every ``record_stride`` steps."""
    verdict = check_assumption2(initial, spec)
    if not verdict.passed:
        raise AssumptionViolationError(f"assumption 2 fails: {verdict.message}")
    floor = config.singularity_floor
    if floor is None:
        floor = default_singularity_floor(spec, initial, gains.k1, gains.k2, config.t_max)
    try:
        x_star = maximizer(field)
    except NoMaximizerError:
        x_star = None

    rhs = _make_rhs(field, spec, gains, floor)
    dt = config.dt
    stride = int(config.record_stride)
    n_steps = config.n_steps
    t0 = initial.t
    tol = config.stop_tolerance

    ts, xs, auxs = [], [], []
    s = _flat(initial)
    i = 0
    while True:
        t = t0 + i * dt
        try:
            first = rhs(s)
        except NearSingularFormationError as exc:
            raise NearSingularFormationError(exc.det, exc.floor, t) from None
        last = i == n_steps
        stop = False
        if tol is not None and not last:
            k1v, aux = first
            d_max = max(
                math.hypot(s[2] - s[0] - spec.r1_star[0], s[3] - s[1] - spec.r1_star[1]),
                math.hypot(s[4] - s[0] - spec.r2_star[0], s[5] - s[1] - spec.r2_star[1]),
            )
            stop = d_max <= tol and math.hypot(k1v[0], k1v[1]) <= tol
        if i % stride == 0 or last or stop:
            ts.append(t)
            xs.append(s)
            auxs.append(first[1])
        if last or stop:
            break
        try:
            s, _, _ = _rk4(rhs, s, dt, first)
        except NearSingularFormationError as exc:
            raise NearSingularFormationError(exc.det, exc.floor, t) from None
        if not all(math.isfinite(v) for v in s):
            raise SimulationError("non-finite state", t + dt)
        i += 1

    aux = np.array(auxs)
    return Trajectory(
        t=np.array(ts),
        x=np.array(xs).reshape(-1, 3, 2),
        g=aux[:, 0:2].copy(),
        f=aux[:, 2:5].copy(),
        det=aux[:, 5].copy(),
        spec=spec,
        gains=gains,
        config=config,
        x_star=x_star,
        assumption2=verdict,
        field_name=field.name,
        metadata={"singularity_floor": floor},
    )


def formation_error_series(traj: Trajectory) -> np.ndarray:
    """Per-sample ``(||delta1||, ||delta2||)``."""
    d1, d2 = traj.delta1, traj.delta2
    return np.column_stack([np.hypot(d1[:, 0], d1[:, 1]), np.hypot(d2[:, 0], d2[:, 1])])


def fit_decay_rate(t, y, floor: float = 1e-12) -> tuple[float, float]:
    """Least-squares fit ``y ~ eps * exp(-beta t)`` over samples with ``y > floor``.

    Returns ``(eps, beta)``; ``beta`` is ``inf`` when fewer than two samples
    clear the floor.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = y > floor
    if mask.sum() < 2:
        return 0.0, math.inf
    slope, intercept = np.polyfit(t[mask], np.log(y[mask]), 1)
    return float(math.exp(intercept)), float(-slope)
