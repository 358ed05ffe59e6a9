"""Numerical certification of the closed loop.

Covers the stacked error system (``chi = (delta1, delta2, z)``), the
Taylor-remainder uncertainty inputs, the block LMI and its ultimate bound,
and samplewise checks of the geometric and analytic guarantees along a
recorded trajectory.

The remainder integrals are

    I_i = int_0^1 (1 - xi) r_i^T H(x0 + xi r_i) r_i dxi,

so that ``f_i - f_0 = r_i^T grad f(x0) + I_i`` exactly and
``K0 g = K0 grad f(x0) + phi2`` with ``phi2 = K0 R^{-1} (I_1, I_2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .controller import Gains, estimate_gradient
from .errors import AssumptionViolationError, InvalidArgumentError, NearSingularFormationError, PreconditionError
from .field import Rect, RegularityConstants, ScalarField, estimate_regularity, maximizer, spectral_norm_2x2
from .geometry import FormationSpec, SwarmState
from .linalg import gauss_legendre_01, symmetric_eigenvalues
from .simulator import Trajectory, fit_decay_rate, formation_error_series

EYE2 = np.eye(2)
ZERO2 = np.zeros((2, 2))

# Published scaled LMI solution for the single-Gaussian scenario with lambda = 0.01.
LMI_REFERENCE = {"tau_over_gamma1": 0.1429, "gamma2_over_gamma1": 85901.0, "sigma_min_p_over_gamma1": 0.2}


def stack_error(delta1, delta2, z) -> np.ndarray:
    return np.concatenate([np.asarray(delta1, float), np.asarray(delta2, float), np.asarray(z, float)])


# ---------------------------------------------------------------------------
# System matrices

@dataclass(frozen=True, eq=False)
class SystemMatrices:
    a: np.ndarray
    b: np.ndarray
    c1: np.ndarray
    x_star: np.ndarray | None = None
    hessian_star: np.ndarray | None = None

    @classmethod
    def from_a(cls, a) -> "SystemMatrices":
        """Wrap an arbitrary 6x6 ``A`` with the standard ``B`` and ``C1``."""
        return cls(np.asarray(a, dtype=float), _b_matrix(), _c1_matrix())


def _b_matrix() -> np.ndarray:
    return np.vstack([ZERO2, ZERO2, EYE2])


def _c1_matrix() -> np.ndarray:
    return np.hstack([ZERO2, ZERO2, EYE2])


def build_system_matrices(field: ScalarField, spec: FormationSpec, gains: Gains) -> SystemMatrices:
    x_star = maximizer(field)
    h = field.hessian(x_star)
    if not (h[0, 0] < 0 and np.linalg.det(h) > 0):
        raise AssumptionViolationError(f"Hessian at the maximizer is not negative definite: {h.tolist()}")
    a = np.zeros((6, 6))
    a[0:2, 0:2] = -gains.k1 * EYE2
    a[2:4, 2:4] = -gains.k2 * EYE2
    a[4:6, 4:6] = gains.k0 * h
    return SystemMatrices(a=a, b=_b_matrix(), c1=_c1_matrix(), x_star=x_star, hessian_star=h)


# ---------------------------------------------------------------------------
# Uncertainty inputs

def remainder_integrals(field: ScalarField, x0, r, order: int = 16) -> np.ndarray:
    """``int_0^1 (1-xi) r^T H(x0 + xi r) r dxi`` for each row of ``x0``/``r``."""
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    r = np.atleast_2d(np.asarray(r, dtype=float))
    nodes, weights = gauss_legendre_01(order)
    px = x0[:, 0:1] + nodes[None, :] * r[:, 0:1]
    py = x0[:, 1:2] + nodes[None, :] * r[:, 1:2]
    h11, h12, h22 = field.hessian_grid(px, py)
    rx, ry = r[:, 0:1], r[:, 1:2]
    quad = rx * rx * h11 + 2.0 * rx * ry * h12 + ry * ry * h22
    return (quad * ((1.0 - nodes) * weights)[None, :]).sum(axis=1)


def _apply_inverse(r1, r2, v1, v2):
    """Rowwise ``R^{-1} (v1, v2)`` with ``R = [r1^T; r2^T]`` via the adjugate."""
    det = r1[:, 0] * r2[:, 1] - r1[:, 1] * r2[:, 0]
    return np.column_stack([(r2[:, 1] * v1 - r1[:, 1] * v2) / det, (r1[:, 0] * v2 - r2[:, 0] * v1) / det])


@dataclass(frozen=True, eq=False)
class PhiTerms:
    phi2: np.ndarray
    phi2_star: np.ndarray
    phi3: np.ndarray


def _phi_series(x0, r1, r2, field, spec, gains, order):
    n = len(x0)
    i1 = remainder_integrals(field, x0, r1, order)
    i2 = remainder_integrals(field, x0, r2, order)
    r1s = np.broadcast_to(spec.r1_star, (n, 2))
    r2s = np.broadcast_to(spec.r2_star, (n, 2))
    i1s = remainder_integrals(field, x0, r1s, order)
    i2s = remainder_integrals(field, x0, r2s, order)
    phi2 = gains.k0 * _apply_inverse(r1, r2, i1, i2)
    phi2_star = gains.k0 * _apply_inverse(r1s, r2s, i1s, i2s)
    return phi2, phi2_star, phi2 - phi2_star


def compute_phi_terms(state: SwarmState, field: ScalarField, spec: FormationSpec, gains: Gains, quadrature_order: int = 16) -> PhiTerms:
    r1 = (state.x1 - state.x0)[None, :]
    r2 = (state.x2 - state.x0)[None, :]
    if r1[0, 0] * r2[0, 1] - r1[0, 1] * r2[0, 0] == 0.0:
        raise NearSingularFormationError(0.0, 0.0, state.t)
    phi2, phi2s, phi3 = _phi_series(state.x0[None, :], r1, r2, field, spec, gains, quadrature_order)
    return PhiTerms(phi2[0], phi2s[0], phi3[0])


@dataclass(frozen=True, eq=False)
class Phi1Result:
    phi1: np.ndarray
    bound: float
    within_bound: bool
    phi1_direct: np.ndarray
    closure: float


def compute_phi1(
    state: SwarmState,
    field: ScalarField,
    gains: Gains,
    spec: FormationSpec,
    alpha1: float,
    g=None,
    quadrature_order: int = 16,
    x_star=None,
) -> Phi1Result:
    """Residual ``phi1 = K0 g - K0 H* z - phi2`` and its check against ``alpha1 ||z||``.

    ``closure`` compares against the direct form ``K0 (grad f(x0) - H* z)``,
    so it measures how well ``K0 g = K0 grad f(x0) + phi2`` closes.
    """
    if x_star is None:
        x_star = maximizer(field)
    h_star = field.hessian(x_star)
    if g is None:
        g = estimate_gradient(state, field.value(state.x0), field.value(state.x1), field.value(state.x2))
    g = np.asarray(g, dtype=float)
    z = state.x0 - x_star
    phi2 = compute_phi_terms(state, field, spec, gains, quadrature_order).phi2
    phi1 = gains.k0 * g - gains.k0 * (h_star @ z) - phi2
    direct = gains.k0 * (field.gradient(state.x0) - h_star @ z)
    bound = alpha1 * float(np.linalg.norm(z))
    closure = float(np.linalg.norm(phi1 - direct))
    return Phi1Result(phi1, bound, bool(np.linalg.norm(phi1) <= bound + 1e-9), direct, closure)


@dataclass(frozen=True)
class UncertaintyBounds:
    alpha1: float
    alpha2_star: float
    epsilon: float
    beta: float


def alpha_constants(reg: RegularityConstants, spec: FormationSpec, gains: Gains) -> tuple[float, float]:
    """``alpha1 = 2 g_h k0`` and the closed-form bound on ``||phi2*||``."""
    alpha1 = 2.0 * reg.g_h * gains.k0
    rinv = spectral_norm_2x2(spec.inverse())
    alpha2 = 0.5 * gains.k0 * reg.m_h * rinv * spec.size_sum
    return alpha1, alpha2


def uncertainty_bounds(
    reg: RegularityConstants,
    spec: FormationSpec,
    gains: Gains,
    traj: Trajectory,
    field: ScalarField,
    quadrature_order: int = 16,
    phi3_floor: float = 1e-12,
) -> UncertaintyBounds:
    if len(traj) == 0:
        raise PreconditionError("empty trajectory")
    alpha1, alpha2 = alpha_constants(reg, spec, gains)
    _, _, phi3 = _phi_series(traj.x[:, 0], traj.r1, traj.r2, field, spec, gains, quadrature_order)
    eps, beta = fit_decay_rate(traj.t, np.hypot(phi3[:, 0], phi3[:, 1]), phi3_floor)
    return UncertaintyBounds(alpha1, alpha2, eps, beta)


# ---------------------------------------------------------------------------
# LMI

@dataclass(frozen=True, eq=False)
class LmiCandidate:
    p: np.ndarray
    tau: float
    gamma1: float
    gamma2: float
    lam: float

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (6, 6):
            raise InvalidArgumentError("P must be 6x6")
        if not np.array_equal(p, p.T):
            raise InvalidArgumentError("P must be symmetric")
        for name in ("tau", "gamma1", "gamma2", "lam"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise InvalidArgumentError(f"{name} must be positive and finite, got {v}")
        if not symmetric_eigenvalues(p)[0] > 0:
            raise InvalidArgumentError("P must be positive definite")
        object.__setattr__(self, "p", p)

    @classmethod
    def block_diagonal(cls, p1, p2, p3, tau, gamma1, gamma2, lam) -> "LmiCandidate":
        return cls(np.diag([p1, p1, p2, p2, p3, p3]).astype(float), tau, gamma1, gamma2, lam)

    def scaled(self, c: float) -> "LmiCandidate":
        return LmiCandidate(c * self.p, c * self.tau, c * self.gamma1, c * self.gamma2, self.lam)

    @property
    def sigma_min_p(self) -> float:
        return float(symmetric_eigenvalues(self.p)[0])

    def to_dict(self) -> dict:
        return {
            "p": self.p.tolist(),
            "tau": self.tau,
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "lambda": self.lam,
        }

    def scaled_quantities(self) -> dict:
        """Quantities normalised by ``gamma1``; feasibility and the bound are invariant to that scale."""
        return {
            "tau_over_gamma1": self.tau / self.gamma1,
            "gamma2_over_gamma1": self.gamma2 / self.gamma1,
            "sigma_min_p_over_gamma1": self.sigma_min_p / self.gamma1,
        }


def lmi_matrix(sys: SystemMatrices, cand: LmiCandidate, alpha1: float) -> np.ndarray:
    p, a, b, c1 = cand.p, sys.a, sys.b, sys.c1
    top = p @ a + a.T @ p + cand.tau * alpha1**2 * (c1.T @ c1) + cand.lam * p
    pb = p @ b
    m = np.zeros((12, 12))
    m[0:6, 0:6] = top
    for k, s in enumerate((cand.tau, cand.gamma1, cand.gamma2)):
        lo = 6 + 2 * k
        m[0:6, lo : lo + 2] = pb
        m[lo : lo + 2, 0:6] = pb.T
        m[lo : lo + 2, lo : lo + 2] = -s * EYE2
    return m


@dataclass(frozen=True, eq=False)
class LmiVerdict:
    feasible: bool
    max_eigenvalue: float
    min_eigenvalue_p: float
    candidate: LmiCandidate

    @property
    def margin(self) -> float:
        return -self.max_eigenvalue


def check_lmi(sys: SystemMatrices, cand: LmiCandidate, alpha1: float, margin_floor: float = 0.0) -> LmiVerdict:
    ev = symmetric_eigenvalues(lmi_matrix(sys, cand, alpha1))
    pmin = float(symmetric_eigenvalues(cand.p)[0])
    feasible = bool(ev[-1] < -margin_floor and pmin > 0)
    return LmiVerdict(feasible, float(ev[-1]), pmin, cand)


@dataclass(frozen=True, eq=False)
class LmiSearchResult:
    feasible: bool
    candidate: LmiCandidate | None
    verdict: LmiVerdict | None
    trials: int
    first_feasible_trial: int | None

    @property
    def margin(self) -> float:
        return -math.inf if self.verdict is None else self.verdict.margin


def lmi_search(
    sys: SystemMatrices,
    alpha1: float,
    lam: float,
    budget: int = 2000,
    seed: int = 0,
    objective: str = "margin",
    log10_range: tuple[float, float] = (-4.0, 6.0),
) -> LmiSearchResult:
    """Random then coordinate search over ``P = diag(p1 I, p2 I, p3 I)`` and ``tau, gamma2``.

    ``gamma1`` is fixed to 1; feasibility and the ultimate bound are both
    invariant under a common positive rescaling, so nothing is lost.
    ``objective="margin"`` maximises the negative-definiteness margin;
    ``objective="bound"`` maximises ``sigma_min(P)/gamma1`` among feasible
    candidates (a tighter ultimate bound).
    """
    if budget < 1:
        raise InvalidArgumentError("budget must be >= 1")
    if not lam > 0:
        raise InvalidArgumentError("lambda must be positive")
    if objective not in ("margin", "bound"):
        raise InvalidArgumentError(f"unknown objective {objective!r}")
    rng = np.random.default_rng(seed)
    lo, hi = log10_range
    trials = 0
    first = None
    best_theta = None
    best_score = -math.inf
    best_margin = -math.inf

    def evaluate(theta):
        nonlocal trials, first
        trials += 1
        p1, p2, p3, tau, g2 = (10.0**v for v in theta)
        m = lmi_matrix(sys, LmiCandidate.block_diagonal(p1, p2, p3, tau, 1.0, g2, lam), alpha1)
        margin = -float(symmetric_eigenvalues(m)[-1])
        if margin > 0 and first is None:
            first = trials
        if objective == "margin" or margin <= 0:
            score = margin if objective == "margin" else margin - 1e6
        else:
            score = math.log10(min(p1, p2, p3))
        return score, margin

    n_random = max(1, budget // 2)
    for _ in range(n_random):
        theta = rng.uniform(lo, hi, size=5)
        score, margin = evaluate(theta)
        if score > best_score:
            best_theta, best_score, best_margin = theta, score, margin

    step = 0.5 * (hi - lo) / 10.0
    theta = best_theta.copy()
    while trials < budget and step > 1e-6:
        improved = False
        for k in range(5):
            for sgn in (1.0, -1.0):
                if trials >= budget:
                    break
                cand = theta.copy()
                cand[k] = min(hi, max(lo, cand[k] + sgn * step))
                score, margin = evaluate(cand)
                if score > best_score:
                    theta, best_score, best_margin = cand, score, margin
                    improved = True
                    break
        if not improved:
            step *= 0.5

    if best_margin <= 0:
        return LmiSearchResult(False, None, None, trials, first)
    p1, p2, p3, tau, g2 = (10.0**v for v in theta)
    cand = LmiCandidate.block_diagonal(p1, p2, p3, tau, 1.0, g2, lam)
    verdict = check_lmi(sys, cand, alpha1)
    return LmiSearchResult(verdict.feasible, cand, verdict, trials, first)


@dataclass(frozen=True)
class TheoremBound:
    radius: float
    radius_loose: float
    squared: float
    squared_loose: float


def theorem_bound(
    cand: LmiCandidate,
    spec: FormationSpec,
    gains: Gains,
    m_h: float,
    sys: SystemMatrices,
    alpha1: float,
) -> TheoremBound:
    """Ultimate radius for ``||x0 - x*||``.

    ``radius`` uses the ``4 lambda sigma_min(P)`` denominator of the main
    convergence result; ``radius_loose`` the ``lambda sigma_min(P)`` that the
    Gronwall-style derivation of that result arrives at, larger by a factor 2.
    Acceptance uses the loose radius.
    """
    verdict = check_lmi(sys, cand, alpha1)
    if not verdict.feasible:
        raise PreconditionError("theorem bound requires a feasible LMI candidate")
    rinv = spectral_norm_2x2(spec.inverse())
    num = cand.gamma1 * gains.k0**2 * m_h**2 * rinv**2 * spec.size_sum**2
    sq_loose = num / (cand.lam * verdict.min_eigenvalue_p)
    sq = sq_loose / 4.0
    return TheoremBound(math.sqrt(sq), math.sqrt(sq_loose), sq, sq_loose)


# ---------------------------------------------------------------------------
# Taylor-expansion checks

@dataclass(frozen=True)
class TaylorReport:
    passed: bool
    samples: int
    worst_value_ratio: float
    worst_gradient_ratio: float
    m_h: float
    exact_remainder_error: float | None = None


def taylor_checks(
    field: ScalarField,
    region: Rect,
    samples: int,
    seed: int = 0,
    regularity: RegularityConstants | None = None,
    grid_step: float = 1.0,
) -> TaylorReport:
    """Check the first-order Taylor remainders against ``m_h`` on random pairs.

    Verified: ``|f(x) - f(xb) - h^T grad f(xb)| <= m_h ||h||^2 / 2`` and
    ``||grad f(x) - grad f(xb)|| <= m_h ||h||``. For quadratic fields the
    second-order expansion is exact, and its residual is reported too.
    """
    if samples < 1:
        raise InvalidArgumentError("samples must be >= 1")
    if regularity is None:
        regularity = estimate_regularity(field, region, grid_step)
    m_h = regularity.m_h
    rng = np.random.default_rng(seed)
    lo = np.array([region.xmin, region.ymin])
    hi = np.array([region.xmax, region.ymax])
    xb = rng.uniform(lo, hi, size=(samples, 2))
    x = rng.uniform(lo, hi, size=(samples, 2))
    scale = max(1.0, field.amplitude_sum, abs(field.b))
    worst_v = worst_g = 0.0
    exact_err = 0.0 if field.kind == "quadratic" else None
    for i in range(samples):
        h = x[i] - xb[i]
        hn2 = float(h @ h)
        fb = field.value(xb[i])
        gb = field.gradient(xb[i])
        rem = abs(field.value(x[i]) - fb - float(h @ gb))
        grem = float(np.linalg.norm(field.gradient(x[i]) - gb))
        # rounding floor keeps zero-curvature fields from dividing 0 by 0
        noise = 1e-12 * scale * (1.0 + math.sqrt(hn2))
        worst_v = max(worst_v, 0.0 if rem <= noise else rem / (0.5 * m_h * hn2) if m_h > 0 else math.inf)
        worst_g = max(worst_g, 0.0 if grem <= noise else grem / (m_h * math.sqrt(hn2)) if m_h > 0 else math.inf)
        if exact_err is not None:
            hq = field.hessian(xb[i])
            exact_err = max(exact_err, abs(field.value(x[i]) - fb - float(h @ gb) - 0.5 * float(h @ hq @ h)))
    passed = worst_v <= 1.0 and worst_g <= 1.0
    return TaylorReport(passed, samples, worst_v, worst_g, m_h, exact_err)


# ---------------------------------------------------------------------------
# Trajectory invariant suites

def trajectory_region(traj: Trajectory, pad_fraction: float = 0.2) -> Rect:
    """Bounding box of every agent position (and ``x*``), padded."""
    pts = traj.x.reshape(-1, 2)
    if traj.x_star is not None:
        pts = np.vstack([pts, traj.x_star])
    return Rect.around(pts, pad_fraction)


def certification_region(x_star, spec: FormationSpec, half_width: float) -> Rect:
    """Box around ``x*`` on which the LMI constants are estimated.

    Padded by the formation size so agents around a lead inside the box are
    covered too.
    """
    pad = max(float(np.linalg.norm(spec.r1_star)), float(np.linalg.norm(spec.r2_star)))
    return Rect.centered(x_star, half_width + pad)


def entry_time(traj: Trajectory, x_star, half_width: float) -> float | None:
    """First sample time after which ``x0`` stays in the box around ``x*``."""
    z = np.abs(traj.x[:, 0] - np.asarray(x_star))
    inside = (z[:, 0] <= half_width) & (z[:, 1] <= half_width)
    if not inside[-1]:
        return None
    outside = np.flatnonzero(~inside)
    idx = 0 if len(outside) == 0 else outside[-1] + 1
    return float(traj.t[idx])


@dataclass(frozen=True)
class FormationReport:
    passed: bool
    max_deviation: tuple[float, float]
    rates: tuple[float, float]
    rate_errors: tuple[float, float]


def formation_oracle_check(traj: Trajectory, rel_tol: float = 1e-6, rate_tol: float = 0.01, fit_floor: float = 1e-6) -> FormationReport:
    """Compare ``||delta_i(t)||`` with ``||delta_i(0)|| exp(-k_i t)``.

    ``max_deviation`` is relative to ``||delta_i(0)||``. Rates are fitted on
    samples whose norm is at least ``fit_floor * ||delta_i(0)||`` (below it
    coordinate rounding dominates).
    """
    series = formation_error_series(traj)
    t = traj.t - traj.t[0]
    devs, rates, errs = [], [], []
    ok = True
    for j, k in enumerate((traj.gains.k1, traj.gains.k2)):
        d0 = series[0, j]
        if d0 == 0.0:
            dev = float(np.max(series[:, j]))
            devs.append(dev)
            rates.append(math.nan)
            errs.append(0.0)
            ok &= dev <= 1e-12
            continue
        dev = float(np.max(np.abs(series[:, j] - d0 * np.exp(-k * t))) / d0)
        _, rate = fit_decay_rate(t, series[:, j], fit_floor * d0)
        devs.append(dev)
        rates.append(rate)
        err = abs(rate - k) / k if math.isfinite(rate) else math.inf
        errs.append(err)
        ok &= dev <= rel_tol and err <= rate_tol
    return FormationReport(bool(ok), tuple(devs), tuple(rates), tuple(errs))


@dataclass(frozen=True)
class Lemma1Report:
    passed: bool
    sign_constant: bool
    multiplier: float
    worst_sine_slack: float
    worst_det_slack: float


def lemma1_corollary2_check(traj: Trajectory, tol: float = 1e-9) -> Lemma1Report:
    """Sign of ``sin theta12(t)`` is constant; ``|sin|`` and ``|det R|`` stay above the bounds.

    Slack values are ``observed - bound``; the checks pass when slack >= -tol.
    """
    r1, r2 = traj.r1, traj.r2
    n1 = np.hypot(r1[:, 0], r1[:, 1])
    n2 = np.hypot(r2[:, 0], r2[:, 1])
    crs = r1[:, 0] * r2[:, 1] - r1[:, 1] * r2[:, 0]
    sines = crs / (n1 * n2)
    rho0 = sines[0]
    rho_star = traj.spec.rho_star
    mult = min(abs(rho0), abs(rho_star))
    sign_constant = bool(np.all(np.sign(sines) == np.sign(rho_star)))
    sine_slack = float(np.min(np.abs(sines) - mult))
    det_slack = float(np.min(np.abs(crs) - mult * n1 * n2))
    passed = sign_constant and sine_slack >= -tol and det_slack >= -tol
    return Lemma1Report(passed, sign_constant, float(mult), sine_slack, det_slack)


@dataclass(frozen=True)
class InverseDecayReport:
    passed: bool
    rate: float
    monotone_after: float | None


def inverse_decay_check(traj: Trajectory, rate_fraction: float = 0.9, fit_floor: float = 1e-9, mono_tol: float = 1e-12) -> InverseDecayReport:
    """``||R^{-1}(t) - R*^{-1}||`` decays exponentially at least at ``0.9 min(k1, k2)``."""
    spec = traj.spec
    rs_inv = spec.inverse()
    r1, r2 = traj.r1, traj.r2
    det = r1[:, 0] * r2[:, 1] - r1[:, 1] * r2[:, 0]
    inv = np.stack([np.column_stack([r2[:, 1], -r1[:, 1]]), np.column_stack([-r2[:, 0], r1[:, 0]])], axis=1) / det[:, None, None]
    diff = inv - rs_inv
    norms = np.array([spectral_norm_2x2(m) for m in diff])
    scale = spectral_norm_2x2(rs_inv)
    _, rate = fit_decay_rate(traj.t, norms, fit_floor * scale)
    increases = np.flatnonzero(np.diff(norms) > mono_tol * scale)
    mono = float(traj.t[0]) if len(increases) == 0 else (float(traj.t[increases[-1] + 1]) if increases[-1] + 1 < len(traj.t) else None)
    kmin = min(traj.gains.k1, traj.gains.k2)
    passed = (not math.isfinite(rate) and norms[0] == 0.0) or rate >= rate_fraction * kmin
    return InverseDecayReport(bool(passed), rate, mono)


@dataclass(frozen=True)
class Lemma2Report:
    passed: bool
    alpha1: float
    alpha2_star: float
    worst_phi1_slack: float
    max_phi2_star: float
    phi3_epsilon: float
    phi3_beta: float
    beta_required: float | None
    max_closure: float


def lemma2_check(
    traj: Trajectory,
    field: ScalarField,
    reg: RegularityConstants,
    quadrature_order: int = 16,
    closure_tol: float = 1e-8,
    rate_fraction: float = 0.9,
) -> Lemma2Report:
    """Samplewise remainder bounds, the ``phi3`` decay fit and residual closure along ``traj``.

    ``worst_phi1_slack`` is ``min(alpha1 ||z|| - ||phi1||)``.
    """
    if traj.x_star is None:
        raise PreconditionError("remainder-bound checks need a field with a maximizer")
    spec, gains = traj.spec, traj.gains
    alpha1, alpha2 = alpha_constants(reg, spec, gains)
    x0 = traj.x[:, 0]
    phi2, phi2s, phi3 = _phi_series(x0, traj.r1, traj.r2, field, spec, gains, quadrature_order)
    h_star = field.hessian(traj.x_star)
    z = x0 - traj.x_star
    hz = z @ h_star.T
    phi1 = gains.k0 * traj.g - gains.k0 * hz - phi2
    grads = np.array([field.gradient_xy(float(p[0]), float(p[1])) for p in x0])
    direct = gains.k0 * (grads - hz)
    closure = float(np.max(np.hypot(*(phi1 - direct).T)))
    znorm = np.hypot(z[:, 0], z[:, 1])
    phi1n = np.hypot(phi1[:, 0], phi1[:, 1])
    slack = float(np.min(alpha1 * znorm - phi1n))
    max_phi2s = float(np.max(np.hypot(phi2s[:, 0], phi2s[:, 1])))
    eps, beta = fit_decay_rate(traj.t, np.hypot(phi3[:, 0], phi3[:, 1]), 1e-12)
    moving = bool(np.any(formation_error_series(traj)[0] > 0))
    beta_req = rate_fraction * min(gains.k1, gains.k2) if moving else None
    ok = slack >= -1e-9 and max_phi2s <= alpha2 + 1e-9 and closure <= closure_tol
    if beta_req is not None:
        ok &= beta >= beta_req
    return Lemma2Report(bool(ok), alpha1, alpha2, slack, max_phi2s, eps, beta, beta_req, closure)
