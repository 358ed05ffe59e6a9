"""Analytic 2-D signal fields with exact gradients and Hessians.

Every field is a closed-form expression, so derivatives are obtained by
differentiating the expression rather than by finite differences. Fields are
immutable and safe to share between threads.

Gaussian terms use the form ``a * exp(-(x - c)^T W (x - c))`` with ``W``
symmetric positive semidefinite; the two reserved presets are

* ``paper-gaussian``: ``1000 exp(-((x-100)^2 + (y-100)^2) / 70000)``
* ``paper-multimodal``: a sum of three such terms centred at (100, 100).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentError, NoMaximizerError

KINDS = ("gaussian", "sum_of_gaussians", "affine", "quadratic")


def spectral_norm_2x2(m) -> float:
    """Largest singular value of a 2x2 matrix, from the eigenvalues of M^T M."""
    a, b = float(m[0][0]), float(m[0][1])
    c, d = float(m[1][0]), float(m[1][1])
    s = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = max(s * s - 4.0 * det * det, 0.0)
    return math.sqrt(max((s + math.sqrt(disc)) / 2.0, 0.0))


def _spectral_norm_sym(h11, h12, h22):
    """Vectorised spectral norm of symmetric 2x2 matrices given by components."""
    mean = 0.5 * (h11 + h22)
    rad = np.sqrt((0.5 * (h11 - h22)) ** 2 + h12 * h12)
    return np.abs(mean) + rad


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle ``[xmin, xmax] x [ymin, ymax]`` in meters."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise InvalidArgumentError(f"degenerate region {self}")
        if not all(math.isfinite(v) for v in (self.xmin, self.xmax, self.ymin, self.ymax)):
            raise InvalidArgumentError(f"non-finite region {self}")

    @classmethod
    def around(cls, points, pad_fraction: float = 0.2, min_pad: float = 1.0) -> "Rect":
        """Bounding box of ``points`` padded by a fraction of its span."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        pad = np.maximum(pad_fraction * (hi - lo), min_pad)
        return cls(lo[0] - pad[0], hi[0] + pad[0], lo[1] - pad[1], hi[1] + pad[1])

    @classmethod
    def centered(cls, center, half_width: float) -> "Rect":
        cx, cy = float(center[0]), float(center[1])
        return cls(cx - half_width, cx + half_width, cy - half_width, cy + half_width)

    def contains(self, p, tol: float = 0.0) -> bool:
        return (self.xmin - tol <= p[0] <= self.xmax + tol) and (self.ymin - tol <= p[1] <= self.ymax + tol)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.xmin, self.xmax, self.ymin, self.ymax)


@dataclass(frozen=True)
class GaussianTerm:
    """``amplitude * exp(-(x-c)^T W (x-c))`` with ``shape = (w11, w12, w22)``."""

    amplitude: float
    center: tuple[float, float]
    shape: tuple[float, float, float]

    def __post_init__(self):
        w11, w12, w22 = self.shape
        if not self.amplitude > 0:
            raise InvalidArgumentError("gaussian amplitude must be positive")
        if w11 < 0 or w22 < 0 or w11 * w22 - w12 * w12 < 0:
            raise InvalidArgumentError(f"gaussian shape matrix {self.shape} is not positive semidefinite")

    @property
    def width(self) -> float:
        """Length scale along the flattest direction (1/sqrt of smallest eigenvalue)."""
        w11, w12, w22 = self.shape
        mean = 0.5 * (w11 + w22)
        lo = mean - math.hypot(0.5 * (w11 - w22), w12)
        return 1.0 / math.sqrt(lo) if lo > 0 else math.inf


@dataclass(frozen=True)
class ScalarField:
    """Immutable analytic scalar field on the plane.

    Use the constructors :meth:`gaussian`, :meth:`sum_of_gaussians`,
    :meth:`affine` and :meth:`quadratic` rather than calling this directly.
    """

    kind: str
    terms: tuple[GaussianTerm, ...] = ()
    a: tuple[float, float] = (0.0, 0.0)
    b: float = 0.0
    q: tuple[float, float, float] = (0.0, 0.0, 0.0)
    center: tuple[float, float] = (0.0, 0.0)
    name: str | None = dc_field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown field kind {self.kind!r}")
        if self.kind in ("gaussian", "sum_of_gaussians") and not self.terms:
            raise InvalidArgumentError("gaussian field needs at least one term")
        if self.kind == "gaussian" and len(self.terms) != 1:
            raise InvalidArgumentError("gaussian field has exactly one term")

    # -- constructors -------------------------------------------------------

    @classmethod
    def gaussian(cls, amplitude: float, center, shape, name: str | None = None) -> "ScalarField":
        term = GaussianTerm(float(amplitude), _pair(center), _shape(shape))
        return cls("gaussian", terms=(term,), name=name)

    @classmethod
    def sum_of_gaussians(cls, terms: Iterable, name: str | None = None) -> "ScalarField":
        built = []
        for t in terms:
            if isinstance(t, GaussianTerm):
                built.append(t)
            else:
                amplitude, center, shape = t
                built.append(GaussianTerm(float(amplitude), _pair(center), _shape(shape)))
        return cls("sum_of_gaussians", terms=tuple(built), name=name)

    @classmethod
    def affine(cls, a, b: float = 0.0, name: str | None = None) -> "ScalarField":
        return cls("affine", a=_pair(a), b=float(b), name=name)

    @classmethod
    def quadratic(cls, q, center=(0.0, 0.0), offset: float = 0.0, name: str | None = None) -> "ScalarField":
        """``offset + 1/2 (x-c)^T Q (x-c)``; the Hessian is ``Q`` everywhere."""
        return cls("quadratic", q=_shape(q), center=_pair(center), b=float(offset), name=name)

    # -- pointwise evaluation ------------------------------------------------

    def value_xy(self, x: float, y: float) -> float:
        if self.kind == "affine":
            return self.a[0] * x + self.a[1] * y + self.b
        if self.kind == "quadratic":
            dx, dy = x - self.center[0], y - self.center[1]
            q11, q12, q22 = self.q
            return self.b + 0.5 * (q11 * dx * dx + 2.0 * q12 * dx * dy + q22 * dy * dy)
        total = 0.0
        for t in self.terms:
            dx, dy = x - t.center[0], y - t.center[1]
            w11, w12, w22 = t.shape
            total += t.amplitude * math.exp(-(w11 * dx * dx + 2.0 * w12 * dx * dy + w22 * dy * dy))
        return total

    def gradient_xy(self, x: float, y: float) -> tuple[float, float]:
        if self.kind == "affine":
            return self.a
        if self.kind == "quadratic":
            dx, dy = x - self.center[0], y - self.center[1]
            q11, q12, q22 = self.q
            return (q11 * dx + q12 * dy, q12 * dx + q22 * dy)
        gx = gy = 0.0
        for t in self.terms:
            dx, dy = x - t.center[0], y - t.center[1]
            w11, w12, w22 = t.shape
            u1 = w11 * dx + w12 * dy
            u2 = w12 * dx + w22 * dy
            e = t.amplitude * math.exp(-(w11 * dx * dx + 2.0 * w12 * dx * dy + w22 * dy * dy))
            gx -= 2.0 * e * u1
            gy -= 2.0 * e * u2
        return (gx, gy)

    def hessian_xy(self, x: float, y: float) -> tuple[float, float, float]:
        """Hessian components ``(h11, h12, h22)``."""
        if self.kind == "affine":
            return (0.0, 0.0, 0.0)
        if self.kind == "quadratic":
            return self.q
        h11 = h12 = h22 = 0.0
        for t in self.terms:
            dx, dy = x - t.center[0], y - t.center[1]
            w11, w12, w22 = t.shape
            u1 = w11 * dx + w12 * dy
            u2 = w12 * dx + w22 * dy
            e = t.amplitude * math.exp(-(w11 * dx * dx + 2.0 * w12 * dx * dy + w22 * dy * dy))
            h11 += e * (4.0 * u1 * u1 - 2.0 * w11)
            h12 += e * (4.0 * u1 * u2 - 2.0 * w12)
            h22 += e * (4.0 * u2 * u2 - 2.0 * w22)
        return (h11, h12, h22)

    def value(self, x) -> float:
        return self.value_xy(float(x[0]), float(x[1]))

    def gradient(self, x) -> np.ndarray:
        return np.array(self.gradient_xy(float(x[0]), float(x[1])))

    def hessian(self, x) -> np.ndarray:
        h11, h12, h22 = self.hessian_xy(float(x[0]), float(x[1]))
        return np.array([[h11, h12], [h12, h22]])

    def scalar_function(self) -> Callable[[float, float], float]:
        """A fast ``f(x, y)`` closure for the integrator's inner loop."""
        if self.kind in ("affine", "quadratic"):
            return self.value_xy
        if len(self.terms) == 1:
            t = self.terms[0]
            amp, (cx, cy), (w11, w12, w22) = t.amplitude, t.center, t.shape
            w12x2 = 2.0 * w12
            exp = math.exp

            def f(x, y):
                dx = x - cx
                dy = y - cy
                return amp * exp(-(w11 * dx * dx + w12x2 * dx * dy + w22 * dy * dy))

            return f
        return self.value_xy

    # -- vectorised evaluation ----------------------------------------------

    def hessian_grid(self, xs, ys):
        """Hessian components on broadcastable coordinate arrays."""
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        shape = np.broadcast(xs, ys).shape
        if self.kind == "affine":
            z = np.zeros(shape)
            return z, z.copy(), z.copy()
        if self.kind == "quadratic":
            q11, q12, q22 = self.q
            return np.full(shape, q11), np.full(shape, q12), np.full(shape, q22)
        h11 = np.zeros(shape)
        h12 = np.zeros(shape)
        h22 = np.zeros(shape)
        for t in self.terms:
            dx, dy = xs - t.center[0], ys - t.center[1]
            w11, w12, w22 = t.shape
            u1 = w11 * dx + w12 * dy
            u2 = w12 * dx + w22 * dy
            e = t.amplitude * np.exp(-(w11 * dx * dx + 2.0 * w12 * dx * dy + w22 * dy * dy))
            h11 += e * (4.0 * u1 * u1 - 2.0 * w11)
            h12 += e * (4.0 * u1 * u2 - 2.0 * w12)
            h22 += e * (4.0 * u2 * u2 - 2.0 * w22)
        return h11, h12, h22

    @property
    def amplitude_sum(self) -> float:
        return sum(t.amplitude for t in self.terms)

    @property
    def length_scale(self) -> float:
        """Shortest distance over which a Gaussian term changes appreciably (inf for polynomials)."""
        scales = []
        for t in self.terms:
            w11, w12, w22 = t.shape
            hi = 0.5 * (w11 + w22) + math.hypot(0.5 * (w11 - w22), w12)
            if hi > 0:
                scales.append(1.0 / math.sqrt(hi))
        return min(scales, default=math.inf)

    @property
    def has_maximizer(self) -> bool:
        if self.kind == "affine":
            return False
        if self.kind == "quadratic":
            return _negative_definite(self.q)
        return any(t.width < math.inf for t in self.terms)


def _pair(v) -> tuple[float, float]:
    v = tuple(float(c) for c in np.asarray(v, dtype=float).ravel())
    if len(v) != 2:
        raise InvalidArgumentError(f"expected a 2-vector, got {v}")
    return v  # type: ignore[return-value]


def _shape(m) -> tuple[float, float, float]:
    arr = np.asarray(m, dtype=float)
    if arr.shape == (3,):
        return tuple(float(c) for c in arr)  # type: ignore[return-value]
    if arr.shape != (2, 2):
        raise InvalidArgumentError(f"expected a 2x2 matrix, got shape {arr.shape}")
    if arr[0, 1] != arr[1, 0]:
        raise InvalidArgumentError("matrix must be symmetric")
    return (float(arr[0, 0]), float(arr[0, 1]), float(arr[1, 1]))


def _negative_definite(h) -> bool:
    h11, h12, h22 = h
    return h11 < 0 and h11 * h22 - h12 * h12 > 0


# ---------------------------------------------------------------------------
# Module-level operations

def evaluate(field: ScalarField, x) -> float:
    return field.value(x)


def grad(field: ScalarField, x) -> np.ndarray:
    return field.gradient(x)


def hessian(field: ScalarField, x) -> np.ndarray:
    return field.hessian(x)


GAUSSIAN_FIELD = ScalarField.gaussian(1000.0, (100.0, 100.0), (1 / 70000, 0.0, 1 / 70000), name="paper-gaussian")

# (x+y)^2/707 + (-x+y)^2/143 expands to W = [[1/707+1/143, 1/707-1/143], [., 1/707+1/143]].
MULTIMODAL_FIELD = ScalarField.sum_of_gaussians(
    [
        (1.0, (100.0, 100.0), (1e-4, 0.0, 1e-4)),
        (1.0, (100.0, 100.0), (1 / 707 + 1 / 143, 1 / 707 - 1 / 143, 1 / 707 + 1 / 143)),
        (1.0, (100.0, 100.0), (1 / 1000, 0.0, 1 / 50)),
    ],
    name="paper-multimodal",
)

PRESETS = {"paper-gaussian": GAUSSIAN_FIELD, "paper-multimodal": MULTIMODAL_FIELD}


def preset(name: str) -> ScalarField:
    try:
        return PRESETS[name]
    except KeyError:
        raise InvalidArgumentError(f"unknown field preset {name!r}; known: {sorted(PRESETS)}") from None


# ---------------------------------------------------------------------------
# Regularity constants

@dataclass(frozen=True)
class RegularityConstants:
    """Hessian bounds estimated on ``region`` only.

    ``m_h`` bounds the Hessian norm, ``l_h`` is its Lipschitz constant and
    ``g_h`` bounds the norm of any Hessian difference.
    """

    m_h: float
    l_h: float
    g_h: float
    region: Rect

    def __post_init__(self):
        for name in ("m_h", "l_h", "g_h"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise InvalidArgumentError(f"{name} must be finite and nonnegative, got {v}")
        if self.g_h > 2.0 * self.m_h * (1 + 1e-12):
            raise InvalidArgumentError("g_h exceeds 2 m_h")


def estimate_regularity(field: ScalarField, region: Rect, grid_step: float, directions: int = 360) -> RegularityConstants:
    """Grid estimate of the Hessian constants over ``region``.

    ``g_h`` is the supremum of ``||H(a) - H(b)||`` over all grid pairs. For
    symmetric matrices the spectral norm is the largest ``|u^T M u|`` over
    unit ``u``, so the pair supremum equals the largest spread of the
    quadratic form ``u^T H u`` across the grid, maximised over directions.
    """
    if not grid_step > 0:
        raise InvalidArgumentError("grid_step must be positive")
    if not isinstance(region, Rect):
        region = Rect(*region)
    nx = int(math.floor((region.xmax - region.xmin) / grid_step + 1e-9)) + 1
    ny = int(math.floor((region.ymax - region.ymin) / grid_step + 1e-9)) + 1
    xs = region.xmin + grid_step * np.arange(nx)
    ys = region.ymin + grid_step * np.arange(ny)
    if xs[-1] < region.xmax - 1e-9 * grid_step:
        xs = np.append(xs, region.xmax)
    if ys[-1] < region.ymax - 1e-9 * grid_step:
        ys = np.append(ys, region.ymax)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    h11, h12, h22 = field.hessian_grid(X, Y)

    m_h = float(_spectral_norm_sym(h11, h12, h22).max())

    l_h = 0.0
    nxg, nyg = X.shape
    for di, dj in ((1, 0), (0, 1), (2, 0), (0, 2), (1, 1), (1, -1)):
        jlo, jhi = max(0, -dj), nyg - max(0, dj)
        if di >= nxg or jhi <= jlo:
            continue
        a = (slice(0, nxg - di), slice(jlo, jhi))
        b = (slice(di, nxg), slice(jlo + dj, jhi + dj))
        dist = np.hypot(X[b] - X[a], Y[b] - Y[a])
        diff = _spectral_norm_sym(h11[b] - h11[a], h12[b] - h12[a], h22[b] - h22[a])
        l_h = max(l_h, float((diff / dist).max()))

    angles = np.pi * np.arange(directions) / directions
    c2, cs, s2 = np.cos(angles) ** 2, np.cos(angles) * np.sin(angles), np.sin(angles) ** 2
    f11, f12, f22 = h11.ravel(), h12.ravel(), h22.ravel()
    g_h = 0.0
    for lo in range(0, directions, 30):
        sl = slice(lo, lo + 30)
        quad = np.outer(c2[sl], f11) + 2.0 * np.outer(cs[sl], f12) + np.outer(s2[sl], f22)
        g_h = max(g_h, float((quad.max(axis=1) - quad.min(axis=1)).max()))
    g_h = min(g_h, 2.0 * m_h)
    return RegularityConstants(m_h=m_h, l_h=l_h, g_h=g_h, region=region)


# ---------------------------------------------------------------------------
# Maximizer

def maximizer(field: ScalarField, tol: float = 1e-9) -> np.ndarray:
    """Location of the field's maximum.

    Gaussian and quadratic fields return their centre. Sums of Gaussians are
    searched on a grid and refined by damped Newton ascent until the gradient
    norm is at most ``tol``.
    """
    if field.kind == "affine":
        raise NoMaximizerError("affine fields have no maximizer")
    if field.kind == "quadratic":
        if not _negative_definite(field.q):
            raise NoMaximizerError("quadratic field is not negative definite")
        return np.array(field.center)
    if field.kind == "gaussian":
        t = field.terms[0]
        if t.width == math.inf:
            raise NoMaximizerError("degenerate gaussian has a ridge, not a point maximizer")
        return np.array(t.center)
    return _ascend(field, tol)


def _ascend(field: ScalarField, tol: float) -> np.ndarray:
    finite = [t for t in field.terms if t.width < math.inf]
    if not finite:
        raise NoMaximizerError("no term has a point maximum")
    cx = [t.center[0] for t in finite]
    cy = [t.center[1] for t in finite]
    span = 3.0 * max(t.width for t in finite)
    xs = np.linspace(min(cx) - span, max(cx) + span, 401)
    ys = np.linspace(min(cy) - span, max(cy) + span, 401)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vals = np.zeros_like(X)
    for t in field.terms:
        dx, dy = X - t.center[0], Y - t.center[1]
        w11, w12, w22 = t.shape
        vals += t.amplitude * np.exp(-(w11 * dx * dx + 2 * w12 * dx * dy + w22 * dy * dy))
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    x = np.array([X[i, j], Y[i, j]])
    step_len = float(xs[1] - xs[0])

    for _ in range(500):
        g = field.gradient(x)
        if np.linalg.norm(g) <= tol:
            return x
        h = field.hessian(x)
        if _negative_definite((h[0, 0], h[0, 1], h[1, 1])):
            d = -np.linalg.solve(h, g)
        else:
            d = g / np.linalg.norm(g) * step_len
        f0 = field.value(x)
        s = 1.0
        while s > 1e-12:
            cand = x + s * d
            if field.value(cand) >= f0:
                break
            s *= 0.5
        if np.array_equal(cand, x):
            break
        x = cand
    g = field.gradient(x)
    if np.linalg.norm(g) > tol:
        raise NoMaximizerError(f"ascent stalled at {x} with |grad|={np.linalg.norm(g):.3e}")
    return x
