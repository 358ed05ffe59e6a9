"""Small dense linear-algebra kernels used by the certification code."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


def tridiagonalize(a) -> tuple[np.ndarray, np.ndarray]:
    """Householder reduction of a symmetric matrix to tridiagonal form.

    Returns ``(diag, offdiag)`` where ``offdiag[i]`` couples rows ``i`` and
    ``i + 1``. Only the lower triangle of ``a`` is read.
    """
    m = np.array(a, dtype=float, copy=True)
    n = m.shape[0]
    if m.shape != (n, n):
        raise ValueError("matrix must be square")
    m = np.tril(m) + np.tril(m, -1).T
    for k in range(n - 2):
        x = m[k + 1 :, k]
        s = float(np.max(np.abs(x)))
        if s == 0.0:
            continue
        # work on the scaled column so tiny entries cannot underflow the norms
        v = x / s
        beta = math.sqrt(float(v @ v))
        if v[0] > 0:
            beta = -beta
        alpha = beta * s
        v[0] -= beta
        v /= math.sqrt(float(v @ v))
        sub = m[k + 1 :, k + 1 :]
        p = 2.0 * (sub @ v)
        kk = float(v @ p)
        w = p - kk * v
        sub -= np.outer(v, w) + np.outer(w, v)
        m[k + 1 :, k + 1 :] = sub
        m[k + 1, k] = m[k, k + 1] = alpha
        m[k + 2 :, k] = 0.0
        m[k, k + 2 :] = 0.0
    return np.diag(m).copy(), np.diag(m, -1).copy()


def tridiagonal_eigenvalues(d, e, tol: float = 1e-12, max_iter: int = 60) -> np.ndarray:
    """Eigenvalues of a symmetric tridiagonal matrix by implicit QL with Wilkinson shifts."""
    d = [float(v) for v in d]
    n = len(d)
    e = [float(v) for v in e] + [0.0]
    # couplings negligible against the whole matrix deflate too, so tiny blocks converge
    floor = np.finfo(float).eps * max([abs(v) for v in d] + [abs(v) for v in e] + [0.0])
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= tol * dd or abs(e[m]) <= floor:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                raise ArithmeticError("QL iteration did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.sort(np.array(d))


def symmetric_eigenvalues(a, tol: float = 1e-12) -> np.ndarray:
    """Ascending eigenvalues of a real symmetric matrix.

    The matrix is scaled to unit max-entry first so Householder norms neither
    underflow nor overflow.
    """
    a = np.asarray(a, dtype=float)
    if a.shape == (1, 1):
        return a.reshape(1).copy()
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0 or not math.isfinite(scale):
        if scale == 0.0:
            return np.zeros(a.shape[0])
        raise ValueError("matrix has non-finite entries")
    d, e = tridiagonalize(a / scale)
    return tridiagonal_eigenvalues(d, e, tol=tol) * scale


@lru_cache(maxsize=32)
def _gl_nodes(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre_01(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to ``[0, 1]``."""
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    return _gl_nodes(int(order))
