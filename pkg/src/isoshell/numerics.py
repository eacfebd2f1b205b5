"""Shared numeric kernel.

Fixed-step RK4, Gauss-Legendre quadrature, dense solves with residual
checks, smallest singular values and eigenvalues, and the 1D line
operators (differentiation, cumulative integration, interpolation) used
along the diameters of polar grids.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla
from numpy.polynomial import chebyshev as C
from numpy.polynomial import legendre as L


@dataclass(frozen=True)
class Tolerances:
    ode_step: float = 1e-3
    quad_points: int = 16
    lin_tol: float = 1e-9
    eig_tol: float = 1e-10

    def __post_init__(self):
        if not (self.ode_step > 0 and self.lin_tol > 0 and self.eig_tol > 0):
            raise ValueError("tolerances must be strictly positive")
        if int(self.quad_points) < 2:
            raise ValueError("quad_points must be >= 2")


class IntegrationDiverged(RuntimeError):
    def __init__(self, last_t: float):
        super().__init__(f"non-finite state after t={last_t:.6g}")
        self.last_t = last_t


class RankDeficientError(np.linalg.LinAlgError):
    def __init__(self, message: str, sigma_min: float, vector=None):
        super().__init__(message)
        self.sigma_min = sigma_min
        self.vector = vector


# ----------------------------------------------------------------- ODEs

def rk4_step(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_ode(rhs: Callable, y0, t_grid, step: float | None = None,
                  t0: float | None = None):
    """Classical RK4 with output exactly at ``t_grid``.

    Each interval between consecutive output nodes is split into equal
    substeps no longer than ``step`` (default: the interval itself).  The
    integration starts at ``t0`` (default ``t_grid[0]``), so the initial
    state need not be an output node.  ``y0`` may have any shape.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    y = np.array(y0, dtype=float)
    t = float(t_grid[0] if t0 is None else t0)
    if t > t_grid[0]:
        raise ValueError("t0 must not exceed the first output node")
    out = np.empty((len(t_grid),) + y.shape)
    for i, tn in enumerate(t_grid):
        span = tn - t
        if span > 0:
            nsub = 1 if step is None else max(1, int(np.ceil(span / step - 1e-9)))
            h = span / nsub
            for _ in range(nsub):
                y = rk4_step(rhs, t, y, h)
                t += h
                if not np.all(np.isfinite(y)):
                    raise IntegrationDiverged(t - h)
        t = float(tn)
        out[i] = y
    return out


# ----------------------------------------------------------- quadrature

def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0):
    x, w = L.leggauss(int(n))
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def quadrature_1d(f: Callable, a: float, b: float, n: int) -> float:
    if not a < b:
        raise ValueError("need a < b")
    x, w = gauss_legendre(n, a, b)
    vals = np.asarray(f(x), dtype=float) * np.ones_like(x)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite integrand sample")
    return float(vals @ w)


def periodic_trapezoid(values, period: float = 2 * np.pi, axis: int = -1):
    values = np.asarray(values)
    return values.sum(axis=axis) * period / values.shape[axis]


# -------------------------------------------------------- linear algebra

def linear_solve(A, b, lin_tol: float = 1e-9):
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return np.zeros(A.shape[1:] + b.shape[1:])
    try:
        lu = sla.lu_factor(A, check_finite=True)
        x = sla.lu_solve(lu, b)
        ok = np.all(np.isfinite(x))
    except (np.linalg.LinAlgError, ValueError):
        ok = False
    if ok:
        res = np.linalg.norm(A @ x - b) / nb
        if res <= lin_tol:
            return x
    s, v = smallest_singular_value(A, return_vector=True)
    raise RankDeficientError("matrix is singular to tolerance", s, v)


def smallest_singular_value(A, eig_tol: float = 1e-10, max_iter: int = 300,
                            return_vector: bool = False):
    """sigma_min by inverse iteration on A^T A (via the QR factor of A)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] < A.shape[1]:
        A = A.T
    n = A.shape[1]
    r = np.linalg.qr(A, mode="r")
    scale = max(np.abs(r).max(), np.finfo(float).tiny)
    d = np.diag(r).copy()
    tiny = np.finfo(float).eps * scale
    small = np.abs(d) < tiny
    if np.any(small):
        r = r.copy()
        r[np.diag_indices(n)] = np.where(small, tiny, d)
    x = np.linspace(1.0, 2.0, n)
    x /= np.linalg.norm(x)
    sigma_old = np.inf
    converged = False
    for _ in range(max_iter):
        y = sla.solve_triangular(r, sla.solve_triangular(r, x, trans="T"))
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0:
            break
        x = y / ny
        sigma = np.linalg.norm(A @ x)
        if abs(sigma - sigma_old) <= eig_tol * scale:
            converged = True
            break
        sigma_old = sigma
    if not converged:
        # deflation-free fallback: full decomposition
        _, s, vt = np.linalg.svd(A, full_matrices=False)
        sigma, x = s[-1], vt[-1]
    return (float(sigma), x) if return_vector else float(sigma)


def symmetric_smallest_eig(A, eig_tol: float = 1e-10):
    """Smallest eigenpair of a symmetric matrix.

    ``A`` may be a dense matrix or a pair ``(diag, offdiag)`` describing a
    symmetric tridiagonal matrix.
    """
    if isinstance(A, tuple):
        d, e = (np.asarray(z, dtype=float) for z in A)
        lam, vec = sla.eigh_tridiagonal(d, e, select="i", select_range=(0, 0))
    else:
        A = np.asarray(A, dtype=float)
        if np.abs(A - A.T).max() > 1e-10 * max(1.0, np.abs(A).max()):
            raise ValueError("matrix is not symmetric")
        lam, vec = sla.eigh(A, subset_by_index=[0, 0])
    v = vec[:, 0]
    return float(lam[0]), v / np.linalg.norm(v)


# ------------------------------------------------------ finite differences

def fornberg_weights(x0: float, nodes, m: int):
    """Weights for derivatives 0..m at x0 from values on ``nodes``."""
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    c = np.zeros((m + 1, n))
    c1, c4 = 1.0, nodes[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def fd_matrix(x, order: int = 1, width: int = 7):
    """Dense differentiation matrix from local stencils of ``width`` nodes."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    width = min(width, n)
    D = np.zeros((n, n))
    for i in range(n):
        lo = min(max(i - width // 2, 0), n - width)
        idx = np.arange(lo, lo + width)
        D[i, idx] = fornberg_weights(x[i], x[idx], order)[order]
    return D


# ------------------------------------------------------ spectral helpers

def fourier_derivative(values, order: int = 1, axis: int = -1, period=2 * np.pi):
    """Spectral derivative of samples on a uniform periodic grid."""
    values = np.asarray(values, dtype=float)
    n = values.shape[axis]
    k = np.fft.rfftfreq(n, d=1.0 / n) * (2 * np.pi / period)
    mult = (1j * k) ** order
    if n % 2 == 0 and order % 2 == 1:
        mult[-1] = 0.0
    shape = [1] * values.ndim
    shape[axis] = len(k)
    spec = np.fft.rfft(values, axis=axis) * mult.reshape(shape)
    return np.fft.irfft(spec, n=n, axis=axis)


def fourier_interp_matrix(n: int, theta, period=2 * np.pi):
    """Rows evaluate the trigonometric interpolant of n uniform samples."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    nodes = np.arange(n) * period / n
    d = (theta[:, None] - nodes[None, :]) * (2 * np.pi / period)
    k = np.arange(-(n // 2), n // 2 + 1) if n % 2 else np.arange(-(n // 2) + 1, n // 2)
    M = np.real(np.exp(1j * d[..., None] * k).sum(-1))
    if n % 2 == 0:
        M += np.cos(0.5 * n * d)
    return M / n


def barycentric_weights(x):
    x = np.asarray(x, dtype=float)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / diff.prod(axis=1)
    return w / np.abs(w).max()


def barycentric_matrix(x, targets):
    """Polynomial interpolation matrix from nodes ``x`` to ``targets``."""
    x = np.asarray(x, dtype=float)
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    w = barycentric_weights(x)
    d = targets[:, None] - x[None, :]
    exact = np.isclose(d, 0.0, atol=1e-15, rtol=0.0)
    d = np.where(exact, 1.0, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        M = w[None, :] / d
        M /= M.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    if np.any(rows):
        M[rows] = exact[rows].astype(float)
    return M


def cheb_points(M: int, R: float = 1.0):
    """Chebyshev extreme points R*cos(k pi/M), sorted ascending."""
    return np.sort(R * np.cos(np.arange(M + 1) * np.pi / M))


class LineOps:
    """Differentiation / integration along one line of nodes.

    ``diff`` and ``cumint`` act on the last axis; ``cumint`` integrates
    from the abscissa 0, which must lie inside the node span.
    """

    def __init__(self, x, D, C0, zero_row):
        self.x = np.asarray(x, dtype=float)
        self.D = D
        self.C0 = C0
        self.zero_row = zero_row

    def diff(self, y):
        return np.asarray(y) @ self.D.T

    def cumint(self, y):
        return np.asarray(y) @ self.C0.T

    def at_zero(self, y):
        return np.asarray(y) @ self.zero_row

    def interp_matrix(self, targets, width: int = 8):
        """Rows interpolate line samples at ``targets`` (global for
        Chebyshev lines, local Lagrange windows otherwise)."""
        targets = np.atleast_1d(np.asarray(targets, dtype=float))
        if getattr(self, "kind", "") == "chebyshev":
            return barycentric_matrix(self.x, targets)
        n = len(self.x)
        width = min(width, n)
        M = np.zeros((len(targets), n))
        pos = np.searchsorted(self.x, targets)
        for r, (tx, p) in enumerate(zip(targets, pos)):
            lo = min(max(p - width // 2, 0), n - width)
            idx = np.arange(lo, lo + width)
            M[r, idx] = barycentric_matrix(self.x[idx], [tx])[0]
        return M

    @classmethod
    def chebyshev(cls, M: int, R: float):
        x = cheb_points(M, R)
        V = C.chebvander(x / R, M)
        Vinv = np.linalg.inv(V)
        D = np.zeros((M + 1, M + 1))
        I = np.zeros((M + 2, M + 1))
        for j in range(M + 1):
            e = np.zeros(M + 1)
            e[j] = 1.0
            D[:M, j] = C.chebder(e)
            I[:, j] = C.chebint(e, lbnd=0.0)
        Dm = C.chebvander(x / R, M) @ D @ Vinv / R
        Cm = C.chebvander(x / R, M + 1) @ I @ Vinv * R
        zero = (C.chebvander(np.array([0.0]), M) @ Vinv)[0]
        ops = cls(x, Dm, Cm, zero)
        ops.kind = "chebyshev"
        ops.R = R
        return ops

    @classmethod
    def uniform(cls, x, width: int = 7):
        """Local-stencil operators on symmetric uniform nodes (0 included)."""
        x = np.asarray(x, dtype=float)
        n = len(x)
        D = fd_matrix(x, 1, width)
        # interval integrals from local interpolants, then cumulative sums
        iz = int(np.argmin(np.abs(x)))
        if abs(x[iz]) > 1e-14:
            raise ValueError("uniform line must contain the origin")
        seg = np.zeros((n - 1, n))
        for k in range(n - 1):
            lo = min(max(k - width // 2 + 1, 0), n - width)
            idx = np.arange(lo, lo + width)
            seg[k, idx] = _interval_weights(x[idx], x[k], x[k + 1])
        Cm = np.zeros((n, n))
        for k in range(iz + 1, n):
            Cm[k] = Cm[k - 1] + seg[k - 1]
        for k in range(iz - 1, -1, -1):
            Cm[k] = Cm[k + 1] - seg[k]
        zero = np.zeros(n)
        zero[iz] = 1.0
        ops = cls(x, D, Cm, zero)
        ops.kind = "uniform"
        return ops


def _interval_weights(nodes, a, b):
    """Exact integrals over [a,b] of the Lagrange basis on ``nodes``."""
    c = nodes.mean()
    s = nodes.max() - nodes.min()
    z = (nodes - c) / s
    V = np.vander(z, increasing=True)
    za, zb = (a - c) / s, (b - c) / s
    p = np.arange(len(nodes))
    mono = (zb ** (p + 1) - za ** (p + 1)) / (p + 1) * s
    return np.linalg.solve(V.T, mono)
