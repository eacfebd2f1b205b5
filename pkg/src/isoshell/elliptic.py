"""Elliptic regime: Pi > 0, so Pi is itself a Riemannian metric.

The characteristic equation divided by kappa reads

    Delta_Pi w + B w = 0,

where Delta_Pi is the Laplacian of the metric Pi and B collects the lower
order and ray-integral terms.  Everything is assembled as dense matrices
on a Chebyshev polar grid by applying the grid operators to the identity.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geodesic import GridSpec, PolarGrid
from .isometry import _phi_integral, operator_P, origin_Pi_sigma
from .numerics import (RankDeficientError, Tolerances, linear_solve,
                       smallest_singular_value, symmetric_smallest_eig)
from .surface import RegimeError, Surface, revolution_graph, sphere


class NonUniqueSolutionError(RankDeficientError):
    """The Dirichlet problem has a (near) kernel."""


class ConditionViolation(ValueError):
    pass


def _check_elliptic(grid: PolarGrid):
    if not grid.complete:
        raise ValueError("polar grid leaves the chart")
    lo = np.minimum(grid.Pi11, grid.Pi22)
    det = grid.Pi11 * grid.Pi22 - grid.Pi12 ** 2
    if np.any(grid.kappa <= 0) or np.any(lo <= 0) or np.any(det <= 0):
        raise RegimeError("patch is not elliptic (need kappa > 0 and Pi > 0)")


def _qpi_grad(grid: PolarGrid, w1, w2):
    """Q*Pi(grad kappa, grad w) = Pi(Q grad kappa, Q grad w)."""
    k1, k2 = grid.k1, grid.k2
    return k2 * w2 * grid.Pi11 - (k2 * w1 + k1 * w2) * grid.Pi12 + k1 * w1 * grid.Pi22


def laplacian_Pi(grid: PolarGrid, w, route: str = "flux"):
    """Laplace-Beltrami operator of the metric Pi.

    ``route="flux"`` differentiates the divergence form with the coefficient
    matrix of Pi in (t, theta); ``route="identity"`` uses
    kappa Delta_Pi w = <D^2 w, Q*Pi> - Q*Pi(grad kappa, grad w) / (2 kappa).
    """
    _check_elliptic(grid)
    w = np.asarray(w, dtype=float)
    sk = np.sqrt(grid.kappa)
    if route == "flux":
        f = grid.f
        wt = grid.dt(w, 0)
        wth = grid.dtheta(w)
        flux_t = (f * grid.Pi22 / sk) * wt - (grid.Pi12 / sk) * wth
        flux_th = -(grid.Pi12 / sk) * wt + (grid.Pi11 / (sk * f)) * wth
        return (grid.dt(flux_t, 0) + grid.dtheta(flux_th)) / (sk * f)
    if route == "identity":
        d = grid.frame_derivatives(w)
        q = d[2] * grid.Pi22 - 2 * d[3] * grid.Pi12 + d[4] * grid.Pi11
        return (q - _qpi_grad(grid, d[0], d[1]) / (2 * grid.kappa)) / grid.kappa
    raise ValueError(f"unknown route {route!r}")


def operator_B(grid: PolarGrid, w):
    """Lower-order part B w, including the w(o) term."""
    _check_elliptic(grid)
    w = np.asarray(w, dtype=float)
    k = grid.kappa
    d = grid.frame_derivatives(w)
    K, _ = _phi_integral(grid, operator_P(grid, w, d))
    _, pi_ssd, _ = origin_Pi_sigma(grid)
    w_o = grid.origin_value(w)[..., None, None]
    return (_qpi_grad(grid, d[0], d[1]) / (2 * k ** 2) + w * grid.trPi()
            + grid.k1 / k * grid.cumint(w * grid.Pi11, 0) - grid.k2 / k * K
            + w_o * pi_ssd[:, None] * grid.k2 * grid.f / k)


def _as_matrix(grid: PolarGrid, op):
    n = grid.f.size
    basis = np.eye(n).reshape((n,) + grid.shape)
    return op(basis).reshape(n, n).T


@dataclass
class EllipticProblem:
    grid: PolarGrid
    matrix: np.ndarray            # rows of boundary nodes are identity rows
    operator: np.ndarray          # Delta_Pi + B without boundary rows
    laplacian: np.ndarray         # Delta_Pi alone
    boundary: np.ndarray          # flat indices of boundary nodes
    weights: np.ndarray           # Pi-area quadrature weights per node
    kernel_tol: float = 1e-6
    diagnostics: dict = field(default_factory=dict)

    @property
    def interior(self):
        m = np.ones(self.grid.f.size, bool)
        m[self.boundary] = False
        return np.nonzero(m)[0]

    def kernel_measure(self):
        """(sigma_min of the interior block, sigma_min of the Delta_Pi block),
        both in the Pi-area weighted norm."""
        if "sigma" not in self.diagnostics:
            I = self.interior
            D = np.sqrt(np.abs(self.weights[I]))
            scale = lambda A: (D[:, None] * A[np.ix_(I, I)]) / D[None, :]
            s = smallest_singular_value(scale(self.operator))
            s_ref = smallest_singular_value(scale(self.laplacian))
            self.diagnostics["sigma"] = (s, s_ref)
        return self.diagnostics["sigma"]

    def relative_gap(self):
        s, s_ref = self.kernel_measure()
        return s / s_ref

    def literal_ratio(self):
        """sigma_min / sigma_max of the raw system matrix."""
        sv = np.linalg.svd(self.matrix, compute_uv=False)
        return float(sv[-1] / sv[0])


def assemble(grid: PolarGrid, kernel_tol: float = 1e-6) -> EllipticProblem:
    _check_elliptic(grid)
    L = _as_matrix(grid, lambda b: laplacian_Pi(grid, b))
    B = _as_matrix(grid, lambda b: operator_B(grid, b))
    op = L + B
    nth, nt = grid.shape
    bnd = np.ravel_multi_index((np.arange(nth), np.full(nth, nt - 1)), grid.shape)
    A = op.copy()
    A[bnd] = 0.0
    A[bnd, bnd] = 1.0
    area = np.sqrt(grid.kappa) * np.ones(grid.shape)
    n = grid.f.size
    weights = grid.integrate(np.eye(n).reshape((n,) + grid.shape) * area)
    return EllipticProblem(grid, A, op, L, bnd, weights, kernel_tol)


def boundary_values(grid: PolarGrid, psi):
    """psi as a callable of the angle, or an array on the boundary nodes."""
    if callable(psi):
        return np.asarray(psi(grid.theta), dtype=float) * np.ones(grid.n_theta)
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (grid.n_theta,):
        raise ValueError("boundary data must have one value per ray")
    return psi


def dirichlet_solve(problem: EllipticProblem, psi, allow_kernel: bool = False,
                    tol: Tolerances | None = None):
    """Solve Delta_Pi w + B w = 0 in the disk, w = psi on the boundary."""
    tol = tol or Tolerances()
    g = problem.grid
    rhs = np.zeros(g.f.size)
    rhs[problem.boundary] = boundary_values(g, psi)
    s, s_ref = problem.kernel_measure()
    if s < problem.kernel_tol * s_ref:
        I = problem.interior
        _, _, vt = np.linalg.svd(problem.operator[np.ix_(I, I)])
        vec = np.zeros(g.f.size)
        vec[I] = vt[-1]
        if not allow_kernel:
            raise NonUniqueSolutionError("Dirichlet problem has a near kernel", s,
                                         vec.reshape(g.shape))
        # least squares, orthogonal to the near kernel
        w = np.linalg.lstsq(problem.matrix, rhs, rcond=None)[0]
        w -= (w @ vec) / (vec @ vec) * vec
        return w.reshape(g.shape)
    return linear_solve(problem.matrix, rhs, tol.lin_tol).reshape(g.shape)


def dtn_theta(problem: EllipticProblem, psi, w=None):
    """Normal derivative w_t on the boundary circle of the solved w."""
    if w is None:
        w = dirichlet_solve(problem, psi)
    return problem.grid.dt(w, 0)[:, -1]


# ------------------------------------------------------------- caps

def cap_grid(kappa: float, a: float, n_theta: int = 32, n_t: int = 16,
             ode_step: float = 1e-3) -> PolarGrid:
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if not 0 < a * np.sqrt(kappa) < np.pi:
        raise ValueError("cap radius must satisfy 0 < a < pi / sqrt(kappa)")
    surf = sphere(1.0 / np.sqrt(kappa))
    return PolarGrid(surf, (0.0, 0.0), GridSpec(n_theta, a, n_t, "chebyshev", ode_step))


def cap_problem(kappa: float, a: float, n_theta: int = 32, n_t: int = 16,
                kernel_tol: float = 1e-6) -> EllipticProblem:
    return assemble(cap_grid(kappa, a, n_theta, n_t), kernel_tol)


def cap_eigen_lambda1(kappa: float, a: float, n: int = 2000) -> float:
    """First Dirichlet eigenvalue of -Delta on a geodesic cap of radius a.

    Radial reduction -(f w')'/f = lam w with f = sin(sqrt(kappa) rho)/sqrt(kappa),
    cell-centred finite volumes, symmetrised with the cell areas.
    """
    sk = np.sqrt(kappa)
    if kappa <= 0 or not 0 < a * sk <= np.pi:
        raise ValueError("need kappa > 0 and 0 < a <= pi / sqrt(kappa)")
    h = a / n
    faces = np.arange(n + 1) * h
    f_face = np.sin(sk * faces) / sk
    mass = (np.cos(sk * faces[:-1]) - np.cos(sk * faces[1:])) / kappa
    diag = np.zeros(n)
    diag[:-1] += f_face[1:-1] / h
    diag[1:] += f_face[1:-1] / h
    diag[-1] += 2 * f_face[-1] / h   # Dirichlet at rho = a, half-cell distance
    off = -f_face[1:-1] / h
    s = 1 / np.sqrt(mass)
    lam, _ = symmetric_smallest_eig((diag * s * s, off * s[:-1] * s[1:]))
    return lam


# ------------------------------------------------------ revolutions

def check_revolution_condition(profile, a: float, samples: int = 400):
    """(1/s) h''(s) h'(s) > 0 on (0, a]."""
    import sympy as sp
    from .surface import parse_expr
    if isinstance(profile, str):
        profile = parse_expr(profile, names=("s",))
    s = sp.Symbol("s", real=True)
    expr = sp.sympify(profile)
    q = sp.lambdify(s, sp.diff(expr, s) * sp.diff(expr, s, 2) / s, "numpy")
    ss = np.linspace(a / samples, a, samples)
    vals = np.asarray(q(ss), dtype=float) * np.ones_like(ss)
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        bad = ss[~(vals > 0)]
        raise ConditionViolation(f"h'' h' / s <= 0 near s = {bad[0]:.4g}")
    return float(vals.min())


def profile_arclength(profile, a: float) -> float:
    import sympy as sp
    from .numerics import quadrature_1d
    from .surface import parse_expr
    if isinstance(profile, str):
        profile = parse_expr(profile, names=("s",))
    s = sp.Symbol("s", real=True)
    dh = sp.lambdify(s, sp.diff(sp.sympify(profile), s), "numpy")
    return quadrature_1d(lambda x: np.sqrt(1 + np.asarray(dh(x)) ** 2), 0.0, a, 40)


def revolution_problem(profile, a: float, n_theta: int = 24, n_t: int = 12,
                       kernel_tol: float = 1e-6) -> EllipticProblem:
    check_revolution_condition(profile, a)
    surf = revolution_graph(profile, bounds=((-1.5 * a, 1.5 * a), (-1.5 * a, 1.5 * a)))
    t_max = profile_arclength(profile, a)
    grid = PolarGrid(surf, (0.0, 0.0), GridSpec(n_theta, t_max, n_t, "chebyshev", 1e-3))
    return assemble(grid, kernel_tol)


def revolution_uniqueness(profile, a: float, n: int = 12) -> float:
    """Weighted sigma_min of the zero-Dirichlet system on {|x| < a}."""
    prob = revolution_problem(profile, a, n_theta=2 * n, n_t=n)
    return prob.kernel_measure()[0]
