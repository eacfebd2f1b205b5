"""Infinitesimal isometries V = W + w N from their normal component.

On a geodesic polar grid the tangential part W = phi T + vphi E is
recovered from w by integrating along rays:

    phi  = <W_o, sigma> - int_0^t w Pi11
    vphi = Phi0 <W_o, sigma'> - w(o) Pi_o(sigma', sigma) f + int_0^t Phi(t, s) P(w)(s) ds

with P(w) = -2 w1 Pi12 + w2 Pi11 - w Pi121.  The first two isometry
equations then hold by construction; the angular one holds only when w
is admissible, which is what the characteristic operator A_o tests.

The second half of the module treats graphs x -> (x, h(x)), where the
vertical component u of V solves div(A grad u) = 0 with A the cofactor
matrix of D^2 h, and the horizontal components follow by line integrals.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from .geodesic import PolarGrid
from .killing import BASIS, killing_from_ic, obstruction_matrix
from .numerics import LineOps, barycentric_matrix, linear_solve
from .surface import RegimeError, Surface


# ------------------------------------------------------- frame helpers

def origin_frame_Pi(grid: PolarGrid):
    """Pi at the origin in the frame (e1, e2) as a 2x2 matrix."""
    geo = grid.surface.local(grid.origin[0], grid.origin[1])
    e1 = grid.e1
    e2 = grid.e2
    c = np.stack([geo.to_coords(e1[None])[0], geo.to_coords(e2[None])[0]])
    return c @ geo.Pi[0] @ c.T


def origin_Pi_sigma(grid: PolarGrid):
    """(Pi_o(sigma, sigma), Pi_o(sigma, sigma'), Pi_o(sigma', sigma')) per ray."""
    P = origin_frame_Pi(grid)
    c, s = np.cos(grid.theta), np.sin(grid.theta)
    sig = np.stack([c, s], -1)
    dsig = np.stack([-s, c], -1)
    q = lambda a, b: np.einsum("ni,ij,nj->n", a, P, b)
    return q(sig, sig), q(sig, dsig), q(dsig, dsig)


def origin_value(grid: PolarGrid, w):
    return float(grid.origin_value(w))


# ----------------------------------------------------------- operators

def operator_P(grid: PolarGrid, w, derivs=None):
    w1, w2 = (derivs or grid.frame_derivatives(w))[:2]
    return -2 * w1 * grid.Pi12 + w2 * grid.Pi11 - w * grid.Pi112


def _phi_integral(grid: PolarGrid, P):
    """int_0^t Phi(t, s) P(s) ds and its t-derivative."""
    I1 = grid.cumint(grid.Phi0 * P, 1)
    I2 = grid.cumint(grid.f * P, 0)
    return grid.f * I1 - grid.Phi0 * I2, grid.ft * I1 - grid.Phi0t * I2


@dataclass
class IsometryField:
    grid: PolarGrid
    w: np.ndarray
    phi: np.ndarray
    vphi: np.ndarray
    W_o: tuple
    w_o: float

    def ambient_W(self):
        g = self.grid
        return self.phi[..., None] * g.T + self.vphi[..., None] * g.E

    def ambient_V(self):
        return self.ambient_W() + self.w[..., None] * self.grid.N


def reconstruct_W(grid: PolarGrid, w, W_o=(0.0, 0.0)) -> IsometryField:
    w = np.asarray(w, dtype=float)
    th = grid.theta[:, None]
    W1, W2 = W_o
    w_o = origin_value(grid, w)
    _, pi_ssd, _ = origin_Pi_sigma(grid)
    phi = (W1 * np.cos(th) + W2 * np.sin(th)) - grid.cumint(w * grid.Pi11, 0)
    P = operator_P(grid, w)
    K, _ = _phi_integral(grid, P)
    vphi = (grid.Phi0 * (-W1 * np.sin(th) + W2 * np.cos(th))
            - w_o * pi_ssd[:, None] * grid.f + K)
    return IsometryField(grid, w, phi, vphi, tuple(W_o), w_o)


def isometry_components(field: IsometryField):
    """Frame components of sym(DW) + w Pi, i.e. <D_X V, Y> symmetrized."""
    g = field.grid
    phi_t = g.dt(field.phi, 1)
    vphi_t = g.dt(field.vphi, 1)
    phi_th = g.dtheta(field.phi)
    vphi_th = g.dtheta(field.vphi)
    with np.errstate(divide="ignore", invalid="ignore"):
        r11 = phi_t + field.w * g.Pi11
        r12 = 0.5 * (vphi_t + (phi_th - g.ft * field.vphi) / g.f) + field.w * g.Pi12
        r22 = (vphi_th + g.ft * field.phi) / g.f + field.w * g.Pi22
    return r11, r12, r22


def _interior(grid):
    return grid.valid & (grid.t[None, :] > 0)


def isometry_residual(field: IsometryField) -> float:
    m = _interior(field.grid)
    return float(max(np.abs(r[m]).max() for r in isometry_components(field)))


def third_equation_residual(field: IsometryField) -> float:
    m = _interior(field.grid)
    return float(np.abs(isometry_components(field)[2][m]).max())


def qstar_pi(grid: PolarGrid, derivs):
    """<D^2 u, Q*Pi> = u11 Pi22 - 2 u12 Pi12 + u22 Pi11."""
    _, _, u11, u12, u22 = derivs
    return u11 * grid.Pi22 - 2 * u12 * grid.Pi12 + u22 * grid.Pi11


def operator_Ao(grid: PolarGrid, u):
    u = np.asarray(u, dtype=float)
    d = grid.frame_derivatives(u)
    K, _ = _phi_integral(grid, operator_P(grid, u, d))
    return (qstar_pi(grid, d) + u * grid.kappa * grid.trPi()
            + grid.k1 * grid.cumint(u * grid.Pi11, 0) - grid.k2 * K)


def characteristic_lhs(grid: PolarGrid, u):
    _, pi_ssd, _ = origin_Pi_sigma(grid)
    u_o = np.asarray(grid.origin_value(u))[..., None, None]
    return operator_Ao(grid, u) + u_o * pi_ssd[:, None] * grid.k2 * grid.f


def characteristic_residual(grid: PolarGrid, u) -> float:
    return float(np.abs(characteristic_lhs(grid, u)[grid.valid]).max())


def lemma_identity_residual(field: IsometryField) -> float:
    g = field.grid
    d = g.frame_derivatives(field.w)
    lhs = qstar_pi(g, d) + field.w * g.kappa * g.trPi()
    rhs = g.k1 * field.phi + g.k2 * field.vphi
    return float(np.abs(lhs - rhs)[g.valid].max())


def killing_component(field: IsometryField, tol: float = 1e-6):
    """L2 coefficients of W along the Killing fields that exist on the grid.

    Returns (coefficients, relative size of the projection).
    """
    g = field.grid
    M, F, _ = obstruction_matrix(g)
    _, s, vt = np.linalg.svd(M)
    thr = tol * np.linalg.norm(F, 2)
    null = vt[s <= thr]
    if len(null) == 0:
        return np.zeros(0), 0.0
    basis = [killing_from_ic(g, ic) for ic in BASIS]
    fields = []
    for row in null:
        phi = sum(c * b.phi for c, b in zip(row, basis))
        vphi = sum(c * b.vphi for c, b in zip(row, basis))
        fields.append((phi, vphi))
    G = np.array([[g.integrate(a[0] * b[0] + a[1] * b[1]) for b in fields] for a in fields])
    rhs = np.array([g.integrate(a[0] * field.phi + a[1] * field.vphi) for a in fields])
    coef = np.linalg.solve(G, rhs)
    norm_w = g.integrate(field.phi ** 2 + field.vphi ** 2)
    proj = coef @ G @ coef
    return coef, float(np.sqrt(max(proj, 0.0) / norm_w)) if norm_w > 0 else 0.0


def ambient_isometry_residual(grid: PolarGrid, V) -> float:
    """max |sym <D_X V, Y>| over the frame pairs, from ambient samples of V."""
    V = np.asarray(V, dtype=float)
    comps = np.moveaxis(V, -1, 0)
    Vt = np.moveaxis(np.stack([grid.dt(c, 0) for c in comps]), 0, -1)
    Vth = np.moveaxis(np.stack([grid.dtheta(c) for c in comps]), 0, -1)
    dot = lambda a, b: np.einsum("...k,...k->...", a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        r11 = dot(Vt, grid.T)
        r12 = 0.5 * (dot(Vt, grid.E) + dot(Vth, grid.T) / grid.f)
        r22 = dot(Vth, grid.E) / grid.f
    m = _interior(grid)
    return float(max(np.abs(r[m]).max() for r in (r11, r12, r22)))


# ---------------------------------------------------------- graph route

def _h_derivs(surface: Surface, x1, x2, order=2):
    d = surface.derivatives(x1, x2, max(order, 2))
    return {k: v[..., 2] for k, v in d.items()}


def graph_operator_A(surface: Surface, x1, x2):
    """Cofactor matrix of D^2 h: [[h22, -h12], [-h12, h11]]."""
    h = _h_derivs(surface, x1, x2)
    h11, h12, h22 = h[(2, 0)], h[(1, 1)], h[(0, 2)]
    return np.stack([np.stack([h22, -h12], -1), np.stack([-h12, h11], -1)], -2)


@dataclass
class PlanarSolution:
    """u on a tensor grid over a rectangle, with spectral or FD evaluation."""
    x: np.ndarray
    y: np.ndarray
    U: np.ndarray
    scheme: str
    Dx: np.ndarray
    Dy: np.ndarray

    def _interp(self, F, px, py):
        px = np.atleast_1d(np.asarray(px, dtype=float))
        py = np.atleast_1d(np.asarray(py, dtype=float))
        if self.scheme == "spectral":
            Bx = barycentric_matrix(self.x, px)
            By = barycentric_matrix(self.y, py)
        else:
            Bx = _local_interp_matrix(self.x, px)
            By = _local_interp_matrix(self.y, py)
        return np.einsum("ki,ij,kj->k", Bx, F, By)

    def value(self, px, py):
        return self._interp(self.U, px, py)

    def grad(self, px, py):
        Ux = self.Dx @ self.U
        Uy = self.U @ self.Dy.T
        return np.stack([self._interp(Ux, px, py), self._interp(Uy, px, py)], -1)

    def max_abs(self):
        return float(np.abs(self.U).max())


def _cheb(n, a, b):
    ops = LineOps.chebyshev(n, 0.5 * (b - a))
    return ops.x + 0.5 * (a + b), ops.D


def graph_solve_u(surface: Surface, box, n: int, psi, scheme: str = "spectral",
                  lin_tol: float = 1e-9) -> PlanarSolution:
    """Solve tr(A D^2 u) = 0 on a rectangle with u = psi on its boundary."""
    (a, b), (c, d) = box
    if scheme == "spectral":
        x, Dx = _cheb(n, a, b)
        y, Dy = _cheb(n, c, d)
    elif scheme == "fd":
        x = np.linspace(a, b, n + 1)
        y = np.linspace(c, d, n + 1)
        Dx = _fd2(x)
        Dy = _fd2(y)
    else:
        raise ValueError("scheme must be 'spectral' or 'fd'")
    X1, X2 = np.meshgrid(x, y, indexing="ij")
    A = graph_operator_A(surface, X1, X2)
    detA = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] ** 2
    if np.any(detA <= 0):
        raise RegimeError("det A <= 0 somewhere: the graph is not elliptic on the box")
    m = len(x)
    I = np.eye(m)
    Dxx = np.kron(Dx @ Dx, I)
    Dyy = np.kron(I, Dy @ Dy)
    Dxy = np.kron(Dx, Dy)
    L = (A[..., 0, 0].ravel()[:, None] * Dxx + 2 * A[..., 0, 1].ravel()[:, None] * Dxy
         + A[..., 1, 1].ravel()[:, None] * Dyy)
    bnd = np.zeros((m, m), dtype=bool)
    bnd[0, :] = bnd[-1, :] = bnd[:, 0] = bnd[:, -1] = True
    bnd = bnd.ravel()
    rhs = np.zeros(m * m)
    L[bnd] = 0.0
    L[bnd, np.flatnonzero(bnd)] = 1.0
    rhs[bnd] = np.asarray(psi(X1.ravel()[bnd], X2.ravel()[bnd]), dtype=float)
    U = np.zeros(m * m) if not np.any(rhs) else linear_solve(L, rhs, lin_tol)
    return PlanarSolution(x, y, U.reshape(m, m), scheme, Dx, Dy)


def _fd2(x):
    """Second-order central first-derivative matrix (one-sided at ends)."""
    n = len(x)
    h = x[1] - x[0]
    D = np.zeros((n, n))
    for i in range(1, n - 1):
        D[i, i - 1], D[i, i + 1] = -0.5 / h, 0.5 / h
    D[0, :3] = np.array([-1.5, 2.0, -0.5]) / h
    D[-1, -3:] = np.array([0.5, -2.0, 1.5]) / h
    return D


def _local_interp_matrix(x, targets, width=6):
    targets = np.atleast_1d(targets)
    n = len(x)
    width = min(width, n)
    M = np.zeros((len(targets), n))
    pos = np.searchsorted(x, targets)
    for r, (tx, p) in enumerate(zip(targets, pos)):
        lo = min(max(p - width // 2, 0), n - width)
        idx = np.arange(lo, lo + width)
        M[r, idx] = barycentric_matrix(x[idx], [tx])[0]
    return M


@dataclass
class GraphReconstruction:
    u: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    psi: np.ndarray
    w: np.ndarray

    def V(self):
        return np.stack([self.u1, self.u2, self.u], -1)


def graph_reconstruct(grid: PolarGrid, sol: PlanarSolution, Z=(0.0, 0.0)) -> GraphReconstruction:
    """Horizontal components and normal part of V = (u1, u2, u) along the
    geodesic rays of ``grid`` (which must live on the graph chart)."""
    surf = grid.surface
    x1, x2 = grid.uv[..., 0], grid.uv[..., 1]
    rd = grid.Tc  # chart velocity of the ray = planar velocity
    shp = grid.shape
    u = sol.value(x1.ravel(), x2.ravel()).reshape(shp)
    gu = sol.grad(x1.ravel(), x2.ravel()).reshape(shp + (2,))
    h = _h_derivs(surf, x1, x2)
    h1, h2 = h[(1, 0)], h[(0, 1)]
    h11, h12, h22 = h[(2, 0)], h[(1, 1)], h[(0, 2)]
    Qh = np.stack([h2, -h1], -1)
    DQh = np.stack([h12 * rd[..., 0] + h22 * rd[..., 1],
                    -(h11 * rd[..., 0] + h12 * rd[..., 1])], -1)
    dot = lambda a, b: np.einsum("...i,...i->...", a, b)
    psi = dot(gu, Qh) - grid.cumint(dot(gu, DQh), 1)
    rh = h1 * rd[..., 0] + h2 * rd[..., 1]
    u1 = Z[0] + grid.cumint(psi * rd[..., 1] - gu[..., 0] * rh, 1)
    u2 = Z[1] - grid.cumint(psi * rd[..., 0] + gu[..., 1] * rh, 1)
    eta = 1.0 / np.sqrt(1 + h1 ** 2 + h2 ** 2)
    w = eta * (h1 * u1 + h2 * u2 - u)
    return GraphReconstruction(u, u1, u2, psi, w)


def revolution_w(grid: PolarGrid, sol: PlanarSolution, profile) -> np.ndarray:
    """Normal part for a graph of revolution from the radial formula

        w eta = eta^2 h'(f) int_0^t u h''(f) f' ds - u,

    with the Jacobi factor f standing in for the planar radius."""
    s = sp.Symbol("s", real=True)
    prof = sp.sympify(profile) if not isinstance(profile, str) else sp.sympify(
        profile, locals={"s": s})
    hp = sp.lambdify(s, sp.diff(prof, s), "numpy")
    hpp = sp.lambdify(s, sp.diff(prof, s, 2), "numpy")
    f, ft = grid.f, grid.ft
    x1, x2 = grid.uv[..., 0], grid.uv[..., 1]
    u = sol.value(x1.ravel(), x2.ravel()).reshape(grid.shape)
    h1 = hp(f) * np.ones_like(f)
    h2 = hpp(f) * np.ones_like(f)
    eta2 = 1.0 / (1.0 + h1 ** 2)
    # u h''(f) f' is even along a diameter (f odd, h'' even, f' even)
    integral = grid.cumint(u * h2 * ft, 0)
    return (eta2 * h1 * integral - u) / np.sqrt(eta2)
