"""Bending energy of the thin-shell limit.

    I(V) = 1/24 int Q2(Xi(V)) dA,
    Q2(G) = 2 mu |G|^2 + (lam mu / (mu + lam/2)) tr^2 G,
    Xi(V) = i(W) D Pi + Pi(D.W, .) + Pi(., D.W) + w T0 - D^2 w.

Xi is available on polar grids (frame components) and pointwise on charts
for ambient fields with analytic derivatives.  The chart version is checked
against a finite-difference linearisation of the deformed second
fundamental form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from .elliptic import cap_problem, dirichlet_solve, dtn_theta, EllipticProblem
from .geodesic import PolarGrid
from .isometry import IsometryField, reconstruct_W
from .numerics import fourier_derivative, gauss_legendre, periodic_trapezoid
from .surface import AmbientField, Surface, parse_expr, sphere


@dataclass(frozen=True)
class ElasticModuli:
    mu: float = 1.0
    lam: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not 2 * self.mu + self.lam > 0:
            raise ValueError("need 2 mu + lambda > 0")


@dataclass
class SymTensor2:
    """Components in an orthonormal tangent frame (scalars or arrays)."""
    g11: np.ndarray
    g12: np.ndarray
    g22: np.ndarray

    @classmethod
    def from_matrix(cls, M):
        M = np.asarray(M, dtype=float)
        return cls(M[..., 0, 0], 0.5 * (M[..., 0, 1] + M[..., 1, 0]), M[..., 1, 1])

    def matrix(self):
        return np.stack([np.stack([self.g11, self.g12], -1),
                         np.stack([self.g12, self.g22], -1)], -2)

    def norm2(self):
        return self.g11 ** 2 + 2 * self.g12 ** 2 + self.g22 ** 2

    def trace(self):
        return self.g11 + self.g22


def q2_closed(m: ElasticModuli, G: SymTensor2):
    return 2 * m.mu * G.norm2() + (m.lam * m.mu / (m.mu + m.lam / 2)) * G.trace() ** 2


def _q3_bilinear(m: ElasticModuli, F, H):
    """Polarisation of Q3(F) = 2 mu |sym F|^2 + lam tr^2 F."""
    sF = 0.5 * (F + F.T)
    sH = 0.5 * (H + H.T)
    return 2 * m.mu * np.sum(sF * sH) + m.lam * np.trace(F) * np.trace(H)


def q2_oracle(m: ElasticModuli, G: SymTensor2, return_minimizer: bool = False):
    """min over a in R^3 of Q3(F + a (x) N) with F the 3x3 embedding of G.

    The frame is (e1, e2, N) so a (x) N fills the third column.
    """
    F = np.zeros((3, 3))
    F[:2, :2] = SymTensor2.from_matrix(G.matrix()).matrix()
    cols = []
    for i in range(3):
        A = np.zeros((3, 3))
        A[i, 2] = 1.0
        cols.append(A)
    H = np.array([[_q3_bilinear(m, a, b) for b in cols] for a in cols])
    b = np.array([_q3_bilinear(m, F, a) for a in cols])
    a = np.linalg.solve(H, -b)
    val = _q3_bilinear(m, F, F) + b @ a
    return (float(val), a) if return_minimizer else float(val)


# ------------------------------------------------------ Xi on polar grids

def xi_tensor(field: IsometryField) -> SymTensor2:
    """Frame components of Xi(V) on the grid nodes."""
    g = field.grid
    phi, vphi, w = field.phi, field.vphi, field.w
    with np.errstate(divide="ignore", invalid="ignore"):
        M11 = g.dt(phi, 1)
        M12 = g.dt(vphi, 1)
        M21 = (g.dtheta(phi) - g.ft * vphi) / g.f
        M22 = (g.dtheta(vphi) + g.ft * phi) / g.f
    P11, P12, P22 = g.Pi11, g.Pi12, g.Pi22
    _, _, w11, w12, w22 = g.frame_derivatives(w)
    # (M Pi)_ij = <D_i W, e_b> Pi_bj
    MP11 = M11 * P11 + M12 * P12
    MP12 = M11 * P12 + M12 * P22
    MP21 = M21 * P11 + M22 * P12
    MP22 = M21 * P12 + M22 * P22
    x11 = phi * g.Pi111 + vphi * g.Pi112 + 2 * MP11 + w * (P11 ** 2 + P12 ** 2) - w11
    x12 = (phi * g.Pi112 + vphi * g.Pi122 + MP12 + MP21
           + w * P12 * (P11 + P22) - w12)
    x22 = phi * g.Pi122 + vphi * g.Pi222 + 2 * MP22 + w * (P12 ** 2 + P22 ** 2) - w22
    return SymTensor2(x11, x12, x22)


def trace_xi_residual(field: IsometryField) -> float:
    X = xi_tensor(field)
    m = field.grid.valid
    return float(np.abs(X.trace()[m]).max())


def bending_energy(field: IsometryField, m: ElasticModuli) -> float:
    """1/24 int Q2(Xi) dA over the geodesic disk."""
    return float(field.grid.integrate(q2_closed(m, xi_tensor(field)))) / 24.0


# ------------------------------------------------------- Xi on charts

def _chart_terms(surface: Surface, field: AmbientField, u, v):
    geo = surface.local(u, v)
    d = field.derivatives(geo.uv[..., 0], geo.uv[..., 1], 2)
    dot = lambda a, b: np.einsum("...k,...k->...", a, b)
    N = geo.N
    V = d[(0, 0)]
    Vi = [d[(1, 0)], d[(0, 1)]]
    Vij = [[d[(2, 0)], d[(1, 1)]], [d[(1, 1)], d[(0, 2)]]]
    return geo, dot, N, V, Vi, Vij


def xi_chart(surface: Surface, field: AmbientField, u, v):
    """Chart components Xi_ij of Xi(V) for an ambient field V."""
    geo, dot, N, V, Vi, Vij = _chart_terms(surface, field, u, v)
    w = dot(V, N)
    wi = [dot(Vi[i], N) + dot(V, geo.dN[..., i, :]) for i in range(2)]
    wij = [[dot(Vij[i][j], N) + dot(Vi[i], geo.dN[..., j, :])
            + dot(Vi[j], geo.dN[..., i, :]) + dot(V, geo.ddN[..., i, j, :])
            for j in range(2)] for i in range(2)]
    hess = np.array([[wij[i][j] - sum(geo.Gamma[..., k, i, j] * wi[k] for k in range(2))
                      for j in range(2)] for i in range(2)])
    hess = np.moveaxis(hess, (0, 1), (-2, -1))
    W = V - w[..., None] * N
    Wc = geo.to_coords(W)
    DW = np.stack([geo.to_coords(Vi[i] - wi[i][..., None] * N
                                 - w[..., None] * geo.dN[..., i, :])
                   for i in range(2)], -2)       # DW[..., i, k] = (D_i W)^k
    Pi = geo.Pi
    iota = np.einsum("...k,...kij->...ij", Wc, geo.DPi)
    PDW = np.einsum("...ik,...kj->...ij", DW, Pi)
    T0 = Pi @ geo.ginv @ Pi
    return iota + PDW + np.swapaxes(PDW, -1, -2) + w[..., None, None] * T0 - hess


def xi_fd_oracle(surface: Surface, field: AmbientField, u, v, eps: float):
    """(Pi of X + eps V pulled back - Pi) / eps in chart components."""
    dX = surface.derivatives(u, v, 2)
    dV = field.derivatives(u, v, 2)

    def second_form(e):
        Xu = dX[(1, 0)] + e * dV[(1, 0)]
        Xv = dX[(0, 1)] + e * dV[(0, 1)]
        n = np.cross(Xu, Xv)
        N = surface.normal_sign * n / np.linalg.norm(n, axis=-1, keepdims=True)
        comp = lambda k: -np.einsum("...k,...k->...", dX[k] + e * dV[k], N)
        P11, P12, P22 = comp((2, 0)), comp((1, 1)), comp((0, 2))
        return np.stack([np.stack([P11, P12], -1), np.stack([P12, P22], -1)], -2)

    return (second_form(eps) - second_form(0.0)) / eps


def chart_invariants(surface: Surface, M, u, v):
    """(|M|^2, tr M) of a chart 2-tensor with respect to the metric."""
    geo = surface.local(u, v)
    A = geo.ginv @ M
    return np.einsum("...ij,...ji->...", A, A), np.trace(A, axis1=-2, axis2=-1)


def bending_energy_chart(surface: Surface, field: AmbientField, m: ElasticModuli,
                         u_range, v_range, n: int = 24) -> float:
    """1/24 int Q2(Xi) dA over a chart rectangle by Gauss-Legendre."""
    xu, wu = gauss_legendre(n, *u_range)
    xv, wv = gauss_legendre(n, *v_range)
    U, Vg = np.meshgrid(xu, xv, indexing="ij")
    u, v = U.ravel(), Vg.ravel()
    Xi = xi_chart(surface, field, u, v)
    n2, tr = chart_invariants(surface, Xi, u, v)
    geo = surface.local(u, v)
    area = np.sqrt(np.linalg.det(geo.g))
    q = 2 * m.mu * n2 + (m.lam * m.mu / (m.mu + m.lam / 2)) * tr ** 2
    return float(np.sum(q * area * np.outer(wu, wv).ravel())) / 24.0


# ------------------------------------------------- explicit isometries

def sphere_holomorphic_field(F, r: float = 1.0) -> AmbientField:
    """Isometry of the sphere of radius r built from a holomorphic F(z).

    In the stereographic chart W = Re F du + Im F dv is conformal, and
    V = W + w N with w = -div W / (2 sqrt(kappa)) is an infinitesimal isometry.
    """
    U, V = sp.symbols("u v", real=True)
    z = sp.Symbol("z")
    if isinstance(F, str):
        F = sp.sympify(F, locals={"z": z})
    Fz = sp.expand_complex(sp.sympify(F).subs(z, U + sp.I * V))
    A, B = sp.re(Fz), sp.im(Fz)
    R = sp.Symbol("r", real=True)
    d = 1 + U ** 2 + V ** 2
    X = sp.Matrix([2 * R * U / d, 2 * R * V / d, R * (1 - U ** 2 - V ** 2) / d])
    lam2 = (2 * R / d) ** 2
    div = (sp.diff(lam2 * A, U) + sp.diff(lam2 * B, V)) / lam2
    w = -div * R / 2
    N = X / R
    Vf = A * X.diff(U) + B * X.diff(V) + w * N
    return AmbientField([sp.simplify(c) for c in Vf], {"r": r}, name="sphere-holomorphic")


def cylinder_remark_field(p0, p1) -> AmbientField:
    """V = (R(p0, p0'), p1) + z (-R(p1', p1''), 0) on the unit cylinder.

    R = [[-sin, -cos], [cos, -sin]] acting on (x, y); the chart is
    (u, v) = (theta, z) and the normal part is w = -p0' + z p1''.
    """
    th = sp.Symbol("theta", real=True)
    U, V = sp.symbols("u v", real=True)
    p0 = parse_expr(p0, names=("theta",)) if isinstance(p0, str) else sp.sympify(p0)
    p1 = parse_expr(p1, names=("theta",)) if isinstance(p1, str) else sp.sympify(p1)
    p0, p1 = p0.subs(th, U), p1.subs(th, U)
    c, s = sp.cos(U), sp.sin(U)
    rot = lambda a, b: (-s * a - c * b, c * a - s * b)
    a0 = rot(p0, sp.diff(p0, U))
    a1 = rot(sp.diff(p1, U), sp.diff(p1, U, 2))
    Vf = [a0[0] - V * a1[0], a0[1] - V * a1[1], p1]
    return AmbientField(Vf, {}, name="cylinder-remark")


def cylinder_structure_field(c0, c1) -> AmbientField:
    """Isometry of the slit unit cylinder with normal part w = c0 + z c1."""
    th = sp.Symbol("theta", real=True)
    c0 = parse_expr(c0, names=("theta",)) if isinstance(c0, str) else sp.sympify(c0)
    c1 = parse_expr(c1, names=("theta",)) if isinstance(c1, str) else sp.sympify(c1)
    s = sp.Symbol("s", real=True)
    p0 = -sp.integrate(c0.subs(th, s), (s, 0, th))
    inner = sp.integrate(c1.subs(th, s), (s, 0, th))
    p1 = sp.integrate(inner.subs(th, s), (s, 0, th))
    return cylinder_remark_field(p0, p1)


# ---------------------------------------------------- 1D reductions

def sphere_boundary_energy(kappa: float, a: float, psi, m: ElasticModuli,
                           problem: EllipticProblem | None = None,
                           cot_times_radius: bool = False, w=None) -> float:
    """Boundary form of the cap energy:

    (mu/12) int_Gamma [2 psi_tau (Theta psi)_tau - kappa psi Theta psi
                       - c (|Theta psi|^2 + |psi_tau|^2)] dGamma,

    c = sqrt(kappa) cot(sqrt(kappa) a), or a times that with ``cot_times_radius``.
    """
    prob = problem or cap_problem(kappa, a)
    g = prob.grid
    if w is None:
        w = dirichlet_solve(prob, psi)
    ps = w[:, -1]
    theta_psi = dtn_theta(prob, psi, w)
    fa = g.f[0, -1]
    ps_tau = fourier_derivative(ps) / fa
    th_tau = fourier_derivative(theta_psi) / fa
    sk = np.sqrt(kappa)
    c = sk / np.tan(sk * a)
    if cot_times_radius:
        c = c * a
    integrand = (2 * ps_tau * th_tau - kappa * ps * theta_psi
                 - c * (theta_psi ** 2 + ps_tau ** 2))
    return float(m.mu / 12 * periodic_trapezoid(integrand) * fa)


def cap_interior_energy(kappa: float, a: float, psi, m: ElasticModuli,
                        problem: EllipticProblem | None = None, w=None) -> float:
    prob = problem or cap_problem(kappa, a)
    if w is None:
        w = dirichlet_solve(prob, psi)
    return bending_energy(reconstruct_W(prob.grid, w), m)


def _as_callable(w):
    if callable(w):
        return w
    th = sp.Symbol("theta", real=True)
    expr = parse_expr(w, names=("theta",)) if isinstance(w, str) else sp.sympify(w)
    f = sp.lambdify(th, expr, "numpy")
    return lambda x: np.asarray(f(x), dtype=float) * np.ones_like(x)


def _trig_eval(vals, x, deriv: int = 0):
    """Derivative of the trigonometric interpolant of periodic samples at x."""
    n = len(vals)
    c = np.fft.rfft(vals) / n
    k = np.arange(len(c))
    if n % 2 == 0:
        c[-1] *= 0.5
    ck = c * (1j * k) ** deriv
    ph = np.exp(1j * np.outer(x, k))
    out = 2 * np.real(ph @ ck)
    if deriv == 0:
        out -= np.real(c[0])
    return out


def _trig_antideriv(vals, x):
    """int_0^x of the trigonometric interpolant."""
    n = len(vals)
    c = np.fft.rfft(vals) / n
    if n % 2 == 0:
        c[-1] *= 0.5
    k = np.arange(1, len(c))
    per = lambda y: 2 * np.real(np.exp(1j * np.outer(y, k)) @ (c[1:] / (1j * k)))
    return np.real(c[0]) * x + per(x) - per(np.zeros(1))[0]


def cylinder_energy_1d(w0, w1, a: float, m: ElasticModuli, n: int = 64,
                       third_divisor: float = 9.0) -> float:
    """Energy of the unit cylinder of half-length a for w = w0 + z w1:

    int [(mu a/3) (mu+lam)/(2mu+lam) (w0 + w0'')^2 + (mu a/3)(w1' + int_0 w1)^2
         + mu (mu+lam) a^3 / (d (2mu+lam)) (w1 + w1'')^2] dtheta

    with d = ``third_divisor``; 9 is what integrating z^2 over the length gives.
    """
    th = 2 * np.pi * np.arange(n) / n
    v0 = _as_callable(w0)(th)
    v1 = _as_callable(w1)(th)
    x, wq = gauss_legendre(2 * n, 0.0, 2 * np.pi)
    A0 = _trig_eval(v0, x) + _trig_eval(v0, x, 2)
    B1 = _trig_eval(v1, x, 1) + _trig_antideriv(v1, x)
    C1 = _trig_eval(v1, x) + _trig_eval(v1, x, 2)
    mu, lam = m.mu, m.lam
    r = (mu + lam) / (2 * mu + lam)
    c3 = mu * (mu + lam) * a ** 3 / (third_divisor * (2 * mu + lam))
    integrand = (mu * a / 3) * r * A0 ** 2 + (mu * a / 3) * B1 ** 2 + c3 * C1 ** 2
    return float(integrand @ wq)


def cylinder_energy_2d(w0, w1, a: float, m: ElasticModuli, n: int = 32) -> float:
    """Same energy by 2D quadrature of Q2(Xi) for the explicit isometry."""
    from .surface import cylinder
    surf = cylinder(1.0, b=a)
    fld = cylinder_structure_field(w0, w1)
    return bending_energy_chart(surf, fld, m, (0.0, 2 * np.pi), (-a, a), n)
