"""Hyperbolic regime: kappa < 0.

In an orthogonal chart (s, theta) with Pi(ds, dtheta) = 0 and
Pi(ds, ds) < 0 the characteristic equation becomes the wave equation

    w_ss = (a w_theta)_theta + Bt w,    a = -Pi(ds, ds) / Pi(dtheta, dtheta) > 0,

where Bt collects the connection terms and the nonlocal ray integrals

    Bt w = -a_theta w_theta + c_s w_s + c_t w_theta + m R(w),
    c_s = G^s_ss - a G^s_tt,   c_t = G^t_ss - a G^t_tt,   m = -|ds|^2 |dtheta|^2 / Pi(dtheta, dtheta),
    R(w) = w kappa trPi + k1 int_0^t w Pi11 - k2 int_0^t Phi(t, s) P(w) ds
           + w(o) Pi_o(sigma, sigma') k2 f.

R is evaluated along the geodesic from a fixed point o to each node, so
it needs w on the whole region; the evolution runs inside a Picard loop.
The chart is u = u0 + s, v = theta on a catalog surface.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .geodesic import PolarGrid, build_polar_grid, shoot
from .isometry import characteristic_lhs, origin_Pi_sigma, qstar_pi
from .numerics import (LineOps, barycentric_matrix, fourier_derivative,
                       fourier_interp_matrix, gauss_legendre)
from .surface import RegimeError, Surface


class HyperbolicAssumptionError(RegimeError):
    def __init__(self, message: str, nodes=()):
        super().__init__(message)
        self.nodes = list(nodes)


class CoverageError(RuntimeError):
    """The region is not inside the injectivity domain of exp_o."""


class StabilityError(RuntimeError):
    """Step in s violates the CFL bound."""


class CornerError(ValueError):
    """Side data incompatible with the Cauchy data at a corner."""


# ------------------------------------------------------------ the chart

def _coefficients(surface: Surface, u0: float, s, theta):
    s = np.atleast_1d(np.asarray(s, float))
    theta = np.atleast_1d(np.asarray(theta, float))
    U, V = np.meshgrid(u0 + s, theta, indexing="ij")
    geo = surface.local(U, V)
    g, Pi, Gam = geo.g, geo.Pi, geo.Gamma
    # partial derivatives of Pi from the covariant ones
    dPi = (geo.DPi + np.einsum("...lki,...lj->...kij", Gam, Pi)
           + np.einsum("...lkj,...il->...kij", Gam, Pi))
    a = -Pi[..., 0, 0] / Pi[..., 1, 1]
    a_th = -(dPi[..., 1, 0, 0] * Pi[..., 1, 1] - Pi[..., 0, 0] * dPi[..., 1, 1, 1]) \
        / Pi[..., 1, 1] ** 2
    return {
        "g_ss": g[..., 0, 0], "g_st": g[..., 0, 1], "g_tt": g[..., 1, 1],
        "Pi_ss": Pi[..., 0, 0], "Pi_st": Pi[..., 0, 1], "Pi_tt": Pi[..., 1, 1],
        "kappa": geo.kappa, "a": a, "a_theta": a_th,
        "c_s": Gam[..., 0, 0, 0] - a * Gam[..., 0, 1, 1],
        "c_t": Gam[..., 1, 0, 0] - a * Gam[..., 1, 1, 1],
        "m": -g[..., 0, 0] * g[..., 1, 1] / Pi[..., 1, 1],
    }


@dataclass
class HyperbolicChart:
    """Coordinates u = u0 + s, v = theta with s in [0, b].

    ``a0`` set instead of a surface gives the constant-coefficient model
    w_ss = a0 w_theta_theta with every lower-order term switched off.
    """
    surface: Surface | None
    u0: float
    b: float
    s: np.ndarray
    theta: np.ndarray
    coef: dict
    a0: float | None = None

    def coefficients(self, s, theta):
        if self.surface is None:
            shape = (len(np.atleast_1d(s)), len(np.atleast_1d(theta)))
            z = np.zeros(shape)
            return {"a": np.full(shape, self.a0), "a_theta": z, "c_s": z, "c_t": z, "m": z}
        return _coefficients(self.surface, self.u0, s, theta)

    @classmethod
    def constant(cls, a0: float, b: float = 1.0, n_theta: int = 32):
        if not a0 > 0:
            raise ValueError("a0 must be positive")
        th = 2 * np.pi * np.arange(n_theta) / n_theta
        s = np.linspace(0.0, b, 5)
        return cls(None, 0.0, b, s, th, {"a": np.full((5, n_theta), float(a0))}, float(a0))


def check_assumptions(surface: Surface, u0: float, b: float, n_s: int = 9,
                      n_theta: int = 32, tol: float = 1e-8) -> HyperbolicChart:
    """Verify orthogonality, Pi(ds, ds) < 0, Pi(ds, dtheta) = 0 and a > 0."""
    s = np.linspace(0.0, b, n_s)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    c = _coefficients(surface, u0, s, th)
    scale = np.sqrt(np.abs(c["g_ss"] * c["g_tt"]))
    pscale = np.sqrt(np.abs(c["Pi_ss"] * c["Pi_tt"])) + 1e-300
    checks = {
        "kappa >= 0": c["kappa"] >= 0,
        "<ds, dtheta> != 0": np.abs(c["g_st"]) > tol * scale,
        "Pi(ds, ds) >= 0": c["Pi_ss"] >= 0,
        "Pi(ds, dtheta) != 0": np.abs(c["Pi_st"]) > tol * pscale,
        "a <= 0": ~(c["a"] > 0),
    }
    for name, bad in checks.items():
        if bad.any():
            idx = np.argwhere(bad)
            nodes = [(float(s[i]), float(th[j])) for i, j in idx[:10]]
            raise HyperbolicAssumptionError(
                f"{surface.name}: {name} at {int(bad.sum())} nodes, e.g. {nodes[:3]}", nodes)
    return HyperbolicChart(surface, float(u0), float(b), s, th, c)


@dataclass
class CauchyData:
    """w(0, theta) = w0 and w_s(0, theta) = w1 on a uniform theta grid."""
    w0: np.ndarray
    w1: np.ndarray

    def __post_init__(self):
        self.w0 = np.asarray(self.w0, dtype=float)
        self.w1 = np.asarray(self.w1, dtype=float)
        if self.w0.shape != self.w1.shape or self.w0.ndim != 1:
            raise ValueError("w0 and w1 must be 1D arrays of equal length")
        mean = abs(self.w1.mean())
        if mean > 1e-12 * max(1.0, np.abs(self.w1).max()):
            raise ValueError(f"w1 must have zero mean (mean {mean:.3g})")

    @classmethod
    def from_functions(cls, w0, w1, n_theta: int, remove_mean: bool = False):
        th = 2 * np.pi * np.arange(n_theta) / n_theta
        v0 = np.asarray(w0(th), float) * np.ones(n_theta)
        v1 = np.asarray(w1(th), float) * np.ones(n_theta)
        if remove_mean:
            v1 = v1 - v1.mean()
        return cls(v0, v1)


# ------------------------------------------------- interpolation helpers

def _local_interp(x, targets, width: int = 8):
    """Local Lagrange interpolation matrix on sorted nodes."""
    x = np.asarray(x, float)
    targets = np.atleast_1d(np.asarray(targets, float))
    n = len(x)
    width = min(width, n)
    M = np.zeros((len(targets), n))
    pos = np.searchsorted(x, targets)
    for r, (tx, p) in enumerate(zip(targets, pos)):
        lo = min(max(p - width // 2, 0), n - width)
        idx = np.arange(lo, lo + width)
        M[r, idx] = barycentric_matrix(x[idx], [tx])[0]
    return M


def _cheb_line(lo: float, hi: float, n: int):
    """Chebyshev extreme points on [lo, hi] with the differentiation matrix."""
    ops = LineOps.chebyshev(n, 0.5 * (hi - lo))
    return ops.x + 0.5 * (hi + lo), ops.D


def _fourier_D(n: int):
    return fourier_derivative(np.eye(n), 1, axis=0)


# --------------------------------------------------- nonlocal ray terms

@dataclass
class NonlocalTerm:
    """R(w) on a tensor node set, as a dense matrix acting on node values.

    Every node x is joined to o by its own geodesic; the ray integrals use
    Gauss-Legendre points on [0, t(x)] and spectral interpolation of w and
    its chart derivatives.
    """
    s_nodes: np.ndarray
    theta_nodes: np.ndarray
    periodic: bool
    matrix: np.ndarray
    origin: np.ndarray
    polar_t: np.ndarray
    polar_theta: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def interp_rows(self, s, theta):
        """Interpolation matrix from node values to points (s, theta)."""
        Bs = barycentric_matrix(self.s_nodes, s)
        if self.periodic:
            Bt = fourier_interp_matrix(len(self.theta_nodes), theta)
        else:
            Bt = barycentric_matrix(self.theta_nodes, theta)
        return np.einsum("pi,pj->pij", Bs, Bt).reshape(len(Bs), -1)

    def apply(self, w_nodes):
        return (self.matrix @ np.ravel(w_nodes)).reshape(len(self.s_nodes), -1)


def build_nonlocal(surface: Surface, u0: float, b: float, origin,
                   theta_range=None, n_s: int = 10, n_theta: int = 12,
                   n_gauss: int = 20, ode_step: float = 2e-3,
                   leave_tol: float = 1e-3) -> NonlocalTerm:
    """Assemble R on Chebyshev nodes in s (and theta for a sector).

    ``theta_range`` None means the full periodic circle, which always
    crosses the cut locus of o on a surface of revolution; the check then
    raises CoverageError.
    """
    origin = np.asarray(origin, float)
    periodic = theta_range is None
    s_nodes, Ds = _cheb_line(0.0, b, n_s)
    if periodic:
        th_nodes = 2 * np.pi * np.arange(n_theta) / n_theta
        Dt = _fourier_D(n_theta)
    else:
        th_nodes, Dt = _cheb_line(theta_range[0], theta_range[1], n_theta)
    S, TH = np.meshgrid(s_nodes, th_nodes, indexing="ij")
    nodes_uv = np.stack([u0 + S.ravel(), TH.ravel()], -1)
    n_nodes = len(nodes_uv)
    targets = surface.local(nodes_uv[:, 0], nodes_uv[:, 1]).X

    # polar coordinates of every node about o
    X_o = surface.local(origin[0], origin[1]).X[0]
    dist = np.linalg.norm(targets - X_o, axis=-1).max()
    for reach in (1.15 * dist, 1.5 * dist):
        locator = build_polar_grid(surface, origin, 48, reach, n_t=24, kind="chebyshev")
        if not locator.complete:
            # rays leave the chart: global interpolation would use stale nodes
            locator = build_polar_grid(surface, origin, 48, reach, n_t=40, kind="uniform")
        t_x, th_x, ok = locator.locate(targets)
        if ok.all():
            break
    else:
        raise CoverageError(f"{int((~ok).sum())} nodes not reached from o")
    in_region = _region_test(u0, b, theta_range, leave_tol)
    for i, ti, j, tj in locator.crossings():
        if ti <= t_x.max():
            uv = locator.ray(i).value_at(locator.uv[i], ti)
            if in_region(uv[None])[0]:
                raise CoverageError("rays from o cross inside the region (cut locus)")

    # one ray per node, sampled finely, then Gauss-Legendre on [0, t_x]
    t_fine = np.linspace(0.0, 1.0005 * t_x.max(), 121)
    rays = PolarGrid.__new__(PolarGrid)
    rays.surface, rays.origin = surface, origin
    rays.theta, rays.t = th_x, t_fine
    states, rays.valid, rays.exit_t = shoot(surface, origin, th_x, t_fine, ode_step)
    rays._fill(states)
    if np.any(rays.exit_t < t_x):
        raise CoverageError("a ray leaves the chart before reaching its node")
    xg, wg = gauss_legendre(n_gauss)
    tau = 0.5 * (xg[None, :] + 1.0) * t_x[:, None]          # (n_nodes, q)
    omega = 0.5 * wg[None, :] * t_x[:, None]

    def windows(pts, width=8):
        """Lagrange windows on the uniform ray nodes: (index, weights)."""
        n = len(t_fine)
        lo = np.clip(np.searchsorted(t_fine, pts) - width // 2, 0, n - width)
        idx = lo[..., None] + np.arange(width)
        x = t_fine[idx]
        diff = pts[..., None, None] - x[..., None, :]          # x - x_j
        den = x[..., :, None] - x[..., None, :]                # x_k - x_j
        eye = np.eye(width, dtype=bool)
        ratio = np.where(eye, 1.0, diff / np.where(eye, 1.0, den))
        return idx, ratio.prod(axis=-1)

    def along(q, win):
        idx, wts = win
        rows = np.arange(n_nodes).reshape((n_nodes,) + (1,) * (idx.ndim - 1))
        g = q[rows, idx]
        if q.ndim == 2:
            return np.einsum("...k,...k->...", g, wts)
        return np.einsum("...kc,...k->...c", g, wts)

    wq, we = windows(tau), windows(t_x[:, None])
    uv_q, Tc_q, Ec_q = along(rays.uv, wq), along(rays.Tc, wq), along(rays.Ec, wq)
    Pi11_q, Pi12_q, Pi112_q = along(rays.Pi11, wq), along(rays.Pi12, wq), along(rays.Pi112, wq)
    f_q, P0_q = along(rays.f, wq), along(rays.Phi0, wq)
    f_x, P0_x = along(rays.f, we)[:, 0], along(rays.Phi0, we)[:, 0]
    k1_x, k2_x = along(rays.k1, we)[:, 0], along(rays.k2, we)[:, 0]
    uv_end = along(rays.uv, we)[:, 0]
    miss = np.abs(surface.local(uv_end[:, 0], uv_end[:, 1]).X - targets).max()
    if miss > 1e-6:
        raise CoverageError(f"rays miss their nodes by {miss:.3g}")
    if not in_region(uv_q.reshape(-1, 2)).all():
        raise CoverageError("a ray from o leaves the region (not star-shaped)")
    geo_x = surface.local(nodes_uv[:, 0], nodes_uv[:, 1])
    kappa_x = geo_x.kappa
    trPi_x = np.einsum("nij,nij->n", geo_x.ginv, geo_x.Pi)
    _, pi_ssd, _ = origin_Pi_sigma(rays)

    # interpolation of w, w_u, w_v at the quadrature points
    sq = uv_q[..., 0].ravel() - u0
    vq = uv_q[..., 1].ravel()
    if periodic:
        vq = np.mod(vq, 2 * np.pi)
        Bt = fourier_interp_matrix(len(th_nodes), vq)
    else:
        Bt = barycentric_matrix(th_nodes, vq)
    Bs = barycentric_matrix(s_nodes, sq)
    kron = lambda A, B: np.einsum("pi,pj->pij", A, B).reshape(len(A), -1)
    Wv = kron(Bs, Bt).reshape(n_nodes, n_gauss, -1)
    Wu = kron(Bs @ Ds, Bt).reshape(n_nodes, n_gauss, -1)
    Wt = kron(Bs, Bt @ Dt).reshape(n_nodes, n_gauss, -1)
    W1 = Tc_q[..., 0, None] * Wu + Tc_q[..., 1, None] * Wt
    W2 = Ec_q[..., 0, None] * Wu + Ec_q[..., 1, None] * Wt
    Pq = -2 * W1 * Pi12_q[..., None] + W2 * Pi11_q[..., None] - Wv * Pi112_q[..., None]

    int_wPi11 = np.einsum("nq,nqk->nk", omega * Pi11_q, Wv)
    I1 = np.einsum("nq,nqk->nk", omega * P0_q, Pq)
    I2 = np.einsum("nq,nqk->nk", omega * f_q, Pq)
    o_row = kron(barycentric_matrix(s_nodes, [origin[0] - u0]),
                 fourier_interp_matrix(len(th_nodes), [np.mod(origin[1], 2 * np.pi)])
                 if periodic else barycentric_matrix(th_nodes, [origin[1]]))[0]
    R = (np.diag(kappa_x * trPi_x)
         + k1_x[:, None] * int_wPi11
         - k2_x[:, None] * (f_x[:, None] * I1 - P0_x[:, None] * I2)
         + (pi_ssd * k2_x * f_x)[:, None] * o_row[None, :])
    diag = {"max_t": float(t_x.max()), "miss": float(miss), "n_nodes": n_nodes}
    return NonlocalTerm(s_nodes, th_nodes, periodic, R, origin,
                        t_x.reshape(S.shape), th_x.reshape(S.shape), diag)


def _region_test(u0, b, theta_range, tol):
    def test(uv):
        s = uv[:, 0] - u0
        ok = (s >= -tol * b) & (s <= b * (1 + tol))
        if theta_range is not None:
            lo, hi = theta_range
            span = hi - lo
            ok &= (uv[:, 1] >= lo - tol * span) & (uv[:, 1] <= hi + tol * span)
        return ok
    return test


def nonlocal_polar(surface: Surface, origin, w_fn, points_uv, t_max: float,
                   n_theta: int = 32, n_t: int = 16):
    """R(w) through a Chebyshev polar grid about o (independent route).

    ``w_fn`` is a callable of chart coordinates defined on the whole disk;
    results are interpolated to ``points_uv`` after locating them.
    """
    grid = build_polar_grid(surface, origin, n_theta, t_max, n_t=n_t, kind="chebyshev")
    w = w_fn(grid.uv[..., 0], grid.uv[..., 1])
    R = characteristic_lhs(grid, w) - qstar_pi(grid, grid.frame_derivatives(w))
    pts = np.asarray(points_uv, float)
    X = surface.local(pts[:, 0], pts[:, 1]).X
    t, th, ok = grid.locate(X)
    if not ok.all():
        raise CoverageError("points outside the polar grid")
    return grid.interpolate(R, 0, t, th)


def operator_Btilde(chart: HyperbolicChart, w_fn, s, theta, ray_term: NonlocalTerm | None = None):
    """Bt w at the tensor points (s, theta) for a callable w(u, v).

    Derivatives of w are taken spectrally from its samples on the node set
    of ``ray_term`` (or from a local Chebyshev x Fourier set without it).
    """
    s = np.atleast_1d(np.asarray(s, float))
    theta = np.atleast_1d(np.asarray(theta, float))
    c = chart.coefficients(s, theta)
    S, TH = np.meshgrid(s, theta, indexing="ij")
    if ray_term is None:
        s_nodes, Ds = _cheb_line(0.0, chart.b, 16)
        th_nodes = 2 * np.pi * np.arange(32) / 32
        Bt_ = fourier_interp_matrix(32, TH.ravel())
        Dt = _fourier_D(32)
        periodic = True
    else:
        s_nodes, Ds = _cheb_line(0.0, chart.b, len(ray_term.s_nodes) - 1)
        th_nodes = ray_term.theta_nodes
        periodic = ray_term.periodic
        if periodic:
            Dt = _fourier_D(len(th_nodes))
            Bt_ = fourier_interp_matrix(len(th_nodes), TH.ravel())
        else:
            Dt = _cheb_line(th_nodes[0], th_nodes[-1], len(th_nodes) - 1)[1]
            Bt_ = barycentric_matrix(th_nodes, TH.ravel())
    Sn, Tn = np.meshgrid(s_nodes, th_nodes, indexing="ij")
    wn = np.asarray(w_fn(chart.u0 + Sn, Tn), float)
    Bs = barycentric_matrix(s_nodes, S.ravel())
    rows = lambda A, B: np.einsum("pi,pj->pij", A, B).reshape(len(A), -1)
    flat = wn.ravel()
    w_s = (rows(Bs @ Ds, Bt_) @ flat).reshape(S.shape)
    w_t = (rows(Bs, Bt_ @ Dt) @ flat).reshape(S.shape)
    out = -c["a_theta"] * w_t + c["c_s"] * w_s + c["c_t"] * w_t
    if ray_term is not None:
        Rn = ray_term.apply(wn)
        out = out + c["m"] * (ray_term.interp_rows(S.ravel(), TH.ravel())
                              @ Rn.ravel()).reshape(S.shape)
    return out


# ------------------------------------------------------------ stepping

@dataclass
class Evolution:
    s: np.ndarray            # levels 0..N
    theta: np.ndarray
    w: np.ndarray            # (N + 2, n_theta): one level beyond b
    h: float
    coef: dict
    forcing: np.ndarray
    sides: tuple | None = None
    picard_iterations: int = 0
    picard_change: float = 0.0
    cfl: float = 0.0

    @property
    def final(self):
        return self.w[len(self.s) - 1]

    def w_s(self):
        """Centred s-derivative at levels 0..N (level -1 from the first step)."""
        n = len(self.s)
        ws = np.empty((n, self.w.shape[1]))
        ws[1:] = (self.w[2:n + 1] - self.w[0:n - 1]) / (2 * self.h)
        ws[0] = self._ws0
        return ws


class _Spectral:
    periodic = True

    def __init__(self, theta):
        self.theta = theta

    def L(self, w, c, n):
        wt = fourier_derivative(w, 1)
        return (fourier_derivative(c["a"][n] * wt, 1)
                + (-c["a_theta"][n] + c["c_t"][n]) * wt)

    def bc(self, w, n):
        return w


class _Sector:
    periodic = False

    def __init__(self, theta, left, right):
        self.theta = theta
        self.d = theta[1] - theta[0]
        self.left, self.right = left, right

    def L(self, w, c, n):
        a = c["a"][n]
        d = self.d
        out = np.zeros_like(w)
        am = 0.5 * (a[1:] + a[:-1])
        flux = am * (w[1:] - w[:-1]) / d
        out[1:-1] = (flux[1:] - flux[:-1]) / d
        wt = np.zeros_like(w)
        wt[1:-1] = (w[2:] - w[:-2]) / (2 * d)
        return out + (-c["a_theta"][n] + c["c_t"][n]) * wt

    def bc(self, w, n):
        w = w.copy()
        w[0], w[-1] = self.left[n], self.right[n]
        return w


def _leapfrog(space, c, w0, w1, h, n_levels, forcing):
    """Levels 0..n_levels-1 of w_ss = L w + c_s w_s + F (c_s semi-implicit)."""
    nth = len(w0)
    w = np.zeros((n_levels, nth))
    w[0] = space.bc(w0, 0)
    acc0 = space.L(w[0], c, 0) + c["c_s"][0] * w1 + forcing[0]
    w[1] = space.bc(w0 + h * w1 + 0.5 * h * h * acc0, 1)
    for n in range(1, n_levels - 1):
        cs = 0.5 * h * c["c_s"][n]
        rhs = 2 * w[n] - (1 + cs) * w[n - 1] + h * h * (space.L(w[n], c, n) + forcing[n])
        w[n + 1] = space.bc(rhs / (1 - cs), n + 1)
    return w


def _cfl(chart_coef, h, n_theta, periodic, d_theta, cfl):
    amax = float(np.sqrt(np.max(chart_coef["a"])))
    if periodic:
        M = n_theta // 2
        number = h * M * amax
    else:
        number = h * amax / d_theta
    if number > cfl:
        raise StabilityError(f"CFL number {number:.3g} exceeds {cfl}")
    return number


def _evolve(chart, space, w0, w1, b, steps, mode, ray_term, cfl, picard_tol, max_picard):
    if mode not in ("none", "local", "full"):
        raise ValueError("mode must be none, local or full")
    h = b / steps
    theta = space.theta
    levels = h * np.arange(steps + 2)
    c = chart.coefficients(levels, theta)
    if mode == "none":
        z = np.zeros_like(c["a"])
        c = dict(c, a_theta=z, c_s=z, c_t=z, m=z)
    number = _cfl(c, h, len(theta), space.periodic,
                  getattr(space, "d", 0.0), cfl)
    F = np.zeros_like(c["a"])
    w = _leapfrog(space, c, w0, w1, h, steps + 2, F)
    it, change = 0, 0.0
    if mode == "full":
        if ray_term is None:
            raise ValueError("mode 'full' needs a NonlocalTerm")
        to_nodes = _grid_to_nodes(levels[:steps + 1], theta, ray_term, space.periodic)
        from_nodes = ray_term.interp_rows(np.repeat(levels, len(theta)),
                                          np.tile(theta, len(levels)))
        for it in range(1, max_picard + 1):
            Rn = ray_term.apply(to_nodes @ w[:steps + 1].ravel())
            F = c["m"] * (from_nodes @ Rn.ravel()).reshape(c["a"].shape)
            w_new = _leapfrog(space, c, w0, w1, h, steps + 2, F)
            change = float(np.abs(w_new - w).max())
            w = w_new
            if change <= picard_tol * max(1.0, np.abs(w).max()):
                break
        else:
            raise RuntimeError(f"Picard loop did not converge (change {change:.3g})")
    ev = Evolution(levels[:steps + 1], theta, w, h, c, F, None, it, change, number)
    ev._ws0 = np.asarray(w1, float)
    return ev


def _grid_to_nodes(levels, theta, ray_term: NonlocalTerm, periodic: bool):
    """Interpolation from stepping-grid values to the ray_term node set."""
    Bs = _local_interp(levels, ray_term.s_nodes, 8)
    if periodic:
        Bt = fourier_interp_matrix(len(theta), ray_term.theta_nodes)
    else:
        Bt = _local_interp(theta, ray_term.theta_nodes, 8)
    return np.einsum("ik,jl->ijkl", Bs, Bt).reshape(Bs.shape[0] * Bt.shape[0], -1)


def evolve_cauchy(chart: HyperbolicChart, data: CauchyData, b: float, steps: int,
                  mode: str = "local", ray_term: NonlocalTerm | None = None,
                  cfl: float = 0.5, picard_tol: float = 1e-11,
                  max_picard: int = 40) -> Evolution:
    """Leapfrog in s, spectral in theta, on the full circle.

    ``mode`` selects Bt: "none" (pure wave part), "local" (connection
    terms) or "full" (adds the ray integrals; needs ``ray_term``).
    """
    n = len(data.w0)
    space = _Spectral(2 * np.pi * np.arange(n) / n)
    return _evolve(chart, space, data.w0, data.w1, b, steps, mode, ray_term,
                   cfl, picard_tol, max_picard)


def evolve_with_sides(chart: HyperbolicChart, w0, w1, h1, h2, theta0: float, b: float,
                      steps: int, n_theta: int = 41, mode: str = "local",
                      ray_term: NonlocalTerm | None = None, cfl: float = 0.5,
                      corner_tol: float = 1e-8, picard_tol: float = 1e-11,
                      max_picard: int = 40) -> Evolution:
    """Second-order finite differences on the sector 0 <= theta <= theta0
    with w(s, 0) = h1(s) and w(s, theta0) = h2(s)."""
    if not 0 < theta0 < 2 * np.pi:
        raise ValueError("theta0 must lie in (0, 2 pi)")
    theta = np.linspace(0.0, theta0, n_theta)
    v0 = np.asarray(w0(theta), float) * np.ones(n_theta)
    v1 = np.asarray(w1(theta), float) * np.ones(n_theta)
    gap = max(abs(float(h1(0.0)) - v0[0]), abs(float(h2(0.0)) - v0[-1]))
    if gap > corner_tol:
        raise CornerError(f"corner data mismatch {gap:.3g}")
    levels = (b / steps) * np.arange(steps + 2)
    left = np.asarray(h1(levels), float) * np.ones(len(levels))
    right = np.asarray(h2(levels), float) * np.ones(len(levels))
    space = _Sector(theta, left, right)
    ev = _evolve(chart, space, v0, v1, b, steps, mode, ray_term, cfl, picard_tol, max_picard)
    ev.sides = (left, right)
    return ev


# --------------------------------------------------- a posteriori checks

def pde_residual(chart: HyperbolicChart, ev: Evolution) -> float:
    """max |w_ss - (a w_theta)_theta - Bt w| with fourth-order s-differences.

    The leapfrog scheme is second order, so this measures its truncation
    error; it falls like step^2.
    """
    h, w, c = ev.h, ev.w, ev.coef
    n = len(ev.s)
    space = (_Spectral(ev.theta) if ev.sides is None
             else _Sector(ev.theta, *ev.sides))
    worst = 0.0
    for k in range(2, n - 1):
        wss = (-w[k + 2] + 16 * w[k + 1] - 30 * w[k] + 16 * w[k - 1] - w[k - 2]) / (12 * h * h)
        ws = (-w[k + 2] + 8 * w[k + 1] - 8 * w[k - 1] + w[k - 2]) / (12 * h)
        r = wss - space.L(w[k], c, k) - c["c_s"][k] * ws - ev.forcing[k]
        if ev.sides is not None:
            r = r[1:-1]
        worst = max(worst, float(np.abs(r).max()))
    return worst


def reverse(chart: HyperbolicChart, ev: Evolution):
    """Run the recurrence backwards from the last two levels.

    Returns the recovered (w(0), w_s(0)); with Bt suppressed or local the
    scheme is exactly reversible.
    """
    n = len(ev.s)
    space = (_Spectral(ev.theta) if ev.sides is None
             else _Sector(ev.theta, *ev.sides))
    h, c, F = ev.h, ev.coef, ev.forcing
    w_next, w_cur = ev.w[n], ev.w[n - 1]
    for k in range(n - 1, 0, -1):
        cs = 0.5 * h * c["c_s"][k]
        rhs = 2 * w_cur - (1 - cs) * w_next + h * h * (space.L(w_cur, c, k) + F[k])
        w_prev = space.bc(rhs / (1 + cs), k - 1)
        w_next, w_cur = w_cur, w_prev
    # one more backwards step to level -1 for the centred derivative
    cs = 0.5 * h * c["c_s"][0]
    rhs = 2 * w_cur - (1 - cs) * w_next + h * h * (space.L(w_cur, c, 0) + F[0])
    w_m1 = rhs / (1 + cs)
    return w_cur, (w_next - w_m1) / (2 * h)


def energy_norm(ev: Evolution) -> np.ndarray:
    """||(w, w_s)||_1 per level: mean^2 + (A w, w) + (w_s, w_s) on the circle."""
    ws = ev.w_s()
    out = np.empty(len(ev.s))
    for k in range(len(ev.s)):
        w = ev.w[k]
        if ev.sides is None:
            wt = fourier_derivative(w, 1)
            dth = 2 * np.pi / len(w)
            Aww = np.sum(ev.coef["a"][k] * wt * wt) * dth
            mean2 = (np.sum(w) * dth) ** 2 / (2 * np.pi)
            vv = np.sum(ws[k] ** 2) * dth
        else:
            d = ev.theta[1] - ev.theta[0]
            wt = np.diff(w) / d
            am = 0.5 * (ev.coef["a"][k][1:] + ev.coef["a"][k][:-1])
            Aww = np.sum(am * wt * wt) * d
            mean2 = np.trapezoid(w, ev.theta) ** 2 / (ev.theta[-1] - ev.theta[0])
            vv = np.trapezoid(ws[k] ** 2, ev.theta)
        out[k] = np.sqrt(mean2 + Aww + vv)
    return out


def growth_fit(ev: Evolution):
    """(C, omega) with ||U(s)|| <= C ||U(0)|| e^{omega s} on the levels.

    omega is the least-squares slope of log ||U||, C the smallest constant
    making the bound hold at every level.
    """
    e = energy_norm(ev)
    if e[0] == 0:
        return 1.0, 0.0
    y = np.log(e / e[0])
    omega = float(np.polyfit(ev.s, y, 1)[0])
    C = float(np.exp(np.max(y - omega * ev.s)))
    return C, omega


def constant_oracle(a0: float, m: int, s, theta):
    """cos(m theta) cos(sqrt(a0) m s), the solution of w_ss = a0 w_theta_theta."""
    s = np.asarray(s, float)[:, None]
    return np.cos(m * np.asarray(theta)[None, :]) * np.cos(np.sqrt(a0) * m * s)


def restrict_periodic(ev: Evolution, theta0: float):
    """Side data (h1, h2) and Cauchy data on [0, theta0] from a periodic run."""
    n = len(ev.s)
    F = fourier_interp_matrix(len(ev.theta), [0.0, theta0])
    sides = ev.w[:n] @ F.T
    h1 = CubicSpline(ev.s, sides[:, 0])
    h2 = CubicSpline(ev.s, sides[:, 1])
    w0 = lambda th: fourier_interp_matrix(len(ev.theta), th) @ ev.w[0]
    w1 = lambda th: fourier_interp_matrix(len(ev.theta), th) @ ev._ws0
    return w0, w1, h1, h2
