"""Parabolic regime: kappa = 0 with Pi != 0.

The kernel of the shape operator is a unit field E whose integral curves
are straight rulings.  Along them the characteristic equation reduces to
Pi(QE, QE) d^2 w / dt^2 = 0, so admissible normal components are
w = w0(s) + w1(s) t in ruling coordinates (t along E, s transversal).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geodesic import PolarGrid
from .isometry import characteristic_lhs
from .numerics import fourier_derivative, integrate_ode
from .surface import RegimeError, Surface


class PlanarError(RegimeError):
    """Pi vanishes: the surface is flat in space, there are no rulings."""


def _ruling_directions(surface: Surface, uv, ref=None, kappa_tol=1e-8):
    """Unit null directions of Pi on a batch of chart points (..., 2).

    Returns chart components, ambient vectors and the local geometry.  The
    sign makes the ambient vector agree with ``ref`` (default: largest
    component positive).
    """
    uv = np.asarray(uv, dtype=float)
    geo = surface.local(uv[..., 0], uv[..., 1])
    if np.max(np.abs(geo.kappa)) > kappa_tol:
        raise RegimeError(f"kappa = {np.max(np.abs(geo.kappa)):.3g} is not zero")
    S = geo.ginv @ geo.Pi
    lam, vec = np.linalg.eig(S)
    lam, vec = lam.real, vec.real
    if np.min(np.max(np.abs(lam), axis=-1)) < 1e-10:
        raise PlanarError("second fundamental form vanishes")
    pick = np.argmin(np.abs(lam), axis=-1)
    c = np.take_along_axis(vec, pick[..., None, None], axis=-1)[..., 0]
    c = c / np.sqrt(np.einsum("...i,...ij,...j->...", c, geo.g, c))[..., None]
    amb = geo.to_ambient(c)
    if ref is None:
        k = np.argmax(np.abs(amb), axis=-1)
        ref = np.sign(np.take_along_axis(amb, k[..., None], -1)) * np.eye(3)[k]
    flip = np.sign(np.einsum("...k,...k->...", amb, ref))
    flip = np.where(flip == 0, 1.0, flip)[..., None]
    return c * flip, amb * flip, geo


def _ruling_direction(surface: Surface, uv, ref=None, kappa_tol=1e-8):
    c, amb, geo = _ruling_directions(surface, np.asarray(uv, float)[None], ref, kappa_tol)
    return c[0], amb[0], geo


@dataclass
class ParabolicChart:
    surface: Surface
    seed: np.ndarray
    s: np.ndarray
    t: np.ndarray
    uv: np.ndarray           # (n_s, n_t, 2)
    X: np.ndarray            # (n_s, n_t, 3)
    E: np.ndarray            # ambient unit ruling direction
    QE: np.ndarray
    Pi_QE: np.ndarray        # Pi(QE, QE)
    dN_E: np.ndarray         # |D_E N|

    def check(self, tol: float = 1e-8):
        k0 = int(np.argmin(np.abs(self.t)))
        straight = self.X - (self.X[:, k0:k0 + 1]
                             + self.t[None, :, None] * self.E[:, k0:k0 + 1])
        return {"dN_E": float(self.dN_E.max()),
                "unit_E": float(np.abs(np.linalg.norm(self.E, axis=-1) - 1).max()),
                "min_Pi_QE": float(np.abs(self.Pi_QE).min()),
                "straightness": float(np.abs(straight).max()),
                "ok": bool(self.dN_E.max() <= tol and np.abs(self.Pi_QE).min() > tol)}


def _trace(rhs, y0, nodes, step):
    """Integrate from node 0 in both directions (nodes symmetric about 0)."""
    pos = nodes[nodes >= 0]
    fw = integrate_ode(lambda s, y: rhs(y, 1.0), y0, pos, step)
    bw = integrate_ode(lambda s, y: rhs(y, -1.0), y0, pos, step)
    return np.concatenate([bw[::-1][:-1], fw])


def detect_ruling(surface: Surface, seed, s_half: float = 0.5, t_half: float = 0.5,
                  n_s: int = 9, n_t: int = 11, step: float = 0.02) -> ParabolicChart:
    """Ruling coordinates (s, t) about ``seed``.

    s runs along the integral curve of QE through the seed, t along the
    rulings from that curve.  Node counts must be odd so that 0 is a node.
    """
    if n_s % 2 == 0 or n_t % 2 == 0:
        raise ValueError("n_s and n_t must be odd")
    seed = np.asarray(seed, dtype=float)
    _, E0, _ = _ruling_direction(surface, seed)

    def along_QE(y, sign):
        c, amb, geo = _ruling_directions(surface, y, E0)
        return sign * geo.to_coords(np.cross(amb, geo.N))

    def along_E(y, sign):
        return sign * _ruling_directions(surface, y, E0)[0]

    s = np.linspace(-s_half, s_half, n_s)
    t = np.linspace(-t_half, t_half, n_t)
    starts = _trace(along_QE, seed[None], s, step)[:, 0]          # (n_s, 2)
    uv = np.moveaxis(_trace(along_E, starts, t, step), 0, 1)       # (n_s, n_t, 2)
    Ec, E, geo = _ruling_directions(surface, uv, E0)
    QE = np.cross(E, geo.N)
    QEc = geo.to_coords(QE)
    Pi_QE = np.einsum("...i,...ij,...j->...", QEc, geo.Pi, QEc)
    dN_E = np.linalg.norm(np.einsum("...i,...ik->...k", Ec, geo.dN), axis=-1)
    return ParabolicChart(surface, seed, s, t, uv, geo.X, E, QE, Pi_QE, dN_E)


def parabolic_isometry(chart: ParabolicChart, w0, w1):
    """w(t, s) = w0(s) + w1(s) t on the chart nodes."""
    s = chart.s[:, None]
    return np.asarray(w0(s), float) + np.asarray(w1(s), float) * chart.t[None, :]


def verify_linear_in_t(chart, w) -> float:
    """max |second difference along t| / dt^2 (uniform t, last axis).

    ``chart`` is a ParabolicChart or the array of t samples.
    """
    t = np.asarray(chart.t if isinstance(chart, ParabolicChart) else chart, dtype=float)
    w = np.asarray(w, dtype=float)
    h = t[1] - t[0]
    d2 = w[..., 2:] - 2 * w[..., 1:-1] + w[..., :-2]
    return float(np.abs(d2).max() / h ** 2)


# ---------------------------------------------------------- cylinders

@dataclass
class CylinderIsometry:
    theta: np.ndarray
    z: np.ndarray
    V: np.ndarray            # (n_theta, n_z, 3)
    w: np.ndarray            # normal component
    residual: float


def cylinder_explicit_V(w0, w1, z, n_theta: int = 64) -> CylinderIsometry:
    """V = (R(w0, w0'), w1) + z (-R(w1', w1''), 0) on the unit cylinder.

    w0, w1 are periodic callables (or samples on a uniform grid of n_theta
    angles); derivatives are spectral.
    """
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    s0 = np.asarray(w0(th) if callable(w0) else w0, float) * np.ones(n_theta)
    s1 = np.asarray(w1(th) if callable(w1) else w1, float) * np.ones(n_theta)
    n_theta = len(s0)
    d0 = fourier_derivative(s0, 1)
    d1, dd1 = fourier_derivative(s1, 1), fourier_derivative(s1, 2)
    z = np.asarray(z, dtype=float)
    c, s = np.cos(th), np.sin(th)
    a0 = np.stack([-s * s0 - c * d0, c * s0 - s * d0], -1)
    a1 = np.stack([-s * d1 - c * dd1, c * d1 - s * dd1], -1)
    V = np.zeros((n_theta, len(z), 3))
    V[..., :2] = a0[:, None, :] - z[None, :, None] * a1[:, None, :]
    V[..., 2] = s1[:, None]
    N = np.stack([c, s, np.zeros_like(c)], -1)
    w = np.einsum("tzk,tk->tz", V, N)
    # isometry residual from spectral theta-derivatives and exact z-derivatives
    Vth = fourier_derivative(V, 1, axis=0)
    Vz = np.zeros_like(V)
    Vz[..., :2] = -a1[:, None, :]
    Xth = np.stack([-s, c, np.zeros_like(c)], -1)[:, None, :]
    Xz = np.array([0.0, 0.0, 1.0])
    dot = lambda a, b: np.einsum("...k,...k->...", a, b)
    res = max(np.abs(dot(Vth, Xth)).max(), np.abs(dot(Vz, Xz)).max(),
              np.abs(dot(Vth, Xz) + dot(Vz, Xth)).max())
    return CylinderIsometry(th, z, V, w, float(res))


# ------------------------------------- characteristic equation on a disk

def characteristic_matrix(grid: PolarGrid):
    n = grid.f.size
    basis = np.eye(n).reshape((n,) + grid.shape)
    return characteristic_lhs(grid, basis).reshape(n, n).T


def solve_characteristic_lstsq(grid: PolarGrid, psi_values):
    """Least-squares solution of the characteristic equation with w = psi
    on the boundary circle (one value per ray)."""
    A = characteristic_matrix(grid)
    nth, nt = grid.shape
    bnd = np.ravel_multi_index((np.arange(nth), np.full(nth, nt - 1)), grid.shape)
    A[bnd] = 0.0
    A[bnd, bnd] = 1.0
    rhs = np.zeros(grid.f.size)
    rhs[bnd] = psi_values
    w = np.linalg.lstsq(A, rhs, rcond=None)[0]
    return w.reshape(grid.shape)


def ruling_second_difference(grid: PolarGrid, w, surface_points, n_samples: int = 9,
                             frac: float = 0.7):
    """Second differences of w along rulings through the given chart points.

    For each start point the ruling is sampled symmetrically within the
    disk of radius ``frac * t_max``; w is interpolated from the polar grid.
    """
    surf = grid.surface
    o = grid.surface.local(grid.origin[0], grid.origin[1]).X[0]
    out = 0.0
    rmax = frac * grid.t[-1]
    for uv in surface_points:
        _, E, geo = _ruling_direction(surf, np.asarray(uv, float))
        X0 = geo.X[0]
        # chord of the ball |x - o| < rmax along the ruling
        b = E @ (X0 - o)
        c = (X0 - o) @ (X0 - o) - rmax ** 2
        disc = b * b - c
        if disc <= 0:
            continue
        lo, hi = -b - np.sqrt(disc), -b + np.sqrt(disc)
        ts = np.linspace(lo, hi, n_samples)
        pts = X0[None, :] + ts[:, None] * E[None, :]
        t, th, ok = grid.locate(pts)
        if not ok.all():
            continue
        vals = grid.interpolate(w, 0, t, th)
        out = max(out, verify_linear_in_t(ts, vals))
    return out


@dataclass
class DiskCharacterization:
    grid: PolarGrid
    w: np.ndarray
    residual: float          # max second difference along sampled rulings
    boundary_error: float


def characterize_on_disk(surface: Surface, origin, t_max: float, psi,
                         n_theta: int = 48, n_t: int = 20,
                         frac: float = 0.7) -> DiskCharacterization:
    """Solve the characteristic equation on a geodesic disk and test the
    solution for linearity along rulings.

    ``psi`` is a callable of chart coordinates (u, v) giving the boundary
    data; it is sampled at the last node of every ray.
    """
    from .geodesic import build_polar_grid
    grid = build_polar_grid(surface, origin, n_theta, t_max, n_t=n_t, kind="chebyshev")
    data = np.asarray(psi(grid.uv[:, -1, 0], grid.uv[:, -1, 1]), float)
    w = solve_characteristic_lstsq(grid, data)
    pts = [grid.uv[j, k] for j in range(0, n_theta, 3) for k in (n_t // 4, n_t // 2)]
    res = ruling_second_difference(grid, w, pts, frac=frac)
    return DiskCharacterization(grid, w, res, float(np.abs(w[:, -1] - data).max()))
