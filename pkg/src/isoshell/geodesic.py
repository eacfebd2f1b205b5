"""Geodesic polar coordinates about a base point.

Rays are shot in the chart, all at once, together with the Jacobi factor f
(f'' + kappa f = 0, f(0)=0, f'(0)=1) and the companion solution Phi0
(Phi0(0)=1, Phi0'(0)=0).  Because their Wronskian is 1, the two-point
kernel is Phi(t, s) = Phi0(s) f(t) - f(s) Phi0(t).

A PolarGrid stores node data as arrays of shape (n_theta, n_t).  Radial
calculus runs along diameters: ray j and ray j + n_theta/2 form one line
through the origin, so quantities that are smooth on the surface become
smooth functions of a signed arc length.  Each quantity has a parity p:
on the opposite ray its line value picks up (-1)^p.  Scalars and
components with an even number of frame slots are even, the rest odd.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from .numerics import (LineOps, Tolerances, barycentric_matrix, fourier_derivative,
                       fourier_interp_matrix, rk4_step)
from .surface import Surface

KINDS = ("uniform", "chebyshev")


@dataclass(frozen=True)
class GridSpec:
    n_theta: int = 32
    t_max: float = 1.0
    n_t: int = 20
    kind: str = "uniform"
    ode_step: float = 1e-3

    def __post_init__(self):
        if self.n_theta < 4 or self.n_theta % 2:
            raise ValueError("n_theta must be even and >= 4")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.n_t < 2:
            raise ValueError("n_t must be >= 2")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not self.ode_step > 0:
            raise ValueError("ode_step must be positive")

    def t_nodes(self):
        if self.kind == "uniform":
            return np.linspace(0.0, self.t_max, self.n_t + 1)
        M = 2 * self.n_t - 1
        x = self.t_max * np.cos(np.arange(M + 1) * np.pi / M)
        return np.sort(x[x > 0])


class RayExit(RuntimeError):
    pass


# ------------------------------------------------------------ shooting

def _rhs_factory(surface: Surface):
    fn = surface.geodesic_function("numpy")

    def rhs(_t, y):
        udd, vdd, kappa = fn(y[:, 0], y[:, 1], y[:, 2], y[:, 3])
        out = np.empty_like(y)
        out[:, 0], out[:, 1] = y[:, 2], y[:, 3]
        out[:, 2], out[:, 3] = udd, vdd
        out[:, 4], out[:, 5] = y[:, 5], -kappa * y[:, 4]
        out[:, 6], out[:, 7] = y[:, 7], -kappa * y[:, 6]
        return out
    return rhs


def _shoot_scalar(surface: Surface, y0, t_nodes, step):
    """Single-ray version of ``shoot`` on plain floats (much lower overhead)."""
    fn = surface.geodesic_function("math")
    dom = surface.domain

    def rhs(y):
        udd, vdd, k = fn(y[0], y[1], y[2], y[3])
        return (y[2], y[3], udd, vdd, y[5], -k * y[4], y[7], -k * y[6])

    def axpy(a, x, y):
        return tuple(yi + a * xi for xi, yi in zip(x, y))

    y = tuple(float(c) for c in y0)
    out = np.empty((len(t_nodes), 8))
    valid = np.zeros(len(t_nodes), dtype=bool)
    alive, exit_t, t = True, np.inf, 0.0
    for k, tn in enumerate(t_nodes):
        span = tn - t
        if span > 0 and alive:
            nsub = max(1, int(np.ceil(span / step - 1e-9)))
            h = span / nsub
            for _ in range(nsub):
                try:
                    k1 = rhs(y)
                    k2 = rhs(axpy(0.5 * h, k1, y))
                    k3 = rhs(axpy(0.5 * h, k2, y))
                    k4 = rhs(axpy(h, k3, y))
                    yn = tuple(yi + h / 6.0 * (a + 2 * b + 2 * c + d)
                               for yi, a, b, c, d in zip(y, k1, k2, k3, k4))
                    ok = (all(np.isfinite(yn)) and yn[4] > 0
                          and bool(dom.contains(yn[0], yn[1])))
                except (ValueError, ZeroDivisionError, OverflowError):
                    ok = False
                if not ok:
                    alive, exit_t = False, t
                    break
                y = yn
                t += h
        if alive:
            t = float(tn)
        out[k] = y
        valid[k] = alive
    return out, valid, exit_t


def initial_directions(surface: Surface, origin, thetas):
    """Chart velocities of sigma(theta) = cos e1 + sin e2 at the origin."""
    X, Xu, Xv, N, g, ginv, _ = surface.first_order(origin[0], origin[1])
    e1 = Xu / np.linalg.norm(Xu)
    e2 = np.cross(N, e1)
    thetas = np.asarray(thetas, dtype=float)
    sig = np.cos(thetas)[:, None] * e1 + np.sin(thetas)[:, None] * e2
    rhs = np.stack([sig @ Xu, sig @ Xv], -1)
    return sig, rhs @ ginv.T, (e1, e2, N)


def shoot(surface: Surface, origin, thetas, t_nodes, step):
    """Integrate all rays; returns (states (n, nt, 8), valid mask, exit_t)."""
    t_nodes = np.asarray(t_nodes, dtype=float)
    if np.any(np.diff(t_nodes) <= 0) or t_nodes[0] < 0:
        raise ValueError("t_nodes must be increasing and nonnegative")
    _, q0, _ = initial_directions(surface, origin, thetas)
    n = len(q0)
    y = np.zeros((n, 8))
    y[:, 0], y[:, 1] = origin
    y[:, 2:4] = q0
    y[:, 5] = 1.0
    y[:, 6] = 1.0
    if n == 1:
        out, valid, exit_t = _shoot_scalar(surface, y[0], t_nodes, step)
        return out[None], valid[None], np.array([exit_t])
    rhs = _rhs_factory(surface)
    out = np.empty((n, len(t_nodes), 8))
    valid = np.zeros((n, len(t_nodes)), dtype=bool)
    active = np.ones(n, dtype=bool)
    exit_t = np.full(n, np.inf)
    t = 0.0
    with np.errstate(all="ignore"):
        for k, tn in enumerate(t_nodes):
            span = tn - t
            if span > 0:
                nsub = max(1, int(np.ceil(span / step - 1e-9)))
                h = span / nsub
                for _ in range(nsub):
                    if not active.any():
                        break
                    ya = y[active]
                    yn = rk4_step(rhs, t, ya, h)
                    ok = (np.all(np.isfinite(yn), axis=1)
                          & surface.domain.contains(yn[:, 0], yn[:, 1])
                          & (yn[:, 4] > 0))
                    idx = np.flatnonzero(active)
                    y[idx[ok]] = yn[ok]
                    exit_t[idx[~ok]] = t
                    active[idx[~ok]] = False
                    t += h
                t = float(tn)
            out[:, k] = y
            valid[:, k] = active
    return out, valid, exit_t


# ------------------------------------------------------------- the grid

@dataclass
class GeodesicRay:
    theta: float
    t: np.ndarray
    uv: np.ndarray
    X: np.ndarray
    T: np.ndarray
    E: np.ndarray
    N: np.ndarray
    f: np.ndarray
    ft: np.ndarray
    Phi0: np.ndarray
    Phi0t: np.ndarray
    kappa: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    Pi11: np.ndarray
    Pi12: np.ndarray
    Pi22: np.ndarray
    DPi: np.ndarray  # (nt, 4): Pi111, Pi112, Pi122, Pi222
    speed: np.ndarray
    valid: np.ndarray
    exit_t: float

    def value_at(self, q, s, width: int = 8):
        """Local polynomial interpolation of ray samples at arc length s."""
        n = len(self.t)
        width = min(width, n)
        p = int(np.searchsorted(self.t, s))
        lo = min(max(p - width // 2, 0), n - width)
        idx = np.arange(lo, lo + width)
        w = barycentric_matrix(self.t[idx], [s])[0]
        return np.tensordot(w, np.asarray(q)[idx], axes=(0, 0))


class PolarGrid:
    """Geodesic polar grid about ``origin`` (chart coordinates)."""

    def __init__(self, surface: Surface, origin, spec: GridSpec):
        self.surface = surface
        self.origin = np.asarray(origin, dtype=float)
        self.spec = spec
        nth = spec.n_theta
        self.theta = 2 * np.pi * np.arange(nth) / nth
        self.t = spec.t_nodes()
        self.has_origin = spec.kind == "uniform"
        states, self.valid, self.exit_t = shoot(surface, self.origin, self.theta,
                                                self.t, spec.ode_step)
        self._fill(states)
        h = nth // 2
        if spec.kind == "chebyshev":
            self.line = LineOps.chebyshev(2 * spec.n_t - 1, spec.t_max)
        else:
            self.line = LineOps.uniform(np.concatenate([-self.t[:0:-1], self.t]))
        self._h = h

    # -- node data
    def _fill(self, states):
        surf = self.surface
        nth, nt = len(self.theta), len(self.t)
        u, v = states[..., 0], states[..., 1]
        geo = surf.local(u.ravel(), v.ravel())
        shp = (nth, nt)
        rs = lambda a: a.reshape(shp + a.shape[1:])
        self.uv = np.stack([u, v], -1)
        self.X = rs(geo.X)
        self.N = rs(geo.N)
        Xu, Xv = rs(geo.Xu), rs(geo.Xv)
        Tc = states[..., 2:4].copy()
        sig, q0, (e1, e2, N0) = initial_directions(surf, self.origin, self.theta)
        self.e1, self.e2 = e1, e2
        T = Tc[..., 0, None] * Xu + Tc[..., 1, None] * Xv
        self.speed = np.linalg.norm(T, axis=-1)
        T /= self.speed[..., None]
        Tc /= self.speed[..., None]
        E = np.cross(self.N, T)
        self.T, self.E = T, E
        self.sigma = sig
        ginv = rs(geo.ginv)
        proj = np.stack([np.einsum("...k,...k->...", E, Xu),
                         np.einsum("...k,...k->...", E, Xv)], -1)
        Ec = np.einsum("...ij,...j->...i", ginv, proj)
        self.Tc, self.Ec = Tc, Ec
        self.f, self.ft = states[..., 4], states[..., 5]
        self.Phi0, self.Phi0t = states[..., 6], states[..., 7]
        Pi = rs(geo.Pi)
        bil = lambda A, a, b: np.einsum("...i,...ij,...j->...", a, A, b)
        self.Pi11, self.Pi12, self.Pi22 = bil(Pi, Tc, Tc), bil(Pi, Tc, Ec), bil(Pi, Ec, Ec)
        DPi = rs(geo.DPi)
        tri = lambda a, b, c: np.einsum("...kij,...k,...i,...j->...", DPi, a, b, c)
        self.Pi111 = tri(Tc, Tc, Tc)
        self.Pi112 = tri(Tc, Tc, Ec)
        self.Pi122 = tri(Tc, Ec, Ec)
        self.Pi222 = tri(Ec, Ec, Ec)
        self.kappa = rs(geo.kappa)
        dk = rs(geo.dkappa)
        self.k1 = np.einsum("...i,...i->...", dk, Tc)
        self.k2 = np.einsum("...i,...i->...", dk, Ec)
        self.geo = geo
        self.Pi_chart = Pi

    @property
    def n_theta(self):
        return len(self.theta)

    @property
    def shape(self):
        return (len(self.theta), len(self.t))

    @property
    def complete(self):
        return bool(self.valid.all())

    def trPi(self):
        return self.Pi11 + self.Pi22

    def refined(self, factor: int = 2, radial: bool = False):
        spec = replace(self.spec, n_theta=self.spec.n_theta * factor,
                       n_t=self.spec.n_t * (factor if radial else 1))
        return PolarGrid(self.surface, self.origin, spec)

    def ray(self, j: int) -> GeodesicRay:
        return GeodesicRay(
            theta=float(self.theta[j]), t=self.t, uv=self.uv[j], X=self.X[j],
            T=self.T[j], E=self.E[j], N=self.N[j], f=self.f[j], ft=self.ft[j],
            Phi0=self.Phi0[j], Phi0t=self.Phi0t[j], kappa=self.kappa[j],
            k1=self.k1[j], k2=self.k2[j], Pi11=self.Pi11[j], Pi12=self.Pi12[j],
            Pi22=self.Pi22[j],
            DPi=np.stack([self.Pi111[j], self.Pi112[j], self.Pi122[j], self.Pi222[j]], -1),
            speed=self.speed[j], valid=self.valid[j], exit_t=float(self.exit_t[j]))

    # -- diameter lines
    def to_lines(self, q, p: int = 0):
        q = np.asarray(q, dtype=float)
        h = self._h
        sign = -1.0 if p % 2 else 1.0
        pos = q[..., :h, :]
        neg = sign * q[..., h:, ::-1]
        if self.has_origin:
            neg = neg[..., :-1]
        return np.concatenate([neg, pos], axis=-1)

    def from_lines(self, lines, p: int = 0):
        nt = len(self.t)
        sign = -1.0 if p % 2 else 1.0
        pos = lines[..., -nt:]
        neg = sign * lines[..., :nt][..., ::-1]
        return np.concatenate([pos, neg], axis=-2)

    def dt(self, q, p: int = 0):
        return self.from_lines(self.line.diff(self.to_lines(q, p)), p + 1)

    def cumint(self, q, p: int = 0):
        """int_0^t q dt' along every ray."""
        return self.from_lines(self.line.cumint(self.to_lines(q, p)), p + 1)

    def dtheta(self, q):
        return fourier_derivative(np.asarray(q, dtype=float), 1, axis=-2)

    def ray_origin_values(self, q, p: int = 0):
        z = self.line.at_zero(self.to_lines(q, p))
        sign = -1.0 if p % 2 else 1.0
        return np.concatenate([z, sign * z], axis=-1)

    def origin_value(self, q):
        """Value at the origin of an even quantity (averaged over lines)."""
        return self.line.at_zero(self.to_lines(q, 0)).mean(axis=-1)

    def integrate(self, q, p: int = 0):
        """Area integral of q over the geodesic disk."""
        ray_int = self.cumint(np.asarray(q) * self.f, p + 1)[..., -1]
        return ray_int.sum(axis=-1) * 2 * np.pi / self.n_theta

    def boundary_integral(self, q):
        """int q ds over the boundary circle t = t_max."""
        return (np.asarray(q)[..., -1] * self.f[:, -1]).sum(-1) * 2 * np.pi / self.n_theta

    def _div_f(self, q, q_limit):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = q / self.f
        if self.has_origin:
            out[..., 0] = q_limit[..., 0]
        return out

    def rotate_quarter(self, q):
        """q(t, theta + pi/2) by spectral interpolation."""
        n = self.n_theta
        if n % 4 == 0:
            return np.roll(q, -n // 4, axis=-2)
        F = fourier_interp_matrix(n, self.theta + np.pi / 2)
        return np.einsum("kj,...jt->...kt", F, q)

    def frame_derivatives(self, w):
        """(w1, w2, w11, w12, w22) = first and second covariant derivatives
        of a scalar in the frame (T, E)."""
        w = np.asarray(w, dtype=float)
        w1 = self.dt(w, 0)
        wth = self.dtheta(w)
        w2 = self._div_f(wth, self.dt(wth, 0) if self.has_origin else wth)
        w11 = self.dt(w1, 1)
        w12 = self.dt(w2, 1)
        w22 = self._div_f(self.dtheta(w2) + self.ft * w1, self.rotate_quarter(w11)
                          if self.has_origin else w1)
        return w1, w2, w11, w12, w22

    # -- evaluation off the grid
    def interpolate(self, q, p, t, theta):
        """Values of a grid quantity at arbitrary (t, theta) pairs."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        lines = self.to_lines(q, p)
        Mp = self.line.interp_matrix(t)
        Mn = self.line.interp_matrix(-t)
        sign = -1.0 if p % 2 else 1.0
        vp = np.einsum("...hl,kl->...hk", lines, Mp)
        vn = sign * np.einsum("...hl,kl->...hk", lines, Mn)
        rays = np.concatenate([vp, vn], axis=-2)  # (..., n_theta, K)
        F = fourier_interp_matrix(self.n_theta, theta)
        return np.einsum("kj,...jk->...k", F, rays)

    def locate(self, targets, iters: int = 30, tol: float = 1e-11):
        """(t, theta) of ambient points by Newton on the polar map."""
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        flat = self.X.reshape(-1, 3)
        live = np.flatnonzero(np.isfinite(flat).all(axis=-1))
        _, idx = cKDTree(flat[live]).query(targets)
        j, k = np.unravel_index(live[idx], self.shape)
        t = np.maximum(self.t[k], 0.5 * self.t[-1] / len(self.t))
        th = self.theta[j].copy()
        fE = self.E * self.f[..., None]
        even = np.moveaxis(np.concatenate([self.X, fE], axis=-1), -1, 0)
        odd = np.moveaxis(self.T, -1, 0)
        for _ in range(iters):
            ve = self.interpolate(even, 0, t, th).T
            X, Th = ve[:, :3], ve[:, 3:]
            Tt = self.interpolate(odd, 1, t, th).T
            r = targets - X
            J = np.stack([Tt, Th], -1)
            # interpolation through truncated rays gives NaN: freeze those points
            lost = ~(np.isfinite(J).all(axis=(1, 2)) & np.isfinite(r).all(axis=-1))
            J[lost] = 0.0
            step = np.einsum("nij,nj->ni", np.linalg.pinv(J), np.where(lost[:, None], 0.0, r))
            t = t + step[:, 0]
            th = th + step[:, 1]
            flip = t < 0
            t = np.where(flip, -t, t)
            th = np.where(flip, th + np.pi, th)
            if np.max(np.abs(step)) < tol:
                break
        with np.errstate(invalid="ignore"):
            ok = (t <= self.t[-1] * (1 + 1e-9)) & (np.linalg.norm(r, axis=-1) < 1e-7)
        return t, np.mod(th, 2 * np.pi), ok

    # -- crossings of distinct rays (cut points)
    def crossings(self, t_min: float | None = None, tol: float = 1e-9):
        """Pairs of rays meeting at a common point: list of (i, ti, j, tj)."""
        dt_max = float(np.max(np.diff(self.t)))
        if t_min is None:
            t_min = 10 * dt_max
        sel = self.valid & (self.t[None, :] >= t_min)
        ii, kk = np.nonzero(sel)
        if len(ii) < 2:
            return []
        pts = self.X[ii, kk]
        tree = cKDTree(pts)
        pairs = tree.query_pairs(1.5 * dt_max, output_type="ndarray")
        found = {}
        rays = {}
        for a, b in pairs:
            ra, rb = ii[a], ii[b]
            if ra == rb:
                continue
            key0 = (min(ra, rb), max(ra, rb))
            if ra > rb:
                a, b = b, a
                ra, rb = rb, ra
            for r in (ra, rb):
                if r not in rays:
                    rays[r] = self.ray(r)
            ta, tb = self.t[kk[a]], self.t[kk[b]]
            A, B = rays[ra], rays[rb]
            lim_a = self.t[self.valid[ra]][-1]
            lim_b = self.t[self.valid[rb]][-1]
            for _ in range(30):
                Fa = A.value_at(A.X, ta) - B.value_at(B.X, tb)
                J = np.stack([A.value_at(A.T, ta), -B.value_at(B.T, tb)], -1)
                d = np.linalg.lstsq(J, -Fa, rcond=None)[0]
                ta, tb = ta + d[0], tb + d[1]
                if abs(ta) > 2 * lim_a + 1 or abs(tb) > 2 * lim_b + 1:
                    break
                if np.max(np.abs(d)) < 1e-13:
                    break
            resid = np.linalg.norm(A.value_at(A.X, ta) - B.value_at(B.X, tb))
            if resid < tol and t_min <= ta <= lim_a and t_min <= tb <= lim_b:
                key = key0 + (round(ta, 6),)
                found.setdefault(key, (ra, ta, rb, tb))
        return sorted(found.values())

    # -- export
    def rows(self):
        for j, th in enumerate(self.theta):
            for k, t in enumerate(self.t):
                if not self.valid[j, k]:
                    continue
                x, y, z = self.X[j, k]
                yield (th, t, x, y, z, self.f[j, k], self.ft[j, k], self.kappa[j, k])

    def to_csv(self, path, meta=None):
        with open(path, "w", newline="") as fh:
            for key, val in (meta or {}).items():
                fh.write(f"# {key}={val}\n")
            wr = csv.writer(fh)
            wr.writerow(["theta", "t", "x", "y", "z", "f", "f_t", "kappa"])
            for row in self.rows():
                wr.writerow([format(x, ".17g") for x in row])


def build_polar_grid(surface: Surface, origin, n_theta: int, t_max: float,
                     tol: Tolerances | None = None, n_t: int = 20,
                     kind: str = "uniform") -> PolarGrid:
    tol = tol or Tolerances()
    return PolarGrid(surface, origin, GridSpec(n_theta, t_max, n_t, kind, tol.ode_step))


def shoot_ray(surface: Surface, origin, theta: float, t_max: float,
              tol: Tolerances | None = None, n_t: int | None = None) -> GeodesicRay:
    """A single ray, sampled on a uniform grid of n_t intervals."""
    tol = tol or Tolerances()
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    if n_t is None:
        n_t = max(2, int(np.ceil(t_max / max(tol.ode_step, 0.01))))
    t = np.linspace(0.0, t_max, n_t + 1)
    states, valid, exit_t = shoot(surface, np.asarray(origin, float), [theta], t,
                                  tol.ode_step)
    # reuse the node bookkeeping of a grid with this single ray
    g = PolarGrid.__new__(PolarGrid)
    g.surface, g.origin = surface, np.asarray(origin, float)
    g.theta, g.t, g.valid, g.exit_t = np.array([theta]), t, valid, exit_t
    g._fill(states)
    return g.ray(0)


def phi_kernels(ray: GeodesicRay, s: float):
    """(Phi0, Phi(., s)) sampled at the ray nodes."""
    if not 0 <= s <= ray.t[-1]:
        raise ValueError("s outside the ray")
    f_s = ray.value_at(ray.f, s)
    p_s = ray.value_at(ray.Phi0, s)
    return ray.Phi0, p_s * ray.f - f_s * ray.Phi0


def wronskian(ray: GeodesicRay):
    return ray.Phi0 * ray.ft - ray.Phi0t * ray.f
