"""Killing fields on geodesic polar grids.

A tangent field is stored by its frame components W = phi T + vphi E.
Along a ray the Killing equation forces phi to be constant and vphi to
solve the Jacobi equation, so three numbers (W at the origin and the
rotation rate a) determine a candidate; whether it really is Killing on
the whole region is decided by the angular equations and, for regions
that wrap around, by single-valuedness where rays meet again.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geodesic import PolarGrid
from .surface import Surface, curvature_jet


class InconclusiveError(RuntimeError):
    pass


class ConstantCurvatureError(ValueError):
    pass


class ObstructionError(ValueError):
    pass


@dataclass(frozen=True)
class KillingIC:
    W_o: tuple = (0.0, 0.0)  # components in (e1, e2) at the origin
    a: float = 0.0


@dataclass
class FrameVectorField:
    grid: PolarGrid
    phi: np.ndarray
    vphi: np.ndarray

    def ambient(self):
        g = self.grid
        return self.phi[..., None] * g.T + self.vphi[..., None] * g.E

    def __add__(self, other):
        return FrameVectorField(self.grid, self.phi + other.phi, self.vphi + other.vphi)

    def scaled(self, c):
        return FrameVectorField(self.grid, c * self.phi, c * self.vphi)


def killing_from_ic(grid: PolarGrid, ic: KillingIC) -> FrameVectorField:
    th = grid.theta[:, None]
    W1, W2 = ic.W_o
    phi = (W1 * np.cos(th) + W2 * np.sin(th)) * np.ones_like(grid.f)
    vphi0 = -W1 * np.sin(th) + W2 * np.cos(th)
    vphi = vphi0 * grid.Phi0 + ic.a * grid.f
    return FrameVectorField(grid, phi, vphi)


def sym_dw(field: FrameVectorField):
    """Components (TT, TE, EE) of the symmetric part of DW at every node."""
    g = field.grid
    phi_t = g.dt(field.phi, 1)
    vphi_t = g.dt(field.vphi, 1)
    phi_th = g.dtheta(field.phi)
    vphi_th = g.dtheta(field.vphi)
    with np.errstate(divide="ignore", invalid="ignore"):
        te = 0.5 * (vphi_t + (phi_th - g.ft * field.vphi) / g.f)
        ee = (vphi_th + g.ft * field.phi) / g.f
    return phi_t, te, ee


def interior_mask(grid: PolarGrid):
    return grid.valid & (grid.t[None, :] > 0)


def killing_residual(surface: Surface, field: FrameVectorField) -> float:
    m = interior_mask(field.grid)
    return float(max(np.abs(c[m]).max() for c in sym_dw(field)))


def lemma_residual(field: FrameVectorField) -> float:
    """max |<grad kappa, W>| over the grid."""
    g = field.grid
    return float(np.abs(g.k1 * field.phi + g.k2 * field.vphi)[g.valid].max())


def lemma_hessian_residual(field: FrameVectorField) -> float:
    """max |D^2 kappa(grad kappa, W)| over the grid."""
    g = field.grid
    geo = g.geo
    W = field.ambient().reshape(-1, 3)
    Wc = geo.to_coords(W)
    gk = np.einsum("nij,nj->ni", geo.ginv, geo.dkappa)
    val = np.einsum("ni,nij,nj->n", gk, geo.hess_kappa, Wc).reshape(g.shape)
    return float(np.abs(val[g.valid]).max())


# ------------------------------------------------------------ dimension

BASIS = (KillingIC((1.0, 0.0), 0.0), KillingIC((0.0, 1.0), 0.0), KillingIC((0.0, 0.0), 1.0))


@dataclass
class DimensionResult:
    dim: int
    singular_values: np.ndarray
    threshold: float
    n_crossings: int
    refined_dim: int | None = None


def obstruction_matrix(grid: PolarGrid, wraps: bool = False):
    """(M, F, n_crossings): obstruction rows and field samples per basis IC."""
    fields = [killing_from_ic(grid, ic) for ic in BASIS]
    m = interior_mask(grid)
    cols, samples = [], []
    crossings = grid.crossings() if wraps else []
    rays = {}
    for fld in fields:
        rows = [c[m] for c in sym_dw(fld)]
        if crossings:
            amb = fld.ambient()
            for i, ti, j, tj in crossings:
                for r in (i, j):
                    if r not in rays:
                        rays[r] = grid.ray(r)
                wi = rays[i].value_at(amb[i], ti)
                wj = rays[j].value_at(amb[j], tj)
                rows.append(wi - wj)
        cols.append(np.concatenate([np.ravel(r) for r in rows]))
        samples.append(np.concatenate([fld.phi[grid.valid], fld.vphi[grid.valid]]))
    return np.stack(cols, 1), np.stack(samples, 1), len(crossings)


def _dimension_once(grid, tol, wraps):
    M, F, ncross = obstruction_matrix(grid, wraps)
    s = np.linalg.svd(M, compute_uv=False)
    thr = tol * np.linalg.norm(F, 2)
    return DimensionResult(int(3 - np.sum(s > thr)), s, thr, ncross)


def killing_dimension(grid: PolarGrid, tol: float = 1e-6, wraps: bool = False,
                      check_refinement: bool = True) -> DimensionResult:
    """Dimension of the Killing algebra on the grid region.

    Raises InconclusiveError when the answer changes on doubling n_theta.
    """
    if not grid.complete:
        raise ValueError("grid has truncated rays; reduce t_max to stay in the domain")
    res = _dimension_once(grid, tol, wraps)
    if check_refinement:
        fine = _dimension_once(grid.refined(2), tol, wraps)
        res.refined_dim = fine.dim
        if fine.dim != res.dim:
            raise InconclusiveError(
                f"dimension {res.dim} at n_theta={grid.n_theta} but {fine.dim} after refinement")
    return res


# ---------------------------------------------- non-constant curvature

@dataclass
class Obstructions:
    c1: float
    c2: float
    c1_rel: float
    c2_rel: float
    n_used: int
    n_skipped: int


def nonconstant_obstructions(surface: Surface, uv, grad_eps: float = 1e-8) -> Obstructions:
    uv = np.atleast_2d(np.asarray(uv, dtype=float))
    cj = curvature_jet(surface, uv[:, 0], uv[:, 1])
    g = cj.grad_frame
    gn = np.linalg.norm(g, axis=-1)
    use = gn > grad_eps
    if not use.any():
        raise ConstantCurvatureError("grad kappa vanishes at every sample point")
    g, H, L = g[use], cj.hess_frame[use], cj.grad_lap_frame[use]
    Qg = np.stack([g[:, 1], -g[:, 0]], -1)
    e1 = np.abs(np.einsum("ni,nij,nj->n", g, H, Qg))
    e2 = np.abs(np.einsum("ni,ni->n", Qg, L))
    s1 = np.max(gn[use] ** 2 * np.linalg.norm(H, axis=(-2, -1)))
    s2 = np.max(gn[use] * np.linalg.norm(L, axis=-1))
    return Obstructions(float(e1.max()), float(e2.max()),
                        float(e1.max() / s1) if s1 > 0 else 0.0,
                        float(e2.max() / s2) if s2 > 0 else 0.0,
                        int(use.sum()), int((~use).sum()))


@dataclass
class CandidateResult:
    field: FrameVectorField
    h0: np.ndarray
    residual: float
    path_defect: float
    obstructions: Obstructions


def _h_gradient_factor(grid: PolarGrid):
    """X with grad h = X grad kappa, at every node."""
    geo = grid.geo
    gk = np.einsum("nij,nj->ni", geo.ginv, geo.dkappa)
    n2 = np.einsum("ni,ni->n", gk, geo.dkappa)
    hkk = np.einsum("ni,nij,nj->n", gk, geo.hess_kappa, gk)
    return ((n2 * geo.lap_kappa - 2 * hkk) / n2 ** 2).reshape(grid.shape), n2.reshape(grid.shape)


def killing_candidate_nonconstant(grid: PolarGrid, tol: float = 1e-6,
                                  grad_eps: float = 1e-8,
                                  grad_rel: float = 1e-2) -> CandidateResult:
    """The field e^{h0} Q grad kappa with h0(origin) = 0, on the grid region.

    A region where |grad kappa| dips below ``grad_rel`` times its maximum is
    treated as containing a critical point of kappa and rejected.
    """
    surf = grid.surface
    uv = grid.uv[grid.valid]
    obs = nonconstant_obstructions(surf, uv, grad_eps)
    gn = np.hypot(grid.k1, grid.k2)[grid.valid]
    if obs.n_skipped or gn.min() < grad_rel * gn.max():
        raise ObstructionError("grad kappa vanishes inside the region")
    if obs.c1_rel > tol or obs.c2_rel > tol:
        raise ObstructionError(
            f"curvature obstructions not satisfied (c1={obs.c1:.3g}, c2={obs.c2:.3g})")
    X, n2 = _h_gradient_factor(grid)
    h0 = grid.cumint(X * grid.k1, 1)
    # second path: along the ray theta_0 = 0, then around the circle t = const
    dh_arc = X * grid.k2 * grid.f
    spec = np.fft.rfft(dh_arc, axis=0)
    n = grid.n_theta
    k = np.fft.rfftfreq(n, 1.0 / n)
    closed = np.abs(spec[0]).max() / n
    anti = np.zeros_like(spec)
    anti[1:] = spec[1:] / (1j * k[1:, None])
    if n % 2 == 0:
        anti[-1] = 0.0
    prim = np.fft.irfft(anti, n=n, axis=0)
    h_alt = h0[0][None, :] + prim - prim[0][None, :]
    defect = float(max(np.abs(h_alt - h0).max(), closed))
    e = np.exp(h0)
    fld = FrameVectorField(grid, e * grid.k2, -e * grid.k1)
    return CandidateResult(fld, h0, killing_residual(surf, fld), defect, obs)


# --------------------------------------------------- Hodge Laplacian

def hodge_laplacian(surface: Surface, field_fn, uv, h: float = 5e-3):
    """(dd* + d*d) of the 1-form dual to a tangent field, by chart differences.

    ``field_fn`` maps chart points (n, 2) to ambient vectors (n, 3).
    Returns the result as ambient vectors together with W itself.
    """
    uv = np.atleast_2d(np.asarray(uv, dtype=float))
    offs = np.array([(i, j) for i in range(-2, 3) for j in range(-2, 3)], float) * h
    pts = (uv[:, None, :] + offs[None]).reshape(-1, 2)
    _, Xu, Xv, _, g, ginv, _ = surface.first_order(pts[:, 0], pts[:, 1])
    W = field_fn(pts)
    alpha = np.stack([np.einsum("nk,nk->n", W, Xu), np.einsum("nk,nk->n", W, Xv)], -1)
    detg = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] ** 2
    sg = np.sqrt(detg)
    Wc = np.einsum("nij,nj->ni", ginv, alpha)
    shp = (len(uv), 5, 5)
    A = alpha.reshape(shp + (2,))
    S = sg.reshape(shp)
    Vc = (sg[:, None] * Wc).reshape(shp + (2,))

    def du(F):
        return (F[:, 2:, 1:-1] - F[:, :-2, 1:-1]) / (2 * h)

    def dv(F):
        return (F[:, 1:-1, 2:] - F[:, 1:-1, :-2]) / (2 * h)

    # inner 3x3 block: curl c and codifferential delta
    c = (du(A[..., 1]) - dv(A[..., 0])) / S[:, 1:-1, 1:-1]
    delta = -(du(Vc[..., 0]) + dv(Vc[..., 1])) / S[:, 1:-1, 1:-1]
    cu = (c[:, 2, 1] - c[:, 0, 1]) / (2 * h)
    cv = (c[:, 1, 2] - c[:, 1, 0]) / (2 * h)
    du_delta = (delta[:, 2, 1] - delta[:, 0, 1]) / (2 * h)
    dv_delta = (delta[:, 1, 2] - delta[:, 1, 0]) / (2 * h)
    gi = ginv.reshape(shp + (2, 2))[:, 2, 2]
    s0 = S[:, 2, 2]
    dc_up = np.einsum("nij,nj->ni", gi, np.stack([cu, cv], -1))
    lap = np.stack([du_delta + s0 * dc_up[:, 1], dv_delta - s0 * dc_up[:, 0]], -1)
    lap_c = np.einsum("nij,nj->ni", gi, lap)
    Xu0 = Xu.reshape(shp + (3,))[:, 2, 2]
    Xv0 = Xv.reshape(shp + (3,))[:, 2, 2]
    amb = lap_c[:, 0, None] * Xu0 + lap_c[:, 1, None] * Xv0
    return amb, W.reshape(shp + (3,))[:, 2, 2]
