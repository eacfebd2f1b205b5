"""Analytic surface patches and their local differential geometry.

A chart is a sympy expression X(u, v) in R^3.  Partial derivatives up to
total order 5 are produced symbolically and compiled once per family.
Everything built from them (metric, normal, second fundamental form,
curvature and its covariant derivatives) is then evaluated with truncated
bivariate Taylor arithmetic, which keeps the higher jets of the Gaussian
curvature exact to rounding without symbolic blow-up.

Conventions: Pi_ij = -<X_ij, N>, so Pi(X, Y) = <D_X N, Y>.  The rotation
is QX = X x N, i.e. Q e1 = -e2 for any frame with e1 x e2 = N.
"""
from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

U, V = sp.symbols("u v", real=True)
MAX_ORDER = 5


# ------------------------------------------------------------ parsing

def parse_expr(text: str, names=("u", "v")) -> sp.Expr:
    """Parse a user expression; accepts theta/θ and shorthand like cos2θ."""
    text = text.replace("θ", "theta").replace("ϑ", "theta").replace("^", "**")
    text = re.sub(r"\b(sin|cos)(\d+)theta\b", r"\1(\2*theta)", text)
    text = re.sub(r"(?<![\w.])(\d+(?:\.\d*)?)(theta|pi)\b", r"\1*\2", text)
    local = {n: sp.Symbol(n, real=True) for n in names}
    local.update({"u": U, "v": V})
    return sp.sympify(text, locals=local)


# ---------------------------------------------------------- Taylor jets

class Jet:
    """Truncated Taylor series in (du, dv) at a batch of points.

    ``c[..., a, b]`` is the coefficient of du^a dv^b; entries with
    a + b > order are meaningless.
    """

    __slots__ = ("c", "order")

    def __init__(self, c, order: int):
        self.c = c
        self.order = order

    @classmethod
    def from_derivatives(cls, d, order: int):
        """``d[(a, b)]`` holds the partial derivative du^a dv^b."""
        any_val = np.asarray(next(iter(d.values())))
        c = np.zeros(any_val.shape + (order + 1, order + 1))
        for (a, b), val in d.items():
            if a + b <= order:
                c[..., a, b] = val / (math.factorial(a) * math.factorial(b))
        return cls(c, order)

    @classmethod
    def const(cls, value, like: "Jet"):
        c = np.zeros(np.shape(value) + like.c.shape[-2:])
        c[..., 0, 0] = value
        return cls(c, like.order)

    def value(self):
        return self.c[..., 0, 0]

    def deriv(self, a: int, b: int):
        if a + b > self.order:
            raise ValueError("derivative beyond jet order")
        return self.c[..., a, b] * math.factorial(a) * math.factorial(b)

    def comp(self, i):
        return Jet(self.c[..., i, :, :], self.order)

    def du(self):
        n = self.c.shape[-2]
        out = np.zeros_like(self.c)
        out[..., : n - 1, :] = self.c[..., 1:, :] * np.arange(1, n)[:, None]
        return Jet(out, self.order - 1)

    def dv(self):
        n = self.c.shape[-1]
        out = np.zeros_like(self.c)
        out[..., :, : n - 1] = self.c[..., :, 1:] * np.arange(1, n)[None, :]
        return Jet(out, self.order - 1)

    def d(self, i: int):
        return self.du() if i == 0 else self.dv()

    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.const(np.asarray(other, dtype=float), self)

    def __add__(self, other):
        other = self._coerce(other)
        return Jet(self.c + other.c, min(self.order, other.order))

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.order)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            return Jet(self.c * other[..., None, None], self.order)
        order = min(self.order, other.order)
        x, y = np.broadcast_arrays(self.c, other.c)
        out = np.zeros(x.shape)
        for a in range(order + 1):
            for b in range(order + 1 - a):
                out[..., a, b] = np.einsum(
                    "...ij,...ij->...",
                    x[..., : a + 1, : b + 1],
                    y[..., a::-1, b::-1][..., : a + 1, : b + 1],
                )
        return Jet(out, order)

    __rmul__ = __mul__

    def _series(self, coeffs):
        """sum_k coeffs[k] h^k with h = self - value (nilpotent)."""
        h = Jet(self.c.copy(), self.order)
        h.c[..., 0, 0] = 0.0
        out = Jet.const(coeffs[0], self)
        p = Jet.const(np.ones_like(self.value()), self)
        for k in range(1, self.order + 1):
            p = p * h
            out = out + p * coeffs[k]
        return out

    def reciprocal(self):
        a0 = self.value()
        coeffs = [(-1.0) ** k / a0 ** (k + 1) for k in range(self.order + 1)]
        return self._series(coeffs)

    def sqrt(self):
        a0 = self.value()
        coeffs = []
        for k in range(self.order + 1):
            binom = np.prod([0.5 - j for j in range(k)]) / math.factorial(k)
            coeffs.append(binom * a0 ** (0.5 - k))
        return self._series(coeffs)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other


def jdot(a: Jet, b: Jet) -> Jet:
    return a.comp(0) * b.comp(0) + a.comp(1) * b.comp(1) + a.comp(2) * b.comp(2)


def jcross(a: Jet, b: Jet):
    a0, a1, a2 = a.comp(0), a.comp(1), a.comp(2)
    b0, b1, b2 = b.comp(0), b.comp(1), b.comp(2)
    return jstack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])


def jstack(parts):
    order = min(p.order for p in parts)
    return Jet(np.stack(np.broadcast_arrays(*[p.c for p in parts]), axis=-3), order)


# ------------------------------------------------------------ compiling

def _multi_indices(order):
    return [(k - j, j) for k in range(order + 1) for j in range(k + 1)]


@functools.lru_cache(maxsize=None)
def _compile(expr_key: str, param_names: tuple, order: int):
    X = sp.Matrix(sp.sympify(expr_key, locals={"u": U, "v": V, **{
        n: sp.Symbol(n, real=True) for n in param_names}}))
    params = [sp.Symbol(n, real=True) for n in param_names]
    idx = _multi_indices(order)
    exprs = []
    for a, b in idx:
        d = X
        if a:
            d = d.diff(U, a)
        if b:
            d = d.diff(V, b)
        exprs.extend(list(d))
    fn = sp.lambdify((U, V, *params), exprs, modules="numpy", cse=True)
    return fn, idx


@functools.lru_cache(maxsize=None)
def _compile_geodesic(expr_key: str, param_names: tuple, module: str):
    """(u'', v'', kappa) as functions of (u, v, u', v', *params)."""
    X = sp.Matrix(sp.sympify(expr_key, locals={"u": U, "v": V, **{
        n: sp.Symbol(n, real=True) for n in param_names}}))
    params = [sp.Symbol(n, real=True) for n in param_names]
    P, Qv = sp.symbols("p q", real=True)
    Xu, Xv = X.diff(U), X.diff(V)
    Xuu, Xuv, Xvv = Xu.diff(U), Xu.diff(V), Xv.diff(V)
    E, F, G = Xu.dot(Xu), Xu.dot(Xv), Xv.dot(Xv)
    det = E * G - F ** 2
    acc = Xuu * P ** 2 + 2 * Xuv * P * Qv + Xvv * Qv ** 2
    au, av = acc.dot(Xu), acc.dot(Xv)
    n = Xu.cross(Xv)
    kappa = (Xuu.dot(n) * Xvv.dot(n) - Xuv.dot(n) ** 2) / det ** 2
    exprs = [-(G * au - F * av) / det, -(-F * au + E * av) / det, kappa]
    return sp.lambdify((U, V, P, Qv, *params), exprs, modules=module, cse=True)


# ---------------------------------------------------------- data types

@dataclass(frozen=True)
class ChartDomain:
    u: tuple = (-np.inf, np.inf)
    v: tuple = (-np.inf, np.inf)
    periodic: tuple = (False, False)
    period: tuple = (2 * np.pi, 2 * np.pi)
    disk: float | None = None

    def contains(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        ok = np.isfinite(u) & np.isfinite(v)
        if not self.periodic[0]:
            ok &= (u > self.u[0]) & (u < self.u[1])
        if not self.periodic[1]:
            ok &= (v > self.v[0]) & (v < self.v[1])
        if self.disk is not None:
            ok &= u * u + v * v < self.disk ** 2
        return ok

    def wrap(self, u, v):
        if self.periodic[0]:
            u = np.mod(u, self.period[0])
        if self.periodic[1]:
            v = np.mod(v, self.period[1])
        return u, v


@dataclass(frozen=True)
class SurfacePoint:
    uv: np.ndarray
    position: np.ndarray
    basis: np.ndarray  # rows d/du, d/dv


@dataclass(frozen=True)
class ShapeData:
    g: np.ndarray
    Pi: np.ndarray
    N: np.ndarray
    kappa: np.ndarray
    T0: np.ndarray


@dataclass(frozen=True)
class CurvatureJet:
    kappa: np.ndarray
    grad: np.ndarray  # ambient vector
    grad_frame: np.ndarray  # components in (e1, e2)
    hess_frame: np.ndarray  # 2x2 in (e1, e2)
    lap: np.ndarray
    grad_lap: np.ndarray  # ambient vector
    grad_lap_frame: np.ndarray


class ImmersionError(ValueError):
    pass


class RegimeError(ValueError):
    """The surface region is not in the curvature regime an operation needs."""


@dataclass
class LocalGeometry:
    """Pointwise geometry on a batch of chart points (coordinate components)."""
    uv: np.ndarray
    X: np.ndarray
    Xu: np.ndarray
    Xv: np.ndarray
    N: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    Pi: np.ndarray
    Gamma: np.ndarray  # Gamma[..., l, i, j]
    kappa: np.ndarray
    dkappa: np.ndarray  # partials k_u, k_v
    hess_kappa: np.ndarray  # covariant Hessian, coordinate components
    lap_kappa: np.ndarray
    dlap_kappa: np.ndarray  # partials of the Laplacian of kappa
    DPi: np.ndarray  # DPi[..., k, i, j] = (nabla_k Pi)_ij
    dN: np.ndarray  # dN[..., i, :] = partial_i N
    ddN: np.ndarray  # ddN[..., i, j, :]
    Xijk: np.ndarray = field(repr=False, default=None)

    def to_coords(self, y):
        """Tangential ambient vectors -> chart components."""
        rhs = np.stack([np.einsum("...k,...k->...", y, self.Xu),
                        np.einsum("...k,...k->...", y, self.Xv)], axis=-1)
        return np.einsum("...ij,...j->...i", self.ginv, rhs)

    def to_ambient(self, c):
        return c[..., 0, None] * self.Xu + c[..., 1, None] * self.Xv

    def frame(self):
        """(e1, e2) ambient with e1 = Xu/|Xu| and e2 = N x e1."""
        e1 = self.Xu / np.linalg.norm(self.Xu, axis=-1, keepdims=True)
        e2 = np.cross(self.N, e1)
        return e1, e2


class Surface:
    """A chart X(u, v) with parameters and a normal orientation."""

    def __init__(self, name, expr, params=None, normal_sign=1.0,
                 domain: ChartDomain | None = None, meta=None):
        self.name = name
        self.expr = sp.Matrix(expr)
        self.params = dict(params or {})
        self.normal_sign = float(normal_sign)
        self.domain = domain or ChartDomain()
        self.meta = dict(meta or {})
        free = {s.name for s in self.expr.free_symbols} - {"u", "v"}
        missing = free - set(self.params)
        if missing:
            raise ValueError(f"unbound symbols in chart: {sorted(missing)}")
        self._pnames = tuple(sorted(self.params))
        self._text = str([sp.sstr(e) for e in self.expr]).replace("'", "")

    def __repr__(self):
        return f"Surface({self.name!r}, {self.params})"

    # -- raw derivatives
    def derivatives(self, u, v, order: int = 2):
        """Dict (a, b) -> array (..., 3) of du^a dv^b X."""
        if order > MAX_ORDER:
            raise ValueError("derivatives available to order 5")
        fn, idx = _compile(self._text, self._pnames,
                           2 if order <= 2 else MAX_ORDER)
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        u, v = np.broadcast_arrays(u, v)
        vals = fn(u, v, *[self.params[n] for n in self._pnames])
        out = {}
        for k, (a, b) in enumerate(idx):
            if a + b > order:
                continue
            comps = [np.broadcast_to(np.asarray(vals[3 * k + i], dtype=float), u.shape)
                     for i in range(3)]
            out[(a, b)] = np.stack(comps, axis=-1)
        return out

    def geodesic_function(self, module: str = "numpy"):
        """Compiled (u, v, u', v') -> (u'', v'', kappa)."""
        fn = _compile_geodesic(self._text, self._pnames, module)
        pv = [self.params[n] for n in self._pnames]
        return lambda u, v, p, q: fn(u, v, p, q, *pv)

    def position(self, u, v):
        return self.derivatives(u, v, 0)[(0, 0)]

    def point(self, u, v) -> SurfacePoint:
        d = self.derivatives(u, v, 1)
        return SurfacePoint(np.array([u, v], dtype=float), d[(0, 0)],
                            np.stack([d[(1, 0)], d[(0, 1)]]))

    # -- cheap geometry for geodesics
    def first_order(self, u, v):
        """(X, Xu, Xv, N, g, ginv, Gamma) from second derivatives only."""
        d = self.derivatives(u, v, 2)
        Xu, Xv = d[(1, 0)], d[(0, 1)]
        g = _metric(Xu, Xv)
        det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2
        if np.any(det <= 0):
            raise ImmersionError(f"{self.name}: degenerate metric")
        ginv = _inv2(g, det)
        n = np.cross(Xu, Xv)
        N = self.normal_sign * n / np.sqrt(det)[..., None]
        Xij = np.stack([np.stack([d[(2, 0)], d[(1, 1)]], -2),
                        np.stack([d[(1, 1)], d[(0, 2)]], -2)], -3)
        proj = np.stack([np.einsum("...ijk,...k->...ij", Xij, Xu),
                         np.einsum("...ijk,...k->...ij", Xij, Xv)], -3)
        Gamma = np.einsum("...lm,...mij->...lij", ginv, proj)
        return d[(0, 0)], Xu, Xv, N, g, ginv, Gamma

    def christoffel(self, u, v):
        return self.first_order(u, v)[-1]

    # -- full jet-based geometry
    def local(self, u, v) -> LocalGeometry:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        u, v = np.broadcast_arrays(u, v)
        d = self.derivatives(u, v, MAX_ORDER)
        XJ = Jet.from_derivatives(d, MAX_ORDER)  # c: (..., 3, 6, 6)
        Xd = [XJ.du(), XJ.dv()]
        gJ = [[jdot(Xd[i], Xd[j]) for j in range(2)] for i in range(2)]
        nJ = jcross(Xd[0], Xd[1])
        det = jdot(nJ, nJ)
        if np.any(det.value() <= 0):
            raise ImmersionError(f"{self.name}: degenerate metric")
        inv_det = det.reciprocal()
        ginvJ = [[gJ[1][1] * inv_det, -gJ[0][1] * inv_det],
                 [-gJ[1][0] * inv_det, gJ[0][0] * inv_det]]
        scale = det.sqrt().reciprocal() * self.normal_sign
        NJ = jstack([nJ.comp(i) * scale for i in range(3)])
        Xdd = [[Xd[i].d(j) for j in range(2)] for i in range(2)]
        PiJ = [[-jdot(Xdd[i][j], NJ) for j in range(2)] for i in range(2)]
        kJ = (PiJ[0][0] * PiJ[1][1] - PiJ[0][1] * PiJ[1][0]) * inv_det
        proj = [[[jdot(Xdd[i][j], Xd[m]) for j in range(2)] for i in range(2)]
                for m in range(2)]
        GamJ = [[[ginvJ[l][0] * proj[0][i][j] + ginvJ[l][1] * proj[1][i][j]
                  for j in range(2)] for i in range(2)] for l in range(2)]
        dk = [kJ.d(i) for i in range(2)]
        hessJ = [[dk[i].d(j) - (GamJ[0][i][j] * dk[0] + GamJ[1][i][j] * dk[1])
                  for j in range(2)] for i in range(2)]
        lapJ = sum(ginvJ[i][j] * hessJ[i][j] for i in range(2) for j in range(2))

        val = lambda J: J.value()
        Pi = np.array([[val(PiJ[i][j]) for j in range(2)] for i in range(2)])
        Gam = np.array([[[val(GamJ[l][i][j]) for j in range(2)] for i in range(2)]
                        for l in range(2)])
        dPi = np.array([[[val(PiJ[i][j].d(k)) for j in range(2)] for i in range(2)]
                        for k in range(2)])
        # move the small index axes to the end
        Pi = np.moveaxis(Pi, (0, 1), (-2, -1))
        Gam = np.moveaxis(Gam, (0, 1, 2), (-3, -2, -1))
        dPi = np.moveaxis(dPi, (0, 1, 2), (-3, -2, -1))
        DPi = (dPi - np.einsum("...lki,...lj->...kij", Gam, Pi)
               - np.einsum("...lkj,...il->...kij", Gam, Pi))
        g = np.moveaxis(np.array([[val(gJ[i][j]) for j in range(2)]
                                  for i in range(2)]), (0, 1), (-2, -1))
        ginv = np.moveaxis(np.array([[val(ginvJ[i][j]) for j in range(2)]
                                     for i in range(2)]), (0, 1), (-2, -1))
        dN = np.stack([NJ.d(i).value() for i in range(2)], -2)
        ddN = np.stack([np.stack([NJ.d(i).d(j).value() for j in range(2)], -2)
                        for i in range(2)], -3)
        Xijk = np.stack([np.stack([np.stack([Xdd[i][j].d(k).value() for k in range(2)], -2)
                                   for j in range(2)], -3) for i in range(2)], -4)
        return LocalGeometry(
            uv=np.stack([u, v], -1), X=val(XJ), Xu=val(Xd[0]), Xv=val(Xd[1]),
            N=val(NJ), g=g, ginv=ginv, Pi=Pi, Gamma=Gam, kappa=val(kJ),
            dkappa=np.stack([val(x) for x in dk], -1),
            hess_kappa=np.moveaxis(np.array([[val(hessJ[i][j]) for j in range(2)]
                                             for i in range(2)]), (0, 1), (-2, -1)),
            lap_kappa=val(lapJ),
            dlap_kappa=np.stack([val(lapJ.d(i)) for i in range(2)], -1),
            DPi=DPi, dN=dN, ddN=ddN, Xijk=Xijk)


class AmbientField:
    """An ambient vector field given along a chart, V(u, v), symbolically."""

    def __init__(self, expr, params=None, name="field"):
        self.expr = sp.Matrix(expr)
        self.params = dict(params or {})
        self.name = name
        self._pnames = tuple(sorted(self.params))
        self._text = str([sp.sstr(e) for e in self.expr]).replace("'", "")

    def derivatives(self, u, v, order: int = 2):
        """Dict (a, b) -> array (..., 3), as for surfaces."""
        return Surface.derivatives(self, u, v, order)

    def __call__(self, u, v):
        return self.derivatives(u, v, 0)[(0, 0)]


def _metric(Xu, Xv):
    guu = np.einsum("...k,...k->...", Xu, Xu)
    guv = np.einsum("...k,...k->...", Xu, Xv)
    gvv = np.einsum("...k,...k->...", Xv, Xv)
    return np.stack([np.stack([guu, guv], -1), np.stack([guv, gvv], -1)], -2)


def _inv2(g, det=None):
    if det is None:
        det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
    inv = np.empty_like(g)
    inv[..., 0, 0] = g[..., 1, 1]
    inv[..., 1, 1] = g[..., 0, 0]
    inv[..., 0, 1] = -g[..., 0, 1]
    inv[..., 1, 0] = -g[..., 1, 0]
    return inv / det[..., None, None]


# ------------------------------------------------------------- operations

def shape_at(surface: Surface, u, v) -> ShapeData:
    geo = surface.local(u, v)
    T0 = np.einsum("...ij,...jk,...kl->...il", geo.Pi, geo.ginv, geo.Pi)
    return ShapeData(g=geo.g, Pi=geo.Pi, N=geo.N, kappa=geo.kappa, T0=T0)


def frame_matrix(geo: LocalGeometry):
    """Rows are chart components of e1, e2."""
    e1, e2 = geo.frame()
    return np.stack([geo.to_coords(e1), geo.to_coords(e2)], -2)


def curvature_jet(surface: Surface, u, v) -> CurvatureJet:
    geo = surface.local(u, v)
    E = frame_matrix(geo)
    grad_c = np.einsum("...ij,...j->...i", geo.ginv, geo.dkappa)
    glap_c = np.einsum("...ij,...j->...i", geo.ginv, geo.dlap_kappa)
    return CurvatureJet(
        kappa=geo.kappa,
        grad=geo.to_ambient(grad_c),
        grad_frame=np.einsum("...ai,...i->...a", E, geo.dkappa),
        hess_frame=np.einsum("...ai,...ij,...bj->...ab", E, geo.hess_kappa, E),
        lap=geo.lap_kappa,
        grad_lap=geo.to_ambient(glap_c),
        grad_lap_frame=np.einsum("...ai,...i->...a", E, geo.dlap_kappa),
    )


def rotate_Q(x, N):
    """QX = X x N on tangent vectors (ambient components)."""
    return np.cross(x, N)


# ---------------------------------------------------------------- catalog

def _num(x, name):
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"{name} must be finite")
    return x


def sphere(r: float = 1.0) -> Surface:
    r = _num(r, "r")
    if r <= 0:
        raise ValueError("sphere radius must be positive")
    R = sp.Symbol("r", real=True)
    d = 1 + U ** 2 + V ** 2
    X = [2 * R * U / d, 2 * R * V / d, R * (1 - U ** 2 - V ** 2) / d]
    return Surface("sphere", X, {"r": r}, 1.0, ChartDomain(),
                   meta={"kappa": 1.0 / r ** 2, "pole": (0.0, 0.0)})


def cylinder(a: float = 1.0, b: float = 2.0) -> Surface:
    a, b = _num(a, "a"), _num(b, "b")
    if a <= 0 or b <= 0:
        raise ValueError("cylinder radius and half-length must be positive")
    A = sp.Symbol("a", real=True)
    X = [A * sp.cos(U), A * sp.sin(U), V]
    dom = ChartDomain(u=(0.0, 2 * np.pi), v=(-b, b), periodic=(True, False))
    return Surface("cylinder", X, {"a": a}, 1.0, dom, meta={"half_length": b})


def cone(a: float = 1.0, z_min: float = 0.5, z_max: float = 2.0) -> Surface:
    a = _num(a, "a")
    if a <= 0 or not 0 < z_min < z_max:
        raise ValueError("cone needs a > 0 and 0 < z_min < z_max")
    A = sp.Symbol("a", real=True)
    X = [V * A * sp.cos(U), V * A * sp.sin(U), V]
    dom = ChartDomain(u=(0.0, 2 * np.pi), v=(z_min, z_max), periodic=(True, False))
    return Surface("cone", X, {"a": a}, 1.0, dom)


def plane() -> Surface:
    return Surface("plane", [U, V, sp.Integer(0)], {}, 1.0, ChartDomain())


def graph(h, bounds=None, params=None) -> Surface:
    """Graph (x1, x2, h(x1, x2)) with N = eta (grad h, -1)."""
    if isinstance(h, str):
        h = parse_expr(h, names=("x1", "x2", *(params or {})))
    x1, x2 = sp.Symbol("x1", real=True), sp.Symbol("x2", real=True)
    h = sp.sympify(h).subs({x1: U, x2: V})
    dom = ChartDomain() if bounds is None else ChartDomain(u=tuple(bounds[0]),
                                                           v=tuple(bounds[1]))
    return Surface("graph", [U, V, h], params or {}, -1.0, dom, meta={"h": h})


def revolution_graph(profile, bounds=None) -> Surface:
    """Graph of h(|x|) for a profile given in the variable s."""
    if isinstance(profile, str):
        profile = parse_expr(profile, names=("s",))
    s = sp.Symbol("s", real=True)
    h = sp.sympify(profile).subs(s, sp.sqrt(U ** 2 + V ** 2))
    surf = graph(h, bounds)
    surf.name = "revolution"
    surf.meta["profile"] = sp.sympify(profile)
    return surf


def polar_revolution(profile, r_min: float = 0.0, r_max: float = np.inf,
                     name="polar_revolution") -> Surface:
    """(r cos t, r sin t, h(r)) in the chart (r, t)."""
    if isinstance(profile, str):
        profile = parse_expr(profile, names=("r",))
    r = sp.Symbol("r", real=True)
    h = sp.sympify(profile).subs(r, U)
    X = [U * sp.cos(V), U * sp.sin(V), h]
    dom = ChartDomain(u=(r_min, r_max), v=(0.0, 2 * np.pi), periodic=(False, True))
    return Surface(name, X, {}, -1.0, dom, meta={"profile": sp.sympify(profile)})


def log_revolution(r_min: float = 0.0, r_max: float = np.inf) -> Surface:
    return polar_revolution("log(1 + r**2)", r_min, r_max, name="log_revolution")


def hyperboloid(r_max: float = np.inf) -> Surface:
    return polar_revolution("sqrt(r**2 - 1)", 1.0, r_max, name="hyperboloid")


CATALOG = {
    "sphere": sphere,
    "cylinder": cylinder,
    "cone": cone,
    "plane": plane,
    "graph": graph,
    "revolution": revolution_graph,
    "polar_revolution": polar_revolution,
    "log_revolution": log_revolution,
    "hyperboloid": hyperboloid,
}


def catalog(name: str, *params, **kw) -> Surface:
    try:
        maker = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown surface {name!r}; known: {sorted(CATALOG)}") from None
    return maker(*params, **kw)
