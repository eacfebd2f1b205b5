"""Command-line front end.

Every command resolves to a task in ``TASKS``.  A task takes a RunConfig
and returns an Outcome: tables (written as CSV), a summary of scalars and
residual gates.  The writer adds a manifest with the inputs, tolerances,
package versions and the gate results.  Exit codes:

    0  all gates pass
    1  a residual gate failed
    2  invalid regime, surface or configuration
    3  solver error
"""
from __future__ import annotations

import hashlib
import json
import os
import platform
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import click
import numpy as np

from . import __version__

OUTPUT_ENV = "ISOSHELL_OUTPUT_DIR"
DEFAULT_OUTPUT = "isoshell-output"

EXIT_OK, EXIT_GATE, EXIT_REGIME, EXIT_SOLVER = 0, 1, 2, 3
REGIMES = ("auto", "elliptic", "parabolic", "hyperbolic")


class ConfigError(ValueError):
    pass


class RegimeMismatch(ValueError):
    pass


# ---------------------------------------------------------------- config

@dataclass
class RunConfig:
    task: str = "surface-info"
    surface: str = "sphere"
    regime: str = "auto"
    origin: tuple | None = None
    n_theta: int = 32
    n_t: int = 16
    t_max: float = 0.5
    ode_step: float = 1e-3
    tol: float = 1e-3
    output_dir: str | None = None
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise RegimeMismatch(f"unknown regime {self.regime!r}; use one of {REGIMES}")
        if self.n_theta < 4 or self.n_theta % 2:
            raise ConfigError("n_theta must be even and >= 4")
        if self.n_t < 2 or not self.t_max > 0 or not self.ode_step > 0 or not self.tol > 0:
            raise ConfigError("grid sizes, t_max, ode_step and tol must be positive")

    @classmethod
    def from_pairs(cls, pairs: dict, base: "RunConfig | None" = None) -> "RunConfig":
        """Known keys set fields (with type coercion); the rest go to params."""
        known = {f.name: f for f in fields(cls)}
        base = base or cls()
        upd, params = {}, dict(base.params)
        for key, raw in pairs.items():
            key = key.replace("-", "_")
            if key not in known or key == "params":
                params[key] = raw
                continue
            upd[key] = _coerce(key, raw)
        return replace(base, params=params, **upd)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        return cls.from_pairs(read_pairs(Path(path).read_text()))

    def get(self, key, default=None, kind=None):
        """Task parameter; defaults are recorded so the manifest shows them."""
        if default is not None:
            self.params.setdefault(key, default)
        val = self.params.get(key, default)
        if val is None or kind is None:
            return val
        try:
            return kind(val)
        except (TypeError, ValueError):
            raise ConfigError(f"parameter {key}={val!r} is not a valid {kind.__name__}") from None


def _coerce(key, raw):
    if raw is None:
        return None
    if key == "origin":
        if isinstance(raw, str):
            raw = raw.strip("()[] ").split(",")
        vals = tuple(float(x) for x in raw)
        if len(vals) != 2:
            raise ConfigError("origin needs two chart coordinates u,v")
        return vals
    kinds = {"n_theta": int, "n_t": int, "seed": int, "t_max": float,
             "ode_step": float, "tol": float}
    try:
        return kinds.get(key, str)(raw)
    except ValueError:
        raise ConfigError(f"{key}={raw!r} is not valid") from None


def read_pairs(text: str) -> dict:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_assignments(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


# --------------------------------------------------------------- surfaces

def build_surface(spec: str):
    """``name`` or ``name:key=value,key=value`` from the surface catalog."""
    from .surface import catalog

    name, _, rest = spec.partition(":")
    kw = {}
    for item in filter(None, rest.split(",")):
        if "=" not in item:
            raise ConfigError(f"surface parameter {item!r} is not key=value")
        k, v = item.split("=", 1)
        try:
            kw[k.strip()] = float(v)
        except ValueError:
            kw[k.strip()] = v.strip()
    try:
        return catalog(name.strip(), **kw)
    except KeyError as e:
        raise ConfigError(str(e.args[0])) from None
    except TypeError as e:
        raise ConfigError(f"bad parameters for {name}: {e}") from None


def default_origin(surface):
    d = surface.domain
    if bool(d.contains(0.0, 0.0)):
        return (0.0, 0.0)

    def mid(iv, periodic):
        lo, hi = iv
        if periodic:
            return 0.0
        if np.isfinite(lo) and np.isfinite(hi):
            return 0.5 * (lo + hi)
        return lo + 0.5 if np.isfinite(lo) else (hi - 0.5 if np.isfinite(hi) else 0.0)

    return (mid(d.u, d.periodic[0]), mid(d.v, d.periodic[1]))


def _grid(cfg: RunConfig, surface=None, kind="chebyshev"):
    from .geodesic import GridSpec, PolarGrid

    surface = surface or build_surface(cfg.surface)
    origin = cfg.origin or default_origin(surface)
    return PolarGrid(surface, origin, GridSpec(cfg.n_theta, cfg.t_max, cfg.n_t, kind,
                                               cfg.ode_step))


def classify(surface, origin, t_max, kappa_tol=1e-8):
    """Regime of the geodesic disk about ``origin``: kappa range, the
    definiteness of Pi and the regime name ("mixed" when kappa changes sign)."""
    from .geodesic import GridSpec, PolarGrid

    g = PolarGrid(surface, origin, GridSpec(16, t_max, 8, "uniform", 1e-2))
    if not g.complete:
        raise ConfigError("sample disk leaves the chart; reduce t_max or move the origin")
    k = g.kappa[g.valid]
    pi_max = float(np.abs(np.stack([g.Pi11, g.Pi12, g.Pi22]))[:, g.valid].max())
    kmin, kmax = float(k.min()), float(k.max())
    if kmin > kappa_tol:
        regime, defin = "elliptic", "definite"
    elif kmax < -kappa_tol:
        regime, defin = "hyperbolic", "indefinite"
    elif max(abs(kmin), abs(kmax)) <= kappa_tol:
        regime, defin = ("parabolic", "semidefinite") if pi_max > kappa_tol else ("planar", "zero")
    else:
        regime, defin = "mixed", "changes type"
    return {"kappa_min": kmin, "kappa_max": kmax, "pi_max": pi_max,
            "pi_definiteness": defin, "regime": regime}


def require_regime(cfg: RunConfig, wanted: str, surface=None):
    """Check the configured and the detected regime against what a task needs."""
    if cfg.regime not in ("auto", wanted):
        raise RegimeMismatch(f"task needs the {wanted} regime, config asks for {cfg.regime}")
    surface = surface or build_surface(cfg.surface)
    info = classify(surface, cfg.origin or default_origin(surface), cfg.t_max)
    if info["regime"] != wanted:
        raise RegimeMismatch(f"surface {cfg.surface} is {info['regime']} near the origin, "
                             f"task needs {wanted}")
    return surface, info


# ---------------------------------------------------------------- outcome

@dataclass
class Table:
    name: str
    header: list
    rows: np.ndarray


@dataclass
class Outcome:
    summary: dict = field(default_factory=dict)
    gates: dict = field(default_factory=dict)      # name -> (value, limit)
    tables: list = field(default_factory=list)
    headline: str | None = None

    def gate(self, name, value, limit):
        self.gates[name] = (float(value), float(limit))

    @property
    def passed(self):
        return all(np.isfinite(v) and v <= lim for v, lim in self.gates.values())


def _fmt(x):
    return format(float(x), ".17g")


def write_csv(path: Path, table: Table, meta: dict):
    with open(path, "w", newline="") as fh:
        for k in sorted(meta):
            fh.write(f"# {k}={meta[k]}\n")
        fh.write(",".join(table.header) + "\n")
        for row in np.atleast_2d(table.rows):
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def versions():
    import scipy
    import sympy
    return {"isoshell": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "sympy": sympy.__version__}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def output_dir(cfg: RunConfig) -> Path:
    return Path(cfg.output_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def write_outputs(cfg: RunConfig, out: Outcome) -> Path:
    d = output_dir(cfg)
    d.mkdir(parents=True, exist_ok=True)
    inputs = _jsonable(asdict(cfg))
    inputs.pop("output_dir", None)
    meta = {"task": cfg.task, "config": json.dumps(inputs, sort_keys=True)}
    files = {}
    for t in out.tables:
        p = d / f"{cfg.task}-{t.name}.csv"
        write_csv(p, t, meta)
        files[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
    manifest = {
        "task": cfg.task,
        "inputs": inputs,
        "tolerances": {"tol": cfg.tol, "ode_step": cfg.ode_step},
        "versions": versions(),
        "summary": _jsonable(out.summary),
        "gates": {k: {"value": v, "limit": lim, "passed": bool(np.isfinite(v) and v <= lim)}
                  for k, (v, lim) in out.gates.items()},
        "passed": out.passed,
        "outputs": files,
    }
    (d / f"{cfg.task}-manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True)
                                                 + "\n")
    return d


def write_error(cfg: RunConfig | None, code: int, err: Exception,
                task: str | None = None, out: str | None = None):
    """JSON record on stderr and in ``{task}-error.json``.

    Without a config (it failed validation) ``task`` and ``out`` locate the file.
    """
    task = cfg.task if cfg else task
    rec = {"error": type(err).__name__, "message": str(err), "exit_code": code, "task": task}
    click.echo(json.dumps(rec, sort_keys=True), err=True)
    if task is not None:
        try:
            d = output_dir(cfg) if cfg else Path(out or os.environ.get(OUTPUT_ENV)
                                                 or DEFAULT_OUTPUT)
            d.mkdir(parents=True, exist_ok=True)
            (d / f"{task}-error.json").write_text(json.dumps(rec, indent=2) + "\n")
        except OSError:
            pass


# ------------------------------------------------------------------ tasks

def _expr_fn(text, names):
    """Vectorised callable of a sympy expression in the given variables."""
    import sympy as sp

    from .surface import parse_expr

    try:
        expr = parse_expr(str(text), names=names)
    except (sp.SympifyError, SyntaxError, TypeError) as e:
        raise ConfigError(f"cannot parse expression {text!r}: {e}") from None
    syms = [sp.Symbol(n, real=True) for n in names]
    if not expr.free_symbols <= set(syms) | {sp.Symbol("u", real=True),
                                              sp.Symbol("v", real=True)}:
        raise ConfigError(f"expression {text!r} may only use {', '.join(names)}")
    f = sp.lambdify(syms, expr, "numpy")
    return lambda *a: np.asarray(f(*a), dtype=float) * np.ones_like(a[0], dtype=float)


def _moduli(cfg):
    from .bending import ElasticModuli
    return ElasticModuli(cfg.get("mu", 1.0, float), cfg.get("lambda", 1.0, float))


def _grid_rows(grid, *cols):
    m = grid.valid
    TH = np.broadcast_to(grid.theta[:, None], grid.shape)
    T = np.broadcast_to(grid.t[None, :], grid.shape)
    base = [TH[m], T[m], grid.X[..., 0][m], grid.X[..., 1][m], grid.X[..., 2][m]]
    return np.column_stack(base + [np.asarray(c)[m] for c in cols])


GRID_HEADER = ["theta", "t", "x", "y", "z"]


def task_surface_info(cfg: RunConfig) -> Outcome:
    surf = build_surface(cfg.surface)
    origin = cfg.origin or default_origin(surf)
    info = classify(surf, origin, cfg.t_max)
    if cfg.regime != "auto" and info["regime"] != cfg.regime:
        raise RegimeMismatch(f"configured regime {cfg.regime} but the surface is {info['regime']}")
    return Outcome(summary=dict(info, origin=origin), headline=info["regime"])


def task_killing_dim(cfg: RunConfig) -> Outcome:
    from .killing import killing_dimension

    g = _grid(cfg, kind="uniform")
    r = killing_dimension(g, tol=cfg.get("svd_tol", 1e-6, float),
                          wraps=cfg.get("wraps", "0") in ("1", "true", "yes", True))
    out = Outcome(summary={"dim": r.dim, "refined_dim": r.refined_dim,
                           "singular_values": r.singular_values, "threshold": r.threshold,
                           "crossings": r.n_crossings}, headline=str(r.dim))
    out.tables.append(Table("singular-values", ["index", "sigma"],
                            np.column_stack([np.arange(3), r.singular_values])))
    return out


def task_killing_field(cfg: RunConfig) -> Outcome:
    from .killing import (KillingIC, killing_candidate_nonconstant, killing_from_ic,
                          killing_residual, lemma_residual)

    g = _grid(cfg, kind="uniform")
    if cfg.get("construct", "ic") == "gradient":
        fld = killing_candidate_nonconstant(g).field
    else:
        ic = KillingIC((cfg.get("w1", 1.0, float), cfg.get("w2", 0.0, float)),
                       cfg.get("a", 0.0, float))
        fld = killing_from_ic(g, ic)
    W = fld.ambient()
    res = killing_residual(g.surface, fld)
    lem = lemma_residual(fld)
    out = Outcome(summary={"sym_dw_residual": res, "lemma_residual": lem})
    out.gate("sym_dw_residual", res, cfg.get("killing_tol", 1e-6, float))
    out.gate("lemma_residual", lem, cfg.get("lemma_tol", 1e-5, float))
    out.tables.append(Table("field", GRID_HEADER + ["phi", "vphi", "Wx", "Wy", "Wz"],
                            _grid_rows(g, fld.phi, fld.vphi, W[..., 0], W[..., 1], W[..., 2])))
    return out


def task_isometry_check(cfg: RunConfig) -> Outcome:
    """Reconstruct V from a normal component w(x, y, z) and report residuals."""
    from .isometry import (characteristic_residual, isometry_residual, reconstruct_W,
                           third_equation_residual)

    g = _grid(cfg)
    w = _expr_fn(cfg.get("w", "z"), ("x", "y", "z"))(g.X[..., 0], g.X[..., 1], g.X[..., 2])
    F = reconstruct_W(g, w, (cfg.get("w1", 0.0, float), cfg.get("w2", 0.0, float)))
    V = F.ambient_V()
    s = {"characteristic_residual": characteristic_residual(g, w),
         "isometry_residual": isometry_residual(F),
         "third_equation_residual": third_equation_residual(F)}
    out = Outcome(summary=s)
    out.gate("characteristic_residual", s["characteristic_residual"], cfg.tol)
    out.tables.append(Table("field", GRID_HEADER + ["w", "Vx", "Vy", "Vz"],
                            _grid_rows(g, w, V[..., 0], V[..., 1], V[..., 2])))
    return out


def task_isometry_solve(cfg: RunConfig) -> Outcome:
    """Graph route: u from the planar problem, then V = (u1, u2, u)."""
    from .isometry import ambient_isometry_residual, graph_reconstruct, graph_solve_u

    surf = build_surface(cfg.surface)
    if surf.name not in ("graph", "revolution"):
        raise ConfigError("isometry solve needs a graph surface (graph or revolution)")
    surf, _ = require_regime(cfg, "elliptic", surf)
    L = cfg.get("box", 1.0, float)
    psi = _expr_fn(cfg.get("psi", "x1**2 - x2**2"), ("x1", "x2"))
    sol = graph_solve_u(surf, ((-L, L), (-L, L)), cfg.get("n", 24, int), psi)
    g = _grid(cfg, surf)
    R = graph_reconstruct(g, sol)
    V = R.V()
    res = ambient_isometry_residual(g, V)
    out = Outcome(summary={"ambient_isometry_residual": res, "max_abs_u": sol.max_abs()})
    out.gate("ambient_isometry_residual", res, cfg.tol)
    out.tables.append(Table("field", GRID_HEADER + ["u", "u1", "u2", "w"],
                            _grid_rows(g, R.u, R.u1, R.u2, R.w)))
    return out


def task_elliptic_cap(cfg: RunConfig) -> Outcome:
    from .bending import sphere_boundary_energy
    from .elliptic import cap_problem, dirichlet_solve
    from .isometry import characteristic_residual

    kappa, a = cfg.get("kappa", 1.0, float), cfg.get("a", 0.5, float)
    psi = _expr_fn(cfg.get("psi", "cos(2*theta)"), ("theta",))
    P = cap_problem(kappa, a, cfg.n_theta, cfg.n_t)
    w = dirichlet_solve(P, psi)
    g = P.grid
    res = characteristic_residual(g, w)
    energy = sphere_boundary_energy(kappa, a, psi, _moduli(cfg), P, w=w)
    out = Outcome(summary={"characteristic_residual": res, "energy": energy,
                           "kernel_measure": P.kernel_measure()[0]},
                  headline=_fmt(energy))
    out.gate("characteristic_residual", res, cfg.tol)
    out.tables.append(Table("w", GRID_HEADER + ["w"], _grid_rows(g, w)))
    return out


def task_elliptic_eigen(cfg: RunConfig) -> Outcome:
    from .elliptic import cap_eigen_lambda1

    kappa, a = cfg.get("kappa", 1.0, float), cfg.get("a", np.pi / 4, float)
    lam = cap_eigen_lambda1(kappa, a, cfg.get("n", 2000, int))
    out = Outcome(summary={"lambda1": lam, "two_kappa": 2 * kappa,
                           "unique": bool(lam > 2 * kappa)}, headline=_fmt(lam))
    out.tables.append(Table("lambda1", ["kappa", "a", "lambda1"], np.array([[kappa, a, lam]])))
    return out


def task_parabolic_isometry(cfg: RunConfig) -> Outcome:
    from .parabolic import cylinder_explicit_V, detect_ruling, parabolic_isometry

    surf = build_surface(cfg.surface)
    surf, _ = require_regime(cfg, "parabolic", surf)
    if surf.name == "cylinder" and surf.params.get("a", 1.0) == 1.0:
        w0 = _expr_fn(cfg.get("w0", "cos(2*theta)"), ("theta",))
        w1 = _expr_fn(cfg.get("w1", "0"), ("theta",))
        half = cfg.get("z_half", 1.0, float)
        z = np.linspace(-half, half, cfg.n_t + 1)
        r = cylinder_explicit_V(w0, w1, z, cfg.n_theta)
        TH, Z = np.meshgrid(r.theta, r.z, indexing="ij")
        rows = np.column_stack([TH.ravel(), Z.ravel(), r.V.reshape(-1, 3), r.w.ravel()])
        out = Outcome(summary={"isometry_residual": r.residual})
        out.gate("isometry_residual", r.residual, cfg.get("iso_tol", 1e-8, float))
        out.tables.append(Table("V", ["theta", "z", "Vx", "Vy", "Vz", "w"], rows))
        return out
    seed = cfg.origin or default_origin(surf)
    ch = detect_ruling(surf, seed, cfg.get("s_half", 0.3, float), cfg.get("t_half", 0.3, float))
    w0 = _expr_fn(cfg.get("w0", "cos(2*s)"), ("s",))
    w1 = _expr_fn(cfg.get("w1", "s"), ("s",))
    w = parabolic_isometry(ch, w0, w1)
    chk = ch.check(cfg.get("ruling_tol", 1e-8, float))
    out = Outcome(summary=dict(chk))
    out.gate("dN_E", chk["dN_E"], cfg.get("ruling_tol", 1e-8, float))
    S, T = np.meshgrid(ch.s, ch.t, indexing="ij")
    out.tables.append(Table("w", ["s", "t", "x", "y", "z", "w"],
                            np.column_stack([S.ravel(), T.ravel(), ch.X.reshape(-1, 3),
                                             w.ravel()])))
    return out


def task_hyperbolic_evolve(cfg: RunConfig) -> Outcome:
    from .hyperbolic import (CauchyData, build_nonlocal, check_assumptions, evolve_cauchy,
                             evolve_with_sides, growth_fit, pde_residual)

    surf = build_surface(cfg.surface)
    if cfg.regime not in ("auto", "hyperbolic"):
        raise RegimeMismatch(f"task needs the hyperbolic regime, config asks for {cfg.regime}")
    u0, b = cfg.get("u0", 1.3, float), cfg.get("b", 0.4, float)
    steps, mode = cfg.get("steps", 160, int), cfg.get("mode", "local")
    n_theta = cfg.get("n_theta_evolve", 64, int)
    ch = check_assumptions(surf, u0, b)
    w0 = _expr_fn(cfg.get("w0", "cos(2*theta)"), ("theta",))
    w1 = _expr_fn(cfg.get("w1", "sin(theta)"), ("theta",))
    theta0 = cfg.get("theta0", None, float)
    if theta0 is None:
        if mode == "full":
            raise ConfigError("mode=full needs a sector (theta0, h1, h2)")
        data = CauchyData.from_functions(w0, w1, n_theta,
                                         remove_mean=cfg.get("remove_mean", "1") == "1")
        ev = evolve_cauchy(ch, data, b, steps, mode=mode)
    else:
        h1 = _expr_fn(cfg.get("h1", "0*s"), ("s",))
        h2 = _expr_fn(cfg.get("h2", "0*s"), ("s",))
        rt = None
        if mode == "full":
            o = cfg.origin or (u0 + 0.5 * b, 0.5 * theta0)
            rt = build_nonlocal(surf, u0, b, o, (0.0, theta0))
        ev = evolve_with_sides(ch, w0, w1, h1, h2, theta0, b, steps,
                               n_theta=cfg.get("n_theta_evolve", 41, int), mode=mode,
                               ray_term=rt)
    res = pde_residual(ch, ev)
    C, omega = growth_fit(ev)
    out = Outcome(summary={"pde_residual": res, "growth_C": C, "growth_omega": omega,
                           "cfl": ev.cfl, "picard_iterations": ev.picard_iterations})
    out.gate("pde_residual", res, cfg.get("res_tol", 2e-2, float))
    out.gate("growth_finite", 0.0 if np.isfinite(C) and np.isfinite(omega) else np.inf, 0.0)
    W = np.asarray(ev.w[:len(ev.s)])
    S, TH = np.meshgrid(ev.s, ev.theta, indexing="ij")
    out.tables.append(Table("w", ["s", "theta", "w"],
                            np.column_stack([S.ravel(), TH.ravel(), W.ravel()])))
    return out


def task_sphere_energy(cfg: RunConfig) -> Outcome:
    from .bending import sphere_boundary_energy
    from .elliptic import cap_problem, dirichlet_solve, dtn_theta

    kappa, a = cfg.get("kappa", 1.0, float), cfg.get("a", np.pi / 4, float)
    psi = _expr_fn(cfg.get("psi", "cos(2*theta)"), ("theta",))
    P = cap_problem(kappa, a, cfg.n_theta, cfg.n_t)
    w = dirichlet_solve(P, psi)
    e = sphere_boundary_energy(kappa, a, psi, _moduli(cfg), P, w=w)
    th = P.grid.theta
    out = Outcome(summary={"energy": e}, headline=_fmt(e))
    out.tables.append(Table("boundary", ["theta", "psi", "Theta_psi"],
                            np.column_stack([th, w[:, -1], dtn_theta(P, psi, w)])))
    return out


def task_cylinder_energy(cfg: RunConfig) -> Outcome:
    from .bending import cylinder_energy_1d, cylinder_energy_2d

    w0, w1 = cfg.get("w0", "cos(2*theta)"), cfg.get("w1", "0")
    a, m = cfg.get("a", 1.0, float), _moduli(cfg)
    e1 = cylinder_energy_1d(w0, w1, a, m)
    e2 = cylinder_energy_2d(w0, w1, a, m)
    rel = abs(e1 - e2) / max(abs(e2), 1e-300) if e2 else abs(e1)
    out = Outcome(summary={"energy": e1, "energy_2d": e2, "relative_difference": rel},
                  headline=_fmt(e1))
    out.gate("relative_difference", rel, cfg.get("energy_tol", 1e-5, float))
    th = 2 * np.pi * np.arange(cfg.n_theta) / cfg.n_theta
    f0, f1 = _expr_fn(w0, ("theta",)), _expr_fn(w1, ("theta",))
    out.tables.append(Table("profiles", ["theta", "w0", "w1"],
                            np.column_stack([th, f0(th), f1(th)])))
    return out


def task_energy_quad(cfg: RunConfig) -> Outcome:
    from .bending import chart_invariants, xi_chart
    from .numerics import gauss_legendre
    from .surface import AmbientField, parse_expr

    surf = build_surface(cfg.surface)
    comps = str(cfg.get("field", "0;0;1")).split(";")
    if len(comps) != 3:
        raise ConfigError("field needs three components separated by ';'")
    fld = AmbientField([parse_expr(c) for c in comps])
    m = _moduli(cfg)
    rng = lambda key, dflt: tuple(float(x) for x in str(cfg.get(key, dflt)).split(","))
    (u_lo, u_hi), (v_lo, v_hi) = rng("u_range", "-0.5,0.5"), rng("v_range", "-0.5,0.5")
    n = cfg.get("n", 24, int)
    xu, wu = gauss_legendre(n, u_lo, u_hi)
    xv, wv = gauss_legendre(n, v_lo, v_hi)
    Ug, Vg = np.meshgrid(xu, xv, indexing="ij")
    u, v = Ug.ravel(), Vg.ravel()
    n2, tr = chart_invariants(surf, xi_chart(surf, fld, u, v), u, v)
    area = np.sqrt(np.linalg.det(surf.local(u, v).g))
    q = 2 * m.mu * n2 + (m.lam * m.mu / (m.mu + m.lam / 2)) * tr ** 2
    e = float(np.sum(q * area * np.outer(wu, wv).ravel()) / 24.0)
    out = Outcome(summary={"energy": e}, headline=_fmt(e))
    out.tables.append(Table("integrand", ["u", "v", "Q2", "area"],
                            np.column_stack([u, v, q, area])))
    return out


TASKS = {
    "surface-info": task_surface_info,
    "killing-dim": task_killing_dim,
    "killing-field": task_killing_field,
    "isometry-check": task_isometry_check,
    "isometry-solve": task_isometry_solve,
    "elliptic-cap": task_elliptic_cap,
    "elliptic-eigen": task_elliptic_eigen,
    "parabolic-isometry": task_parabolic_isometry,
    "hyperbolic-evolve": task_hyperbolic_evolve,
    "sphere-energy": task_sphere_energy,
    "cylinder-energy": task_cylinder_energy,
    "energy-quad": task_energy_quad,
}


def execute(cfg: RunConfig, echo=click.echo) -> int:
    """Run one task, write its outputs and return the exit code."""
    from .hyperbolic import CoverageError, StabilityError
    from .killing import InconclusiveError, ObstructionError
    from .numerics import IntegrationDiverged, RankDeficientError
    from .surface import RegimeError

    if cfg.task not in TASKS:
        write_error(cfg, EXIT_REGIME, ConfigError(f"unknown task {cfg.task!r}"))
        return EXIT_REGIME
    try:
        out = TASKS[cfg.task](cfg)
    except (RegimeError, RegimeMismatch, ConfigError) as e:
        write_error(cfg, EXIT_REGIME, e)
        return EXIT_REGIME
    except (RankDeficientError, IntegrationDiverged, InconclusiveError, ObstructionError,
            CoverageError, StabilityError, np.linalg.LinAlgError, ValueError) as e:
        write_error(cfg, EXIT_SOLVER, e)
        return EXIT_SOLVER
    d = write_outputs(cfg, out)
    if out.headline is not None:
        echo(out.headline)
    for k, v in out.summary.items():
        echo(f"{k}: {_jsonable(v)}")
    for k, (v, lim) in out.gates.items():
        echo(f"gate {k}: {v:.3g} <= {lim:.3g} {'ok' if v <= lim else 'FAILED'}")
    echo(f"outputs: {d}")
    return EXIT_OK if out.passed else EXIT_GATE


# -------------------------------------------------------------------- cli

def _common(f):
    opts = [
        click.option("--surface", default=None, help="catalog name, e.g. sphere or cylinder:a=1,b=2"),
        click.option("--regime", default=None, type=click.Choice(REGIMES)),
        click.option("--origin", default=None, help="chart point u,v"),
        click.option("--n-theta", type=int, default=None),
        click.option("--n-t", type=int, default=None),
        click.option("--t-max", type=float, default=None),
        click.option("--tol", type=float, default=None),
        click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
                     default=None, help="key=value file; flags override it"),
        click.option("--set", "extra", multiple=True, help="extra key=value parameter"),
    ]
    for o in reversed(opts):
        f = o(f)
    return f


def _launch(ctx, task, flags: dict, params: dict):
    """Merge config file, flags and task parameters; run; exit with the code."""
    extra = flags.pop("extra", ())
    path = flags.pop("config_file", None)
    cfg = None
    try:
        base = RunConfig.from_file(path) if path else RunConfig()
        pairs = {k: v for k, v in flags.items() if v is not None}
        pairs.update({k: v for k, v in params.items() if v is not None})
        pairs.update(parse_assignments(extra))
        pairs["task"] = task
        pairs.setdefault("output_dir", ctx.obj.get("out"))
        cfg = RunConfig.from_pairs(pairs, base)
    except (ConfigError, RegimeMismatch) as e:
        write_error(cfg, EXIT_REGIME, e, task, ctx.obj.get("out"))
        ctx.exit(EXIT_REGIME)
    ctx.exit(execute(cfg))


@click.group()
@click.version_option(__version__)
@click.option("--out", default=None, envvar=OUTPUT_ENV,
              help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
@click.pass_context
def main(ctx, out):
    """Infinitesimal isometries and bending energies of surfaces."""
    ctx.ensure_object(dict)
    ctx.obj["out"] = out


@main.group()
def surface():
    """Surface catalog queries."""


@surface.command("info")
@_common
@click.pass_context
def surface_info(ctx, **flags):
    """Curvature range, Pi definiteness and regime near the origin."""
    _launch(ctx, "surface-info", flags, {})


@main.group()
def killing():
    """Killing fields on geodesic disks."""


@killing.command("dim")
@_common
@click.option("--wraps", is_flag=True, help="region wraps around; match rays where they meet")
@click.pass_context
def killing_dim(ctx, wraps, **flags):
    _launch(ctx, "killing-dim", flags, {"wraps": "1" if wraps else None})


@killing.command("field")
@_common
@click.option("--w1", type=float, default=None)
@click.option("--w2", type=float, default=None)
@click.option("--a", type=float, default=None, help="rotation rate at the origin")
@click.option("--gradient", is_flag=True, help="use e^h Q grad kappa (non-constant kappa)")
@click.pass_context
def killing_field(ctx, w1, w2, a, gradient, **flags):
    _launch(ctx, "killing-field", flags,
            {"w1": w1, "w2": w2, "a": a, "construct": "gradient" if gradient else None})


@main.group()
def isometry():
    """Infinitesimal isometries from their normal component."""


@isometry.command("check")
@_common
@click.option("--w", default=None, help="normal component as an expression in x, y, z")
@click.pass_context
def isometry_check(ctx, w, **flags):
    _launch(ctx, "isometry-check", flags, {"w": w})


@isometry.command("solve")
@_common
@click.option("--psi", default=None, help="boundary data in x1, x2 on the box")
@click.option("--box", type=float, default=None, help="half width of the square")
@click.pass_context
def isometry_solve(ctx, psi, box, **flags):
    _launch(ctx, "isometry-solve", flags, {"psi": psi, "box": box})


@main.group()
def elliptic():
    """Dirichlet problems on spherical caps."""


@elliptic.command("solve")
@_common
@click.option("--kappa", type=float, default=None)
@click.option("--a", type=float, default=None, help="cap radius")
@click.option("--psi", default=None, help="boundary data in theta")
@click.pass_context
def elliptic_solve(ctx, kappa, a, psi, **flags):
    _launch(ctx, "elliptic-cap", flags, {"kappa": kappa, "a": a, "psi": psi})


@elliptic.command("eigen")
@_common
@click.option("--kappa", type=float, default=None)
@click.option("--a", type=float, default=None)
@click.option("--n", type=int, default=None, help="radial cells")
@click.pass_context
def elliptic_eigen(ctx, kappa, a, n, **flags):
    _launch(ctx, "elliptic-eigen", flags, {"kappa": kappa, "a": a, "n": n})


@main.group()
def parabolic():
    """Developable surfaces."""


@parabolic.command("isometry")
@_common
@click.option("--w0", default=None)
@click.option("--w1", default=None)
@click.pass_context
def parabolic_iso(ctx, w0, w1, **flags):
    _launch(ctx, "parabolic-isometry", flags, {"w0": w0, "w1": w1})


@main.group()
def hyperbolic():
    """Evolution in the negatively curved regime."""


@hyperbolic.command("evolve")
@_common
@click.option("--u0", type=float, default=None)
@click.option("--b", type=float, default=None, help="evolution length in s")
@click.option("--steps", type=int, default=None)
@click.option("--mode", type=click.Choice(["none", "local", "full"]), default=None)
@click.option("--w0", default=None)
@click.option("--w1", default=None)
@click.option("--theta0", type=float, default=None, help="sector opening; omit for periodic")
@click.option("--h1", default=None)
@click.option("--h2", default=None)
@click.pass_context
def hyperbolic_evolve(ctx, **kw):
    names = ("u0", "b", "steps", "mode", "w0", "w1", "theta0", "h1", "h2")
    params = {k: kw.pop(k) for k in names}
    if kw.get("surface") is None:
        kw["surface"] = "hyperboloid"
    _launch(ctx, "hyperbolic-evolve", kw, params)


@main.group()
def energy():
    """Bending energies."""


@energy.command("sphere")
@_common
@click.option("--kappa", type=float, default=None)
@click.option("--a", type=float, default=None)
@click.option("--psi", default=None)
@click.option("--mu", type=float, default=None)
@click.option("--lambda", "lam", type=float, default=None)
@click.pass_context
def energy_sphere(ctx, kappa, a, psi, mu, lam, **flags):
    _launch(ctx, "sphere-energy", flags,
            {"kappa": kappa, "a": a, "psi": psi, "mu": mu, "lambda": lam})


@energy.command("cylinder")
@_common
@click.option("--a", type=float, default=None, help="half length")
@click.option("--w0", default=None)
@click.option("--w1", default=None)
@click.option("--mu", type=float, default=None)
@click.option("--lambda", "lam", type=float, default=None)
@click.pass_context
def energy_cylinder(ctx, a, w0, w1, mu, lam, **flags):
    _launch(ctx, "cylinder-energy", flags, {"a": a, "w0": w0, "w1": w1, "mu": mu, "lambda": lam})


@energy.command("quad")
@_common
@click.option("--field", default=None, help="V components in u, v separated by ';'")
@click.option("--u-range", default=None)
@click.option("--v-range", default=None)
@click.option("--mu", type=float, default=None)
@click.option("--lambda", "lam", type=float, default=None)
@click.pass_context
def energy_quad(ctx, field, u_range, v_range, mu, lam, **flags):
    _launch(ctx, "energy-quad", flags, {"field": field, "u_range": u_range,
                                        "v_range": v_range, "mu": mu, "lambda": lam})


@main.command()
@click.argument("task")
@click.argument("assignments", nargs=-1)
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.pass_context
def run(ctx, task, assignments, config_file):
    """Run TASK with key=value ASSIGNMENTS (they override --config).

    Tasks: surface-info, killing-dim, killing-field, isometry-check,
    isometry-solve, elliptic-cap, elliptic-eigen, parabolic-isometry,
    hyperbolic-evolve, sphere-energy, cylinder-energy, energy-quad.
    """
    cfg = None
    try:
        base = RunConfig.from_file(config_file) if config_file else RunConfig()
        pairs = parse_assignments(assignments)
        pairs.setdefault("output_dir", ctx.obj.get("out"))
        pairs["task"] = task
        if task == "hyperbolic-evolve" and "surface" not in pairs and not config_file:
            pairs["surface"] = "hyperboloid"
        cfg = RunConfig.from_pairs(pairs, base)
    except (ConfigError, RegimeMismatch) as e:
        write_error(cfg, EXIT_REGIME, e, task, ctx.obj.get("out"))
        ctx.exit(EXIT_REGIME)
    ctx.exit(execute(cfg))


@main.command()
@click.option("--only", multiple=True, type=int, help="criterion numbers to run")
def selftest(only):
    """Run the acceptance criteria and print one line per criterion."""
    from .acceptance import all_passed, run_all

    results = run_all(set(only) or None, click.echo)
    ok = all_passed(results)
    click.echo("selftest " + ("passed" if ok else "FAILED"))
    sys.exit(EXIT_OK if ok else EXIT_GATE)


if __name__ == "__main__":
    main()
