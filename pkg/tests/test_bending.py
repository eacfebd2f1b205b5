import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoshell.bending import (ElasticModuli, SymTensor2, bending_energy, bending_energy_chart,
                              cap_interior_energy, cylinder_energy_1d, cylinder_energy_2d,
                              cylinder_remark_field, q2_closed, q2_oracle, sphere_boundary_energy,
                              sphere_holomorphic_field, trace_xi_residual, xi_chart, xi_fd_oracle)
from isoshell.elliptic import cap_problem, dirichlet_solve
from isoshell.isometry import reconstruct_W
from isoshell.surface import AmbientField, cone, cylinder, graph, hyperboloid, sphere

U = np.array([0.1, 0.3, -0.2])
V = np.array([0.2, -0.1, 0.4])


@st.composite
def moduli_and_G(draw):
    mu = draw(st.floats(0.1, 3.0))
    lam = draw(st.floats(-2 * mu + 0.01, 3.0))
    G = SymTensor2(*[draw(st.floats(-3, 3)) for _ in range(3)])
    return ElasticModuli(mu, lam), G


@given(moduli_and_G())
def test_q2_closed_equals_minimisation(mg):
    m, G = mg
    q = q2_closed(m, G)
    assert abs(q - q2_oracle(m, G)) <= 1e-10 * max(1.0, abs(q))
    if 3 * m.lam + 2 * m.mu >= 0:
        assert q >= -1e-12


@given(moduli_and_G())
def test_q2_zero_only_at_zero(mg):
    m, G = mg
    if 3 * m.lam + 2 * m.mu > 0.01 and G.norm2() > 1e-6:
        assert q2_closed(m, G) > 0
    assert q2_closed(m, SymTensor2(0.0, 0.0, 0.0)) == 0


def test_q2_spot_values():
    assert q2_closed(ElasticModuli(1, 0), SymTensor2(1.0, 0.0, 0.0)) == pytest.approx(2.0)
    assert q2_closed(ElasticModuli(1, 1), SymTensor2(1.0, 0.0, 1.0)) == pytest.approx(20 / 3)
    _, a = q2_oracle(ElasticModuli(1, 0), SymTensor2(1.0, 0.3, 2.0), True)
    assert abs(a[2]) < 1e-12
    with pytest.raises(ValueError):
        ElasticModuli(1.0, -2.0)
    with pytest.raises(ValueError):
        ElasticModuli(0.0, 1.0)


RIGID = [AmbientField([0, 0, 1]), AmbientField([1, -2, 0.5]),
         AmbientField(["-X2", "X1", "0"]), AmbientField(["X3", "0", "-X1"])]


def _rigid_on(surface, fld):
    """Substitute the chart position into a rigid field written in X1, X2, X3."""
    import sympy as sp
    X = surface.expr.subs({sp.Symbol(k, real=True): v for k, v in surface.params.items()})
    sub = {sp.Symbol(f"X{i + 1}"): X[i] for i in range(3)}
    return AmbientField([sp.sympify(str(c)).subs(sub) for c in fld.expr])


@pytest.mark.parametrize("surface", [sphere(1.0), cylinder(1.0, 2.0), cone(0.5, 0.5, 2.0),
                                     hyperboloid(), graph("x1**2/2 + x1*x2 - x2**2/3")])
@pytest.mark.parametrize("k", range(len(RIGID)))
def test_rigid_motions_have_zero_energy(surface, k):
    fld = _rigid_on(surface, RIGID[k])
    u, v = (U + 1.5, V) if surface.name in ("hyperboloid",) else (U, V + 1.0) \
        if surface.name == "cone" else (U, V)
    assert np.abs(xi_chart(surface, fld, u, v)).max() < 1e-10
    ur = (1.2, 1.8) if surface.name == "hyperboloid" else (-0.3, 0.3)
    vr = (0.8, 1.4) if surface.name == "cone" else (-0.3, 0.3)
    assert abs(bending_energy_chart(surface, fld, ElasticModuli(1, 1), ur, vr, 8)) < 1e-8


@pytest.mark.parametrize("surface, fld", [
    (sphere(1.0), sphere_holomorphic_field("z**3+0.5*z**2+0.2j*z")),
    (cylinder(1.0, 3.0), cylinder_remark_field("cos(2*theta)", "0")),
    (cylinder(1.0, 3.0), cylinder_remark_field("sin(theta)", "cos(2*theta)")),
])
def test_xi_first_order_in_eps(surface, fld):
    x = xi_chart(surface, fld, U, V)
    e = [np.abs(xi_fd_oracle(surface, fld, U, V, eps) - x).max() for eps in (1e-3, 5e-4)]
    assert 1.7 <= e[0] / e[1] <= 2.3
    assert e[0] <= 1e-3 * (1 + 10 * np.abs(x).max())


def test_xi_of_translation_is_small_in_eps():
    s, T = sphere(1.0), AmbientField([0, 0, 1])
    assert np.abs(xi_chart(s, T, U, V)).max() < 1e-12
    assert np.abs(xi_fd_oracle(s, T, U, V, 1e-4)).max() < 1e-3


@pytest.fixture(scope="module")
def quarter():
    return cap_problem(1.0, np.pi / 4, 32, 16)


def test_trace_of_xi_on_caps(quarter):
    g = quarter.grid
    w = dirichlet_solve(quarter, lambda th: np.cos(2 * th))
    assert trace_xi_residual(reconstruct_W(g, w)) < 1e-4
    assert trace_xi_residual(reconstruct_W(g, g.N @ np.array([0.0, 0, 1]))) < 1e-8
    # a non-admissible w leaves a visible trace
    w = g.X[..., 0] ** 2 * g.X[..., 1]
    assert trace_xi_residual(reconstruct_W(g, w)) > 1e-2


def test_sphere_boundary_energy(quarter):
    m = ElasticModuli(1.0, 0.5)
    psi = lambda th: np.cos(2 * th)
    Ib = sphere_boundary_energy(1.0, np.pi / 4, psi, m, quarter)
    Ii = cap_interior_energy(1.0, np.pi / 4, psi, m, quarter)
    assert abs(Ib - Ii) <= 1e-4 * abs(Ii)
    c1 = lambda th: np.sin(np.pi / 4) * np.cos(th)
    assert abs(sphere_boundary_energy(1.0, np.pi / 4, c1, m, quarter)) < 1e-10
    assert abs(bending_energy(reconstruct_W(quarter.grid, dirichlet_solve(quarter, c1)), m)) < 1e-10


def test_cylinder_energy_spot_and_zeros():
    m = ElasticModuli(1.0, 1.0)
    assert abs(cylinder_energy_1d("cos(2*theta)", "0", 1.0, m) - 2 * np.pi) < 1e-6
    assert abs(cylinder_energy_1d("cos(theta)", "0", 1.0, m)) < 1e-12
    assert abs(cylinder_energy_1d("0", "cos(theta)", 1.0, m)) < 1e-12
    assert abs(cylinder_energy_2d("0", "cos(theta)", 1.0, m)) < 1e-12


@pytest.mark.parametrize("k", [0, 2, 3, 5])
@pytest.mark.parametrize("a", [1.0, 0.7])
def test_cylinder_1d_equals_2d(k, a):
    m = ElasticModuli(1.0, 0.3)
    for w0, w1 in ((f"cos({k}*theta)", "0"), ("0", f"cos({k}*theta)"), ("0", f"sin({k}*theta)")):
        e1, e2 = cylinder_energy_1d(w0, w1, a, m), cylinder_energy_2d(w0, w1, a, m)
        assert abs(e1 - e2) <= 1e-5 * max(abs(e2), 1e-12)
