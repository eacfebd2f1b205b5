import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoshell.geodesic import GridSpec, PolarGrid
from isoshell.isometry import (ambient_isometry_residual, characteristic_residual,
                               graph_operator_A, graph_reconstruct, graph_solve_u,
                               isometry_residual, killing_component, lemma_identity_residual,
                               operator_P, reconstruct_W, revolution_w, third_equation_residual)
from isoshell.surface import RegimeError, cylinder, graph, revolution_graph, sphere

PROFILE = "s**2/2+s**4/8"
BOX = ((-1, 1), (-1, 1))


@pytest.fixture(scope="module")
def cap():
    return PolarGrid(sphere(1.0), (0, 0), GridSpec(24, np.pi / 4, 16, "chebyshev", 1e-2))


@pytest.fixture(scope="module")
def rev():
    surf = revolution_graph(PROFILE)
    return surf, PolarGrid(surf, (0, 0), GridSpec(24, 0.8, 16, "chebyshev", 1e-2))


@pytest.mark.parametrize("c", [(0.3, -0.5, 0.8), (0, 0, 1), (1, 0, 0)])
def test_translation_round_trip(cap, c):
    c = np.array(c, float)
    w = cap.N @ c
    F = reconstruct_W(cap, w, (float(c @ cap.e1), float(c @ cap.e2)))
    assert np.abs(F.ambient_V() - c).max() < 1e-8
    assert isometry_residual(F) < 1e-8
    assert characteristic_residual(cap, w) < 1e-5
    assert lemma_identity_residual(F) < 1e-5
    assert ambient_isometry_residual(cap, F.ambient_V()) < 1e-8


def test_non_admissible_w_fails_third_equation(cap):
    w = np.cos(3 * cap.X[..., 0]) * cap.X[..., 1]
    assert third_equation_residual(reconstruct_W(cap, w)) > 1e-2


@given(st.integers(0, 2 ** 31))
def test_operator_P_on_umbilic_sphere(seed):
    # Pi is a multiple of the metric, so only the w2 term survives
    g = _cap_small()
    c = np.random.default_rng(seed).normal(size=4)
    X = g.X
    w = c[0] + c[1] * X[..., 0] ** 2 + c[2] * np.sin(X[..., 1]) + c[3] * X[..., 0] * X[..., 2]
    w2 = g.frame_derivatives(w)[1]
    assert np.abs(operator_P(g, w) - g.Pi11 * w2).max() < 1e-8 * (1 + np.abs(w2).max())


_SMALL = {}


def _cap_small():
    if "g" not in _SMALL:
        _SMALL["g"] = PolarGrid(sphere(1.0), (0, 0), GridSpec(16, 0.6, 10, "chebyshev", 1e-2))
    return _SMALL["g"]


def test_operator_P_on_cylinder_constant_w():
    # with w = 1, P = -Pi_121, and Pi_121 is the t-derivative of Pi_12 along rays
    g = PolarGrid(cylinder(1.0, 3.0), (0, 0), GridSpec(8, 1.0, 400, "uniform", 1e-3))
    P = operator_P(g, np.ones(g.shape))
    fd = np.gradient(g.Pi12, g.t, axis=1)
    assert np.abs(P + g.Pi112).max() < 1e-12
    assert np.abs((P + fd)[:, 2:-2]).max() < 1e-4


def test_killing_part_of_a_rotation(cap):
    F = reconstruct_W(cap, np.zeros(cap.shape), (0.0, 0.0))
    assert np.abs(F.ambient_V()).max() == 0
    from isoshell.killing import KillingIC, killing_from_ic
    k = killing_from_ic(cap, KillingIC((0.2, 0.1), 0.5))
    F = reconstruct_W(cap, np.zeros(cap.shape), (0.2, 0.1))
    F.vphi = k.vphi
    coef, frac = killing_component(F)
    assert len(coef) == 3 and abs(frac - 1) < 1e-8


def test_graph_operator_A_trivial():
    A = graph_operator_A(graph("(x1**2 + x2**2)/2"), np.array([0.3]), np.array([0.1]))
    assert np.allclose(A[0], np.eye(2))
    A = graph_operator_A(graph("x1*x2"), np.array([0.3]), np.array([0.1]))
    assert np.allclose(A[0], [[0, -1], [-1, 0]])


@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_det_A_matches_curvature(x1, x2):
    s = graph("x1**2/2 + x1*x2/3 + x2**2 + 0.2*x1**3 - 0.1*x2**4")
    A = graph_operator_A(s, np.array([x1]), np.array([x2]))[0]
    geo = s.local(np.array([x1]), np.array([x2]))
    grad2 = (x1 + x2 / 3 + 0.6 * x1 ** 2) ** 2 + (x1 / 3 + 2 * x2 - 0.4 * x2 ** 3) ** 2
    assert abs(np.linalg.det(A) - geo.kappa[0] * (1 + grad2) ** 2) < 1e-10


def test_graph_route_translation_and_zero(rev):
    surf, g = rev
    one = graph_solve_u(surf, BOX, 16, lambda a, b: 1 + 0 * a)
    R = graph_reconstruct(g, one, Z=(0.2, -0.1))
    assert np.abs(R.u1 - 0.2).max() < 1e-6 and np.abs(R.u2 + 0.1).max() < 1e-6
    assert ambient_isometry_residual(g, R.V()) < 1e-6
    zero = graph_solve_u(surf, BOX, 16, lambda a, b: 0 * a)
    assert zero.max_abs() == 0 and np.abs(graph_reconstruct(g, zero).w).max() == 0


def test_revolution_formula_matches_general(rev):
    surf, g = rev
    sol = graph_solve_u(surf, BOX, 24, lambda a, b: a * a - b * b + a + 0.3 * a * b)
    R = graph_reconstruct(g, sol)
    assert np.abs(R.w - revolution_w(g, sol, PROFILE)).max() < 1e-5
    assert ambient_isometry_residual(g, R.V()) < 1e-5
    # the normal part solves the characteristic equation
    assert characteristic_residual(g, R.w) < 1e-3


def test_graph_fd_scheme_agrees_and_rejects_saddles(rev):
    surf, _ = rev
    psi = lambda a, b: a * a - b * b + a
    spec = graph_solve_u(surf, BOX, 24, psi)
    fd = graph_solve_u(surf, BOX, 40, psi, "fd")
    assert abs(fd.value(0.3, 0.2)[0] - spec.value(0.3, 0.2)[0]) < 5e-3
    with pytest.raises(RegimeError):
        graph_solve_u(graph("x1*x2"), BOX, 8, psi)
    with pytest.raises(ValueError):
        graph_solve_u(surf, BOX, 8, psi, "galerkin")
