import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoshell.elliptic import (ConditionViolation, NonUniqueSolutionError, assemble, cap_eigen_lambda1,
                               cap_grid, cap_problem, check_revolution_condition, dirichlet_solve,
                               dtn_theta, laplacian_Pi, operator_B, revolution_uniqueness)
from isoshell.geodesic import GridSpec, PolarGrid
from isoshell.isometry import characteristic_lhs, characteristic_residual
from isoshell.surface import RegimeError, cylinder, graph


@pytest.fixture(scope="module")
def quarter():
    return cap_problem(1.0, np.pi / 4, 32, 16)


def test_sphere_laplacian_of_linear_functions(quarter):
    g = quarter.grid
    for c in [(0, 0, 1), (1, 0, 0), (0.2, -0.4, 0.1)]:
        w = g.N @ np.array(c, float)
        assert np.abs(laplacian_Pi(g, w) + 2 * w).max() < 1e-8
        assert np.abs(laplacian_Pi(g, w, "identity") + 2 * w).max() < 1e-8
        assert np.abs(operator_B(g, w) - 2 * w).max() < 1e-8
    assert np.abs(laplacian_Pi(g, np.ones(g.shape))).max() < 1e-9


def test_routes_agree_and_match_characteristic_operator():
    surf = graph("x1**2/2+x2**2/3+0.1*x1**3+0.05*x1*x2**2", ((-1, 1), (-1, 1)))
    g = PolarGrid(surf, (0.1, 0.0), GridSpec(24, 0.5, 14, "chebyshev", 1e-3))
    w = np.cos(2 * g.X[..., 0] + g.X[..., 1]) + g.X[..., 2]
    a, b = laplacian_Pi(g, w), laplacian_Pi(g, w, "identity")
    assert np.abs(a - b).max() < 1e-4 * np.abs(a).max()
    lhs = characteristic_lhs(g, w)
    assert np.abs(lhs - g.kappa * (a + operator_B(g, w))).max() < 1e-4 * np.abs(lhs).max()


def test_dirichlet_recovers_degree_one_harmonic(quarter):
    g = quarter.grid
    w = dirichlet_solve(quarter, lambda th: np.sin(np.pi / 4) * np.cos(th))
    assert np.abs(w - g.N[..., 0]).max() < 1e-8
    assert characteristic_residual(g, w) < 1e-4
    assert np.abs(dirichlet_solve(quarter, lambda th: 0 * th)).max() == 0


def test_dtn_of_radial_solution(quarter):
    # w = cos(rho) has boundary value cos(a) and normal derivative -sin(a)
    a = np.pi / 4
    th = dtn_theta(quarter, lambda t: np.cos(a) + 0 * t)
    assert np.abs(th + np.sin(a)).max() < 1e-6
    assert np.abs(dtn_theta(quarter, lambda t: 0 * t)).max() == 0
    f, h = (lambda t: np.cos(2 * t)), (lambda t: np.sin(3 * t))
    lin = dtn_theta(quarter, lambda t: 2 * f(t) - h(t))
    assert np.abs(lin - 2 * dtn_theta(quarter, f) + dtn_theta(quarter, h)).max() < 1e-9 * np.abs(lin).max()


def test_kernel_at_hemisphere_is_reported():
    P = cap_problem(1.0, np.pi / 2, 24, 12)
    assert P.relative_gap() < 1e-8
    with pytest.raises(NonUniqueSolutionError):
        dirichlet_solve(P, lambda th: np.cos(th))
    w = dirichlet_solve(P, lambda th: np.cos(2 * th), allow_kernel=True)
    assert np.isfinite(w).all()


def test_eigenvalue_threshold_and_scaling():
    assert abs(cap_eigen_lambda1(1.0, np.pi / 2) - 2) < 1e-4
    assert cap_eigen_lambda1(1.0, np.pi / 4) > 2.5
    assert abs(cap_eigen_lambda1(4.0, np.pi / 4) - 8) < 1e-3
    with pytest.raises(ValueError):
        cap_eigen_lambda1(1.0, 4.0)


@given(st.floats(0.3, 3.0), st.floats(0.2, 1.4))
def test_eigenvalue_scaling_law(kappa, b):
    a = b / np.sqrt(kappa)
    assert abs(cap_eigen_lambda1(kappa, a, 400) - kappa * cap_eigen_lambda1(1.0, b, 400)) \
        < 1e-8 * kappa * cap_eigen_lambda1(1.0, b, 400)


def test_cap_validation_and_regime():
    with pytest.raises(ValueError):
        cap_grid(-1.0, 0.5)
    with pytest.raises(ValueError):
        cap_grid(1.0, 3.5)
    g = PolarGrid(cylinder(1.0, 2.0), (0, 0), GridSpec(8, 0.5, 6, "chebyshev"))
    with pytest.raises(RegimeError):
        assemble(g)


def test_revolution_condition_and_uniqueness():
    with pytest.raises(ConditionViolation):
        check_revolution_condition("s**2/2 - s**4", 1.0)
    for prof, a in [("1-sqrt(1-s**2)", 0.5), ("s**2/2", 1.0)]:
        s1, s2 = revolution_uniqueness(prof, a, 8), revolution_uniqueness(prof, a, 12)
        assert s1 > 1e-3 and 0.7 < s2 / s1 < 1.4
