import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoshell.numerics import (IntegrationDiverged, LineOps, RankDeficientError, Tolerances,
                               barycentric_matrix, fd_matrix, fourier_derivative,
                               fourier_interp_matrix, gauss_legendre, integrate_ode,
                               linear_solve, periodic_trapezoid, quadrature_1d,
                               smallest_singular_value, symmetric_smallest_eig)


def test_tolerances_reject_nonpositive():
    with pytest.raises(ValueError):
        Tolerances(ode_step=0.0)
    with pytest.raises(ValueError):
        Tolerances(quad_points=1)


def test_rk4_harmonic_oscillator():
    t = np.linspace(0, 3, 31)
    y = integrate_ode(lambda s, y: np.array([y[1], -y[0]]), [0.0, 1.0], t, step=1e-3)
    assert np.abs(y[:, 0] - np.sin(t)).max() < 1e-12


def test_rk4_fourth_order():
    errs = []
    for h in (0.1, 0.05):
        y = integrate_ode(lambda s, y: -y, 1.0, [0.0, 1.0], step=h)
        errs.append(abs(y[-1] - np.exp(-1)))
    assert 14 < errs[0] / errs[1] < 18


def test_ode_divergence_and_bad_grid():
    with pytest.raises(IntegrationDiverged), np.errstate(over="ignore", invalid="ignore"):
        integrate_ode(lambda s, y: y ** 2, 1.0, [0.0, 2.0], step=1e-2)
    with pytest.raises(ValueError):
        integrate_ode(lambda s, y: y, 1.0, [1.0, 0.5])


@given(st.integers(0, 19))
def test_gauss_legendre_exact_for_polynomials(deg):
    x, w = gauss_legendre(10, 0.0, 2.0)
    assert abs(w @ x ** deg - 2.0 ** (deg + 1) / (deg + 1)) < 1e-12 * 2.0 ** deg


def test_periodic_quadrature_matches_trapezoid():
    f = lambda x: np.cos(2 * x) ** 2
    x = 2 * np.pi * np.arange(64) / 64
    assert abs(periodic_trapezoid(f(x)) - np.pi) < 1e-12
    assert abs(quadrature_1d(f, 0, 2 * np.pi, 40) - periodic_trapezoid(f(x))) < 1e-12
    with pytest.raises(ValueError):
        quadrature_1d(f, 1.0, 0.0, 4)


def test_linear_solve_trivial_and_random(rng):
    b = rng.normal(size=5)
    assert np.allclose(linear_solve(np.eye(5), b), b)
    assert np.allclose(linear_solve(2 * np.eye(5), b), b / 2)
    A = rng.normal(size=(50, 50)) + 10 * np.eye(50)
    b = rng.normal(size=50)
    x = linear_solve(A, b)
    assert np.linalg.norm(A @ x - b) / np.linalg.norm(b) < 1e-12


@pytest.mark.filterwarnings("ignore::scipy.linalg.LinAlgWarning")
def test_linear_solve_singular_reports_null_vector():
    A = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(RankDeficientError) as e:
        linear_solve(A, np.array([1.0, 0.0]))
    assert e.value.sigma_min < 1e-10
    assert np.linalg.norm(A @ e.value.vector) < 1e-8


@given(st.integers(2, 20), st.integers(0, 2 ** 31))
def test_smallest_singular_value_matches_svd(n, seed):
    A = np.random.default_rng(seed).normal(size=(n + 3, n))
    assert abs(smallest_singular_value(A) - np.linalg.svd(A, compute_uv=False)[-1]) < 1e-8


def test_smallest_singular_value_trivial():
    assert abs(smallest_singular_value(np.eye(4)) - 1) < 1e-12
    A = np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
    assert smallest_singular_value(A) < 1e-10


def test_symmetric_smallest_eig():
    lam, v = symmetric_smallest_eig(np.diag([1.0, 2.0, 3.0]))
    assert lam == pytest.approx(1.0) and abs(abs(v[0]) - 1) < 1e-12
    # second-difference Dirichlet Laplacian on [0, pi]: analytic lowest eigenvalue
    n = 200
    h = np.pi / (n + 1)
    lam, _ = symmetric_smallest_eig((np.full(n, 2 / h ** 2), np.full(n - 1, -1 / h ** 2)))
    assert abs(lam - 4 / h ** 2 * np.sin(h / 2) ** 2) < 1e-9
    assert abs(lam - 1) < 1e-4
    with pytest.raises(ValueError):
        symmetric_smallest_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


@given(st.integers(1, 5))
def test_fd_matrix_exact_on_low_degree(p):
    x = np.linspace(0, 1, 11)
    D = fd_matrix(x, 1, 7)
    assert np.abs(D @ x ** p - p * x ** (p - 1)).max() < 1e-9


@given(st.integers(0, 10), st.floats(0, 6.28))
def test_fourier_derivative_and_interp(m, shift):
    n = 32
    x = 2 * np.pi * np.arange(n) / n
    f = np.cos(m * x + shift)
    assert np.abs(fourier_derivative(f) + m * np.sin(m * x + shift)).max() < 1e-10
    t = np.array([0.1, 2.0, 5.5])
    assert np.abs(fourier_interp_matrix(n, t) @ f - np.cos(m * t + shift)).max() < 1e-10


def test_barycentric_interpolation_exact_at_nodes():
    x = np.cos(np.pi * np.arange(9) / 8)
    M = barycentric_matrix(x, np.concatenate([x[:3], [0.123]]))
    assert np.allclose(M[:3], np.eye(9)[:3])
    assert abs(M[3] @ np.exp(x) - np.exp(0.123)) < 1e-7


@pytest.mark.parametrize("make", [lambda: LineOps.chebyshev(16, 1.5),
                                  lambda: LineOps.uniform(np.linspace(-1.5, 1.5, 41))])
def test_line_ops(make):
    ops = make()
    x = ops.x
    tol, dtol = (1e-10, 1e-8) if ops.kind == "chebyshev" else (1e-6, 1e-5)
    assert np.abs(ops.diff(np.sin(x)) - np.cos(x)).max() < dtol
    assert np.abs(ops.cumint(np.cos(x)) - np.sin(x)).max() < tol
    assert abs(ops.at_zero(np.exp(x)) - 1) < tol
    t = np.array([-0.3, 0.77])
    assert np.abs(ops.interp_matrix(t) @ np.sin(x) - np.sin(t)).max() < 1e-6


def test_uniform_line_needs_origin():
    with pytest.raises(ValueError):
        LineOps.uniform(np.linspace(0.1, 1, 10))
