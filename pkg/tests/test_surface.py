import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoshell.surface import (AmbientField, catalog, curvature_jet, cylinder, graph,
                              hyperboloid, log_revolution, parse_expr, plane, shape_at, sphere)

coords = st.floats(-0.8, 0.8)


@given(coords, coords, st.floats(0.5, 3.0))
def test_sphere_curvature_and_umbilic(u, v, r):
    geo = sphere(r).local(np.array([u]), np.array([v]))
    assert abs(geo.kappa[0] - 1 / r ** 2) < 1e-10
    # Pi = g / r with the outward normal
    assert np.abs(geo.Pi[0] - geo.g[0] / r).max() < 1e-10
    assert abs(np.linalg.norm(geo.N[0]) - 1) < 1e-12


@given(st.floats(0, 6.2), st.floats(-1, 1))
def test_cylinder_flat_with_nonzero_pi(u, v):
    geo = cylinder(1.0, 2.0).local(np.array([u]), np.array([v]))
    assert abs(geo.kappa[0]) < 1e-12
    assert np.abs(geo.Pi[0]).max() > 0.5


@given(st.floats(1.1, 3.0), st.floats(0, 6.2))
def test_hyperboloid_curvature(r, th):
    # x^2 + y^2 - z^2 = 1 has K = -1 / (x^2 + y^2 + z^2)^2
    k = hyperboloid().local(np.array([r]), np.array([th])).kappa[0]
    assert abs(k + 1 / (2 * r * r - 1) ** 2) < 1e-10


def test_plane_is_flat():
    geo = plane().local(np.array([0.3]), np.array([-0.2]))
    assert np.abs(geo.Pi).max() == 0 and geo.kappa[0] == 0


def test_sphere_curvature_jet_vanishes():
    cj = curvature_jet(sphere(1.0), np.array([0.2, -0.4]), np.array([0.1, 0.3]))
    assert np.abs(cj.grad).max() < 1e-10 and np.abs(cj.hess_frame).max() < 1e-9


def test_log_revolution_gradient_is_radial():
    cj = curvature_jet(log_revolution(), np.array([2.0]), np.array([0.7]))
    # tangential direction of the chart at constant r is e2 when e1 is along d/dr
    assert abs(cj.grad_frame[0, 1]) < 1e-8 and abs(cj.grad_frame[0, 0]) > 1e-3


def test_graph_curvature_jet_against_central_differences():
    s = graph("x1**2/2 + x2**2/3 + 0.1*x1**3 + 0.05*x1*x2**2")
    u0, v0, h = 0.21, -0.13, 1e-4
    geo = s.local(np.array([u0]), np.array([v0]))
    k = lambda a, b: s.local(np.array([a]), np.array([b])).kappa[0]
    fd = [(k(u0 + h, v0) - k(u0 - h, v0)) / (2 * h), (k(u0, v0 + h) - k(u0, v0 - h)) / (2 * h)]
    assert np.abs(geo.dkappa[0] - fd).max() < 1e-7


def test_graph_curvature_formula():
    # kappa = eta^4 (h11 h22 - h12^2) with eta = 1 / sqrt(1 + |grad h|^2)
    s = graph("x1**2/2 + x1*x2 + x2**2")
    u, v = 0.4, -0.2
    h1, h2 = u + v, u + 2 * v
    expected = (1 * 2 - 1) / (1 + h1 ** 2 + h2 ** 2) ** 2
    assert abs(s.local(np.array([u]), np.array([v])).kappa[0] - expected) < 1e-12


def test_shape_data_and_ambient_field():
    sd = shape_at(sphere(2.0), np.array([0.1]), np.array([0.2]))
    assert sd.T0.shape == (1, 2, 2)
    F = AmbientField(["u", "v", "u*v"])
    assert np.allclose(F(np.array([2.0]), np.array([3.0])), [[2, 3, 6]])


def test_catalog_and_parsing():
    assert catalog("sphere", 2.0).params["r"] == 2.0
    with pytest.raises(KeyError):
        catalog("torus")
    with pytest.raises(ValueError):
        sphere(-1.0)
    th = parse_expr("cos2θ + 3theta", names=("theta",))
    assert str(th) == "3*theta + cos(2*theta)"
