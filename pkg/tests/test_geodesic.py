import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoshell.geodesic import (GridSpec, PolarGrid, build_polar_grid, phi_kernels, shoot_ray,
                               wronskian)
from isoshell.surface import cylinder, graph, plane, sphere


@given(st.floats(0, 2 * np.pi))
def test_jacobi_sphere_and_plane(theta):
    ray = shoot_ray(sphere(1.0), (0.0, 0.0), theta, 3.0, n_t=60)
    assert np.abs(ray.f - np.sin(ray.t)).max() < 1e-8
    assert np.abs(ray.Phi0 - np.cos(ray.t)).max() < 1e-8
    ray = shoot_ray(plane(), (0.0, 0.0), theta, 2.0, n_t=20)
    assert np.abs(ray.f - ray.t).max() < 1e-12
    assert np.abs(ray.Phi0 - 1).max() < 1e-12


def test_jacobi_sphere_radius_two():
    # f = sin(sqrt(kappa) t) / sqrt(kappa) with kappa = 1/4
    ray = shoot_ray(sphere(2.0), (0.1, 0.0), 0.4, 4.0, n_t=40)
    assert np.abs(ray.f - 2 * np.sin(ray.t / 2)).max() < 1e-8


def test_phi_kernels_constant_curvature():
    ray = shoot_ray(sphere(1.0), (0.0, 0.0), 0.3, 2.0, n_t=40)
    P0, P = phi_kernels(ray, 0.5)
    assert np.abs(P0 - np.cos(ray.t)).max() < 1e-8
    assert np.abs(P - np.sin(ray.t - 0.5)).max() < 1e-7
    ray = shoot_ray(plane(), (0.0, 0.0), 0.3, 2.0, n_t=20)
    assert np.abs(phi_kernels(ray, 0.5)[1] - (ray.t - 0.5)).max() < 1e-12
    with pytest.raises(ValueError):
        phi_kernels(ray, 3.0)


def test_wronskian_constant_on_generic_ray():
    s = graph("x1**2/2 + x2**2/3 + 0.1*x1**3 + 0.05*x1*x2**2")
    ray = shoot_ray(s, (0.1, 0.0), 1.1, 0.8, n_t=40)
    W = wronskian(ray)
    assert np.abs(W - W[0]).max() < 1e-6 and abs(W[0] - 1) < 1e-6


def test_gridspec_validation():
    for kw in ({"n_theta": 7}, {"t_max": 0.0}, {"n_t": 1}, {"kind": "x"}, {"ode_step": 0}):
        with pytest.raises(ValueError):
            GridSpec(**kw)


def test_grid_frame_orthonormal_and_normal():
    g = build_polar_grid(sphere(1.0), (0.0, 0.0), 16, 1.0, n_t=10)
    dot = lambda a, b: np.einsum("...k,...k->...", a, b)
    assert np.abs(dot(g.T, g.E)).max() < 1e-12
    assert np.abs(dot(g.T, g.T) - 1).max() < 1e-12
    assert np.abs(dot(g.T, g.N)).max() < 1e-12
    # on the unit sphere N is the position
    assert np.abs(g.N - g.X).max() < 1e-12


@given(st.floats(0.05, 0.85), st.floats(0, 2 * np.pi))
def test_locate_round_trip(t, th):
    g = _cap()
    X = np.array([np.sin(t) * np.cos(th), np.sin(t) * np.sin(th), np.cos(t)]) @ np.column_stack(
        [g.e1, g.e2, [0, 0, 1]]).T
    tt, tth, ok = g.locate(X[None])
    assert ok[0] and abs(tt[0] - t) < 1e-8
    assert abs(np.angle(np.exp(1j * (tth[0] - th)))) < 1e-7


_CAP = {}


def _cap():
    if "g" not in _CAP:
        _CAP["g"] = build_polar_grid(sphere(1.0), (0.0, 0.0), 32, 1.0, n_t=16, kind="chebyshev")
    return _CAP["g"]


def test_interpolate_and_integrate_cap():
    g = _cap()
    q = g.X[..., 2]                          # cos t
    t = np.array([0.3, 0.7])
    th = np.array([1.0, 4.0])
    assert np.abs(g.interpolate(q, 0, t, th) - np.cos(t)).max() < 1e-10
    # area of the cap of radius 1: 2 pi (1 - cos 1)
    assert abs(g.integrate(np.ones(g.shape)) - 2 * np.pi * (1 - np.cos(1.0))) < 1e-9
    assert abs(g.origin_value(q) - 1) < 1e-12


def test_cylinder_rays_cross():
    g = PolarGrid(cylinder(1.0, 5.0), (0.0, 0.0), GridSpec(16, 4.0, 80))
    assert len(g.crossings()) > 0
    small = PolarGrid(cylinder(1.0, 5.0), (0.0, 0.0), GridSpec(16, 1.0, 20))
    assert small.crossings() == []


def test_rays_leaving_the_chart_are_flagged():
    g = PolarGrid(cylinder(1.0, 0.5), (0.0, 0.0), GridSpec(8, 1.0, 10))
    assert not g.complete
    assert np.isfinite(g.exit_t).any()


def test_grid_csv(tmp_path):
    g = build_polar_grid(plane(), (0.0, 0.0), 8, 1.0, n_t=4)
    p = tmp_path / "g.csv"
    g.to_csv(p, {"surface": "plane"})
    lines = p.read_text().splitlines()
    assert lines[0] == "# surface=plane"
    rows = list(csv.reader(lines[1:]))
    assert rows[0][:2] == ["theta", "t"] and len(rows) == 1 + 8 * 5
