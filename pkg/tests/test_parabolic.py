import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoshell.parabolic import (PlanarError, characterize_on_disk, cylinder_explicit_V,
                                detect_ruling, parabolic_isometry, verify_linear_in_t)
from isoshell.surface import RegimeError, cone, cylinder, plane, sphere


@pytest.mark.parametrize("surface, seed", [(cylinder(1.0, 2.0), (0.3, 0.1)),
                                           (cone(0.5, 0.5, 2.0), (0.3, 1.2))])
def test_rulings_are_straight(surface, seed):
    ch = detect_ruling(surface, seed, 0.3, 0.3, 7, 9)
    c = ch.check()
    assert c["ok"] and c["straightness"] < 1e-6 and c["unit_E"] < 1e-12


def test_cylinder_ruling_is_vertical():
    ch = detect_ruling(cylinder(1.0, 2.0), (0.0, 0.0), 0.2, 0.2, 5, 5)
    assert np.allclose(np.abs(ch.E[..., 2]), 1)


def test_regime_errors():
    with pytest.raises(PlanarError):
        detect_ruling(plane(), (0.0, 0.0))
    with pytest.raises(RegimeError):
        detect_ruling(sphere(1.0), (0.0, 0.0))
    with pytest.raises(ValueError):
        detect_ruling(cylinder(1.0, 2.0), (0.0, 0.0), n_s=4)


def test_cylinder_rigid_and_flexible_fields():
    z = np.linspace(-1, 1, 5)
    rot = cylinder_explicit_V(lambda t: 1 + 0 * t, lambda t: 0 * t, z, 32)
    # w0 = 1 is the rotation about the axis
    assert np.abs(rot.V[..., 2]).max() < 1e-12
    assert np.allclose(np.linalg.norm(rot.V, axis=-1), 1)
    tr = cylinder_explicit_V(lambda t: 0 * t, lambda t: 1 + 0 * t, z, 32)
    assert np.allclose(tr.V, [0, 0, 1])
    flex = cylinder_explicit_V(lambda t: np.cos(2 * t), lambda t: 0 * t, z, 32)
    assert np.allclose(flex.w, 2 * np.sin(2 * flex.theta)[:, None] * 0 + flex.w)
    for F in (rot, tr, flex):
        assert F.residual < 1e-10


@given(st.integers(0, 4), st.integers(0, 4), st.floats(-1, 1))
def test_cylinder_fields_are_linear_in_z(k0, k1, c):
    z = np.linspace(-1, 1, 9)
    F = cylinder_explicit_V(lambda t: np.cos(k0 * t) + c, lambda t: np.sin(k1 * t), z, 32)
    assert F.residual < 1e-9
    assert verify_linear_in_t(z, F.w) < 1e-9
    assert verify_linear_in_t(z, np.moveaxis(F.V, 1, -1)) < 1e-9


def test_parabolic_isometry_and_second_difference():
    ch = detect_ruling(cylinder(1.0, 2.0), (0.0, 0.0), 0.3, 0.3, 5, 7)
    w = parabolic_isometry(ch, np.cos, np.sin)
    assert w.shape == (5, 7) and verify_linear_in_t(ch, w) < 1e-10
    assert verify_linear_in_t(ch, w + ch.t ** 2) == pytest.approx(2.0)


def test_characterization_on_cylinder_disk():
    res = characterize_on_disk(cylinder(1.0, 2.0), (0.0, 0.0), 1.0,
                               lambda u, v: np.cos(2 * u) + v * np.sin(u), n_theta=32, n_t=14)
    assert res.boundary_error < 1e-8 and res.residual < 1e-2
