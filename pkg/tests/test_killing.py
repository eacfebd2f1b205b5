import numpy as np
import pytest

from isoshell.geodesic import GridSpec, PolarGrid
from isoshell.killing import (ConstantCurvatureError, FrameVectorField, KillingIC,
                              ObstructionError, hodge_laplacian, killing_candidate_nonconstant,
                              killing_dimension, killing_from_ic, killing_residual,
                              lemma_hessian_residual, lemma_residual, nonconstant_obstructions)
from isoshell.surface import graph, log_revolution, plane, polar_revolution, sphere

PERTURBED = "x1**2/2+x2**2/2+0.1*x1**3"


@pytest.fixture(scope="module")
def cap():
    return PolarGrid(sphere(1.0), (0, 0), GridSpec(16, 1.2, 24))


@pytest.fixture(scope="module")
def disk():
    return PolarGrid(plane(), (0, 0), GridSpec(16, 1.0, 20))


@pytest.mark.parametrize("ic", [KillingIC((1, 0), 0), KillingIC((0, 1), 0), KillingIC((0, 0), 1),
                                KillingIC((0.3, -0.2), 0.7)])
def test_constant_curvature_fields_are_killing(cap, disk, ic):
    for g in (cap, disk):
        fld = killing_from_ic(g, ic)
        assert killing_residual(g.surface, fld) <= 1e-6
        assert lemma_residual(fld) <= 1e-10


def test_plane_rotation_is_the_rigid_rotation(disk):
    W = killing_from_ic(disk, KillingIC((0, 0), 1.0)).ambient()
    rot = np.stack([-disk.X[..., 1], disk.X[..., 0], 0 * disk.X[..., 0]], -1)
    assert np.abs(W - rot).max() < 1e-10


def test_non_killing_field_has_large_defect(disk):
    # phi = t is not constant along rays
    fld = FrameVectorField(disk, disk.t[None, :] * np.ones(disk.shape), np.zeros(disk.shape))
    assert killing_residual(disk.surface, fld) >= 0.5


def test_dimensions_small_cases(cap, disk):
    assert killing_dimension(cap).dim == 3
    assert killing_dimension(disk).dim == 3
    g = PolarGrid(graph(PERTURBED), (0, 0), GridSpec(16, 0.5, 20))
    r = killing_dimension(g)
    assert r.dim == 0 and r.refined_dim == 0


def test_dimension_rejects_truncated_grid():
    from isoshell.surface import cylinder
    g = PolarGrid(cylinder(1.0, 0.5), (0, 0), GridSpec(8, 1.0, 10))
    with pytest.raises(ValueError):
        killing_dimension(g)


def test_obstructions():
    uv = np.array([[1.5, 0.2], [1.8, 1.0]])
    obs = nonconstant_obstructions(log_revolution(), uv)
    assert obs.c1_rel <= 1e-6 and obs.c2_rel <= 1e-6
    obs = nonconstant_obstructions(graph(PERTURBED), np.array([[0.3, 0.1], [0.2, -0.2]]))
    assert max(obs.c1_rel, obs.c2_rel) > 1e-3
    with pytest.raises(ConstantCurvatureError):
        nonconstant_obstructions(sphere(1.0), uv)


@pytest.mark.parametrize("surf, origin", [(log_revolution(), (1.8, 0.3)),
                                          (polar_revolution("r**2/2 + r**4/4"), (1.0, 0.5))])
def test_revolution_candidate_is_rotation(surf, origin):
    g = PolarGrid(surf, origin, GridSpec(16, 0.15, 20))
    r = killing_candidate_nonconstant(g)
    assert r.residual <= 1e-4
    assert lemma_residual(r.field) <= 1e-5
    assert lemma_hessian_residual(r.field) <= 1e-5
    W = r.field.ambient()
    rot = np.stack([-g.X[..., 1], g.X[..., 0], 0 * g.X[..., 0]], -1)
    c = (W * rot).sum() / (rot * rot).sum()
    assert np.abs(W - c * rot).max() <= 1e-6 * np.abs(W).max()


def test_candidate_rejects_critical_point_and_generic_graph():
    # the critical circle of kappa on the log revolution is at r ~ 1.5347
    g = PolarGrid(log_revolution(), (1.5347, 0.0), GridSpec(16, 0.1, 12))
    with pytest.raises(ObstructionError):
        killing_candidate_nonconstant(g)
    g = PolarGrid(graph(PERTURBED), (0.3, 0), GridSpec(16, 0.2, 20))
    with pytest.raises(ObstructionError):
        killing_candidate_nonconstant(g)


def test_hodge_laplacian_of_sphere_killing_field():
    # a Killing field on a surface satisfies Delta_H W = 2 kappa W
    s = sphere(1.0)
    a = np.array([0.3, -0.2, 0.7])
    uv = np.array([[0.2, 0.1], [-0.3, 0.25]])
    lap, W = hodge_laplacian(s, lambda p: np.cross(a, s.position(p[:, 0], p[:, 1])), uv)
    assert np.abs(lap - 2 * W).max() < 1e-4
