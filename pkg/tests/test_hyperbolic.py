import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isoshell.hyperbolic import (CauchyData, CornerError, CoverageError, HyperbolicAssumptionError,
                                 HyperbolicChart, StabilityError, build_nonlocal, check_assumptions,
                                 constant_oracle, energy_norm, evolve_cauchy, evolve_with_sides,
                                 growth_fit, nonlocal_polar, pde_residual, restrict_periodic,
                                 reverse)
from isoshell.surface import hyperboloid, sphere

HYP = hyperboloid()


def test_wave_speed_on_hyperboloid():
    ch = check_assumptions(HYP, 1.3, 1.0)
    r = 1.3 + ch.s[:, None]
    assert np.allclose(ch.coef["a"], 1 / (r ** 2 * (r ** 2 - 1)) + 0 * ch.theta[None, :])


def test_assumptions_fail_off_regime():
    with pytest.raises(HyperbolicAssumptionError) as e:
        check_assumptions(sphere(1.0), 0.2, 0.5)
    assert e.value.nodes


def test_constant_coefficients_match_oracle():
    c = HyperbolicChart.constant(2.0, 1.0, 32)
    d = CauchyData.from_functions(lambda t: np.cos(3 * t), lambda t: 0 * t, 32)
    errs = []
    for n in (80, 160):
        ev = evolve_cauchy(c, d, 1.0, n, mode="none")
        errs.append(np.abs(ev.w[:len(ev.s)] - constant_oracle(2.0, 3, ev.s, ev.theta)).max())
    assert 3.4 < errs[0] / errs[1] < 4.6
    assert pde_residual(c, ev) < 5e-3


@settings(max_examples=10)
@given(st.integers(0, 5), st.floats(-1, 1), st.sampled_from(["none", "local"]))
def test_evolution_is_reversible(k, amp, mode):
    ch = check_assumptions(HYP, 1.3, 0.5, n_theta=16)
    d = CauchyData.from_functions(lambda t: np.cos(k * t) + amp, lambda t: amp * np.sin(t), 16)
    ev = evolve_cauchy(ch, d, 0.5, 40, mode=mode)
    w0, w1 = reverse(ch, ev)
    assert np.abs(w0 - d.w0).max() < 1e-8 and np.abs(w1 - d.w1).max() < 1e-6


def test_zero_data_stays_zero():
    ch = check_assumptions(HYP, 1.3, 0.5, n_theta=16)
    ev = evolve_cauchy(ch, CauchyData(np.zeros(16), np.zeros(16)), 0.5, 20)
    assert np.abs(ev.w).max() == 0
    assert growth_fit(ev) == (1.0, 0.0)


def test_input_validation():
    with pytest.raises(ValueError):
        CauchyData.from_functions(np.cos, lambda t: 1 + 0 * t, 16)
    d = CauchyData.from_functions(np.cos, lambda t: 1 + 0 * t, 16, remove_mean=True)
    assert abs(d.w1.mean()) < 1e-15
    with pytest.raises(ValueError):
        HyperbolicChart.constant(-1.0)
    ch = HyperbolicChart.constant(1.0, 1.0, 32)
    with pytest.raises(StabilityError):
        evolve_cauchy(ch, CauchyData(np.ones(32), np.zeros(32)), 1.0, 4)
    with pytest.raises(ValueError):
        evolve_cauchy(ch, CauchyData(np.ones(32), np.zeros(32)), 1.0, 40, mode="full")
    with pytest.raises(CornerError):
        evolve_with_sides(ch, np.cos, lambda t: 0 * t, lambda s: 0 * s, lambda s: 0 * s,
                          1.0, 1.0, 40)


def test_sector_matches_periodic_run():
    ch = check_assumptions(HYP, 1.3, 0.5, n_theta=64)
    d = CauchyData.from_functions(lambda t: np.cos(2 * t) + 0.5 * np.sin(t), lambda t: np.cos(t), 64)
    per = evolve_cauchy(ch, d, 0.5, 200)
    th0 = 1.0
    w0, w1, h1, h2 = restrict_periodic(per, th0)
    sec = evolve_with_sides(ch, w0, w1, h1, h2, th0, 0.5, 200, n_theta=81)
    ref = np.fft.irfft(np.fft.rfft(per.final), 64 * 8)
    from isoshell.numerics import fourier_interp_matrix
    ref = fourier_interp_matrix(64, sec.theta) @ per.final
    assert np.abs(sec.final - ref).max() < 1e-3
    assert np.all(np.isfinite(energy_norm(sec)))


@pytest.fixture(scope="module")
def sector_term():
    return build_nonlocal(HYP, 1.3, 1.0, (1.8, 0.4), (0.0, 0.8), n_s=8, n_theta=7)


def test_nonlocal_term_two_routes(sector_term):
    rt = sector_term
    w_fn = lambda u, v: np.sin(u) + np.cos(2 * v) * u
    S, T = np.meshgrid(rt.s_nodes, rt.theta_nodes, indexing="ij")
    ray = rt.apply(w_fn(1.3 + S, T))
    pts = np.stack([1.3 + S.ravel(), T.ravel()], -1)
    polar = nonlocal_polar(HYP, (1.8, 0.4), w_fn, pts, 1.1 * rt.diagnostics["max_t"], 48, 24)
    assert np.abs(ray.ravel() - polar).max() < 1e-3 * (1 + np.abs(polar).max())


def test_full_mode_runs_and_converges(sector_term):
    ch = check_assumptions(HYP, 1.3, 1.0)
    ev = evolve_with_sides(ch, lambda t: np.cos(2 * t) + 0.3, lambda t: np.sin(t),
                           lambda s: 1.3 + 0 * s, lambda s: np.cos(1.6) + 0.3 + s * np.sin(0.8),
                           0.8, 1.0, 100, mode="full", ray_term=sector_term)
    assert ev.picard_iterations >= 1 and np.isfinite(ev.final).all()


def test_annulus_needs_sector():
    with pytest.raises(CoverageError):
        build_nonlocal(HYP, 1.3, 1.0, (1.8, 0.4), None, n_s=6, n_theta=8)
