import numpy as np
import pytest
from scipy.integrate import quad_vec

from cqdyn.errors import DimensionError, ValidationError
from cqdyn.evolve import evolve_qq_spectral, run_scheme, time_grid
from cqdyn.model import OscillatorConfig, SystemSpec, coherent_vector, oscillator_system
from cqdyn.perturb import (
    PerturbationResult, delta_a1, delta_a2, entropy_bounds, epsilon0_series, first_order_rho,
    first_order_z, free_expectation_v, free_expectation_v_matrix, interaction_picture_v,
    perturbation_series,
)

from conftest import random_hermitian


@pytest.fixture
def generic(rng):
    d1, d2 = 3, 4
    spec = SystemSpec(np.diag(rng.normal(size=d1)), np.diag(rng.normal(size=d2)),
                      random_hermitian(rng, d1), random_hermitian(rng, d2), 0.0)
    u1 = rng.normal(size=d1) + 1j * rng.normal(size=d1)
    u2 = rng.normal(size=d2) + 1j * rng.normal(size=d2)
    return spec, u1 / np.linalg.norm(u1), u2 / np.linalg.norm(u2)


def test_interaction_picture_v(generic):
    from scipy.linalg import expm

    spec, _, _ = generic
    v1, v2 = interaction_picture_v(spec, 0.8)
    ref = expm(1j * spec.h1 * 0.8) @ spec.v1 @ expm(-1j * spec.h1 * 0.8)
    assert np.allclose(v1, ref)


def test_first_order_z_quadrature_oracle(generic):
    spec, u1, u2 = generic

    def integrand(s):
        a, b = interaction_picture_v(spec, s)
        return -1j * np.outer(a @ u1, b @ u2)

    ref, _ = quad_vec(integrand, 0.0, 2.5, epsabs=1e-12)
    z1 = first_order_z(spec, u1, u2, 2.5, quad_step=1e-3)
    assert np.max(np.abs(z1 - ref)) < 1e-6


def test_first_order_rho_quadrature_oracle(generic):
    spec, u1, u2 = generic

    def integrand(s):
        a, b = interaction_picture_v(spec, s)
        p = np.outer(u1, u1.conj())
        return -1j * np.vdot(u2, b @ u2) * (a @ p - p @ a)

    ref, _ = quad_vec(integrand, 0.0, 2.0, epsabs=1e-12)
    rho = first_order_rho(spec, u1, u2, 1, 2.0, quad_step=1e-3)
    assert np.max(np.abs(rho - ref)) < 1e-6
    assert np.allclose(rho, rho.conj().T) and abs(np.trace(rho)) < 1e-14


def _interaction_frame(spec, z, t):
    return np.exp(1j * spec.e1 * t)[:, None] * z * np.exp(1j * spec.e2 * t)[None, :]


def test_first_order_residual_is_second_order(generic):
    spec0, u1, u2 = generic
    t = 1.5
    res = []
    for lam in (0.02, 0.01):
        spec = SystemSpec(spec0.h1, spec0.h2, spec0.v1, spec0.v2, lam)
        z = evolve_qq_spectral(spec, np.outer(u1, u2), [0.0, t]).states[-1]
        zi = _interaction_frame(spec, z, t)
        z1 = first_order_z(spec, u1, u2, t, quad_step=1e-4)
        res.append(np.linalg.norm(zi - np.outer(u1, u2) - lam * z1))
    assert 3.6 < res[0] / res[1] < 4.4


def test_series_matches_pointwise(generic):
    spec, u1, u2 = generic
    times = np.array([0.0, 0.5, 1.25])
    pr = perturbation_series(spec, u1, u2, times, quad_step=1e-3)
    assert pr.z1_norm[0] == 0.0
    for i, t in enumerate(times[1:], 1):
        assert np.isclose(pr.z1_norm[i], np.linalg.norm(first_order_z(spec, u1, u2, t)), rtol=1e-10)
        r2 = first_order_rho(spec, u1, u2, 2, t)
        assert np.isclose(pr.rho2_norm[i], np.linalg.norm(r2), rtol=1e-8)
    assert np.all(pr.rho_min <= pr.rho1_norm)


def test_input_checks(generic):
    spec, u1, u2 = generic
    with pytest.raises(DimensionError):
        first_order_z(spec, u2, u2, 1.0)
    with pytest.raises(ValidationError):
        first_order_z(spec, 2 * u1, u2, 1.0)
    with pytest.raises(ValidationError):
        first_order_rho(spec, u1, u2, 3, 1.0)


def test_entropy_bounds_cap():
    pr = PerturbationResult(np.array([0.0, 1.0]), np.array([0.0, 100.0]), np.array([0.0, 50.0]),
                            np.array([0.0, 70.0]))
    s_lin, s_vn = entropy_bounds(pr, 0.1)
    assert np.allclose(s_lin, [0, 10]) and np.allclose(s_vn, [0, 20])
    s_lin, s_vn = entropy_bounds(pr, 0.1, d=4)
    assert np.isclose(s_lin[1], 0.75) and np.isclose(s_vn[1], np.log(4))


def test_free_expectation_closed_form_vs_matrices():
    cfg = OscillatorConfig(lam=0.0, zeta1=3.0, zeta2=1.0, phi1=0.2, n_max=60)
    spec = oscillator_system(cfg)
    u = coherent_vector(cfg.alpha, 61)
    t = np.linspace(0, 5, 11)
    assert np.allclose(free_expectation_v(cfg, t), free_expectation_v_matrix(spec, u, t), rtol=1e-9)


def test_epsilon0_closed_form_matches_moments():
    cfg = OscillatorConfig(lam=0.0, zeta1=2.5, zeta2=1.0)
    t = np.linspace(0, 6, 37)
    a = epsilon0_series(cfg, t)
    b = epsilon0_series(cfg, t, closed_form=False)
    assert np.allclose(a, b, atol=1e-12)
    with pytest.raises(ValidationError):
        epsilon0_series(cfg.replace(nu=3), t, closed_form=True)


def test_delta_observables(small_cfg):
    times = time_grid(3.0, 0.1)
    qq = run_scheme(small_cfg, "qq-spectral", times)
    cq = run_scheme(small_cfg, "cq", times)
    d2 = delta_a2(qq, cq)
    # q2 starts at 0 for phi2 = pi/2: that point is masked
    assert np.isnan(d2[0]) and np.all(np.isfinite(d2[1:]) | np.isnan(d2[1:]))
    assert np.nanmax(np.abs(delta_a1(qq, cq, "n_occ"))) < 0.1
    with pytest.raises(ValidationError):
        delta_a2(qq, run_scheme(small_cfg, "cq", time_grid(2.0, 0.1)))
