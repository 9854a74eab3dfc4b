import numpy as np
import pytest

from cqdyn.errors import NoRootError, UnsupportedError, ValidationError
from cqdyn.model import OscillatorConfig, coherent_vector, q_power
from cqdyn.scramble import (
    coherence_measures, crude_estimate, f_lin, integrands, interaction_energy_avg,
    mathieu_parameters, resonance_predictor, scramble_report, scrambling_time_lin,
    scrambling_time_vn,
)


@pytest.fixture
def cfg():
    return OscillatorConfig(lam=0.01, zeta1=12.0, zeta2=2.0)


def test_integrands_against_matrices():
    cfg = OscillatorConfig(lam=0.01, zeta1=3.0, zeta2=2.0, phi1=0.0, phi2=0.0, n_max=80)
    den, n1, n2 = integrands(cfg, 0.0, form="general")
    v = q_power(81, 2)
    w = coherent_vector(cfg.alpha, 81)
    z = coherent_vector(cfg.beta, 81)
    e1, e11 = np.vdot(w, v @ w).real, np.vdot(w, v @ v @ w).real
    e2, e22 = np.vdot(z, v @ z).real, np.vdot(z, v @ v @ z).real
    assert np.isclose(den, np.sqrt(e11 * e22), rtol=1e-10)
    assert np.isclose(n1, np.sqrt((e11 - e1**2) * e22), rtol=1e-10)
    assert np.isclose(n2, np.sqrt(e11 * (e22 - e2**2)), rtol=1e-10)
    # the nu = 2 closed form is the general variance scaled by 1/sqrt(2)
    _, p1, p2 = integrands(cfg, 0.0, form="closed")
    assert np.isclose(p1, n1 / np.sqrt(2)) and np.isclose(p2, n2 / np.sqrt(2))


def test_form_checks(cfg):
    with pytest.raises(ValidationError):
        integrands(cfg, 0.0, form="other")
    with pytest.raises(ValidationError):
        integrands(cfg.replace(nu=3), 0.0, form="closed")


def test_coherence_measures_bounded(cfg):
    for t in (0.0, 1.0, 10.0):
        n1, n2 = coherence_measures(cfg, t)
        assert 0 <= n1 <= 1 and 0 <= n2 <= 1
    assert interaction_energy_avg(cfg, 5.0) > 0


def test_t_lin_is_a_root(cfg):
    t = scrambling_time_lin(cfg)
    assert abs(f_lin(cfg, t)) < 1e-6
    assert f_lin(cfg, 0.99 * t) < 0


def test_t_lin_scales_inversely_with_lambda(cfg):
    r = scrambling_time_lin(cfg) / scrambling_time_lin(cfg.replace(lam=0.02))
    assert 1.8 <= r <= 2.2


def test_general_form_scrambles_sooner(cfg):
    assert scrambling_time_lin(cfg, form="general") < scrambling_time_lin(cfg)


def test_t_vn_monotone_in_d(cfg):
    assert scrambling_time_vn(cfg, 1) == 0.0
    assert scrambling_time_vn(cfg, 8) < scrambling_time_vn(cfg, 64)
    with pytest.raises(ValidationError):
        scrambling_time_vn(cfg, 2.5)


def test_zero_coupling_has_no_root(cfg):
    with pytest.raises(NoRootError) as info:
        scrambling_time_lin(cfg.replace(lam=0.0))
    assert info.value.f_lo == -1.0 and info.value.f_hi == -1.0
    with pytest.raises(NoRootError):
        scrambling_time_vn(cfg.replace(lam=0.0), 4)


def test_weak_coupling_root_far_out(cfg):
    c = cfg.replace(lam=1e-5)
    t = scrambling_time_lin(c)
    assert t > 1e3 and abs(f_lin(c, t, quad_step=0.01)) < 1e-4


def test_crude_estimate(cfg):
    a, b = abs(cfg.alpha), abs(cfg.beta)
    assert np.isclose(crude_estimate(cfg), a / (0.01 * a * a * b * b))
    assert crude_estimate(cfg.replace(zeta2=0.0)) == float("inf")


def test_resonance_predictor():
    cfg = OscillatorConfig(lam=0.02 / 9, sigma=0.001, zeta1=9.0, zeta2=0.01)
    pred = resonance_predictor(cfg)
    assert pred.resonant
    assert np.isclose(pred.tau_res, 1 / (abs(cfg.alpha) ** 2 * cfg.lam))
    assert np.isclose(pred.ratio, 3.0 / 0.01)
    assert not resonance_predictor(cfg.replace(sigma=0.1)).resonant
    with pytest.raises(UnsupportedError):
        resonance_predictor(cfg.replace(nu=3))


def test_mathieu_parameters():
    cfg = OscillatorConfig(lam=0.01, zeta1=9.0, zeta2=0.01)
    m = mathieu_parameters(cfg)
    assert m.omega == 2.0 and np.isclose(m.h, 0.18) and m.small_h
    assert not mathieu_parameters(cfg.replace(lam=0.1)).small_h
    assert isinstance(m.omega, float) and isinstance(m.small_h, bool)


def test_report(cfg):
    rep = scramble_report(cfg, d=36, n_series=50)
    assert abs(rep.residual) < 1e-6
    assert rep.times.size == 51 and np.isclose(rep.times[-1], 2 * rep.t_lin)
    assert np.all((rep.n1_series >= 0) & (rep.n1_series <= 1))
    assert rep.t_vn > 0 and rep.mathieu is not None and not rep.errors


def test_report_records_failures(cfg):
    rep = scramble_report(cfg.replace(lam=0.0), d=4)
    assert rep.t_lin is None and "t_lin" in rep.errors and "t_vn" in rep.errors
    rep = scramble_report(cfg.replace(nu=3))
    assert "resonance" in rep.errors
