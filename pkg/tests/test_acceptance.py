"""Acceptance criteria 1-11.

Each test records a single PASS/FAIL line; the lines are printed together in
the "acceptance criteria" section at the end of the pytest run.  Criteria 7
and 10 are marked slow (deselect with -m "not slow").
"""

import time

import numpy as np
import pytest

from cqdyn.analysis import agreement_horizon, entropy_energy_fit, relative_error, resonance_envelope_rate
from cqdyn.entanglement import entropies, entropy_time_average
from cqdyn.evolve import (
    evolve_qq_direct, evolve_qq_spectral, run_scheme, time_grid, truncation_monitor,
)
from cqdyn.model import OscillatorConfig, coherent_vector, oscillator_system, qq_initial_state
from cqdyn.perturb import entropy_bounds, perturbation_series
from cqdyn.scramble import crude_estimate, scrambling_time_lin
from cqdyn.wavepacket import (
    Potential1D, WavepacketState, evolve_wavepacket, harmonic_sigma, residual_norm,
)
from cqdyn.wigner import default_axis, wigner_distribution, wigner_matrix, wigner_matrix_quadrature

LAMBDAS = (0.001, 0.01, 0.1)
HORIZON = 6 * np.pi


def base_cfg(lam):
    return OscillatorConfig(lam=lam, sigma=0.0, nu=2, zeta1=12.0, zeta2=2.0, n_max=35)


def verdict(record_property, n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    record_property("acceptance", line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def criterion1_runs():
    """Every scheme on the three base configs, with per-config wall time."""
    times = time_grid(HORIZON, 0.05)
    out = {}
    for lam in LAMBDAS:
        cfg = base_cfg(lam)
        t0 = time.perf_counter()
        out[lam] = {s: run_scheme(cfg, s, times) for s in ("qq-spectral", "qq-direct", "cq", "cc")}
        out[lam]["wall"] = time.perf_counter() - t0
    return out


@pytest.mark.criterion(1)
def test_criterion_1_conservation(criterion1_runs, record_property):
    worst = {"energy": 0.0, "spectral_norm": 0.0, "direct_norm": 0.0, "wall": 0.0}
    for lam, runs in criterion1_runs.items():
        for s in ("qq-spectral", "qq-direct", "cq", "cc"):
            worst["energy"] = max(worst["energy"], runs[s].energy_drift)
        worst["spectral_norm"] = max(worst["spectral_norm"], runs["qq-spectral"].max_norm_drift)
        worst["direct_norm"] = max(worst["direct_norm"], runs["qq-direct"].max_norm_drift)
        worst["wall"] = max(worst["wall"], runs["wall"])
    ok = (worst["energy"] < 1e-6 and worst["spectral_norm"] < 1e-9 and worst["direct_norm"] < 1e-6
          and worst["wall"] <= 120)
    verdict(record_property, 1, ok,
            f"max energy drift {worst['energy']:.2e} (<1e-6), norm drift spectral "
            f"{worst['spectral_norm']:.2e} (<1e-9) direct {worst['direct_norm']:.2e} (<1e-6), "
            f"slowest config {worst['wall']:.1f}s (<=120s)")


@pytest.mark.criterion(2)
def test_criterion_2_free_evolution(record_property):
    err, s_max = 0.0, 0.0
    times = time_grid(HORIZON, 0.05)
    for sigma in (0.0, 0.2):
        cfg = base_cfg(0.0).replace(sigma=sigma)
        tr = run_scheme(cfg, "qq-spectral", times, store_states=False)
        w = 1 - sigma
        q2 = np.sqrt(2 * cfg.zeta2 / w) * np.cos(w * times - cfg.phi2)
        err = max(err, float(np.max(np.abs(tr["q2"] - q2))))
        s_max = max(s_max, float(np.max(tr["S_vn"])))
    verdict(record_property, 2, err < 1e-6 and s_max < 1e-8,
            f"max |<q2> - free solution| {err:.2e} (<1e-6), max S_VN {s_max:.2e} (<1e-8)")


@pytest.mark.criterion(3)
def test_criterion_3_cross_oracle(criterion1_runs, record_property):
    worst = max(float(np.max(np.abs(r["qq-spectral"].states - r["qq-direct"].states)))
                for r in criterion1_runs.values())
    verdict(record_property, 3, worst < 1e-6, f"max per-entry |dz| spectral vs direct {worst:.2e} (<1e-6)")


@pytest.mark.criterion(4)
def test_criterion_4_entropy_bounds(record_property):
    lam = 1e-3
    cfg = base_cfg(lam)
    t_lin = scrambling_time_lin(cfg)
    times = np.linspace(0.0, t_lin, 801)
    tr = evolve_qq_spectral(oscillator_system(cfg), qq_initial_state(cfg), times, store_states=False)
    d1, d2 = cfg.dims
    pr = perturbation_series(oscillator_system(cfg), coherent_vector(cfg.alpha, d1),
                             coherent_vector(cfg.beta, d2), times)
    lin_bound, vn_bound = entropy_bounds(pr, lam)
    m_vn = float(np.min(vn_bound + 10 * lam**2 - tr["S_vn"]))
    m_lin = float(np.min(lin_bound + 10 * lam**2 - tr["S_lin"]))
    verdict(record_property, 4, m_vn >= 0 and m_lin >= 0,
            f"t_LIN={t_lin:.2f}, min bound margin S_VN {m_vn:.2e}, S_LIN {m_lin:.2e} (both >= 0)")


FAMILY = [(12, 2), (16, 2), (8, 2), (4, 4), (8, 4), (16, 4), (8, 8)]


@pytest.mark.criterion(5)
def test_criterion_5_scrambling_calibration(record_property):
    s_vals, ratios, trunc_ok = [], [], True
    for z1, z2 in FAMILY:
        for lam in LAMBDAS:
            cfg = OscillatorConfig(lam=lam, zeta1=z1, zeta2=z2, n_max=35)
            t_lin = scrambling_time_lin(cfg)
            times = np.linspace(0.0, t_lin, 51)
            tr = run_scheme(cfg, "qq-spectral", times, store_states=False)
            trunc_ok &= truncation_monitor(tr, cfg.n_max).passed
            s_vals.append(float(tr["S_lin"][-1]))
            if z1 >= 4 and z2 >= 4:
                ratios.append(crude_estimate(cfg) / t_lin)
    s_ok = all(0.01 <= s <= 0.5 for s in s_vals)
    r_ok = all(0.2 <= r <= 5 for r in ratios)
    verdict(record_property, 5, s_ok and r_ok and trunc_ok,
            f"S_LIN(tau_LIN) in [{min(s_vals):.3f}, {max(s_vals):.3f}] (need [0.01, 0.5]) over "
            f"{len(s_vals)} configs; crude/t_LIN in [{min(ratios):.2f}, {max(ratios):.2f}] "
            f"(need [0.2, 5]); truncation ok: {trunc_ok}")


@pytest.mark.criterion(6)
def test_criterion_6_cq_superiority(record_property):
    times = time_grid(HORIZON, 0.01)
    eps = {}
    for lam in (0.01, 0.005):
        cfg = OscillatorConfig(lam=lam, sigma=0.0, zeta1=16.0, zeta2=2.0, n_max=35)
        qq = run_scheme(cfg, "qq-spectral", times, store_states=False)
        eps[lam] = {s: relative_error(run_scheme(cfg, s, times, store_states=False), qq) for s in ("cq", "cc")}
    ratio = eps[0.005]["cc"] / eps[0.01]["cc"]
    ok = eps[0.01]["cq"] < eps[0.01]["cc"] and 0.4 <= ratio <= 0.6
    verdict(record_property, 6, ok,
            f"eps_CQ={eps[0.01]['cq']:.4f} < eps_CC={eps[0.01]['cc']:.4f}; "
            f"eps_CC(lam/2)/eps_CC(lam)={ratio:.3f} (need [0.4, 0.6])")


@pytest.mark.slow
@pytest.mark.criterion(7)
def test_criterion_7_parametric_resonance(record_property):
    a2l = 0.02
    times = time_grid(400.0, 0.1)
    horizons, rates = [], []
    for z1 in (9.0, 36.0, 81.0):
        cfg = OscillatorConfig(lam=a2l / z1, sigma=0.0, zeta1=z1, zeta2=0.01, n_max=136, n_max2=21)
        cc = run_scheme(cfg, "cc", times, step=0.01)
        qq = run_scheme(cfg, "qq-spectral", times, store_states=False)
        rates.append(resonance_envelope_rate(cc))
        horizons.append(agreement_horizon(qq, cc))
    rate_ok = all(abs(r - a2l) <= 0.2 * a2l for r in rates)
    mono = bool(np.all(np.diff(horizons) > 0))
    verdict(record_property, 7, rate_ok and mono,
            f"CC envelope rates {', '.join(f'{r:.2e}' for r in rates)} vs |alpha|^2 lam = {a2l} "
            f"(within 20%: {rate_ok}); agreement horizons {', '.join(f'{h:.1f}' for h in horizons)} "
            f"for zeta1 = 9, 36, 81 (increasing: {mono})")


@pytest.mark.criterion(8)
def test_criterion_8_wigner(record_property):
    err = 0.0
    for q, p in [(0.0, 0.0), (0.9, -0.4), (-1.7, 2.2), (2.5, 1.0), (-3.0, -3.0)]:
        err = max(err, float(np.max(np.abs(wigner_matrix(16, q, p) - wigner_matrix_quadrature(16, q, p)))))
    beta = np.sqrt(2.0) * np.exp(0.7j)
    z = coherent_vector(beta, 36)
    grid = wigner_distribution(np.outer(z, z.conj()))
    qp, pp = grid.peak()
    cell = default_axis()[1] - default_axis()[0]
    dq, dp = abs(qp - np.sqrt(2) * beta.real), abs(pp - np.sqrt(2) * beta.imag)
    norm = grid.normalization()
    ok = err < 1e-8 and dq <= cell and dp <= cell and abs(norm - 1) <= 1e-3
    verdict(record_property, 8, ok,
            f"closed form vs quadrature {err:.1e} (<1e-8, n <= 15); peak offset ({dq:.3f}, {dp:.3f}) "
            f"(cell {cell:.2f}); normalization {norm:.6f}")


@pytest.mark.criterion(9)
def test_criterion_9_wavepacket(record_property):
    omega = 1.3
    u = Potential1D.harmonic(omega)
    v1 = Potential1D.polynomial([0.0, 0.0, 1.0])
    s0 = WavepacketState.normalized(1.5, -0.5, 0.25 + 0.8j)
    times = time_grid(10.0, 0.05)
    tr = evolve_wavepacket(u, Potential1D.zero(), 0.0, 1 / omega, 0.0, s0, times)
    sig_err = float(np.max(np.abs(tr.Sigma - harmonic_sigma(s0.Sigma, omega, times))))
    res = max(abs(residual_norm(u, v1, 0.4, 1 / omega, 0.1, tr.state(i))) for i in range(times.size))
    st = evolve_wavepacket(Potential1D.harmonic(1.0), Potential1D.zero(), 0.0, 1.0, 0.0,
                           WavepacketState.normalized(2.0, 1.0, 0.5j), times)
    stat_err = float(np.max(np.abs(st.Sigma - 0.5j)))
    verdict(record_property, 9, res == 0 and sig_err < 1e-6 and stat_err < 1e-8,
            f"quadratic residual {res:g} (== 0); Sigma vs closed form {sig_err:.1e} (<1e-6); "
            f"Sigma0 = i/2 deviation {stat_err:.1e} (<1e-8)")


@pytest.mark.slow
@pytest.mark.criterion(10)
def test_criterion_10_entropy_energy(record_property):
    times = time_grid(400.0, 0.2)
    pts = []
    for z in (2.0, 4.0, 8.0):
        cfg = OscillatorConfig(lam=0.1, sigma=0.0, zeta1=z, zeta2=z, n_max=35)
        tr = run_scheme(cfg, "qq-spectral", times, store_states=False)
        pts.append((2 * z + 1, entropy_time_average(tr)))
    slope, _ = entropy_energy_fit(pts)
    verdict(record_property, 10, 0.5 <= slope <= 0.85,
            f"slope of mean S_VN vs ln E_tot {slope:.3f} (need [0.5, 0.85]); "
            f"points {', '.join(f'({e:g}, {s:.3f})' for e, s in pts)}")


@pytest.mark.criterion(11)
def test_criterion_11_maximally_mixed(record_property):
    err_vn, err_lin = 0.0, 0.0
    for d in (2, 4, 8):
        z = np.eye(d) / np.sqrt(d)
        rec = entropies(z)
        rho = z @ z.conj().T
        purity = sum(abs(rho[i, j]) ** 2 for i in range(d) for j in range(d))
        err_vn = max(err_vn, abs(rec.s_vn - np.log(d)))
        err_lin = max(err_lin, abs(rec.s_lin - (1 - 1 / d)), abs((1 - purity) - (1 - 1 / d)))
    verdict(record_property, 11, err_vn < 1e-10 and err_lin < 1e-10,
            f"|S_VN - ln d| {err_vn:.1e}, |S_LIN - (1 - 1/d)| {err_lin:.1e} for d = 2, 4, 8 (<1e-10)")
