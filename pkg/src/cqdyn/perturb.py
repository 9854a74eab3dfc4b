"""First-order interaction-picture perturbation theory around a product state.

Quadratures are composite trapezoid rules on a uniform grid with spacing at
most ``quad_step``; running integrals are accumulated interval by interval
so a whole time series costs a single pass.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .evolve import DEFAULT_STEP, check_times, substeps
from .model import coherent_q_moments

MASK_THRESHOLD = 1e-8


@dataclass
class PerturbationResult:
    times: np.ndarray
    z1_norm: np.ndarray
    rho1_norm: np.ndarray
    rho2_norm: np.ndarray

    @property
    def rho_min(self):
        return np.minimum(self.rho1_norm, self.rho2_norm)


def interaction_picture_v(spec, t):
    """V_k(t) = exp(i H_k t) V_k exp(-i H_k t) for diagonal H_k."""
    out = []
    for e, v in ((spec.e1, spec.v1), (spec.e2, spec.v2)):
        ph = np.exp(1j * e * t)
        out.append(ph[:, None] * v * ph.conj()[None, :])
    return tuple(out)


def _unit(u, d, name):
    u = np.asarray(u, dtype=complex).reshape(-1)
    if u.size != d:
        raise DimensionError(f"{name} has length {u.size}, expected {d}")
    n = np.linalg.norm(u)
    if abs(n - 1.0) > 1e-6:
        raise ValidationError(f"{name} must be a unit vector")
    return u


def _applied(e, v, u, s):
    """Rows x(s) = V(s) u for each quadrature node s (shape (len(s), d))."""
    ph = np.exp(1j * np.outer(s, e))
    return ph * ((ph.conj() * u[None, :]) @ v.T)


def _nodes(times, quad_step):
    """Uniform trapezoid nodes on [0, t_i] hitting every output time."""
    if not quad_step > 0:
        raise ValidationError(f"quad_step must be > 0, got {quad_step}")
    grid = np.concatenate([[0.0], times]) if times[0] > 0 else times
    nsub, hsub = substeps(grid, quad_step)
    return grid, nsub, hsub


def _series(spec, u1, u2, times, quad_step, want_z=True, want_rho=True):
    times = check_times(times)
    if times[0] < 0:
        raise ValidationError("times must be >= 0")
    u1 = _unit(u1, spec.d1, "u1")
    u2 = _unit(u2, spec.d2, "u2")
    grid, nsub, hsub = _nodes(times, quad_step)
    zacc = np.zeros((spec.d1, spec.d2), dtype=complex)
    aacc = np.zeros(spec.d1, dtype=complex)
    bacc = np.zeros(spec.d2, dtype=complex)
    zs, rho1, rho2 = [np.zeros(grid.size) for _ in range(3)]
    zmats = [np.zeros_like(zacc)] if want_z else None
    a_list = [aacc.copy()]
    b_list = [bacc.copy()]
    for k in range(grid.size - 1):
        n, h = int(nsub[k]), hsub[k]
        s = grid[k] + h * np.arange(n + 1)
        w = np.full(n + 1, h)
        w[0] = w[-1] = 0.5 * h
        # chunk long intervals to bound memory
        for c0 in range(0, n + 1, 4096):
            sl = slice(c0, min(n + 1, c0 + 4096))
            x = _applied(spec.e1, spec.v1, u1, s[sl])
            y = _applied(spec.e2, spec.v2, u2, s[sl])
            ws = w[sl]
            if want_z:
                zacc += -1j * ((x * ws[:, None]).T @ y)
            if want_rho:
                g1 = (x @ u1.conj()).real
                g2 = (y @ u2.conj()).real
                aacc += (ws * g2) @ x
                bacc += (ws * g1) @ y
        if want_z:
            zs[k + 1] = np.linalg.norm(zacc)
            zmats.append(zacc.copy())
        if want_rho:
            rho1[k + 1] = _rho_norm(aacc, u1)
            rho2[k + 1] = _rho_norm(bacc, u2)
            a_list.append(aacc.copy())
            b_list.append(bacc.copy())
    off = grid.size - times.size
    return {
        "z1_norm": zs[off:],
        "rho1_norm": rho1[off:],
        "rho2_norm": rho2[off:],
        "z": zmats[off:] if want_z else None,
        "a": a_list[off:],
        "b": b_list[off:],
    }


def _rho_norm(a, u):
    # ||A u^dagger - u A^dagger||_F with u^dagger A real
    return float(np.sqrt(max(2.0 * (np.vdot(a, a).real - np.vdot(u, a).real ** 2), 0.0)))


def _rho_from(a, u):
    return -1j * (np.outer(a, u.conj()) - np.outer(u, a.conj()))


def first_order_z(spec, u1, u2, t, quad_step=DEFAULT_STEP):
    """Z1(t) = -i int_0^t (V1(s) u1)(V2(s) u2)^T ds."""
    if t == 0:
        return np.zeros((spec.d1, spec.d2), dtype=complex)
    return _series(spec, u1, u2, np.array([float(t)]), quad_step, want_rho=False)["z"][0]


def first_order_rho(spec, u1, u2, subsystem, t, quad_step=DEFAULT_STEP):
    """First-order correction to the reduced density matrix of ``subsystem``.

    rho1 = -i int <V2(s)> [V1(s), u1 u1^dagger] ds, and symmetrically for 2.
    """
    if subsystem not in (1, 2):
        raise ValidationError("subsystem must be 1 or 2")
    d = spec.d1 if subsystem == 1 else spec.d2
    if t == 0:
        return np.zeros((d, d), dtype=complex)
    res = _series(spec, u1, u2, np.array([float(t)]), quad_step, want_z=False)
    if subsystem == 1:
        return _rho_from(res["a"][0], _unit(u1, spec.d1, "u1"))
    return _rho_from(res["b"][0], _unit(u2, spec.d2, "u2"))


def perturbation_series(spec, u1, u2, times, quad_step=DEFAULT_STEP):
    """Norms of Z1 and of both rho1 corrections on an output grid."""
    times = check_times(times)
    res = _series(spec, u1, u2, times, quad_step)
    return PerturbationResult(times, res["z1_norm"], res["rho1_norm"], res["rho2_norm"])


def entropy_bounds(pr, lam, d=None):
    """Leading-order upper bounds (S_LIN, S_VN) at every time of ``pr``.

    S_LIN <= 2 lam min ||rho1_k|| and S_VN <= 2 lam ||Z1||.  When ``d`` is
    given the von Neumann bound is also capped at ln d.
    """
    if lam < 0:
        raise ValidationError("lambda must be >= 0")
    s_lin = 2.0 * lam * pr.rho_min
    s_vn = 2.0 * lam * pr.z1_norm
    if d is not None:
        s_lin = np.minimum(s_lin, 1.0 - 1.0 / d)
        s_vn = np.minimum(s_vn, np.log(d))
    return s_lin, s_vn


def free_q(cfg, times, subsystem=1):
    """Zero-coupling classical coordinate sqrt(2)|alpha| cos(w t - phi)."""
    t = np.asarray(times, dtype=float)
    if subsystem == 1:
        amp, w, phi = abs(cfg.alpha), cfg.omega1, cfg.phi1
    else:
        amp, w, phi = abs(cfg.beta), cfg.omega2, cfg.phi2
    return np.sqrt(2.0) * amp * np.cos(w * t - phi)


def free_expectation_v(cfg, times, subsystem=1, power=None):
    """<Q^power> in the freely rotating coherent state (default power nu)."""
    power = cfg.nu if power is None else power
    return coherent_q_moments(free_q(cfg, times, subsystem), power)[power]


def free_expectation_v_matrix(spec, u, times, subsystem=1):
    """Same quantity from the truncated matrices: u^dagger V(t) u at lam = 0."""
    e, v = (spec.e1, spec.v1) if subsystem == 1 else (spec.e2, spec.v2)
    u = np.asarray(u, dtype=complex)
    x = _applied(e, v, u, np.asarray(times, dtype=float))
    return (x @ u.conj()).real


def epsilon0_series(cfg, times, closed_form=None):
    """Relative deviation (<V1> - V1(q1)) / <V1> along the free trajectory.

    For nu = 2 the closed form 1/(4|alpha|^2 cos^2 + 1) is used unless
    ``closed_form=False``.  Points where <V1> vanishes are NaN.
    """
    t = np.asarray(times, dtype=float)
    if closed_form is None:
        closed_form = cfg.nu == 2
    if closed_form:
        if cfg.nu != 2:
            raise ValidationError("closed form exists only for nu = 2")
        c = np.cos(cfg.omega1 * t - cfg.phi1)
        return 1.0 / (4.0 * abs(cfg.alpha) ** 2 * c * c + 1.0)
    q = free_q(cfg, t, 1)
    mean = coherent_q_moments(q, cfg.nu)[cfg.nu]
    cls = q**cfg.nu
    out = np.full(t.shape, np.nan)
    ok = np.abs(mean) >= MASK_THRESHOLD
    out[ok] = (mean[ok] - cls[ok]) / mean[ok]
    return out


def _relative(ref, other):
    ref = np.asarray(ref, dtype=float)
    other = np.asarray(other, dtype=float)
    out = np.full(ref.shape, np.nan)
    ok = np.abs(ref) >= MASK_THRESHOLD
    out[ok] = (ref[ok] - other[ok]) / ref[ok]
    return out


def _match(traj_qq, traj_cq):
    if traj_qq.times.shape != traj_cq.times.shape or np.any(traj_qq.times != traj_cq.times):
        raise ValidationError("trajectories must share the same time grid")


def delta_a2(traj_qq, traj_cq, observable="q2"):
    """(<A2>_QQ - <A2>_CQ) / <A2>_QQ, NaN where the QQ value is below 1e-8."""
    _match(traj_qq, traj_cq)
    return _relative(traj_qq[observable], traj_cq[observable])


def delta_a1(traj_qq, traj_cq, observable="q1"):
    """Subsystem-1 analogue of delta_a2; does not vanish as lam -> 0."""
    _match(traj_qq, traj_cq)
    return _relative(traj_qq[observable], traj_cq[observable])
