"""Time evolution under the QQ, CQ, CC and CB schemes.

All integrators are fixed-step classic RK4 with substeps between requested
output times.  Nothing is renormalized; norm and energy drift are reported.
"""

from dataclasses import dataclass, field
from math import ceil, sqrt

import numpy as np

from ._backend import kernels as _default_kernels
from ._backend import get_kernels
from .entanglement import entropy_series
from .errors import AccuracyError, BlowUpError, DimensionError, ValidationError
from .linalg import hermitian_eigen
from .model import (
    OscillatorConfig,
    coherent_vector,
    momentum_matrix,
    observables_qq,
    oscillator_system,
    position_matrix,
    q_power,
    qq_initial_state,
)

DEFAULT_STEP = 1e-3
NORM_DRIFT_LIMIT = 1e-4
SPECTRAL_MAX_DIM = 10000
SCHEMES = ("qq-spectral", "qq-direct", "cq", "cc", "cb")

COLUMNS = (
    "tau", "q1", "p1", "q2", "p2", "n_occ", "m_occ", "var_n", "var_m",
    "E1", "E2", "E_int", "E_total", "S_lin", "S_vn", "norm_drift",
)


@dataclass
class Trajectory:
    """Sampled observables of one run.

    ``columns`` maps every name in COLUMNS (except tau) to a float array;
    quantities that do not exist in a scheme are NaN.  ``conserved`` is the
    scheme's conserved energy (for CB it is recorded but not conserved).
    """

    scheme: str
    times: np.ndarray
    columns: dict
    conserved: np.ndarray
    conserves_energy: bool = True
    states: np.ndarray = None
    classical: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name):
        if name == "tau":
            return self.times
        return self.columns[name]

    @property
    def energy_drift(self):
        """Max relative deviation of the conserved quantity from its start value."""
        e = self.conserved
        if e is None or np.all(np.isnan(e)):
            return float("nan")
        scale = abs(e[0]) if e[0] != 0 else 1.0
        return float(np.max(np.abs(e - e[0])) / scale)

    @property
    def max_norm_drift(self):
        d = self.columns["norm_drift"]
        return float("nan") if np.all(np.isnan(d)) else float(np.nanmax(d))

    def phase_points(self):
        """(T, 4) array of [q1, p1, q2, p2]."""
        return np.stack([self.columns[k] for k in ("q1", "p1", "q2", "p2")], axis=1)

    def table(self):
        """(T, 16) array in CSV column order."""
        return np.column_stack([self.times] + [self.columns[k] for k in COLUMNS[1:]])


def check_times(times):
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise ValidationError("time grid must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(t)):
        raise ValidationError("time grid must be finite")
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise ValidationError("time grid must be strictly increasing")
    return t


def substeps(times, step):
    """Number and size of RK4 substeps for each output interval."""
    if not step > 0:
        raise ValidationError(f"step must be > 0, got {step}")
    dt = np.diff(times)
    n = np.maximum(1, np.ceil(dt / step * (1.0 - 1e-12))).astype(np.int64)
    return n, dt / n


def time_grid(horizon, stride, t0=0.0):
    """Uniform output grid from t0 to t0 + horizon inclusive."""
    if not horizon > 0 or not stride > 0:
        raise ValidationError("horizon and stride must be > 0")
    n = int(ceil(horizon / stride * (1.0 - 1e-12)))
    return t0 + np.linspace(0.0, n * stride, n + 1)


def _empty_columns(nt):
    return {k: np.full(nt, np.nan) for k in COLUMNS[1:]}


def _qq_columns(spec, stack, cfg, norm0):
    nt = stack.shape[0]
    cols = _empty_columns(nt)
    if cfg is not None:
        cols.update(observables_qq(stack, cfg, check_norm=False))
    else:
        p = np.abs(stack) ** 2
        e1 = np.sum(p * spec.e1[:, None], axis=(1, 2))
        e2 = np.sum(p * spec.e2[None, :], axis=(1, 2))
        eint = spec.lam * np.sum(stack.conj() * (spec.v1 @ stack @ spec.v2.T), axis=(1, 2)).real
        cols.update(E1=e1, E2=e2, E_int=eint, E_total=e1 + e2 + eint)
    cols["S_lin"], cols["S_vn"] = entropy_series(stack)
    norms = np.sqrt(np.sum(np.abs(stack) ** 2, axis=(1, 2)))
    cols["norm_drift"] = np.abs(norms - norm0)
    return cols


def _concat(parts):
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def _cfg_of(spec):
    return spec.meta.get("oscillator")


def _check_state(spec, z0):
    z0 = np.asarray(z0, dtype=complex)
    if z0.shape != (spec.d1, spec.d2):
        raise DimensionError(f"state shape {z0.shape} does not match system ({spec.d1}, {spec.d2})")
    norm = np.sqrt(np.sum(np.abs(z0) ** 2))
    if abs(norm - 1.0) > 1e-6:
        raise ValidationError("initial state must have unit Frobenius norm")
    return z0


class SpectralPropagator:
    """Eigendecomposition of the full QQ Hamiltonian for repeated evaluation."""

    def __init__(self, spec):
        if spec.d1 * spec.d2 > SPECTRAL_MAX_DIM:
            raise ValidationError(
                f"d1*d2 = {spec.d1 * spec.d2} exceeds spectral limit {SPECTRAL_MAX_DIM}"
            )
        self.spec = spec
        self.energies, self.vectors = hermitian_eigen(spec.full_hamiltonian())

    def coefficients(self, z0):
        return self.vectors.conj().T @ np.asarray(z0, dtype=complex).reshape(-1)

    def states(self, coeffs, times):
        """Z(t) for each t as a (T, d1, d2) array."""
        t = np.asarray(times, dtype=float)
        ph = np.exp(-1j * np.outer(t, self.energies)) * coeffs[None, :]
        v = self.vectors
        if np.isrealobj(v):
            flat = ph.real @ v.T + 1j * (ph.imag @ v.T)
        else:
            flat = ph @ v.T
        return flat.reshape(t.size, self.spec.d1, self.spec.d2)


def evolve_qq_spectral(spec, z0, times, store_states=True, chunk=2048, propagator=None):
    """Exact QQ evolution from one diagonalization of the full Hamiltonian."""
    times = check_times(times)
    z0 = _check_state(spec, z0)
    prop = propagator if propagator is not None else SpectralPropagator(spec)
    c = prop.coefficients(z0)
    norm0 = np.sqrt(np.sum(np.abs(z0) ** 2))
    cfg = _cfg_of(spec)
    parts, kept = [], []
    for s in range(0, times.size, chunk):
        stack = prop.states(c, times[s:s + chunk] - times[0])
        parts.append(_qq_columns(spec, stack, cfg, norm0))
        if store_states:
            kept.append(stack)
    cols = _concat(parts)
    return Trajectory(
        "qq-spectral", times, cols, cols["E_total"].copy(),
        states=np.concatenate(kept) if store_states else None,
    )


def evolve_qq_direct(spec, z0, times, step=DEFAULT_STEP, store_states=True, backend=None):
    """RK4 integration of i dZ/dt = H1 Z + Z H2 + lam V1 Z V2^T."""
    times = check_times(times)
    z0 = _check_state(spec, z0)
    nsub, hsub = substeps(times, step)
    kern = get_kernels(backend) if backend else _default_kernels
    stack = kern.rk4_qq(z0, spec.e1, spec.e2, spec.v1, spec.v2, spec.lam, nsub, hsub)
    norm0 = np.sqrt(np.sum(np.abs(z0) ** 2))
    cols = _qq_columns(spec, stack, _cfg_of(spec), norm0)
    drift = float(np.max(cols["norm_drift"]))
    if drift > NORM_DRIFT_LIMIT:
        raise AccuracyError(f"QQ norm drift {drift:.3e} exceeds {NORM_DRIFT_LIMIT}; reduce the step")
    return Trajectory(
        "qq-direct", times, cols, cols["E_total"].copy(),
        states=stack if store_states else None, meta={"step": step},
    )


def _classical_1(cfg, a):
    s2 = sqrt(2.0)
    return {
        "q1": s2 * a.real,
        "p1": s2 * a.imag,
        "n_occ": np.abs(a) ** 2,
        "E1": cfg.omega1 * np.abs(a) ** 2,
    }


def evolve_cq(cfg, times, step=DEFAULT_STEP, backreaction=True, backend=None, store_states=True):
    """Classical oscillator 1 coupled to quantum oscillator 2.

    With ``backreaction=False`` the classical part follows its free
    solution, which is the classical-background scheme.
    """
    times = check_times(times)
    _, d2 = cfg.dims
    z0 = coherent_vector(cfg.beta, d2)
    a0 = complex(cfg.alpha)
    e2 = cfg.omega2 * (np.arange(d2) + 0.5)
    v = q_power(d2, cfg.nu)
    nsub, hsub = substeps(times, step)
    kern = get_kernels(backend) if backend else _default_kernels
    a, z = kern.rk4_cq(a0, z0, float(times[0]), cfg.omega1, e2, v.astype(complex),
                       cfg.lam, cfg.nu, bool(backreaction), nsub, hsub)
    norms = np.sqrt(np.sum(np.abs(z) ** 2, axis=1))
    drift = np.abs(norms - norms[0])
    if np.max(drift) > NORM_DRIFT_LIMIT:
        raise AccuracyError(f"CQ norm drift {np.max(drift):.3e} exceeds {NORM_DRIFT_LIMIT}; reduce the step")
    q = position_matrix(d2)
    p = momentum_matrix(d2)
    nvec = np.arange(d2, dtype=float)
    prob = np.abs(z) ** 2
    m = prob @ nvec
    x1 = sqrt(2.0) * a.real
    cols = _empty_columns(times.size)
    cols.update(_classical_1(cfg, a))
    cols.update(
        q2=np.einsum("ti,ij,tj->t", z.conj(), q, z).real,
        p2=np.einsum("ti,ij,tj->t", z.conj(), p, z).real,
        m_occ=m,
        var_m=prob @ nvec**2 - m**2,
        E2=cfg.omega2 * (m + 0.5),
        E_int=cfg.lam * x1**cfg.nu * np.einsum("ti,ij,tj->t", z.conj(), v, z).real,
        norm_drift=drift,
    )
    cols["E_total"] = cols["E1"] + cols["E2"] + cols["E_int"]
    scheme = "cq" if backreaction else "cb"
    return Trajectory(
        scheme, times, cols, cols["E_total"].copy(), conserves_energy=bool(backreaction),
        states=z if store_states else None, classical={"a": a}, meta={"step": step},
    )


def evolve_cb(cfg, times, step=DEFAULT_STEP, backend=None, store_states=True):
    """Classical background: free classical oscillator drives quantum oscillator 2.

    Total energy is not conserved in this scheme; its drift is reported only.
    """
    return evolve_cq(cfg, times, step, backreaction=False, backend=backend, store_states=store_states)


def evolve_cc(cfg, times, step=DEFAULT_STEP, backend=None):
    """Both oscillators classical."""
    times = check_times(times)
    nsub, hsub = substeps(times, step)
    kern = get_kernels(backend) if backend else _default_kernels
    a, b, status, idx = kern.rk4_cc(complex(cfg.alpha), complex(cfg.beta), cfg.omega1,
                                    cfg.omega2, cfg.lam, cfg.nu, nsub, hsub)
    if status != 0:
        raise BlowUpError(f"classical amplitudes exceeded 1e6 before tau={times[idx]:.6g}")
    s2 = sqrt(2.0)
    cols = _empty_columns(times.size)
    cols.update(_classical_1(cfg, a))
    cols.update(
        q2=s2 * b.real,
        p2=s2 * b.imag,
        m_occ=np.abs(b) ** 2,
        E2=cfg.omega2 * np.abs(b) ** 2,
        E_int=cfg.lam * (s2 * a.real) ** cfg.nu * (s2 * b.real) ** cfg.nu,
    )
    cols["E_total"] = cols["E1"] + cols["E2"] + cols["E_int"]
    return Trajectory("cc", times, cols, cols["E_total"].copy(),
                      classical={"a": a, "b": b}, meta={"step": step})


def run_scheme(cfg, scheme, times, step=DEFAULT_STEP, store_states=True, backend=None):
    """Evolve the oscillator pair ``cfg`` under one named scheme."""
    if not isinstance(cfg, OscillatorConfig):
        raise ValidationError("run_scheme needs an OscillatorConfig")
    if scheme == "qq-spectral":
        return evolve_qq_spectral(oscillator_system(cfg), qq_initial_state(cfg), times,
                                  store_states=store_states)
    if scheme == "qq-direct":
        return evolve_qq_direct(oscillator_system(cfg), qq_initial_state(cfg), times, step,
                                store_states=store_states, backend=backend)
    if scheme == "cq":
        return evolve_cq(cfg, times, step, backend=backend, store_states=store_states)
    if scheme == "cb":
        return evolve_cb(cfg, times, step, backend=backend, store_states=store_states)
    if scheme == "cc":
        return evolve_cc(cfg, times, step, backend=backend)
    raise ValidationError(f"unknown scheme {scheme!r}; choose from {', '.join(SCHEMES)}")


@dataclass(frozen=True)
class TruncationReport:
    passed: bool
    worst_margin: float
    worst_tau: float
    max_extent: float
    headroom_ok: bool


def truncation_monitor(traj, n_max):
    """Check mean + standard deviation of both occupations against the cutoff.

    ``n_max`` is an int or an (n_max1, n_max2) pair.  Classical occupations
    (no variance) are skipped.  ``headroom_ok`` applies the 1.5x rule of thumb.
    """
    n1, n2 = (n_max, n_max) if np.isscalar(n_max) else n_max
    ext1 = traj.columns["n_occ"] + np.sqrt(np.maximum(traj.columns["var_n"], 0.0))
    ext2 = traj.columns["m_occ"] + np.sqrt(np.maximum(traj.columns["var_m"], 0.0))
    ext1 = np.where(np.isnan(traj.columns["var_n"]), np.nan, ext1)
    ext2 = np.where(np.isnan(traj.columns["var_m"]), np.nan, ext2)
    margin = np.fmin(n1 - ext1, n2 - ext2)
    if np.all(np.isnan(margin)):
        return TruncationReport(True, float(min(n1, n2)), float(traj.times[0]), 0.0, True)
    i = int(np.nanargmin(margin))
    worst = float(margin[i])
    ratio = np.fmax(ext1 / n1, ext2 / n2)
    max_ratio = float(np.nanmax(ratio))
    return TruncationReport(
        passed=bool(np.nanmin(margin) > 0),
        worst_margin=worst,
        worst_tau=float(traj.times[i]),
        max_extent=float(np.nanmax(np.fmax(ext1, ext2))),
        headroom_ok=bool(max_ratio * 1.5 <= 1.0),
    )
