"""Truncated operator matrices, bipartite system specs and coherent states.

All energies are in units of the mean oscillator frequency and times are
the dimensionless tau.  The square-root frequency prefactor carried by the
interaction operators is absorbed into the coupling ``lam``.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from math import lgamma, log, pi, sqrt

import numpy as np

from .errors import DimensionError, TruncationError, ValidationError
from .linalg import HERMITIAN_TOL, as_matrix

COHERENT_NORM_THRESHOLD = 0.999


def lowering_matrix(dim):
    """Annihilation operator a with a[n, n+1] = sqrt(n+1)."""
    if dim < 1:
        raise ValidationError("dim must be >= 1")
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)


def position_matrix(dim):
    """Q with Q[n, n+1] = Q[n+1, n] = sqrt(n+1)/sqrt(2)."""
    if dim < 1:
        raise ValidationError("dim must be >= 1")
    off = np.sqrt(np.arange(1, dim, dtype=float) / 2.0)
    return (np.diag(off, 1) + np.diag(off, -1)).astype(complex)


def momentum_matrix(dim):
    """P = (a - a^dagger)/(sqrt(2) i)."""
    if dim < 1:
        raise ValidationError("dim must be >= 1")
    off = np.sqrt(np.arange(1, dim, dtype=float) / 2.0)
    return (-1j * np.diag(off, 1) + 1j * np.diag(off, -1)).astype(complex)


def number_matrix(dim):
    if dim < 1:
        raise ValidationError("dim must be >= 1")
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


@lru_cache(maxsize=64)
def _q_power(dim, nu):
    # truncate-then-power: artifacts confined to the last ~nu rows
    q = position_matrix(dim).real
    out = np.eye(dim)
    for _ in range(nu):
        out = out @ q
    out.setflags(write=False)
    return out


def q_power(dim, nu):
    """Q^nu built by repeated multiplication of the truncated Q (real)."""
    return _q_power(int(dim), int(nu)).copy()


@dataclass(frozen=True)
class OscillatorConfig:
    """Parameters of the nonlinearly coupled oscillator pair.

    ``n_max2`` optionally gives oscillator 2 its own cutoff; by default both
    oscillators share ``n_max``.
    """

    lam: float
    sigma: float = 0.0
    nu: int = 2
    zeta1: float = 0.0
    zeta2: float = 0.0
    phi1: float = pi / 2
    phi2: float = pi / 2
    n_max: int = 35
    n_max2: int = None

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValidationError(f"lambda must be >= 0, got {self.lam}")
        if not abs(self.sigma) < 1:
            raise ValidationError(f"|sigma| must be < 1, got {self.sigma}")
        if int(self.nu) != self.nu or self.nu < 1:
            raise ValidationError(f"nu must be a positive integer, got {self.nu}")
        if not (self.zeta1 >= 0 and self.zeta2 >= 0):
            raise ValidationError("zeta1 and zeta2 must be >= 0")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValidationError(f"n_max must be an integer >= 1, got {self.n_max}")
        if self.n_max2 is not None and (int(self.n_max2) != self.n_max2 or self.n_max2 < 1):
            raise ValidationError(f"n_max2 must be an integer >= 1, got {self.n_max2}")
        object.__setattr__(self, "nu", int(self.nu))
        object.__setattr__(self, "n_max", int(self.n_max))
        if self.n_max2 is not None:
            object.__setattr__(self, "n_max2", int(self.n_max2))

    @property
    def omega1(self):
        return 1.0 + self.sigma

    @property
    def omega2(self):
        return 1.0 - self.sigma

    @property
    def alpha(self):
        return sqrt(self.zeta1 / (1 + self.sigma)) * np.exp(1j * self.phi1)

    @property
    def beta(self):
        return sqrt(self.zeta2 / (1 - self.sigma)) * np.exp(1j * self.phi2)

    @property
    def dims(self):
        n2 = self.n_max if self.n_max2 is None else self.n_max2
        return self.n_max + 1, n2 + 1

    def replace(self, **changes):
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return OscillatorConfig(**values)


@dataclass
class SystemSpec:
    """Generic truncated bipartite system H1 x I + I x H2 + lam V1 x V2."""

    h1: np.ndarray
    h2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    lam: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.h1 = as_matrix(self.h1, "h1")
        self.h2 = as_matrix(self.h2, "h2")
        self.v1 = as_matrix(self.v1, "v1")
        self.v2 = as_matrix(self.v2, "v2")
        for name in ("h1", "h2"):
            h = getattr(self, name)
            if h.shape[0] != h.shape[1]:
                raise DimensionError(f"{name} must be square")
            if np.any(h - np.diag(np.diag(h))) or np.any(np.diag(h).imag):
                raise ValidationError(f"{name} must be real diagonal")
        for name in ("v1", "v2"):
            v = getattr(self, name)
            if v.shape[0] != v.shape[1]:
                raise DimensionError(f"{name} must be square")
            if np.max(np.abs(v - v.conj().T), initial=0.0) > HERMITIAN_TOL:
                raise ValidationError(f"{name} must be Hermitian")
        if self.v1.shape != self.h1.shape or self.v2.shape != self.h2.shape:
            raise DimensionError("h1/v1 and h2/v2 must have matching dimensions")
        self.lam = float(self.lam)

    @property
    def d1(self):
        return self.h1.shape[0]

    @property
    def d2(self):
        return self.h2.shape[0]

    @property
    def e1(self):
        return np.diag(self.h1).real.copy()

    @property
    def e2(self):
        return np.diag(self.h2).real.copy()

    def rhs(self, z):
        """-i (H1 Z + Z H2 + lam V1 Z V2^T)."""
        z = np.asarray(z, dtype=complex)
        out = self.e1[:, None] * z + z * self.e2[None, :]
        out = out + self.lam * (self.v1 @ z @ self.v2.T)
        return -1j * out

    def full_hamiltonian(self):
        """Full d1*d2 Hamiltonian acting on row-major vec(Z), j = n*d2 + mu."""
        i1 = np.eye(self.d1)
        i2 = np.eye(self.d2)
        h = np.kron(self.h1, i2) + np.kron(i1, self.h2.T) + self.lam * np.kron(self.v1, self.v2)
        return 0.5 * (h + h.conj().T)

    def save(self, path):
        np.savez(path, h1=self.h1, h2=self.h2, v1=self.v1, v2=self.v2, lam=self.lam)

    @classmethod
    def load(cls, path):
        with np.load(path) as data:
            return cls(data["h1"], data["h2"], data["v1"], data["v2"], float(data["lam"]))


def oscillator_system(cfg):
    """SystemSpec of the coupled oscillators in dimensionless units."""
    d1, d2 = cfg.dims
    h1 = np.diag(cfg.omega1 * (np.arange(d1) + 0.5)).astype(complex)
    h2 = np.diag(cfg.omega2 * (np.arange(d2) + 0.5)).astype(complex)
    spec = SystemSpec(h1, h2, q_power(d1, cfg.nu), q_power(d2, cfg.nu), cfg.lam)
    spec.meta["oscillator"] = cfg
    return spec


@dataclass(frozen=True)
class CoherentParams:
    amplitude: complex
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("dim must be >= 1")


def coherent_vector(p, dim=None):
    """Truncated, renormalized Fock amplitudes of the coherent state |alpha>.

    Accepts a CoherentParams or a bare amplitude plus ``dim``.
    """
    if isinstance(p, CoherentParams):
        alpha, dim = complex(p.amplitude), p.dim
    else:
        alpha = complex(p)
        if dim is None or dim < 1:
            raise ValidationError("dim must be >= 1")
    r = abs(alpha)
    out = np.zeros(dim, dtype=complex)
    if r == 0.0:
        out[0] = 1.0
        return out
    n = np.arange(dim)
    log_mag = -0.5 * r * r + n * log(r) - 0.5 * np.array([lgamma(k + 1.0) for k in n])
    out = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    norm = np.sqrt(np.sum(np.abs(out) ** 2))
    if norm < COHERENT_NORM_THRESHOLD:
        raise TruncationError(
            f"cutoff dim={dim} too small for |alpha|^2={r * r:.4g} (truncated norm {norm:.6f})"
        )
    return out / norm


def qq_initial_state(cfg):
    """Z(0) = w z^T for coherent w(alpha), z(beta)."""
    d1, d2 = cfg.dims
    w = coherent_vector(cfg.alpha, d1)
    z = coherent_vector(cfg.beta, d2)
    return np.outer(w, z)


def coherent_q_moment(mean_q, order):
    """<q^order> in a coherent state with <q> = mean_q."""
    if order < 0:
        raise ValidationError("order must be >= 0")
    m_prev, m = 1.0, float(mean_q)
    if order == 0:
        return 1.0
    for n in range(2, order + 1):
        m_prev, m = m, mean_q * m + 0.5 * (n - 1) * m_prev
    return m


def coherent_q_moments(mean_q, max_order):
    """Array of <q^k>, k = 0..max_order, vectorized over ``mean_q``."""
    mean_q = np.asarray(mean_q, dtype=float)
    out = np.empty((max_order + 1,) + mean_q.shape)
    out[0] = 1.0
    if max_order >= 1:
        out[1] = mean_q
    for n in range(2, max_order + 1):
        out[n] = mean_q * out[n - 1] + 0.5 * (n - 1) * out[n - 2]
    return out


class OscillatorOps:
    """Cached Q, P, N, N^2 and Q^nu for one truncation."""

    def __init__(self, dim, nu):
        self.dim = dim
        self.q = position_matrix(dim)
        self.p = momentum_matrix(dim)
        self.n = np.arange(dim, dtype=float)
        self.q_nu = q_power(dim, nu)


def _expect_rho1(z, a):
    # Tr(Z Z^dagger A) over a (..., d1, d2) stack
    return np.sum(z.conj() * (a @ z), axis=(-2, -1))


def _expect_rho2(z, a):
    # Tr(Z^T Z^* A)
    return np.sum(z.conj() * (z @ a.T), axis=(-2, -1))


def _expect_diag_rho1(z, d):
    return np.sum(np.abs(z) ** 2 * d[:, None], axis=(-2, -1))


def _expect_diag_rho2(z, d):
    return np.sum(np.abs(z) ** 2 * d[None, :], axis=(-2, -1))


OBSERVABLE_NAMES = (
    "q1", "p1", "q2", "p2", "n_occ", "m_occ", "var_n", "var_m", "E1", "E2", "E_int", "E_total",
)


def observables_qq(z, cfg, check_norm=True):
    """Table-of-observables evaluation for a QQ state or a (T, d1, d2) stack.

    Returns a dict of floats (single state) or arrays (stack).
    """
    z = np.asarray(z, dtype=complex)
    if z.ndim not in (2, 3):
        raise DimensionError("z must be (d1, d2) or (T, d1, d2)")
    if z.shape[-2:] != cfg.dims:
        raise DimensionError(f"state shape {z.shape[-2:]} does not match cfg dims {cfg.dims}")
    norms = np.sqrt(np.sum(np.abs(z) ** 2, axis=(-2, -1)))
    if check_norm and np.any(np.abs(norms - 1.0) > 1e-6):
        raise ValidationError("state is not normalized to within 1e-6")
    d1, d2 = cfg.dims
    o1 = OscillatorOps(d1, cfg.nu)
    o2 = OscillatorOps(d2, cfg.nu)
    n1 = _expect_diag_rho1(z, o1.n)
    n1sq = _expect_diag_rho1(z, o1.n**2)
    n2 = _expect_diag_rho2(z, o2.n)
    n2sq = _expect_diag_rho2(z, o2.n**2)
    e_int = cfg.lam * np.sum(z.conj() * (o1.q_nu @ z @ o2.q_nu.T), axis=(-2, -1)).real
    e1 = cfg.omega1 * (n1 + 0.5)
    e2 = cfg.omega2 * (n2 + 0.5)
    out = {
        "q1": _expect_rho1(z, o1.q).real,
        "p1": _expect_rho1(z, o1.p).real,
        "q2": _expect_rho2(z, o2.q).real,
        "p2": _expect_rho2(z, o2.p).real,
        "n_occ": n1,
        "m_occ": n2,
        "var_n": n1sq - n1**2,
        "var_m": n2sq - n2**2,
        "E1": e1,
        "E2": e2,
        "E_int": e_int,
        "E_total": e1 + e2 + e_int,
    }
    if z.ndim == 2:
        out = {k: float(v) for k, v in out.items()}
    return out
