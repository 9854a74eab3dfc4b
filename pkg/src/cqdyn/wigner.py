"""Wigner quasiprobability distributions of a single truncated oscillator.

Convention: W(q, p) = (1/pi) int <q - y|rho|q + y> exp(2ipy) dy, so a coherent
state |beta> peaks at (sqrt(2) Re beta, sqrt(2) Im beta).  The kernel matrix
is S_{nn'}(q, p) = (1/pi) int psi_n'(q + y) psi_n(q - y) exp(-2ipy) dy and
W = Tr[rho S].
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_genlaguerre, gammaln, roots_hermite

from .errors import DimensionError, UnsupportedError, ValidationError

MAX_DIM = 64
DEFAULT_EXTENT = 8.0
DEFAULT_POINTS = 161
IMAG_TOL = 1e-10


def default_axis():
    return np.linspace(-DEFAULT_EXTENT, DEFAULT_EXTENT, DEFAULT_POINTS)


def _check_dim(dim):
    if int(dim) != dim or dim < 1:
        raise ValidationError("dim must be a positive integer")
    if dim > MAX_DIM:
        raise UnsupportedError(f"dim {dim} exceeds the supported maximum {MAX_DIM}")


def _pair(m, n, q, p):
    """W of the operator |m><n| at arrays q, p (closed Laguerre form)."""
    if m < n:
        return np.conj(_pair(n, m, q, p))
    k = m - n
    r2 = q * q + p * p
    lag = eval_genlaguerre(n, k, 2.0 * r2)
    logmag = 0.5 * (gammaln(n + 1) - gammaln(m + 1)) - r2
    val = ((-1) ** n / np.pi) * np.exp(logmag) * lag
    if k:
        val = val * (np.sqrt(2.0) * (q - 1j * p)) ** k
    return val.astype(complex)


def wigner_matrix(dim, q, p):
    """Kernel matrix S_{nn'}(q, p) at a single phase-space point (Hermitian)."""
    _check_dim(dim)
    q = np.float64(q)
    p = np.float64(p)
    s = np.empty((dim, dim), dtype=complex)
    for n in range(dim):
        for m in range(n, dim):
            v = complex(_pair(m, n, q, p))
            s[n, m] = v
            s[m, n] = np.conj(v)
    return s


def hermite_functions(nmax, x):
    """psi_0..psi_{nmax-1} at x by the stable three-term recurrence."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((nmax,) + x.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if nmax > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, nmax - 1):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def wigner_matrix_quadrature(dim, q, p, nodes=160):
    """Kernel matrix by Gauss-Hermite quadrature of the defining integral.

    The Gaussian factor exp(-q^2 - y^2) of the integrand is the weight, so
    the rule is exact for the polynomial part up to the node count.
    """
    _check_dim(dim)
    y, w = roots_hermite(nodes)
    hp = hermite_functions(dim, q + y) * np.exp(0.5 * (q + y) ** 2)
    hm = hermite_functions(dim, q - y) * np.exp(0.5 * (q - y) ** 2)
    wt = w * np.exp(-q * q) * np.exp(-2j * p * y) / np.pi
    # S[n, n'] = sum_y psi_n(q - y) psi_n'(q + y) wt
    return (hm * wt) @ hp.T


@dataclass
class WignerGrid:
    q: np.ndarray
    p: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def normalization(self):
        """Riemann sum of W dq dp over the grid."""
        dq = self.q[1] - self.q[0]
        dp = self.p[1] - self.p[0]
        return float(self.values.sum() * dq * dp)

    def peak(self):
        i, j = np.unravel_index(np.argmax(self.values), self.values.shape)
        return float(self.q[i]), float(self.p[j])

    def to_csv(self, path):
        qq, pp = np.meshgrid(self.q, self.p, indexing="ij")
        data = np.column_stack([qq.ravel(), pp.ravel(), self.values.ravel()])
        header = "q,p,W"
        if self.meta:
            header = "meta=" + json.dumps(self.meta, sort_keys=True) + "\n" + header
        np.savetxt(path, data, delimiter=",", fmt="%.17g", header=header, comments="# " if self.meta else "")

    def save_npz(self, path):
        """Dense grid as npz plus a JSON metadata record alongside."""
        np.savez(path, q=self.q, p=self.p, W=self.values)
        meta = dict(self.meta, q_range=[float(self.q[0]), float(self.q[-1]), int(self.q.size)],
                    p_range=[float(self.p[0]), float(self.p[-1]), int(self.p.size)])
        with open(str(path).removesuffix(".npz") + ".json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)


def _check_rho(rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError("rho must be square")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValidationError("rho must be Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > 1e-6:
        raise ValidationError(f"rho must have unit trace, got {tr:.8g}")
    _check_dim(rho.shape[0])
    return rho


def _finish(acc, q, p, meta):
    return WignerGrid(np.asarray(q, dtype=float), np.asarray(p, dtype=float), acc, dict(meta or {}))


class WignerTable:
    """Kernel values for one (dim, grid) pair, reused across many frames.

    Only the lower triangle m >= n is stored since S is Hermitian.
    """

    def __init__(self, dim, q=None, p=None):
        _check_dim(dim)
        self.dim = dim
        self.q = default_axis() if q is None else np.asarray(q, dtype=float)
        self.p = default_axis() if p is None else np.asarray(p, dtype=float)
        qq, pp = np.meshgrid(self.q, self.p, indexing="ij")
        self.pairs = [(m, n) for n in range(dim) for m in range(n, dim)]
        self.table = np.empty((len(self.pairs),) + qq.shape, dtype=complex)
        for i, (m, n) in enumerate(self.pairs):
            self.table[i] = _pair(m, n, qq, pp)

    def evaluate(self, rho, meta=None):
        rho = _check_rho(rho)
        if rho.shape[0] != self.dim:
            raise DimensionError("rho dimension does not match the table")
        coef = np.array([rho[m, n] if m == n else 2.0 * rho[m, n] for (m, n) in self.pairs])
        vals = np.tensordot(coef, self.table, axes=1)
        return _finish(vals.real, self.q, self.p, meta)


def wigner_distribution(rho, q=None, p=None, meta=None):
    """W(q, p) = Tr[rho S(q, p)] on the grid q x p (default [-8, 8]^2, 161 nodes)."""
    rho = _check_rho(rho)
    q = default_axis() if q is None else np.asarray(q, dtype=float)
    p = default_axis() if p is None else np.asarray(p, dtype=float)
    qq, pp = np.meshgrid(q, p, indexing="ij")
    acc = np.zeros(qq.shape, dtype=complex)
    d = rho.shape[0]
    for n in range(d):
        for m in range(n, d):
            if rho[m, n] == 0:
                continue
            w = _pair(m, n, qq, pp)
            if m == n:
                acc += rho[m, n] * w
            else:
                acc += rho[m, n] * w + rho[n, m] * np.conj(w)
    if np.max(np.abs(acc.imag)) > IMAG_TOL:
        raise ValidationError("Wigner values have a non-negligible imaginary part")
    return _finish(acc.real, q, p, meta)
