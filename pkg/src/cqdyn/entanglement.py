"""Reduced density matrices, purity and entanglement entropies of a state matrix."""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .linalg import batched_singular_values, singular_values

CLAMP = 1e-14
DEFAULT_BURN_IN_FRACTION = 0.2


@dataclass(frozen=True)
class EntropyRecord:
    purity: float
    s_lin: float
    s_vn: float
    chi: np.ndarray


def reduced_density(z):
    """rho1 = Z Z^dagger and rho2 = Z^T Z^*."""
    z = np.asarray(z, dtype=complex)
    if z.ndim != 2:
        raise DimensionError("z must be a 2-D state matrix")
    return z @ z.conj().T, z.T @ z.conj()


def entropies_from_chi(chi):
    """(purity, S_LIN, S_VN) from singular values, vectorized over leading axes."""
    p = np.asarray(chi, dtype=float) ** 2
    purity = np.sum(p * p, axis=-1)
    pc = np.where(p < CLAMP, 0.0, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pc > 0.0, -pc * np.log(np.where(pc > 0.0, pc, 1.0)), 0.0)
    return purity, 1.0 - purity, np.sum(terms, axis=-1)


def entropies(z):
    chi = singular_values(z)
    purity, s_lin, s_vn = entropies_from_chi(chi)
    return EntropyRecord(float(purity), float(s_lin), max(float(s_vn), 0.0), chi)


def purity_direct(z):
    """||Z Z^dagger||^2 evaluated from the density matrix itself."""
    rho1, _ = reduced_density(z)
    return float(np.sum(np.abs(rho1) ** 2))


def entropy_series(stack):
    """S_LIN and S_VN for each state in a (T, d1, d2) stack."""
    chi = batched_singular_values(stack)
    _, s_lin, s_vn = entropies_from_chi(chi)
    return s_lin, np.maximum(s_vn, 0.0)


def entropy_time_average(traj, burn_in=None):
    """Mean of S_VN over tau > burn_in; default burn-in is 20% of the run."""
    s_vn = traj.columns.get("S_vn")
    if s_vn is None or np.all(np.isnan(s_vn)):
        raise ValidationError("trajectory carries no von Neumann entropy series")
    tau = traj.times
    if burn_in is None:
        burn_in = tau[0] + DEFAULT_BURN_IN_FRACTION * (tau[-1] - tau[0])
    if not burn_in < tau[-1]:
        raise ValidationError("burn_in must precede the final time")
    mask = tau > burn_in
    return float(np.mean(s_vn[mask]))
