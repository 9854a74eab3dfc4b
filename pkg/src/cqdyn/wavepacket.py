"""Gaussian wavepacket dynamics of a particle in a 1-D potential.

The packet is (2/pi)^(1/4) exp(i[gamma + P (x - Q) + Sigma (x - Q)^2]) with
Im Sigma = exp(-4 Im gamma) for unit norm.  Subsystem 2 enters only through
the expectation value <V2>(t), supplied as a constant, a callable or a
sampled series (linearly interpolated).
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .errors import CollapseError, ValidationError
from .evolve import DEFAULT_STEP, check_times, substeps


@dataclass(frozen=True)
class WavepacketState:
    Q: float
    P: float
    gamma: complex
    Sigma: complex

    def __post_init__(self):
        if not np.imag(self.Sigma) > 0:
            raise ValidationError("Im Sigma must be > 0")

    @classmethod
    def normalized(cls, Q, P, Sigma, re_gamma=0.0):
        """State whose phase satisfies the unit-norm link Im Sigma = exp(-4 Im gamma)."""
        if not np.imag(Sigma) > 0:
            raise ValidationError("Im Sigma must be > 0")
        return cls(float(Q), float(P), complex(re_gamma, -0.25 * np.log(np.imag(Sigma))), complex(Sigma))

    def wavefunction(self, x):
        x = np.asarray(x, dtype=float)
        d = x - self.Q
        return (2.0 / np.pi) ** 0.25 * np.exp(1j * (self.gamma + self.P * d + self.Sigma * d * d))


@dataclass(frozen=True)
class Potential1D:
    """A potential with its first four derivatives as callables."""

    value: object
    d1: object
    d2: object
    d3: object
    d4: object

    @classmethod
    def polynomial(cls, coeffs):
        """Polynomial with coefficients in increasing order of power."""
        p = Polynomial(coeffs)
        ds = [p.deriv(k) for k in range(1, 5)]
        return cls(p, *ds)

    @classmethod
    def harmonic(cls, omega, scale=0.5):
        return cls.polynomial([0.0, 0.0, scale * omega])

    @classmethod
    def zero(cls):
        return cls.polynomial([0.0])

    def check_derivatives(self, points, h=1e-4, rtol=1e-5):
        """Central-difference spot check of each derivative against the next-lower one."""
        funcs = [self.value, self.d1, self.d2, self.d3, self.d4]
        worst = 0.0
        for x in np.atleast_1d(points):
            for k in range(4):
                fd = (funcs[k](x + h) - funcs[k](x - h)) / (2 * h)
                exact = funcs[k + 1](x)
                err = abs(fd - exact) / max(1.0, abs(exact))
                worst = max(worst, err)
        if worst > rtol:
            raise ValidationError(f"potential derivatives inconsistent (relative error {worst:.2e})")
        return worst


def _v2_source(v2_expect):
    if callable(v2_expect):
        return v2_expect
    if np.isscalar(v2_expect):
        c = float(v2_expect)
        return lambda t: c
    ts, vals = v2_expect
    ts = np.asarray(ts, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if ts.shape != vals.shape or ts.ndim != 1:
        raise ValidationError("<V2> series must be (times, values) of equal length")
    return lambda t: float(np.interp(t, ts, vals))


@dataclass
class WavepacketTrajectory:
    times: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    gamma: np.ndarray
    Sigma: np.ndarray

    def state(self, i):
        return WavepacketState(float(self.Q[i]), float(self.P[i]), complex(self.gamma[i]), complex(self.Sigma[i]))

    def norm_link(self):
        """Im Sigma * exp(4 Im gamma); equals 1 for a normalized packet."""
        return self.Sigma.imag * np.exp(4.0 * self.gamma.imag)


def _rhs(t, y, u, v1, v2f, m, lam):
    Q, P, g, S = y
    Q = Q.real
    P = P.real
    v2 = v2f(t)
    dQ = P / m
    dP = -u.d1(Q) - lam * v2 * v1.d1(Q)
    dg = P * P / (2 * m) + 1j * S / m - u.value(Q) - lam * v1.value(Q) * v2
    dS = -2.0 * S * S / m - 0.5 * (u.d2(Q) + lam * v1.d2(Q) * v2)
    return np.array([dQ, dP, dg, dS], dtype=complex)


def evolve_wavepacket(u, v1, v2_expect, m, lam, s0, times, step=DEFAULT_STEP):
    """RK4 integration of the (Q, P, gamma, Sigma) system."""
    if not m > 0:
        raise ValidationError("mass must be > 0")
    times = check_times(times)
    nsub, hsub = substeps(times, step)
    v2f = _v2_source(v2_expect)
    y = np.array([s0.Q, s0.P, s0.gamma, s0.Sigma], dtype=complex)
    out = np.zeros((times.size, 4), dtype=complex)
    out[0] = y
    for k in range(times.size - 1):
        h = hsub[k]
        for j in range(int(nsub[k])):
            ts = times[k] + j * h
            # a collapsing width overflows before the sign test catches it
            with np.errstate(over="ignore", invalid="ignore"):
                k1 = _rhs(ts, y, u, v1, v2f, m, lam)
                k2 = _rhs(ts + 0.5 * h, y + 0.5 * h * k1, u, v1, v2f, m, lam)
                k3 = _rhs(ts + 0.5 * h, y + 0.5 * h * k2, u, v1, v2f, m, lam)
                k4 = _rhs(ts + h, y + h * k3, u, v1, v2f, m, lam)
                y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not (np.all(np.isfinite(y)) and y[3].imag > 0):
                raise CollapseError(f"Im Sigma became non-positive near t={ts + h:.6g}")
        out[k + 1] = y
    return WavepacketTrajectory(times, out[:, 0].real, out[:, 1].real, out[:, 2], out[:, 3])


def harmonic_sigma(sigma0, omega, t):
    """Width parameter of a harmonic packet with m = 1/omega at zero coupling.

    Written with cos/sin instead of tan so it stays finite at omega t = pi/2.
    """
    t = np.asarray(t, dtype=float)
    c = np.cos(omega * t)
    s = np.sin(omega * t)
    return (2 * sigma0 * c - s) / (2 * (c + 2 * sigma0 * s))


def free_sigma(sigma0, m, t):
    return sigma0 / (1 + 2 * sigma0 * np.asarray(t, dtype=float) / m)


def residual_norm(u, v1, v2_expect_t, m, lam, s):
    """Leading squared residual of the ansatz in the wave equation."""
    a = u.d3(s.Q) + lam * v2_expect_t * v1.d3(s.Q)
    return 5.0 / 768.0 * a * a / np.imag(s.Sigma) ** 3


def expectation(f, s):
    """<f(x)> in the packet, up to the fourth-derivative term."""
    im = np.imag(s.Sigma)
    return f.value(s.Q) + f.d2(s.Q) / (8 * im) + f.d4(s.Q) / (128 * im * im)


def effective_energy(u, v1, v2_expect_t, m, lam, Q, P):
    return P * P / (2 * m) + u.value(Q) + lam * v1.value(Q) * v2_expect_t


def semiclassicality_check(u, v1, s, orders=2):
    """Ratios that must be small for the packet to behave classically.

    ``ehrenfest`` holds |f^(2n-1)/f'| / (Im Sigma)^n for n = 2..orders+1 and
    f in (U, V1); ``epsilon`` holds |V1^(2k)/V1| / (Im Sigma)^k for
    k = 1..orders.  Derivatives beyond the fourth are unavailable and
    skipped.  Also reports the leading term and the series value of the
    relative deviation (<V1> - V1(Q)) / <V1>.
    """
    im = np.imag(s.Sigma)
    Q = s.Q
    derivs_u = {1: u.d1, 3: u.d3}
    derivs_v = {0: v1.value, 1: v1.d1, 2: v1.d2, 3: v1.d3, 4: v1.d4}
    ehr = {}
    for n in range(2, orders + 2):
        k = 2 * n - 1
        if k not in derivs_u:
            continue
        for name, dd, d1 in (("U", derivs_u, u.d1(Q)), ("V1", derivs_v, v1.d1(Q))):
            num = abs(dd[k](Q))
            ehr[f"{name}[{k}]"] = 0.0 if num == 0 else (float("inf") if d1 == 0 else float(num / abs(d1) / im**n))
    eps = {}
    v0 = v1.value(Q)
    for k in range(1, orders + 1):
        if 2 * k not in derivs_v:
            continue
        num = abs(derivs_v[2 * k](Q))
        eps[f"V1[{2 * k}]"] = 0.0 if num == 0 else (float("inf") if v0 == 0 else float(num / abs(v0) / im**k))
    mean_v = expectation(v1, s)
    leading = float("nan") if v0 == 0 else float(v1.d2(Q) / (8 * v0 * im))
    eps_series = float("nan") if mean_v == 0 else float((mean_v - v0) / mean_v)
    return {"ehrenfest": ehr, "epsilon": eps, "epsilon_leading": leading, "epsilon_series": eps_series}
