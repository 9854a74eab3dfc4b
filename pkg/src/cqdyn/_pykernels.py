"""Pure-Python/numpy reference implementation of the fixed-step RK4 kernels.

Each kernel integrates between consecutive output times.  Interval k is
split into ``nsub[k]`` equal substeps of length ``hsub[k]``; output index 0
is the initial state.  The compiled module ``_kernels`` exposes the same
functions with the same signatures.
"""

import numpy as np

BLOWUP_LIMIT = 1e6


def _cc_rhs(a, b, w1, w2, c, nu):
    ra = a.real
    rb = b.real
    if nu == 1:
        fa = c * rb
        fb = c * ra
    else:
        fa = c * ra ** (nu - 1) * rb**nu
        fb = c * rb ** (nu - 1) * ra**nu
    return -1j * (w1 * a + fa), -1j * (w2 * b + fb)


def rk4_cc(a0, b0, w1, w2, lam, nu, nsub, hsub):
    """Classical-classical amplitudes.  Returns (a, b, status, index).

    status is 0 on success and 1 if |a| or |b| exceeded the blow-up limit,
    in which case ``index`` is the first output slot that was not filled.
    """
    nout = len(nsub) + 1
    a_out = np.zeros(nout, dtype=complex)
    b_out = np.zeros(nout, dtype=complex)
    a = complex(a0)
    b = complex(b0)
    a_out[0] = a
    b_out[0] = b
    c = 2.0 ** (nu - 1) * nu * lam
    for k in range(nout - 1):
        h = float(hsub[k])
        for _ in range(int(nsub[k])):
            ka1, kb1 = _cc_rhs(a, b, w1, w2, c, nu)
            ka2, kb2 = _cc_rhs(a + 0.5 * h * ka1, b + 0.5 * h * kb1, w1, w2, c, nu)
            ka3, kb3 = _cc_rhs(a + 0.5 * h * ka2, b + 0.5 * h * kb2, w1, w2, c, nu)
            ka4, kb4 = _cc_rhs(a + h * ka3, b + h * kb3, w1, w2, c, nu)
            a = a + h / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4)
            b = b + h / 6.0 * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4)
            if not (abs(a) <= BLOWUP_LIMIT and abs(b) <= BLOWUP_LIMIT):
                return a_out, b_out, 1, k + 1
        a_out[k + 1] = a
        b_out[k + 1] = b
    return a_out, b_out, 0, nout


def rk4_cq(a0, z0, t0, w1, h2diag, v, lam, nu, backreact, nsub, hsub):
    """Classical amplitude a of subsystem 1 co-evolved with the column z.

    With ``backreact`` false the classical part is not integrated; it is
    taken from the free solution a0*exp(-i w1 (t - t0)) at every stage time.
    """
    nout = len(nsub) + 1
    z = np.array(z0, dtype=complex)
    d = z.shape[0]
    a_out = np.zeros(nout, dtype=complex)
    z_out = np.zeros((nout, d), dtype=complex)
    a = complex(a0)
    a_out[0] = a
    z_out[0] = z
    h2diag = np.asarray(h2diag, dtype=float)
    v = np.asarray(v)
    s2 = np.sqrt(2.0)
    cback = lam * nu / s2

    def free_a(t):
        return a0 * np.exp(-1j * w1 * (t - t0))

    def rhs(a, z):
        x = s2 * a.real
        vz = v @ z
        dz = -1j * (h2diag * z + (lam * x**nu) * vz)
        if backreact:
            ev = np.vdot(z, vz).real
            da = -1j * (w1 * a + cback * x ** (nu - 1) * ev)
        else:
            da = 0.0
        return da, dz

    t = float(t0)
    for k in range(nout - 1):
        h = float(hsub[k])
        n = int(nsub[k])
        for j in range(n):
            ts = t + j * h
            if backreact:
                a1, a2, a4 = a, None, None
            else:
                a1 = free_a(ts)
                a2 = free_a(ts + 0.5 * h)
                a4 = free_a(ts + h)
            ka1, kz1 = rhs(a1, z)
            ka2, kz2 = rhs(a + 0.5 * h * ka1 if backreact else a2, z + 0.5 * h * kz1)
            ka3, kz3 = rhs(a + 0.5 * h * ka2 if backreact else a2, z + 0.5 * h * kz2)
            ka4, kz4 = rhs(a + h * ka3 if backreact else a4, z + h * kz3)
            if backreact:
                a = a + h / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4)
            z = z + h / 6.0 * (kz1 + 2.0 * kz2 + 2.0 * kz3 + kz4)
        t = t + n * h
        if not backreact:
            a = free_a(t)
        a_out[k + 1] = a
        z_out[k + 1] = z
    return a_out, z_out


def rk4_qq(z0, h1diag, h2diag, v1, v2, lam, nsub, hsub):
    """Direct integration of i dZ/dt = H1 Z + Z H2 + lam V1 Z V2^T."""
    nout = len(nsub) + 1
    z = np.array(z0, dtype=complex)
    out = np.zeros((nout,) + z.shape, dtype=complex)
    out[0] = z
    e1 = np.asarray(h1diag, dtype=float)[:, None]
    e2 = np.asarray(h2diag, dtype=float)[None, :]
    v1 = np.asarray(v1)
    v2t = np.asarray(v2).T.copy()

    def rhs(z):
        return -1j * (e1 * z + z * e2 + lam * (v1 @ (z @ v2t)))

    for k in range(nout - 1):
        h = float(hsub[k])
        for _ in range(int(nsub[k])):
            k1 = rhs(z)
            k2 = rhs(z + 0.5 * h * k1)
            k3 = rhs(z + 0.5 * h * k2)
            k4 = rhs(z + h * k3)
            z = z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = z
    return out
