# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled fixed-step RK4 kernels.

Signatures and semantics mirror ``cqdyn._pykernels``.  The QQ kernel works in
real arithmetic on the interleaved state with V1, V2 in diagonal storage,
which suits the banded Q^nu operators.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt

cnp.import_array()

cdef double BLOWUP_LIMIT = 1e6


cdef inline double ipow(double x, int n) nogil:
    cdef double r = 1.0
    cdef int i
    for i in range(n):
        r *= x
    return r


cdef inline double complex mi(double complex x) nogil:
    # multiply by -i
    return x.imag - 1j * x.real


cdef inline double cabs2(double complex x) nogil:
    return x.real * x.real + x.imag * x.imag


def rk4_cc(a0, b0, double w1, double w2, double lam, int nu,
           long[::1] nsub, double[::1] hsub):
    cdef Py_ssize_t nout = nsub.shape[0] + 1
    a_np = np.zeros(nout, dtype=complex)
    b_np = np.zeros(nout, dtype=complex)
    cdef double complex[::1] a_out = a_np
    cdef double complex[::1] b_out = b_np
    cdef double complex a = a0, b = b0
    cdef double complex ka1, ka2, ka3, ka4, kb1, kb2, kb3, kb4, ta, tb
    cdef double c = ipow(2.0, nu - 1) * nu * lam
    cdef double h, lim2 = BLOWUP_LIMIT * BLOWUP_LIMIT
    cdef Py_ssize_t k
    cdef long j
    a_out[0] = a
    b_out[0] = b
    for k in range(nout - 1):
        h = hsub[k]
        for j in range(nsub[k]):
            ka1 = mi(w1 * a + c * ipow(a.real, nu - 1) * ipow(b.real, nu))
            kb1 = mi(w2 * b + c * ipow(b.real, nu - 1) * ipow(a.real, nu))
            ta = a + 0.5 * h * ka1
            tb = b + 0.5 * h * kb1
            ka2 = mi(w1 * ta + c * ipow(ta.real, nu - 1) * ipow(tb.real, nu))
            kb2 = mi(w2 * tb + c * ipow(tb.real, nu - 1) * ipow(ta.real, nu))
            ta = a + 0.5 * h * ka2
            tb = b + 0.5 * h * kb2
            ka3 = mi(w1 * ta + c * ipow(ta.real, nu - 1) * ipow(tb.real, nu))
            kb3 = mi(w2 * tb + c * ipow(tb.real, nu - 1) * ipow(ta.real, nu))
            ta = a + h * ka3
            tb = b + h * kb3
            ka4 = mi(w1 * ta + c * ipow(ta.real, nu - 1) * ipow(tb.real, nu))
            kb4 = mi(w2 * tb + c * ipow(tb.real, nu - 1) * ipow(ta.real, nu))
            a = a + h / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4)
            b = b + h / 6.0 * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4)
            if not (cabs2(a) <= lim2 and cabs2(b) <= lim2):
                return a_np, b_np, 1, k + 1
        a_out[k + 1] = a
        b_out[k + 1] = b
    return a_np, b_np, 0, nout


cdef void _cq_rhs(double complex a, double complex[::1] z, double w1,
                  double[::1] e2, double complex[:, ::1] v, double lam, int nu,
                  bint backreact, double complex[::1] vz,
                  double complex* da, double complex[::1] dz) nogil:
    cdef Py_ssize_t d = z.shape[0]
    cdef Py_ssize_t i, j
    cdef double x = sqrt(2.0) * a.real
    cdef double coup = lam * ipow(x, nu)
    cdef double complex acc
    cdef double ev = 0.0
    for i in range(d):
        acc = 0.0
        for j in range(d):
            acc = acc + v[i, j] * z[j]
        vz[i] = acc
    for i in range(d):
        dz[i] = mi(e2[i] * z[i] + coup * vz[i])
    if backreact:
        for i in range(d):
            ev += z[i].real * vz[i].real + z[i].imag * vz[i].imag
        da[0] = mi(w1 * a + lam * nu / sqrt(2.0) * ipow(x, nu - 1) * ev)
    else:
        da[0] = 0.0


cdef inline double complex _free(double complex a0, double w1, double dt) nogil:
    return a0 * (cos(w1 * dt) - 1j * sin(w1 * dt))


def rk4_cq(a0, z0, double t0, double w1, h2diag, v, double lam, int nu,
           bint backreact, long[::1] nsub, double[::1] hsub):
    cdef Py_ssize_t nout = nsub.shape[0] + 1
    cdef double complex[::1] z = np.array(z0, dtype=complex)
    cdef Py_ssize_t d = z.shape[0]
    cdef double[::1] e2 = np.ascontiguousarray(h2diag, dtype=float)
    cdef double complex[:, ::1] vm = np.ascontiguousarray(v, dtype=complex)
    a_np = np.zeros(nout, dtype=complex)
    z_np = np.zeros((nout, d), dtype=complex)
    cdef double complex[::1] a_out = a_np
    cdef double complex[:, ::1] z_out = z_np
    cdef double complex[::1] vz = np.zeros(d, dtype=complex)
    cdef double complex[::1] tz = np.zeros(d, dtype=complex)
    cdef double complex[::1] k1 = np.zeros(d, dtype=complex)
    cdef double complex[::1] k2 = np.zeros(d, dtype=complex)
    cdef double complex[::1] k3 = np.zeros(d, dtype=complex)
    cdef double complex[::1] k4 = np.zeros(d, dtype=complex)
    cdef double complex aa0 = a0
    cdef double complex a = aa0, ka1, ka2, ka3, ka4, s1, s2, s4
    cdef double t = t0, h, ts
    cdef Py_ssize_t k, i
    cdef long j, n
    a_out[0] = a
    for i in range(d):
        z_out[0, i] = z[i]
    for k in range(nout - 1):
        h = hsub[k]
        n = nsub[k]
        for j in range(n):
            ts = t + j * h
            if backreact:
                s1 = a
            else:
                s1 = _free(aa0, w1, ts - t0)
            _cq_rhs(s1, z, w1, e2, vm, lam, nu, backreact, vz, &ka1, k1)
            for i in range(d):
                tz[i] = z[i] + 0.5 * h * k1[i]
            if backreact:
                s2 = a + 0.5 * h * ka1
            else:
                s2 = _free(aa0, w1, ts + 0.5 * h - t0)
            _cq_rhs(s2, tz, w1, e2, vm, lam, nu, backreact, vz, &ka2, k2)
            for i in range(d):
                tz[i] = z[i] + 0.5 * h * k2[i]
            if backreact:
                s2 = a + 0.5 * h * ka2
            _cq_rhs(s2, tz, w1, e2, vm, lam, nu, backreact, vz, &ka3, k3)
            for i in range(d):
                tz[i] = z[i] + h * k3[i]
            if backreact:
                s4 = a + h * ka3
            else:
                s4 = _free(aa0, w1, ts + h - t0)
            _cq_rhs(s4, tz, w1, e2, vm, lam, nu, backreact, vz, &ka4, k4)
            if backreact:
                a = a + h / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4)
            for i in range(d):
                z[i] = z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        t = t + n * h
        if not backreact:
            a = _free(aa0, w1, t - t0)
        a_out[k + 1] = a
        for i in range(d):
            z_out[k + 1, i] = z[i]
    return a_np, z_np


def _dia(m):
    """Real matrix in diagonal storage: data[i, r] = m[r, r + offsets[i]]."""
    m = np.asarray(m, dtype=float)
    d = m.shape[0]
    offs = [k for k in range(-d + 1, d) if np.any(np.diagonal(m, k))]
    if not offs:
        offs = [0]
    data = np.zeros((len(offs), d))
    for i, k in enumerate(offs):
        diag = np.diagonal(m, k)
        if k >= 0:
            data[i, :d - k] = diag
        else:
            data[i, -k:] = diag
    return np.array(offs, dtype=np.intp), data


cdef void _qq_rhs(double[:, ::1] z, double[:, ::1] esum,
                  Py_ssize_t[::1] o1, double[:, ::1] v1,
                  Py_ssize_t[::1] o2, double[:, ::1] v2,
                  double lam, double[:, ::1] w, double[::1] row,
                  double[:, ::1] out) nogil:
    # z, w, out hold complex (d1, d2) matrices as interleaved (d1, 2 d2) doubles
    cdef Py_ssize_t d1 = z.shape[0], d2 = z.shape[1] // 2
    cdef Py_ssize_t n, m, i, k, lo, hi, r
    cdef double c
    # w = Z V2^T: w[n, m] = sum_k V2[m, m + k] Z[n, m + k]
    for n in range(d1):
        for m in range(2 * d2):
            w[n, m] = 0.0
        for i in range(o2.shape[0]):
            k = o2[i]
            lo = 0 if k >= 0 else -k
            hi = d2 - k if k >= 0 else d2
            for m in range(lo, hi):
                c = v2[i, m]
                w[n, 2 * m] += c * z[n, 2 * (m + k)]
                w[n, 2 * m + 1] += c * z[n, 2 * (m + k) + 1]
    # row = (E1 + E2) Z + lam V1 w, then out = -i row
    for n in range(d1):
        for m in range(d2):
            row[2 * m] = esum[n, m] * z[n, 2 * m]
            row[2 * m + 1] = esum[n, m] * z[n, 2 * m + 1]
        for i in range(o1.shape[0]):
            k = o1[i]
            r = n + k
            if r < 0 or r >= d1:
                continue
            c = lam * v1[i, n]
            if c == 0.0:
                continue
            for m in range(2 * d2):
                row[m] += c * w[r, m]
        for m in range(d2):
            out[n, 2 * m] = row[2 * m + 1]
            out[n, 2 * m + 1] = -row[2 * m]


def rk4_qq(z0, h1diag, h2diag, v1, v2, double lam,
           long[::1] nsub, double[::1] hsub):
    if np.any(np.imag(v1)) or np.any(np.imag(v2)):
        # complex couplings: use the dense numpy kernel
        from . import _pykernels
        return _pykernels.rk4_qq(z0, h1diag, h2diag, v1, v2, lam, nsub, hsub)
    cdef Py_ssize_t nout = nsub.shape[0] + 1
    zc = np.array(z0, dtype=complex, order="C")
    cdef Py_ssize_t d1 = zc.shape[0], d2 = zc.shape[1]
    cdef double[:, ::1] z = zc.view(np.float64)
    e1 = np.ascontiguousarray(h1diag, dtype=float)
    e2 = np.ascontiguousarray(h2diag, dtype=float)
    cdef double[:, ::1] esum = np.ascontiguousarray(e1[:, None] + e2[None, :])
    io1, iv1 = _dia(np.real(v1))
    io2, iv2 = _dia(np.real(v2))
    cdef Py_ssize_t[::1] o1 = io1, o2 = io2
    cdef double[:, ::1] dv1 = iv1, dv2 = iv2
    out_np = np.zeros((nout, d1, d2), dtype=complex)
    cdef double[:, :, ::1] out = out_np.view(np.float64)
    cdef Py_ssize_t n2 = 2 * d2
    cdef double[:, ::1] w = np.zeros((d1, n2))
    cdef double[::1] row = np.zeros(n2)
    cdef double[:, ::1] tz = np.zeros((d1, n2))
    cdef double[:, ::1] k1 = np.zeros((d1, n2))
    cdef double[:, ::1] k2 = np.zeros((d1, n2))
    cdef double[:, ::1] k3 = np.zeros((d1, n2))
    cdef double[:, ::1] k4 = np.zeros((d1, n2))
    cdef Py_ssize_t k, n, m
    cdef long j
    cdef double h
    out[0, :, :] = z
    with nogil:
        for k in range(nout - 1):
            h = hsub[k]
            for j in range(nsub[k]):
                _qq_rhs(z, esum, o1, dv1, o2, dv2, lam, w, row, k1)
                for n in range(d1):
                    for m in range(n2):
                        tz[n, m] = z[n, m] + 0.5 * h * k1[n, m]
                _qq_rhs(tz, esum, o1, dv1, o2, dv2, lam, w, row, k2)
                for n in range(d1):
                    for m in range(n2):
                        tz[n, m] = z[n, m] + 0.5 * h * k2[n, m]
                _qq_rhs(tz, esum, o1, dv1, o2, dv2, lam, w, row, k3)
                for n in range(d1):
                    for m in range(n2):
                        tz[n, m] = z[n, m] + h * k3[n, m]
                _qq_rhs(tz, esum, o1, dv1, o2, dv2, lam, w, row, k4)
                for n in range(d1):
                    for m in range(n2):
                        z[n, m] = z[n, m] + h / 6.0 * (
                            k1[n, m] + 2.0 * k2[n, m] + 2.0 * k3[n, m] + k4[n, m])
            out[k + 1, :, :] = z
    return out_np
