# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled fixed-step RK4 kernels. Must match lorentzdd._kernels_py exactly
in arithmetic order up to floating-point reassociation."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def rk4_linear(const double complex[:, ::1] L, const double complex[::1] y0,
               double h, Py_ssize_t nsteps):
    """Classical RK4 for y' = L y; returns the (nsteps + 1, n) state history."""
    cdef Py_ssize_t n = y0.shape[0]
    cdef Py_ssize_t s, i, j
    out_arr = np.empty((nsteps + 1, n), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef double complex[::1] y = np.array(y0, dtype=np.complex128)
    cdef double complex[::1] k1 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k2 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k3 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k4 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] tmp = np.empty(n, dtype=np.complex128)
    cdef double complex acc

    for i in range(n):
        out[0, i] = y[i]
    for s in range(nsteps):
        for i in range(n):
            acc = 0
            for j in range(n):
                acc = acc + L[i, j] * y[j]
            k1[i] = acc
        for i in range(n):
            tmp[i] = y[i] + 0.5 * h * k1[i]
        for i in range(n):
            acc = 0
            for j in range(n):
                acc = acc + L[i, j] * tmp[j]
            k2[i] = acc
        for i in range(n):
            tmp[i] = y[i] + 0.5 * h * k2[i]
        for i in range(n):
            acc = 0
            for j in range(n):
                acc = acc + L[i, j] * tmp[j]
            k3[i] = acc
        for i in range(n):
            tmp[i] = y[i] + h * k3[i]
        for i in range(n):
            acc = 0
            for j in range(n):
                acc = acc + L[i, j] * tmp[j]
            k4[i] = acc
        for i in range(n):
            y[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            out[s + 1, i] = y[i]
    return out_arr


cdef inline double complex _bath_stage(
        double complex a1, double complex a2,
        const double* freqs, const double* kappa,
        const double complex* B, const double complex* kprev, double ch,
        double complex* kout, Py_ssize_t N) noexcept nogil:
    """Bath derivatives at B + ch kprev; returns sum_j kappa_j (B + ch kprev)_j."""
    # Split into real parts: C99 complex products go through __muldc3.
    cdef const double* b = <const double*> B
    cdef const double* kp = <const double*> kprev
    cdef double* ko = <double*> kout
    cdef double dr = (a1 + a2).imag, di = -(a1 + a2).real
    cdef double br, bi, sr = 0.0, si = 0.0
    cdef Py_ssize_t j
    for j in range(N):
        br = b[2 * j] + ch * kp[2 * j]
        bi = b[2 * j + 1] + ch * kp[2 * j + 1]
        sr = sr + kappa[j] * br
        si = si + kappa[j] * bi
        ko[2 * j] = freqs[j] * bi + kappa[j] * dr
        ko[2 * j + 1] = -freqs[j] * br + kappa[j] * di
    return sr + 1j * si


def rk4_bath(double w1, double w2, double g,
             const double[::1] freqs, const double[::1] kappa, const double[::1] occupation,
             double complex a1, double complex a2, double complex[::1] B,
             double h, Py_ssize_t nsteps):
    """RK4 for two modes coupled to N explicit bath amplitudes.

    Updates ``B`` in place. Returns (A1, A2, bath_population, bath_thermal)
    histories of length nsteps + 1, where bath_thermal = sum |B_j|^2 n_j.
    """
    cdef Py_ssize_t N = B.shape[0]
    cdef Py_ssize_t s, j
    hist_a1 = np.empty(nsteps + 1, dtype=np.complex128)
    hist_a2 = np.empty(nsteps + 1, dtype=np.complex128)
    hist_pop = np.empty(nsteps + 1, dtype=np.float64)
    hist_th = np.empty(nsteps + 1, dtype=np.float64)
    cdef double complex[::1] H1 = hist_a1, H2 = hist_a2
    cdef double[::1] HP = hist_pop, HT = hist_th
    cdef double complex[::1] k1 = np.zeros(N, dtype=np.complex128)
    cdef double complex[::1] k2 = np.empty(N, dtype=np.complex128)
    cdef double complex[::1] k3 = np.empty(N, dtype=np.complex128)
    cdef double complex[::1] k4 = np.empty(N, dtype=np.complex128)
    cdef double complex s1, s2, s3, s4, t1, t2
    cdef double complex p1, p2, q1, q2, r1, r2, u1, u2
    cdef double pop, th, m
    cdef const double* fp = &freqs[0]
    cdef const double* kp = &kappa[0]
    cdef double complex* Bp = &B[0]
    cdef double* b = <double*> Bp
    cdef double* x1 = <double*> &k1[0]
    cdef double* x2 = <double*> &k2[0]
    cdef double* x3 = <double*> &k3[0]
    cdef double* x4 = <double*> &k4[0]
    cdef double h6 = h / 6.0

    with nogil:
        pop = 0
        th = 0
        for j in range(N):
            m = B[j].real * B[j].real + B[j].imag * B[j].imag
            pop = pop + m
            th = th + m * occupation[j]
        H1[0] = a1
        H2[0] = a2
        HP[0] = pop
        HT[0] = th
        for s in range(nsteps):
            s1 = _bath_stage(a1, a2, fp, kp, Bp, Bp, 0.0, &k1[0], N)
            p1 = -1j * w1 * a1 - 1j * g * a2 - 1j * s1
            p2 = -1j * w2 * a2 - 1j * g * a1 - 1j * s1
            t1 = a1 + 0.5 * h * p1
            t2 = a2 + 0.5 * h * p2
            s2 = _bath_stage(t1, t2, fp, kp, Bp, &k1[0], 0.5 * h, &k2[0], N)
            q1 = -1j * w1 * t1 - 1j * g * t2 - 1j * s2
            q2 = -1j * w2 * t2 - 1j * g * t1 - 1j * s2
            t1 = a1 + 0.5 * h * q1
            t2 = a2 + 0.5 * h * q2
            s3 = _bath_stage(t1, t2, fp, kp, Bp, &k2[0], 0.5 * h, &k3[0], N)
            r1 = -1j * w1 * t1 - 1j * g * t2 - 1j * s3
            r2 = -1j * w2 * t2 - 1j * g * t1 - 1j * s3
            t1 = a1 + h * r1
            t2 = a2 + h * r2
            s4 = _bath_stage(t1, t2, fp, kp, Bp, &k3[0], 1.0 * h, &k4[0], N)
            u1 = -1j * w1 * t1 - 1j * g * t2 - 1j * s4
            u2 = -1j * w2 * t2 - 1j * g * t1 - 1j * s4
            a1 = a1 + (h / 6.0) * (p1 + 2.0 * q1 + 2.0 * r1 + u1)
            a2 = a2 + (h / 6.0) * (p2 + 2.0 * q2 + 2.0 * r2 + u2)
            pop = 0
            th = 0
            for j in range(2 * N):
                b[j] = b[j] + h6 * (x1[j] + 2.0 * x2[j] + 2.0 * x3[j] + x4[j])
            for j in range(N):
                m = b[2 * j] * b[2 * j] + b[2 * j + 1] * b[2 * j + 1]
                pop = pop + m
                th = th + m * occupation[j]
            H1[s + 1] = a1
            H2[s + 1] = a2
            HP[s + 1] = pop
            HT[s + 1] = th
    return hist_a1, hist_a2, hist_pop, hist_th
