"""Pure-Python (numpy) fallback for the compiled RK4 kernels."""

from __future__ import annotations

import numpy as np


def rk4_linear(L, y0, h, nsteps):
    """Classical RK4 for y' = L y; returns the (nsteps + 1, n) state history."""
    L = np.asarray(L, dtype=complex)
    y = np.array(y0, dtype=complex)
    out = np.empty((nsteps + 1, y.size), dtype=complex)
    out[0] = y
    # one RK4 step of a linear system is multiplication by a fixed matrix
    hL = h * L
    I = np.eye(y.size, dtype=complex)
    k1 = hL
    k2 = hL @ (I + 0.5 * k1)
    k3 = hL @ (I + 0.5 * k2)
    k4 = hL @ (I + k3)
    step = I + (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    for s in range(nsteps):
        y = step @ y
        out[s + 1] = y
    return out


def rk4_bath(w1, w2, g, freqs, kappa, occupation, a1, a2, B, h, nsteps):
    """RK4 for two modes coupled to N explicit bath amplitudes.

    Updates ``B`` in place. Returns (A1, A2, bath_population, bath_thermal)
    histories of length nsteps + 1, where bath_thermal = sum |B_j|^2 n_j.
    """
    freqs = np.asarray(freqs, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    occupation = np.asarray(occupation, dtype=float)
    H1 = np.empty(nsteps + 1, dtype=complex)
    H2 = np.empty(nsteps + 1, dtype=complex)
    HP = np.empty(nsteps + 1)
    HT = np.empty(nsteps + 1)
    a1, a2 = complex(a1), complex(a2)

    def rhs(x1, x2, b):
        s = kappa @ b
        return (-1j * w1 * x1 - 1j * g * x2 - 1j * s,
                -1j * w2 * x2 - 1j * g * x1 - 1j * s,
                -1j * freqs * b - 1j * kappa * (x1 + x2))

    m = np.abs(B) ** 2
    H1[0], H2[0], HP[0], HT[0] = a1, a2, m.sum(), m @ occupation
    for s in range(nsteps):
        p1, p2, kb1 = rhs(a1, a2, B)
        q1, q2, kb2 = rhs(a1 + 0.5 * h * p1, a2 + 0.5 * h * p2, B + 0.5 * h * kb1)
        r1, r2, kb3 = rhs(a1 + 0.5 * h * q1, a2 + 0.5 * h * q2, B + 0.5 * h * kb2)
        u1, u2, kb4 = rhs(a1 + h * r1, a2 + h * r2, B + h * kb3)
        a1 += (h / 6.0) * (p1 + 2 * q1 + 2 * r1 + u1)
        a2 += (h / 6.0) * (p2 + 2 * q2 + 2 * r2 + u2)
        B += (h / 6.0) * (kb1 + 2 * kb2 + 2 * kb3 + kb4)
        m = np.abs(B) ** 2
        H1[s + 1], H2[s + 1], HP[s + 1], HT[s + 1] = a1, a2, m.sum(), m @ occupation
    return H1, H2, HP, HT
