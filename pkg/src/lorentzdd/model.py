"""Physical parameters and every coefficient derived from them.

Units are natural (hbar = k_B = 1) and, by convention, frequencies are
measured in units of the bath peak frequency ``Omega_bath``.

Two coefficient sets are available for the homogeneous second-order
amplitude equations

    A1'' + alpha  A1' + beta  A1 + gamma_cross       A2 = 0
    A2'' + alpha~ A2' + beta~ A2 + gamma_cross_tilde A1 = 0

``form="reduced"`` (default) is obtained by differentiating the first-order
integro-differential amplitude equations and eliminating both the memory
integral and the cross-derivative term with the exact constraint

    A1' - A2' = i (g - w1) A1 + i (w2 - g) A2,

which holds whenever the memory integral enters both modes identically. It
reproduces the first-order dynamics exactly. ``form="printed"`` keeps the
literal published coefficients (no bath-mediated cross term, no ``g`` shift
of alpha and beta); it is kept for comparison only.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import DomainError, ParameterError

COEFFICIENT_FORMS = ("reduced", "printed")


@dataclass(frozen=True)
class PhysicalParams:
    """Bath and system constants.

    Defaults are the non-Markovian resonant regime (Gamma=15, gamma=1,
    Omega=omega1=omega2=1) at T_B=1 with weak direct coupling g=0.1.
    """

    omega1: float = 1.0
    omega2: float = 1.0
    g: float = 0.1
    Gamma: float = 15.0
    gamma_bath: float = 1.0
    Omega_bath: float = 1.0
    T_B: float = 1.0
    n10: float = 1.0
    n20: float = 0.0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
        if self.gamma_bath <= 0:
            raise ParameterError(f"gamma_bath must be > 0, got {self.gamma_bath}")
        for name in ("Gamma", "T_B", "n10", "n20"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")

    def with_(self, **changes) -> "PhysicalParams":
        return replace(self, **changes)

    @property
    def symmetric(self) -> bool:
        return self.omega1 == self.omega2

    @property
    def n_bath(self) -> float:
        """Thermal occupation of the resonant bath frequency."""
        return thermal_occupation(self.Omega_bath, self.T_B)


@dataclass(frozen=True)
class SecondOrderCoeffs:
    alpha: complex
    alpha_tilde: complex
    beta: complex
    beta_tilde: complex
    gamma_cross: complex
    gamma_cross_tilde: complex
    detuning: float = 0.0
    form: str = "reduced"

    @property
    def symmetric(self) -> bool:
        return (
            self.alpha == self.alpha_tilde
            and self.beta == self.beta_tilde
            and self.gamma_cross == self.gamma_cross_tilde
        )

    def generator(self) -> np.ndarray:
        """4x4 first-order generator acting on (A1, A2, A1', A2')."""
        K = np.zeros((4, 4), dtype=complex)
        K[0, 2] = K[1, 3] = 1.0
        K[2] = (-self.beta, -self.gamma_cross, -self.alpha, 0.0)
        K[3] = (-self.gamma_cross_tilde, -self.beta_tilde, 0.0, -self.alpha_tilde)
        return K


@dataclass(frozen=True)
class QuarticCoeffs:
    """Monic quartic l^4 + A l^3 + B l^2 + C l + D and its depressed form
    y^4 + p y^2 + q y + r under l = y - shift."""

    A: complex
    B: complex
    C: complex
    D: complex
    p: complex
    q: complex
    r: complex
    shift: complex

    @classmethod
    def from_monic(cls, A, B, C, D) -> "QuarticCoeffs":
        A, B, C, D = complex(A), complex(B), complex(C), complex(D)
        A2 = A * A
        p = B - 3.0 * A2 / 8.0
        q = C - A * B / 2.0 + A2 * A / 8.0
        r = D - A * C / 4.0 + A2 * B / 16.0 - 3.0 * A2 * A2 / 256.0
        return cls(A, B, C, D, p, q, r, A / 4.0)

    @property
    def monic(self) -> tuple[complex, complex, complex, complex]:
        return (self.A, self.B, self.C, self.D)

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=complex)
        return (((lam + self.A) * lam + self.B) * lam + self.C) * lam + self.D


def thermal_occupation(omega, T_B):
    """Bose-Einstein occupation 1/(exp(omega/T_B) - 1); exactly 0 at T_B = 0."""
    omega_arr = np.asarray(omega, dtype=float)
    if np.any(omega_arr <= 0):
        raise DomainError(f"thermal occupation needs omega > 0, got {omega}")
    if T_B < 0:
        raise DomainError(f"temperature must be >= 0, got {T_B}")
    if T_B == 0:
        out = np.zeros_like(omega_arr)
    else:
        with np.errstate(over="ignore"):
            out = 1.0 / np.expm1(omega_arr / T_B)
    return float(out) if out.ndim == 0 else out


def spectral_density(omega, params: PhysicalParams):
    """Lorentzian J(w) = (Gamma gamma / 2 pi) / ((w - Omega)^2 + gamma^2)."""
    w = np.asarray(omega, dtype=float)
    gam = params.gamma_bath
    out = params.Gamma * gam / (2.0 * np.pi) / ((w - params.Omega_bath) ** 2 + gam**2)
    return float(out) if out.ndim == 0 else out


def memory_kernel(delta_t, params: PhysicalParams):
    """G(dt) = (Gamma gamma / 2) exp(-(gamma + i Omega) dt), dt >= 0."""
    dt = np.asarray(delta_t, dtype=float)
    if np.any(dt < 0):
        raise DomainError(f"memory kernel lag must be >= 0, got {delta_t}")
    rate = params.gamma_bath + 1j * params.Omega_bath
    out = 0.5 * params.Gamma * params.gamma_bath * np.exp(-rate * dt)
    return complex(out) if out.ndim == 0 else out


def second_order_coeffs(
    params: PhysicalParams, detuning: float = 0.0, form: str = "reduced"
) -> SecondOrderCoeffs:
    """Coefficients of the homogeneous amplitude ODEs with both mode
    frequencies lifted by ``detuning``."""
    if form not in COEFFICIENT_FORMS:
        raise ParameterError(f"unknown coefficient form {form!r}; use one of {COEFFICIENT_FORMS}")
    gam, Om, g = params.gamma_bath, params.Omega_bath, params.g
    w1 = params.omega1 + detuning
    w2 = params.omega2 + detuning
    half = 0.5 * params.Gamma * gam
    direct = 1j * g * (gam + 1j * Om)

    alpha = gam + 1j * (Om + w1)
    alpha_t = gam + 1j * (Om + w2)
    beta = half - w1 * Om + 1j * gam * w1
    beta_t = half - w2 * Om + 1j * gam * w2
    if form == "printed":
        cross = cross_t = direct
    else:
        alpha += 1j * g
        alpha_t += 1j * g
        beta -= g * (w1 - g)
        beta_t -= g * (w2 - g)
        cross = half + direct - g * (g - w2)
        cross_t = half + direct - g * (g - w1)
    return SecondOrderCoeffs(
        complex(alpha), complex(alpha_t), complex(beta), complex(beta_t),
        complex(cross), complex(cross_t), float(detuning), form,
    )


def quartic_coeffs(c: SecondOrderCoeffs) -> QuarticCoeffs:
    """Characteristic quartic det[[l^2+a l+b, x], [x~, l^2+a~ l+b~]] = 0."""
    A = c.alpha + c.alpha_tilde
    B = c.alpha * c.alpha_tilde + c.beta + c.beta_tilde
    C = c.alpha * c.beta_tilde + c.alpha_tilde * c.beta
    D = c.beta * c.beta_tilde - c.gamma_cross * c.gamma_cross_tilde
    return QuarticCoeffs.from_monic(A, B, C, D)


def first_order_generator(params: PhysicalParams, detuning: float = 0.0) -> np.ndarray:
    """3x3 generator of (A1, A2, M) with M the memory integral.

    M(t) = int_0^t G(t-s) (A1 + A2)(s) ds obeys
    M' = (Gamma gamma / 2)(A1 + A2) - (gamma + i Omega) M.
    """
    w1 = params.omega1 + detuning
    w2 = params.omega2 + detuning
    g = params.g
    half = 0.5 * params.Gamma * params.gamma_bath
    return np.array(
        [
            [-1j * w1, -1j * g, -1.0],
            [-1j * g, -1j * w2, -1.0],
            [half, half, -(params.gamma_bath + 1j * params.Omega_bath)],
        ],
        dtype=complex,
    )
