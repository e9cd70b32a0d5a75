"""Closed-form piecewise propagation of the mode amplitudes.

Within a constant-detuning segment the amplitudes are a superposition of
four exponentials whose rates are the roots of the characteristic quartic.
Segments are joined by a matching rule:

``kernel-continuous`` (default)
    A1, A2 and the memory integral are continuous. Since the memory
    integral enters A_i' additively, the derivatives jump by
    -i (d_new - d_old) A_i at every switch.
``derivative-continuous``
    A1, A2, A1', A2' are all copied across the switch. This discards the
    instantaneous frequency jump and does not conserve probability under
    strong control; it is kept for comparison.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .control import Schedule
from .errors import ContractError, NumericalError
from .model import (
    PhysicalParams,
    SecondOrderCoeffs,
    quartic_coeffs,
    second_order_coeffs,
)
from .observables import SegmentState, Trajectory
from .quartic import RootSet, solve_quartic, track_branches

CONDITION_LIMIT = 1e12
DECOUPLED_TOL = 1e-13


class MatchingMode(str, enum.Enum):
    DERIVATIVE = "derivative-continuous"
    KERNEL = "kernel-continuous"

    @classmethod
    def parse(cls, value) -> "MatchingMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ContractError(
                f"unknown matching mode {value!r}; use one of {[m.value for m in cls]}"
            ) from None


@dataclass(frozen=True)
class Eigenmode:
    rate: complex
    vector: tuple[complex, complex]  # (A1, A2) components
    weight: complex


@dataclass
class SegmentSolution:
    t0: float
    t1: float
    coeffs: SecondOrderCoeffs
    lambdas: np.ndarray
    vectors: np.ndarray  # shape (4, 2)
    constants: np.ndarray
    condition: float
    method: str  # "modal", "decoupled" or "expm"
    roots: RootSet | None = None
    _state0: np.ndarray | None = field(default=None, repr=False)

    @property
    def modes(self) -> list[Eigenmode]:
        return [
            Eigenmode(complex(l), (complex(v[0]), complex(v[1])), complex(c))
            for l, v, c in zip(self.lambdas, self.vectors, self.constants)
        ]


def mode_ratios(coeffs: SecondOrderCoeffs, lambdas) -> np.ndarray:
    """A2/A1 amplitude ratio of each coupled mode.

    Either row of the 2x2 characteristic matrix determines the ratio; the
    row with the larger pivot is used.
    """
    lam = np.asarray(lambdas, dtype=complex)
    row1 = lam**2 + coeffs.alpha * lam + coeffs.beta
    row2 = lam**2 + coeffs.alpha_tilde * lam + coeffs.beta_tilde
    use_first = np.abs(coeffs.gamma_cross) >= np.abs(row2)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = -row1 / coeffs.gamma_cross
        r2 = -coeffs.gamma_cross_tilde / row2
    return np.where(use_first, r1, r2)


def _decoupled(coeffs: SecondOrderCoeffs) -> bool:
    scale = 1.0 + max(abs(coeffs.alpha), abs(coeffs.beta), abs(coeffs.alpha_tilde),
                      abs(coeffs.beta_tilde))
    return max(abs(coeffs.gamma_cross), abs(coeffs.gamma_cross_tilde)) <= DECOUPLED_TOL * scale


def _quadratic_roots(a: complex, b: complex) -> np.ndarray:
    disc = np.sqrt(complex(a * a - 4 * b))
    return np.array([(-a + disc) / 2, (-a - disc) / 2], dtype=complex)


def _mode_matrix(lambdas, vectors) -> np.ndarray:
    M = np.empty((4, 4), dtype=complex)
    M[0] = vectors[:, 0]
    M[1] = vectors[:, 1]
    M[2] = lambdas * vectors[:, 0]
    M[3] = lambdas * vectors[:, 1]
    return M


def solve_segment(coeffs: SecondOrderCoeffs, t0: float, t1: float, state0,
                  prev_roots: RootSet | None = None) -> SegmentSolution:
    """Fit the four modal amplitudes to the state (A1, A2, A1', A2') at t0."""
    y0 = np.asarray(state0.vector() if isinstance(state0, SegmentState) else state0,
                    dtype=complex)
    roots = None
    if _decoupled(coeffs):
        lambdas = np.concatenate([_quadratic_roots(coeffs.alpha, coeffs.beta),
                                  _quadratic_roots(coeffs.alpha_tilde, coeffs.beta_tilde)])
        vectors = np.array([[1, 0], [1, 0], [0, 1], [0, 1]], dtype=complex)
        method = "decoupled"
    else:
        roots = solve_quartic(quartic_coeffs(coeffs))
        if prev_roots is not None:
            roots = track_branches(prev_roots, roots)
        lambdas = roots.roots
        vectors = np.stack([np.ones(4, dtype=complex), mode_ratios(coeffs, lambdas)], axis=1)
        method = "modal"

    condition = np.inf
    if np.all(np.isfinite(vectors)):
        M = _mode_matrix(lambdas, vectors)
        condition = float(np.linalg.cond(M))
    if condition <= CONDITION_LIMIT:
        constants = np.linalg.solve(M, y0)
    else:
        method, constants = "expm", np.full(4, np.nan, dtype=complex)
    return SegmentSolution(float(t0), float(t1), coeffs, lambdas, vectors, constants,
                           condition, method, roots, y0)


def evaluate(seg: SegmentSolution, t) -> np.ndarray:
    """State (A1, A2, A1', A2') at time(s) t; shape (4,) or (4, len(t))."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    s = t_arr - seg.t0
    if seg.method == "expm":
        K = seg.coeffs.generator()
        out = np.stack([scipy.linalg.expm(K * si) @ seg._state0 for si in s], axis=1)
    else:
        E = np.exp(np.outer(seg.lambdas, s)) * seg.constants[:, None]  # (4, n)
        vA1, vA2 = seg.vectors[:, 0], seg.vectors[:, 1]
        out = np.stack([
            vA1 @ E,
            vA2 @ E,
            (vA1 * seg.lambdas) @ E,
            (vA2 * seg.lambdas) @ E,
        ])
    if seg._state0 is not None:
        out[:, s == 0] = seg._state0[:, None]  # the fitted state itself, without rounding
    return out[:, 0] if np.ndim(t) == 0 else out


def initial_state(params: PhysicalParams, detuning: float = 0.0) -> np.ndarray:
    """(A1, A2, A1', A2') at t=0 for one excitation in mode 1, empty memory."""
    return np.array([1.0, 0.0, -1j * (params.omega1 + detuning), -1j * params.g], dtype=complex)


def default_grid(t_end: float, dt: float) -> np.ndarray:
    n = int(round(t_end / dt))
    if n < 1 or not np.isclose(n * dt, t_end, rtol=1e-9, atol=0):
        raise ContractError(f"t_end={t_end} is not an integer multiple of dt={dt}")
    return np.linspace(0.0, t_end, n + 1)


def propagate(params: PhysicalParams, schedule: Schedule, grid=None, *, dt: float = 0.01,
              t_end: float | None = None, matching=MatchingMode.KERNEL,
              form: str = "reduced") -> Trajectory:
    """Piecewise closed-form trajectory sampled on ``grid``.

    A sample lying exactly on a switch time belongs to the later segment,
    consistent with right-open pulse intervals.
    """
    matching = MatchingMode.parse(matching)
    t_end = schedule.horizon if t_end is None else float(t_end)
    grid = default_grid(t_end, dt) if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or grid[0] < 0 or grid[-1] > t_end * (1 + 1e-12):
        raise ContractError("grid must be a non-empty 1-D array inside [0, t_end]")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ContractError("grid must be strictly increasing")

    segments = schedule.segments(t_end)
    out = np.empty((4, grid.size), dtype=complex)
    det = np.empty(grid.size, dtype=float)
    flagged = []
    cache: dict[float, SecondOrderCoeffs] = {}
    state = initial_state(params, segments[0][2])
    prev_d = segments[0][2]
    prev_roots = None
    methods: dict[str, int] = {}

    lo = 0
    for k, (t0, t1, d) in enumerate(segments):
        if matching is MatchingMode.KERNEL and d != prev_d:
            state = state.copy()
            state[2:] -= 1j * (d - prev_d) * state[:2]
        coeffs = cache.get(d)
        if coeffs is None:
            coeffs = cache[d] = second_order_coeffs(params, d, form)
        seg = solve_segment(coeffs, t0, t1, state, prev_roots)
        methods[seg.method] = methods.get(seg.method, 0) + 1
        if seg.method != "modal":
            flagged.append({"t0": t0, "t1": t1, "method": seg.method,
                            "condition": seg.condition})
        if seg.roots is not None:
            prev_roots = seg.roots
        last = k == len(segments) - 1
        hi = grid.size if last else int(np.searchsorted(grid, t1, side="left"))
        if hi > lo:
            out[:, lo:hi] = evaluate(seg, grid[lo:hi])
            det[lo:hi] = d
        lo = hi
        if not last:
            state = evaluate(seg, t1)
            if not np.all(np.isfinite(state)):
                raise NumericalError(f"non-finite amplitudes at t = {t1}")
        prev_d = d

    if not np.all(np.isfinite(out)):
        raise NumericalError("non-finite amplitudes in closed-form propagation")
    provenance = {
        "propagator": "closed-form",
        "coefficient_form": form,
        "matching": matching.value,
        "segments": len(segments),
        "segment_methods": methods,
        "flagged_segments": flagged,
    }
    return Trajectory(grid.copy(), out[0], out[1], out[2], out[3], provenance, det)
