"""Independent reference propagators.

``integrate_kernel``
    Fixed-step RK4 on the first-order system (A1, A2, M), where M is the
    memory integral of the Lorentzian kernel. No quartic and no matching
    rule: M is simply carried across detuning switches.
``integrate_second_order``
    RK4 on the same second-order ODEs the closed form solves, honouring the
    chosen matching rule. Isolates root-finding errors from modelling ones.
``propagate_exact``
    Matrix exponential of the first-order generator, segment by segment.
``integrate_discrete_bath``
    Explicit finite bath of N oscillators sampled from the Lorentzian.

All of them return samples at step edges; a sample lying on a switch time
carries the state just after the switch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .control import Schedule
from .errors import ContractError, ParameterError, StabilityError
from .model import (
    PhysicalParams,
    first_order_generator,
    second_order_coeffs,
    spectral_density,
    thermal_occupation,
)
from .observables import ObservableSeries, Trajectory
from .propagator import MatchingMode, initial_state

RK4_STABILITY = 2.5
MIN_SUBSTEPS = 4


def _check_stable(L: np.ndarray, h: float):
    rho = float(np.max(np.abs(np.linalg.eigvals(L))))
    if rho * h > RK4_STABILITY:
        raise StabilityError(
            f"RK4 step h={h:.3g} unstable for spectral radius {rho:.3g}",
            suggested_dt=0.5 * RK4_STABILITY / rho,
        )


def _join(chunks):
    """Concatenate per-segment histories; each switch point is kept once,
    from the segment that starts there."""
    last = len(chunks) - 1
    return np.concatenate([c if i == last else c[:-1] for i, c in enumerate(chunks)])


def _check_dt(dt):
    if not (dt > 0 and math.isfinite(dt)):
        raise ContractError(f"dt must be positive and finite, got {dt}")


def _check_grid(grid, t_end):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or grid[0] < 0 or grid[-1] > t_end * (1 + 1e-12):
        raise ContractError("grid must be a non-empty 1-D array inside [0, t_end]")
    if np.any(np.diff(grid) <= 0):
        raise ContractError("grid must be strictly increasing")
    return grid


def _drive(segs, dt, grid, start, advance):
    """Piecewise fixed-step driver shared by the RK4 oracles.

    ``start(d, y)`` returns the state entering a segment with detuning d and
    ``advance(y, d, h, n)`` returns an (n + 1, k) record history plus the
    final state. Without ``grid`` every step edge is recorded; with it, each
    segment is further split at the grid points and only those are kept.
    """
    y = None
    ts, recs, ds = [], [], []
    for k, (t0, t1, d) in enumerate(segs):
        y = start(d, y)
        last = k == len(segs) - 1
        if grid is None:
            n = max(MIN_SUBSTEPS, math.ceil((t1 - t0) / dt - 1e-9))
            h = (t1 - t0) / n
            rec, y = advance(y, d, h, n)
            ts.append(t0 + h * np.arange(n + 1))
            recs.append(rec)
            ds.append(np.full(n + 1, d))
            continue
        sel = (grid >= t0) & ((grid <= t1) if last else (grid < t1))
        stops = grid[sel]
        rows, cur = [], t0
        for stop in stops:
            n = math.ceil((stop - cur) / dt - 1e-9) if stop > cur else 0
            rec, y = advance(y, d, (stop - cur) / n if n else 0.0, n)
            rows.append(rec[-1])
            cur = stop
        if t1 > cur:
            n = max(1, math.ceil((t1 - cur) / dt - 1e-9))
            _, y = advance(y, d, (t1 - cur) / n, n)
        if rows:
            ts.append(stops)
            recs.append(np.array(rows))
            ds.append(np.full(len(rows), d))
    if grid is None:
        times = _join(ts)
        times[-1] = segs[-1][1]
        return times, _join(recs), _join(ds)
    return np.concatenate(ts), np.concatenate(recs), np.concatenate(ds)


def _linear_advance(generators):
    def advance(y, d, h, n):
        L = generators(d)
        _check_stable(L, h)
        hist = kernels.rk4_linear(L, y, h, n)
        return hist, hist[-1]
    return advance


def integrate_kernel(params: PhysicalParams, schedule: Schedule, dt: float = 1e-3,
                     t_end: float | None = None, grid=None) -> Trajectory:
    """RK4 on (A1, A2, M); steps are shrunk so switches fall on step edges."""
    _check_dt(dt)
    t_end = schedule.horizon if t_end is None else float(t_end)
    grid = None if grid is None else _check_grid(grid, t_end)
    cache = {}

    def gen(d):
        if d not in cache:
            cache[d] = np.ascontiguousarray(first_order_generator(params, d))
        return cache[d]

    def start(d, y):
        return np.array([1.0, 0.0, 0.0], dtype=complex) if y is None else y

    times, Y, det = _drive(schedule.segments(t_end), dt, grid, start, _linear_advance(gen))
    dY = np.empty_like(Y)
    for d in np.unique(det):
        sel = det == d
        dY[sel] = Y[sel] @ gen(d).T
    return Trajectory(times, Y[:, 0], Y[:, 1], dY[:, 0], dY[:, 1],
                      {"propagator": "rk4-kernel", "dt": dt, "backend": kernels.BACKEND}, det)


def integrate_second_order(params: PhysicalParams, schedule: Schedule, dt: float = 1e-3,
                           t_end: float | None = None, matching=MatchingMode.KERNEL,
                           form: str = "reduced", grid=None) -> Trajectory:
    """RK4 on the 4x4 generator of (A1, A2, A1', A2') with explicit matching."""
    _check_dt(dt)
    matching = MatchingMode.parse(matching)
    t_end = schedule.horizon if t_end is None else float(t_end)
    grid = None if grid is None else _check_grid(grid, t_end)
    segs = schedule.segments(t_end)
    cache = {}
    prev = {"d": segs[0][2]}

    def gen(d):
        if d not in cache:
            cache[d] = np.ascontiguousarray(second_order_coeffs(params, d, form).generator())
        return cache[d]

    def start(d, y):
        if y is None:
            y = initial_state(params, d)
        elif matching is MatchingMode.KERNEL and d != prev["d"]:
            y = y.copy()
            y[2:] -= 1j * (d - prev["d"]) * y[:2]
        prev["d"] = d
        return y

    times, Y, det = _drive(segs, dt, grid, start, _linear_advance(gen))
    return Trajectory(times, Y[:, 0], Y[:, 1], Y[:, 2], Y[:, 3],
                      {"propagator": "rk4-second-order", "dt": dt, "matching": matching.value,
                       "coefficient_form": form, "backend": kernels.BACKEND}, det)


def propagate_exact(params: PhysicalParams, schedule: Schedule, grid) -> Trajectory:
    """Exact first-order propagation by matrix exponentials on ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0) or grid[0] < 0:
        raise ContractError("grid must be a strictly increasing 1-D array starting at >= 0")
    t_end = float(grid[-1])
    segs = schedule.segments(t_end)
    out = np.empty((grid.size, 3), dtype=complex)
    der = np.empty_like(out)
    det = np.empty(grid.size)
    y = np.array([1.0, 0.0, 0.0], dtype=complex)
    lo = 0
    for k, (t0, t1, d) in enumerate(segs):
        L = first_order_generator(params, d)
        last = k == len(segs) - 1
        hi = grid.size if last else int(np.searchsorted(grid, t1, side="left"))
        for i in range(lo, hi):
            out[i] = scipy.linalg.expm(L * (grid[i] - t0)) @ y
            der[i] = L @ out[i]
            det[i] = d
        lo = hi
        y = scipy.linalg.expm(L * (t1 - t0)) @ y
    return Trajectory(grid.copy(), out[:, 0], out[:, 1], der[:, 0], der[:, 1],
                      {"propagator": "expm-first-order"}, det)


@dataclass
class BathTrajectory:
    """Discrete-bath run: system amplitudes plus bath bookkeeping."""

    trajectory: Trajectory
    bath_population: np.ndarray  # sum_j |B_j|^2
    bath_thermal: np.ndarray  # sum_j |B_j|^2 n_B(omega_j)
    freqs: np.ndarray
    kappa: np.ndarray

    @property
    def total_norm(self) -> np.ndarray:
        return self.trajectory.norm + self.bath_population


def bath_modes(params: PhysicalParams, N: int, cutoff: float = 40.0):
    """Midpoint frequency grid on [Omega - cutoff gamma, Omega + cutoff gamma].

    Couplings are kappa_j = sqrt(gamma J(omega_j) d_omega), so that
    sum_j kappa_j^2 exp(-i omega_j t) converges to the memory kernel G(t),
    whose amplitude is gamma times the Fourier transform of J.
    """
    if N < 1 or cutoff <= 0:
        raise ParameterError("need N >= 1 and cutoff > 0")
    span = 2.0 * cutoff * params.gamma_bath
    dw = span / N
    freqs = params.Omega_bath - 0.5 * span + dw * (np.arange(N) + 0.5)
    kappa = np.sqrt(params.gamma_bath * spectral_density(freqs, params) * dw)
    return freqs, kappa, dw


def bath_occupations(params: PhysicalParams, freqs) -> np.ndarray:
    """n_B(omega_j); modes at omega_j <= 0 are taken as empty."""
    freqs = np.asarray(freqs, dtype=float)
    occ = np.zeros_like(freqs)
    pos = freqs > 0
    if np.any(pos):
        occ[pos] = thermal_occupation(freqs[pos], params.T_B)
    return occ


def integrate_discrete_bath(params: PhysicalParams, schedule: Schedule, N: int = 2000,
                            cutoff: float = 40.0, dt: float = 1e-3,
                            t_end: float | None = None, grid=None) -> BathTrajectory:
    """Single-excitation dynamics of the two modes and N explicit bath modes."""
    _check_dt(dt)
    t_end = schedule.horizon if t_end is None else float(t_end)
    grid = None if grid is None else _check_grid(grid, t_end)
    freqs, kappa, dw = bath_modes(params, N, cutoff)
    if 2.0 * np.pi / dw <= t_end:
        raise ParameterError(
            f"bath recurrence time 2 pi / d_omega = {2 * np.pi / dw:.4g} does not exceed "
            f"t_end = {t_end}; increase N or reduce cutoff"
        )
    occ = bath_occupations(params, freqs)

    def start(d, y):
        return (1.0 + 0j, 0j, np.zeros(N, dtype=complex)) if y is None else y

    def advance(y, d, h, n):
        a1, a2, B = y
        w1, w2 = params.omega1 + d, params.omega2 + d
        rho = max(abs(w1), abs(w2), float(np.max(np.abs(freqs)))) + abs(params.g)
        if rho * h > RK4_STABILITY:
            raise StabilityError(f"RK4 step h={h:.3g} unstable for frequency {rho:.3g}",
                                 suggested_dt=0.5 * RK4_STABILITY / rho)
        H1, H2, P, T = kernels.rk4_bath(w1, w2, params.g, freqs, kappa, occ, a1, a2, B, h, n)
        rec = np.stack([H1, H2, P, T], axis=1)
        return rec, (complex(H1[-1]), complex(H2[-1]), B)

    times, R, det = _drive(schedule.segments(t_end), dt, grid, start, advance)
    A1, A2 = R[:, 0], R[:, 1]
    # bath feedback is omitted from the derivative columns
    dA1 = -1j * (params.omega1 + det) * A1 - 1j * params.g * A2
    dA2 = -1j * (params.omega2 + det) * A2 - 1j * params.g * A1
    traj = Trajectory(times, A1, A2, dA1, dA2,
                      {"propagator": "rk4-discrete-bath", "dt": dt, "N": N, "cutoff": cutoff,
                       "backend": kernels.BACKEND}, det)
    return BathTrajectory(traj, R[:, 2].real.copy(), R[:, 3].real.copy(), freqs, kappa)


def observables_from_bath(run: BathTrajectory, params: PhysicalParams,
                          occupation: str = "per-mode") -> ObservableSeries:
    """Occupations from an explicit-bath run.

    ``occupation="per-mode"`` weights each bath amplitude with n_B(omega_j);
    ``"flat"`` uses n_B(Omega) for every bath mode. The bath amplitudes are
    the mode-1 column of the single-particle propagator, which equals its
    mode-1 row only for time-independent detuning, so per-mode weighting
    requires a schedule with a single constant segment. The coherence bath
    term assumes the mode-swap symmetric case, where both modes see the
    same bath amplitudes.
    """
    traj = run.trajectory
    if occupation == "per-mode":
        if np.unique(traj.detuning).size > 1:
            raise ContractError("per-mode bath occupation requires a time-independent schedule")
        bath = run.bath_thermal
    elif occupation == "flat":
        bath = run.bath_population * params.n_bath
    else:
        raise ContractError(f"unknown occupation mode {occupation!r}")
    p1, p2 = np.abs(traj.A1) ** 2, np.abs(traj.A2) ** 2
    n1 = p1 * params.n10 + p2 * params.n20 + bath
    n2 = p2 * params.n10 + p1 * params.n20 + bath
    coh = (np.conj(traj.A1) * traj.A2 * params.n10
           + np.conj(traj.A2) * traj.A1 * params.n20 + bath)
    witness = np.abs(coh) ** 2 - n1 * n2
    return ObservableSeries(traj.times.copy(), n1, n2, coh, witness, traj.norm)
