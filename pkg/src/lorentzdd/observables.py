"""Amplitude trajectories, physical observables and the suppression metric."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, PhysicalityError
from .model import PhysicalParams

PHYSICALITY_SLACK = 1e-6


@dataclass(frozen=True)
class SegmentState:
    t: float
    A1: complex
    A2: complex
    dA1: complex
    dA2: complex

    def vector(self) -> np.ndarray:
        return np.array([self.A1, self.A2, self.dA1, self.dA2], dtype=complex)

    @classmethod
    def from_vector(cls, t, v) -> "SegmentState":
        return cls(float(t), complex(v[0]), complex(v[1]), complex(v[2]), complex(v[3]))


@dataclass
class Trajectory:
    """Sampled amplitudes A1, A2 and their time derivatives.

    ``A2`` is the amplitude of mode 2 given a single excitation initially in
    mode 1; by the mode-swap symmetry it is also the mode-2 coefficient of
    the mode-1 operator expansion.
    """

    times: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    dA1: np.ndarray
    dA2: np.ndarray
    provenance: dict = field(default_factory=dict)
    detuning: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        n = len(self.times)
        for name in ("A1", "A2", "dA1", "dA2"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            if arr.shape != (n,):
                raise ContractError(f"{name} has shape {arr.shape}, expected ({n},)")
            setattr(self, name, arr)
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ContractError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> SegmentState:
        return SegmentState(self.times[i], self.A1[i], self.A2[i], self.dA1[i], self.dA2[i])

    @property
    def norm(self) -> np.ndarray:
        return np.abs(self.A1) ** 2 + np.abs(self.A2) ** 2


@dataclass
class ObservableSeries:
    times: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    coherence: np.ndarray
    witness: np.ndarray
    norm: np.ndarray


@dataclass
class SuppressionSeries:
    times: np.ndarray
    S: np.ndarray
    window_avg: float
    window: tuple[float, float]
    skipped: int


@dataclass(frozen=True)
class TrendReport:
    monotonic_rise: bool
    revival_count: int
    witness_max: float


def observables(traj: Trajectory, params: PhysicalParams) -> ObservableSeries:
    """Mode occupations, inter-mode coherence and the Cauchy-Schwarz witness.

    The bath contribution uses probability conservation: the population that
    has left the two modes sits in the bath at occupation n_B(Omega).
    """
    norm = traj.norm
    bad = np.flatnonzero(norm > 1.0 + PHYSICALITY_SLACK)
    if bad.size:
        i = bad[0]
        raise PhysicalityError(
            f"|A1|^2 + |A2|^2 = {norm[i]:.9g} > 1 at t = {traj.times[i]:.9g}",
            time=float(traj.times[i]),
        )
    nB = params.n_bath
    leaked = (1.0 - norm) * nB
    p1, p2 = np.abs(traj.A1) ** 2, np.abs(traj.A2) ** 2
    n1 = p1 * params.n10 + p2 * params.n20 + leaked
    n2 = p2 * params.n10 + p1 * params.n20 + leaked
    coh = (np.conj(traj.A1) * traj.A2 * params.n10
           + np.conj(traj.A2) * traj.A1 * params.n20 + leaked)
    witness = np.abs(coh) ** 2 - n1 * n2
    return ObservableSeries(traj.times.copy(), n1, n2, coh, witness, norm)


def window_mean(times, values, t_a: float, t_b: float) -> float:
    """Trapezoidal mean of ``values`` over the samples inside [t_a, t_b]."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if not t_a < t_b:
        raise ContractError(f"empty window [{t_a}, {t_b}]")
    mask = (times >= t_a) & (times <= t_b)
    if not mask.any():
        raise ContractError(f"no samples inside window [{t_a}, {t_b}]")
    t, v = times[mask], values[mask]
    if len(t) == 1:
        return float(v[0])
    return float(np.trapezoid(v, t) / (t[-1] - t[0]))


def _scalar(x) -> np.ndarray:
    x = np.asarray(x)
    return np.abs(x) if np.iscomplexobj(x) else x.astype(float)


def suppression(dd: ObservableSeries, free: ObservableSeries, t_min: float | None = None,
                epsilon: float = 1e-9, params: PhysicalParams | None = None,
                series: str = "n1") -> SuppressionSeries:
    """S(t) = 1 - |x_dd(t) - x_free(0)| / |x_free(t) - x_free(0)|.

    Reporting starts at ``t_min`` (default 2 / Omega); points whose
    denominator is below ``epsilon`` are skipped and counted; S is clipped
    to <= 1. ``x_free(0)`` is the first sample of the free series. Complex
    series (the coherence) are compared by magnitude.
    """
    if dd.times.shape != free.times.shape or not np.array_equal(dd.times, free.times):
        raise ContractError("controlled and free series must share one time grid")
    if t_min is None:
        t_min = 2.0 / (params.Omega_bath if params is not None else 1.0)
    x_dd, x_free = (_scalar(getattr(o, series)) for o in (dd, free))
    ref = x_free[0]
    mask = dd.times >= t_min
    denom = np.abs(x_free - ref)
    keep = mask & (denom >= epsilon)
    skipped = int(np.count_nonzero(mask & ~keep))
    S = 1.0 - np.abs(x_dd[keep] - ref) / denom[keep]
    S = np.minimum(S, 1.0)
    times = dd.times[keep]
    if len(times) == 0:
        raise ContractError("no reportable points after t_min / epsilon filtering")
    window = (float(times[0]), float(times[-1]))
    avg = window_mean(times, S, *window) if window[1] > window[0] else float(S[0])
    return SuppressionSeries(times, S, avg, window, skipped)


def window_average(s: SuppressionSeries, t_a: float, t_b: float) -> float:
    """Trapezoidal mean of S over [t_a, t_b]; skipped points are absent."""
    return window_mean(s.times, s.S, t_a, t_b)


def _turning_points(x: np.ndarray, hysteresis: float) -> int:
    """Direction reversals of x, ignoring excursions smaller than hysteresis."""
    count = 0
    direction = 0
    extreme = x[0]
    for v in x[1:]:
        if direction == 0:
            if abs(v - extreme) > hysteresis:
                direction = 1 if v > extreme else -1
                extreme = v
        elif direction * (v - extreme) > 0:
            extreme = v
        elif abs(v - extreme) > hysteresis:
            count += 1
            direction = -direction
            extreme = v
    return count


def trend_checks(obs: ObservableSeries, window: tuple[float, float] | None = None,
                 rise_after: float = 0.5, slack: float = 1e-6) -> TrendReport:
    """Monotonic-rise flag, revival count and maximal witness.

    ``revival_count`` counts reversals of the direction of n1 (sign changes
    of its discrete derivative) with ``slack`` hysteresis.
    """
    t, n1 = obs.times, obs.n1
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, n1, wit = t[sel], n1[sel], obs.witness[sel]
    else:
        wit = obs.witness
    late = n1[t > rise_after]
    rise = bool(np.all(late >= np.maximum.accumulate(late) - slack)) if late.size else True
    revivals = _turning_points(n1, slack) if n1.size > 1 else 0
    return TrendReport(rise, revivals, float(np.max(wit)))
