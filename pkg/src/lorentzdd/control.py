"""Detuning schedules (regular and jittered), the control waveform, its phase
integral and the associated filter function.

A schedule is a time-ordered list of rectangular pulses on [0, horizon].
Pulse intervals are left-closed and right-open, so ON and OFF segments
partition time exactly.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ParameterError

SCHEDULE_KINDS = ("free", "regular", "irregular", "constant", "explicit")
MAX_RESAMPLE = 100
_EDGE = 1e-12


@dataclass(frozen=True)
class Pulse:
    t_on: float
    width: float
    amplitude: float

    def __post_init__(self):
        if not self.width > 0:
            raise ParameterError(f"pulse width must be > 0, got {self.width}")

    @property
    def t_off(self) -> float:
        return self.t_on + self.width


@dataclass(frozen=True)
class JitterSpec:
    """Absolute half-ranges of the uniform cycle-to-cycle jitter."""

    D_delta: float = 0.0
    D_tau: float = 0.0
    D_omega: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        for name in ("D_delta", "D_tau", "D_omega"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0")

    @classmethod
    def relative(cls, omega_D, delta, tau, fraction=0.2, seed=None) -> "JitterSpec":
        """Jitter of +-fraction on each nominal value (default +-20%)."""
        return cls(fraction * delta, fraction * tau, fraction * abs(omega_D), seed)

    @property
    def is_zero(self) -> bool:
        return self.D_delta == 0 and self.D_tau == 0 and self.D_omega == 0


@dataclass(frozen=True)
class Schedule:
    pulses: tuple[Pulse, ...]
    horizon: float
    kind: str = "free"
    base: tuple[float, float, float] | None = None  # (omega_D, delta, tau)
    seed: int | None = None
    jitter: JitterSpec | None = None
    _starts: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.horizon > 0:
            raise ParameterError(f"horizon must be > 0, got {self.horizon}")
        if self.kind not in SCHEDULE_KINDS:
            raise ParameterError(f"unknown schedule kind {self.kind!r}")
        prev_end = 0.0
        for p in self.pulses:
            if p.t_on < prev_end - _EDGE * self.horizon or p.t_off > self.horizon * (1 + _EDGE):
                raise ParameterError(f"pulse {p} overlaps its predecessor or leaves [0, horizon]")
            prev_end = p.t_off
        object.__setattr__(self, "_starts", tuple(p.t_on for p in self.pulses))

    @property
    def duty_cycle(self) -> float | None:
        if self.base is None:
            return None
        return self.base[1] / self.base[2]

    def describe(self) -> dict:
        out = {"kind": self.kind, "horizon": self.horizon, "n_pulses": len(self.pulses)}
        if self.base is not None:
            out.update(omega_D=self.base[0], delta=self.base[1], tau=self.base[2],
                       eta=self.duty_cycle)
        if self.jitter is not None:
            out["jitter"] = {"D_delta": self.jitter.D_delta, "D_tau": self.jitter.D_tau,
                             "D_omega": self.jitter.D_omega}
        out["seed"] = self.seed
        return out

    def segments(self, t_end: float | None = None) -> list[tuple[float, float, float]]:
        """Constant-detuning intervals (t0, t1, detuning) covering [0, t_end]."""
        t_end = self.horizon if t_end is None else t_end
        out = []
        t = 0.0
        for p in self.pulses:
            if p.t_on >= t_end:
                break
            if p.t_on > t + _EDGE * self.horizon:
                out.append((t, p.t_on, 0.0))
            start = max(t, p.t_on)
            end = min(p.t_off, t_end)
            if end > start:
                out.append((start, end, p.amplitude))
            t = end
        if t < t_end * (1 - _EDGE):
            out.append((t, t_end, 0.0))
        elif out:
            t0, _, d = out[-1]
            out[-1] = (t0, t_end, d)
        return out


def free_schedule(horizon: float) -> Schedule:
    return Schedule((), float(horizon), "free")


def constant_schedule(detuning: float, horizon: float) -> Schedule:
    """A single pulse spanning the whole horizon."""
    horizon = float(horizon)
    return Schedule((Pulse(0.0, horizon, float(detuning)),), horizon, "constant",
                    base=(float(detuning), horizon, horizon))


def _truncated(t_on, width, amplitude, horizon):
    if t_on + width <= horizon:
        return Pulse(t_on, width, amplitude)
    if horizon - t_on <= _EDGE * horizon:
        return None
    return Pulse(t_on, horizon - t_on, amplitude)


def regular_schedule(omega_D: float, delta: float, tau: float, horizon: float) -> Schedule:
    """Pulses of width delta and amplitude omega_D starting at n*tau."""
    if not (delta > 0 and tau > 0 and horizon > 0):
        raise ParameterError("regular schedule needs delta > 0, tau > 0, horizon > 0")
    if delta > tau:
        raise ParameterError(f"pulse width delta={delta} exceeds period tau={tau} "
                             "(duty cycle must satisfy 0 < delta <= tau)")
    pulses = []
    n = 0
    while n * tau < horizon * (1 - _EDGE):
        p = _truncated(n * tau, delta, float(omega_D), horizon)
        if p is not None:
            pulses.append(p)
        n += 1
    return Schedule(tuple(pulses), float(horizon), "regular",
                    base=(float(omega_D), float(delta), float(tau)))


class _ExactSum:
    """Running float sum without accumulated rounding (Shewchuk partials)."""

    def __init__(self):
        self.partials: list[float] = []

    def add(self, x: float):
        partials = []
        for y in self.partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo:
                partials.append(lo)
            x = hi
        partials.append(x)
        self.partials = partials

    @property
    def value(self) -> float:
        return math.fsum(self.partials)


def irregular_schedule(base, jitter: JitterSpec, horizon: float) -> Schedule:
    """Cycle-to-cycle jittered schedule; cycles are laid end to end.

    Cycle k draws delta_k, tau_k and omega_D,k independently and uniformly
    within +-D_X of the nominal value. Draws violating 0 < delta_k < tau_k
    are redrawn up to 100 times, after which delta_k is clamped to
    0.99 tau_k.
    """
    omega_D, delta, tau = (float(x) for x in base)
    if not (delta > 0 and tau > 0 and horizon > 0) or delta > tau:
        raise ParameterError("irregular schedule needs 0 < delta <= tau and horizon > 0")
    if tau - jitter.D_tau <= 0:
        raise ParameterError("period jitter D_tau must stay below tau")
    if not jitter.is_zero and delta - jitter.D_delta >= tau + jitter.D_tau:
        raise ParameterError("constraint 0 < delta_k < tau_k cannot be met with this jitter")
    rng = np.random.default_rng(jitter.seed)
    strict = not jitter.is_zero

    pulses = []
    start = _ExactSum()
    while start.value < horizon * (1 - _EDGE):
        for _ in range(MAX_RESAMPLE):
            xi = rng.uniform(-1.0, 1.0, size=3)
            d_k = delta + jitter.D_delta * xi[0]
            t_k = tau + jitter.D_tau * xi[1]
            w_k = omega_D + jitter.D_omega * xi[2]
            if 0 < d_k < t_k or (not strict and d_k == t_k):
                break
        else:
            d_k = 0.99 * t_k
        p = _truncated(start.value, d_k, w_k, horizon)
        if p is not None:
            pulses.append(p)
        start.add(t_k)
    return Schedule(tuple(pulses), float(horizon), "irregular",
                    base=(omega_D, delta, tau), seed=jitter.seed, jitter=jitter)


def _check_time(s: Schedule, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > s.horizon * (1 + _EDGE)):
        raise DomainError(f"time outside [0, {s.horizon}]")
    return t


def detuning_at(s: Schedule, t):
    """f_DD(t): pulse amplitude inside a pulse, 0 otherwise."""
    t_arr = _check_time(s, t)
    out = np.zeros_like(t_arr)
    flat_t, flat_out = t_arr.reshape(-1), out.reshape(-1)
    for i, ti in enumerate(flat_t):
        k = bisect.bisect_right(s._starts, ti) - 1
        if k >= 0 and ti < s.pulses[k].t_off:
            flat_out[i] = s.pulses[k].amplitude
    return float(out) if out.ndim == 0 else out


def phase_integral(s: Schedule, t):
    """phi(t) = int_0^t f_DD, accumulated exactly pulse by pulse."""
    t_arr = _check_time(s, t)
    if not s.pulses:
        out = np.zeros_like(t_arr)
    else:
        on = np.array(s._starts)
        off = np.array([p.t_off for p in s.pulses])
        amp = np.array([p.amplitude for p in s.pulses])
        overlap = np.clip(t_arr[..., None], on, off) - on
        out = overlap @ amp
    return float(out) if np.ndim(out) == 0 else out


def filter_function(s: Schedule, omega, T: float | None = None):
    """F(w) = |int_0^T exp(i [w t + phi(t)]) dt|^2.

    Each constant-detuning interval contributes a pure exponential, integrated
    in closed form; the removable singularity at w + d = 0 is handled by
    writing the interval integral as L exp(i k L / 2) sinc(k L / 2).
    """
    T = s.horizon if T is None else float(T)
    if T > s.horizon * (1 + _EDGE) or T <= 0:
        raise DomainError(f"filter window T={T} must lie in (0, horizon]")
    w = np.asarray(omega, dtype=float)
    total = np.zeros(w.shape, dtype=complex)
    phase = 0.0
    for t0, t1, d in s.segments(T):
        L = t1 - t0
        k = w + d
        total += np.exp(1j * (phase + w * t0)) * L * np.exp(0.5j * k * L) * np.sinc(k * L / (2 * np.pi))
        phase += d * L
    out = np.abs(total) ** 2
    return float(out) if out.ndim == 0 else out
