"""Self-check suite behind ``lorentzdd validate``.

Each check records its tolerance and the measured value. ``fast`` covers the
quartic solver and free-evolution agreement between the closed form and the
RK4 memory-kernel integrator; ``full`` adds a discrete-bath norm run and the
matching-rule comparison under dynamical decoupling.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .control import free_schedule, regular_schedule
from .model import PhysicalParams, QuarticCoeffs
from .observables import observables
from .oracle import integrate_discrete_bath, integrate_kernel, integrate_second_order
from .propagator import MatchingMode, propagate
from .quartic import companion_roots, normalized_residuals, solve_quartic

LEVELS = ("fast", "full")
FAULTS = ("corrupt-root",)


@dataclass
class Check:
    name: str
    tolerance: float | None
    measured: float
    passed: bool
    seconds: float = 0.0
    note: str = ""


@dataclass
class ValidationReport:
    level: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {"level": self.level, "passed": self.passed,
                "checks": [asdict(c) for c in self.checks]}


def pairing_distance(a, b) -> float:
    """Largest distance after greedily matching each root of ``a`` to ``b``."""
    b = list(np.asarray(b, dtype=complex))
    worst = 0.0
    for x in sorted(np.asarray(a, dtype=complex), key=lambda z: (z.real, z.imag)):
        j = int(np.argmin([abs(x - y) for y in b]))
        worst = max(worst, abs(x - b.pop(j)) / (1.0 + abs(x)))
    return worst


def quartic_suite(n: int = 1000, seed: int = 12345, fault: str | None = None) -> dict:
    """Residual, Vieta and companion-pairing statistics on random quartics."""
    rng = np.random.default_rng(seed)
    worst = {"residual": 0.0, "vieta_sum": 0.0, "vieta_product": 0.0, "pairing": 0.0}
    for k in range(n):
        c = rng.normal(size=4) + 1j * rng.normal(size=4)
        qc = QuarticCoeffs.from_monic(*c)
        roots = solve_quartic(qc).roots.copy()
        if fault == "corrupt-root" and k == 0:
            roots[0] += 1e-3
        res = normalized_residuals(qc.monic, roots)
        s_err = abs(roots.sum() + qc.A) / max(abs(qc.A), np.abs(roots).sum())
        p_err = abs(np.prod(roots) - qc.D) / max(abs(qc.D), np.prod(np.abs(roots)))
        pair = pairing_distance(roots, companion_roots(*qc.monic))
        worst["residual"] = max(worst["residual"], float(res.max()))
        worst["vieta_sum"] = max(worst["vieta_sum"], float(s_err))
        worst["vieta_product"] = max(worst["vieta_product"], float(p_err))
        worst["pairing"] = max(worst["pairing"], float(pair))
    return worst


def free_cross_engine(params: PhysicalParams, t_end: float = 20.0, dt: float = 1e-3) -> float:
    """Max |n1| deviation between closed form and RK4 on a 2001-point grid."""
    grid = np.linspace(0.0, t_end, 2001)
    sched = free_schedule(t_end)
    closed = observables(propagate(params, sched, grid), params)
    rk = observables(integrate_kernel(params, sched, dt=dt, grid=grid), params)
    return float(np.max(np.abs(closed.n1 - rk.n1)))


def _timed(report, name, tol, fn, note=""):
    t0 = time.perf_counter()
    value = float(fn())
    report.checks.append(Check(name, tol, value, bool(value <= tol), time.perf_counter() - t0,
                               note))


def validate(level: str = "fast", inject_fault: str | None = None) -> ValidationReport:
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}; use one of {LEVELS}")
    if inject_fault is not None and inject_fault not in FAULTS:
        raise ValueError(f"unknown fault {inject_fault!r}; use one of {FAULTS}")
    report = ValidationReport(level)

    t0 = time.perf_counter()
    q = quartic_suite(fault=inject_fault)
    dt_q = time.perf_counter() - t0
    for key, tol in (("residual", 1e-9), ("vieta_sum", 1e-8), ("vieta_product", 1e-8),
                     ("pairing", 1e-8)):
        report.checks.append(Check(f"quartic.{key}", tol, q[key], q[key] <= tol, dt_q))

    markov = PhysicalParams(Gamma=1.0, gamma_bath=15.0)
    non_markov = PhysicalParams(Gamma=15.0, gamma_bath=1.0)
    _timed(report, "free.markovian.closed_vs_rk4", 1e-5, lambda: free_cross_engine(markov))
    _timed(report, "free.non_markovian.closed_vs_rk4", 1e-5,
           lambda: free_cross_engine(non_markov))
    if level == "fast":
        return report

    def bath_norm():
        run = integrate_discrete_bath(non_markov, free_schedule(20.0), N=4001, cutoff=40.0,
                                      dt=1e-3, grid=np.linspace(0.0, 20.0, 2001))
        return np.max(np.abs(run.total_norm - 1.0))

    _timed(report, "bath.norm_drift", 1e-4, bath_norm)

    sched = regular_schedule(25.0, 0.9 * 0.27, 0.27, 20.0)
    grid = np.linspace(0.0, 20.0, 2001)

    def dd_kernel():
        closed = propagate(non_markov, sched, grid)
        rk = integrate_kernel(non_markov, sched, dt=1e-3, grid=grid)
        return np.max(np.abs(closed.A1 - rk.A1) + np.abs(closed.A2 - rk.A2))

    def dd_derivative():
        closed = propagate(non_markov, sched, grid, matching=MatchingMode.DERIVATIVE)
        rk = integrate_second_order(non_markov, sched, dt=1e-3, grid=grid,
                                    matching=MatchingMode.DERIVATIVE)
        scale = 1.0 + np.max(np.abs(rk.A1))
        return np.max(np.abs(closed.A1 - rk.A1)) / scale

    _timed(report, "dd.kernel_continuous.closed_vs_rk4", 1e-5, dd_kernel)
    _timed(report, "dd.derivative_continuous.closed_vs_rk4", 1e-5, dd_derivative,
           "same ODEs and matching rule on both sides (relative to max |A1|)")

    t0 = time.perf_counter()
    k = propagate(non_markov, sched, grid)
    d = propagate(non_markov, sched, grid, matching=MatchingMode.DERIVATIVE)
    gap = float(np.max(np.abs(k.A1 - d.A1)))
    report.checks.append(Check("dd.matching_rule_gap", None, gap, True,
                               time.perf_counter() - t0,
                               f"informational; max norm under derivative matching "
                               f"{float(d.norm.max()):.4g}"))
    return report
