"""Scenario configuration, presets, single runs, sweeps and DD comparisons.

A configuration is a JSON object. Every field has a default, so ``{}`` is a
valid configuration (free evolution in the non-Markovian regime). Layout::

    {
      "name": "custom",
      "preset": null,                      # start from a named preset
      "params":   {"omega1", "omega2", "g", "Gamma", "gamma_bath",
                   "Omega_bath", "T_B", "n10", "n20"},
      "schedule": {"kind": "free|regular|irregular|constant|explicit",
                   "omega_D", "tau", "delta" | "eta", "jitter", "seed",
                   "pulses": [[t_on, width, amplitude], ...]},
      "engine":   "closed|kernel|discrete-bath",
      "matching": "kernel-continuous|derivative-continuous",
      "form":     "reduced|printed",
      "grid":     {"t_end", "samples"},
      "oracle":   {"dt", "N", "cutoff"},
      "outputs":  ["timeseries", "summary", "suppression"],
      "metrics":  {"window", "revival_window", "t_min", "epsilon"},
      "sweep":    {"<path>": [values, ...]},
      "max_runs": 10000
    }

Physical parameters and schedule fields may also be given at the top level
(``{"Gamma": 15, "gamma": 1, "T_B": 1}``); ``gamma``, ``Omega`` and the Greek
spellings are accepted as aliases. ``jitter`` is either a relative fraction
applied to delta, tau and omega_D, or an object with absolute
``D_delta``, ``D_tau`` and ``D_omega``.
"""

from __future__ import annotations

import copy
import hashlib
import itertools
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .control import (
    JitterSpec,
    Pulse,
    Schedule,
    constant_schedule,
    free_schedule,
    irregular_schedule,
    regular_schedule,
)
from .errors import ConfigError, ContractError, ParameterError
from .model import COEFFICIENT_FORMS, PhysicalParams
from .observables import (
    ObservableSeries,
    SuppressionSeries,
    observables,
    suppression,
    trend_checks,
    window_mean,
)
from .oracle import integrate_discrete_bath, integrate_kernel, observables_from_bath
from .propagator import MatchingMode, propagate

ENGINES = ("closed", "kernel", "discrete-bath")
OUTPUT_KINDS = ("timeseries", "summary", "suppression")
CSV_HEADER = "t,n1,n2,re_coh,im_coh,abs_A1_sq,abs_A2_sq,detuning"
WORKERS_ENV = "LORENTZDD_WORKERS"
MAX_AXES = 3
DISCRETE_BATH_NORM_TOL = 1e-4

PARAM_KEYS = ("omega1", "omega2", "g", "Gamma", "gamma_bath", "Omega_bath", "T_B", "n10", "n20")
PARAM_ALIASES = {
    "gamma": "gamma_bath", "Omega": "Omega_bath",
    "Γ": "Gamma", "γ": "gamma_bath", "Ω": "Omega_bath",
    "ω1": "omega1", "ω2": "omega2",
}
SCHEDULE_KEYS = ("kind", "omega_D", "tau", "delta", "eta", "jitter", "seed", "pulses")
SCHEDULE_ALIASES = {"ω_D": "omega_D", "η": "eta", "δ": "delta", "τ": "tau"}
CONFIG_KINDS = ("free", "regular", "irregular", "constant", "explicit")

DEFAULTS = {
    "name": "custom",
    "params": {"omega1": 1.0, "omega2": 1.0, "g": 0.1, "Gamma": 15.0, "gamma_bath": 1.0,
               "Omega_bath": 1.0, "T_B": 1.0, "n10": 1.0, "n20": 0.0},
    "schedule": {"kind": "free", "omega_D": 0.0, "tau": 0.27, "delta": None, "eta": None,
                 "jitter": 0.0, "seed": 0, "pulses": None},
    "engine": "closed",
    "matching": MatchingMode.KERNEL.value,
    "form": "reduced",
    "grid": {"t_end": 20.0, "samples": 2001},
    "oracle": {"dt": 1e-3, "N": 4001, "cutoff": 40.0},
    "outputs": ["timeseries", "summary"],
    "metrics": {"window": [5.0, 20.0], "revival_window": None, "t_min": None, "epsilon": 1e-9},
    "sweep": {},
    "max_runs": 10000,
}

_TEMPS = [0.5, 1.0, 2.0]
_NON_MARKOV = {"Gamma": 15.0, "gamma_bath": 1.0}

PRESETS: dict[str, dict] = {
    "fig3": {
        "description": "Markovian free evolution (Gamma=1, gamma=15), T_B sweep",
        "params": {"Gamma": 1.0, "gamma_bath": 15.0, "T_B": 1.0},
        "metrics": {"revival_window": [0.0, 10.0]},
        "sweep": {"params.T_B": _TEMPS},
    },
    "fig4": {
        "description": "non-Markovian free evolution (Gamma=15, gamma=1), T_B sweep",
        "params": {**_NON_MARKOV, "T_B": 1.0},
        "metrics": {"revival_window": [0.0, 10.0]},
        "sweep": {"params.T_B": _TEMPS},
    },
    "fig5": {
        "description": "spectral-width sweep (Gamma=5, T_B=1)",
        "params": {"Gamma": 5.0, "gamma_bath": 0.1, "T_B": 1.0},
        "sweep": {"params.gamma_bath": [0.1, 0.5, 1.0, 5.0]},
    },
    "fig6a": {
        "description": "coherence, long memory (Gamma=1, gamma=0.01, T_B=1)",
        "params": {"Gamma": 1.0, "gamma_bath": 0.01, "T_B": 1.0},
        "grid": {"t_end": 50.0, "samples": 5001},
        "metrics": {"window": [5.0, 50.0]},
    },
    "fig6b": {
        "description": "coherence, short memory (Gamma=1, gamma=15, T_B=1)",
        "params": {"Gamma": 1.0, "gamma_bath": 15.0, "T_B": 1.0},
        "grid": {"t_end": 50.0, "samples": 5001},
        "metrics": {"window": [5.0, 50.0]},
    },
    "fig7": {
        "description": "DD amplitude sweep at eta=1, three temperatures",
        "params": {**_NON_MARKOV, "T_B": 1.0},
        "schedule": {"kind": "regular", "omega_D": 25.0, "eta": 1.0, "tau": 0.27},
        "sweep": {"schedule.omega_D": [5.0, 15.0, 20.0, 25.0], "params.T_B": _TEMPS},
    },
    "fig8": {
        "description": "duty-cycle sweep at omega_D=25, three temperatures",
        "params": {**_NON_MARKOV, "T_B": 1.0},
        "schedule": {"kind": "regular", "omega_D": 25.0, "eta": 0.5, "tau": 0.27},
        "sweep": {"schedule.eta": [0.5, 0.75, 0.9, 0.95], "params.T_B": _TEMPS},
    },
    "fig9": {
        "description": "duty-cycle sweep at omega_D=25, T_B=1",
        "params": {**_NON_MARKOV, "T_B": 1.0},
        "schedule": {"kind": "regular", "omega_D": 25.0, "eta": 0.5, "tau": 0.27},
        "sweep": {"schedule.eta": [0.0, 0.5, 0.75, 0.9, 0.95]},
    },
    "fig10": {
        "description": "jittered DD (+-20%) at omega_D=30, T_B=1, seeds 1-10",
        "params": {**_NON_MARKOV, "T_B": 1.0},
        "schedule": {"kind": "irregular", "omega_D": 30.0, "eta": 0.2, "tau": 0.27,
                     "jitter": 0.2, "seed": 1},
        "sweep": {"schedule.eta": [0.2, 0.5, 0.98], "schedule.seed": list(range(1, 11))},
    },
    "fig11a": {
        "description": "suppression factor, regular DD at omega_D=25",
        "params": {**_NON_MARKOV, "T_B": 1.0},
        "schedule": {"kind": "regular", "omega_D": 25.0, "eta": 0.9, "tau": 0.27},
        "outputs": ["timeseries", "summary", "suppression"],
        "sweep": {"schedule.eta": [0.3, 0.6, 0.9]},
    },
    "fig11b": {
        "description": "suppression factor, jittered DD at omega_D=30",
        "params": {**_NON_MARKOV, "T_B": 1.0},
        "schedule": {"kind": "irregular", "omega_D": 30.0, "eta": 0.98, "tau": 0.27,
                     "jitter": 0.2, "seed": 1},
        "outputs": ["timeseries", "summary", "suppression"],
        "sweep": {"schedule.eta": [0.2, 0.5, 0.98]},
    },
}


# ----------------------------------------------------------------- parsing


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _number(x, path, *, integer=False, allow_none=False):
    if x is None and allow_none:
        return None
    if not _is_number(x) or not math.isfinite(x):
        raise ConfigError(f"expected a finite number, got {x!r}", path)
    if integer:
        if float(x) != int(x):
            raise ConfigError(f"expected an integer, got {x!r}", path)
        return int(x)
    return float(x)


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "sweep":
            out[key] = _merge(out[key], value, f"{path}{key}.")
        else:
            out[key] = copy.deepcopy(value)
    return out


def _normalize_keys(raw: dict) -> dict:
    """Move top-level shorthand into its section and resolve aliases."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    doc: dict = {}
    for key, value in raw.items():
        pkey = PARAM_ALIASES.get(key, key)
        skey = SCHEDULE_ALIASES.get(key, key)
        if pkey in PARAM_KEYS:
            doc.setdefault("params", {})[pkey] = value
        elif skey in SCHEDULE_KEYS:
            doc.setdefault("schedule", {})[skey] = value
        elif key in ("t_end", "samples"):
            doc.setdefault("grid", {})[key] = value
        elif key in ("params", "schedule") and isinstance(value, dict):
            aliases = PARAM_ALIASES if key == "params" else SCHEDULE_ALIASES
            section = doc.setdefault(key, {})
            for k, v in value.items():
                section[aliases.get(k, k)] = v
        else:
            doc[key] = value
    return doc


def _check_keys(section: dict, allowed, path: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r}", f"{path}.{key}" if path else key)


def resolve_path(path: str) -> str:
    """Canonical dotted path for an override or sweep axis name."""
    parts = path.split(".")
    if len(parts) == 1:
        key = parts[0]
        if PARAM_ALIASES.get(key, key) in PARAM_KEYS:
            return f"params.{PARAM_ALIASES.get(key, key)}"
        if SCHEDULE_ALIASES.get(key, key) in SCHEDULE_KEYS:
            return f"schedule.{SCHEDULE_ALIASES.get(key, key)}"
        if key in ("t_end", "samples"):
            return f"grid.{key}"
        return key
    if parts[0] == "params":
        parts[1] = PARAM_ALIASES.get(parts[1], parts[1])
    elif parts[0] == "schedule":
        parts[1] = SCHEDULE_ALIASES.get(parts[1], parts[1])
    return ".".join(parts)


def set_path(doc: dict, path: str, value) -> dict:
    """Return a copy of ``doc`` with ``path`` set to ``value``.

    Setting one of delta/eta clears the other so the pulse geometry stays
    uniquely specified.
    """
    path = resolve_path(path)
    out = copy.deepcopy(doc)
    node = out
    parts = path.split(".")
    for i, part in enumerate(parts[:-1]):
        child = node.get(part)
        if child is None:
            child = node[part] = {}
        if not isinstance(child, dict):
            raise ConfigError("cannot descend into a scalar", ".".join(parts[: i + 1]))
        node = child
    node[parts[-1]] = value
    if path == "schedule.eta":
        node["delta"] = None
    elif path == "schedule.delta":
        node["eta"] = None
    return out


def _validate_schedule(s: dict) -> dict:
    _check_keys(s, SCHEDULE_KEYS, "schedule")
    kind = s["kind"]
    if kind not in CONFIG_KINDS:
        raise ConfigError(f"unknown schedule kind {kind!r}; use one of {CONFIG_KINDS}",
                          "schedule.kind")
    s["omega_D"] = _number(s["omega_D"], "schedule.omega_D")
    s["tau"] = _number(s["tau"], "schedule.tau")
    s["delta"] = _number(s["delta"], "schedule.delta", allow_none=True)
    s["eta"] = _number(s["eta"], "schedule.eta", allow_none=True)
    s["seed"] = _number(s["seed"], "schedule.seed", integer=True)
    if s["seed"] < 0:
        raise ConfigError("seed must be >= 0", "schedule.seed")
    jit = s["jitter"]
    if isinstance(jit, dict):
        _check_keys(jit, ("D_delta", "D_tau", "D_omega"), "schedule.jitter")
        s["jitter"] = {k: _number(jit.get(k, 0.0), f"schedule.jitter.{k}")
                       for k in ("D_delta", "D_tau", "D_omega")}
        if min(s["jitter"].values()) < 0:
            raise ConfigError("jitter half-ranges must be >= 0", "schedule.jitter")
    else:
        s["jitter"] = _number(jit, "schedule.jitter")
        if not 0 <= s["jitter"] < 1:
            raise ConfigError("relative jitter must lie in [0, 1)", "schedule.jitter")

    if kind in ("regular", "irregular"):
        if not s["tau"] > 0:
            raise ConfigError(f"tau must be > 0, got {s['tau']}", "schedule.tau")
        delta, eta, tau = s["delta"], s["eta"], s["tau"]
        if delta is None and eta is None:
            raise ConfigError("pulse geometry needs delta or eta (with tau)", "schedule")
        if delta is not None and eta is not None and not math.isclose(
                delta, eta * tau, rel_tol=1e-12, abs_tol=1e-15):
            raise ConfigError(f"eta={eta} inconsistent with delta/tau={delta / tau}; "
                              "give only one of delta and eta", "schedule")
        if delta is None:
            delta = eta * tau
        if delta < 0:
            raise ConfigError(f"delta must be >= 0, got {delta}", "schedule.delta")
        if delta > tau * (1 + 1e-12):
            raise ConfigError(f"pulse width delta={delta} exceeds period tau={tau}; the duty "
                              "cycle constraint is 0 < delta <= tau", "schedule.delta")
        s["delta"], s["eta"] = delta, delta / tau
    if kind == "explicit":
        pulses = s["pulses"]
        if not isinstance(pulses, list) or not pulses:
            raise ConfigError("explicit schedule needs a non-empty pulse list", "schedule.pulses")
        out = []
        for i, p in enumerate(pulses):
            if not isinstance(p, list) or len(p) != 3:
                raise ConfigError("pulse must be [t_on, width, amplitude]", f"schedule.pulses.{i}")
            out.append([_number(v, f"schedule.pulses.{i}") for v in p])
        s["pulses"] = out
    elif s["pulses"] is not None:
        raise ConfigError("pulses are only allowed with kind 'explicit'", "schedule.pulses")
    return s


def _validate(doc: dict) -> dict:
    _check_keys(doc, tuple(DEFAULTS) + ("preset",), "")
    if not isinstance(doc["name"], str) or not doc["name"] or "/" in doc["name"]:
        raise ConfigError("name must be a non-empty string without '/'", "name")
    _check_keys(doc["params"], PARAM_KEYS, "params")
    for k in PARAM_KEYS:
        doc["params"][k] = _number(doc["params"][k], f"params.{k}")
    try:
        PhysicalParams(**doc["params"])
    except ParameterError as exc:
        raise ConfigError(str(exc), "params") from None
    doc["schedule"] = _validate_schedule(doc["schedule"])

    if doc["engine"] not in ENGINES:
        raise ConfigError(f"unknown engine {doc['engine']!r}; use one of {ENGINES}", "engine")
    try:
        MatchingMode.parse(doc["matching"])
    except ContractError as exc:
        raise ConfigError(str(exc), "matching") from None
    if doc["engine"] != "closed" and doc["matching"] != MatchingMode.KERNEL.value:
        raise ConfigError("the RK4 engines carry the memory integral across switches; "
                          "only kernel-continuous matching applies", "matching")
    if doc["form"] not in COEFFICIENT_FORMS:
        raise ConfigError(f"unknown coefficient form; use one of {COEFFICIENT_FORMS}", "form")

    grid = doc["grid"]
    _check_keys(grid, ("t_end", "samples"), "grid")
    grid["t_end"] = _number(grid["t_end"], "grid.t_end")
    grid["samples"] = _number(grid["samples"], "grid.samples", integer=True)
    if not grid["t_end"] > 0:
        raise ConfigError("t_end must be > 0", "grid.t_end")
    if grid["samples"] < 2:
        raise ConfigError("need at least 2 samples", "grid.samples")

    orc = doc["oracle"]
    _check_keys(orc, ("dt", "N", "cutoff"), "oracle")
    orc["dt"] = _number(orc["dt"], "oracle.dt")
    orc["N"] = _number(orc["N"], "oracle.N", integer=True)
    orc["cutoff"] = _number(orc["cutoff"], "oracle.cutoff")
    if not (orc["dt"] > 0 and orc["N"] >= 1 and orc["cutoff"] > 0):
        raise ConfigError("need dt > 0, N >= 1 and cutoff > 0", "oracle")

    outs = doc["outputs"]
    if not isinstance(outs, list) or any(o not in OUTPUT_KINDS for o in outs):
        raise ConfigError(f"outputs must be a list drawn from {OUTPUT_KINDS}", "outputs")
    doc["outputs"] = [o for o in OUTPUT_KINDS if o in outs]

    met = doc["metrics"]
    _check_keys(met, ("window", "revival_window", "t_min", "epsilon"), "metrics")
    for key in ("window", "revival_window"):
        w = met[key]
        if w is None and key == "revival_window":
            continue
        if not isinstance(w, list) or len(w) != 2:
            raise ConfigError("window must be [t_a, t_b]", f"metrics.{key}")
        w = [_number(v, f"metrics.{key}") for v in w]
        if not 0 <= w[0] < w[1] <= grid["t_end"] * (1 + 1e-12):
            raise ConfigError(f"window {w} must satisfy 0 <= t_a < t_b <= t_end", f"metrics.{key}")
        met[key] = w
    met["t_min"] = _number(met["t_min"], "metrics.t_min", allow_none=True)
    met["epsilon"] = _number(met["epsilon"], "metrics.epsilon")

    sweep = doc["sweep"]
    if not isinstance(sweep, dict):
        raise ConfigError("sweep must map paths to value lists", "sweep")
    axes = {}
    for path, values in sweep.items():
        canon = resolve_path(path)
        if not isinstance(values, list) or not values:
            raise ConfigError("axis needs a non-empty value list", f"sweep.{path}")
        if canon.split(".")[0] in ("sweep", "name", "preset", "max_runs"):
            raise ConfigError("this field cannot be swept", f"sweep.{path}")
        axes[canon] = values
    if len(axes) > MAX_AXES:
        raise ConfigError(f"at most {MAX_AXES} sweep axes, got {len(axes)}", "sweep")
    doc["sweep"] = axes
    doc["max_runs"] = _number(doc["max_runs"], "max_runs", integer=True)
    if doc["max_runs"] < 1:
        raise ConfigError("max_runs must be >= 1", "max_runs")
    return doc


@dataclass(frozen=True)
class ScenarioConfig:
    """A fully resolved configuration; ``doc`` is its canonical JSON form."""

    doc: dict

    @property
    def name(self) -> str:
        return self.doc["name"]

    @property
    def params(self) -> PhysicalParams:
        return PhysicalParams(**self.doc["params"])

    @property
    def engine(self) -> str:
        return self.doc["engine"]

    @property
    def matching(self) -> MatchingMode:
        return MatchingMode.parse(self.doc["matching"])

    @property
    def t_end(self) -> float:
        return self.doc["grid"]["t_end"]

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.doc["grid"]["samples"])

    @property
    def seed(self) -> int:
        return self.doc["schedule"]["seed"]

    @property
    def axes(self) -> dict:
        return self.doc["sweep"]

    def canonical_json(self) -> str:
        return json.dumps(self.doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def override(self, path: str, value) -> "ScenarioConfig":
        return ScenarioConfig(_validate(set_path(self.doc, path, value)))

    def without_sweep(self) -> "ScenarioConfig":
        return ScenarioConfig({**copy.deepcopy(self.doc), "sweep": {}})

    def schedule(self) -> Schedule:
        return build_schedule(self.doc["schedule"], self.t_end)


def parse_config(source, overrides=()) -> ScenarioConfig:
    """Parse JSON text or a dict, apply ``key=value`` overrides, fill defaults."""
    if isinstance(source, (str, bytes)):
        try:
            raw = json.loads(source) if source.strip() else {}
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
    else:
        raw = copy.deepcopy(source) if source is not None else {}
    doc = _normalize_keys(raw)
    base = copy.deepcopy(DEFAULTS)
    preset = doc.pop("preset", None)
    if preset is not None:
        base = _merge(base, preset_doc(preset))
        base["name"] = preset
    for section in ("params", "schedule"):
        if section in doc and not isinstance(doc[section], dict):
            raise ConfigError("expected an object", section)
    if "schedule" in doc and ("delta" in doc["schedule"]) != ("eta" in doc["schedule"]):
        # the user chose one geometry field; drop the other inherited one
        drop = "eta" if "delta" in doc["schedule"] else "delta"
        base["schedule"][drop] = None
    doc = _merge(base, doc)
    for item in overrides:
        key, value = parse_override(item)
        doc = set_path(doc, key, value)
    return ScenarioConfig(_validate(doc))


def parse_override(item: str) -> tuple[str, object]:
    """``key=value``; the value is read as JSON, falling back to a string."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    key, text = item.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override {item!r} has an empty key")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    return key, value


def preset_doc(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}", "preset")
    doc = {k: v for k, v in copy.deepcopy(PRESETS[name]).items() if k != "description"}
    doc["name"] = name
    return doc


def preset_config(name: str) -> ScenarioConfig:
    return parse_config({"preset": name})


def build_schedule(s: dict, horizon: float) -> Schedule:
    """Schedule object for a validated schedule section.

    Zero duty cycle or zero amplitude (without amplitude jitter) is the
    free schedule.
    """
    kind = s["kind"]
    if kind == "free":
        return free_schedule(horizon)
    if kind == "constant":
        return constant_schedule(s["omega_D"], horizon)
    if kind == "explicit":
        try:
            pulses = tuple(Pulse(*p) for p in s["pulses"])
            return Schedule(pulses, horizon, "explicit", seed=s["seed"])
        except ParameterError as exc:
            raise ConfigError(str(exc), "schedule.pulses") from None
    omega_D, delta, tau = s["omega_D"], s["delta"], s["tau"]
    jit = s["jitter"]
    if isinstance(jit, dict):
        jspec = JitterSpec(jit["D_delta"], jit["D_tau"], jit["D_omega"], seed=s["seed"])
    else:
        jspec = JitterSpec.relative(omega_D, delta, tau, fraction=jit, seed=s["seed"])
    if delta == 0 or (omega_D == 0 and (kind == "regular" or jspec.D_omega == 0)):
        return free_schedule(horizon)
    try:
        if kind == "regular":
            return regular_schedule(omega_D, delta, tau, horizon)
        return irregular_schedule((omega_D, delta, tau), jspec, horizon)
    except ParameterError as exc:
        raise ConfigError(str(exc), "schedule") from None


# ----------------------------------------------------------------- output


def fmt(x) -> str:
    """12 significant digits; negative zero is written as 0."""
    x = float(x)
    if x == 0:
        return "0"
    return format(x, ".12g")


def atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def timeseries_csv(obs: ObservableSeries, A1, A2, detuning) -> str:
    p1, p2 = np.abs(A1) ** 2, np.abs(A2) ** 2
    lines = [CSV_HEADER]
    cols = (obs.times, obs.n1, obs.n2, obs.coherence.real, obs.coherence.imag, p1, p2, detuning)
    for row in zip(*cols):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def table_csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


# ----------------------------------------------------------------- runs


@dataclass
class RunRecord:
    config_hash: str
    provenance: dict
    files: list[str]
    summary: dict
    config: ScenarioConfig = field(repr=False)
    series: ObservableSeries | None = field(default=None, repr=False)
    suppression: SuppressionSeries | None = field(default=None, repr=False)


def simulate(cfg: ScenarioConfig, schedule: Schedule | None = None):
    """Trajectory and observables for ``cfg`` on its output grid."""
    params = cfg.params
    schedule = cfg.schedule() if schedule is None else schedule
    grid = cfg.grid
    orc = cfg.doc["oracle"]
    if cfg.engine == "closed":
        traj = propagate(params, schedule, grid, t_end=cfg.t_end, matching=cfg.matching,
                         form=cfg.doc["form"])
        return traj, observables(traj, params)
    if cfg.engine == "kernel":
        traj = integrate_kernel(params, schedule, dt=orc["dt"], t_end=cfg.t_end, grid=grid)
        return traj, observables(traj, params)
    run = integrate_discrete_bath(params, schedule, N=orc["N"], cutoff=orc["cutoff"],
                                  dt=orc["dt"], t_end=cfg.t_end, grid=grid)
    drift = np.abs(run.total_norm - 1.0)
    if drift.max() > DISCRETE_BATH_NORM_TOL:
        from .errors import PhysicalityError

        i = int(np.argmax(drift))
        raise PhysicalityError(f"discrete-bath norm drift {drift[i]:.3g} at t = {grid[i]:.6g}",
                               time=float(grid[i]))
    run.trajectory.provenance["norm_drift"] = float(drift.max())
    return run.trajectory, observables_from_bath(run, params, "flat")


def summarize(cfg: ScenarioConfig, obs: ObservableSeries, traj) -> dict:
    met = cfg.doc["metrics"]
    rev = trend_checks(obs, window=tuple(met["revival_window"]) if met["revival_window"] else None)
    full = trend_checks(obs)
    if "norm_drift" in traj.provenance:
        drift = traj.provenance["norm_drift"]
    else:
        drift = max(0.0, float(obs.norm.max()) - 1.0)
    return {
        "window": met["window"],
        "window_avg_n1": window_mean(obs.times, obs.n1, *met["window"]),
        "window_avg_n2": window_mean(obs.times, obs.n2, *met["window"]),
        "revival_count": rev.revival_count,
        "monotonic_rise": full.monotonic_rise,
        "witness_max": full.witness_max,
        "norm_drift": drift,
        "n1_final": float(obs.n1[-1]),
        "n2_final": float(obs.n2[-1]),
        "n_B": cfg.params.n_bath,
    }


def _free_counterpart(cfg: ScenarioConfig) -> ScenarioConfig:
    return cfg.override("schedule.kind", "free")


def suppression_for(cfg: ScenarioConfig, obs: ObservableSeries) -> SuppressionSeries:
    met = cfg.doc["metrics"]
    _, free_obs = simulate(_free_counterpart(cfg))
    return suppression(obs, free_obs, t_min=met["t_min"], epsilon=met["epsilon"],
                       params=cfg.params)


def provenance(cfg: ScenarioConfig, traj) -> dict:
    prov = {
        "engine": cfg.engine,
        "seed": cfg.seed,
        "matching": cfg.matching.value,
        "coefficient_form": cfg.doc["form"],
        "version": __version__,
        "schedule": cfg.schedule().describe(),
    }
    for key in ("segments", "segment_methods", "flagged_segments", "dt", "N", "cutoff"):
        if key in traj.provenance:
            prov[key] = traj.provenance[key]
    return prov


def run_scenario(cfg: ScenarioConfig, out_dir=None, stem: str | None = None) -> RunRecord:
    """Propagate, compute observables and write the requested outputs.

    Sweep axes in ``cfg`` are ignored; the base point is run.
    """
    if cfg.axes:
        cfg = cfg.without_sweep()
    traj, obs = simulate(cfg)
    summary = summarize(cfg, obs, traj)
    sup = None
    if "suppression" in cfg.doc["outputs"]:
        sup = suppression_for(cfg, obs)
        summary["S_window_avg"] = sup.window_avg
        summary["S_max"] = float(np.max(sup.S))
        summary["S_min"] = float(np.min(sup.S))
        summary["S_skipped"] = sup.skipped
    prov = provenance(cfg, traj)
    record = RunRecord(cfg.hash, prov, [], summary, cfg, obs, sup)
    if out_dir is None:
        return record
    out_dir = Path(out_dir)
    stem = stem or cfg.name
    outputs = cfg.doc["outputs"]
    if "timeseries" in outputs:
        name = f"{stem}.csv"
        atomic_write(out_dir / name, timeseries_csv(obs, traj.A1, traj.A2, traj.detuning))
        record.files.append(name)
    if sup is not None:
        name = f"{stem}_suppression.csv"
        atomic_write(out_dir / name, table_csv(("t", "S"), zip(sup.times, sup.S)))
        record.files.append(name)
    if "summary" in outputs:
        name = f"{stem}.json"
        record.files.append(name)
        atomic_write(out_dir / name, dump_json({
            "config": cfg.doc, "config_hash": cfg.hash, "provenance": prov,
            "summary": summary, "files": record.files,
        }))
    return record


# ----------------------------------------------------------------- sweeps


SUMMARY_COLUMNS = ("window_avg_n1", "window_avg_n2", "revival_count", "monotonic_rise",
                   "witness_max", "norm_drift", "n1_final", "n2_final")


@dataclass
class SweepResult:
    axes: dict
    points: list[tuple]
    records: list[RunRecord]
    files: list[str]

    def table(self) -> list[dict]:
        names = list(self.axes)
        return [{**dict(zip(names, pt)), **rec.summary} for pt, rec in zip(self.points, self.records)]


def sweep_points(cfg: ScenarioConfig) -> list[tuple]:
    axes = cfg.axes
    total = math.prod(len(v) for v in axes.values()) if axes else 1
    if total > cfg.doc["max_runs"]:
        raise ConfigError(f"sweep would launch {total} runs, above the cap of "
                          f"{cfg.doc['max_runs']}", "sweep")
    return list(itertools.product(*axes.values())) if axes else [()]


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV, "").strip()
    if not value:
        return 1
    try:
        n = int(value)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {value!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {value!r}")
    return n


def _run_point(args):
    doc, out_dir, stem = args
    rec = run_scenario(ScenarioConfig(doc), out_dir, stem)
    rec.series = rec.suppression = None  # keep inter-process traffic small
    return rec


def run_sweep(cfg: ScenarioConfig, out_dir=None, workers: int | None = None) -> SweepResult:
    """Cartesian product over the sweep axes, in axis order."""
    points = sweep_points(cfg)
    base = cfg.without_sweep()
    if not cfg.axes:
        rec = run_scenario(base, out_dir)
        files = list(rec.files)
        result = SweepResult({}, [()], [rec], files)
    else:
        names = list(cfg.axes)
        jobs = []
        width = max(4, len(str(len(points) - 1)))
        for i, pt in enumerate(points):
            c = base
            for name, value in zip(names, pt):
                c = c.override(name, value)
            jobs.append((c.doc, out_dir, f"{cfg.name}_{i:0{width}d}"))
        workers = default_workers() if workers is None else workers
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                records = list(pool.map(_run_point, jobs))
        else:
            records = [run_scenario(ScenarioConfig(d), o, s) for d, o, s in jobs]
        files = [f for r in records for f in r.files]
        result = SweepResult(dict(cfg.axes), points, records, files)
    if out_dir is not None:
        names = list(result.axes)
        header = [n for n in names] + list(SUMMARY_COLUMNS)
        rows = []
        for pt, rec in zip(result.points, result.records):
            row = [_cell(v) for v in pt]
            row += [_cell(rec.summary[k]) for k in SUMMARY_COLUMNS]
            rows.append(row)
        name = f"{cfg.name}_sweep.csv"
        atomic_write(Path(out_dir) / name, table_csv(header, rows))
        result.files.append(name)
    return result


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if _is_number(v):
        return v
    return json.dumps(v, sort_keys=True)


# ----------------------------------------------------------------- DD comparison


@dataclass
class DDComparison:
    regular_window_avg: float
    irregular_window_avg: dict  # seed -> value
    irregular_mean: float
    gap: float  # regular - seed-averaged irregular
    regular_S: SuppressionSeries
    irregular_S_mean: np.ndarray
    seeds: list[int]
    files: list[str] = field(default_factory=list)

    def _irregular_S_avg(self) -> float:
        t_a, t_b = self.regular_S.window
        if t_b > t_a:
            return window_mean(self.regular_S.times, self.irregular_S_mean, t_a, t_b)
        return float(self.irregular_S_mean[0])

    def report(self) -> dict:
        return {
            "regular_window_avg_n1": self.regular_window_avg,
            "irregular_window_avg_n1": {str(k): v for k, v in self.irregular_window_avg.items()},
            "irregular_mean_window_avg_n1": self.irregular_mean,
            "gap_regular_minus_irregular": self.gap,
            "abs_gap": abs(self.gap),
            "regular_S_window_avg": self.regular_S.window_avg,
            "irregular_S_window_avg": self._irregular_S_avg(),
            "seeds": self.seeds,
        }


def compare_dd(cfg_regular: ScenarioConfig, cfg_irregular: ScenarioConfig, seeds,
               out_dir=None) -> DDComparison:
    """Regular run once, irregular once per seed, both against one free run."""
    if cfg_regular.doc["params"] != cfg_irregular.doc["params"]:
        raise ContractError("regular and irregular configurations have different physical "
                            "parameters")
    sr, si = cfg_regular.doc["schedule"], cfg_irregular.doc["schedule"]
    if sr["kind"] != "regular" or si["kind"] != "irregular":
        raise ContractError("compare_dd needs a regular and an irregular schedule")
    if not math.isclose(sr["eta"], si["eta"], rel_tol=1e-12, abs_tol=1e-15):
        raise ContractError(f"nominal duty cycles differ: {sr['eta']} vs {si['eta']}")
    if cfg_regular.doc["grid"] != cfg_irregular.doc["grid"]:
        raise ContractError("regular and irregular configurations use different grids")
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ContractError("need at least one seed")

    met = cfg_regular.doc["metrics"]
    _, free_obs = simulate(_free_counterpart(cfg_regular))

    def measure(cfg):
        _, obs = simulate(cfg)
        S = suppression(obs, free_obs, t_min=met["t_min"], epsilon=met["epsilon"],
                        params=cfg.params)
        return window_mean(obs.times, obs.n1, *met["window"]), S

    reg_avg, reg_S = measure(cfg_regular)
    per_seed, S_stack = {}, []
    for seed in seeds:
        avg, S = measure(cfg_irregular.override("schedule.seed", seed))
        per_seed[seed] = avg
        S_stack.append(S.S)
    irr_mean = float(np.mean(list(per_seed.values())))
    result = DDComparison(reg_avg, per_seed, irr_mean, reg_avg - irr_mean, reg_S,
                          np.mean(S_stack, axis=0), seeds)
    if out_dir is not None:
        out_dir = Path(out_dir)
        stem = f"{cfg_regular.name}_vs_{cfg_irregular.name}"
        rows = [("regular", reg_avg)] + [(str(s), per_seed[s]) for s in seeds]
        atomic_write(out_dir / f"{stem}_seeds.csv", table_csv(("seed", "window_avg_n1"), rows))
        atomic_write(out_dir / f"{stem}_S.csv",
                     table_csv(("t", "S_regular", "S_irregular_mean"),
                               zip(reg_S.times, reg_S.S, result.irregular_S_mean)))
        result.files = [f"{stem}_seeds.csv", f"{stem}_S.csv", f"{stem}.json"]
        atomic_write(out_dir / f"{stem}.json", dump_json({
            "report": result.report(),
            "regular": {"config": cfg_regular.doc, "config_hash": cfg_regular.hash},
            "irregular": {"config": cfg_irregular.doc, "config_hash": cfg_irregular.hash},
            "version": __version__, "backend": kernels.BACKEND,
        }))
    return result
