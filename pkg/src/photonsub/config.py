"""Experiment configuration: JSON schema, figure presets, validation.

Configs use human units throughout: every rate is a plain frequency
(value/2pi) in GHz and is converted to angular rad/s only when the model
is built.  A minimal config is `{"preset": "fig5"}`; presets fill every
field with the benchmark defaults and remain user-overridable key by key.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

from .errors import ConfigError
from .model import GHZ, InputSpec, SystemParams
from .trajectories import Controls

__all__ = [
    "ExperimentConfig",
    "SweepAxis",
    "parse_config",
    "preset_config",
    "preset_names",
    "build_point_params",
    "COHERENT_NBAR_CAP",
]

COHERENT_NBAR_CAP = 5.0      # larger pulses only behind the --long flag

RATE_KEYS = ("g_a", "g_b", "kappa_a", "kappa_b", "kappa_s", "gamma", "delta")
PARAM_KEYS = RATE_KEYS + ("spont_variant", "qd_present", "qd_initial_level", "input")
SWEEP_ALIASES = {"g": ("g_a", "g_b"), "kappa": ("kappa_a", "kappa_b")}
SWEEPABLE = set(RATE_KEYS) | set(SWEEP_ALIASES) | {"nbar_in", "n_in", "qd_present"}
OBSERVABLE_FAMILIES = ("detection", "pairs", "nbar", "g2", "histogram")
SPONT_VARIANT_FLAGS = {"literal": "literal_projector",
                       "radiative": "radiative_lowering"}

CONTROL_KEYS = ("t_end_lifetimes", "dt_max", "method", "jump_time_tol",
                "norm_floor", "residual_tolerance", "max_jumps", "chunk_size")

_BENCH = {
    "g_a": 10.0, "g_b": 10.0, "kappa_a": 20.0, "kappa_b": 20.0,
    "kappa_s": 0.05, "gamma": 0.25, "delta": 25.0,
    "spont_variant": "literal_projector", "qd_present": True,
    "qd_initial_level": 1, "input": {"kind": "fock", "value": 1},
}


def _logspace(lo: float, hi: float, n: int) -> list[float]:
    step = (math.log10(hi) - math.log10(lo)) / (n - 1)
    return [float(f"{10.0 ** (math.log10(lo) + i * step):.12g}") for i in range(n)]


def _span(lo: float, hi: float, step: float) -> list[float]:
    n = int(round((hi - lo) / step)) + 1
    return [float(f"{lo + i * step:.12g}") for i in range(n)]


# Each preset is a full config document; grid resolutions are desk-scale
# choices documented in the README.
PRESETS: dict[str, dict] = {
    "fig2": {
        "params": dict(_BENCH),
        "sweep": [{"name": "kappa_a", "values": _logspace(1.0, 100.0, 21)},
                  {"name": "kappa_b", "values": _logspace(1.0, 100.0, 21)}],
        "observables": ["detection"],
        "n_traj": 10_000,
    },
    "fig3a": {
        "params": dict(_BENCH),
        "sweep": [{"name": "g", "values": _span(5.0, 30.0, 5.0)},
                  {"name": "kappa", "values": _logspace(2.0, 200.0, 15)}],
        "observables": ["detection"],
        "n_traj": 10_000,
    },
    "fig3b": {
        "params": dict(_BENCH),
        "sweep": [{"name": "gamma", "values": _span(0.05, 1.05, 0.2)},
                  {"name": "kappa", "values": _logspace(2.0, 200.0, 15)}],
        "observables": ["detection"],
        "n_traj": 10_000,
    },
    "fig4": {
        "params": {**_BENCH, "input": {"kind": "fock", "value": 2}},
        "sweep": [{"name": "kappa", "values": [10.0, 20.0, 30.0, 40.0]},
                  {"name": "delta", "values": _span(0.0, 40.0, 2.5)}],
        "observables": ["pairs"],
        "n_traj": 10_000,
    },
    "fig5": {
        "params": {**_BENCH, "input": {"kind": "coherent", "value": 1.0}},
        "sweep": [{"name": "qd_present", "values": [1, 0]},
                  {"name": "nbar_in", "values": [1.0, 2.0, 3.0, 4.0, 5.0]}],
        "observables": ["nbar"],
        "n_traj": 10_000,
    },
    "fig6": {
        "params": {**_BENCH, "input": {"kind": "coherent", "value": 1.0}},
        "sweep": [{"name": "nbar_in", "values": [1.0, 2.0, 3.0, 4.0, 5.0]}],
        "observables": ["nbar", "g2"],
        "n_traj": 40_000,
    },
    "fig7": {
        "params": {**_BENCH, "input": {"kind": "coherent", "value": 2.0}},
        "sweep": [{"name": "qd_present", "values": [1, 0]},
                  {"name": "nbar_in", "values": [2.0, 5.0]}],
        "observables": ["nbar", "histogram"],
        "n_traj": 10_000,
    },
}

# large-pulse sweep points too slow for desk scale, enabled by --long
LONG_SWEEP_EXTRAS = {"fig5": [8.0, 12.0], "fig6": [8.0, 12.0], "fig7": [12.0]}


@dataclass(frozen=True)
class SweepAxis:
    name: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description in human units."""

    params: dict                     # GHz rates + input/variant/dot fields
    n_traj: int
    master_seed: int
    workers: int
    controls: Controls
    t_end_lifetimes: float
    target_dim: int | None
    oracle: str                      # on | off | auto
    sweep: tuple[SweepAxis, ...]
    observables: tuple[str, ...]
    preset: str | None
    long_run: bool

    def document(self) -> dict:
        """Canonical JSON-ready echo of the parsed configuration."""
        return {
            "preset": self.preset,
            "params": self.params,
            "truncations": {"target_dim": self.target_dim},
            "n_traj": self.n_traj,
            "master_seed": self.master_seed,
            "workers": self.workers,
            "controls": {
                "t_end_lifetimes": self.t_end_lifetimes,
                "dt_max": self.controls.dt_max,
                "method": self.controls.method,
                "jump_time_tol": self.controls.jump_time_tol,
                "norm_floor": self.controls.norm_floor,
                "residual_tolerance": self.controls.residual_tolerance,
                "max_jumps": self.controls.max_jumps,
                "chunk_size": self.controls.chunk_size,
            },
            "oracle": self.oracle,
            "sweep": [{"name": ax.name, "values": list(ax.values)}
                      for ax in self.sweep],
            "observables": list(self.observables),
            "long_run": self.long_run,
        }


def preset_names() -> tuple[str, ...]:
    return tuple(sorted(PRESETS))


def _fail(path: str, msg: str) -> None:
    raise ConfigError(f"config.{path}: {msg}")


def _expect_keys(doc: dict, allowed, path: str) -> None:
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        _fail(path or "top level", f"unknown key {unknown[0]!r}")


def _finite(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        _fail(path, f"value must be finite, got {value!r}")
    return float(value)


def _validate_params(doc: dict) -> dict:
    _expect_keys(doc, PARAM_KEYS, "params")
    out = dict(_BENCH)
    out.update(doc)
    for key in RATE_KEYS:
        if _finite(out[key], f"params.{key}") < 0.0:
            _fail(f"params.{key}", f"must be >= 0, got {out[key]}")
        out[key] = float(out[key])
    if out["spont_variant"] not in ("literal_projector", "radiative_lowering"):
        _fail("params.spont_variant", f"unknown variant {out['spont_variant']!r}")
    if not isinstance(out["qd_present"], bool):
        _fail("params.qd_present", "expected true or false")
    if out["qd_initial_level"] not in (1, 2, 3, 4):
        _fail("params.qd_initial_level", f"must lie in 1..4, got {out['qd_initial_level']}")
    inp = out["input"]
    if not isinstance(inp, dict):
        _fail("params.input", "expected an object {kind, value}")
    _expect_keys(inp, ("kind", "value"), "params.input")
    kind = inp.get("kind")
    if kind not in ("fock", "coherent"):
        _fail("params.input.kind", f"must be fock or coherent, got {kind!r}")
    value = _finite(inp.get("value", None), "params.input.value")
    if value < 0.0:
        _fail("params.input.value", f"must be >= 0, got {value}")
    if kind == "fock" and value != int(value):
        _fail("params.input.value", f"fock input needs an integer, got {value}")
    out["input"] = {"kind": kind, "value": value}
    return out


def _validate_sweep(doc, params: dict) -> tuple[SweepAxis, ...]:
    if not isinstance(doc, list):
        _fail("sweep", "expected a list of {name, values} axes")
    axes = []
    for i, ax in enumerate(doc):
        path = f"sweep[{i}]"
        if not isinstance(ax, dict):
            _fail(path, "expected an object {name, values}")
        _expect_keys(ax, ("name", "values"), path)
        name = ax.get("name")
        if name not in SWEEPABLE:
            _fail(f"{path}.name", f"{name!r} is not a sweepable parameter "
                                  f"(choose from {sorted(SWEEPABLE)})")
        values = ax.get("values")
        if not isinstance(values, list) or not values:
            _fail(f"{path}.values", "expected a non-empty list of numbers")
        vals = tuple(_finite(v, f"{path}.values[{j}]") for j, v in enumerate(values))
        if name == "nbar_in" and params["input"]["kind"] != "coherent":
            _fail(f"{path}.name", "nbar_in sweeps need a coherent input")
        if name == "n_in":
            if params["input"]["kind"] != "fock":
                _fail(f"{path}.name", "n_in sweeps need a fock input")
            if any(v != int(v) for v in vals):
                _fail(f"{path}.values", "fock photon numbers must be integers")
        if name == "qd_present" and any(v not in (0.0, 1.0) for v in vals):
            _fail(f"{path}.values", "qd_present takes values 0 or 1")
        axes.append(SweepAxis(name=name, values=vals))
    names = [ax.name for ax in axes]
    if len(set(names)) != len(names):
        _fail("sweep", "duplicate axis names")
    return tuple(axes)


def _validate_controls(doc: dict):
    _expect_keys(doc, CONTROL_KEYS, "controls")
    t_end_lifetimes = _finite(doc.get("t_end_lifetimes", 10.0), "controls.t_end_lifetimes")
    if t_end_lifetimes <= 0.0:
        _fail("controls.t_end_lifetimes", "must be > 0")
    kw = {}
    for key in ("dt_max", "jump_time_tol", "norm_floor", "residual_tolerance"):
        if doc.get(key) is not None:
            kw[key] = _finite(doc[key], f"controls.{key}")
    for key in ("max_jumps", "chunk_size"):
        if key in doc:
            if not isinstance(doc[key], int) or isinstance(doc[key], bool):
                _fail(f"controls.{key}", "expected an integer")
            kw[key] = doc[key]
    if "method" in doc:
        kw["method"] = doc["method"]
    try:
        controls = Controls(**kw)
    except ConfigError as exc:
        _fail("controls", str(exc))
    return controls, t_end_lifetimes


def _coherent_values(params: dict, sweep) -> list[float]:
    vals = []
    if params["input"]["kind"] == "coherent":
        vals.append(params["input"]["value"])
    for ax in sweep:
        if ax.name == "nbar_in":
            vals.extend(ax.values)
    return vals


TOP_KEYS = ("preset", "params", "truncations", "n_traj", "master_seed", "workers",
            "controls", "oracle", "sweep", "observables", "long_run")


def parse_config(text: str, force_long: bool = False) -> ExperimentConfig:
    """Parse and validate a JSON experiment config; unknown keys are errors.

    force_long enables the large-pulse cap override from the command line
    without editing the config document.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    _expect_keys(doc, TOP_KEYS, "")

    preset = doc.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            _fail("preset", f"unknown preset {preset!r} "
                            f"(choose from {list(preset_names())})")
        base = json.loads(json.dumps(PRESETS[preset]))   # deep copy
        base_params = base.pop("params")
        user_params = doc.get("params", {})
        merged = dict(doc)
        merged["params"] = {**base_params, **user_params}
        for key, value in base.items():
            merged.setdefault(key, value)
        doc = merged

    params = _validate_params(doc.get("params", {}))
    controls, t_end_lifetimes = _validate_controls(doc.get("controls", {}))
    sweep = _validate_sweep(doc.get("sweep", []), params)

    trunc = doc.get("truncations", {})
    if not isinstance(trunc, dict):
        _fail("truncations", "expected an object")
    _expect_keys(trunc, ("target_dim",), "truncations")
    target_dim = trunc.get("target_dim")
    if target_dim is not None:
        if not isinstance(target_dim, int) or isinstance(target_dim, bool) or target_dim < 1:
            _fail("truncations.target_dim", f"expected a positive integer, got {target_dim!r}")

    n_traj = doc.get("n_traj", 10_000)
    master_seed = doc.get("master_seed", 1)
    workers = doc.get("workers", 1)
    for key, val in (("n_traj", n_traj), ("master_seed", master_seed),
                     ("workers", workers)):
        if not isinstance(val, int) or isinstance(val, bool):
            _fail(key, f"expected an integer, got {val!r}")
    if n_traj < 1:
        _fail("n_traj", "must be >= 1")
    if workers < 1:
        _fail("workers", "must be >= 1")
    if master_seed < 0:
        _fail("master_seed", "must be >= 0")

    oracle = doc.get("oracle", "auto")
    if oracle not in ("on", "off", "auto"):
        _fail("oracle", f"must be on, off, or auto, got {oracle!r}")

    observables = doc.get("observables", ["detection", "nbar"])
    if (not isinstance(observables, list) or not observables
            or any(o not in OBSERVABLE_FAMILIES for o in observables)):
        _fail("observables", f"expected a non-empty subset of {OBSERVABLE_FAMILIES}")

    long_run = doc.get("long_run", False)
    if not isinstance(long_run, bool):
        _fail("long_run", "expected true or false")
    long_run = long_run or force_long

    cfg = ExperimentConfig(
        params=params, n_traj=n_traj, master_seed=master_seed, workers=workers,
        controls=controls, t_end_lifetimes=t_end_lifetimes, target_dim=target_dim,
        oracle=oracle, sweep=sweep, observables=tuple(observables),
        preset=preset, long_run=long_run)

    over_cap = [v for v in _coherent_values(params, sweep) if v > COHERENT_NBAR_CAP]
    if over_cap and not long_run:
        _fail("params.input", f"coherent nbar {max(over_cap)} exceeds the "
              f"desk-scale cap {COHERENT_NBAR_CAP}; pass --long (long_run) to allow it")
    return cfg


def preset_config(name: str, long_run: bool = False) -> ExperimentConfig:
    """Resolve a named figure preset, optionally with the long-running points."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r} (choose from {list(preset_names())})")
    cfg = parse_config(json.dumps({"preset": name, "long_run": long_run}))
    if long_run and name in LONG_SWEEP_EXTRAS:
        axes = []
        for ax in cfg.sweep:
            if ax.name == "nbar_in":
                ax = SweepAxis(ax.name, ax.values + tuple(LONG_SWEEP_EXTRAS[name]))
            axes.append(ax)
        cfg = replace(cfg, sweep=tuple(axes))
    return cfg


def build_point_params(config: ExperimentConfig,
                       coords: dict[str, float]) -> SystemParams:
    """SystemParams (angular units) for one sweep point.

    coords maps axis names to values in the human units of the config;
    aliases g and kappa fan out to both polarization modes.
    """
    doc = dict(config.params)
    inp = dict(doc["input"])
    for name, value in coords.items():
        if name in SWEEP_ALIASES:
            for target in SWEEP_ALIASES[name]:
                doc[target] = value
        elif name == "nbar_in":
            inp = {"kind": "coherent", "value": float(value)}
        elif name == "n_in":
            inp = {"kind": "fock", "value": int(value)}
        elif name == "qd_present":
            doc["qd_present"] = bool(value)
        else:
            doc[name] = value
    spec = (InputSpec.fock(int(inp["value"])) if inp["kind"] == "fock"
            else InputSpec.coherent(float(inp["value"])))
    dot = bool(doc["qd_present"])
    return SystemParams.resonant(
        g_a=doc["g_a"] * GHZ if dot else 0.0,
        g_b=doc["g_b"] * GHZ if dot else 0.0,
        kappa_a=doc["kappa_a"] * GHZ, kappa_b=doc["kappa_b"] * GHZ,
        kappa_s=doc["kappa_s"] * GHZ,
        gamma=doc["gamma"] * GHZ if dot else 0.0,
        delta=doc["delta"] * GHZ,
        spont_variant=doc["spont_variant"], qd_present=dot,
        qd_initial_level=doc["qd_initial_level"], input_spec=spec)
