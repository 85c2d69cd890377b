"""JSON experiment configs: parsing into model specs, sweeps over numeric fields."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any

from .errors import UsageError
from .models import (
    BathMode,
    CavityThermalSpec,
    PureDephasingSpec,
    SpinBosonSpec,
    ThermalMode,
)
from .states import DEFAULT_LEAK_TOL, DEFAULT_TRUNCATION, BosonStateSpec, QubitStateSpec

MODEL_KINDS = ("pure_dephasing", "cavity_thermal", "spin_boson")


class ConfigError(UsageError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class RunSettings:
    t_max: float = 2.0
    steps: int = 400
    eps_s: float = 0.05


@dataclass(frozen=True)
class SweepSettings:
    parameter: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class OutputSettings:
    format: str = "csv"
    path: str | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    model: Any
    run: RunSettings
    sweep: SweepSettings | None
    output: OutputSettings
    raw: dict

    @property
    def model_hash(self) -> str:
        payload = json.dumps(self.raw.get("model"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _obj(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected an object, got {type(value).__name__}")
    return value


def _reject_unknown(d: dict, allowed: set[str], path: str) -> None:
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"{path}.{extra[0]}", "unknown field")


def _num(d: dict, key: str, path: str, default=None, required: bool = False, integer: bool = False):
    if key not in d or d[key] is None:
        if required:
            raise ConfigError(f"{path}.{key}", "required field is missing")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {json.dumps(v)}")
    if integer:
        if int(v) != v:
            raise ConfigError(f"{path}.{key}", f"expected an integer, got {v}")
        return int(v)
    if not math.isfinite(v):
        raise ConfigError(f"{path}.{key}", "must be finite")
    return float(v)


def _wrap(path: str, build):
    try:
        return build()
    except ConfigError:
        raise
    except UsageError as exc:
        raise ConfigError(path, str(exc)) from None


def parse_qubit(d, path: str) -> QubitStateSpec:
    d = _obj(d, path)
    _reject_unknown(d, {"theta", "phi"}, path)
    theta = _num(d, "theta", path, required=True)
    phi = _num(d, "phi", path, default=0.0)
    return _wrap(path, lambda: QubitStateSpec(theta, phi))


def parse_boson(d, path: str) -> BosonStateSpec:
    d = _obj(d, path)
    _reject_unknown(d, {"kind", "param", "truncation", "leak_tol"}, path)
    kind = d.get("kind")
    if not isinstance(kind, str):
        raise ConfigError(f"{path}.kind", "required string field is missing")
    param = d.get("param", 0)
    if kind == "coherent" and isinstance(param, (list, dict)):
        pass
    elif isinstance(param, bool) or not isinstance(param, (int, float)):
        raise ConfigError(f"{path}.param", f"expected a number, got {json.dumps(param)}")
    truncation = _num(d, "truncation", path, default=DEFAULT_TRUNCATION, integer=True)
    leak_tol = _num(d, "leak_tol", path, default=DEFAULT_LEAK_TOL)
    return _wrap(path, lambda: BosonStateSpec(kind, param, truncation, leak_tol))


def _parse_pure_dephasing(d, path):
    _reject_unknown(d, {"g", "qubit", "boson"}, path)
    g = _num(d, "g", path, required=True)
    qubit = parse_qubit(d.get("qubit"), f"{path}.qubit")
    boson = parse_boson(d.get("boson"), f"{path}.boson")
    return _wrap(path, lambda: PureDephasingSpec(g, qubit, boson))


def _parse_cavity(d, path):
    _reject_unknown(d, {"modes", "cavity_state", "cavity_amplitudes", "cavity_truncation"}, path)
    raw_modes = d.get("modes")
    if not isinstance(raw_modes, list) or not raw_modes:
        raise ConfigError(f"{path}.modes", "expected a non-empty list")
    modes = []
    for j, m in enumerate(raw_modes):
        mp = f"{path}.modes.{j}"
        m = _obj(m, mp)
        _reject_unknown(m, {"g", "nbar", "truncation", "leak_tol"}, mp)
        g = _num(m, "g", mp, required=True)
        nbar = _num(m, "nbar", mp, default=0.0)
        trunc = _num(m, "truncation", mp, integer=True)
        leak = _num(m, "leak_tol", mp, default=DEFAULT_LEAK_TOL)
        modes.append(_wrap(mp, lambda: ThermalMode(g, nbar, trunc, leak)))
    state = None
    amps = None
    if d.get("cavity_state") is not None:
        state = parse_boson(d["cavity_state"], f"{path}.cavity_state")
    if d.get("cavity_amplitudes") is not None:
        raw = d["cavity_amplitudes"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError(f"{path}.cavity_amplitudes", "expected a non-empty list")
        amps = []
        for i, a in enumerate(raw):
            if isinstance(a, list) and len(a) == 2 and all(isinstance(x, (int, float)) for x in a):
                amps.append(complex(a[0], a[1]))
            elif isinstance(a, (int, float)) and not isinstance(a, bool):
                amps.append(complex(a))
            else:
                raise ConfigError(f"{path}.cavity_amplitudes.{i}", "expected a number or [re, im]")
    ctrunc = _num(d, "cavity_truncation", path, integer=True)
    return _wrap(path, lambda: CavityThermalSpec(tuple(modes), state, tuple(amps) if amps else None, ctrunc))


def _parse_spin_boson(d, path):
    _reject_unknown(d, {"delta", "delta_G", "omega_rabi", "modes", "temperature", "qubit", "leak_tol"}, path)
    raw_modes = d.get("modes")
    if not isinstance(raw_modes, list) or not raw_modes:
        raise ConfigError(f"{path}.modes", "expected a non-empty list")
    modes = []
    for k, m in enumerate(raw_modes):
        mp = f"{path}.modes.{k}"
        m = _obj(m, mp)
        _reject_unknown(m, {"g", "omega", "nbar", "truncation"}, mp)
        g = _num(m, "g", mp, required=True)
        omega = _num(m, "omega", mp, required=True)
        nbar = _num(m, "nbar", mp)
        trunc = _num(m, "truncation", mp, integer=True)
        modes.append(_wrap(mp, lambda: BathMode(g, omega, nbar, trunc)))
    delta = _num(d, "delta", path, default=0.0)
    delta_G = _num(d, "delta_G", path, required=True)
    omega_rabi = _num(d, "omega_rabi", path, default=0.0)
    temperature = _num(d, "temperature", path)
    leak = _num(d, "leak_tol", path, default=DEFAULT_LEAK_TOL)
    qubit = parse_qubit(d.get("qubit"), f"{path}.qubit")
    return _wrap(path, lambda: SpinBosonSpec(delta, delta_G, omega_rabi, tuple(modes), qubit, temperature, leak))


_MODEL_PARSERS = {
    "pure_dephasing": _parse_pure_dephasing,
    "cavity_thermal": _parse_cavity,
    "spin_boson": _parse_spin_boson,
}


def parse_model(d, path: str = "model") -> tuple[str, Any]:
    d = _obj(d, path)
    present = [k for k in d if k in _MODEL_PARSERS]
    unknown = [k for k in d if k not in _MODEL_PARSERS]
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}", f"unknown model variant; expected one of {MODEL_KINDS}")
    if len(present) != 1:
        raise ConfigError(path, f"exactly one model variant required, found {len(present)}")
    kind = present[0]
    return kind, _MODEL_PARSERS[kind](_obj(d[kind], f"{path}.{kind}"), f"{path}.{kind}")


def parse_config(raw: dict) -> ExperimentConfig:
    raw = _obj(raw, "config")
    _reject_unknown(raw, {"model", "run", "sweep", "output"}, "config")
    if "model" not in raw:
        raise ConfigError("model", "required section is missing")
    kind, model = parse_model(raw["model"])

    run_d = _obj(raw.get("run", {}), "run")
    _reject_unknown(run_d, {"t_max", "steps", "eps_s"}, "run")
    run = RunSettings(
        t_max=_num(run_d, "t_max", "run", default=RunSettings.t_max),
        steps=_num(run_d, "steps", "run", default=RunSettings.steps, integer=True),
        eps_s=_num(run_d, "eps_s", "run", default=RunSettings.eps_s),
    )
    if run.t_max <= 0:
        raise ConfigError("run.t_max", "must be positive")
    if run.steps < 16:
        raise ConfigError("run.steps", "must be >= 16")
    if not (0 < run.eps_s <= 0.5):
        raise ConfigError("run.eps_s", "must lie in (0, 0.5]")

    sweep = None
    if raw.get("sweep") is not None:
        sd = _obj(raw["sweep"], "sweep")
        _reject_unknown(sd, {"parameter", "values"}, "sweep")
        param = sd.get("parameter")
        if not isinstance(param, str):
            raise ConfigError("sweep.parameter", "expected a dotted path string")
        values = sd.get("values")
        if not isinstance(values, list) or not values:
            raise ConfigError("sweep.values", "expected a non-empty list")
        for i, v in enumerate(values):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"sweep.values.{i}", "expected a finite number")
        current = _resolve(raw, param)
        if isinstance(current, bool) or not isinstance(current, (int, float)):
            raise ConfigError("sweep.parameter", f"{param} does not resolve to a numeric field")
        sweep = SweepSettings(param, tuple(float(v) for v in values))

    out_d = _obj(raw.get("output", {}), "output")
    _reject_unknown(out_d, {"format", "path"}, "output")
    fmt = out_d.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("output.format", "must be 'csv' or 'json'")
    path = out_d.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("output.path", "expected a string")
    return ExperimentConfig(kind, model, run, sweep, OutputSettings(fmt, path), copy.deepcopy(raw))


def _resolve(raw: dict, dotted: str):
    node: Any = raw
    for part in dotted.split("."):
        if isinstance(node, list):
            try:
                node = node[int(part)]
            except (ValueError, IndexError):
                raise ConfigError("sweep.parameter", f"{dotted}: no element {part!r}") from None
        elif isinstance(node, dict) and part in node:
            node = node[part]
        else:
            raise ConfigError("sweep.parameter", f"{dotted}: no field {part!r}")
    return node


def with_value(raw: dict, dotted: str, value: float) -> dict:
    """Deep copy of ``raw`` with the field at ``dotted`` replaced."""
    out = copy.deepcopy(raw)
    parts = dotted.split(".")
    node: Any = out
    for part in parts[:-1]:
        node = node[int(part)] if isinstance(node, list) else node[part]
    last = parts[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value
    return out


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_config(raw)
