"""Run configuration: JSON loading, strict key checking and dotted overrides."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .barrier import margin_epsilon_min
from .initial import KINDS
from .model import ModelParams
from .quadrature import QuadratureSpec


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


DEFAULTS: dict[str, Any] = {
    "params": {"alpha": 0.5, "p": 0.25, "q": 0.25, "margin_epsilon": None},
    "barrier": {"a0": 0.5, "c0": None},
    "initial_data": {"kind": "barrier_multiple", "coefficients": {}},
    "n_particles": 1024,
    "x_max": 50.0,
    "grading_power": 3.0,
    "cfl": 0.4,
    "dt_max": 0.01,
    "t_end": None,
    "stop_slope": 1e4,
    "reg_epsilon": None,
    "snapshot_every": 2,
    "quadrature": {"rel_tol": 1e-8, "abs_tol": 1e-12, "max_subdivisions": 50,
                   "singular_split_radius_factor": 1.0},
    "output": {"directory": "runs/default"},
}

MARGIN_HEADROOM = 1.05


@dataclass(frozen=True)
class BarrierSpec:
    a0: float
    c0: float | None = None


@dataclass(frozen=True)
class InitialDataSpec:
    kind: str
    coefficients: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunConfig:
    """Validated run settings.

    ``c0 = None`` means half the computed ratio constant, ``t_end = None``
    means 5% past the barrier's singular time, ``reg_epsilon = None`` selects
    the exact kernel.
    """

    params: ModelParams
    barrier: BarrierSpec
    initial_data: InitialDataSpec
    n_particles: int
    x_max: float
    grading_power: float
    cfl: float
    dt_max: float
    t_end: float | None
    stop_slope: float
    reg_epsilon: float | None
    snapshot_every: int
    quadrature: QuadratureSpec
    output_directory: str

    def __post_init__(self) -> None:
        if self.n_particles < 64:
            raise ConfigError(f"n_particles must be at least 64, got {self.n_particles}")
        if not self.x_max >= 10.0 * self.barrier.a0:
            raise ConfigError(f"x_max must be at least 10*a0 = {10 * self.barrier.a0}")
        if not 0.0 < self.cfl < 1.0:
            raise ConfigError(f"cfl must lie in (0, 1), got {self.cfl}")
        if not self.dt_max > 0.0:
            raise ConfigError("dt_max must be positive")
        if self.t_end is not None and not self.t_end > 0.0:
            raise ConfigError("t_end must be positive")
        if not self.stop_slope > 0.0:
            raise ConfigError("stop_slope must be positive")
        if self.reg_epsilon is not None and not self.reg_epsilon > 0.0:
            raise ConfigError("reg_epsilon must be positive")
        if self.snapshot_every < 1:
            raise ConfigError("snapshot_every must be at least 1")
        if self.grading_power < 1.0:
            raise ConfigError("grading_power must be at least 1")
        if self.barrier.c0 is not None and not self.barrier.c0 > 0.0:
            raise ConfigError("c0 must be positive")
        if self.initial_data.kind not in KINDS:
            raise ConfigError(f"initial_data.kind must be one of {KINDS}")
        if self.initial_data.kind != "zero":
            self.params.require_barrier_mode()
            self.params.check_margin(self.barrier.a0)

    def to_dict(self) -> dict:
        params = asdict(self.params)
        params.pop("gamma")
        return {
            "params": params,
            "barrier": asdict(self.barrier),
            "initial_data": asdict(self.initial_data),
            "n_particles": self.n_particles,
            "x_max": self.x_max,
            "grading_power": self.grading_power,
            "cfl": self.cfl,
            "dt_max": self.dt_max,
            "t_end": self.t_end,
            "stop_slope": self.stop_slope,
            "reg_epsilon": self.reg_epsilon,
            "snapshot_every": self.snapshot_every,
            "quadrature": asdict(self.quadrature),
            "output": {"directory": self.output_directory},
        }


def _merge(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown configuration key {where!r}")
        free_form = where == "initial_data.coefficients"
        if isinstance(base[key], dict) and not free_form:
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be an object")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = copy.deepcopy(value)
    return out


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply ``key.sub=value`` strings on top of the defaults; values parse as JSON when possible."""
    out = _merge(DEFAULTS, raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, text = item.split("=", 1)
        nested: Any = _parse_value(text)
        for part in reversed(key.strip().split(".")):
            nested = {part: nested}
        out = _merge(out, nested)
    return out


def _number(value, where: str, allow_none: bool = False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{where} must be finite")
    return float(value)


def from_dict(raw: dict) -> RunConfig:
    full = _merge(DEFAULTS, raw)
    prm = full["params"]
    alpha = _number(prm["alpha"], "params.alpha")
    p = _number(prm["p"], "params.p")
    q = _number(prm["q"], "params.q")
    a0 = _number(full["barrier"]["a0"], "barrier.a0")
    if not 0.0 < a0 < 1.0:
        raise ConfigError(f"barrier.a0 must lie in (0, 1), got {a0}")
    eps = _number(prm["margin_epsilon"], "params.margin_epsilon", allow_none=True)
    if eps is None:
        eps = MARGIN_HEADROOM * margin_epsilon_min(a0, p)
    try:
        params = ModelParams(alpha, p, q, eps)
        quad = QuadratureSpec(**{k: _number(v, f"quadrature.{k}") if k != "max_subdivisions" else int(v)
                                 for k, v in full["quadrature"].items()})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    init = full["initial_data"]
    if not isinstance(init["coefficients"], dict):
        raise ConfigError("initial_data.coefficients must be an object")
    n = full["n_particles"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise ConfigError("n_particles must be an integer")
    every = full["snapshot_every"]
    if isinstance(every, bool) or not isinstance(every, int):
        raise ConfigError("snapshot_every must be an integer")
    out_dir = full["output"]["directory"]
    if not isinstance(out_dir, str):
        raise ConfigError("output.directory must be a string")
    try:
        return RunConfig(
            params=params,
            barrier=BarrierSpec(a0, _number(full["barrier"]["c0"], "barrier.c0", allow_none=True)),
            initial_data=InitialDataSpec(str(init["kind"]), dict(init["coefficients"])),
            n_particles=n,
            x_max=_number(full["x_max"], "x_max"),
            grading_power=_number(full["grading_power"], "grading_power"),
            cfl=_number(full["cfl"], "cfl"),
            dt_max=_number(full["dt_max"], "dt_max"),
            t_end=_number(full["t_end"], "t_end", allow_none=True),
            stop_slope=_number(full["stop_slope"], "stop_slope"),
            reg_epsilon=_number(full["reg_epsilon"], "reg_epsilon", allow_none=True),
            snapshot_every=every,
            quadrature=quad,
            output_directory=out_dir,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None = None, overrides: list[str] | None = None) -> RunConfig:
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("configuration root must be an object")
    return from_dict(apply_overrides(raw, list(overrides or [])))
