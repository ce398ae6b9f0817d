"""Strict scenario configuration: flat INI, schema-checked, errors accumulated.

A config has a [run] section naming the experiment, the master seed, and the
output directory, plus one section of experiment-specific keys.  Parsing is
strict: unknown sections or keys are errors, as are type or range
violations, and every problem found is reported (not just the first).
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from typing import Any, Callable

EXPERIMENTS = ("schedule", "identify", "refine", "lg", "chsh")

_STANDARD_ANGLES = (0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4)
_LN2 = math.log(2.0)


class ConfigError(ValueError):
    """All problems found while validating a scenario config."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(errors))


@dataclass
class ScenarioConfig:
    experiment: str
    seed: int
    output_dir: str
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class _Key:
    convert: Callable[[str], Any]
    default: Any
    check: Callable[[Any], str | None] = lambda v: None


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _int_at_least(minimum: int):
    return lambda v: None if v >= minimum else f"must be >= {minimum}"


def _float_range(lo: float | None = None, hi: float | None = None,
                 lo_strict: bool = False):
    def chk(v: float) -> str | None:
        if lo is not None and (v <= lo if lo_strict else v < lo):
            return f"must be {'>' if lo_strict else '>='} {lo:g}"
        if hi is not None and v > hi:
            return f"must be <= {hi:g}"
        return None

    return chk


def _choice(*options: str):
    def chk(v: str) -> str | None:
        return None if v in options else f"must be one of {', '.join(options)}"

    return chk


def _float_list(count: int):
    def conv(raw: str) -> tuple[float, ...]:
        parts = tuple(float(x) for x in raw.split(","))
        if len(parts) != count:
            raise ValueError(f"expected {count} comma-separated numbers")
        return parts

    return conv


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(x) for x in raw.split(","))


_SCHEMAS: dict[str, dict[str, _Key]] = {
    "schedule": {
        "n": _Key(int, 4, _int_at_least(1)),
        "m": _Key(int, 3, _int_at_least(1)),
        "dt_obs": _Key(float, 1.0, _float_range(0.0, lo_strict=True)),
        "c_obs": _Key(float, _LN2, _float_range(_LN2 - 1e-12)),
        "temperature_K": _Key(float, 300.0, _float_range(0.0, lo_strict=True)),
        # pulse | uniform | path to a per-step weights CSV
        "schedule": _Key(str, "pulse"),
    },
    "identify": {
        "d_w": _Key(int, 4, _int_at_least(3)),
        "delta": _Key(float, 1e-6, _float_range(0.0, lo_strict=True)),
        "trials": _Key(int, 16, _int_at_least(2)),
    },
    "refine": {
        "d_w": _Key(int, 4, _int_at_least(1)),
        "kappa": _Key(float, 1.6, _float_range(0.0)),
        "trials": _Key(int, 100, _int_at_least(1)),
        "probe_counts": _Key(_int_list, (1, 2, 3, 4)),
        "c_obs": _Key(float, _LN2, _float_range(_LN2 - 1e-12)),
        "temperature_K": _Key(float, 300.0, _float_range(0.0, lo_strict=True)),
    },
    "lg": {
        "theta_per_step": _Key(float, math.pi / 3),
        "t1": _Key(int, 0, _int_at_least(0)),
        "t2": _Key(int, 1, _int_at_least(0)),
        "t3": _Key(int, 2, _int_at_least(0)),
        "trials": _Key(int, 100_000, _int_at_least(1)),
        "pointer_model": _Key(str, "qubit", _choice("qubit", "hysteretic")),
        "calibrate_between": _Key(_parse_bool, False),
        "mode": _Key(str, "sampled", _choice("exact", "sampled")),
        "p_stay_after_1": _Key(float, 0.9, _float_range(0.0, 1.0)),
        "p_stay_after_0": _Key(float, 0.5, _float_range(0.0, 1.0)),
        "base_flip": _Key(float, 0.1, _float_range(0.0, 1.0)),
        "initial_p1": _Key(float, 0.5, _float_range(0.0, 1.0)),
    },
    "chsh": {
        # singlet | product | path to a density-matrix CSV
        "state": _Key(str, "singlet"),
        "angles": _Key(_float_list(4), _STANDARD_ANGLES),
        "trials": _Key(int, 100_000, _int_at_least(1)),
        "mode": _Key(str, "exact", _choice("exact", "sampled")),
        # none | path to a correlation-table CSV
        "adversary": _Key(str, "none"),
    },
}


def parse_config(text: str) -> ScenarioConfig:
    """Validate config text; raises ConfigError listing every problem found."""
    errors: list[str] = []
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax error: {exc}"]) from exc

    if not parser.has_section("run"):
        raise ConfigError(["missing [run] section"])
    run_keys = dict(parser.items("run"))
    experiment = run_keys.pop("experiment", None)
    if experiment is None:
        errors.append("[run] experiment: missing required key")
    elif experiment not in EXPERIMENTS:
        errors.append(f"[run] experiment = {experiment}: must be one of "
                      f"{', '.join(EXPERIMENTS)}")
        experiment = None

    seed = 0
    raw_seed = run_keys.pop("seed", None)
    if raw_seed is not None:
        try:
            seed = int(raw_seed)
        except ValueError:
            errors.append(f"[run] seed = {raw_seed}: not an integer")
        else:
            if not 0 <= seed < 2 ** 64:
                errors.append(f"[run] seed = {raw_seed}: must fit in 64 bits")
    output_dir = run_keys.pop("out", "out")
    for key in run_keys:
        errors.append(f"[run] {key}: unknown key")

    params: dict[str, Any] = {}
    if experiment is not None:
        schema = _SCHEMAS[experiment]
        section = dict(parser.items(experiment)) if parser.has_section(experiment) else {}
        for name, spec in schema.items():
            if name in section:
                raw = section.pop(name)
                try:
                    value = spec.convert(raw)
                except ValueError as exc:
                    errors.append(f"[{experiment}] {name} = {raw}: {exc}")
                    continue
                problem = spec.check(value)
                if problem:
                    errors.append(f"[{experiment}] {name} = {raw}: {problem}")
                else:
                    params[name] = value
            else:
                params[name] = spec.default
        for key in section:
            errors.append(f"[{experiment}] {key}: unknown key")
    for section_name in parser.sections():
        if section_name not in ("run", experiment):
            errors.append(f"[{section_name}]: unknown section")

    if errors:
        raise ConfigError(errors)
    return ScenarioConfig(experiment=experiment, seed=seed,
                          output_dir=output_dir, params=params)
