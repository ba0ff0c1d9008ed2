"""JSON experiment configuration.

Example::

    {
      "system": {"source": "synthetic", "dims": {"m": 284, "k": 60, "seed": 1}},
      "state":  {"values": "default", "perturbation_rho": 0.0},
      "noise":  {"order": 1, "coeffs": [0.9], "sigma2": 0.5, "burn_in": 0},
      "attack": {"kind": "sparse", "magnitude": 1.0, "d": 29},
      "run":    {"n": 20, "trials": 1000, "detectors": ["gaussian", "ar"], "master_seed": 0}
    }

``system.source`` is ``case`` (DC case file, every branch flow in both
directions plus every injection metered), ``matrix`` (matrix file) or
``synthetic`` (seeded standard-normal H). Relative paths resolve against
the config file's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema

from . import attacks
from .arnoise import ArNoiseModel
from .experiment import DETECTORS, AttackSpec, Scenario
from .grid import MeasurementMatrix, MeterPlan, build_dc_jacobian, load_matrix, parse_case, synthetic_matrix


class ConfigError(ValueError):
    pass


_int = {"type": "integer"}
_num = {"type": "number"}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["system", "noise", "run"],
    "properties": {
        "system": {
            "type": "object",
            "additionalProperties": False,
            "required": ["source"],
            "properties": {
                "source": {"enum": ["case", "matrix", "synthetic"]},
                "path": {"type": "string"},
                "dims": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["m", "k"],
                    "properties": {
                        "m": {**_int, "minimum": 2},
                        "k": {**_int, "minimum": 1},
                        "seed": {**_int, "minimum": 0},
                    },
                },
            },
            "allOf": [
                {"if": {"properties": {"source": {"const": "synthetic"}}},
                 "then": {"required": ["dims"]}, "else": {"required": ["path"]}},
            ],
        },
        "state": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "values": {"oneOf": [{"const": "default"},
                                     {"type": "array", "items": _num, "minItems": 1}]},
                "perturbation_rho": {**_num, "minimum": 0},
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "required": ["sigma2"],
            "properties": {
                "order": {**_int, "minimum": 0},
                "coeffs": {"type": "array", "items": _num},
                "sigma2": {**_num, "exclusiveMinimum": 0},
                "burn_in": {**_int, "minimum": 0},
            },
        },
        "attack": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": list(attacks.KINDS)},
                "magnitude": _num,
                "d": {**_int, "minimum": 0},
                "sigma_y2": {**_num, "minimum": 0},
                "fixed": {"type": "boolean"},
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "required": ["trials"],
            "properties": {
                "n": {**_int, "minimum": 1},
                "trials": {**_int, "minimum": 1},
                "detectors": {"type": "array", "items": {"enum": list(DETECTORS)},
                              "minItems": 1, "uniqueItems": True},
                "master_seed": {**_int, "minimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"scores": {"type": "string"}},
        },
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    data: dict
    base_dir: Path

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def scores_path(self) -> Path | None:
        out = self.data.get("output", {}).get("scores")
        return None if out is None else self.resolve(out)


def _where(err: jsonschema.ValidationError) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def validate(data: Any) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise ConfigError(f"config error at {_where(err)}: {err.message}")
    noise = data["noise"]
    coeffs = noise.get("coeffs", [])
    if "order" in noise and noise["order"] != len(coeffs):
        raise ConfigError(
            f"config error at noise.order: order {noise['order']} does not match "
            f"{len(coeffs)} coefficient(s) in noise.coeffs")


def parse_config(text: str, base_dir: Path | str = ".") -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    validate(data)
    return ExperimentConfig(data, Path(base_dir))


def load_config(path: Path | str) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, path.parent)


def load_system(cfg: ExperimentConfig) -> MeasurementMatrix:
    sysc = cfg.data["system"]
    if sysc["source"] == "synthetic":
        d = sysc["dims"]
        return MeasurementMatrix.from_H(synthetic_matrix(d["m"], d["k"], d.get("seed", 0)))
    text = cfg.resolve(sysc["path"]).read_text()
    if sysc["source"] == "matrix":
        return load_matrix(text)
    case = parse_case(text)
    return build_dc_jacobian(case, MeterPlan.full(case))


def build_scenario(cfg: ExperimentConfig, seed: int | None = None) -> Scenario:
    """Materialize the scenario; file and model errors surface as exceptions."""
    d = cfg.data
    mm = load_system(cfg)
    state = d.get("state", {})
    values = state.get("values", "default")
    theta = None if values == "default" else values
    if theta is not None and len(theta) != mm.K:
        raise ConfigError(f"config error at state.values: expected {mm.K} values, got {len(theta)}")
    noise = d["noise"]
    model = ArNoiseModel(tuple(noise.get("coeffs", [])), noise["sigma2"])
    att = d.get("attack", {"kind": "none"})
    spec = AttackSpec(att["kind"], att.get("magnitude", 1.0), att.get("d", 0),
                      att.get("sigma_y2", 0.0), att.get("fixed", False))
    if spec.kind == attacks.SPARSE and spec.d > mm.M:
        raise ConfigError(f"config error at attack.d: {spec.d} exceeds the {mm.M} meters")
    run = d["run"]
    return Scenario(
        mm, model, n=run.get("n", 20), attack=spec, theta=theta,
        detectors=tuple(run.get("detectors", DETECTORS)), trials=run["trials"],
        master_seed=run.get("master_seed", 0) if seed is None else seed,
        rho=state.get("perturbation_rho", 0.0), burn_in=noise.get("burn_in", 0),
    )
