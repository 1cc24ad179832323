"""JSON run configuration: strict schema, parsing into library objects."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Union

import jsonschema

from .core import N_MOMENTS, VARIABLES, ConstantZ, LinearZ, MomentState, Params
from .dynamics import IntegratorConfig
from .stationary import SaturationMode, saturate

_POS = {"type": "number", "exclusiveMinimum": 0}
_NUM = {"type": "number"}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["particle", "trap", "field", "hbar"],
    "properties": {
        "particle": {
            "type": "object",
            "additionalProperties": False,
            "required": ["mass", "charge"],
            "properties": {"mass": _POS, "charge": _NUM},
        },
        "trap": {
            "type": "object",
            "additionalProperties": False,
            "required": ["omega"],
            "properties": {"omega": {"type": "number", "minimum": 0}},
        },
        "field": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "mu"],
                    "properties": {"type": {"const": "linear_z"}, "mu": _NUM},
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "b0"],
                    "properties": {"type": {"const": "constant_z"}, "b0": _NUM},
                },
            ]
        },
        "hbar": _POS,
        "initial_state": {
            "type": "object",
            "additionalProperties": False,
            "required": ["mean", "moments"],
            "properties": {
                "mean": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": list(VARIABLES),
                    "properties": {v: _NUM for v in VARIABLES},
                },
                "moments": {
                    "oneOf": [
                        {"enum": ["saturated", "zero"]},
                        {"type": "array", "items": _NUM,
                         "minItems": N_MOMENTS, "maxItems": N_MOMENTS},
                    ]
                },
                "transverse": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["dx2", "dy2", "dxy"],
                    "properties": {"dx2": {"type": "number", "minimum": 0},
                                   "dy2": {"type": "number", "minimum": 0},
                                   "dxy": _NUM},
                },
            },
        },
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "required": ["t_end"],
            "properties": {
                "method": {"enum": ["rk4_fixed", "rk45_adaptive"]},
                "dt": _POS,
                "rel_tol": _POS,
                "abs_tol": _POS,
                "dt_min": _POS,
                "dt_max": _POS,
                "t_end": {"type": "number", "minimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "format": {"enum": ["csv", "json"]},
                "path": {"type": "string"},
                "stride": {"type": "integer", "minimum": 1},
            },
        },
    },
}


class ConfigError(Exception):
    """Invalid configuration; the message carries the source line when known."""


@dataclass(frozen=True)
class RunConfig:
    params: Params
    mean: Optional[tuple] = None
    moments: Union[str, tuple, None] = None
    transverse: Optional[tuple] = None
    integrator: Optional[IntegratorConfig] = None
    output_format: str = "csv"
    output_path: Optional[str] = None
    stride: int = 1

    def initial_state(self) -> MomentState:
        """Initial state; ``"saturated"`` uses the corrected-mode stationary solution."""
        if self.mean is None:
            raise ConfigError("config has no initial_state section")
        if self.moments == "saturated":
            return saturate(self.mean, self.params, SaturationMode.CORRECTED, self.transverse)
        if self.moments == "zero":
            return MomentState.classical(self.mean)
        try:
            return MomentState(self.mean, self.moments)
        except ValueError as exc:
            raise ConfigError(f"initial_state.moments: {exc}") from None


def _line_of(text: str, path) -> Optional[int]:
    """Best-effort 1-based line of the JSON element at ``path``."""
    pos = 0
    found = None
    for key in path:
        if isinstance(key, int):
            continue
        idx = text.find(json.dumps(key), pos)
        if idx < 0:
            break
        pos = idx
        found = idx
    if found is None:
        return None
    return text.count("\n", 0, found) + 1


def _describe(err: jsonschema.ValidationError) -> tuple[str, list]:
    # Prefer the most specific branch of a oneOf failure.
    best = jsonschema.exceptions.best_match([err] + list(err.context or []))
    where = "/".join(str(p) for p in best.absolute_path) or "<root>"
    return f"{where}: {best.message}", list(best.absolute_path)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None

    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        msg, path = _describe(errors[0])
        # unknown keys are reported against the offending key, not the parent
        if errors[0].validator == "additionalProperties":
            extra = [k for k in errors[0].instance if k not in errors[0].schema.get("properties", {})]
            path = path + extra[:1]
        line = _line_of(text, path)
        loc = f"{source}:{line}" if line else source
        raise ConfigError(f"{loc}: {msg}")

    f = doc["field"]
    field = LinearZ(float(f["mu"])) if f["type"] == "linear_z" else ConstantZ(float(f["b0"]))
    try:
        params = Params(
            mass=float(doc["particle"]["mass"]),
            charge=float(doc["particle"]["charge"]),
            omega=float(doc["trap"]["omega"]),
            hbar=float(doc["hbar"]),
            field=field,
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None

    kwargs = {}
    init = doc.get("initial_state")
    if init is not None:
        kwargs["mean"] = tuple(float(init["mean"][v]) for v in VARIABLES)
        mom = init["moments"]
        kwargs["moments"] = mom if isinstance(mom, str) else tuple(float(v) for v in mom)
        if "transverse" in init:
            t = init["transverse"]
            kwargs["transverse"] = (float(t["dx2"]), float(t["dy2"]), float(t["dxy"]))

    integ = doc.get("integrator")
    if integ is not None:
        try:
            kwargs["integrator"] = IntegratorConfig(**{k: (v if k == "method" else float(v))
                                                       for k, v in integ.items()})
        except ValueError as exc:
            line = _line_of(text, ["integrator"])
            raise ConfigError(f"{source}:{line}: integrator: {exc}") from None

    out = doc.get("output", {})
    kwargs["output_format"] = out.get("format", "csv")
    kwargs["output_path"] = out.get("path")
    kwargs["stride"] = int(out.get("stride", 1))
    return RunConfig(params=params, **kwargs)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    return parse_config(text, source=path)
