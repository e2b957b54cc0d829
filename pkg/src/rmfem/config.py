"""JSON run configuration: schema, validation with line/field diagnostics, presets.

This module only depends on the standard library and jsonschema so the CLI
can read a config (and set thread limits) before numpy is imported.
"""
from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import ConfigError

MATERIAL_KEYS = ("lambda_micro", "mu_micro", "lambda_e", "mu_e", "mu_c", "mu", "Lc", "L_scale")

_NUMBER = {"type": "number"}
_MATERIAL = {
    "type": "object",
    "additionalProperties": False,
    "required": ["lambda_micro", "mu_micro", "lambda_e", "mu_e"],
    "properties": {k: _NUMBER for k in MATERIAL_KEYS},
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "bvp": {"enum": ["rect-bimaterial", "annulus-shear"]},
        "case": {"enum": ["A", "B"]},
        "pairing": {"type": "string"},
        "pairings": {"type": ["array", "null"], "items": {"type": "string"}, "minItems": 1},
        "level": {"type": "integer", "minimum": 0},
        "levels": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "lc": {"type": ["number", "null"], "minimum": 0},
        "lc_values": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "identical_materials": {"type": "boolean"},
        "materials": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "patternProperties": {"^[0-9]+$": _MATERIAL},
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["direct-factorization", "conjugate-gradient"]},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "quadrature_degree": {"type": ["integer", "null"], "minimum": 1, "maximum": 8},
        "n_samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "out_dir": {"type": ["string", "null"]},
        "write_vtk": {"type": "boolean"},
    },
}

DEFAULTS = {
    "bvp": "rect-bimaterial",
    "case": "A",
    "pairing": "T2NT2",
    "pairings": None,
    "level": 0,
    "levels": [0, 1, 2],
    "lc": None,
    "lc_values": [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3],
    "identical_materials": False,
    "materials": None,
    "solver": {"method": "direct-factorization", "tolerance": 1e-10},
    "quadrature_degree": None,
    "n_samples": 201,
    "seed": 0,
    "out_dir": None,
    "write_vtk": True,
}


@dataclass(frozen=True)
class RunConfig:
    """A validated config with every default filled in."""

    data: dict

    def __getitem__(self, key):
        return self.data[key]

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def study_spec(self, **overrides):
        """The corresponding :class:`rmfem.studies.StudySpec` (imports numpy)."""
        from .studies import StudySpec

        d = self.data
        kw = dict(
            bvp=d["bvp"],
            pairing=d["pairing"],
            level=d["level"],
            case=d["case"],
            lc=d["lc"],
            lc_values=tuple(d["lc_values"]),
            out_dir=d["out_dir"],
            identical_materials=d["identical_materials"],
            solver=d["solver"]["method"],
            tolerance=d["solver"]["tolerance"],
            quadrature_degree=d["quadrature_degree"],
            n_samples=d["n_samples"],
            materials=copy.deepcopy(d["materials"]),
            seed=d["seed"],
        )
        kw.update(overrides)
        return StudySpec(**kw)


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"' + re.escape(str(key)) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _describe(error: jsonschema.ValidationError, text: str) -> str:
    path = list(error.absolute_path)
    key = path[-1] if path else None
    if error.validator == "additionalProperties" and isinstance(error.instance, dict):
        allowed = set(error.schema.get("properties", {}))
        pattern = error.schema.get("patternProperties", {})
        extra = [k for k in error.instance if k not in allowed and not any(re.search(p, k) for p in pattern)]
        if extra:
            key = extra[0]
            field = ".".join(str(p) for p in [*path, key])
            line = _line_of(text, key) if text else None
            where = f"line {line}, " if line else ""
            return f"{where}field '{field}': unknown key (allowed: {sorted(allowed) or sorted(pattern)})"
    field = ".".join(str(p) for p in path) or "<root>"
    line = _line_of(text, key) if (text and key is not None and not isinstance(key, int)) else None
    where = f"line {line}, " if line else ""
    return f"{where}field '{field}': {error.message}"


def validate(raw: dict, text: str = "") -> RunConfig:
    """Schema-check ``raw`` and fill defaults; raises ConfigError with diagnostics."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise ConfigError("invalid config:\n  " + "\n  ".join(_describe(e, text) for e in errors))
    data = copy.deepcopy(DEFAULTS)
    for key, value in raw.items():
        if key == "solver":
            data["solver"] = {**DEFAULTS["solver"], **value}
        else:
            data[key] = copy.deepcopy(value)
    return RunConfig(data)


def loads(text: str) -> RunConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return validate(raw, text)


def preset_names() -> list[str]:
    root = resources.files("rmfem") / "presets"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def preset_text(name: str) -> str:
    if not name.endswith(".json"):
        name += ".json"
    if name not in preset_names():
        raise ConfigError(f"unknown preset {name!r}; available: {preset_names()}")
    return (resources.files("rmfem") / "presets" / name).read_text()


def load(path) -> RunConfig:
    """Read a config file; a bare name that is not a file selects a bundled preset."""
    p = Path(path)
    if p.is_file():
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from exc
    elif p.parent == Path(".") and (p.name in preset_names() or p.name + ".json" in preset_names()):
        text = preset_text(p.name)
    else:
        raise ConfigError(f"config file {p} not found (bundled presets: {preset_names()})")
    return loads(text)
