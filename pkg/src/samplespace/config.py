"""JSON schemas for experiment configs and input files.

:func:`validate_config` reports every schema violation at once, followed by
semantic errors (law/space mismatches, unordered sizes) when the structure is
sound.
"""
from __future__ import annotations

import json
from pathlib import Path

from jsonschema import Draft202012Validator

from .asymptotics import EXPERIMENTS, ExperimentConfig
from .errors import ConfigError, SampleSpaceError
from .samples import SCHEMA_VERSION

_POS_INT = {"type": "integer", "minimum": 1}
_POS_NUM = {"type": "number", "exclusiveMinimum": 0}

SPACE_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["euclidean", "sphere", "circle", "spider"]},
        "dim": _POS_INT,
        "num_legs": {"type": "integer", "minimum": 3},
    },
    "additionalProperties": False,
}

SOLVER_SCHEMA = {
    "type": "object",
    "properties": {
        "restarts": _POS_INT,
        "max_iterations": _POS_INT,
        "rel_tolerance": _POS_NUM,
        "merge_tolerance": _POS_NUM,
        "seed": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

EXPERIMENT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["experiment", "space", "law", "sizes", "replicates", "seed"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "experiment": {"enum": list(EXPERIMENTS)},
        "space": SPACE_SCHEMA,
        "law": {"type": "object", "required": ["kind"]},
        "p": {"type": "number", "minimum": 1},
        "q": _POS_INT,
        "sizes": {"type": "array", "items": _POS_INT, "minItems": 1},
        "replicates": _POS_INT,
        "seed": {"type": "integer", "minimum": 0},
        "solver": SOLVER_SCHEMA,
        "epsilons": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "reference_size": _POS_INT,
        "hessian_sample": _POS_INT,
        "probe_rays": _POS_INT,
        "component_tolerance": _POS_NUM,
        "target": {
            "type": "object",
            "required": ["atoms", "weights"],
            "properties": {"atoms": {"type": "array", "minItems": 1},
                           "weights": {"type": "array", "items": {"type": "number", "minimum": 0}}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

SAMPLE_SCHEMA = {
    "type": "object",
    "required": ["type", "space", "points"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "type": {"const": "sample"},
        "space": SPACE_SCHEMA,
        "points": {"type": "array", "minItems": 1},
    },
}

MEASURE_SCHEMA = {
    "type": "object",
    "required": ["type", "space", "atoms", "weights"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "type": {"const": "measure"},
        "space": SPACE_SCHEMA,
        "atoms": {"type": "array", "minItems": 1},
        "weights": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
    },
}


def _path(err) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def schema_errors(obj, schema) -> list[str]:
    """All violations of ``schema``, as ``"field/path: message"`` strings."""
    validator = Draft202012Validator(schema)
    errs = sorted(validator.iter_errors(obj), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    return [f"{_path(e)}: {e.message}" for e in errs]


def read_json(path) -> object:
    """Parse a JSON file; empty or malformed files raise :class:`ConfigError`."""
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        raise ConfigError(f"{path}: file is empty", errors=["<root>: file is empty"])
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})", errors=[f"<root>: invalid JSON ({exc})"]) from None


def validate_config(source) -> tuple[ExperimentConfig | None, list[str]]:
    """Check an experiment config given as a path or a parsed object.

    Returns ``(config, [])`` on success and ``(None, errors)`` otherwise.
    Unreadable files raise ``OSError``.
    """
    if isinstance(source, (str, Path)):
        try:
            obj = read_json(source)
        except ConfigError as exc:
            return None, exc.errors
    else:
        obj = source
    errors = schema_errors(obj, EXPERIMENT_SCHEMA)
    if errors:
        return None, errors
    try:
        return ExperimentConfig.from_json(obj), []
    except (SampleSpaceError, ValueError, TypeError) as exc:
        return None, [f"<config>: {exc}"]


def load_config(source) -> ExperimentConfig:
    cfg, errors = validate_config(source)
    if errors:
        raise ConfigError("invalid experiment config", errors=errors)
    return cfg
