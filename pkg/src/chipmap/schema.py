"""JSON Schemas for the interchange documents.

Schema validation catches shape errors with good messages before the
parsers apply the semantic rules (ranges, adjacency, disjointness).
Documents carry ``schema_version`` 1; the field is optional on input so
hand-written files stay terse.
"""

from __future__ import annotations

import jsonschema

from .errors import ValidationError

SCHEMA_VERSION = 1

_site = {
    "type": "object",
    "properties": {
        "chip": {"type": "integer", "minimum": 0},
        "x": {"type": "integer", "minimum": 0},
        "y": {"type": "integer", "minimum": 0},
    },
    "required": ["chip", "x", "y"],
    "additionalProperties": False,
}

_int_pair = {
    "type": "array",
    "items": {"type": "integer"},
    "minItems": 2,
    "maxItems": 2,
}

CIRCUIT_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "circuit",
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "n_qubits": {"type": "integer", "minimum": 0},
        "gates": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "op": {"type": "string", "minLength": 1},
                    "qubits": {
                        "type": "array",
                        "items": {"type": "integer", "minimum": 0},
                        "minItems": 1,
                    },
                    "tag": {"type": "string"},
                },
                "required": ["op", "qubits"],
                "additionalProperties": False,
            },
        },
        "partitions": {
            "type": "object",
            "patternProperties": {r"^\d+$": {"type": "integer", "minimum": 0}},
            "additionalProperties": False,
        },
        "partition_geometry": {
            "type": "object",
            "patternProperties": {
                r"^\d+$": {
                    "type": "object",
                    "properties": {
                        "width": {"type": "integer", "minimum": 1},
                        "height": {"type": "integer", "minimum": 1},
                        "locals": {
                            "type": "object",
                            "patternProperties": {r"^\d+$": _int_pair},
                            "additionalProperties": False,
                        },
                    },
                    "required": ["width", "height"],
                    "additionalProperties": False,
                }
            },
            "additionalProperties": False,
        },
        "layout_hints": {
            "type": "object",
            "patternProperties": {
                r"^\d+$": {
                    "type": "object",
                    "properties": {
                        "dir": {"enum": ["below", "right"]},
                        "ref": {"type": "integer", "minimum": 0},
                    },
                    "required": ["dir", "ref"],
                    "additionalProperties": False,
                }
            },
            "additionalProperties": False,
        },
    },
    "required": ["n_qubits", "gates"],
    "additionalProperties": False,
}

BACKEND_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "backend",
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "grid": _int_pair,
        "chiplet": _int_pair,
        "links": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "a": _site,
                    "b": _site,
                    "eps": {"type": "number", "minimum": 0},
                },
                "required": ["a", "b", "eps"],
                "additionalProperties": False,
            },
        },
        "defects": {"type": "array", "items": _site},
        "auto_links": {
            "type": "object",
            "properties": {
                "per_edge": {"type": "integer", "minimum": 1},
                "eps": {
                    "anyOf": [
                        {"type": "number", "minimum": 0},
                        {
                            "type": "object",
                            "properties": {
                                "base": {"type": "number", "minimum": 0},
                                "scale_range": {
                                    "type": "array",
                                    "items": {"type": "number"},
                                    "minItems": 2,
                                    "maxItems": 2,
                                },
                                "seed": {"type": "integer"},
                            },
                            "required": ["base"],
                            "additionalProperties": False,
                        },
                    ]
                },
            },
            "required": ["per_edge"],
            "additionalProperties": False,
        },
        "allow_non_pow2": {"type": "boolean"},
    },
    "required": ["grid", "chiplet"],
    "additionalProperties": False,
}

COMPILED_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "compiled-circuit",
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "n_physical": {"type": "integer", "minimum": 0},
        "gates": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "op": {"type": "string", "minLength": 1},
                    "qubits": {
                        "type": "array",
                        "items": {"type": "integer", "minimum": 0},
                        "minItems": 1,
                    },
                    "tag": {"type": "string"},
                },
                "required": ["op", "qubits"],
                "additionalProperties": False,
            },
        },
        "mapping": {
            "type": "object",
            "patternProperties": {r"^\d+$": _site},
            "additionalProperties": False,
        },
        "placements": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "pid": {"type": "integer", "minimum": 0},
                    "chip": {"type": "integer", "minimum": 0},
                    "x": {"type": "integer", "minimum": 0},
                    "y": {"type": "integer", "minimum": 0},
                    "w": {"type": "integer", "minimum": 1},
                    "h": {"type": "integer", "minimum": 1},
                },
                "required": ["pid", "chip", "x", "y", "w", "h"],
                "additionalProperties": False,
            },
        },
        "link_usage": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "a": {"type": "integer", "minimum": 0},
                    "b": {"type": "integer", "minimum": 0},
                    "count": {"type": "integer", "minimum": 0},
                },
                "required": ["a", "b", "count"],
                "additionalProperties": False,
            },
        },
        "link_traversals": {"$ref": "#/properties/link_usage"},
        "stats": {"type": "object"},
        "timings": {"type": "object"},
    },
    "required": ["schema_version", "n_physical", "gates", "mapping"],
    "additionalProperties": False,
}


def _validate(obj: object, schema: dict, what: str) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(obj), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        where = "/".join(str(p) for p in first.absolute_path) or "(top level)"
        raise ValidationError(f"{what} document invalid at {where}: {first.message}")


def validate_circuit_doc(obj: object) -> None:
    _validate(obj, CIRCUIT_SCHEMA, "circuit")


def validate_backend_doc(obj: object) -> None:
    _validate(obj, BACKEND_SCHEMA, "backend")


def validate_compiled_doc(obj: object) -> None:
    _validate(obj, COMPILED_SCHEMA, "compiled circuit")
