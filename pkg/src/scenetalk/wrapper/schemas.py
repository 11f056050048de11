"""JSON schemas for structured model output, one per task type.

Schemas are embedded verbatim in prompts and enforced on every response;
anything that fails validation produces a warning and zero scene changes.
"""

import jsonschema

from ..animation import UNITS
from ..context import ALLOWED_PROPERTIES, CATEGORY_KINDS
from ..errors import SchemaViolation
from ..scene import PRIMITIVE_KINDS

_VEC3 = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 3,
    "maxItems": 3,
}

_COLOR = {
    "anyOf": [
        {"type": "string", "minLength": 1},
        {"type": "array", "items": {"type": "number"},
         "minItems": 3, "maxItems": 4},
    ]
}

_REF = {
    "anyOf": [
        {"type": "string", "minLength": 1},
        {
            "type": "object",
            "properties": {
                "name": {"type": "string"},
                "tag": {"type": "string"},
                "nearest_to": _VEC3,
                "kind": {"enum": list(PRIMITIVE_KINDS)},
            },
            "additionalProperties": False,
            "minProperties": 1,
        },
    ]
}

_ALL_PROPERTIES = sorted(set().union(*ALLOWED_PROPERTIES.values()))

DECOMPOSITION_SCHEMA = {
    "type": "object",
    "required": ["subtasks"],
    "additionalProperties": False,
    "properties": {
        "subtasks": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["task_type", "paraphrased_request", "categories"],
                "additionalProperties": False,
                "properties": {
                    "task_type": {
                        "enum": ["create", "animate", "fuse", "converse"]},
                    "paraphrased_request": {"type": "string"},
                    "categories": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["kind"],
                            "additionalProperties": False,
                            "properties": {
                                "kind": {"enum": list(CATEGORY_KINDS)},
                                "properties": {
                                    "type": "array",
                                    "items": {"enum": _ALL_PROPERTIES},
                                },
                            },
                        },
                    },
                },
            },
        },
    },
}

CREATE_SCHEMA = {
    "type": "object",
    "required": ["objects"],
    "additionalProperties": False,
    "properties": {
        "objects": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "prefab": {"type": "string"},
                    "primitive": {"enum": list(PRIMITIVE_KINDS)},
                    "position": _VEC3,
                    "orientation": _VEC3,
                    "scale": {
                        "anyOf": [
                            {"type": "number", "exclusiveMinimum": 0},
                            _VEC3,
                        ]
                    },
                    "color": _COLOR,
                    "parent": {"type": "string"},
                    "physics": {"type": "boolean"},
                    "grabbable": {"type": "boolean"},
                    "frame": {"enum": ["world", "local"]},
                },
            },
        },
    },
}

ANIMATE_SCHEMA = {
    "type": "object",
    "required": ["animations"],
    "additionalProperties": False,
    "properties": {
        "animations": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "unit"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "unit": {"enum": list(UNITS)},
                    "subject": _REF,
                    "target": True,  # unit-dependent, checked by the parser
                    "speed": {"type": "number"},
                    "duration": {"type": "number", "exclusiveMinimum": 0},
                    "frame": {"enum": ["world", "local"]},
                    "sequence_group": {"type": "string", "minLength": 1},
                    "axis": {
                        "anyOf": [{"enum": ["x", "y", "z"]}, _VEC3]},
                    "degrees": {"type": "number"},
                    "agent": _REF,
                    "item": _REF,
                    "destination": {"anyOf": [_VEC3, _REF]},
                },
            },
        },
    },
}

FUSE_SCHEMA = {
    "type": "object",
    "required": ["actions"],
    "additionalProperties": False,
    "properties": {
        "actions": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["block", "object"],
                "additionalProperties": False,
                "properties": {
                    "block": {"enum": ["grabbable", "hand_follow"]},
                    "object": _REF,
                    "hand": {"enum": ["left", "right"]},
                    "offset": _VEC3,
                },
            },
        },
    },
}

CONVERSE_SCHEMA = {
    "type": "object",
    "required": ["text"],
    "additionalProperties": False,
    "properties": {"text": {"type": "string"}},
}

TASK_SCHEMAS = {
    "create": CREATE_SCHEMA,
    "animate": ANIMATE_SCHEMA,
    "fuse": FUSE_SCHEMA,
    "converse": CONVERSE_SCHEMA,
}

_VALIDATORS = {
    name: jsonschema.Draft202012Validator(schema)
    for name, schema in {**TASK_SCHEMAS, "decomposition":
                         DECOMPOSITION_SCHEMA}.items()
}


def validate(payload, schema_name: str) -> None:
    """Raise SchemaViolation (with a JSON path) when payload doesn't conform."""
    validator = _VALIDATORS[schema_name]
    error = jsonschema.exceptions.best_match(validator.iter_errors(payload))
    if error is not None:
        raise SchemaViolation(error.message, error.json_path)
