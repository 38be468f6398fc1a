"""JSON schemas for command outputs (draft 2020-12)."""

SCHEMA_VERSION = 1

_number = {"type": "number"}

CHARACTER = {
    "type": "object",
    "required": ["d", "p_floor", "trees"],
    "properties": {
        "d": {"type": "integer", "minimum": 1},
        "p_floor": {"type": "integer", "minimum": 1, "maximum": 3},
        "trees": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["forest", "value"],
                "properties": {"forest": {"type": "string"}, "value": {"type": ["number", "string"]}},
            },
        },
    },
}

PATH = {
    "type": "object",
    "required": ["p", "d", "p_floor", "times", "values"],
    "properties": {
        "p": _number,
        "d": {"type": "integer"},
        "p_floor": {"type": "integer"},
        "times": {"type": "array", "items": _number},
        "values": {"type": "array", "items": CHARACTER},
    },
}

_versioned = {"schema_version": {"const": SCHEMA_VERSION}}

LIFT_REPORT = {
    "type": "object",
    "required": ["schema_version", "path"],
    "properties": {**_versioned, "path": PATH},
}

INTEGRATE_REPORT = {
    "type": "object",
    "required": ["schema_version", "interval", "Y", "y_tilde", "errors", "pvar_Y"],
    "properties": {
        **_versioned,
        "interval": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2},
        "Y": CHARACTER,
        "y_tilde": {"type": "object", "additionalProperties": _number},
        "errors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["scale", "remainder", "omega"],
                "properties": {"scale": _number, "remainder": _number, "omega": _number, "level1_remainder": _number},
            },
        },
        "pvar_Y": _number,
        "gap": _number,
    },
}

VERIFY_REPORT = {
    "type": "object",
    "required": ["schema_version", "suite", "passed", "checks"],
    "properties": {
        **_versioned,
        "suite": {"enum": ["algebra", "analysis", "pi"]},
        "passed": {"type": "boolean"},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "passed", "value", "threshold"],
                "properties": {"name": {"type": "string"}, "passed": {"type": "boolean"}},
            },
        },
    },
}

METRICS_REPORT = {
    "type": "object",
    "required": ["schema_version", "pvar_1", "pvar_2", "dp"],
    "properties": {**_versioned, "pvar_1": _number, "pvar_2": _number, "dp": _number},
}

GENERATORS = {
    "type": "object",
    "required": ["p_floor", "d", "generators"],
    "properties": {"p_floor": {"type": "integer"}, "d": {"type": "integer"}, "generators": {"type": "array", "items": {"type": "string"}}},
}
