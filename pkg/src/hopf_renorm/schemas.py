"""JSON schemas for everything the command line emits."""
from __future__ import annotations

import jsonschema

_complex = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

LAURENT = {
    "type": "object",
    "required": ["lowest", "coeffs"],
    "properties": {
        "lowest": {"type": "integer"},
        "order": {"type": "integer"},
        "coeffs": {"type": "array", "items": _complex},
    },
}

GRAPH = {
    "type": "object",
    "required": ["vertices", "edges"],
    "properties": {
        "vertices": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind"],
                "properties": {
                    "id": {"type": "integer"},
                    "kind": {"enum": ["internal", "external"]},
                    "ext_index": {"type": "integer", "minimum": 1},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        },
    },
}

GRAPHS_OUTPUT = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["label", "generator", "loops", "automorphisms", "graph"],
        "properties": {
            "label": {"type": "string"},
            "generator": {"type": "string"},
            "loops": {"type": "integer", "minimum": 0},
            "automorphisms": {"type": "integer", "minimum": 1},
            "graph": GRAPH,
        },
    },
}

TENSOR = {
    "type": "object",
    "required": ["terms"],
    "properties": {
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["factors", "coeff"],
                "properties": {
                    "factors": {"type": "array", "items": {"type": "array", "items": {"type": "string"}}},
                    "coeff": {"type": "string"},
                },
            },
        }
    },
}

HOPF_OUTPUT = {
    "type": "object",
    "required": ["op", "rendered", "names"],
    "properties": {
        "op": {"enum": ["coproduct", "antipode"]},
        "rendered": {"type": "string"},
        "names": {"type": "object", "additionalProperties": {"type": "string"}},
        "tensor": TENSOR,
        "polynomial": TENSOR,
    },
}

BACKEND = {
    "type": "object",
    "required": ["kind", "mass", "cutoff"],
    "properties": {
        "kind": {"enum": ["torus", "circle"]},
        "dim": {"type": "integer", "minimum": 1},
        "periods": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "mass": {"type": "number", "minimum": 0},
        "cutoff": {"type": "integer", "minimum": 1},
    },
}

BPHZ_OUTPUT = {
    "type": "object",
    "required": ["backend", "graphs"],
    "properties": {
        "backend": BACKEND,
        "graphs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "name", "loops", "gamma", "minus", "plus", "renormalized"],
                "properties": {
                    "label": {"type": "string"},
                    "name": {"type": "string"},
                    "loops": {"type": "integer"},
                    "gamma": LAURENT,
                    "minus": LAURENT,
                    "plus": LAURENT,
                    "renormalized": _complex,
                    "tolerance": {"type": "number"},
                },
            },
        },
    },
}

BETA_OUTPUT = {
    "type": "object",
    "required": ["rows", "locality"],
    "properties": {
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "name", "loops", "residue", "beta", "locality_deviation"],
                "properties": {
                    "label": {"type": "string"},
                    "name": {"type": "string"},
                    "loops": {"type": "integer"},
                    "residue": _complex,
                    "beta": _complex,
                    "locality_deviation": {"type": "number"},
                },
            },
        },
        "locality": {
            "type": "object",
            "required": ["passed", "tolerance", "deviations"],
        },
    },
}

LITERATURE_OUTPUT = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["tag", "theory", "beta", "kind"],
        "properties": {k: {"type": "string"} for k in ("tag", "theory", "beta", "kind")},
    },
}

CONFORMAL_OUTPUT = {
    "type": "object",
    "required": ["n", "grid", "z", "mass", "constant_f", "deviation"],
    "properties": {
        "n": {"type": "integer"},
        "grid": {"type": "integer"},
        "z": _complex,
        "mass": {"type": "number"},
        "constant_f": {"type": "boolean"},
        "deviation": {"type": "number", "minimum": 0},
        "yamabe": {"type": "object"},
    },
}

CHARACTER_FILE = {
    "type": "object",
    "required": ["generators"],
    "properties": {
        "order": {"type": "integer", "minimum": 0},
        "generators": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["graph", "series"],
                "properties": {"name": {"type": "string"}, "graph": GRAPH, "series": LAURENT},
            },
        },
    },
}

ERROR_OUTPUT = {
    "type": "object",
    "required": ["error", "message"],
    "properties": {"error": {"type": "string"}, "message": {"type": "string"}},
}


def validate(instance, schema) -> None:
    jsonschema.validate(instance, schema)
