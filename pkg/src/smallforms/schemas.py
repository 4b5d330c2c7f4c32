"""JSON schemas (draft 2020-12) of every CLI output document."""

NUMBER = {"type": ["number", "string"]}  # exact values are "p/q" strings
NUMBERS = {"type": "array", "items": NUMBER}
INTS = {"type": "array", "items": {"type": "integer"}}
WINDOW = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2, "maxItems": 2}

PSI = {
    "type": "object",
    "required": ["family"],
    "properties": {"family": {"enum": ["powerlog", "table", "percoord"]}},
}

SPEC = {
    "type": "object",
    "required": ["m", "n", "variant", "psi"],
    "properties": {
        "m": {"type": "integer", "minimum": 1},
        "n": {"type": "integer", "minimum": 1},
        "variant": {"enum": ["absolute", "classical"]},
        "psi": PSI,
    },
}

SOLUTION = {
    "type": "object",
    "required": ["q", "height", "form_values", "bounds", "margin"],
    "properties": {
        "q": INTS,
        "height": {"type": "integer", "minimum": 1},
        "form_values": NUMBERS,
        "bounds": NUMBERS,
        "margin": NUMBER,
    },
}

ENUMERATE = {
    "type": "object",
    "required": ["spec", "window", "count", "shell_counts", "solutions", "uncertain", "inclusive"],
    "properties": {
        "spec": SPEC,
        "window": WINDOW,
        "inclusive": {"type": "boolean"},
        "count": {"type": "integer", "minimum": 0},
        "vectors_scanned": {"type": "integer", "minimum": 0},
        "shell_counts": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["r", "count"],
                "properties": {"r": {"type": "integer"}, "count": {"type": "integer", "minimum": 0}},
            },
        },
        "uncertain": {"type": "array", "items": INTS},
        "solutions": {"type": "array", "items": SOLUTION},
    },
}

CLASSIFY = {
    "type": "object",
    "required": ["kind", "m", "n", "classification", "power_exponent", "log_exponent", "hypotheses", "partial_sums"],
    "properties": {
        "kind": {"type": "string"},
        "classification": {"enum": ["Convergent", "Divergent", "Boundary", "Unknown"]},
        "power_exponent": {"type": ["number", "null"]},
        "log_exponent": {"type": ["number", "null"]},
        "hypotheses": {"type": "object", "additionalProperties": {"type": "boolean"}},
        "hypotheses_hold": {"type": "boolean"},
        "partial_sums": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["cutoff", "sum"],
                "properties": {"cutoff": {"type": "integer"}, "sum": {"type": "number"}},
            },
        },
    },
}

CRITICAL = {
    "type": "object",
    "required": ["kind", "m", "n", "tau", "s_star", "s_star_exact", "ambient", "within_ambient"],
    "properties": {
        "s_star": {"type": "number"},
        "s_star_exact": {"type": "string"},
        "ambient": {"type": "integer"},
        "within_ambient": {"type": "boolean"},
    },
}

REDUCE = {
    "type": "object",
    "required": ["m", "n", "epsilon", "N", "det", "X", "X_top", "X_bottom", "X_hat"],
    "properties": {
        "X": {"type": "array", "items": NUMBERS},
        "X_top": {"type": "array", "items": NUMBERS},
        "X_bottom": {"type": "array", "items": NUMBERS},
        "X_hat": {"type": "array", "items": NUMBERS},
        "det": NUMBER,
    },
}

CERTIFICATE = {
    "type": "object",
    "required": ["type", "version", "X", "epsilon", "N", "psi", "r", "p", "q", "form_values", "bounds"],
    "properties": {
        "type": {"const": "lift-certificate"},
        "version": {"const": 1},
        "X": {"type": "array", "items": NUMBERS},
        "psi": PSI,
        "r": INTS,
        "p": INTS,
        "q": INTS,
        "residuals": NUMBERS,
        "eq_one_bounds": NUMBERS,
        "form_values": NUMBERS,
        "bounds": NUMBERS,
        "triangle_bound_holds": {"type": "boolean"},
        "holds_at_q_height": {"type": ["boolean", "null"]},
    },
}

LIFT = {
    "type": "object",
    "required": ["count", "certificates"],
    "properties": {
        "count": {"type": "integer", "minimum": 0},
        "certificates": {"type": "array", "items": CERTIFICATE},
    },
}

VERIFY_CERT = {
    "type": "object",
    "required": ["ok", "results"],
    "properties": {
        "ok": {"type": "boolean"},
        "results": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["ok", "failures"],
                "properties": {"ok": {"type": "boolean"}, "failures": {"type": "array", "items": {"type": "string"}}},
            },
        },
    },
}

HIT_FRACTION = {
    "type": "object",
    "required": ["window", "hits", "samples", "fraction", "ci_low", "ci_high", "mean_solutions", "first_moment_bound"],
    "properties": {
        "window": WINDOW,
        "hits": {"type": "integer", "minimum": 0},
        "samples": {"type": "integer", "minimum": 1},
        "fraction": {"type": "number", "minimum": 0, "maximum": 1},
        "ci_low": {"type": "number", "minimum": 0, "maximum": 1},
        "ci_high": {"type": "number", "minimum": 0, "maximum": 1},
        "mean_solutions": {"type": "number", "minimum": 0},
        "first_moment_bound": {"type": "number", "minimum": 0},
    },
}

RUN_RECORD = {
    "type": "object",
    "required": ["schema_version", "engine_version", "plan", "results", "predicted", "agreement", "statement", "wall_time"],
    "properties": {
        "schema_version": {"const": 1},
        "engine_version": {"type": "string"},
        "plan": {
            "type": "object",
            "required": ["spec", "seed", "sampler", "windows", "samples", "mode"],
            "properties": {
                "spec": SPEC,
                "seed": {"type": "integer", "minimum": 0},
                "windows": {"type": "array", "items": WINDOW},
                "samples": {"type": "integer", "minimum": 1},
                "mode": {"enum": ["MeasureTrend", "DimensionBoxCount"]},
            },
        },
        "results": {"type": "array", "items": HIT_FRACTION},
        "predicted": {"enum": ["Convergent", "Divergent", "Boundary", "Unknown"]},
        "agreement": {"enum": ["consistent", "inconsistent", "not-applicable"]},
        "statement": {"type": "string"},
        "wall_time": {"type": "number", "minimum": 0},
    },
}

BOX_DIM = {
    "type": "object",
    "required": ["m", "n", "tau", "target", "slope", "intercept", "error", "rows"],
    "properties": {
        "slope": {"type": "number"},
        "target": {"type": "number"},
        "rows": {
            "type": "array",
            "minItems": 3,
            "items": {
                "type": "object",
                "required": ["delta", "q_min", "q_max", "box_count", "residual"],
                "properties": {"box_count": {"type": "integer", "minimum": 0}},
            },
        },
    },
}

REGIME = {
    "type": "object",
    "required": ["m", "n", "variant", "regime"],
    "properties": {
        "regime": {"enum": ["Singleton", "Excluded", "Hypersurface", "Generic", "Uncovered", "Classical"]},
    },
}

ERROR = {
    "type": "object",
    "required": ["error", "message"],
    "properties": {"error": {"type": "string"}, "message": {"type": "string"}},
}

BY_COMMAND = {
    "enumerate": ENUMERATE,
    "classify": CLASSIFY,
    "critical": CRITICAL,
    "reduce": REDUCE,
    "lift": LIFT,
    "verify-cert": VERIFY_CERT,
    "verify-law": RUN_RECORD,
    "box-dim": BOX_DIM,
    "regime": REGIME,
}
