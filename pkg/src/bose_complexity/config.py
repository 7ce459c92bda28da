"""Strict JSON configuration for the experiment driver."""

from __future__ import annotations

import copy
import json
import math
from pathlib import Path

import jsonschema

EXPERIMENTS = (
    "hhkl_vs_exact",
    "truncation_check",
    "phase_grid",
    "transfer",
    "column_synthesis",
    "gates",
    "haar_stats",
)
EASINESS_EXPERIMENTS = ("hhkl_vs_exact", "truncation_check")


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _obj(properties: dict, required=()) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": properties, "required": list(required)}


_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_ALPHA = {"oneOf": [{"type": "number", "minimum": 0}, {"const": "inf"}]}
_RANGE = _obj({"min": _NUM, "max": _NUM, "points": {"type": "integer", "minimum": 1}}, ["min", "max", "points"])
_ALPHA_RANGE = _obj(
    {
        "min": {"type": "number", "minimum": 0},
        "max": _ALPHA,
        "points": {"type": "integer", "minimum": 1},
        "spacing": {"enum": ["linear", "inverse_sqrt"]},
    },
    ["min", "max", "points"],
)
_AMPLITUDE = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}]}

SCHEMA = _obj(
    {
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "output": {"type": "string", "minLength": 1},
        "lattice": _obj(
            {
                "dimension": {"type": "integer", "minimum": 1},
                "shape": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "metric": {"enum": ["euclidean", "chebyshev"]},
            },
            ["shape"],
        ),
        "clusters": _obj(
            {
                "count": {"type": "integer", "minimum": 1},
                "width": {"type": "integer", "minimum": 1},
                "positions": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
            },
            ["width", "positions"],
        ),
        "hamiltonian": _obj(
            {
                "alpha": _ALPHA,
                "V": {"type": "number", "minimum": 0},
                "J_scale": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "couplings": {"enum": ["power_law", "random"]},
            },
            ["alpha"],
        ),
        "evolution": _obj({"t_max": _POS, "steps": {"type": "integer", "minimum": 2}}, ["t_max", "steps"]),
        "hhkl": _obj(
            {
                "t1": _POS,
                "ell": {"oneOf": [{"const": "auto"}, {"type": "integer", "minimum": 1}]},
                "velocity": {"oneOf": [{"const": "auto"}, _POS]},
                "beta": {"type": "number", "minimum": 1},
            }
        ),
        "truncation": _obj(
            {"draws": {"type": "integer", "minimum": 0}, "eps": {"enum": ["bound", "measured"]}}
        ),
        "phase": _obj(
            {
                "D": {"type": "integer", "minimum": 1},
                "beta": {"type": "number", "minimum": 1},
                "V_regime": {"enum": ["vanishing", "constant", "polynomial", "hardcore"]},
                "alpha": _ALPHA_RANGE,
                "gamma": _RANGE,
                "delta": _POS,
                "n": {"type": "number", "exclusiveMinimum": 1},
            },
            ["D", "beta", "V_regime", "alpha", "gamma"],
        ),
        "transfer": _obj(
            {
                "protocol": {"enum": ["single_shot", "state_transfer"]},
                "source": {"type": "integer", "minimum": 0},
                "target": {"type": "integer", "minimum": 0},
                "amplitudes": {"type": "array", "items": _AMPLITUDE, "minItems": 1},
                "gamma_source": _AMPLITUDE,
                "ancillas": {"oneOf": [{"const": "all"}, {"type": "array", "items": {"type": "integer", "minimum": 0}}]},
                "optimize_couplings": {"type": "boolean"},
            },
            ["protocol", "source"],
        ),
        "column": _obj(
            {
                "m": {"type": "integer", "minimum": 3},
                "trials": {"type": "integer", "minimum": 1},
                "columns": {"type": "integer", "minimum": 1},
                "c": _POS,
                "alpha": _ALPHA,
                "optimize_couplings": {"type": "boolean"},
            },
            ["m", "trials"],
        ),
        "gates": _obj(
            {
                "V_values": {"type": "array", "items": _POS, "minItems": 1},
                "scaling_V": {"type": "array", "items": _POS, "minItems": 1},
                "scaling_time_points": {"type": "integer", "minimum": 2},
                "mu_check": _obj({"J": _POS, "V": {"type": "number", "minimum": 0}, "t_max": _POS, "points": {"type": "integer", "minimum": 2}}),
                "hardcore_alpha": _ALPHA,
            }
        ),
        "haar": _obj(
            {
                "m_values": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "x_values": {"type": "array", "items": {"enum": ["2/m", "4lnm/m"]}, "minItems": 1},
                "samples": {"type": "integer", "minimum": 1},
            },
            ["m_values"],
        ),
        "sweep": _obj(
            {"param": {"type": "string", "minLength": 1}, "values": {"type": "array", "minItems": 1}},
            ["param", "values"],
        ),
    },
    ["experiment", "seed"],
)

_REQUIRED_FRAGMENTS = {
    "hhkl_vs_exact": ("lattice", "clusters", "hamiltonian", "evolution"),
    "truncation_check": ("lattice", "clusters", "hamiltonian", "evolution"),
    "phase_grid": ("phase",),
    "transfer": ("lattice", "hamiltonian", "transfer"),
    "column_synthesis": ("column",),
    "gates": (),
    "haar_stats": ("haar",),
}


def _path(error: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in error.absolute_path]
    if error.validator == "additionalProperties":
        extra = sorted(set(error.instance) - set(error.schema.get("properties", {})))
        parts += extra[:1]
    if error.validator == "required":
        missing = [r for r in error.validator_value if r not in error.instance]
        parts += missing[:1]
    return ".".join(parts) or "<root>"


def parse_alpha(value) -> float:
    return math.inf if value == "inf" else float(value)


def validate(config: dict, *, require_sweep: bool = False) -> dict:
    """Schema plus cross-field checks; returns the config unchanged."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: (len(e.absolute_path), e.message))
    if errors:
        err = errors[0]
        raise ConfigError(_path(err), err.message)
    exp = config["experiment"]
    for frag in _REQUIRED_FRAGMENTS[exp]:
        if frag not in config:
            raise ConfigError(frag, f"required for experiment {exp!r}")
    if require_sweep and "sweep" not in config:
        raise ConfigError("sweep", "sweep block required")
    if "lattice" in config:
        lat = config["lattice"]
        if "dimension" in lat and lat["dimension"] != len(lat["shape"]):
            raise ConfigError("lattice.dimension", "must equal the length of lattice.shape")
    if exp in EASINESS_EXPERIMENTS:
        _validate_easiness(config)
    if exp == "transfer":
        _validate_transfer(config)
    if exp == "phase_grid":
        rng = config["phase"]["alpha"]
        hi = parse_alpha(rng["max"])
        if hi < rng["min"]:
            raise ConfigError("phase.alpha.max", "must be at least phase.alpha.min")
        spacing = rng.get("spacing", "linear")
        if spacing == "linear" and math.isinf(hi):
            raise ConfigError("phase.alpha.max", "linear spacing needs a finite maximum")
        if spacing == "inverse_sqrt" and rng["min"] <= 0:
            raise ConfigError("phase.alpha.min", "inverse_sqrt spacing needs a positive minimum")
        gam = config["phase"]["gamma"]
        if gam["max"] < gam["min"]:
            raise ConfigError("phase.gamma.max", "must be at least phase.gamma.min")
    return config


def _sites(config) -> int:
    return math.prod(config["lattice"]["shape"])


def _validate_easiness(config):
    D = len(config["lattice"]["shape"])
    alpha = parse_alpha(config["hamiltonian"]["alpha"])
    if not alpha > D + 1:
        raise ConfigError(
            "hamiltonian.alpha",
            f"easiness experiments require alpha > D + 1 (alpha={alpha}, D={D})",
        )
    m = _sites(config)
    cl = config["clusters"]
    for ext in config["lattice"]["shape"]:
        if ext % cl["width"]:
            raise ConfigError("clusters.width", f"width {cl['width']} does not tile extent {ext}")
    blocks = m // cl["width"] ** D
    if "count" in cl and cl["count"] != blocks:
        raise ConfigError("clusters.count", f"width {cl['width']} gives {blocks} clusters, not {cl['count']}")
    if any(p >= m for p in cl["positions"]):
        raise ConfigError("clusters.positions", f"positions must be < {m}")
    if "hhkl" in config and "beta" in config["hhkl"] and config["hhkl"]["beta"] < 1:
        raise ConfigError("hhkl.beta", "beta must be >= 1")


def _validate_transfer(config):
    m = _sites(config)
    tr = config["transfer"]
    for key in ("source", "target"):
        if key in tr and tr[key] >= m:
            raise ConfigError(f"transfer.{key}", f"site must be < {m}")
    if tr["protocol"] == "single_shot":
        if "amplitudes" not in tr:
            raise ConfigError("transfer.amplitudes", "required for single_shot")
        if len(tr["amplitudes"]) != m:
            raise ConfigError("transfer.amplitudes", f"need {m} amplitudes")
    else:
        if "target" not in tr:
            raise ConfigError("transfer.target", "required for state_transfer")
        if tr["target"] == tr["source"]:
            raise ConfigError("transfer.target", "must differ from transfer.source")
        anc = tr.get("ancillas", "all")
        if anc != "all" and any(a >= m or a in (tr["source"], tr["target"]) for a in anc):
            raise ConfigError("transfer.ancillas", "ancillas must be lattice sites other than source and target")


def load(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("<file>", str(exc)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from None


def set_dotted(config: dict, dotted: str, value) -> dict:
    """Copy of ``config`` with ``dotted`` (e.g. ``hamiltonian.alpha``) set to ``value``."""
    out = copy.deepcopy(config)
    node = out
    keys = dotted.split(".")
    for key in keys[:-1]:
        if not isinstance(node.get(key), dict):
            raise ConfigError("sweep.param", f"{dotted!r} does not name a config field")
        node = node[key]
    node[keys[-1]] = value
    return out
