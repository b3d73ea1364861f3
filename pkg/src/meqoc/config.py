"""JSON problem configs: schema validation and conversion to a ControlProblem.

Matrices are inline, either as ``{"pairs": [[[re, im], ...], ...]}`` or as a
Pauli string with a scale, ``{"pauli": "xz", "scale": 0.5}`` meaning
``0.5 * sigma_x (x) sigma_z``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import reduce

import jsonschema
import numpy as np

from .algebra import PAULI, exp_anti_hermitian, matrix_from_pairs
from .magnus import SystemSpec, Term, assemble
from .pipeline import ControlProblem, propagate_reference
from .poly import VarId

SCHEMA_VERSION = 1

_MATRIX = {
    "oneOf": [
        {
            "type": "object",
            "required": ["pairs"],
            "properties": {"pairs": {"type": "array", "items": {"type": "array"}}},
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["pauli"],
            "properties": {
                "pauli": {"type": "string", "pattern": "^[0xyz]+$"},
                "scale": {"type": "number"},
            },
            "additionalProperties": False,
        },
    ]
}
_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "required": ["schema_version", "system", "horizon"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "description": {"type": "string"},
        "system": {
            "type": "object",
            "required": ["dim", "terms"],
            "additionalProperties": False,
            "properties": {
                "dim": {"type": "integer", "minimum": 1},
                "terms": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["matrix"],
                        "additionalProperties": False,
                        "properties": {
                            "matrix": _MATRIX,
                            "pinned": {"type": ["number", "null"]},
                            "label": {"type": "string"},
                        },
                    },
                },
            },
        },
        "horizon": {
            "type": "object",
            "required": ["T", "K"],
            "additionalProperties": False,
            "properties": {"T": {"type": "number", "exclusiveMinimum": 0}, "K": {"type": "integer", "minimum": 1}},
        },
        "magnus_order": {"type": "integer", "minimum": 1, "maximum": 4},
        "relax_order": {"type": "integer", "minimum": 1},
        "bounds": {
            "oneOf": [
                _PAIR,
                {"type": "object", "patternProperties": {"^[0-9]+$": {"type": "array"}}, "additionalProperties": False},
            ]
        },
        "target": {
            "oneOf": [
                {"type": "object", "required": ["matrix"], "additionalProperties": False,
                 "properties": {"matrix": _MATRIX}},
                {"type": "object", "required": ["identity"], "additionalProperties": False,
                 "properties": {"identity": {"const": True}}},
                {
                    "type": "object",
                    "required": ["forward_controls"],
                    "additionalProperties": False,
                    "properties": {
                        "forward_controls": {
                            "type": "object",
                            "patternProperties": {"^[0-9]+$": {"type": "array", "items": {"type": "number"}}},
                            "additionalProperties": False,
                        },
                        "via": {"enum": ["magnus", "propagation"]},
                    },
                },
            ]
        },
        "lambda_energy": {"type": "number", "minimum": 0},
        "mu": {"type": "object", "patternProperties": {"^[0-9]+$": {"type": "number", "exclusiveMinimum": 0}},
               "additionalProperties": False},
        "quadrature": {"enum": ["simplex", "rectangle"]},
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "max_basis": {"type": "integer", "minimum": 1},
            },
        },
        "modes": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"refine": {"type": "boolean"}, "polish": {"type": "boolean"},
                           "verify_samples": {"type": "integer", "minimum": 0},
                           "substeps": {"type": "integer", "minimum": 1}},
        },
        "seed": {"type": "integer"},
    },
}


class ConfigError(ValueError):
    """Config text that fails to parse or validate; message names the location."""


def _path(err) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def parse_config(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError("; ".join(f"{_path(e)}: {e.message}" for e in errors[:5]))
    return doc


def matrix_from_spec(spec: dict) -> np.ndarray:
    if "pairs" in spec:
        return matrix_from_pairs(spec["pairs"])
    mats = [PAULI[c] for c in spec["pauli"]]
    return spec.get("scale", 1.0) * reduce(np.kron, mats)


@dataclass
class ProblemConfig:
    raw: dict
    sys: SystemSpec
    magnus_order: int = 2
    relax_order: int | None = None
    bounds: object = None
    lambda_energy: float = 0.0
    mu: dict = field(default_factory=dict)
    quadrature: str = "simplex"
    tol: float = 1e-7
    max_iter: int = 100
    max_basis: int = 500
    refine: bool = True
    polish: bool = True
    verify_samples: int = 0
    substeps: int = 1
    seed: int = 0

    def target(self) -> np.ndarray:
        spec = self.raw.get("target", {"identity": True})
        if "identity" in spec:
            return np.eye(self.sys.dim, dtype=complex)
        if "matrix" in spec:
            return matrix_from_spec(spec["matrix"])
        u = {}
        for j, row in spec["forward_controls"].items():
            for k, v in enumerate(row, start=1):
                u[VarId(int(j), k)] = float(v)
        missing = [v for v in self.sys.variables() if v not in u]
        if missing:
            raise ConfigError(f"target/forward_controls: no value for {missing[0]}")
        if spec.get("via", "magnus") == "propagation":
            return propagate_reference(self.sys, u, self.substeps)
        return exp_anti_hermitian(assemble(self.sys, self.magnus_order, quadrature=self.quadrature).evaluate(u))

    def problem(self) -> ControlProblem:
        if not self.sys.free_controls:
            raise ConfigError("system/terms: no free control to optimise")
        if self.bounds is None:
            raise ConfigError("bounds: required for solving")
        return ControlProblem(
            sys=self.sys,
            target=self.target(),
            bounds=self.bounds,
            magnus_order=self.magnus_order,
            relax_order=self.relax_order,
            lambda_energy=self.lambda_energy,
            mu=self.mu,
            quadrature=self.quadrature,
            refine=self.refine,
            polish=self.polish,
            tol=self.tol,
            max_iter=self.max_iter,
            max_basis=self.max_basis,
        )


def load_config(text: str, overrides: dict | None = None) -> ProblemConfig:
    """Validate ``text`` and build a :class:`ProblemConfig`.

    ``overrides`` may set ``magnus_order``, ``relax_order``, ``K`` or ``tol``
    after validation (command-line flags).
    """
    doc = parse_config(text)
    ov = {k: v for k, v in (overrides or {}).items() if v is not None}
    dim = doc["system"]["dim"]
    terms = []
    for j, t in enumerate(doc["system"]["terms"]):
        try:
            h = matrix_from_spec(t["matrix"])
        except Exception as exc:
            raise ConfigError(f"system/terms/{j}/matrix: {exc}") from None
        if h.shape != (dim, dim):
            raise ConfigError(f"system/terms/{j}/matrix: shape {h.shape} does not match dim {dim}")
        terms.append(Term(h, t.get("pinned"), t.get("label", "")))
    K = int(ov.get("K", doc["horizon"]["K"]))
    try:
        sys = SystemSpec.from_horizon(terms, float(doc["horizon"]["T"]), K)
    except ValueError as exc:
        raise ConfigError(f"system: {exc}") from None
    bounds = doc.get("bounds")
    if isinstance(bounds, dict):
        bounds = {int(j): b for j, b in bounds.items()}
    solver = doc.get("solver", {})
    modes = doc.get("modes", {})
    return ProblemConfig(
        raw=doc,
        sys=sys,
        magnus_order=int(ov.get("magnus_order", doc.get("magnus_order", 2))),
        relax_order=ov.get("relax_order", doc.get("relax_order")),
        bounds=bounds,
        lambda_energy=float(doc.get("lambda_energy", 0.0)),
        mu={int(j): float(v) for j, v in doc.get("mu", {}).items()},
        quadrature=doc.get("quadrature", "simplex"),
        tol=float(ov.get("tol", solver.get("tol", 1e-7))),
        max_iter=int(solver.get("max_iter", 100)),
        max_basis=int(solver.get("max_basis", 500)),
        refine=modes.get("refine", True),
        polish=modes.get("polish", True),
        verify_samples=modes.get("verify_samples", 0),
        substeps=modes.get("substeps", 1),
        seed=int(doc.get("seed", 0)),
    )
