"""JSON problem and result files."""

from __future__ import annotations

import json
import math
from pathlib import Path

import jsonschema

from .moments import IndexSet
from .poly import BiPolynomial, Polynomial
from .relax import FsippProblem

_EXP = {"type": "array", "items": {"type": "integer", "minimum": 0}}
_POLY = {
    "type": "array",
    "items": {
        "type": "object",
        "properties": {"exp": _EXP, "coef": {"type": "number"}},
        "required": ["exp", "coef"],
        "additionalProperties": False,
    },
}

PROBLEM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "m": {"type": "integer", "minimum": 1},
        "n": {"type": "integer", "minimum": 1},
        "f": _POLY,
        "g": _POLY,
        "phi": {"type": "array", "items": _POLY},
        "p": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {"xexp": _EXP, "yexp": _EXP, "coef": {"type": "number"}},
                "required": ["xexp", "yexp", "coef"],
                "additionalProperties": False,
            },
        },
        "index_set": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["box", "sphere", "ball", "simplices", "polytope"]},
                "vertices": {"type": "array"},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "config": {
            "type": "object",
            "properties": {
                "R": {"type": "number", "exclusiveMinimum": 0},
                "gstar": {"type": "number", "exclusiveMinimum": 0},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "required": ["m", "n", "f", "p", "index_set"],
    "additionalProperties": False,
}

RESULT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "tool": {"type": "object", "required": ["name", "version"]},
        "problem": {"type": "string"},
        "config": {"type": "object"},
        "records": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "k": {"type": "integer", "minimum": 1},
                    "status": {"type": "string"},
                    "lower_bound": {"type": ["number", "null"]},
                    "minimizer": {"type": ["array", "null"], "items": {"type": "number"}},
                    "feas_residual": {"type": ["number", "null"]},
                    "gap_E": {"type": ["number", "null"]},
                    "wall_time_s": {"type": "number", "minimum": 0},
                },
                "required": ["k", "status", "lower_bound", "minimizer", "feas_residual", "wall_time_s"],
            },
        },
    },
    "required": ["tool", "config", "records"],
}


class ProblemFileError(ValueError):
    """Malformed or schema-invalid problem file."""


def _poly_from_json(items, nvars: int, what: str) -> Polynomial:
    terms: dict = {}
    for t in items:
        e = tuple(t["exp"])
        if len(e) != nvars:
            raise ProblemFileError(f"{what}: exponent {list(e)} has length {len(e)}, expected {nvars}")
        terms[e] = terms.get(e, 0.0) + float(t["coef"])
    return Polynomial(terms, nvars)


def _graded_key(e):
    return (sum(e), tuple(-v for v in e))


def _poly_to_json(h: Polynomial) -> list:
    return [{"exp": list(e), "coef": c} for e, c in sorted(h.items(), key=lambda t: _graded_key(t[0]))]


def index_set_from_json(doc: dict, n: int) -> IndexSet:
    kind = doc["kind"]
    if kind in ("simplices", "polytope"):
        if "vertices" not in doc:
            raise ProblemFileError(f"index_set of kind {kind!r} needs 'vertices'")
        try:
            if kind == "polytope":
                Y = IndexSet.from_polytope(doc["vertices"])
            else:
                Y = IndexSet.from_simplices(doc["vertices"])
        except (ValueError, TypeError, IndexError) as exc:
            raise ProblemFileError(f"index_set: {exc}") from exc
    else:
        Y = IndexSet(kind, n)
    if Y.n != n:
        raise ProblemFileError(f"index_set has dimension {Y.n}, expected n = {n}")
    return Y


def problem_from_json(doc: dict) -> tuple:
    """Validate and build ``(FsippProblem, tol)``; ``tol`` is None unless configured."""
    try:
        jsonschema.validate(doc, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ProblemFileError(f"schema error at {where}: {exc.message}") from exc
    m, n = doc["m"], doc["n"]
    f = _poly_from_json(doc["f"], m, "f")
    g = _poly_from_json(doc["g"], m, "g") if "g" in doc else None
    phi = [_poly_from_json(q, m, f"phi[{j}]") for j, q in enumerate(doc.get("phi", []))]
    terms: dict = {}
    for t in doc["p"]:
        a, b = tuple(t["xexp"]), tuple(t["yexp"])
        if len(a) != m or len(b) != n:
            raise ProblemFileError(f"p: exponent pair {list(a)}, {list(b)} does not match (m, n) = ({m}, {n})")
        terms[(a, b)] = terms.get((a, b), 0.0) + float(t["coef"])
    p = BiPolynomial(terms, m, n)
    Y = index_set_from_json(doc["index_set"], n)
    cfg = doc.get("config", {})
    try:
        prob = FsippProblem(f, p, Y, g, phi, cfg.get("R"), cfg.get("gstar"), doc.get("name", ""))
    except ValueError as exc:
        raise ProblemFileError(str(exc)) from exc
    return prob, cfg.get("tol")


def problem_to_json(prob: FsippProblem, tol: float | None = None) -> dict:
    doc = {"name": prob.name} if prob.name else {}
    doc.update({"m": prob.m, "n": prob.n, "f": _poly_to_json(prob.f), "g": _poly_to_json(prob.g)})
    if prob.phi:
        doc["phi"] = [_poly_to_json(q) for q in prob.phi]
    doc["p"] = [
        {"xexp": list(a), "yexp": list(b), "coef": c}
        for (a, b), c in sorted(prob.p.items(), key=lambda t: (_graded_key(t[0][0]), _graded_key(t[0][1])))
    ]
    doc["index_set"] = prob.Y.to_json()
    doc["index_set"].pop("n", None)
    cfg = {"R": prob.R, "gstar": prob.gstar}
    if tol is not None:
        cfg["tol"] = tol
    doc["config"] = cfg
    return doc


def loads_problem(text: str) -> tuple:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return problem_from_json(doc)


def load_problem(path) -> tuple:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return loads_problem(text)


def dumps_problem(prob: FsippProblem, tol: float | None = None) -> str:
    """Problem file text with one polynomial term per line."""
    doc = problem_to_json(prob, tol)
    lines = []
    for key, val in doc.items():
        if key in ("f", "g", "p"):
            body = ",\n".join("    " + json.dumps(t) for t in val)
            text = f"[\n{body}\n  ]"
        elif key == "phi":
            polys = ["    [" + ", ".join(json.dumps(t) for t in q) + "]" for q in val]
            text = "[\n" + ",\n".join(polys) + "\n  ]"
        else:
            text = json.dumps(val)
        lines.append(f"  {json.dumps(key)}: {text}")
    return "{\n" + ",\n".join(lines) + "\n}\n"


def save_problem(prob: FsippProblem, path, tol: float | None = None) -> None:
    Path(path).write_text(dumps_problem(prob, tol))


# ---------------------------------------------------------------- results

def _finite(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def result_record(r) -> dict:
    rec = {
        "k": r.k,
        "status": r.status.value,
        "lower_bound": _finite(r.lower_bound),
        "minimizer": None if r.minimizer is None else [float(v) for v in r.minimizer],
        "feas_residual": _finite(r.feas_residual),
        "wall_time_s": round(float(r.wall_time_s), 6),
    }
    if r.gap_E is not None:
        rec["gap_E"] = _finite(r.gap_E)
    return rec


def result_document(prob: FsippProblem, results, tol: float, version: str) -> dict:
    doc = {
        "tool": {"name": "fsipp", "version": version},
        "problem": prob.name,
        "config": {"R": prob.R, "gstar": prob.gstar, "tol": tol, "d": prob.d},
        "records": [result_record(r) for r in sorted(results, key=lambda r: r.k)],
    }
    jsonschema.validate(doc, RESULT_SCHEMA)
    return doc

