"""Command-line front end: ``pgeo <command> <model> [flags]``.

Every command builds a structured report (validated against the bundled
JSON schema); the text form is rendered from that same document.  Exit
codes: 0 success, 1 validation or usage error, 2 an undecided verdict.
"""
from __future__ import annotations

import argparse
import enum
import json
import sys
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np
import sympy as sp

from . import expr as E
from .errors import PgeoError
from .expr import Verdict
from .homspace import (canonical_geodesic_test, coset_metric, find_null_geodesic_vectors, geodesic_vector_test,
                       homogeneous_structure, isotropy_representation, lambda_equals, structure_contraction,
                       structure_scaling, validate_algebra)
from .modelfile import load_file
from .penrose import hereditary_report, limits_agree, omega_limit, omega_pullback, penrose_limit, validate_adapted
from .planewave import (SMOOTH, bo_isometry_algebra, build_bo_metric, cahen_wallach_normal_form,
                        recognize_profile)
from .tensor import CurvaturePack, VectorField, is_killing
from .transport import homogeneous_geodesic_test_transport, null_geodesic_along

SCHEMA_VERSION = "1.0"
COMMANDS = ("curvature", "killing-check", "limit", "hereditary", "check-algebra", "geodesic-vector",
            "search-geodesics", "structure", "coset-metric", "classify", "transport", "scaling")
UNDECIDED_VALUES = {"undecided"}


class UsageError(PgeoError):
    """A flag or model kind that the command cannot use."""


@lru_cache(maxsize=1)
def report_schema():
    text = resources.files("pgeo").joinpath("schema/report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_report(doc):
    jsonschema.validate(doc, report_schema())


def _plain(x):
    """Report-safe value: Expressions become grammar strings, enums their values."""
    if isinstance(x, enum.Enum):
        return x.value
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, sp.MatrixBase):
        return [[_plain(v) for v in row] for row in x.tolist()]
    if isinstance(x, (bool, str, int, float)) or x is None:
        return x
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, sp.Basic):
        return E.to_string(x)
    return str(x)


class Report:
    def __init__(self, command, model="", kind="unknown"):
        self.command = command
        self.model = model
        self.kind = kind
        self.results = {}
        self.verdicts = {}
        self.error = None

    def verdict(self, name, value):
        self.verdicts[name] = _plain(value)
        return value

    @property
    def exit_code(self):
        if self.error is not None:
            return 1
        if any(v in UNDECIDED_VALUES for v in self.verdicts.values()):
            return 2
        return 0

    def as_dict(self):
        code = self.exit_code
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "model": self.model,
            "kind": self.kind,
            "status": {0: "ok", 1: "error", 2: "undecided"}[code],
            "exit_code": code,
            "verdicts": dict(self.verdicts),
            "results": _plain(self.results),
        }
        if self.error is not None:
            doc["error"] = self.error
        return doc

    def text(self):
        doc = self.as_dict()
        lines = [f"{doc['command']} {doc['model']} [{doc['kind']}]: {doc['status']}"]
        if self.error:
            where = f" (line {self.error['line']}, column {self.error['column']})" if self.error.get("line") else ""
            lines.append(f"error: {self.error['type']}: {self.error['message']}{where}")
        _render(doc["results"], lines, 1)
        if doc["verdicts"]:
            lines.append("verdicts:")
            for k, v in doc["verdicts"].items():
                lines.append(f"  {k}: {v}")
        return "\n".join(lines)


def _render(value, lines, depth):
    pad = "  " * depth
    if isinstance(value, dict):
        for k, v in value.items():
            if isinstance(v, (dict, list)) and v and not _flat_list(v):
                lines.append(f"{pad}{k}:")
                _render(v, lines, depth + 1)
            else:
                lines.append(f"{pad}{k}: {_inline(v)}")
    elif isinstance(value, list):
        for v in value:
            if isinstance(v, (dict, list)) and v and not _flat_list(v):
                lines.append(f"{pad}-")
                _render(v, lines, depth + 1)
            else:
                lines.append(f"{pad}- {_inline(v)}")


def _flat_list(v):
    return isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v)


def _inline(v):
    if isinstance(v, list):
        return "[" + ", ".join(_inline(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{}"
    if v is None:
        return "-"
    return str(v)


# ---------------------------------------------------------------- commands

def _need(mf, *kinds):
    if mf.kind not in kinds:
        raise UsageError(f"this command needs a {' or '.join(kinds)} model, got {mf.kind}")


def _adapted(mf):
    if not mf.roles:
        raise UsageError("this command needs an adapted chart: give roles = [u, v, y...] in [space]")
    return validate_adapted(mf.model, mf.roles)


def _curvature_summary(pack, rep, prefix=""):
    flags = pack.flags()
    for k, v in flags.items():
        rep.verdict(prefix + k, v)
    lam = pack.einstein_constant if flags["is_einstein"] is Verdict.TRUE else None
    return {"flags": flags, "einstein_constant": lam, "ricci_scalar": E.simplify(pack.scalar)}


def cmd_curvature(mf, args, rep):
    _need(mf, "metric", "planewave")
    m = build_bo_metric(mf.model) if mf.kind == "planewave" else mf.model
    pack = CurvaturePack(m)
    rep.results = {"metric": m.line_element(), **_curvature_summary(pack, rep),
                   "christoffel": pack.nonzero_christoffel()}


def _vectors(mf, args):
    m = mf.model
    if args.vector:
        return {"X": VectorField.parse(m, args.vector)}
    return dict(mf.vectors)


def cmd_killing_check(mf, args, rep):
    _need(mf, "metric")
    m = mf.model
    fields = {}
    for name, X in _vectors(mf, args).items():
        fields[name] = {"field": X.to_string(m), "killing": rep.verdict(f"{name} killing", is_killing(m, X))}
    rep.results["fields"] = fields
    if mf.roles and not args.vector:
        lim = penrose_limit(_adapted(mf))
        match = recognize_profile(lim)
        out = {"limit": lim.metric.line_element(), "profile": match.kind}
        if match.witness is not None:
            out["witness"] = match.witness.to_string(lim.metric)
            out["witness_killing"] = rep.verdict("limit witness killing", match.witness_killing)
        rep.results["limit_homogeneity_witness"] = out


def cmd_limit(mf, args, rep):
    _need(mf, "metric")
    a = _adapted(mf)
    lim = penrose_limit(a)
    rep.results = {
        "roles": list(a.roles),
        "c_uv": a.c_uv,
        "limit": lim.metric.line_element(),
        "C_on_gamma": lim.C,
    }
    match = recognize_profile(lim)
    rep.results["profile"] = match.as_dict()
    if args.omega_series:
        pulled = omega_pullback(a)
        rep.results["omega_pullback"] = pulled.line_element()
        rep.results["omega_order_0"] = omega_limit(pulled)
        rep.results["agrees_with_limit"] = rep.verdict("omega limit agrees", limits_agree(a))


def cmd_hereditary(mf, args, rep):
    _need(mf, "metric")
    h = hereditary_report(_adapted(mf), mf.killing_dimension)
    rep.results = h.as_dict()
    for prop, _, _, implied in h.rows:
        rep.verdict(prop, implied)


def _algebra(mf):
    if mf.kind == "planewave":
        return bo_isometry_algebra(mf.model)
    _need(mf, "algebra")
    return mf.model


def cmd_check_algebra(mf, args, rep):
    model = _algebra(mf)
    report = validate_algebra(model)
    rep.results = {"basis": list(model.basis), "isotropy": list(model.h), "complement": list(model.m),
                   **report.as_dict()}
    for k in ("jacobi", "reductive", "symmetric", "invariant"):
        rep.verdict(k, getattr(report, k))
    if report.reductive is Verdict.TRUE and model.h:
        rep.results["isotropy_representation"] = isotropy_representation(model)


def _algebra_vectors(mf, model, args):
    if args.vector:
        return {"X": (model.parse_vector(args.vector), None, None)}
    if not mf.vectors:
        raise UsageError("give --vector or list vectors in the model file")
    return {k: (v, mf.constraints.get(k), mf.lambdas.get(k)) for k, v in mf.vectors.items()}


def cmd_geodesic_vector(mf, args, rep):
    model = _algebra(mf)
    out = {}
    for name, (X, constraints, expected) in _algebra_vectors(mf, model, args).items():
        res = geodesic_vector_test(model, X, constraints)
        if res is None:
            out[name] = {"vector": model.format_vector(X), "geodesic": "false"}
            rep.verdict(f"{name} geodesic", Verdict.FALSE)
            continue
        entry = res.as_dict(model)
        rep.verdict(f"{name} geodesic", res.verdict)
        if constraints:
            entry["constraints"] = [E.to_string(c) + " = 0" for c in constraints]
        if expected is not None:
            entry["expected_lambda"] = expected
            entry["lambda_matches"] = rep.verdict(f"{name} lambda", lambda_equals(res, expected, constraints))
        out[name] = entry
    rep.results["vectors"] = out


def cmd_search_geodesics(mf, args, rep):
    model = _algebra(mf)
    starts = args.starts or 10_000
    found = find_null_geodesic_vectors(model, require_absolute=args.absolute, starts=starts, seed=args.seed,
                                       null=args.null)
    rep.results = {
        "null": args.null,
        "absolute": args.absolute,
        "starts": found.starts,
        "seed": found.seed,
        "tolerance": found.tolerance,
        "converged": found.converged,
        "families": [r.as_dict(model) for r in found.results],
    }


def cmd_structure(mf, args, rep):
    model = _algebra(mf)
    s = homogeneous_structure(model)
    comps = {f"T({i},{j};{k})": v for (i, j, k), v in s.components().items()}
    rep.results = {"complement": list(model.m), "components": comps,
                   "naturally_reductive": rep.verdict("naturally reductive", s.is_naturally_reductive)}
    if args.vector or mf.vectors:
        out = {}
        for name, (X, _, _) in _algebra_vectors(mf, model, args).items():
            Tm = structure_contraction(s, X)
            out[name] = {"T(X,X)": E.linear_combination(Tm, model.m)}
        rep.results["contractions"] = out


def cmd_scaling(mf, args, rep):
    model = _algebra(mf)
    out = {}
    for name, (X, constraints, _) in _algebra_vectors(mf, model, args).items():
        if constraints:
            out[name] = {"skipped": "symbolic families with constraints are not scaled"}
            continue
        info = canonical_geodesic_test(model, X)
        entry = {"lambda": info["lambda"], "null": info["null"], "canonical": info["canonical"]}
        if "structure_limit" in info:
            prof = structure_scaling(homogeneous_structure(model), X)
            entry["verdict"] = rep.verdict(f"{name} scaling", prof.verdict)
            entry["offending"] = list(prof.offending)
            entry["negative_weights"] = {k: w for k, w in prof.weights.items() if w < 0}
            entry["T(X,X)"] = E.linear_combination(info["contraction"], model.m)
        out[name] = entry
    rep.results["vectors"] = out


def cmd_coset_metric(mf, args, rep):
    model = _algebra(mf)
    m = coset_metric(model)
    rep.results = {"coordinates": list(m.names), "order": list(model.coset_order or model.m),
                   "metric": m.line_element()}


def cmd_classify(mf, args, rep):
    if mf.kind == "planewave":
        d = mf.model
        model = bo_isometry_algebra(d)
        s = homogeneous_structure(model)
        m = build_bo_metric(d)
        rep.results = {
            "class": d.klass,
            "parameters": {"a": d.a, "b": d.b, "c": d.c},
            "metric": m.line_element(),
            "naturally_reductive": rep.verdict("naturally reductive", s.is_naturally_reductive),
        }
        if d.klass == SMOOTH and all(x == 0 for x in d.f):
            rep.results["cahen_wallach_normal_form"] = cahen_wallach_normal_form(d.A0)
            rep.results["locally_symmetric"] = rep.verdict("locally symmetric",
                                                           CurvaturePack(m).is_locally_symmetric)
        return
    if mf.kind == "metric":
        a = _adapted(mf)
        lim = penrose_limit(a)
        rep.results = {"limit": lim.metric.line_element(), "profile": recognize_profile(lim).as_dict()}
        rep.verdict("profile verified", recognize_profile(lim).verified)
        return
    model = mf.model
    report = validate_algebra(model)
    rep.results = report.as_dict()
    rep.verdict("reductive", report.reductive)
    rep.verdict("symmetric", report.symmetric)
    if report.reductive is Verdict.TRUE:
        nr = homogeneous_structure(model).is_naturally_reductive
        rep.results["naturally_reductive"] = rep.verdict("naturally reductive", nr)


def cmd_transport(mf, args, rep):
    _need(mf, "metric")
    m = mf.model
    direction = args.vector or (mf.roles[0] if mf.roles else None)
    if direction is None or direction not in m.names:
        raise UsageError("transport needs --vector naming a coordinate direction, or roles in the model file")
    targets = [("source", m)]
    if mf.roles and direction == mf.roles[0]:
        targets.append(("limit", penrose_limit(_adapted(mf)).metric))
    out = {"direction": f"d_{direction}"}
    for label, metric in targets:
        curve = null_geodesic_along(metric, direction, steps=args.steps)
        res = homogeneous_geodesic_test_transport(metric, curve)
        out[label] = {"verdict": res.verdict, "residual": res.residual, "samples": res.samples,
                      "steps": curve.steps}
        rep.verdict(f"{label} homogeneous", res.verdict)
    rep.results = out


HANDLERS = {
    "curvature": cmd_curvature,
    "killing-check": cmd_killing_check,
    "limit": cmd_limit,
    "hereditary": cmd_hereditary,
    "check-algebra": cmd_check_algebra,
    "geodesic-vector": cmd_geodesic_vector,
    "search-geodesics": cmd_search_geodesics,
    "structure": cmd_structure,
    "coset-metric": cmd_coset_metric,
    "classify": cmd_classify,
    "transport": cmd_transport,
    "scaling": cmd_scaling,
}


def run(command, path, args=None):
    """Run *command* on the model file at *path*; returns a Report (never raises PgeoError)."""
    args = args or parse_args([command, str(path)])
    rep = Report(command, str(path))
    try:
        if command not in HANDLERS:
            raise UsageError(f"unknown command {command!r}")
        mf = load_file(path)
        rep.model = mf.name or str(path)
        rep.kind = mf.kind
        HANDLERS[command](mf, args, rep)
    except PgeoError as exc:
        rep.error = {"type": type(exc).__name__, "message": str(exc),
                     "line": getattr(exc, "line", None), "column": getattr(exc, "column", None)}
    return rep


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="pgeo", description="Penrose limits, homogeneous structures and plane waves.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("model", help="model file (bundled fixtures may be named directly)")
    p.add_argument("--vector", help="vector (algebra basis expression, vector field, or coordinate direction)")
    p.add_argument("--omega-series", action="store_true", help="also expand the Ω-pullback")
    p.add_argument("--null", action="store_true", help="restrict the search to null vectors")
    p.add_argument("--absolute", action="store_true", help="require λ = 0")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    return p


def parse_args(argv):
    return build_parser().parse_args(argv)


def main(argv=None):
    args = parse_args(sys.argv[1:] if argv is None else argv)
    rep = run(args.command, args.model, args)
    doc = rep.as_dict()
    validate_report(doc)
    if args.format == "json":
        print(json.dumps(doc, indent=2, ensure_ascii=False))
    else:
        print(rep.text())
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
