"""Model files: a restricted TOML layout for metrics, algebras and plane-wave data.

Sections and keys (anything else is an error)::

    [space]      name, kind = "metric" | "algebra" | "planewave", description,
                 coordinates, parameters, positive, sample, roles, signature,
                 killing_dimension
    [metric]     line_element = "..."  or  "g(a,b)" = "...";  killing = {name = "vector field"}
    [algebra]    basis, isotropy, vectors = {name = "..."}, constraints = {name = [...]},
                 lambda = {name = "..."}
    [brackets]   "[a,b]" = "..."       (antisymmetry enforced)
    [bilinear]   "B(a,b)" = "..."      (order-insensitive; missing entries are 0)
    [coset]      order, coordinates
    [planewave]  A0, f (lists of rows), class = "smooth" | "singular" | "unclassified", a, b, c

All values that carry mathematics are strings in the expression grammar.
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import sympy as sp

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import expr as E
from .errors import ModelFileError, PgeoError
from .homspace import LieAlgebraModel, parse_constraint, validate_algebra
from .penrose import validate_adapted
from .planewave import PlaneWaveData
from .tensor import MetricModel, VectorField

FIXTURES = Path(__file__).with_name("fixtures")

SECTIONS = {
    "space": {"name", "kind", "description", "coordinates", "parameters", "positive", "sample", "roles",
              "signature", "killing_dimension"},
    "metric": {"line_element", "killing"},
    "algebra": {"basis", "isotropy", "vectors", "constraints", "lambda"},
    "brackets": None,
    "bilinear": None,
    "coset": {"order", "coordinates"},
    "planewave": {"A0", "f", "class", "a", "b", "c"},
}
KINDS = ("metric", "algebra", "planewave")
_BRACKET_KEY = re.compile(r"^\[\s*(\w+)\s*,\s*(\w+)\s*\]$")
_METRIC_KEY = re.compile(r"^g\(\s*(\w+)\s*,\s*(\w+)\s*\)$")
_FORM_KEY = re.compile(r"^B\(\s*(\w+)\s*,\s*(\w+)\s*\)$")


@dataclass
class ModelFile:
    """A loaded model plus the auxiliary data carried by its file."""

    kind: str
    model: object
    name: str = ""
    description: str = ""
    roles: tuple = ()
    vectors: dict = field(default_factory=dict)
    constraints: dict = field(default_factory=dict)
    lambdas: dict = field(default_factory=dict)
    killing_dimension: int | None = None
    path: str | None = None
    data: dict = field(default_factory=dict)


def fixture_path(name):
    name = Path(name).name
    if not name.endswith(".model"):
        name += ".model"
    return FIXTURES / name


def fixture_names():
    return sorted(p.stem for p in FIXTURES.glob("*.model"))


def _locate(text, section, key):
    """(line, column) of *key* inside [section], best effort."""
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and not stripped.startswith("[["):
            current = stripped.strip("[]").strip()
            continue
        if current == section:
            bare = stripped.split("=", 1)[0].strip().strip('"').strip("'")
            if bare == key:
                return lineno, line.index(stripped) + 1
    return None, None


class _Reader:
    def __init__(self, text, path=None):
        self.text = text
        self.path = path
        try:
            self.data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ModelFileError(str(exc).split(" (at line")[0], getattr(exc, "lineno", None),
                                 getattr(exc, "colno", None)) from exc

    def fail(self, message, section, key=None, cause=None):
        line, col = _locate(self.text, section, key) if key else (None, None)
        err = ModelFileError(f"[{section}] {key + ': ' if key else ''}{message}", line, col)
        if cause is not None:
            raise err from cause
        raise err

    def check_layout(self):
        for section, body in self.data.items():
            if section not in SECTIONS:
                line, col = _locate_section(self.text, section)
                raise ModelFileError(f"unknown section [{section}]", line, col)
            if not isinstance(body, dict):
                raise ModelFileError(f"[{section}] must be a table")
            allowed = SECTIONS[section]
            for key in body:
                if section == "metric" and _METRIC_KEY.match(key):
                    continue
                if section == "brackets":
                    if not _BRACKET_KEY.match(key):
                        self.fail("bracket keys look like \"[a,b]\"", section, key)
                    continue
                if section == "bilinear":
                    if not _FORM_KEY.match(key):
                        self.fail("bilinear keys look like \"B(a,b)\"", section, key)
                    continue
                if allowed is not None and key not in allowed:
                    self.fail("unknown key", section, key)

    def expression(self, section, key, value, symbols, positive):
        if isinstance(value, bool) or not isinstance(value, (str, int)):
            self.fail("expected an expression string or integer", section, key)
        try:
            return E.parse(str(value), positive=positive, symbols=symbols)
        except PgeoError as exc:
            self.fail(str(exc), section, key, exc)


def _locate_section(text, section):
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip().strip("[]").strip() == section:
            return lineno, 1
    return None, None


def loads(text, path=None):
    """Parse and validate a model file's text; returns a ModelFile."""
    r = _Reader(text, path)
    r.check_layout()
    data = r.data
    space = data.get("space", {})
    kind = space.get("kind")
    if kind is None:
        kind = "metric" if "metric" in data else "algebra" if "algebra" in data else "planewave" if "planewave" in data else None
    if kind not in KINDS:
        raise ModelFileError(f"[space] kind must be one of {KINDS}")
    if kind == "metric":
        return _load_metric(r, space)
    if kind == "algebra":
        return _load_algebra(r, space)
    return _load_planewave(r, space)


def load_file(path):
    path = Path(path)
    if not path.exists() and fixture_path(path).exists():
        path = fixture_path(str(path))
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc.strerror}") from exc
    mf = loads(text, str(path))
    mf.path = str(path)
    return mf


def load(path):
    """The validated model object of a file: MetricModel, LieAlgebraModel or PlaneWaveData."""
    return load_file(path).model


def _sample(r, space, names):
    sample = {}
    for k, v in (space.get("sample") or {}).items():
        try:
            sample[k] = Fraction(str(v))
        except (ValueError, ZeroDivisionError) as exc:
            r.fail(f"sample values must be rational, got {v!r}", "space", "sample", exc)
    return sample


def _load_metric(r, space):
    data = r.data
    coords = list(space.get("coordinates") or [])
    if not coords:
        r.fail("metric models need coordinates", "space", "coordinates")
    params = list(space.get("parameters") or [])
    positive = list(space.get("positive") or [])
    sample = _sample(r, space, coords)
    signature = space.get("signature", "lorentzian")
    signature = None if signature == "none" else signature
    metric = data.get("metric")
    if metric is None:
        raise ModelFileError("metric models need a [metric] section")
    name = space.get("name", "")
    comp_keys = [k for k in metric if _METRIC_KEY.match(k)]
    if "line_element" in metric and comp_keys:
        r.fail("give either line_element or g(a,b) entries, not both", "metric", "line_element")
    try:
        if "line_element" in metric:
            m = MetricModel.from_line_element(metric["line_element"], coords, params, sample, positive,
                                              signature, name)
        else:
            comps = {}
            for key in comp_keys:
                a, b = _METRIC_KEY.match(key).groups()
                for x in (a, b):
                    if x not in coords:
                        r.fail(f"{x!r} is not a coordinate", "metric", key)
                pair = tuple(sorted((a, b), key=coords.index))
                if pair in comps:
                    r.fail("component given twice", "metric", key)
                if not isinstance(metric[key], (str, int)):
                    r.fail("expected an expression string", "metric", key)
                comps[pair] = str(metric[key])
            m = MetricModel.build(coords, comps, params, sample, positive, signature, name)
    except ModelFileError:
        raise
    except PgeoError as exc:
        key = "line_element" if "line_element" in metric else (comp_keys[0] if comp_keys else None)
        r.fail(str(exc), "metric", key, exc)
    vectors = {}
    for label, text in (metric.get("killing") or {}).items():
        try:
            vectors[label] = VectorField.parse(m, text)
        except PgeoError as exc:
            r.fail(f"vector field {label!r}: {exc}", "metric", "killing", exc)
    roles = tuple(space.get("roles") or ())
    if roles:
        try:
            validate_adapted(m, roles)
        except PgeoError as exc:
            r.fail(str(exc), "space", "roles", exc)
    return ModelFile("metric", m, name, space.get("description", ""), roles, vectors,
                     killing_dimension=space.get("killing_dimension"), data=r.data)


def _load_algebra(r, space):
    data = r.data
    alg = data.get("algebra") or {}
    basis = list(alg.get("basis") or [])
    if not basis:
        r.fail("algebra models need a basis", "algebra", "basis")
    iso = list(alg.get("isotropy") or [])
    params = list(space.get("parameters") or [])
    positive = list(space.get("positive") or [])
    brackets = {}
    for key, value in (data.get("brackets") or {}).items():
        a, b = _BRACKET_KEY.match(key).groups()
        for x in (a, b):
            if x not in basis:
                r.fail(f"{x!r} is not a basis element", "brackets", key)
        if (a, b) in brackets:
            r.fail("bracket given twice", "brackets", key)
        if not isinstance(value, (str, int)):
            r.fail("expected an expression string", "brackets", key)
        brackets[(a, b)] = str(value)
    m_names = [b for b in basis if b not in iso]
    form = {}
    for key, value in (data.get("bilinear") or {}).items():
        a, b = _FORM_KEY.match(key).groups()
        for x in (a, b):
            if x not in m_names:
                r.fail(f"{x!r} is not in the complement 𝔪", "bilinear", key)
        pair = tuple(sorted((a, b), key=m_names.index))
        if pair in form:
            r.fail("entry given twice", "bilinear", key)
        form[pair] = str(value)
    coset = data.get("coset") or {}
    try:
        model = LieAlgebraModel.from_table(basis, brackets, iso, form, params, positive,
                                           coset.get("order", ()), coset.get("coordinates", ()),
                                           space.get("name", ""), _sample(r, space, basis))
    except PgeoError as exc:
        key = None
        match = re.search(r"\[(\w+),(\w+)\]", str(exc))
        if match:
            for candidate in (f"[{match.group(1)},{match.group(2)}]", f"[{match.group(2)},{match.group(1)}]"):
                if _locate(r.text, "brackets", candidate)[0]:
                    key = candidate
                    break
        r.fail(str(exc), "brackets", key, exc)
    validate_algebra(model)
    vectors, constraints, lambdas = {}, {}, {}
    symbols = {}
    for label, text in (alg.get("vectors") or {}).items():
        try:
            vec = model.parse_vector(text)
        except PgeoError as exc:
            r.fail(f"vector {label!r}: {exc}", "algebra", "vectors", exc)
        vectors[label] = vec
        for s in vec.free_symbols:
            symbols[s.name] = s
    symbols.update(model.symbols())
    for label, items in (alg.get("constraints") or {}).items():
        items = [items] if isinstance(items, str) else list(items)
        try:
            constraints[label] = [parse_constraint(t, symbols) for t in items]
        except PgeoError as exc:
            r.fail(f"constraint {label!r}: {exc}", "algebra", "constraints", exc)
    for label, text in (alg.get("lambda") or {}).items():
        lambdas[label] = r.expression("algebra", "lambda", text, symbols, ())
    return ModelFile("algebra", model, space.get("name", ""), space.get("description", ""), (), vectors,
                     constraints, lambdas, data=r.data)


def _matrix(r, key, rows):
    if not isinstance(rows, list) or not all(isinstance(row, list) for row in rows):
        r.fail("expected a list of rows", "planewave", key)
    return sp.Matrix([[r.expression("planewave", key, x, {}, ()) for x in row] for row in rows])


def _load_planewave(r, space):
    pw = r.data.get("planewave") or {}
    if "A0" not in pw:
        r.fail("plane-wave data need A0", "planewave", None)
    A0 = _matrix(r, "A0", pw["A0"])
    f = _matrix(r, "f", pw["f"]) if "f" in pw else None
    extra = {k: r.expression("planewave", k, pw[k], {}, ()) for k in ("a", "b", "c") if k in pw}
    try:
        d = PlaneWaveData(A0, f, pw.get("class", "smooth"), extra.get("a"), extra.get("b"), extra.get("c"))
    except PgeoError as exc:
        r.fail(str(exc), "planewave", "A0", exc)
    return ModelFile("planewave", d, space.get("name", ""), space.get("description", ""), data=r.data)


# ---------------------------------------------------------------- writing

def _q(s):
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _list(items):
    return "[" + ", ".join(_q(x) for x in items) + "]"


def dumps(mf):
    """Canonical text for a ModelFile; loading it back gives an equivalent model."""
    out = ["[space]"]
    if mf.name:
        out.append(f"name = {_q(mf.name)}")
    out.append(f"kind = {_q(mf.kind)}")
    if mf.description:
        out.append(f"description = {_q(mf.description)}")
    model = mf.model
    if mf.kind == "metric":
        out.append(f"coordinates = {_list(model.names)}")
        if model.parameters:
            out.append(f"parameters = {_list(p.name for p in model.parameters)}")
        if model.positive:
            out.append(f"positive = {_list(sorted(model.positive))}")
        if model.sample:
            out.append("sample = {" + ", ".join(f"{k} = {_q(v)}" for k, v in model.sample.items()) + "}")
        if mf.roles:
            out.append(f"roles = {_list(mf.roles)}")
        if model.signature != "lorentzian":
            out.append(f"signature = {_q(model.signature or 'none')}")
        if mf.killing_dimension is not None:
            out.append(f"killing_dimension = {mf.killing_dimension}")
        out += ["", "[metric]"]
        n = model.dim
        for i in range(n):
            for j in range(i, n):
                if model.g[i, j] != 0:
                    out.append(f"{_q(f'g({model.names[i]},{model.names[j]})')} = {_q(E.to_string(model.g[i, j]))}")
        if mf.vectors:
            out.append("killing = {" + ", ".join(f"{k} = {_q(v.to_string(model))}" for k, v in mf.vectors.items())
                       + "}")
    elif mf.kind == "algebra":
        if model.parameters:
            out.append(f"parameters = {_list(p.name for p in model.parameters)}")
        if model.sample:
            out.append("sample = {" + ", ".join(f"{k} = {_q(v)}" for k, v in model.sample.items()) + "}")
        out += ["", "[algebra]", f"basis = {_list(model.basis)}", f"isotropy = {_list(model.h)}"]
        if mf.vectors:
            out.append("vectors = {" + ", ".join(f"{k} = {_q(model.format_vector(v))}" for k, v in mf.vectors.items())
                       + "}")
        if mf.constraints:
            out.append("constraints = {" + ", ".join(
                f"{k} = {_list(E.to_string(c) + ' = 0' for c in v)}" for k, v in mf.constraints.items()) + "}")
        if mf.lambdas:
            out.append("lambda = {" + ", ".join(f"{k} = {_q(E.to_string(v))}" for k, v in mf.lambdas.items()) + "}")
        out += ["", "[brackets]"]
        for i in range(model.dim):
            for j in range(i + 1, model.dim):
                vec = [model.c[i, j, k] for k in range(model.dim)]
                if any(x != 0 for x in vec):
                    out.append(f"{_q(f'[{model.basis[i]},{model.basis[j]}]')} = {_q(model.format_vector(vec))}")
        out += ["", "[bilinear]"]
        k = len(model.m)
        for i in range(k):
            for j in range(i, k):
                if model.B[i, j] != 0:
                    out.append(f"{_q(f'B({model.m[i]},{model.m[j]})')} = {_q(E.to_string(model.B[i, j]))}")
        if model.coset_order or model.coset_coordinates:
            out += ["", "[coset]"]
            if model.coset_order:
                out.append(f"order = {_list(model.coset_order)}")
            if model.coset_coordinates:
                out.append(f"coordinates = {_list(model.coset_coordinates)}")
    else:
        out += ["", "[planewave]", f"class = {_q(model.klass)}"]
        for key, mat in (("A0", model.A0), ("f", model.f)):
            rows = ", ".join("[" + ", ".join(_q(E.to_string(x)) for x in row) + "]" for row in mat.tolist())
            out.append(f"{key} = [{rows}]")
        if model.klass == "unclassified":
            for key in "abc":
                out.append(f"{key} = {_q(E.to_string(getattr(model, key)))}")
    return "\n".join(out) + "\n"
