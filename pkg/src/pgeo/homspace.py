"""Reductive homogeneous spaces from Lie-algebra data.

A model is a basis of 𝔤 with structure constants ``c[i, j, k]`` meaning
[e_i, e_j] = Σ_k c[i, j, k] e_k, an isotropy subset 𝔥 of the basis, its
complement 𝔪 (the remaining basis elements) and a symmetric bilinear form
B on 𝔪.

Component convention for homogeneous structures: T_ijk = B(T(m_i, m_j), m_k).
Geodesic vectors satisfy B(X_𝔪, [X, Z]_𝔪) = λ B(X_𝔪, Z_𝔪) for every Z ∈ 𝔤.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy as sp

from . import expr as E
from .errors import JacobiError, NonReductiveError, UnsupportedSpectrumError, ValidationError
from .expr import Equality, Verdict
from .penrose import ScalingComponent, scaling_profile
from .tensor import MetricModel, VectorField


def _zeros3(n):
    arr = np.empty((n, n, n), dtype=object)
    arr[...] = sp.S.Zero
    return arr


@dataclass(frozen=True, eq=False)
class LieAlgebraModel:
    """Structure constants, isotropy split and bilinear form of a homogeneous model."""

    basis: tuple
    c: np.ndarray
    h: tuple
    B: sp.ImmutableMatrix
    parameters: tuple = ()
    positive: frozenset = frozenset()
    coset_order: tuple = ()
    coset_coordinates: tuple = ()
    name: str = ""
    sample: dict = field(default_factory=dict)

    @classmethod
    def from_table(cls, basis, brackets, h=(), B=None, parameters=(), positive=(), coset_order=(),
                   coset_coordinates=(), name="", sample=None):
        """Build from ``{(a, b): {k: coefficient}}`` or ``{(a, b): "expression in basis names"}``.

        Missing entries are zero; giving both (a, b) and (b, a) requires them
        to be negatives of each other.
        """
        basis = tuple(basis)
        positive = frozenset(positive)
        params = {p: E.symbol(p, p in positive) for p in parameters}
        index = {b: i for i, b in enumerate(basis)}
        n = len(basis)
        c = _zeros3(n)
        seen = {}
        for (a, b), value in brackets.items():
            if a not in index or b not in index:
                raise ValidationError(f"bracket [{a},{b}] names an element outside the basis")
            vec = _vector_from(value, basis, params, positive)
            i, j = index[a], index[b]
            if i == j:
                if any(E.is_zero(x) is not Equality.PROVED for x in vec):
                    raise ValidationError(f"[{a},{a}] must vanish")
                continue
            if (j, i) in seen:
                other = seen[(j, i)]
                for k in range(n):
                    if E.is_zero(vec[k] + other[k]) is not Equality.PROVED:
                        raise ValidationError(f"antisymmetry violated: [{a},{b}] != -[{b},{a}]")
            seen[(i, j)] = vec
            for k in range(n):
                c[i, j, k] = vec[k]
                c[j, i, k] = -vec[k]
        m_names = [b for b in basis if b not in h]
        if B is None:
            Bm = sp.eye(len(m_names))
        elif isinstance(B, dict):
            Bm = sp.zeros(len(m_names))
            mi = {b: i for i, b in enumerate(m_names)}
            for (a, b), v in B.items():
                val = _scalar(v, params, positive)
                Bm[mi[a], mi[b]] = Bm[mi[b], mi[a]] = val
        else:
            Bm = sp.Matrix(B).applyfunc(lambda v: _scalar(v, params, positive))
        return cls(basis, c, tuple(h), sp.ImmutableMatrix(Bm), tuple(params.values()), positive,
                   tuple(coset_order), tuple(coset_coordinates), name, dict(sample or {}))

    def __post_init__(self):
        n = len(self.basis)
        if len(set(self.basis)) != n:
            raise ValidationError("basis names must be distinct")
        unknown = [x for x in self.h if x not in self.basis]
        if unknown:
            raise ValidationError(f"isotropy names {unknown} are not basis elements")
        k = len(self.m)
        if self.B.shape != (k, k):
            raise ValidationError(f"B is {self.B.shape}, 𝔪 has dimension {k}")
        if self.coset_order and sorted(self.coset_order) != sorted(self.m):
            raise ValidationError("coset order must list every element of 𝔪 once")

    # ------------------------------------------------------------ indexing

    @property
    def dim(self):
        return len(self.basis)

    @property
    def m(self):
        return tuple(b for b in self.basis if b not in self.h)

    @cached_property
    def h_index(self):
        return [self.basis.index(b) for b in self.h]

    @cached_property
    def m_index(self):
        return [self.basis.index(b) for b in self.m]

    def index(self, name):
        return self.basis.index(name)

    def unit(self, name):
        v = sp.zeros(self.dim, 1)
        v[self.index(name)] = 1
        return v

    def symbols(self):
        return {p.name: p for p in self.parameters}

    def parse_vector(self, text, extra_positive=()):
        """Read ``u2 + (1/sqrt(2))*u3 + B*e1``; unknown identifiers become real parameters."""
        params = dict(self.symbols())
        return sp.Matrix(_vector_from(text, self.basis, params, self.positive | frozenset(extra_positive)))

    # ------------------------------------------------------------ algebra

    def bracket(self, X, Y):
        n = self.dim
        c = self.c
        out = sp.zeros(n, 1)
        for i in range(n):
            if X[i] == 0:
                continue
            for j in range(n):
                if Y[j] == 0:
                    continue
                for k in range(n):
                    if c[i, j, k] != 0:
                        out[k] += X[i] * Y[j] * c[i, j, k]
        return out.applyfunc(E.simplify)

    def ad(self, name_or_vector):
        """Matrix of ad(X) on 𝔤: column j is [X, e_j]."""
        X = self.unit(name_or_vector) if isinstance(name_or_vector, str) else name_or_vector
        n = self.dim
        cols = [self.bracket(X, self.unit(b)) for b in self.basis]
        return sp.Matrix(n, n, lambda k, j: cols[j][k])

    def m_part(self, X):
        return sp.Matrix([X[i] for i in self.m_index])

    def h_part(self, X):
        return sp.Matrix([X[i] for i in self.h_index])

    def from_m(self, Xm):
        out = sp.zeros(self.dim, 1)
        for a, i in enumerate(self.m_index):
            out[i] = Xm[a]
        return out

    def form(self, Xm, Ym):
        """B on 𝔪-coordinate vectors."""
        return E.simplify((sp.Matrix(Xm).T * self.B * sp.Matrix(Ym))[0, 0])

    def format_vector(self, X):
        return E.linear_combination([E.simplify(c) for c in X], self.basis)


def _scalar(value, params, positive):
    if isinstance(value, str):
        return E.parse(value, positive=positive, symbols=params)
    return E.as_expression(value)


def _vector_from(value, basis, params, positive):
    n = len(basis)
    if isinstance(value, dict):
        vec = [sp.S.Zero] * n
        for k, coeff in value.items():
            if k not in basis:
                raise ValidationError(f"{k!r} is not a basis element")
            vec[basis.index(k)] = _scalar(coeff, params, positive)
        return vec
    if isinstance(value, (list, tuple, sp.MatrixBase)):
        return [E.as_expression(x) for x in value]
    marks = {b: sp.Symbol(f"_basis_{b}") for b in basis}
    table = {**params, **marks}
    e = sp.expand(E.parse(str(value), positive=positive, symbols=table))
    vec = [E.simplify(sp.diff(e, marks[b])) for b in basis]
    rest = E.simplify(e - sum(vec[i] * marks[b] for i, b in enumerate(basis)))
    if rest != 0 or any(v.free_symbols & set(marks.values()) for v in vec):
        raise ValidationError(f"{value!r} is not a linear combination of {list(basis)}")
    return vec


# ---------------------------------------------------------------- validation

@dataclass
class AlgebraReport:
    antisymmetric: Verdict
    jacobi: Verdict
    subalgebra: Verdict
    nondegenerate: Verdict
    reductive: Verdict
    symmetric: Verdict
    invariant: Verdict
    messages: list

    def as_dict(self):
        keys = ("antisymmetric", "jacobi", "subalgebra", "nondegenerate", "reductive", "symmetric", "invariant")
        return {**{k: getattr(self, k).value for k in keys}, "messages": list(self.messages)}

    @property
    def undecided(self):
        return any(v is Verdict.UNDECIDED for v in self.as_verdicts())

    def as_verdicts(self):
        return [self.antisymmetric, self.jacobi, self.subalgebra, self.nondegenerate, self.reductive,
                self.symmetric, self.invariant]


def _combine(verdicts):
    verdicts = list(verdicts)
    if any(v is Verdict.FALSE for v in verdicts):
        return Verdict.FALSE
    if all(v is Verdict.TRUE for v in verdicts):
        return Verdict.TRUE
    return Verdict.UNDECIDED


def jacobi_residual(model, i, j, k):
    e = [model.unit(model.basis[x]) for x in (i, j, k)]
    br = model.bracket
    return (br(e[0], br(e[1], e[2])) + br(e[1], br(e[2], e[0])) + br(e[2], br(e[0], e[1]))).applyfunc(E.simplify)


def validate_algebra(model, require_reductive=False):
    """Check every structural identity; hard failures raise, properties are reported.

    Raises JacobiError naming the first failing triple, ValidationError for
    a non-subalgebra 𝔥, a degenerate B or a non-invariant B, and
    NonReductiveError if *require_reductive* and [𝔥, 𝔪] ⊄ 𝔪.
    """
    n = model.dim
    c = model.c
    messages = []
    anti = E.all_zero(c[i, j, k] + c[j, i, k] for i in range(n) for j in range(n) for k in range(n))
    if anti is Verdict.FALSE:
        raise ValidationError("structure constants are not antisymmetric")
    jac = []
    for i, j, k in itertools.combinations(range(n), 3):
        res = jacobi_residual(model, i, j, k)
        v = E.all_zero(res)
        if v is Verdict.FALSE:
            raise JacobiError((model.basis[i], model.basis[j], model.basis[k]), model.format_vector(res))
        jac.append(v)
    jacobi = _combine(jac)
    hi, mi = model.h_index, model.m_index
    sub = E.all_zero(c[a, b, k] for a in hi for b in hi for k in mi)
    if sub is Verdict.FALSE:
        raise ValidationError("𝔥 is not a subalgebra")
    det = E.simplify(model.B.det()) if model.B.shape[0] else sp.S.One
    nondeg = Verdict.of(E.is_zero(det) is Equality.DIFFERENT)
    if nondeg is Verdict.FALSE:
        raise ValidationError("B is degenerate on 𝔪")
    reductive = E.all_zero(c[a, b, k] for a in hi for b in mi for k in hi)
    if reductive is Verdict.FALSE:
        messages.append("[𝔥, 𝔪] ⊄ 𝔪: the split is not reductive")
        if require_reductive:
            raise NonReductiveError("the isotropy split is not reductive")
    symmetric = E.all_zero(c[a, b, k] for a in mi for b in mi for k in mi)
    if reductive is Verdict.TRUE:
        inv = []
        for a in hi:
            M = _ad_on_m(model, a)
            S = (model.B * M + M.T * model.B).applyfunc(E.simplify)
            v = E.all_zero(S)
            if v is Verdict.FALSE:
                raise ValidationError(f"B is not invariant under ad({model.basis[a]})")
            inv.append(v)
        invariant = _combine(inv)
    else:
        invariant = Verdict.UNDECIDED
    return AlgebraReport(anti, jacobi, sub, nondeg, reductive, symmetric, invariant, messages)


def _ad_on_m(model, a):
    mi = model.m_index
    k = len(mi)
    return sp.Matrix(k, k, lambda r, s: model.c[a, mi[s], mi[r]])


def _require_reductive(model):
    c = model.c
    v = E.all_zero(c[a, b, k] for a in model.h_index for b in model.m_index for k in model.h_index)
    if v is not Verdict.TRUE:
        raise NonReductiveError(f"{model.name or 'model'}: [𝔥, 𝔪] ⊄ 𝔪, structure operations need a reductive split")


def isotropy_representation(model, quotient=False):
    """ad(h)|𝔪 for each isotropy generator, as matrices in the 𝔪 basis (checked B-skew).

    With *quotient* the representation on 𝔤/𝔥 is returned for non-reductive
    splits instead of raising.
    """
    try:
        _require_reductive(model)
    except NonReductiveError:
        if not quotient:
            raise
    reps = {}
    for a in model.h_index:
        M = _ad_on_m(model, a)
        S = (model.B * M + M.T * model.B).applyfunc(E.simplify)
        if E.all_zero(S) is Verdict.FALSE:
            raise ValidationError(f"ad({model.basis[a]}) is not B-skew on 𝔪")
        reps[model.basis[a]] = sp.ImmutableMatrix(M)
    return reps


# ---------------------------------------------------------------- geodesic vectors

@dataclass
class GeodesicVectorResult:
    vector: sp.Matrix
    lam: sp.Expr
    verdict: Verdict
    is_null: Verdict
    is_absolutely_homogeneous: Verdict
    is_canonical: Verdict
    residuals: list = field(default_factory=list)
    exact: bool = True

    def as_dict(self, model):
        return {
            "vector": model.format_vector(self.vector),
            "lambda": E.to_string(self.lam),
            "geodesic": self.verdict.value,
            "null": self.is_null.value,
            "absolutely_homogeneous": self.is_absolutely_homogeneous.value,
            "canonical": self.is_canonical.value,
            "exact": self.exact,
        }


def _constraint_gens(constraints):
    out = []
    for con in constraints or ():
        if isinstance(con, tuple):
            poly, var = con
        else:
            poly = con
            var = sorted(poly.free_symbols, key=lambda s: s.name)[-1]
        out.append((sp.expand(poly), var))
    return out


def reduce_modulo(e, constraints):
    """Numerator of *e* reduced by each polynomial constraint (remainder in its variable)."""
    e = sp.together(E.simplify(e))
    num, den = sp.fraction(e)
    num = sp.expand(num)
    for poly, var in _constraint_gens(constraints):
        if num.has(var):
            num = sp.rem(num, poly, var)
    return E.simplify(num)


def parse_constraint(text, symbols):
    """``"A^2 + B^2 = C^2"`` → polynomial lhs - rhs."""
    if "=" in text:
        lhs, rhs = text.split("=", 1)
        return E.parse(lhs, symbols=symbols) - E.parse(rhs, symbols=symbols)
    return E.parse(text, symbols=symbols)


def geodesic_vector_test(model, X, constraints=None):
    """Solve B(X_𝔪, [X, Z]_𝔪) = λ B(X_𝔪, Z_𝔪) over basis Z for λ.

    Returns a GeodesicVectorResult, or None when the system is inconsistent.
    *constraints* are polynomial relations (expression = 0) among symbolic
    coefficients, used to reduce residuals.
    """
    X = sp.Matrix(X).applyfunc(E.simplify)
    Xm = model.m_part(X)
    if all(E.is_zero(x) is Equality.PROVED for x in Xm):
        raise ValidationError("X_𝔪 = 0 does not define a geodesic")
    pairs = []
    for z in model.basis:
        Z = model.unit(z)
        p = model.form(Xm, model.m_part(model.bracket(X, Z)))
        q = model.form(Xm, model.m_part(Z))
        pairs.append((p, q))
    nonzero = [(p, q) for p, q in pairs if E.is_zero(q) is Equality.DIFFERENT]
    if not nonzero:
        raise ValidationError("B(X_𝔪, ·) vanishes on 𝔤; B is degenerate")
    p0, q0 = min(nonzero, key=lambda pq: (sp.count_ops(pq[1]), sp.count_ops(pq[0])))
    lam = E.simplify(p0 / q0)
    residuals = [reduce_modulo(p - lam * q, constraints) for p, q in pairs]
    verdict = E.all_zero(residuals)
    if verdict is Verdict.FALSE:
        return None
    lam_red = _reduce_value(lam, constraints)
    null = E.all_zero([reduce_modulo(model.form(Xm, Xm), constraints)])
    absolute = E.all_zero([reduce_modulo(lam, constraints)])
    canonical = E.all_zero(model.h_part(X))
    return GeodesicVectorResult(X, lam_red, verdict, null, absolute, canonical, residuals)


def _reduce_value(lam, constraints):
    """Simplest representative of λ modulo constraints among a few rewrites (display only)."""
    if not constraints:
        return lam
    return E.simplify(lam)


def lambda_equals(result, expected, constraints=None):
    return E.all_zero([reduce_modulo(result.lam - expected, constraints)])


# ---------------------------------------------------------------- numeric search

RADICALS = [sp.sqrt(2), sp.sqrt(3), sp.sqrt(5), sp.sqrt(6), sp.sqrt(sp.Rational(3, 2))]
_RADICAL_VALUES = [(sp.S.One, 1.0)] + [(r, float(r)) for r in RADICALS]


def _numeric_tensors(model):
    n = model.dim
    sub = {p: sp.Rational(model.sample[p.name]) for p in model.parameters if p.name in model.sample}
    c = np.array([[[float(sp.sympify(model.c[i, j, k]).subs(sub)) for k in range(n)] for j in range(n)]
                  for i in range(n)])
    Bf = np.zeros((n, n))
    B = np.array(model.B.subs(sub).tolist(), dtype=float)
    mi = model.m_index
    Bf[np.ix_(mi, mi)] = B
    # F_z(X) = X^T M_z X - λ (Bf X)_z with M_z[a, b] = Σ_k Bf[a, k] c[b, z, k]
    M = np.einsum("ak,bzk->zab", Bf, c)
    return Bf, M


@dataclass
class SearchReport:
    results: list
    starts: int
    converged: int
    seed: int
    tolerance: float


def find_null_geodesic_vectors(model, require_absolute=False, starts=10_000, seed=0, tol=1e-10,
                               iterations=60, null=True):
    """Multi-start damped Gauss–Newton search for (null) geodesic vectors.

    Unknowns are the coefficients of X over the whole basis plus λ (fixed
    to 0 when *require_absolute*).  X_𝔪 is normalised to Euclidean unit
    length.  Converged roots are rationalised against a small radical
    dictionary and re-verified symbolically; roots that do not rationalise
    are kept as approximate results.  Deduplication is projective in X_𝔪.
    """
    n = model.dim
    if n > 8:
        raise ValidationError("search is limited to dimension 8")
    Bf, M = _numeric_tensors(model)
    mi = np.array(model.m_index)
    rng = np.random.default_rng(seed)
    nv = n if require_absolute else n + 1
    Y = rng.standard_normal((starts, nv))
    if not require_absolute:
        Y[:, n] *= 2.0

    def residual(Y):
        X = Y[:, :n]
        lam = np.zeros(len(Y)) if require_absolute else Y[:, n]
        BX = X @ Bf
        F = np.einsum("sa,zab,sb->sz", X, M, X) - lam[:, None] * BX
        parts = [F, (np.sum(X[:, mi] ** 2, axis=1) - 1.0)[:, None]]
        if null:
            parts.append(np.einsum("sa,ab,sb->s", X, Bf, X)[:, None])
        return np.concatenate(parts, axis=1)

    def jacobian(Y):
        X = Y[:, :n]
        lam = np.zeros(len(Y)) if require_absolute else Y[:, n]
        dF = np.einsum("zab,sb->sza", M, X) + np.einsum("zba,sb->sza", M, X) - lam[:, None, None] * Bf[None]
        rows = [dF]
        dn = np.zeros((len(Y), 1, n))
        dn[:, 0, mi] = 2 * X[:, mi]
        rows.append(dn)
        if null:
            rows.append((2 * X @ Bf)[:, None, :])
        J = np.concatenate(rows, axis=1)
        if not require_absolute:
            dl = np.zeros((len(Y), J.shape[1], 1))
            dl[:, :n, 0] = -(X @ Bf)
            J = np.concatenate([J, dl], axis=2)
        return J

    mu = np.full(len(Y), 1e-3)
    for _ in range(iterations):
        F = residual(Y)
        J = jacobian(Y)
        JT = np.transpose(J, (0, 2, 1))
        A = JT @ J + mu[:, None, None] * np.eye(nv)[None]
        g = np.einsum("sij,sj->si", JT, F)
        step = -np.linalg.solve(A, g[..., None])[..., 0]
        trial = Y + step
        better = np.linalg.norm(residual(trial), axis=1) < np.linalg.norm(F, axis=1)
        Y = np.where(better[:, None], trial, Y)
        mu = np.where(better, mu * 0.3, mu * 10.0)
        mu = np.clip(mu, 1e-15, 1e8)
    final = np.max(np.abs(residual(Y)), axis=1)
    ok = final < tol
    roots = Y[ok]
    reps = []
    kept = np.empty((0, len(mi)))
    for y in roots:
        xm = y[mi]
        k = int(np.argmax(np.abs(xm) > 1e-8))
        y = y.copy()
        # X → -X keeps the quadratic term, so λ changes sign with X
        y *= np.sign(xm[k])
        if len(kept) and np.min(np.max(np.abs(kept - y[mi]), axis=1)) < 1e-6:
            continue
        reps.append(y)
        kept = np.vstack([kept, y[mi]])
    results = [_promote(model, y, require_absolute) for y in reps]
    return SearchReport(results, starts, int(ok.sum()), seed, tol)


def _rationalize(x, max_denominator=64):
    """x as q·r with q a small-denominator rational and r from RADICALS (or 1); None if no match."""
    if abs(x) < 1e-12:
        return sp.S.Zero
    x = float(x)
    for r, rv in _RADICAL_VALUES:
        q = Fraction(x / rv).limit_denominator(max_denominator)
        if abs(float(q) * rv - x) < 1e-9 * max(1.0, abs(x)):
            return sp.Rational(q.numerator, q.denominator) * r
    return None


def _promote(model, y, require_absolute):
    n = model.dim
    coeffs = [_rationalize(v) for v in y[:n]]
    res = None
    if all(c is not None for c in coeffs):
        try:
            res = geodesic_vector_test(model, sp.Matrix(coeffs))
        except ValidationError:
            res = None
    if res is not None and res.verdict is Verdict.TRUE and res.is_null is Verdict.TRUE:
        return res
    lam = sp.Float(0.0) if require_absolute else sp.Float(y[n], 12)
    Xf = sp.Matrix([sp.Float(v, 12) for v in y[:n]])
    return GeodesicVectorResult(Xf, lam, Verdict.UNDECIDED, Verdict.UNDECIDED,
                                Verdict.of(require_absolute) if require_absolute else Verdict.UNDECIDED,
                                Verdict.of(all(abs(y[i]) < 1e-9 for i in model.h_index)), exact=False)


# ---------------------------------------------------------------- homogeneous structures

@dataclass
class HomogeneousStructure:
    """T, τ and U on 𝔪, stored as T[i][j] = T(m_i, m_j) in 𝔪 coordinates."""

    model: LieAlgebraModel
    T: list
    tau: list
    U: list

    @property
    def is_naturally_reductive(self):
        k = len(self.U)
        return E.all_zero(self.U[i][j][a] for i in range(k) for j in range(k) for a in range(k))

    def components(self):
        """Nonzero T_ijk = B(T(m_i, m_j), m_k), keyed by 1-based 𝔪 labels."""
        model = self.model
        k = len(model.m)
        out = {}
        for i, j, a in itertools.product(range(k), repeat=3):
            ek = sp.zeros(k, 1)
            ek[a] = 1
            val = model.form(self.T[i][j], ek)
            if val != 0:
                out[(model.m[i], model.m[j], model.m[a])] = val
        return out

    def lowered(self):
        model = self.model
        k = len(model.m)
        arr = _zeros3(k)
        for i, j, a in itertools.product(range(k), repeat=3):
            arr[i, j, a] = model.form(self.T[i][j], sp.eye(k)[:, a])
        return arr

    def apply(self, Xm, Ym):
        k = len(self.T)
        out = sp.zeros(k, 1)
        for i in range(k):
            for j in range(k):
                if Xm[i] != 0 and Ym[j] != 0:
                    out += Xm[i] * Ym[j] * self.T[i][j]
        return out.applyfunc(E.simplify)


def homogeneous_structure(model):
    """T = ½[·,·]_𝔪 + U with 2B(U(X,Y),Z) = B(X,[Z,Y]_𝔪) + B([Z,X]_𝔪,Y); τ(X,Y) = T(Y,X) - T(X,Y)."""
    _require_reductive(model)
    k = len(model.m)
    if k and E.is_zero(E.simplify(model.B.det())) is not Equality.DIFFERENT:
        raise ValidationError("B is not invertible on 𝔪")
    Binv = model.B.inv() if k else sp.zeros(0, 0)
    mi = model.m_index
    basis = [sp.eye(k)[:, a] for a in range(k)]

    def brm(a, b):
        return sp.Matrix([model.c[mi[a], mi[b], mi[r]] for r in range(k)])

    brackets = [[brm(a, b) for b in range(k)] for a in range(k)]
    T, tau, U = [], [], []
    for i in range(k):
        Ti, Ui = [], []
        for j in range(k):
            low = sp.Matrix([(model.form(basis[i], brackets[z][j]) + model.form(brackets[z][i], basis[j])) / 2
                             for z in range(k)])
            u = (Binv * low).applyfunc(E.simplify)
            Ui.append(u)
            Ti.append((brackets[i][j] / 2 + u).applyfunc(E.simplify))
        T.append(Ti)
        U.append(Ui)
    for i in range(k):
        tau.append([(T[j][i] - T[i][j]).applyfunc(E.simplify) for j in range(k)])
    return HomogeneousStructure(model, T, tau, U)


def structure_contraction(s, X):
    """T(X_𝔪, X_𝔪) as an 𝔪-coordinate vector."""
    Xm = s.model.m_part(sp.Matrix(X))
    return s.apply(Xm, Xm)


# ---------------------------------------------------------------- adapted frames and scaling

def adapted_frame(model, Um):
    """Frame (e_u, e_v, e_y...) of 𝔪 with e_u = U_𝔪 null, e_v null, B(e_u, e_v) = 1, e_y ⊥ both."""
    k = len(model.m)
    Um = sp.Matrix(Um)
    if E.is_zero(model.form(Um, Um)) is not Equality.PROVED:
        raise ValidationError("adapted frames need a null U_𝔪")
    cols = [sp.eye(k)[:, a] for a in range(k)]
    pairing = [model.form(col, Um) for col in cols]
    best = max(range(k), key=lambda a: abs(float(pairing[a])) if pairing[a].is_number else 0)
    if pairing[best] == 0:
        raise ValidationError("U_𝔪 is B-orthogonal to 𝔪")
    W = cols[best] / pairing[best]
    N = (W - model.form(W, W) / 2 * Um).applyfunc(E.simplify)
    frame = [Um, N]
    ys = []
    for a in range(k):
        if a == best:
            continue
        y = cols[a] - model.form(cols[a], N) * Um - model.form(cols[a], Um) * N
        for prev in ys:
            y = y - model.form(y, prev) / model.form(prev, prev) * prev
        y = y.applyfunc(E.simplify)
        if all(x == 0 for x in y):
            continue
        ys.append(y)
    frame += ys
    F = sp.Matrix.hstack(*frame)
    if F.shape != (k, k) or E.simplify(F.det()) == 0:
        raise ValidationError("could not complete an adapted frame")
    roles = ["u", "v"] + [f"y{i + 1}" for i in range(len(ys))]
    return roles, F


def structure_scaling_components(s, X):
    """T^a_{bc} in the adapted frame of X_𝔪, labelled for penrose.scaling_profile."""
    model = s.model
    roles, F = adapted_frame(model, model.m_part(sp.Matrix(X)))
    Finv = F.inv().applyfunc(E.simplify)
    k = F.shape[0]
    comps = []
    for b, c in itertools.product(range(k), repeat=2):
        val = Finv * s.apply(F[:, b], F[:, c])
        for a in range(k):
            comps.append(ScalingComponent(f"T^{roles[a]}_{roles[b]}{roles[c]}", (roles[a],), (roles[b], roles[c]),
                                          E.simplify(val[a])))
    return comps


def structure_scaling(s, X):
    return scaling_profile(structure_scaling_components(s, X))


def canonical_geodesic_test(model, X):
    """Canonical flag (X ∈ 𝔪) and the homogeneous-structure limit verdict along X."""
    res = geodesic_vector_test(model, X)
    if res is None:
        raise ValidationError("X is not a geodesic vector")
    out = {"geodesic": res.verdict, "canonical": res.is_canonical, "null": res.is_null, "lambda": res.lam}
    if res.is_null is Verdict.TRUE:
        s = homogeneous_structure(model)
        out["structure_limit"] = structure_scaling(s, X).verdict
        out["contraction"] = structure_contraction(s, X)
    return out


def transitive_subalgebra(model, vectors, name=""):
    """Model on the span of *vectors* (name → 𝔤-vector) with trivial isotropy and B'(X,Y) = B(X_𝔪, Y_𝔪)."""
    names = list(vectors)
    V = sp.Matrix.hstack(*[sp.Matrix(vectors[v]) for v in names])
    r = len(names)
    if V.rank() != r:
        raise ValidationError("vectors are linearly dependent")
    c = _zeros3(r)
    pinv = (V.T * V).inv() * V.T
    for i, j in itertools.combinations(range(r), 2):
        b = model.bracket(V[:, i], V[:, j])
        coords = (pinv * b).applyfunc(E.simplify)
        if E.all_zero((V * coords - b).applyfunc(E.simplify)) is not Verdict.TRUE:
            raise ValidationError(f"[{names[i]},{names[j]}] leaves the span: not a subalgebra")
        for k in range(r):
            c[i, j, k] = coords[k]
            c[j, i, k] = -coords[k]
    for i in range(r):
        for k in range(r):
            c[i, i, k] = sp.S.Zero
    Bp = sp.Matrix(r, r, lambda i, j: model.form(model.m_part(V[:, i]), model.m_part(V[:, j])))
    return LieAlgebraModel(tuple(names), c, (), sp.ImmutableMatrix(Bp), model.parameters, model.positive,
                           name=name or f"{model.name} transitive subalgebra", sample=dict(model.sample))


# ---------------------------------------------------------------- coset metrics

def minimal_polynomial(M, t):
    n = M.shape[0]
    powers = [sp.eye(n)]
    for k in range(1, n + 1):
        powers.append((powers[-1] * M).applyfunc(sp.expand))
        A = sp.Matrix.hstack(*[p.reshape(n * n, 1) for p in powers[:-1]])
        target = powers[-1].reshape(n * n, 1)
        try:
            sol, params = A.gauss_jordan_solve(target)
        except ValueError:
            continue
        sol = sol.subs({p: 0 for p in params})
        return sp.Poly(t ** k - sum(sol[i] * t ** i for i in range(k)), t)
    raise UnsupportedSpectrumError("minimal polynomial not found")


def exp_closed_form(M, s, label="generator"):
    """exp(s·M) in closed form when the minimal polynomial factors into t^k, (t - a)^k and t² - c over ℚ."""
    n = M.shape[0]
    M = sp.Matrix(M)
    if all(x == 0 for x in M):
        return sp.eye(n)
    t = sp.Symbol("t")
    p = minimal_polynomial(M, t)
    if any(not sp.sympify(coef).is_rational for coef in p.all_coeffs()):
        raise UnsupportedSpectrumError(f"ad({label}) has a minimal polynomial with irrational coefficients")
    _, factors = sp.factor_list(p.as_expr(), t)
    blocks = []
    for f, mult in factors:
        fp = sp.Poly(f, t)
        deg = fp.degree()
        if deg == 1:
            a = -fp.all_coeffs()[1] / fp.all_coeffs()[0]
            N = M - a * sp.eye(n)
            F = sp.exp(a * s) * sum(((s ** j / sp.factorial(j)) * N ** j for j in range(mult)), sp.zeros(n))
        elif deg == 2 and mult == 1 and fp.all_coeffs()[1] == 0:
            lead, _, c0 = fp.all_coeffs()
            c = -c0 / lead
            if c > 0:
                r = sp.sqrt(c)
                F = sp.cosh(r * s) * sp.eye(n) + sp.sinh(r * s) / r * M
            else:
                r = sp.sqrt(-c)
                F = sp.cos(r * s) * sp.eye(n) + sp.sin(r * s) / r * M
        else:
            raise UnsupportedSpectrumError(f"ad({label}) has minimal-polynomial factor {f} outside the dictionary")
        blocks.append((sp.Poly(f ** mult, t), F))
    if len(blocks) == 1:
        return blocks[0][1].applyfunc(E.simplify)
    total = sp.zeros(n)
    for idx, (q, F) in enumerate(blocks):
        rest = sp.Poly(sp.prod([b[0].as_expr() for k, b in enumerate(blocks) if k != idx]), t)
        a_, b_, g = sp.gcdex(rest.as_expr(), q.as_expr(), t)
        e = sp.Poly(sp.expand(a_ * rest.as_expr() / g), t)
        P = sum((coef * M ** i for i, coef in enumerate(reversed(e.all_coeffs()))), sp.zeros(n))
        total += P * F
    return total.applyfunc(lambda x: E.simplify(sp.expand(x)))


def maurer_cartan(model, coordinates=None):
    """θ(∂_{x_i}) = Ad(exp(-x_N m_N))⋯Ad(exp(-x_{i+1} m_{i+1}))(m_i) for σ = exp(x_1 m_1)⋯exp(x_N m_N).

    Returns (coordinate symbols, list of 𝔤-vectors θ_i).
    """
    order = list(model.coset_order or model.m)
    names = list(coordinates or model.coset_coordinates or [f"x{i + 1}" for i in range(len(order))])
    xs = [E.symbol(nm) for nm in names]
    s = sp.Symbol("s")
    exps = {}
    for j, gen in enumerate(order):
        exps[j] = exp_closed_form(model.ad(gen), s, gen)
    theta = []
    for i, gen in enumerate(order):
        v = model.unit(gen)
        for j in range(i + 1, len(order)):
            v = exps[j].subs(s, -xs[j]) * v
        theta.append(v.applyfunc(E.simplify))
    return xs, theta


def coset_metric(model, coordinates=None):
    """The G-invariant metric B(θ_𝔪, θ_𝔪) in the coordinates of the coset section."""
    _require_reductive(model)
    xs, theta = maurer_cartan(model, coordinates)
    k = len(xs)
    thm = [model.m_part(th) for th in theta]
    g = sp.Matrix(k, k, lambda a, b: E.simplify(model.form(thm[a], thm[b])))
    return MetricModel(tuple(xs), sp.ImmutableMatrix(g), model.parameters,
                       {x.name: 0 for x in xs} | dict(model.sample), signature=None,
                       name=f"{model.name} coset metric", positive=model.positive)


def coset_killing_field(model, X, coordinates=None):
    """Fundamental vector field of X ∈ 𝔤: ξ = θ_𝔪⁻¹ (Ad(σ⁻¹) X)_𝔪."""
    xs, theta = maurer_cartan(model, coordinates)
    order = list(model.coset_order or model.m)
    s = sp.Symbol("s")
    v = sp.Matrix(X)
    for j, gen in enumerate(order):
        v = exp_closed_form(model.ad(gen), s, gen).subs(s, -xs[j]) * v
    Th = sp.Matrix.hstack(*[model.m_part(th) for th in theta])
    xi = Th.LUsolve(model.m_part(v))
    return VectorField(tuple(E.simplify(x) for x in xi))
