"""Adapted null coordinates, Penrose limits and Ω-scaling diagnostics.

A metric is adapted to the null geodesic γ = (u, 0, 0) when

    g = 2 c du dv + α dv² + 2 β_i dy^i dv + C_ij dy^i dy^j

with c = g_uv a nonzero constant, i.e. g_uu = g_uy = 0 and u is an affine
parameter along γ.  The Penrose limit keeps c and restricts C to γ.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from . import expr as E
from .errors import MetricShapeError, ValidationError
from .expr import Equality, Verdict
from .tensor import CurvaturePack, MetricModel, VectorField, is_killing, pullback

OMEGA = "Omega"
MINOR_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class AdaptedMetric:
    """A MetricModel together with its (u, v, y) roles and extracted blocks."""

    metric: MetricModel
    u: str
    v: str
    ys: tuple
    c_uv: sp.Expr
    alpha: sp.Expr
    beta: tuple
    C: sp.ImmutableMatrix
    along: dict = field(default_factory=dict)

    @property
    def roles(self):
        return (self.u, self.v, *self.ys)

    def gamma_substitution(self):
        """Substitution putting a point on γ: v and y^i at their values along the curve."""
        m = self.metric
        return {m.coordinate(name): sp.sympify(self.along.get(name, 0)) for name in (self.v, *self.ys)}

    def role_of(self, name):
        if name == self.u:
            return "u"
        if name == self.v:
            return "v"
        return "y"


def _parse_roles(m, roles):
    if isinstance(roles, dict):
        u, v = roles["u"], roles["v"]
        ys = tuple(roles.get("y", [c for c in m.names if c not in (u, v)]))
    else:
        roles = list(roles)
        u, v, ys = roles[0], roles[1], tuple(roles[2:])
    names = set(m.names)
    if len({u, v, *ys}) != len(ys) + 2 or {u, v, *ys} != names:
        raise ValidationError(f"roles {u!r}, {v!r}, {list(ys)} must name every coordinate of {m.names} once")
    return u, v, ys


def _require_zero(value, label):
    verdict = E.is_zero(value)
    if verdict is Equality.DIFFERENT:
        raise MetricShapeError(f"{label} ≠ 0 (found {E.to_string(value)})")
    if verdict is Equality.UNDECIDED:
        raise MetricShapeError(f"{label} = 0 could not be decided (found {E.to_string(value)})")


def validate_adapted(m, roles, along=None):
    """Check the adapted shape and extract c, α, β_i, C_ij.

    *roles* is ``(u, v, y1, ...)`` or ``{"u": ..., "v": ..., "y": [...]}``.
    *along* optionally gives the values of v and y^i on γ (default 0).
    """
    u, v, ys = _parse_roles(m, roles)
    iu, iv = m.index(u), m.index(v)
    iy = [m.index(y) for y in ys]
    g = m.g
    _require_zero(g[iu, iu], f"g_{{{u}{u}}}")
    for y, i in zip(ys, iy):
        _require_zero(g[iu, i], f"g_{{{u}{y}}}")
    c = E.simplify(g[iu, iv])
    coords = set(m.coordinates)
    if c.free_symbols & coords:
        raise MetricShapeError(f"g_{{{u}{v}}} must be constant, found {E.to_string(c)}")
    if E.is_zero(c) is not Equality.DIFFERENT:
        raise MetricShapeError(f"g_{{{u}{v}}} must be nonzero")
    C = sp.ImmutableMatrix(len(iy), len(iy), lambda a, b: g[iy[a], iy[b]])
    a = AdaptedMetric(m, u, v, ys, c, E.simplify(g[iv, iv]), tuple(E.simplify(g[iv, i]) for i in iy), C,
                      dict(along or {}))
    _check_positive_definite(a)
    return a


def _check_positive_definite(a):
    m = a.metric
    if not a.ys:
        return
    point = dict(m.sample)
    point.update({k: sp.Rational(v) for k, v in a.along.items()})
    for name in (a.v, *a.ys):
        point.setdefault(name, 0)
    missing = [s.name for s in a.C.free_symbols if s.name not in point]
    if missing:
        return
    values = np.array([[float(E.evaluate(x, point)) for x in row] for row in a.C.tolist()])
    for k in range(1, len(a.ys) + 1):
        minor = np.linalg.det(values[:k, :k])
        if minor <= MINOR_TOLERANCE:
            raise MetricShapeError(f"C is not positive definite on γ (leading minor {k} = {minor:.3g})")


def penrose_limit(a):
    """g_Pl = 2c du dv + C_ij(u, γ) dy^i dy^j, in the same chart."""
    m = a.metric
    subs = a.gamma_substitution()
    n = m.dim
    g = sp.zeros(n, n)
    iu, iv = m.index(a.u), m.index(a.v)
    g[iu, iv] = g[iv, iu] = a.c_uv
    for i, yi in enumerate(a.ys):
        for j, yj in enumerate(a.ys):
            val = E.simplify(a.C[i, j].xreplace(subs))
            if val.has(sp.zoo, sp.nan, sp.oo, -sp.oo):
                raise ValidationError(f"C_{{{yi}{yj}}} is singular on γ")
            g[m.index(yi), m.index(yj)] = val
    sample = dict(m.sample)
    for name in (a.v, *a.ys):
        sample[name] = sp.Rational(a.along.get(name, 0))
    limit = MetricModel(m.coordinates, sp.ImmutableMatrix(g), m.parameters, sample, m.signature,
                        f"{m.name} Penrose limit" if m.name else "Penrose limit", m.positive)
    return validate_adapted(limit, a.roles, a.along)


def omega_pullback(a, omega=OMEGA):
    """g_Ω = Ω⁻² φ_Ω^* g with φ_Ω(u, v, y) = (u, Ω² v, Ω y) about γ.

    Ω is added to the parameters as a positive symbol.
    """
    m = a.metric
    W = E.symbol(omega, True)
    weight = {a.u: 0, a.v: 2, **{y: 1 for y in a.ys}}
    subs = {}
    for name in (a.v, *a.ys):
        x = m.coordinate(name)
        base = sp.sympify(a.along.get(name, 0))
        subs[x] = base + W ** weight[name] * (x - base)
    n = m.dim
    gsub = m.g.xreplace(subs)
    g = sp.Matrix(n, n, lambda i, j: E.simplify(
        W ** (weight[m.names[i]] + weight[m.names[j]] - 2) * gsub[i, j]))
    sample = dict(m.sample)
    sample[omega] = sp.Rational(1)
    return MetricModel(m.coordinates, sp.ImmutableMatrix(g), (*m.parameters, W), sample, m.signature,
                       f"{m.name} Ω-pullback", m.positive | {omega})


def omega_series(model, omega=OMEGA, order=1):
    """Componentwise series of an Ω-pullback in Ω about 0, up to (excluding) Ω^order."""
    W = model.symbols()[omega]
    return model.g.applyfunc(lambda e: E.simplify(sp.series(e, W, 0, order).removeO()) if e.has(W) else e)


def omega_limit(model, omega=OMEGA):
    """Order-0 coefficient of each component of an Ω-pullback (must be regular at Ω = 0)."""
    W = model.symbols()[omega]

    def lim(e):
        if not e.has(W):
            return e
        value = sp.limit(e, W, 0, "+")
        if value.has(sp.oo, -sp.oo, sp.zoo, sp.nan):
            raise ValidationError(f"component {E.to_string(e)} diverges as {omega} → 0")
        return E.simplify(value)

    return model.g.applyfunc(lim)


def limits_agree(a, omega=OMEGA):
    """Verdict that the Ω → 0 limit of the Ω-pullback equals penrose_limit(a) componentwise."""
    target = penrose_limit(a).metric.g
    series = omega_limit(omega_pullback(a, omega), omega)
    n = a.metric.dim
    return E.all_zero(series[i, j] - target[i, j] for i in range(n) for j in range(i, n))


# ---------------------------------------------------------------- scaling weights

LOWER_WEIGHT = {"u": 0, "v": 2, "y": 1}


@dataclass(frozen=True)
class ScalingComponent:
    """One component T^{upper}_{lower} labelled by role letters u, v, y (y may carry an index)."""

    name: str
    upper: tuple
    lower: tuple
    value: sp.Expr
    metric_prefactor: bool = False

    @property
    def weight(self):
        return scaling_weight(self.upper, self.lower, self.metric_prefactor)


def _role(letter):
    return letter[0]


def scaling_weight(upper, lower, metric_prefactor=False):
    """Power of Ω a component picks up under the Penrose rescaling."""
    w = sum(LOWER_WEIGHT[_role(r)] for r in lower) - sum(LOWER_WEIGHT[_role(r)] for r in upper)
    return w - 2 if metric_prefactor else w


class ScalingVerdict(enum.Enum):
    WELL_DEFINED = "well-defined"
    BLOWS_UP = "blows up"
    UNDECIDED = "undecided"


@dataclass
class ScalingProfile:
    weights: dict
    verdict: ScalingVerdict
    offending: list

    @property
    def well_defined(self):
        return self.verdict is ScalingVerdict.WELL_DEFINED


def scaling_profile(components, on_curve=None):
    """Weights per component and the limit verdict.

    The limit is well defined iff every negative-weight component vanishes
    on γ; *on_curve* is a substitution restricting to γ (e.g. v = y = 0).
    """
    weights = {}
    offending = []
    undecided = []
    for comp in components:
        weights[comp.name] = comp.weight
        if comp.weight >= 0:
            continue
        value = sp.sympify(comp.value)
        if on_curve:
            value = value.xreplace(on_curve)
        verdict = E.is_zero(value)
        if verdict is Equality.DIFFERENT:
            offending.append(comp.name)
        elif verdict is not Equality.PROVED:
            undecided.append(comp.name)
    if offending:
        verdict = ScalingVerdict.BLOWS_UP
    elif undecided:
        verdict, offending = ScalingVerdict.UNDECIDED, undecided
    else:
        verdict = ScalingVerdict.WELL_DEFINED
    return ScalingProfile(weights, verdict, offending)


# ---------------------------------------------------------------- coordinate independence

def coordinate_change_invariance(a, e=None, K=0):
    """Recompute the limit in the chart r = u, s = v + K, x = e·y and compare.

    Returns the verdict that both limits agree once the new one is pulled
    back to (u, v, y); γ sits at s = K in the new chart.
    """
    m = a.metric
    k = len(a.ys)
    e = sp.eye(k) if e is None else sp.Matrix(e)
    if e.shape != (k, k) or e.det() == 0:
        raise ValidationError("e must be an invertible square matrix over the y coordinates")
    K = sp.sympify(K)
    einv = e.inv()
    new_names = {a.u: f"{a.u}_r", a.v: f"{a.v}_s", **{y: f"{y}_x" for y in a.ys}}
    positive = {new_names[c] for c in m.positive if c in new_names}
    new_syms = {v: E.symbol(v, v in positive) for v in new_names.values()}
    old_in_new = {a.u: new_syms[new_names[a.u]], a.v: new_syms[new_names[a.v]] - K}
    xs = [new_syms[new_names[y]] for y in a.ys]
    for i, y in enumerate(a.ys):
        old_in_new[y] = sum(einv[i, j] * xs[j] for j in range(k))
    chart = [new_names[c] for c in m.names]
    sample = {new_names[c]: v for c, v in m.sample.items() if c in new_names}
    sample.update({p: v for p, v in m.sample.items() if p not in new_names})
    sample[new_names[a.v]] = sp.Rational(m.sample.get(a.v, 0)) + K
    moved = pullback(m, chart, old_in_new, positive=positive, sample=sample)
    along = {new_names[a.v]: K + sp.sympify(a.along.get(a.v, 0))}
    for i, y in enumerate(a.ys):
        along[new_names[y]] = sum(e[i, j] * sp.sympify(a.along.get(a.ys[j], 0)) for j in range(k))
    b = validate_adapted(moved, [new_names[r] for r in a.roles], along)
    back = {new_names[a.u]: m.coordinate(a.u), new_names[a.v]: m.coordinate(a.v) + K}
    ys = [m.coordinate(y) for y in a.ys]
    for i, y in enumerate(a.ys):
        back[new_names[y]] = sum(e[i, j] * ys[j] for j in range(k))
    lim_b = penrose_limit(b).metric
    returned = pullback(lim_b, m.names, {c.name: back[c.name] for c in lim_b.coordinates},
                        positive=m.positive, sample=dict(m.sample))
    target = penrose_limit(a).metric.g
    n = m.dim
    return E.all_zero(returned.g[i, j] - target[i, j] for i in range(n) for j in range(i, n))


# ---------------------------------------------------------------- hereditary properties

def _antiderivative(e, u):
    """An elementary antiderivative, trying a few equivalent forms of the integrand."""
    e = E.simplify(e)
    if e == 0:
        return sp.S.Zero
    for form in (sp.trigsimp(e), e, sp.simplify(e)):
        integral = sp.integrate(form, u)
        if not integral.has(sp.Integral):
            return E.simplify(sp.trigsimp(integral))
    return None


def plane_wave_killing_fields(a):
    """The Killing fields every Rosen plane wave carries, verified one by one.

    ∂_v, ∂_{y^i}, and for each i the field (∫ C⁻¹ e_i du)^j ∂_{y^j} - (y^i / c) ∂_v
    when the integral is elementary; ∂_u is tried as an ansatz.
    """
    m = a.metric
    u = m.coordinate(a.u)
    found = []
    candidates = [(f"d_{a.v}", VectorField.coordinate(m, a.v))]
    candidates += [(f"d_{y}", VectorField.coordinate(m, y)) for y in a.ys]
    Cinv = a.C.inv() if a.ys else sp.zeros(0, 0)
    for i, yi in enumerate(a.ys):
        comps = {name: sp.S.Zero for name in m.names}
        ok = True
        for j, yj in enumerate(a.ys):
            integral = _antiderivative(Cinv[j, i], u)
            if integral is None:
                ok = False
                break
            comps[yj] = integral
        if ok:
            comps[a.v] = -m.coordinate(yi) / a.c_uv
            candidates.append((f"B_{yi}", VectorField(tuple(comps[name] for name in m.names))))
    candidates.append((f"d_{a.u}", VectorField.coordinate(m, a.u)))
    for label, X in candidates:
        if is_killing(m, X) is Verdict.TRUE:
            found.append((label, X))
    return found


@dataclass
class HereditaryReport:
    rows: list
    limit: AdaptedMetric
    limit_killing: list
    source_killing_dimension: int | None

    def as_dict(self):
        return {
            "rows": [{"property": p, "source": s.value, "limit": l.value, "implied": i.value}
                     for p, s, l, i in self.rows],
            "limit_metric": self.limit.metric.line_element(),
            "limit_killing_fields": [label for label, _ in self.limit_killing],
            "limit_killing_dimension": len(self.limit_killing),
            "source_killing_dimension": self.source_killing_dimension,
        }


def _implied(source, target):
    """Status of 'source ⇒ target' for a single instance."""
    if source is Verdict.FALSE:
        return Verdict.TRUE
    if source is Verdict.TRUE:
        return target
    return Verdict.UNDECIDED


def hereditary_report(a, source_killing_dimension=None):
    """Curvature properties of g next to those of its Penrose limit."""
    lim = penrose_limit(a)
    src = CurvaturePack(a.metric)
    dst = CurvaturePack(lim.metric)
    rows = []
    einstein = src.is_einstein
    rows.append(("Einstein -> limit Ricci-flat", einstein, dst.is_ricci_flat, _implied(einstein, dst.is_ricci_flat)))
    cf = src.is_conformally_flat
    rows.append(("conformally flat -> limit conformally flat", cf, dst.is_conformally_flat,
                 _implied(cf, dst.is_conformally_flat)))
    ls = src.is_locally_symmetric
    rows.append(("locally symmetric -> limit locally symmetric", ls, dst.is_locally_symmetric,
                 _implied(ls, dst.is_locally_symmetric)))
    rows.append(("flat limit", Verdict.of(einstein is Verdict.TRUE and cf is Verdict.TRUE), dst.is_flat,
                 _implied(Verdict.of(einstein is Verdict.TRUE and cf is Verdict.TRUE), dst.is_flat)))
    return HereditaryReport(rows, lim, plane_wave_killing_fields(lim), source_killing_dimension)
