"""Numeric geodesics and Killing transport.

The Killing transport connection on TM ⊕ so(TM) is

    D_X(ζ, A) = (∇_X ζ + A(X), ∇_X A + R(X, ζ)),   A_ζ = -∇ζ,

whose parallel sections are exactly the Killing fields.  Everything here
integrates with classical RK4 at a fixed step.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .errors import TransportError
from .tensor import CurvaturePack

DEFAULT_STEPS_PER_UNIT = 10_000


class NumericGeometry:
    """Lambdified metric, connection and curvature of a MetricModel.

    Parameter values come from the model's sample assignment unless
    overridden by *params*.  Every evaluator accepts either a single point
    (shape ``(n,)``) or a batch of points (shape ``(T, n)``).
    """

    def __init__(self, m, params=None, pack=None):
        self.metric = m
        self.pack = pack or CurvaturePack(m)
        values = {p: m.sample[p.name] for p in m.parameters if p.name in m.sample}
        for k, v in (params or {}).items():
            values[m.symbols()[k]] = v
        missing = [p.name for p in m.parameters if p not in values]
        if missing:
            raise TransportError(f"no numeric value for parameters {missing}")
        self._subs = {p: sp.Rational(str(v)) if not isinstance(v, float) else v for p, v in values.items()}
        self._fns = {}
        self._accel = None

    def _fn(self, key, array):
        if key not in self._fns:
            arr = np.asarray(array, dtype=object)
            flat = [sp.sympify(e).subs(self._subs) if self._subs else sp.sympify(e) for e in arr.ravel()]
            fn = sp.lambdify(self.metric.coordinates, flat, modules="numpy", cse=True)
            self._fns[key] = (fn, arr.shape)
        return self._fns[key]

    def _eval(self, key, array, x):
        fn, shape = self._fn(key, array)
        x = np.asarray(x, dtype=float)
        values = fn(*x.T)
        if x.ndim == 1:
            return np.array(values, dtype=float).reshape(shape)
        out = np.empty((len(values), x.shape[0]))
        for i, val in enumerate(values):
            out[i] = val
        return np.moveaxis(out, 0, -1).reshape((x.shape[0], *shape))

    def g(self, x):
        return self._eval("g", self.metric.g.tolist(), x)

    def christoffel(self, x):
        return self._eval("christoffel", self.pack.christoffel, x)

    def riemann(self, x):
        return self._eval("riemann", self.pack.riemann, x)

    def riemann_derivative(self, x):
        return self._eval("dR", self.pack.riemann_derivative, x)

    def vector(self, components, x):
        return self._eval(("vector", tuple(components)), list(components), x)

    def matrix(self, key, matrix, x):
        return self._eval(("matrix", key), matrix.tolist(), x)

    def acceleration(self, x, v):
        """-Γ^a_{bc} v^b v^c at a single point, from one fused lambdified function."""
        if self._accel is None:
            m = self.metric
            n = m.dim
            vs = sp.symbols(f"_v0:{n}", real=True)
            G = self.pack.christoffel
            exprs = []
            for a in range(n):
                e = -sum(G[a, b, c] * vs[b] * vs[c] for b in range(n) for c in range(n) if G[a, b, c] != 0)
                exprs.append(sp.sympify(e).subs(self._subs) if self._subs else sp.sympify(e))
            self._accel = sp.lambdify((*m.coordinates, *vs), exprs, modules="math", cse=True)
        return np.array(self._accel(*x, *v), dtype=float)


@dataclass
class Curve:
    """Samples of a numeric geodesic: parameter, positions, velocities, accelerations."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    geometry: NumericGeometry = field(repr=False)
    a: np.ndarray | None = None

    @property
    def steps(self):
        return len(self.t) - 1

    @property
    def length(self):
        return float(self.t[-1] - self.t[0])

    def midpoints(self):
        """Cubic Hermite positions and velocities at the step midpoints (fourth-order accurate)."""
        h = self.length / self.steps
        a = self.a
        if a is None:
            G = self.geometry.christoffel(self.x)
            a = -np.einsum("tabc,tb,tc->ta", G, self.v, self.v)
        x0, x1, v0, v1 = self.x[:-1], self.x[1:], self.v[:-1], self.v[1:]
        xm = 0.5 * (x0 + x1) + h * (v0 - v1) / 8.0
        vm = 0.5 * (v0 + v1) + h * (a[:-1] - a[1:]) / 8.0
        return xm, vm


@dataclass
class KillingTransportState:
    """The pair (ζ(p), A(p)); A acts as A^μ_ν on tangent vectors."""

    zeta: np.ndarray
    A: np.ndarray
    point: np.ndarray | None = None

    def skew_residual(self, g):
        """max |g(A·X, Y) + g(X, A·Y)| over basis vectors."""
        gA = g @ self.A
        return float(np.max(np.abs(gA + gA.T)))


def _check_domain(m, x):
    if not np.all(np.isfinite(x)):
        raise TransportError("integration produced non-finite values (step-size underflow near a singularity)")
    for i, c in enumerate(m.coordinates):
        if c.is_positive and x[i] <= 0:
            raise TransportError(f"curve left the chart domain {c.name} > 0 at {c.name} = {x[i]:.3g}")


def _rk4(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def geodesic(m, x0, v0, length=1.0, steps=None, geometry=None):
    """Integrate the geodesic equation with RK4 at a fixed step."""
    geo = geometry or NumericGeometry(m)
    n = m.dim
    steps = steps or max(1, int(round(DEFAULT_STEPS_PER_UNIT * abs(length))))
    h = length / steps
    y = np.concatenate([np.asarray(x0, float), np.asarray(v0, float)])
    positive = [i for i, c in enumerate(m.coordinates) if c.is_positive]

    def f(y):
        x, v = y[:n], y[n:]
        for i in positive:
            if not x[i] > 0:
                _check_domain(m, x)
        try:
            acc = geo.acceleration(x, v)
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise TransportError(f"connection could not be evaluated at {x}: {exc}") from exc
        return np.concatenate([v, acc])

    ys = np.empty((steps + 1, 2 * n))
    ys[0] = y
    for i in range(steps):
        y = _rk4(f, y, h)
        ys[i + 1] = y
    _check_domain(m, y[:n])
    return Curve(np.linspace(0.0, length, steps + 1), ys[:, :n].copy(), ys[:, n:].copy(), geo)


def _generator(G, R, v):
    """Matrices L(t) with d/dt (ζ, A) = L (ζ, A), batched over the leading axis.

    The state vector is ζ (n entries) followed by A^μ_ν in row-major order.
    """
    T, n = v.shape
    D = n + n * n
    L = np.zeros((T, D, D))
    Gv = np.einsum("tabc,tb->tac", G, v)          # Γ^a_{bc} v^b  -> [a, c]
    L[:, :n, :n] = -Gv
    # -A^μ_ν V^ν
    for mu in range(n):
        L[:, mu, n + mu * n:n + (mu + 1) * n] = -v
    # dA^μ_ν = -Γ^μ_{λκ}V^λ A^κ_ν + Γ^κ_{λν}V^λ A^μ_κ - R^μ_{νλκ}V^λ ζ^κ
    eye = np.eye(n)
    blockA = (-np.einsum("tmk,nj->tmnkj", Gv, eye)
              + np.einsum("tkn,mi->tmnik", Gv, eye))
    L[:, n:, n:] = blockA.reshape(T, n * n, n * n)
    L[:, n:, :n] = -np.einsum("tmnlk,tl->tmnk", R, v).reshape(T, n * n, n)
    return L


CHUNK = 512


def _transport_many(curve, Z0, A0, record=None):
    """Transport k states (columns of Z0 / last axis of A0) along *curve*.

    The transport equations are linear in (ζ, A) with coefficients fixed by
    the curve, so the coefficient matrices are evaluated in batches at the
    step ends and Hermite midpoints and RK4 is applied to the linear system.
    Returns final (Z, A) and, if *record* lists step indices, the states
    (x, v, Z, A) at those steps.
    """
    geo = curve.geometry
    m = geo.metric
    n = m.dim
    k = Z0.shape[1]
    h = curve.length / curve.steps
    Y = np.concatenate([Z0, A0.reshape(n * n, k)])
    xm, vm = curve.midpoints()
    wanted = set(record or ())
    snaps = {}

    def snap(i, Y):
        snaps[i] = (curve.x[i].copy(), curve.v[i].copy(), Y[:n].copy(), Y[n:].reshape(n, n, k).copy())

    def gen(x, v):
        if not np.all(np.isfinite(x)):
            _check_domain(m, x[0])
        with np.errstate(all="ignore"):
            L = _generator(geo.christoffel(x), geo.riemann(x), v)
        if not np.all(np.isfinite(L)):
            raise TransportError("transport coefficients are not finite along the curve")
        return L

    if 0 in wanted:
        snap(0, Y)
    for lo in range(0, curve.steps, CHUNK):
        hi = min(curve.steps, lo + CHUNK)
        Le = gen(curve.x[lo:hi + 1], curve.v[lo:hi + 1])
        Lm = gen(xm[lo:hi], vm[lo:hi])
        for j in range(hi - lo):
            L0, L1, L2 = Le[j], Lm[j], Le[j + 1]
            k1 = L0 @ Y
            k2 = L1 @ (Y + 0.5 * h * k1)
            k3 = L1 @ (Y + 0.5 * h * k2)
            k4 = L2 @ (Y + h * k3)
            Y = Y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if lo + j + 1 in wanted:
                snap(lo + j + 1, Y)
    if not np.all(np.isfinite(Y)):
        raise TransportError("transported state is not finite")
    return (Y[:n].copy(), Y[n:].reshape(n, n, k).copy()), snaps


def killing_transport(m, curve, init):
    """Parallel transport of (ζ, A) under D along *curve*; returns the end state."""
    Z0 = np.asarray(init.zeta, float).reshape(-1, 1)
    A0 = np.asarray(init.A, float).reshape(m.dim, m.dim, 1)
    (Z, A), _ = _transport_many(curve, Z0, A0)
    return KillingTransportState(Z[:, 0], A[:, :, 0], curve.x[-1].copy())


def killing_state(m, X, point, geometry=None):
    """(X(p), A_X(p)) for a symbolic vector field X."""
    from .tensor import killing_endomorphism

    geo = geometry or NumericGeometry(m)
    A = killing_endomorphism(m, X, geo.pack)
    zeta = geo.vector(X.components, point)
    return KillingTransportState(zeta, geo.matrix(("A", tuple(X.components)), A, point), np.asarray(point, float))


class Feasibility(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNDECIDED = "undecided"


@dataclass
class HomogeneityResult:
    verdict: Feasibility
    residual: float
    samples: int
    initial_state: KillingTransportState | None = None

    @property
    def homogeneous(self):
        return self.verdict is Feasibility.FEASIBLE


FEASIBLE_BELOW = 1e-9
INFEASIBLE_ABOVE = 1e-6


def homogeneous_geodesic_test_transport(m, curve, samples=32):
    """Decide whether a Killing field tangent to the geodesic *curve* exists.

    Unknowns are the initial pairs (ζ(0), A(0)) with ζ(0) = γ'(0) (the
    normalisation f(0) = 1) and A(0) g-skew.  At *samples* points along the
    curve the transported pair must satisfy

    * ζ ∥ γ'  (all 2x2 minors of (ζ, γ') vanish), and
    * L_ζ R = 0, the integrability condition every Killing pair obeys
      (transport along one curve alone cannot certify a Killing field).

    The least-squares residual of this linear system, relative to the size
    of its right-hand side, decides: < 1e-9 feasible, > 1e-6 infeasible,
    otherwise undecided.
    """
    geo = curve.geometry
    n = m.dim
    g0 = geo.g(curve.x[0])
    ginv0 = np.linalg.inv(g0)
    pairs = list(itertools.combinations(range(n), 2))
    k = n + len(pairs)
    Z0 = np.zeros((n, k))
    A0 = np.zeros((n, n, k))
    Z0[:, :n] = np.eye(n)
    for s, (i, j) in enumerate(pairs):
        W = np.zeros((n, n))
        W[i, j], W[j, i] = 1.0, -1.0
        A0[:, :, n + s] = ginv0 @ W
    idx = sorted(set(np.linspace(0, curve.steps, samples).round().astype(int)))
    _, snaps = _transport_many(curve, Z0, A0, record=idx)
    rows = []
    for i in idx:
        x, v, Z, A = snaps[i]
        for a, b in pairs:
            rows.append(Z[a] * v[b] - Z[b] * v[a])
        R = geo.riemann(x)
        dR = geo.riemann_derivative(x)
        lie = (np.einsum("eabcd,es->abcds", dR, Z)
               + np.einsum("ebcd,aes->abcds", R, A)
               - np.einsum("aecd,ebs->abcds", R, A)
               - np.einsum("abed,ecs->abcds", R, A)
               - np.einsum("abce,eds->abcds", R, A))
        rows.extend(lie.reshape(-1, k))
    M = np.array(rows)
    v0 = curve.v[0]
    rhs = -M[:, :n] @ v0
    scale = np.linalg.norm(rhs)
    if scale < 1e-300:
        a = np.zeros(k - n)
        residual = 0.0
    else:
        a, *_ = np.linalg.lstsq(M[:, n:], rhs, rcond=None)
        residual = float(np.linalg.norm(M[:, n:] @ a - rhs) / scale)
    if residual < FEASIBLE_BELOW:
        verdict = Feasibility.FEASIBLE
    elif residual > INFEASIBLE_ABOVE:
        verdict = Feasibility.INFEASIBLE
    else:
        verdict = Feasibility.UNDECIDED
    state = KillingTransportState(v0.copy(), np.einsum("abs,s->ab", A0[:, :, n:], a), curve.x[0].copy())
    return HomogeneityResult(verdict, residual, len(idx), state)


def null_geodesic_along(m, role_u, length=1.0, steps=None, geometry=None):
    """The curve through the sample point with initial velocity ∂/∂(role_u)."""
    x0 = np.array([float(m.sample.get(c, 0)) for c in m.names])
    v0 = np.zeros(m.dim)
    v0[m.index(role_u)] = 1.0
    return geodesic(m, x0, v0, length, steps, geometry)
