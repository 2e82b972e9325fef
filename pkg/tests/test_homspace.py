import itertools

import pytest
import sympy as sp

from pgeo import expr as E
from pgeo.errors import JacobiError, NonReductiveError, UnsupportedSpectrumError, ValidationError
from pgeo.expr import Verdict
from pgeo.homspace import (LieAlgebraModel, canonical_geodesic_test, coset_killing_field, coset_metric,
                           exp_closed_form, find_null_geodesic_vectors, geodesic_vector_test, homogeneous_structure,
                           isotropy_representation, lambda_equals, maurer_cartan, structure_contraction,
                           structure_scaling, transitive_subalgebra, validate_algebra)
from pgeo.penrose import ScalingVerdict
from pgeo.tensor import curvature, is_killing

from conftest import ALGEBRA_FIXTURES, fixture

REDUCTIVE = [n for n in ALGEBRA_FIXTURES if n != "u2mu-isometries"]


def abelian(n=3):
    return LieAlgebraModel.from_table([f"m{i}" for i in range(n)], {}, B=sp.diag(-1, *[1] * (n - 1)),
                                      coset_coordinates=[f"x{i}" for i in range(n)])


@pytest.mark.parametrize("name", REDUCTIVE)
def test_fixtures_validate(name):
    rep = validate_algebra(fixture(name).model)
    assert rep.antisymmetric is Verdict.TRUE
    assert rep.jacobi is Verdict.TRUE
    assert rep.reductive is Verdict.TRUE
    assert rep.invariant is Verdict.TRUE


def test_jacobi_failure_names_triple():
    bad = LieAlgebraModel.from_table(["a", "b", "c"], {("a", "b"): "c", ("b", "c"): "b"}, B=sp.eye(3))
    with pytest.raises(JacobiError) as info:
        validate_algebra(bad)
    assert info.value.triple == ("a", "b", "c")


def test_inconsistent_antisymmetry_rejected():
    with pytest.raises(ValidationError):
        LieAlgebraModel.from_table(["a", "b"], {("a", "b"): "a", ("b", "a"): "a"}, B=sp.eye(2))


def test_abelian_is_symmetric():
    rep = validate_algebra(abelian())
    assert rep.symmetric is Verdict.TRUE


def test_non_reductive_split():
    # [h, e] = h puts [𝔥, 𝔪] inside 𝔥
    model = LieAlgebraModel.from_table(["h", "e", "f"], {("h", "e"): "h"}, h=["h"],
                                       B=sp.Matrix([[0, 1], [1, 0]]))
    rep = validate_algebra(model)
    assert rep.reductive is Verdict.FALSE
    with pytest.raises(NonReductiveError):
        validate_algebra(model, require_reductive=True)
    with pytest.raises(NonReductiveError):
        homogeneous_structure(model)
    with pytest.raises(NonReductiveError):
        coset_metric(model)


def test_isotropy_representation():
    reps = isotropy_representation(fixture("komrakov-1.1-2").model)
    M = reps["e1"]
    assert M == sp.Matrix([[0, 0, -1, 0], [0, 0, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0]])


def test_family_one_geodesic():
    mf = fixture("komrakov-1.1-2")
    res = geodesic_vector_test(mf.model, mf.vectors["family1"])
    assert res.verdict is Verdict.TRUE
    assert res.is_null is Verdict.TRUE
    assert lambda_equals(res, mf.lambdas["family1"]) is Verdict.TRUE


def test_family_two_geodesic_under_constraint():
    mf = fixture("komrakov-1.1-2")
    res = geodesic_vector_test(mf.model, mf.vectors["family2"], mf.constraints["family2"])
    assert res.verdict is Verdict.TRUE
    assert res.is_null is Verdict.TRUE
    assert lambda_equals(res, mf.lambdas["family2"], mf.constraints["family2"]) is Verdict.TRUE


def test_family_two_printed_form_not_geodesic():
    mf = fixture("komrakov-1.1-2")
    model = mf.model
    X = model.parse_vector("A*u2 + B*u3 + C*u4")
    assert geodesic_vector_test(model, X, mf.constraints["family2"]) is None


def test_five_dimensional_vector():
    mf = fixture("komrakov-5d")
    model = mf.model
    res = geodesic_vector_test(model, mf.vectors["U"])
    assert res.verdict is Verdict.TRUE
    assert res.lam == 0
    assert res.is_null is Verdict.TRUE
    assert res.is_absolutely_homogeneous is Verdict.TRUE
    assert res.is_canonical is Verdict.FALSE


def test_non_null_lambda_zero_for_m_vectors_of_symmetric_space():
    res = geodesic_vector_test(abelian(), sp.Matrix([0, 1, 0]))
    assert res.lam == 0 and res.is_null is Verdict.FALSE


def test_zero_m_part_rejected():
    model = fixture("komrakov-1.1-2").model
    with pytest.raises(ValidationError):
        geodesic_vector_test(model, model.unit("e1"))


def test_search_roots_satisfy_geodesic_equation():
    # the families are continuous, so roots are generic (approximate) points on them
    model = fixture("komrakov-1.1-2").model
    rep = find_null_geodesic_vectors(model, starts=400, seed=1)
    assert rep.converged > 0 and rep.results
    for r in rep.results:
        if r.exact:
            assert r.verdict is Verdict.TRUE and r.is_null is Verdict.TRUE
            continue
        X = sp.Matrix([float(x) for x in r.vector])
        Xm = model.m_part(X)
        assert abs(float(model.form(Xm, Xm))) < 1e-8
        for z in model.basis:
            Z = model.unit(z)
            lhs = model.form(Xm, model.m_part(model.bracket(X, Z)))
            assert abs(float(lhs - r.lam * model.form(Xm, model.m_part(Z)))) < 1e-8


def test_search_is_reproducible():
    model = fixture("komrakov-1.1-2").model
    a = find_null_geodesic_vectors(model, starts=100, seed=3)
    b = find_null_geodesic_vectors(model, starts=100, seed=3)
    assert [list(r.vector) for r in a.results] == [list(r.vector) for r in b.results]


def test_search_abelian_absolute():
    rep = find_null_geodesic_vectors(abelian(), require_absolute=True, starts=50)
    assert rep.converged == 50
    assert all(r.is_absolutely_homogeneous is Verdict.TRUE for r in rep.results)


@pytest.mark.parametrize("name", REDUCTIVE)
def test_structure_identities(name):
    model = fixture(name).model
    s = homogeneous_structure(model)
    k = len(model.m)
    mi = model.m_index
    for i, j in itertools.product(range(k), repeat=2):
        br = sp.Matrix([model.c[mi[i], mi[j], mi[r]] for r in range(k)])
        assert all(E.is_zero(x) is E.Equality.PROVED for x in s.tau[i][j] + br)
        assert all(E.is_zero(x) is E.Equality.PROVED for x in s.U[i][j] - s.U[j][i])
        # T(X, Y) = ½[X, Y]_𝔪 + U(X, Y)
        assert all(E.is_zero(x) is E.Equality.PROVED for x in s.T[i][j] - br / 2 - s.U[i][j])
    low = s.lowered()
    antisym = all(E.is_zero(low[i, j, a] + low[j, i, a]) is E.Equality.PROVED
                  for i, j, a in itertools.product(range(k), repeat=3))
    assert (s.is_naturally_reductive is Verdict.TRUE) == antisym


def test_structure_of_abelian_vanishes():
    s = homogeneous_structure(abelian())
    assert s.components() == {}
    assert s.is_naturally_reductive is Verdict.TRUE


def test_five_dimensional_contraction_and_scaling():
    mf = fixture("komrakov-5d")
    s = homogeneous_structure(mf.model)
    c = structure_contraction(s, mf.vectors["U"])
    assert E.equal(c[0], 1) and E.equal(c[3], -sp.sqrt(2) / 2)
    assert all(x == 0 for i, x in enumerate(c) if i not in (0, 3))
    assert structure_scaling(s, mf.vectors["U"]).verdict is ScalingVerdict.BLOWS_UP
    out = canonical_geodesic_test(mf.model, mf.vectors["U"])
    assert out["canonical"] is Verdict.FALSE and out["structure_limit"] is ScalingVerdict.BLOWS_UP


def test_transitive_subalgebra():
    model = fixture("komrakov-1.1-2").model
    sub = transitive_subalgebra(model, {u: model.unit(u) for u in model.m})
    assert sub.h == ()
    assert sub.B == model.B
    assert validate_algebra(sub).jacobi is Verdict.TRUE
    with pytest.raises(ValidationError):
        transitive_subalgebra(model, {"u1": model.unit("u1"), "u3": model.unit("u3")})


def test_exp_closed_form_series_oracle():
    s = sp.Symbol("s")
    for M in (sp.Matrix([[0, 1], [0, 0]]), sp.Matrix([[0, 1], [1, 0]]), sp.Matrix([[0, -1], [1, 0]]),
              sp.diag(2, 0, -1)):
        closed = exp_closed_form(M, s)
        series = sum((M ** k * s ** k / sp.factorial(k) for k in range(14)), sp.zeros(M.shape[0]))
        diff = (closed - series).applyfunc(lambda e: sp.series(e, s, 0, 12).removeO())
        assert diff.applyfunc(sp.expand) == sp.zeros(*M.shape)


def test_exp_closed_form_rejects_irrational_spectrum():
    with pytest.raises(UnsupportedSpectrumError):
        exp_closed_form(sp.Matrix([[0, 1, 0], [0, 0, 1], [2, 0, 0]]), sp.Symbol("s"))


def test_heisenberg_coset_metric():
    model = fixture("heisenberg").model
    m = coset_metric(model)
    a, b, c = m.coordinates
    expected = sp.Matrix([[1 - b ** 2, 0, -b], [0, 1, 0], [-b, 0, -1]])
    assert (m.g - expected).applyfunc(E.simplify) == sp.zeros(3, 3)
    for gen in model.basis:
        assert is_killing(m, coset_killing_field(model, model.unit(gen))) is Verdict.TRUE


def test_abelian_coset_metric_flat():
    assert curvature(coset_metric(abelian())).is_flat is Verdict.TRUE


def test_five_dimensional_coset_metric():
    model = fixture("komrakov-5d").model
    xs, theta = maurer_cartan(model)
    assert all(th.shape == (model.dim, 1) for th in theta)
    m = coset_metric(model)
    assert m.dim == 5
    xi = coset_killing_field(model, model.unit("e1"))
    assert is_killing(m, xi) is Verdict.TRUE


def _labels(components):
    return {"".join(k[1:] if k.startswith("u") else k for k in key): v for key, v in components.items()}


def test_five_dimensional_structure_table():
    s = homogeneous_structure(fixture("komrakov-5d").model)
    assert _labels(s.components()) == {"414": 1, "221": 1, "243": 1, "423": 1,
                                       "212": -1, "234": -1, "432": -1, "441": -1}
    # T is B-skew in its last two slots, so no T_ijj can be nonzero
    low = s.lowered()
    assert all(low[i, j, j] == 0 for i in range(5) for j in range(5))


def test_transitive_subalgebra_structure_table():
    mf = fixture("komrakov-5d")
    model, U = mf.model, mf.vectors["U"]
    sub = transitive_subalgebra(model, {"U": U, **{n: model.unit(n) for n in ("u1", "u2", "u4", "u5")}})
    br = sub.bracket(sub.unit("U"), sub.unit("u1"))
    assert E.equal(br[0], 2) and E.equal(br[2], -3) and E.equal(br[4], -sp.sqrt(6))
    table = _labels(homogeneous_structure(sub).components())
    r = sp.sqrt(2) / 2
    for key, value in {"U12": -1, "441": -1, "221": 1, "21U": -1, "212": -1, "414": 1, "U24": r, "24U": r}.items():
        assert E.equal(table[key], value), key
