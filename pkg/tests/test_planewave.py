import numpy as np
import pytest
import sympy as sp

from pgeo import expr as E
from pgeo.errors import NonReductiveError, ValidationError
from pgeo.expr import Verdict
from pgeo.homspace import homogeneous_structure, isotropy_representation, validate_algebra
from pgeo.penrose import penrose_limit
from pgeo.planewave import (SINGULAR, SMOOTH, UNCLASSIFIED, PlaneWaveData, bo_isometry_algebra, build_bo_metric,
                            cahen_wallach_normal_form, random_data, recognize_profile)
from pgeo.tensor import CurvaturePack, VectorField, commutator, is_killing

from conftest import adapted, fixture

DRAWS = 8


@pytest.mark.parametrize("seed", range(DRAWS))
def test_smooth_class_naturally_reductive(seed):
    d = random_data(np.random.default_rng(seed), klass=SMOOTH)
    model = bo_isometry_algebra(d)
    assert validate_algebra(model).jacobi is Verdict.TRUE
    s = homogeneous_structure(model)
    assert s.is_naturally_reductive is Verdict.TRUE


@pytest.mark.parametrize("seed", range(DRAWS))
def test_singular_class_not_naturally_reductive(seed):
    d = random_data(np.random.default_rng(100 + seed), klass=SINGULAR)
    model = bo_isometry_algebra(d)
    assert validate_algebra(model).jacobi is Verdict.TRUE
    assert homogeneous_structure(model).is_naturally_reductive is Verdict.FALSE


@pytest.mark.parametrize("seed", range(3))
def test_smooth_f_zero_locally_symmetric(seed):
    d = random_data(np.random.default_rng(200 + seed), klass=SMOOTH)
    m = build_bo_metric(PlaneWaveData(d.A0, None, SMOOTH))
    assert CurvaturePack(m).is_locally_symmetric is Verdict.TRUE


def test_smooth_with_rotation_not_locally_symmetric():
    m = build_bo_metric(fixture("bo-smooth").model)
    assert CurvaturePack(m).is_locally_symmetric is Verdict.FALSE


def test_brinkmann_ricci_only_plus_plus():
    d = PlaneWaveData(sp.Matrix([[1, 2], [2, -5]]), sp.Matrix([[0, 1], [-1, 0]]))
    m = build_bo_metric(d)
    Ric = CurvaturePack(m).ricci
    assert E.equal(Ric[0, 0], 4) is E.Equality.PROVED  # -tr A
    assert all(Ric[i, j] == 0 for i in range(4) for j in range(4) if (i, j) != (0, 0))


def test_singular_metric_profile():
    m = build_bo_metric(fixture("bo-singular").model)
    xp, z1 = m.coordinates[0], m.coordinates[2]
    assert E.equal(m.g[0, 0], -sp.Rational(3, 16) * (z1 ** 2 + m.coordinates[3] ** 2) / xp ** 2)


def test_cahen_wallach_normal_form():
    assert cahen_wallach_normal_form(sp.Matrix([[2, 1], [1, 2]])) == [3, 1]
    assert cahen_wallach_normal_form(sp.diag(-1, 4, 0)) == [4, 0, -1]


def test_plane_wave_data_validation():
    with pytest.raises(ValidationError):
        PlaneWaveData(sp.Matrix([[1, 2], [0, 1]]), None)
    with pytest.raises(ValidationError):
        PlaneWaveData(sp.eye(2), sp.Matrix([[0, 1], [1, 0]]))
    with pytest.raises(ValidationError):
        PlaneWaveData(sp.eye(2), None, SMOOTH, 1, 0, 1)
    with pytest.raises(ValidationError):
        PlaneWaveData(sp.eye(2), None, UNCLASSIFIED)
    d = PlaneWaveData(sp.eye(2), None, UNCLASSIFIED, 1, 1, 2)
    assert (d.a, d.b, d.c) == (1, 1, 2)


def test_recognize_cahen_wallach():
    match = recognize_profile(adapted("cahen-wallach"))
    assert match.kind == SMOOTH
    assert match.A0 == sp.diag(-1, 4)
    assert match.verified is Verdict.TRUE


def test_recognize_power_law_round_trip():
    a = adapted("u2mu-wave")
    match = recognize_profile(penrose_limit(a))
    mu = a.metric.symbols()["mu"]
    assert match.kind == SINGULAR
    assert E.equal(match.parameters["p"], mu)
    assert all(E.equal(match.A0[i, i], mu * (mu - 1)) for i in range(2))
    assert match.verified is Verdict.TRUE
    assert match.witness_killing is Verdict.TRUE


def test_recognize_example_limit():
    match = recognize_profile(penrose_limit(adapted("inhomogeneous-geodesic")))
    assert match.kind == SINGULAR
    assert match.parameters["p"] == sp.Rational(1, 4)
    assert match.verified is Verdict.TRUE
    assert match.witness_killing is Verdict.TRUE


def test_recognize_flat():
    match = recognize_profile(penrose_limit(adapted("ads")))
    assert match.kind == "flat"
    assert match.A0 == sp.zeros(2)


def test_recognize_off_diagonal_unrecognized():
    from pgeo.penrose import validate_adapted
    from pgeo.tensor import MetricModel
    m = MetricModel.from_line_element("2*du*dv + dy1^2 + u*dy1*dy2 + dy2^2", ["u", "v", "y1", "y2"],
                                      positive=["u"], sample={"u": 1})
    assert recognize_profile(penrose_limit(validate_adapted(m, ["u", "v", "y1", "y2"]))).kind == "unrecognized"


def test_brinkmann_and_rosen_curvature_agree():
    a = adapted("vacuum-wave")
    match = recognize_profile(a)
    assert match.verified is Verdict.TRUE
    assert CurvaturePack(match.brinkmann).is_ricci_flat is Verdict.TRUE
    assert CurvaturePack(a.metric).is_ricci_flat is Verdict.TRUE


def test_power_law_isometry_table_matches_vector_fields():
    mf = fixture("u2mu-isometries")
    model = mf.model
    m = fixture("u2mu-wave").model
    F = "(u^(1 - 2*mu) - 1)/(1 - 2*mu)"
    fields = {"X": "-u*d_u + v*d_v + mu*y1*d_y1 + mu*y2*d_y2", "V": "d_v", "Y1": "d_y1", "Y2": "d_y2",
              "h1": f"{F}*d_y1 - 2*y1*d_v", "h2": f"{F}*d_y2 - 2*y2*d_v"}
    fields = {k: VectorField.parse(m, v) for k, v in fields.items()}
    mu_alg = model.symbols()["mu"]
    mu = m.symbols()["mu"]
    for name, X in fields.items():
        assert is_killing(m, X) is Verdict.TRUE, name
        if name.startswith("h"):
            assert all(x.subs({m.coordinate("u"): 1, m.coordinate("y1"): 0, m.coordinate("y2"): 0}) == 0 for x in X)
    names = list(model.basis)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            br = model.bracket(model.unit(a), model.unit(b))
            comps = [sp.S.Zero] * m.dim
            for k, c in enumerate(names):
                coeff = br[k].xreplace({mu_alg: mu})
                comps = [p + coeff * q for p, q in zip(comps, fields[c])]
            got = commutator(m, fields[a], fields[b])
            assert all(E.is_zero(p - q) is E.Equality.PROVED for p, q in zip(got, comps)), (a, b)


def test_power_law_split_refuses_structure():
    model = fixture("u2mu-isometries").model
    assert validate_algebra(model).reductive is Verdict.FALSE
    with pytest.raises(NonReductiveError):
        homogeneous_structure(model)
    with pytest.raises(NonReductiveError):
        isotropy_representation(model)
    assert set(isotropy_representation(model, quotient=True)) == {"h1", "h2"}
