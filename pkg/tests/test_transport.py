import numpy as np
import pytest

from pgeo.errors import TransportError
from pgeo.tensor import VectorField
from pgeo.transport import (Feasibility, KillingTransportState, NumericGeometry, geodesic,
                            homogeneous_geodesic_test_transport, killing_state, killing_transport,
                            null_geodesic_along)

from conftest import fixture

X0 = np.array([1.0, 0.3, 0.2, -0.1])
V0 = np.array([0.5, 0.2, 0.3, 0.1])


def test_flat_geodesic_is_straight():
    m = fixture("minkowski").model
    c = geodesic(m, X0, V0, length=2.0, steps=20)
    assert np.allclose(c.x[-1], X0 + 2.0 * V0, atol=1e-12)
    assert np.allclose(c.v, V0, atol=1e-12)


def test_flat_transport_constant_state():
    m = fixture("minkowski").model
    c = geodesic(m, X0, V0, steps=20)
    A = np.zeros((4, 4))
    end = killing_transport(m, c, KillingTransportState(np.array([1.0, 2.0, 3.0, 4.0]), A))
    assert np.allclose(end.zeta, [1, 2, 3, 4], atol=1e-12)
    assert np.allclose(end.A, 0, atol=1e-12)


def test_flat_rotation_closed_form():
    m = fixture("minkowski").model
    X = VectorField.parse(m, "(y2 + 1/10)*d_y1 - (y1 - 1/5)*d_y2")
    p = X0
    init = killing_state(m, X, p)
    assert np.allclose(init.zeta, 0, atol=1e-14)
    c = geodesic(m, p, V0, steps=10)
    end = killing_transport(m, c, init)
    # ζ(q) = -A (x(q) - x(p)) with A = -∇X
    assert np.allclose(end.zeta, -init.A @ (c.x[-1] - p), atol=1e-12)
    assert np.allclose(end.A, init.A, atol=1e-12)


def test_cahen_wallach_null_field_stationary():
    m = fixture("cahen-wallach").model
    geo = NumericGeometry(m)
    c = geodesic(m, X0, V0, length=0.5, steps=40, geometry=geo)
    init = killing_state(m, VectorField.coordinate(m, "v"), X0, geo)
    end = killing_transport(m, c, init)
    assert np.allclose(end.zeta, [0, 1, 0, 0], atol=1e-10)
    assert np.allclose(end.A, 0, atol=1e-10)


def test_skewness_preserved():
    m = fixture("u2mu-wave").model
    geo = NumericGeometry(m)
    c = geodesic(m, X0, V0, steps=200, geometry=geo)
    X = VectorField.parse(m, "-u*d_u + v*d_v + mu*y1*d_y1 + mu*y2*d_y2")
    init = killing_state(m, X, X0, geo)
    assert init.skew_residual(geo.g(X0)) < 1e-12
    end = killing_transport(m, c, init)
    assert end.skew_residual(geo.g(c.x[-1])) < 1e-7


@pytest.mark.parametrize("name, field", [
    ("u2mu-wave", "-u*d_u + v*d_v + mu*y1*d_y1 + mu*y2*d_y2"),
    ("vacuum-wave", "d_v"),
    ("inhomogeneous-geodesic", "d_v"),
    ("ads", None),
    ("kaigorodov", None),
])
def test_transport_reproduces_killing_fields(name, field):
    mf = fixture(name)
    m = mf.model
    geo = NumericGeometry(m)
    fields = [VectorField.parse(m, field)] if field else list(mf.vectors.values())
    x0 = np.array([float(m.sample.get(c, 0)) for c in m.names])
    v0 = np.linspace(0.1, 0.3, m.dim) * (1 - 2 * (np.arange(m.dim) % 2))
    c = geodesic(m, x0, v0, length=0.5, steps=200, geometry=geo)
    for X in fields:
        end = killing_transport(m, c, killing_state(m, X, x0, geo))
        exact = killing_state(m, X, c.x[-1], geo)
        assert np.allclose(end.zeta, exact.zeta, atol=1e-6), X
        assert np.allclose(end.A, exact.A, atol=1e-6), X


def test_transport_fourth_order():
    m = fixture("u2mu-wave").model
    geo = NumericGeometry(m)
    X = VectorField.parse(m, "-u*d_u + v*d_v + mu*y1*d_y1 + mu*y2*d_y2")
    errors = []
    for steps in (10, 20):
        c = geodesic(m, X0, V0, steps=steps, geometry=geo)
        end = killing_transport(m, c, killing_state(m, X, X0, geo))
        errors.append(np.max(np.abs(end.zeta - killing_state(m, X, c.x[-1], geo).zeta)))
    assert errors[0] / errors[1] >= 8


def test_homogeneity_feasible_for_power_law_wave():
    m = fixture("u2mu-wave").model
    c = null_geodesic_along(m, "u", length=0.5, steps=200)
    res = homogeneous_geodesic_test_transport(m, c)
    assert res.verdict is Feasibility.FEASIBLE and res.homogeneous
    assert res.samples == 32


def test_homogeneity_infeasible_for_example():
    m = fixture("inhomogeneous-geodesic").model
    c = null_geodesic_along(m, "u", length=0.5, steps=200)
    res = homogeneous_geodesic_test_transport(m, c)
    assert res.verdict is Feasibility.INFEASIBLE
    assert res.residual > 1e-6


def test_homogeneity_flat():
    m = fixture("minkowski").model
    c = geodesic(m, X0, V0, steps=50)
    assert homogeneous_geodesic_test_transport(m, c).verdict is Feasibility.FEASIBLE


def test_transport_leaves_domain():
    m = fixture("inhomogeneous-geodesic").model
    with pytest.raises(TransportError):
        geodesic(m, [0.1, 0, 0, 0], [-1.0, 0, 0, 0], length=1.0, steps=20)
