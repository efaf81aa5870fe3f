import numpy as np
import pytest

from routhred import expr as ex
from routhred.errors import PreconditionError
from routhred.geometry import (
    Chart,
    VectorField,
    alpha_map,
    alpha_map_inverse,
    beta_map,
    beta_map_inverse,
    complete_lift,
    cotangent_lift,
    cotangent_omega,
    evaluate_jacobian,
    flip_kappa,
    hamiltonian_field,
    momentum_function,
    subtract_over_base_velocity,
    tangent_lift_omega,
    tangent_map,
    tangent_omega,
    tangent_pairing,
    vertical_lift,
)
from randexpr import random_polynomial

YX = Chart(("y", "x"), cyclic="y")


def components(field):
    return [ex.render(c) for c in field.components]


def test_chart_validation():
    with pytest.raises(ValueError):
        Chart(("x", "x"))
    with pytest.raises(ValueError):
        Chart(("x",), cyclic="y")
    assert YX.reduced().coords == ("x",)
    assert YX.velocities == ("dy", "dx")
    assert YX.momenta == ("p_y", "p_x")


def test_complete_lift_of_straightened_field():
    assert components(complete_lift(YX.symmetry_field())) == ["1", "0", "0", "0"]


def test_complete_lift_of_dilation():
    X = VectorField.from_strings(Chart(("x",)), ["x"])
    assert components(complete_lift(X)) == ["x", "dx"]


def test_complete_lift_of_zero():
    X = VectorField.from_strings(YX, ["0", "0"])
    assert components(complete_lift(X)) == ["0"] * 4


def test_lift_requires_base_field():
    lifted = complete_lift(YX.symmetry_field())
    with pytest.raises(PreconditionError):
        complete_lift(lifted)


def test_momentum_function():
    xy = Chart(("x", "y"))
    assert ex.render(momentum_function(VectorField.from_strings(xy, ["1", "0"]))) == "p_x"
    assert ex.render(momentum_function(VectorField.from_strings(Chart(("x",)), ["x"]))) == "p_x*x"
    assert ex.render(momentum_function(YX.symmetry_field())) == "p_y"


def test_cotangent_lift_examples():
    xy = Chart(("x", "y"))
    assert components(cotangent_lift(VectorField.from_strings(xy, ["1", "0"]))) == ["1", "0", "0", "0"]
    assert components(cotangent_lift(VectorField.from_strings(Chart(("x",)), ["x"]))) == ["x", "-p_x"]
    assert components(cotangent_lift(VectorField.from_strings(xy, ["0", "0"]))) == ["0"] * 4


def test_hamiltonian_field_examples():
    chart = Chart(("y",))
    field = hamiltonian_field(ex.parse("a*p_y + y^2"), chart)
    assert components(field) == ["a", "-2*y"]
    assert components(hamiltonian_field(ex.parse("3"), chart)) == ["0", "0"]
    osc = hamiltonian_field(ex.parse("0.5*p_q^2 + 0.5*q^2"), Chart(("q",)))
    assert components(osc) == ["p_q", "-q"]


def test_field_evaluation():
    X = VectorField.from_strings(Chart(("x", "y")), ["x*y", "k"])
    assert np.allclose(X({"x": 2.0, "y": 3.0}, {"k": 5.0}), [6.0, 5.0])
    assert np.allclose(X([2.0, 3.0], {"k": 5.0}), [6.0, 5.0])


def test_flip_examples():
    assert flip_kappa([1, 2, 3, 4]).tolist() == [1, 3, 2, 4]
    w = np.array([1.0, 2.0, 2.0, 4.0])
    assert np.array_equal(flip_kappa(w), w)


def test_flip_involution():
    rng = np.random.default_rng(0)
    for n in (1, 2, 3):
        for _ in range(200):
            w = rng.normal(size=4 * n)
            assert np.array_equal(flip_kappa(flip_kappa(w)), w)


def test_beta_examples():
    assert beta_map([0, 0, 1, 2]).tolist() == [0, 0, 2, -1]
    assert beta_map(np.zeros(8)).tolist() == [0.0] * 8
    v = np.array([1.0, 2.0, 3.0, 4.0])
    # applying beta twice, reading the output as (q, p, qdot, pdot) again
    assert beta_map(beta_map(v)).tolist() == [1.0, 2.0, -3.0, -4.0]
    assert np.array_equal(beta_map_inverse(beta_map(v)), v)


def test_alpha_examples():
    assert alpha_map([1, 2, 3, 4]).tolist() == [1, 3, 4, 2]
    assert alpha_map([5, 0, 7, 0]).tolist() == [5, 7, 0, 0]
    rng = np.random.default_rng(1)
    for _ in range(100):
        v = rng.normal(size=8)
        assert np.array_equal(alpha_map_inverse(alpha_map(v)), v)
        assert np.array_equal(alpha_map(alpha_map_inverse(v)), v)


def test_pairing_examples():
    w = np.array([0, 0, 1, 0, 0, 0, 0, 0], dtype=float)  # q=(0,0) p=(1,0) qdot=0 pdot=0
    u = np.array([0, 0, 0, 1, 0, 0, 0, 0], dtype=float)  # v=(0,1)
    assert tangent_pairing(w, u) == 0.0
    assert tangent_pairing([0, 2, 0, 5], [0, 3, 0, 7]) == 29.0


def test_pairing_rejects_mismatched_base():
    with pytest.raises(PreconditionError):
        tangent_pairing([0, 2, 1, 5], [0, 3, 1.1, 7])


def random_field(rng, chart, degree=3):
    return VectorField(chart, tuple(random_polynomial(rng, chart.coords, degree) for _ in chart.coords))


def lift_points(rng, lifts):
    tangent, cotangent = lifts
    n = tangent.chart.dim
    q, p, v = rng.normal(size=(3, n))
    dT = tangent(np.concatenate([q, v]))
    dTs = cotangent(np.concatenate([q, p]))
    w = np.concatenate([q, p, dTs[:n], dTs[n:]])
    u = np.concatenate([q, v, dT[:n], dT[n:]])
    return w, u


def test_pairing_zero_characterisation():
    rng = np.random.default_rng(5)
    chart = Chart(("a", "b", "c"))
    worst = 0.0
    for i in range(1000):
        if i % 10 == 0:
            X = random_field(rng, chart)
            lifts = complete_lift(X), cotangent_lift(X)
        w, u = lift_points(rng, lifts)
        worst = max(worst, abs(tangent_pairing(w, u)))
    assert worst <= 1e-10


def test_beta_and_alpha_are_symplectic():
    rng = np.random.default_rng(8)
    for n in (1, 2, 3):
        for _ in range(300):
            V, W = rng.normal(size=(2, 4 * n))
            assert cotangent_omega(beta_map(V), beta_map(W)) == pytest.approx(tangent_lift_omega(V, W), abs=1e-10)
            assert tangent_omega(alpha_map(V), alpha_map(W)) == pytest.approx(tangent_lift_omega(V, W), abs=1e-10)


def test_bracket_relation():
    rng = np.random.default_rng(13)
    chart = Chart(("a", "b"))
    for i in range(300):
        if i % 10 == 0:
            X, Y = random_field(rng, chart), random_field(rng, chart)
        q = rng.normal(size=2)
        Xq, Yq = X(q), Y(q)
        diff = subtract_over_base_velocity(tangent_map(X, q, Yq), flip_kappa(tangent_map(Y, q, Xq)))
        bracket = evaluate_jacobian(Y, q) @ Xq - evaluate_jacobian(X, q) @ Yq
        # the difference is vertical over Y with fibre part -(X^k d_k Y - Y^k d_k X)
        assert np.allclose(flip_kappa(diff), vertical_lift(q, Yq, -bracket), rtol=0, atol=1e-10)
