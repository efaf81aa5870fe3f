import numpy as np
import pytest

from routhred import expr as ex
from routhred.errors import SingularHessianError
from routhred.geometry import VectorField
from routhred.mechanics import (
    LagrangianSystem,
    check_symmetry,
    energy,
    euler_lagrange,
    hamiltonian_at,
    hamiltonian_family,
    inverse_legendre,
    legendre,
)

EX2 = LagrangianSystem.from_text(["x", "y"], "dx*dy - y^2", cyclic="x")
FREE = LagrangianSystem.from_text(["x", "y"], "0.5*(dx^2 + dy^2)", cyclic="y")
CENTRAL = LagrangianSystem.from_text(["r", "theta"], "0.5*(dr^2 + r^2*dtheta^2) + k/r", cyclic="theta", params={"k": 1.0})
COUPLED = LagrangianSystem.from_text(
    ["y", "x"], "0.5*(dx^2 + (1 + x^2)*dy^2) + x*dx*dy - cos(x)", cyclic="y"
)
SYMMETRIC = [EX2, FREE, CENTRAL, COUPLED]


def same_value(a, b, names, params=None, n=200, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        pt = {**(params or {}), **{k: rng.uniform(0.3, 2.0) for k in names}}
        assert ex.evaluate(a, pt) == pytest.approx(ex.evaluate(b, pt), rel=1e-12, abs=1e-12)


def test_unknown_names_rejected():
    with pytest.raises(ValueError):
        LagrangianSystem.from_text(["x"], "dx^2 + m")


def test_euler_lagrange_crossed():
    el = euler_lagrange(EX2)
    rng = np.random.default_rng(1)
    for _ in range(50):
        x, y, dx, dy = rng.normal(size=4)
        ddx, ddy = el.accelerations([x, y, dx, dy])
        assert ddx == pytest.approx(-2 * y)
        assert ddy == pytest.approx(0.0, abs=1e-14)


def test_euler_lagrange_free_particle():
    el = euler_lagrange(FREE)
    assert np.allclose(el.accelerations([1.0, 2.0, 3.0, 4.0]), 0.0)
    assert [ex.render(r) for r in el.residuals] == ["ddx", "ddy"]


def test_euler_lagrange_central_force():
    el = euler_lagrange(CENTRAL)
    rng = np.random.default_rng(2)
    for _ in range(50):
        r, th, dr, dth = rng.uniform(0.5, 2.0, size=4)
        ddr, ddth = el.accelerations([r, th, dr, dth])
        assert ddr == pytest.approx(r * dth**2 - 1.0 / r**2)
        # d/dt (r^2 dtheta) = 2 r dr dtheta + r^2 ddtheta = 0
        assert 2 * r * dr * dth + r**2 * ddth == pytest.approx(0.0, abs=1e-12)


def test_singular_hessian_reported():
    sys = LagrangianSystem.from_text(["x", "y"], "dx - y^2")
    with pytest.raises(SingularHessianError) as err:
        euler_lagrange(sys).accelerations([0.0, 1.0, 0.0, 0.0])
    assert err.value.condition > 1e12


def test_legendre_examples():
    leg = legendre(FREE)
    assert {k: ex.render(v) for k, v in leg.momenta.items()} == {"p_x": "dx", "p_y": "dy"}
    leg = legendre(EX2)
    assert {k: ex.render(v) for k, v in leg.momenta.items()} == {"p_x": "dy", "p_y": "dx"}


def test_legendre_charged_particle_constraint():
    # flat metric, m = e = 1, A = (-x2/2, x1/2), fibre coordinate y
    sys = LagrangianSystem.from_text(["x1", "x2", "y"], "sqrt(dx1^2 + dx2^2) + dy + (-0.5*x2)*dx1 + 0.5*x1*dx2")
    mom = legendre(sys).momenta
    assert mom["p_y"] == ex.Const(1.0)
    same_value(mom["p_x1"], ex.parse("dx1/sqrt(dx1^2 + dx2^2) - 0.5*x2"), ["dx1", "dx2", "x2"])
    same_value(mom["p_x2"], ex.parse("dx2/sqrt(dx1^2 + dx2^2) + 0.5*x1"), ["dx1", "dx2", "x1"])


def test_check_symmetry_examples():
    res = check_symmetry(EX2, VectorField.from_strings(EX2.chart, ["1", "0"]))
    assert res.symmetric and res.proof == "symbolic"
    res = check_symmetry(EX2, VectorField.from_strings(EX2.chart, ["0", "1"]))
    assert not res.symmetric and ex.render(res.violation) == "-2*y"
    res = check_symmetry(CENTRAL, VectorField.from_strings(CENTRAL.chart, ["0", "0"]))
    assert res.symmetric


def test_check_symmetry_numeric_fallback():
    sys = LagrangianSystem.from_text(["x", "y"], "0.5*dx^2 + x*(exp(y + 1) - exp(1)*exp(y))")
    res = check_symmetry(sys, VectorField.from_strings(sys.chart, ["0", "1"]))
    assert res.symmetric and res.proof == "numeric-only"


def test_rotation_symmetry_of_planar_oscillator():
    sys = LagrangianSystem.from_text(["x", "y"], "0.5*(dx^2 + dy^2) - 0.5*(x^2 + y^2)")
    rot = VectorField.from_strings(sys.chart, ["-y", "x"])
    assert check_symmetry(sys, rot).symmetric


def test_energy_examples():
    same_value(energy(FREE), ex.parse("0.5*(dx^2 + dy^2)"), ["dx", "dy"])
    same_value(energy(CENTRAL), ex.parse("0.5*(dr^2 + r^2*dtheta^2) - k/r"), ["dr", "r", "dtheta"], {"k": 1.0})
    same_value(energy(EX2), ex.parse("dx*dy + y^2"), ["dx", "dy", "y"])


def test_hamiltonian_family():
    sys = LagrangianSystem.from_text(["x"], "0.5*dx^2")
    F = hamiltonian_family(sys)
    same_value(F, ex.parse("0.5*v_x^2 - p_x*v_x"), ["v_x", "p_x"])
    # stationary in v at v = p, where F = -p^2/2 = -H
    for p in (-1.5, 0.3, 2.0):
        same_value(ex.diff(F, "v_x"), ex.parse("v_x - p_x"), ["v_x", "p_x"])
        assert ex.evaluate(F, {"v_x": p, "p_x": p}) == pytest.approx(-0.5 * p * p)
        assert hamiltonian_at(sys, [0.0], [p]) == pytest.approx(0.5 * p * p)


def test_crossed_is_hyperregular():
    # the whole family F(v, p) is reducible: H = p_x p_y + y^2
    rng = np.random.default_rng(4)
    for _ in range(50):
        x, y, px, py = rng.normal(size=4)
        assert hamiltonian_at(EX2, [x, y], [px, py]) == pytest.approx(px * py + y * y)


def random_state(rng, sys):
    return {n: rng.uniform(0.3, 2.0) * rng.choice([-1, 1]) for n in sys.state_names}


@pytest.mark.parametrize("sys", SYMMETRIC, ids=["ex2", "free", "central", "coupled"])
def test_legendre_equivariance(sys):
    mom = legendre(sys).momenta
    y = sys.chart.cyclic
    for e in mom.values():
        assert ex.vanishes(ex.diff(e, y), sys.params, samples=1000)
    rng = np.random.default_rng(9)
    for _ in range(200):
        pt = {**sys.params, **random_state(rng, sys)}
        shifted = {**pt, y: pt[y] + rng.normal()}
        for e in mom.values():
            assert ex.evaluate(e, pt) == pytest.approx(ex.evaluate(e, shifted), abs=1e-10)


@pytest.mark.parametrize("sys", [EX2, FREE, CENTRAL, COUPLED], ids=["ex2", "free", "central", "coupled"])
def test_hamiltonian_invariance(sys):
    rng = np.random.default_rng(10)
    k = sys.chart.coords.index(sys.chart.cyclic)
    leg = legendre(sys)
    for _ in range(100):
        pt = {**sys.params, **random_state(rng, sys)}
        q = np.array([pt[c] for c in sys.chart.coords])
        v = np.array([pt[c] for c in sys.chart.velocities])
        p = np.array(list(leg(pt).values()))
        H = hamiltonian_at(sys, q, p, guess=v)
        q2 = q.copy()
        q2[k] += rng.normal()
        assert hamiltonian_at(sys, q2, p, guess=v) == pytest.approx(H, abs=1e-10)
        assert np.allclose(inverse_legendre(sys, q, p, guess=v), v, atol=1e-10)
        assert H == pytest.approx(ex.evaluate(energy(sys), pt), abs=1e-10)
