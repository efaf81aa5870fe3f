"""Lagrangian systems on a chart: Euler-Lagrange equations, the Legendre
map, energy, the Hamiltonian generating family and the symmetry test."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import expr as ex
from .dynamics import FirstOrderField
from .errors import PreconditionError, SingularHessianError
from .expr import Expr
from .geometry import Chart, VectorField, complete_lift

# condition number beyond which the velocity Hessian counts as singular
SINGULAR_CONDITION = 1e12


def acceleration_name(q: str) -> str:
    return "dd" + q


@dataclass(frozen=True)
class LagrangianSystem:
    chart: Chart
    lagrangian: Expr
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "lagrangian", ex.as_expr(self.lagrangian))
        object.__setattr__(self, "params", dict(self.params))
        allowed = set(self.chart.coords) | set(self.chart.velocities) | set(self.params)
        stray = sorted(self.lagrangian.free_vars - allowed)
        if stray:
            raise ValueError(f"Lagrangian uses unknown names {stray}")

    @classmethod
    def from_text(cls, coords, lagrangian: str, cyclic: str | None = None, params=None) -> "LagrangianSystem":
        return cls(Chart(tuple(coords), cyclic), ex.parse(lagrangian), dict(params or {}))

    @property
    def state_names(self) -> tuple[str, ...]:
        return self.chart.coords + self.chart.velocities


@dataclass(frozen=True)
class EulerLagrangeSystem:
    """Residuals ``M(q, qdot) a + C(q, qdot) qdot - dL/dq`` per coordinate.

    ``hessian[i][j]`` is d2L/dqdot_i dqdot_j, ``mixed[i][j]`` is
    d2L/dqdot_i dq_j and ``force[i]`` is dL/dq_i.  Accelerations are the
    variables ``dd<q>``.
    """

    system: LagrangianSystem
    hessian: tuple
    mixed: tuple
    force: tuple
    residuals: tuple

    def _compiled(self):
        cached = self.__dict__.get("_fn")
        if cached is None:
            n = self.system.chart.dim
            flat = [e for row in self.hessian for e in row] + [e for row in self.mixed for e in row] + list(self.force)
            names = list(self.system.state_names)
            extra = sorted(set().union(*(e.free_vars for e in flat)) - set(names))
            fn = ex.compile_exprs(flat, names + extra)
            cached = (fn, extra, n)
            self.__dict__["_fn"] = cached
        return cached

    def accelerations(self, state, params: Mapping[str, float] | None = None) -> np.ndarray:
        """Solve the residuals for the accelerations at ``state`` (coords then
        velocities).  Raises :class:`SingularHessianError` when the velocity
        Hessian is not invertible there."""
        fn, extra, n = self._compiled()
        merged = {**self.system.params, **(params or {})}
        state = np.asarray(state, dtype=float)
        vals = fn(list(state) + [merged[k] for k in extra])
        M = np.array(vals[: n * n]).reshape(n, n)
        C = np.array(vals[n * n : 2 * n * n]).reshape(n, n)
        F = np.array(vals[2 * n * n :])
        cond = np.linalg.cond(M)
        if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
            raise SingularHessianError(dict(zip(self.system.state_names, state)), cond)
        return np.linalg.solve(M, F - C @ state[n:])

    def first_order(self, params: Mapping[str, float] | None = None) -> FirstOrderField:
        n = self.system.chart.dim

        def rhs(state):
            return np.concatenate([state[n:], self.accelerations(state, params)])

        return FirstOrderField(self.system.state_names, rhs)


def euler_lagrange(sys: LagrangianSystem) -> EulerLagrangeSystem:
    chart = sys.chart
    L = sys.lagrangian
    momenta = [ex.diff(L, v) for v in chart.velocities]
    hessian = tuple(tuple(ex.diff(p, v) for v in chart.velocities) for p in momenta)
    mixed = tuple(tuple(ex.diff(p, q) for q in chart.coords) for p in momenta)
    force = tuple(ex.diff(L, q) for q in chart.coords)
    residuals = []
    for i in range(chart.dim):
        terms = [ex.mul(hessian[i][j], ex.Var(acceleration_name(q))) for j, q in enumerate(chart.coords)]
        terms += [ex.mul(mixed[i][j], ex.Var(v)) for j, v in enumerate(chart.velocities)]
        residuals.append(ex.simplify(ex.sub(ex.total(terms), force[i])))
    return EulerLagrangeSystem(sys, hessian, mixed, force, tuple(residuals))


@dataclass(frozen=True)
class LegendreMap:
    momenta: dict  # momentum name -> Expr over (q, qdot)

    def __call__(self, state: Mapping[str, float]) -> dict:
        return {p: ex.evaluate(e, state) for p, e in self.momenta.items()}


def legendre(sys: LagrangianSystem) -> LegendreMap:
    chart = sys.chart
    return LegendreMap({p: ex.diff(sys.lagrangian, v) for p, v in zip(chart.momenta, chart.velocities)})


def energy(sys: LagrangianSystem) -> Expr:
    """``sum_i qdot_i dL/dqdot_i - L``."""
    terms = [ex.mul(ex.Var(v), ex.diff(sys.lagrangian, v)) for v in sys.chart.velocities]
    return ex.simplify(ex.sub(ex.total(terms), sys.lagrangian))


def family_parameter_name(q: str) -> str:
    return "v_" + q


def hamiltonian_family(sys: LagrangianSystem) -> Expr:
    """``F(v, p) = L(q, v) - <p, v>`` with velocities renamed ``v_<q>``.

    At a stationary point in ``v`` the family equals ``-H`` for the
    positive-energy Hamiltonian ``H = <p, v> - L``.
    """
    chart = sys.chart
    rename = {vel: ex.Var(family_parameter_name(q)) for q, vel in zip(chart.coords, chart.velocities)}
    Lv = ex.substitute(sys.lagrangian, rename)
    pairing = ex.total(ex.mul(ex.Var(p), rename[vel]) for p, vel in zip(chart.momenta, chart.velocities))
    return ex.simplify(ex.sub(Lv, pairing))


def inverse_legendre(sys: LagrangianSystem, q, p, guess=None, tol=1e-13, max_iter=50) -> np.ndarray:
    """Velocities with ``dL/dqdot(q, v) = p`` by Newton iteration.

    Regularity is checked pointwise through the velocity Hessian.
    """
    chart = sys.chart
    n = chart.dim
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    leg = legendre(sys)
    el = euler_lagrange(sys)
    names = list(sys.state_names)
    extra = sorted(set(sys.params))
    mom = ex.compile_exprs(list(leg.momenta.values()), names + extra)
    hes = ex.compile_exprs([e for row in el.hessian for e in row], names + extra)
    tail = [sys.params[k] for k in extra]
    v = np.zeros(n) if guess is None else np.array(guess, dtype=float)
    for _ in range(max_iter):
        x = list(q) + list(v) + tail
        r = np.array(mom(x)) - p
        M = np.array(hes(x)).reshape(n, n)
        cond = np.linalg.cond(M)
        if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
            raise SingularHessianError(dict(zip(names, list(q) + list(v))), cond)
        step = np.linalg.solve(M, r)
        v = v - step
        if np.max(np.abs(step)) <= tol * max(1.0, np.max(np.abs(v))):
            break
    return v


def hamiltonian_at(sys: LagrangianSystem, q, p, guess=None) -> float:
    """Value of ``H = <p, v(p)> - L(q, v(p))`` with ``v`` from the inverse Legendre map."""
    v = inverse_legendre(sys, q, p, guess)
    point = {**sys.params, **dict(zip(sys.chart.coords, q)), **dict(zip(sys.chart.velocities, v))}
    return float(np.dot(p, v) - ex.evaluate(sys.lagrangian, point))


@dataclass(frozen=True)
class SymmetryResult:
    symmetric: bool
    proof: str  # "symbolic", "numeric-only" or "violated"
    violation: Expr | None = None

    def __bool__(self):
        return self.symmetric


def lie_derivative(sys: LagrangianSystem, X: VectorField) -> Expr:
    """``d_T X (L)``, the derivative of L along the complete lift of X."""
    if X.chart.coords != sys.chart.coords:
        raise PreconditionError("vector field and system live on different charts")
    lift = complete_lift(X)
    names = sys.chart.coords + sys.chart.velocities
    terms = (ex.mul(c, ex.diff(sys.lagrangian, n)) for c, n in zip(lift.components, names))
    return ex.simplify(ex.total(terms))


def check_symmetry(sys: LagrangianSystem, X: VectorField, samples: int = 1000, tol: float = 1e-10, seed: int = 0) -> SymmetryResult:
    """Test ``d_T X (L) = 0``: a symbolic zero first, then random points."""
    d = lie_derivative(sys, X)
    if d == ex.ZERO:
        return SymmetryResult(True, "symbolic")
    if ex.vanishes(d, sys.params, samples=samples, tol=tol, rng=np.random.default_rng(seed)):
        return SymmetryResult(True, "numeric-only")
    return SymmetryResult(False, "violated", d)


def cyclic_symmetry(sys: LagrangianSystem) -> SymmetryResult:
    return check_symmetry(sys, sys.chart.symmetry_field())
