"""Routh reduction in the straightened chart.

The cyclic coordinate ``y`` carries the symmetry ``X = d/dy``.  Fixing the
momentum level ``dL/dydot = alpha`` and eliminating ``ydot`` from
``L - alpha*ydot`` gives the Routhian on the reduced tangent bundle.  When
the Lagrangian is affine in ``ydot`` the constraint does not determine it and
the reduction keeps a constrained family instead, from which a reduced
Hamiltonian is read off when possible.

The level ``alpha`` stays symbolic in every derived expression (variable
``alpha``) and is bound numerically through ``ReducedSystem.params``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, cumulative_trapezoid

from . import expr as ex
from .dynamics import FirstOrderField, Trajectory
from .errors import (
    BranchAmbiguityError,
    DomainError,
    EmptyConstraintSetError,
    NoRootError,
    PreconditionError,
    SymmetryViolationError,
    UnsupportedReductionError,
)
from .expr import Expr, Var
from .geometry import Chart, hamiltonian_field, velocity_name
from .mechanics import LagrangianSystem, cyclic_symmetry, euler_lagrange

ALPHA = "alpha"
ROOT_TOL = 1e-12
ROOT_MAX_ITER = 60
CONSTRAINT_TOL = 1e-6


@dataclass(frozen=True)
class MomentumLevel:
    alpha: float
    cyclic: str


@dataclass(frozen=True)
class GaugeRecord:
    """Reference section of the av-bundle, as a function ``f0`` of the
    reduced coordinates; the default zero section reproduces the textbook
    Routhian."""

    reference: Expr = ex.ZERO
    alpha: float = 0.0


@dataclass(frozen=True)
class CyclicVelocity:
    """Outcome of solving ``dL/dydot = alpha`` for ``ydot``.

    ``kind`` is one of ``explicit``, ``branches``, ``degenerate``,
    ``identity`` (the constraint holds for every ``ydot``) or ``numeric``
    (no closed form; use :func:`find_root` per point).
    """

    kind: str
    residual: Expr
    target: str
    branches: tuple = ()

    @property
    def expr(self) -> Expr | None:
        return self.branches[0] if self.kind == "explicit" else None


# --------------------------------------------------------------------------
# numeric root finding


def find_root(f: Callable[[float], float], lo: float, hi: float, tol: float = ROOT_TOL, max_iter: int = ROOT_MAX_ITER) -> float:
    """Guarded secant iteration on a sign-changing bracket.

    Each step tries the secant point of the bracket ends and falls back to
    bisection when that point lands near an end or the previous step failed
    to halve the bracket.  Bisection is geometric while the bracket spans
    more than a factor 4 on one side of zero, so brackets like
    ``[1e-8, 1e8]`` are narrowed in a few dozen steps.  Stops when
    ``|f| <= tol``, when the bracket collapses to rounding level, or after
    ``max_iter`` evaluations.
    """
    a, b = float(lo), float(hi)
    fa, fb = f(a), f(b)
    if abs(fa) <= tol:
        return a
    if abs(fb) <= tol:
        return b
    if not (math.isfinite(fa) and math.isfinite(fb)) or math.copysign(1.0, fa) == math.copysign(1.0, fb):
        raise NoRootError(f"no sign change on [{lo}, {hi}] (f = {fa:.3g}, {fb:.3g})")
    best = a if abs(fa) < abs(fb) else b
    shrunk = True
    for _ in range(max_iter):
        width = abs(b - a)
        x = b - fb * (b - a) / (fb - fa)
        margin = 0.01 * width
        if not shrunk or not (min(a, b) + margin < x < max(a, b) - margin):
            if a * b > 0 and max(abs(a), abs(b)) > 4 * min(abs(a), abs(b)):
                x = math.copysign(math.sqrt(a * b), a)
            else:
                x = 0.5 * (a + b)
        fx = f(x)
        if abs(fx) <= tol:
            return x
        if math.copysign(1.0, fx) == math.copysign(1.0, fa):
            a, fa = x, fx
        else:
            b, fb = x, fx
        best = a if abs(fa) < abs(fb) else b
        shrunk = abs(b - a) <= 0.5 * width
        if abs(b - a) <= 4 * np.finfo(float).eps * max(abs(a), abs(b)):
            break
    return best


# --------------------------------------------------------------------------
# constraint


def _level_params(sys: LagrangianSystem, level: MomentumLevel) -> dict:
    return {**sys.params, ALPHA: float(level.alpha)}


def _check_chart(sys: LagrangianSystem, level: MomentumLevel, check: bool):
    if level.cyclic not in sys.chart.coords:
        raise PreconditionError(f"cyclic coordinate {level.cyclic!r} is not in the chart {sys.chart.coords}")
    if sys.chart.cyclic not in (None, level.cyclic):
        sys = replace(sys, chart=Chart(sys.chart.coords, level.cyclic))
    if sys.chart.cyclic is None:
        sys = replace(sys, chart=Chart(sys.chart.coords, level.cyclic))
    if check:
        res = cyclic_symmetry(sys)
        if not res.symmetric:
            raise SymmetryViolationError(level.cyclic, ex.render(res.violation))
    return sys


def momentum_constraint(sys: LagrangianSystem, level: MomentumLevel, check: bool = True) -> Expr:
    """Residual ``dL/dydot - alpha``."""
    _check_chart(sys, level, check)
    dy = velocity_name(level.cyclic)
    return ex.simplify(ex.sub(ex.diff(sys.lagrangian, dy), Var(ALPHA)))


def _nonzero(e: Expr, params) -> bool:
    return not ex.vanishes(e, params, samples=200)


def solve_cyclic_velocity(sys: LagrangianSystem, level: MomentumLevel, check: bool = True) -> CyclicVelocity:
    """Solve the momentum constraint for the cyclic velocity.

    Linear constraints give one expression, quadratic ones (after clearing
    negative powers) both branches.  A residual free of ``ydot`` is
    degenerate, or the identity / empty set when it is also free of the
    state.  Anything else is left to numeric root finding.
    """
    residual = momentum_constraint(sys, level, check)
    params = _level_params(sys, level)
    dy = velocity_name(level.cyclic)
    if dy not in residual.free_vars or not _nonzero(ex.diff(residual, dy), params):
        if ex.vanishes(residual, params):
            return CyclicVelocity("identity", residual, dy)
        state = set(sys.chart.coords) | set(sys.chart.velocities)
        if not (residual.free_vars & state):
            raise EmptyConstraintSetError(residual, ex.evaluate(residual, params))
        return CyclicVelocity("degenerate", residual, dy)
    coeffs = ex.laurent_coefficients(residual, dy)
    if coeffs is None:
        return CyclicVelocity("numeric", residual, dy)
    coeffs = {k: c for k, c in coeffs.items() if _nonzero(c, params)}
    lo, hi = min(coeffs), max(coeffs)
    c = {k - lo: v for k, v in coeffs.items()}
    if hi - lo == 1:
        sol = ex.simplify(ex.neg(ex.div(c.get(0, ex.ZERO), c[1])))
        return CyclicVelocity("explicit", residual, dy, (sol,))
    if hi - lo == 2:
        a, b, c0 = c[2], c.get(1, ex.ZERO), c.get(0, ex.ZERO)
        disc = ex.sub(ex.mul(b, b), ex.mul(ex.Const(4.0), ex.mul(a, c0)))
        root = ex.Unary("sqrt", ex.simplify(disc))
        two_a = ex.mul(ex.Const(2.0), a)
        plus = ex.simplify(ex.div(ex.add(ex.neg(b), root), two_a))
        minus = ex.simplify(ex.div(ex.sub(ex.neg(b), root), two_a))
        return CyclicVelocity("branches", residual, dy, (plus, minus))
    return CyclicVelocity("numeric", residual, dy)


# --------------------------------------------------------------------------
# reduced systems


@dataclass(frozen=True)
class ReducedSystem:
    """Result of Routh reduction.

    Regular kind: ``routhian`` over the reduced ``(x, xdot)`` and
    ``cyclic_velocity`` giving ``ydot(x, xdot)``.  Degenerate kind:
    ``family`` with the cyclic velocity as parameter, ``constraint`` on the
    reduced velocities and, when derivable, ``reduced_hamiltonian`` over
    ``(x, p)`` with ``cyclic_velocity`` then expressed over ``(x, p)``.
    ``params`` binds the system constants and ``alpha``.
    """

    kind: str
    system: LagrangianSystem
    level: MomentumLevel
    chart: Chart
    params: dict
    solution: CyclicVelocity
    gauge: GaugeRecord = field(default_factory=GaugeRecord)
    routhian: Expr | None = None
    cyclic_velocity: Expr | None = None
    constraint: Expr | None = None
    family: Expr | None = None
    reduced_hamiltonian: Expr | None = None
    bracket: tuple | None = None

    @property
    def cyclic(self) -> str:
        return self.level.cyclic

    def as_lagrangian(self) -> LagrangianSystem:
        if self.routhian is None:
            raise UnsupportedReductionError("this reduction has no closed-form Routhian")
        return LagrangianSystem(self.chart, self.routhian, self.params)

    def state_names(self) -> tuple[str, ...]:
        if self.kind == "degenerate":
            return self.chart.coords + self.chart.momenta
        return self.chart.coords + self.chart.velocities

    def _binding(self, point: Mapping[str, float]) -> dict:
        return {**self.params, **point}

    def cyclic_velocity_at(self, point: Mapping[str, float], bracket: Sequence[float] | None = None) -> float:
        """``ydot`` at a reduced point, by formula or by root finding."""
        b = self._binding(point)
        if self.cyclic_velocity is not None:
            return ex.evaluate(self.cyclic_velocity, b)
        if self.solution.kind != "numeric":
            raise UnsupportedReductionError(f"cyclic velocity is undetermined ({self.solution.kind} constraint)")
        bracket = bracket or self.bracket
        if bracket is None:
            raise PreconditionError("numeric constraint solving needs a bracket")
        f = ex.compile_expr(self.solution.residual, [self.solution.target] + sorted(b))
        rest = [b[k] for k in sorted(b)]
        return find_root(lambda s: f([s] + rest), *bracket)

    def routhian_at(self, point: Mapping[str, float], bracket: Sequence[float] | None = None) -> float:
        if self.routhian is not None:
            return ex.evaluate(self.routhian, self._binding(point))
        s = self.cyclic_velocity_at(point, bracket)
        b = self._binding(point)
        b[self.solution.target] = s
        return ex.evaluate(self.family, b)


def _gauge_term(f: Expr, chart: Chart) -> Expr:
    return ex.simplify(ex.total(ex.mul(ex.diff(f, q), Var(v)) for q, v in zip(chart.coords, chart.velocities)))


def _pick_branch(sol: CyclicVelocity, params, branch, near):
    if branch is not None:
        if branch in ("+", "-"):
            branch = 0 if branch == "+" else 1
        return sol.branches[int(branch)]
    if near is not None:
        b = {**params, **near}
        target = near[sol.target]
        vals = []
        for e in sol.branches:
            try:
                vals.append(abs(ex.evaluate(e, b) - target))
            except DomainError:
                vals.append(math.inf)
        return sol.branches[int(np.argmin(vals))]
    raise BranchAmbiguityError(
        "the momentum constraint has two branches "
        + ", ".join(ex.render(e) for e in sol.branches)
        + "; select one or supply an initial cyclic velocity"
    )


def routhian(
    sys: LagrangianSystem,
    level: MomentumLevel,
    gauge: GaugeRecord | None = None,
    branch: int | str | None = None,
    near: Mapping[str, float] | None = None,
    bracket: Sequence[float] | None = None,
    check: bool = True,
) -> ReducedSystem:
    """Reduce ``sys`` at momentum ``level``.

    ``branch`` (index or ``"+"``/``"-"``) or ``near`` (a full state whose
    cyclic velocity picks the closest root) resolves quadratic constraints.
    ``bracket`` is stored for the numeric path.
    """
    sys = _check_chart(sys, level, check)
    sol = solve_cyclic_velocity(sys, level, check=False)
    params = _level_params(sys, level)
    chart = sys.chart.reduced()
    dy = sol.target
    gauge = gauge or GaugeRecord(ex.ZERO, float(level.alpha))
    gauge = replace(gauge, alpha=float(level.alpha))
    family = ex.simplify(ex.sub(sys.lagrangian, ex.mul(Var(ALPHA), Var(dy))))
    common = dict(system=sys, level=level, chart=chart, params=params, solution=sol, gauge=gauge, family=family)
    shift = _gauge_term(gauge.reference, chart)

    if sol.kind in ("explicit", "branches"):
        cv = sol.expr if sol.kind == "explicit" else _pick_branch(sol, params, branch, near)
        R = ex.simplify(ex.add(ex.substitute(family, {dy: cv}), shift))
        return ReducedSystem("regular", routhian=R, cyclic_velocity=cv, **common)
    if sol.kind == "identity":
        R = ex.simplify(ex.add(ex.substitute(family, {dy: ex.ZERO}), shift))
        return ReducedSystem("regular", routhian=R, **common)
    if sol.kind == "numeric":
        return ReducedSystem("regular", bracket=tuple(bracket) if bracket else None, **common)
    return _degenerate(sys, sol, common)


def _degenerate(sys, sol, common) -> ReducedSystem:
    """Constrained family for a Lagrangian affine in the cyclic velocity.

    With ``L = A(x, xdot) ydot + B(x, xdot)``, the family
    ``ydot (A - alpha) + B`` generates ``A = alpha``,
    ``p = ydot dA/dxdot + dB/dxdot`` and ``pdot = ydot dA/dx + dB/dx``.  For
    one reduced coordinate with ``A`` affine in ``xdot`` this is the
    Hamiltonian field of ``h = p u(x) - B(x, u(x))`` where ``u`` solves the
    constraint, and ``ydot = (p - dB/dxdot) / (dA/dxdot)``.
    """
    dy = sol.target
    L = sys.lagrangian
    A = ex.diff(L, dy)
    B = ex.simplify(ex.substitute(L, {dy: ex.ZERO}))
    chart = common["chart"]
    params = common["params"]
    out = dict(common, constraint=sol.residual)
    if common["gauge"].reference != ex.ZERO:
        raise UnsupportedReductionError("gauge shifts apply to regular reductions only")
    if chart.dim != 1:
        return ReducedSystem("degenerate", **out)
    (x,) = chart.coords
    (dx,) = chart.velocities
    (px,) = chart.momenta
    coeffs = ex.laurent_coefficients(A, dx)
    if coeffs is None:
        return ReducedSystem("degenerate", **out)
    coeffs = {k: c for k, c in coeffs.items() if _nonzero(c, params)}
    if not set(coeffs) <= {0, 1} or 1 not in coeffs:
        return ReducedSystem("degenerate", **out)
    a0, a1 = coeffs.get(0, ex.ZERO), coeffs[1]
    u = ex.simplify(ex.div(ex.sub(Var(ALPHA), a0), a1))
    h = ex.simplify(ex.sub(ex.mul(Var(px), u), ex.substitute(B, {dx: u})))
    dB = ex.substitute(ex.diff(B, dx), {dx: u})
    cv = ex.simplify(ex.div(ex.sub(Var(px), dB), ex.substitute(a1, {dx: u})))
    return ReducedSystem("degenerate", reduced_hamiltonian=h, cyclic_velocity=cv, **out)


def reduced_dynamics(red: ReducedSystem) -> FirstOrderField:
    """First-order field on the reduced state.

    Regular: Euler-Lagrange equations of the Routhian over ``(x, xdot)``.
    Degenerate: Hamiltonian field of the reduced Hamiltonian over ``(x, p)``.
    """
    if red.kind == "degenerate":
        if red.reduced_hamiltonian is None:
            raise UnsupportedReductionError("no reduced Hamiltonian could be derived for this degenerate reduction")
        hf = hamiltonian_field(red.reduced_hamiltonian, red.chart)
        return FirstOrderField.from_exprs(red.state_names(), hf.components, red.params)
    return euler_lagrange(red.as_lagrangian()).first_order()


def gauge_shift(red: ReducedSystem, f: Expr | str) -> ReducedSystem:
    """Change the reference section by ``f``: adds ``sum df/dx^i xdot^i``."""
    if red.kind != "regular" or red.routhian is None:
        raise PreconditionError("gauge shifts apply to regular reductions with a closed-form Routhian")
    f = ex.as_expr(f)
    stray = f.free_vars - set(red.chart.coords) - set(red.params)
    if stray:
        raise PreconditionError(f"gauge function may depend on reduced coordinates only, got {sorted(stray)}")
    R = ex.simplify(ex.add(red.routhian, _gauge_term(f, red.chart)))
    gauge = GaugeRecord(ex.simplify(ex.add(red.gauge.reference, f)), red.gauge.alpha)
    return replace(red, routhian=R, gauge=gauge)


# --------------------------------------------------------------------------
# reconstruction


@dataclass(frozen=True)
class ReconstructionResult:
    trajectory: Trajectory  # reduced samples plus the cyclic coordinate and velocity
    y: np.ndarray
    ydot: np.ndarray
    flagged: tuple  # sample indices where the constraint residual exceeds tolerance
    max_residual: float


def _evaluate_rows(e: Expr, names, rows, params) -> np.ndarray:
    extra = sorted(e.free_vars - set(names))
    f = ex.compile_expr(e, list(names) + extra)
    tail = [params[k] for k in extra]
    return np.array([f(list(r) + tail) for r in rows])


def reconstruct_cyclic(red: ReducedSystem, traj: Trajectory, y0: float, quadrature: str = "trapezoid") -> ReconstructionResult:
    """Recover ``y(t)`` from a reduced trajectory by integrating ``ydot``.

    ``quadrature`` is ``"trapezoid"`` or ``"simpson"``.  Samples where the
    momentum constraint is violated beyond 1e-6 are listed in ``flagged``.
    """
    names = traj.names
    rows = traj.samples
    if red.cyclic_velocity is not None:
        ydot = _evaluate_rows(red.cyclic_velocity, names, rows, red.params)
    elif red.solution.kind == "numeric" and red.kind == "regular":
        ydot = np.array([red.cyclic_velocity_at(dict(zip(names, r))) for r in rows])
    else:
        raise UnsupportedReductionError(f"cyclic velocity is not determined by the reduced state ({red.solution.kind})")
    if quadrature == "trapezoid":
        y = y0 + cumulative_trapezoid(ydot, traj.t, initial=0.0)
    elif quadrature == "simpson":
        y = y0 + (cumulative_simpson(ydot, x=traj.t, initial=0.0) if len(ydot) > 2 else cumulative_trapezoid(ydot, traj.t, initial=0.0))
    else:
        raise ValueError(f"unknown quadrature {quadrature!r}")

    cyc, dy = red.cyclic, red.solution.target
    if red.kind == "degenerate":
        hf = hamiltonian_field(red.reduced_hamiltonian, red.chart)
        vel = np.column_stack([_evaluate_rows(c, names, rows, red.params) for c in hf.components[: red.chart.dim]])
        base = np.hstack([rows[:, : red.chart.dim], vel])
        base_names = red.chart.coords + red.chart.velocities
    else:
        base, base_names = rows, names
    full_names = tuple(base_names) + (cyc, dy)
    full_rows = np.column_stack([base, y, ydot])
    residual = np.abs(_evaluate_rows(red.solution.residual, full_names, full_rows, red.params))
    flagged = tuple(int(i) for i in np.nonzero(residual > CONSTRAINT_TOL)[0])
    out = traj.with_columns({cyc: y, dy: ydot})
    return ReconstructionResult(out, y, ydot, flagged, float(residual.max(initial=0.0)))


# --------------------------------------------------------------------------
# homogenisation and the Jacobi metric


def homogenize(sys: LagrangianSystem, name: str = "s") -> LagrangianSystem:
    """``L_h(q, v, s, sdot) = sdot * L(q, v / sdot)``, cyclic in ``s``."""
    taken = set(sys.chart.coords) | set(sys.chart.velocities) | set(sys.params) | {ALPHA}
    while name in taken or velocity_name(name) in taken:
        name += "_"
    ds = Var(velocity_name(name))
    scaled = {v: ex.div(Var(v), ds) for v in sys.chart.velocities}
    Lh = ex.mul(ds, ex.substitute(sys.lagrangian, scaled))
    return LagrangianSystem(Chart(sys.chart.coords + (name,), name), Lh, sys.params)


@dataclass(frozen=True)
class MechanicalSplit:
    kinetic: Expr  # T = g(v, v) / 2
    potential: Expr  # V


def mechanical_split(sys: LagrangianSystem) -> MechanicalSplit | None:
    """Detect ``L = T - V`` with ``T`` quadratic-homogeneous in velocities."""
    lam = "__scale"
    scaled = ex.substitute(sys.lagrangian, {v: ex.mul(Var(lam), Var(v)) for v in sys.chart.velocities})
    coeffs = ex.laurent_coefficients(scaled, lam)
    if coeffs is None:
        return None
    coeffs = {k: c for k, c in coeffs.items() if _nonzero(c, sys.params)}
    if not set(coeffs) <= {0, 2} or 2 not in coeffs:
        return None
    V = ex.simplify(ex.neg(coeffs.get(0, ex.ZERO)))
    if V.free_vars & set(sys.chart.velocities):
        return None
    return MechanicalSplit(coeffs[2], V)


def jacobi_closed_form(sys: LagrangianSystem, energy: float, sign: int = 1) -> tuple[Expr, Expr]:
    """``(L_J, sdot)`` in closed form for a mechanical Lagrangian:
    ``L_J = ±sqrt(2) sqrt(g(v,v)) sqrt(E - V)`` and
    ``sdot = ±sqrt(g(v,v)) / sqrt(2 (E - V))``."""
    split = mechanical_split(sys)
    if split is None:
        raise UnsupportedReductionError("Lagrangian is not of the form T - V")
    g = ex.mul(ex.Const(2.0), split.kinetic)
    gap = ex.sub(ex.Const(float(energy)), split.potential)
    s = ex.Const(float(np.sign(sign)))
    LJ = ex.mul(s, ex.mul(ex.Unary("sqrt", ex.Const(2.0)), ex.mul(ex.Unary("sqrt", g), ex.Unary("sqrt", gap))))
    sdot = ex.mul(s, ex.div(ex.Unary("sqrt", g), ex.Unary("sqrt", ex.mul(ex.Const(2.0), gap))))
    return LJ, sdot


@dataclass(frozen=True)
class JacobiReduction:
    reduced: ReducedSystem
    energy: float
    sign: int
    potential: Expr | None  # V when the mechanical form was detected

    def _check_energy(self, point):
        if self.potential is not None:
            V = ex.evaluate(self.potential, {**self.reduced.params, **point})
            if not self.energy > V:
                raise DomainError(self.potential, f"energy {self.energy} does not exceed V = {V}")

    def stationary_sdot(self, point: Mapping[str, float]) -> float:
        self._check_energy(point)
        return self.reduced.cyclic_velocity_at(point)

    def value(self, point: Mapping[str, float]) -> float:
        self._check_energy(point)
        return self.reduced.routhian_at(point)


def jacobi_reduce(
    sys: LagrangianSystem,
    energy: float,
    sign: int = 1,
    bracket: Sequence[float] | None = None,
    method: str = "auto",
) -> JacobiReduction:
    """Homogenise, then Routh-reduce at level ``-energy``.

    ``method="numeric"`` forces root finding on the constraint (the default
    bracket is ``sign * [1e-8, 1e8]``); ``"auto"`` uses the closed-form
    branches when the constraint is quadratic after clearing denominators.
    """
    hom = homogenize(sys)
    level = MomentumLevel(-float(energy), hom.chart.cyclic)
    sign = 1 if sign >= 0 else -1
    if bracket is None:
        bracket = (sign * 1e-8, sign * 1e8)
    split = mechanical_split(sys)
    potential = split.potential if split else None
    if method == "numeric":
        sol = solve_cyclic_velocity(hom, level)
        red = routhian(hom, level, bracket=bracket) if sol.kind == "numeric" else _numeric_reduction(hom, level, sol, bracket)
        return JacobiReduction(red, float(energy), sign, potential)
    sol = solve_cyclic_velocity(hom, level)
    if sol.kind == "branches":
        probe = _probe_point(hom, level, sol)
        branch = 0
        for i, e in enumerate(sol.branches):
            try:
                if np.sign(ex.evaluate(e, probe)) == sign:
                    branch = i
                    break
            except DomainError:
                continue
        red = routhian(hom, level, branch=branch)
    elif sol.kind == "explicit":
        red = routhian(hom, level)
    else:
        red = routhian(hom, level, bracket=bracket)
    return JacobiReduction(red, float(energy), sign, potential)


def _numeric_reduction(hom, level, sol, bracket) -> ReducedSystem:
    red = routhian(hom, level, branch=0) if sol.kind == "branches" else routhian(hom, level)
    numeric = replace(sol, kind="numeric", branches=())
    return replace(red, solution=numeric, routhian=None, cyclic_velocity=None, bracket=tuple(bracket))


def _probe_point(hom, level, sol):
    rng = np.random.default_rng(0)
    names = sorted((set(hom.chart.coords) | set(hom.chart.velocities)) - {sol.target})
    params = _level_params(hom, level)
    for _ in range(200):
        pt = {**params, **ex.random_binding(names, rng, low=0.1, high=0.5, signed=False)}
        try:
            for e in sol.branches:
                ex.evaluate(e, pt)
            return pt
        except DomainError:
            continue
    raise UnsupportedReductionError("could not find a point where the constraint branches are defined")
