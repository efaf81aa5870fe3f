"""Coordinate realisations of lifts and duality maps on TQ, T*Q and their
double bundles.

Bundle points are plain numpy arrays laid out block-wise, e.g. an element of
TT*Q is ``(q, p, qdot, pdot)`` with each block of length ``n``.  Vector
fields carry symbolic components and a bundle tag.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import expr as ex
from .errors import PreconditionError
from .expr import Expr

BUNDLES = ("base", "tangent", "cotangent")


def velocity_name(q: str) -> str:
    return "d" + q


def momentum_name(q: str) -> str:
    return "p_" + q


@dataclass(frozen=True)
class Chart:
    """Ordered coordinate names, optionally with a designated cyclic one.

    The cyclic coordinate ``y`` fixes the straightened symmetry field
    ``X = d/dy``; dropping it gives the chart on the quotient.
    """

    coords: tuple[str, ...]
    cyclic: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        if not self.coords:
            raise ValueError("a chart needs at least one coordinate")
        if len(set(self.coords)) != len(self.coords):
            raise ValueError(f"duplicate coordinate names in {self.coords}")
        if self.cyclic is not None and self.cyclic not in self.coords:
            raise ValueError(f"cyclic coordinate {self.cyclic!r} is not one of {self.coords}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def velocities(self) -> tuple[str, ...]:
        return tuple(velocity_name(q) for q in self.coords)

    @property
    def momenta(self) -> tuple[str, ...]:
        return tuple(momentum_name(q) for q in self.coords)

    def reduced(self) -> "Chart":
        if self.cyclic is None:
            raise ValueError("chart has no cyclic coordinate")
        return Chart(tuple(q for q in self.coords if q != self.cyclic))

    def bundle_vars(self, bundle: str) -> tuple[str, ...]:
        if bundle == "base":
            return self.coords
        if bundle == "tangent":
            return self.coords + self.velocities
        if bundle == "cotangent":
            return self.coords + self.momenta
        raise ValueError(f"unknown bundle {bundle!r}")

    def symmetry_field(self) -> "VectorField":
        """``d/dy`` for the cyclic coordinate ``y``."""
        if self.cyclic is None:
            raise ValueError("chart has no cyclic coordinate")
        return VectorField(self, tuple(ex.ONE if q == self.cyclic else ex.ZERO for q in self.coords))


@dataclass(frozen=True)
class VectorField:
    chart: Chart
    components: tuple[Expr, ...]
    bundle: str = "base"
    _fn: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        comps = tuple(ex.as_expr(c) for c in self.components)
        object.__setattr__(self, "components", comps)
        if self.bundle not in BUNDLES:
            raise ValueError(f"unknown bundle tag {self.bundle!r}")
        want = self.chart.dim * (1 if self.bundle == "base" else 2)
        if len(comps) != want:
            raise ValueError(f"{self.bundle} field on a {self.chart.dim}-dim chart needs {want} components")

    @classmethod
    def from_strings(cls, chart: Chart, components: Sequence[str], bundle: str = "base") -> "VectorField":
        return cls(chart, tuple(ex.parse(c) for c in components), bundle)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.chart.bundle_vars(self.bundle)

    def __call__(self, point: Mapping[str, float] | Sequence[float], params: Mapping[str, float] | None = None) -> np.ndarray:
        """Evaluate the components at a point given as a mapping or an array
        ordered like :attr:`variables`."""
        names = self.variables
        extra = sorted(set().union(*(c.free_vars for c in self.components)) - set(names))
        if self._fn is None:
            object.__setattr__(self, "_fn", ex.compile_exprs(self.components, names + tuple(extra)))
        if isinstance(point, Mapping):
            merged = {**(params or {}), **point}
            vals = [merged[n] for n in names]
        else:
            vals = list(point)
            merged = dict(params or {})
        vals += [merged[n] for n in extra]
        return np.array(self._fn(vals), dtype=float)

    def jacobian(self) -> list[list[Expr]]:
        """``J[j][k] = dX^j/dq^k`` for a base field."""
        if self.bundle != "base":
            raise PreconditionError("jacobian is defined for base fields only")
        return [[ex.diff(c, q) for q in self.chart.coords] for c in self.components]


def _require_base(X: VectorField):
    if X.bundle != "base":
        raise PreconditionError(f"expected a base vector field, got a {X.bundle} field")


def complete_lift(X: VectorField) -> VectorField:
    """Tangent lift d_T X on TQ: components ``X^i`` and ``dX^j/dq^k qdot^k``."""
    _require_base(X)
    vel = X.chart.velocities
    fibre = tuple(
        ex.simplify(ex.total(ex.mul(d, ex.Var(v)) for d, v in zip(row, vel))) for row in X.jacobian()
    )
    return VectorField(X.chart, X.components + fibre, "tangent")


def momentum_function(X: VectorField) -> Expr:
    """The fibre-linear function ``<p, X(q)>`` on T*Q."""
    _require_base(X)
    terms = (ex.mul(ex.Var(p), c) for p, c in zip(X.chart.momenta, X.components))
    return ex.simplify(ex.total(terms))


def hamiltonian_field(h: Expr, chart: Chart) -> VectorField:
    """``(qdot, pdot) = (dh/dp, -dh/dq)`` on T*Q."""
    qdot = tuple(ex.diff(h, p) for p in chart.momenta)
    pdot = tuple(ex.simplify(ex.neg(ex.diff(h, q))) for q in chart.coords)
    return VectorField(chart, qdot + pdot, "cotangent")


def cotangent_lift(X: VectorField) -> VectorField:
    """Cotangent lift: the Hamiltonian field of the momentum function."""
    _require_base(X)
    return hamiltonian_field(momentum_function(X), X.chart)


def _blocks(w, k=4):
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size % k:
        raise PreconditionError(f"expected a flat {k}n-tuple, got shape {w.shape}")
    return np.split(w, k)


def flip_kappa(w) -> np.ndarray:
    """Canonical flip of TTQ: ``(q, qdot, dq, ddq) -> (q, dq, qdot, ddq)``."""
    q, v, dq, dv = _blocks(w)
    return np.concatenate([q, dq, v, dv])


def beta_map(v) -> np.ndarray:
    """TT*Q -> T*T*Q: ``(q, p, qdot, pdot) -> (q, p, pdot, -qdot)``."""
    q, p, qd, pd = _blocks(v)
    return np.concatenate([q, p, pd, -qd])


def beta_map_inverse(v) -> np.ndarray:
    q, p, xi, y = _blocks(v)
    return np.concatenate([q, p, -y, xi])


def alpha_map(v) -> np.ndarray:
    """TT*Q -> T*TQ: ``(q, p, qdot, pdot) -> (q, qdot, pdot, p)``."""
    q, p, qd, pd = _blocks(v)
    return np.concatenate([q, qd, pd, p])


def alpha_map_inverse(v) -> np.ndarray:
    q, qd, phi, psi = _blocks(v)
    return np.concatenate([q, psi, qd, phi])


def tangent_pairing(w, u, tol: float = 1e-12) -> float:
    """Pairing of ``w = (q, p, qdot, pdot)`` in TT*Q with
    ``u = (q, v, qdot, vdot)`` in TTQ, i.e. d/dt <p(t), v(t)>.

    Both must cover the same tangent vector of Q.
    """
    q1, p, qd1, pd = _blocks(w)
    q2, v, qd2, vd = _blocks(u)
    if q1.size != q2.size:
        raise PreconditionError("pairing arguments live over charts of different dimension")
    if np.max(np.abs(q1 - q2), initial=0.0) > tol or np.max(np.abs(qd1 - qd2), initial=0.0) > tol:
        raise PreconditionError("pairing arguments do not cover the same tangent vector")
    return float(pd @ v + p @ vd)


# Two-forms evaluated on pairs of tangent vectors (dq, dp, dqdot, dpdot) to
# TT*Q, resp. on tangent vectors to T*T*Q and T*TQ in their own coordinates.


def tangent_lift_omega(V, W) -> float:
    """``d_T omega_Q = dp ^ dqdot + dpdot ^ dq`` on TT*Q."""
    q1, p1, v1, f1 = _blocks(V)
    q2, p2, v2, f2 = _blocks(W)
    return float(p1 @ v2 - v1 @ p2 + f1 @ q2 - q1 @ f2)


def cotangent_omega(V, W) -> float:
    """``omega_{T*Q} = dxi ^ dq + dy ^ dp`` on T*T*Q with coordinates (q, p, xi, y)."""
    q1, p1, x1, y1 = _blocks(V)
    q2, p2, x2, y2 = _blocks(W)
    return float(x1 @ q2 - q1 @ x2 + y1 @ p2 - p1 @ y2)


def tangent_omega(V, W) -> float:
    """``omega_{TQ} = dphi ^ dq + dpsi ^ dqdot`` on T*TQ with coordinates (q, qdot, phi, psi)."""
    q1, v1, f1, s1 = _blocks(V)
    q2, v2, f2, s2 = _blocks(W)
    return float(f1 @ q2 - q1 @ f2 + s1 @ v2 - v1 @ s2)


def tangent_map(X: VectorField, q, v, params=None) -> np.ndarray:
    """``TX(v)`` in TTQ for ``v`` in T_qQ: ``(q, X(q), v, DX(q) v)``."""
    _require_base(X)
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    jac = evaluate_jacobian(X, q, params)
    return np.concatenate([q, X(q, params), v, jac @ v])


def evaluate_jacobian(X: VectorField, q, params=None) -> np.ndarray:
    rows = X.jacobian()
    names = X.chart.coords
    point = {**(params or {}), **dict(zip(names, np.asarray(q, dtype=float)))}
    return np.array([[ex.evaluate(d, point) for d in row] for row in rows])


def vertical_lift(q, e, f) -> np.ndarray:
    """Vertical lift of ``f`` to ``e`` (both in T_qQ): tangent at t=0 to ``e + t f``."""
    q = np.asarray(q, dtype=float)
    return np.concatenate([q, np.asarray(e, float), np.zeros_like(q), np.asarray(f, float)])


def subtract_over_base_velocity(a, b) -> np.ndarray:
    """Difference in the fibres of ``T tau_Q`` (which fixes ``(q, dq)``)."""
    qa, va, da, fa = _blocks(a)
    qb, vb, db, fb = _blocks(b)
    if not (np.allclose(qa, qb, rtol=0, atol=1e-12) and np.allclose(da, db, rtol=0, atol=1e-12)):
        raise PreconditionError("elements lie in different fibres of T tau_Q")
    return np.concatenate([qa, va - vb, da, fa - fb])
