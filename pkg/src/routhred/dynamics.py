"""Fixed-step integration, conserved-quantity monitors and trajectory
comparison."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import expr as ex
from .errors import EvalError, PreconditionError
from .expr import Expr


@dataclass(frozen=True)
class FirstOrderField:
    """Autonomous first-order system ``state' = rhs(state)``.

    ``names`` orders the state vector.  ``rhs`` takes and returns 1-d arrays.
    """

    names: tuple[str, ...]
    rhs: Callable[[np.ndarray], np.ndarray]

    def __call__(self, state) -> np.ndarray:
        return np.asarray(self.rhs(np.asarray(state, dtype=float)), dtype=float)

    def initial_state(self, values: Mapping[str, float]) -> np.ndarray:
        missing = [n for n in self.names if n not in values]
        if missing:
            raise PreconditionError(f"initial state is missing {missing}")
        return np.array([float(values[n]) for n in self.names])

    @classmethod
    def from_exprs(cls, names: Sequence[str], derivatives: Sequence[Expr], params: Mapping[str, float] | None = None):
        """Field whose i-th derivative is the expression ``derivatives[i]``."""
        params = dict(params or {})
        extra = sorted(set().union(*(d.free_vars for d in derivatives)) - set(names))
        unbound = [n for n in extra if n not in params]
        if unbound:
            raise PreconditionError(f"field expressions use unbound names {unbound}")
        f = ex.compile_exprs(list(derivatives), list(names) + extra)
        tail = [params[n] for n in extra]

        def rhs(state):
            return np.array(f(list(state) + tail))

        return cls(tuple(names), rhs)


@dataclass(frozen=True)
class Trajectory:
    names: tuple[str, ...]
    t: np.ndarray
    samples: np.ndarray
    monitors: dict = field(default_factory=dict)
    error: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        t = np.asarray(self.t, dtype=float)
        s = np.asarray(self.samples, dtype=float).reshape(len(t), len(self.names))
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("time grid must be strictly increasing")
        t.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return len(self.t)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.samples[:, self.names.index(name)]
        except ValueError:
            raise KeyError(f"trajectory has no component {name!r}; has {self.names}") from None

    def final(self) -> dict:
        return dict(zip(self.names, self.samples[-1]))

    def with_columns(self, columns: Mapping[str, np.ndarray]) -> "Trajectory":
        names = self.names + tuple(columns)
        extra = np.column_stack([np.asarray(c, float) for c in columns.values()]) if columns else np.empty((len(self), 0))
        return replace(self, names=names, samples=np.hstack([self.samples, extra]))

    def with_monitors(self, values: Mapping[str, np.ndarray]) -> "Trajectory":
        return replace(self, monitors={**self.monitors, **values})

    def to_csv(self, fh=None) -> str | None:
        """Write ``t`` plus every component with 17 significant digits."""
        out = io.StringIO() if fh is None else fh
        out.write(",".join(("t",) + self.names) + "\n")
        for ti, row in zip(self.t, self.samples):
            out.write(",".join(format(v, ".17g") for v in (ti, *row)) + "\n")
        return out.getvalue() if fh is None else None


def _grid(t0: float, t1: float, dt: float) -> np.ndarray:
    n = int(math.floor((t1 - t0) / dt + 1e-9))
    t = t0 + dt * np.arange(n + 1)
    if t1 - t[-1] > 1e-12 * max(1.0, abs(t1)):
        t = np.append(t, t1)
    else:
        t[-1] = t1
    return t


def integrate_rk4(field: FirstOrderField, state0, t0: float, t1: float, dt: float) -> Trajectory:
    """Classical fourth-order Runge-Kutta on a fixed grid.

    The last step is shortened to land exactly on ``t1``.  If the field
    cannot be evaluated mid-run, the samples computed so far are returned
    with ``error`` describing the failure.
    """
    if not dt > 0:
        raise PreconditionError("dt must be positive")
    if not t1 > t0:
        raise PreconditionError("t1 must exceed t0")
    y = field.initial_state(state0) if isinstance(state0, Mapping) else np.array(state0, dtype=float)
    t = _grid(t0, t1, dt)
    out = np.empty((len(t), len(y)))
    out[0] = y
    for k in range(len(t) - 1):
        h = t[k + 1] - t[k]
        try:
            k1 = field(y)
            k2 = field(y + 0.5 * h * k1)
            k3 = field(y + 0.5 * h * k2)
            k4 = field(y + h * k3)
        except (EvalError, np.linalg.LinAlgError, ArithmeticError) as err:
            return Trajectory(field.names, t[: k + 1], out[: k + 1], error=f"t={t[k]:.17g}: {err}")
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = y
    return Trajectory(field.names, t, out)


@dataclass(frozen=True)
class MonitorReport:
    values: dict
    drift: dict

    def max_drift(self) -> float:
        return max(self.drift.values(), default=0.0)


def monitor(
    traj: Trajectory,
    quantities: Mapping[str, Expr] | Iterable[Expr],
    params: Mapping[str, float] | None = None,
) -> MonitorReport:
    """Evaluate each quantity on every sample; drift is ``max |v - v0|``."""
    if not isinstance(quantities, Mapping):
        quantities = {ex.render(q): q for q in quantities}
    params = dict(params or {})
    names = list(traj.names)
    values, drift = {}, {}
    for label, q in quantities.items():
        extra = sorted(q.free_vars - set(names))
        f = ex.compile_expr(q, names + extra)
        tail = [params[n] for n in extra]
        vals = np.array([f(list(row) + tail) for row in traj.samples])
        values[label] = vals
        drift[label] = float(np.max(np.abs(vals - vals[0]))) if len(vals) else 0.0
    return MonitorReport(values, drift)


def compare(a: Trajectory, b: Trajectory, pairs: Iterable[tuple[str, str]] | None = None) -> dict:
    """Sup-norm deviation per component pair, with ``b`` linearly
    interpolated onto the part of ``a``'s grid that ``b`` covers."""
    if pairs is None:
        pairs = [(n, n) for n in a.names if n in b.names]
    lo, hi = max(a.t[0], b.t[0]), min(a.t[-1], b.t[-1])
    if lo > hi:
        raise PreconditionError("trajectories have disjoint time ranges")
    eps = 1e-12 * max(1.0, abs(hi))
    mask = (a.t >= lo - eps) & (a.t <= hi + eps)
    ta = np.clip(a.t[mask], b.t[0], b.t[-1])
    out = {}
    for na, nb in pairs:
        va = a.column(na)[mask]
        vb = np.interp(ta, b.t, b.column(nb)) if len(b) > 1 else np.full_like(va, b.column(nb)[0])
        out[(na, nb)] = float(np.max(np.abs(va - vb)))
    return out
