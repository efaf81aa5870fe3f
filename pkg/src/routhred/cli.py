"""Command-line front end.

Exit codes: 0 ok, 2 definition error, 3 symmetry violation, 4 empty
constraint set, 5 unsupported degenerate reduction, 6 comparison failure,
7 domain error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import expr as ex
from .dynamics import Trajectory, integrate_rk4, monitor
from .errors import (
    BranchAmbiguityError,
    EmptyConstraintSetError,
    EvalError,
    NoRootError,
    ParseError,
    PreconditionError,
    SingularHessianError,
    SymmetryViolationError,
    UnsupportedReductionError,
)
from .geometry import Chart, hamiltonian_field
from .mechanics import LagrangianSystem, cyclic_symmetry, energy, euler_lagrange
from .routh import (
    GaugeRecord,
    MomentumLevel,
    ReducedSystem,
    jacobi_closed_form,
    jacobi_reduce,
    reconstruct_cyclic,
    reduced_dynamics,
    routhian,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK = 0
EXIT_DEFINITION = 2
EXIT_SYMMETRY = 3
EXIT_EMPTY = 4
EXIT_UNSUPPORTED = 5
EXIT_COMPARE = 6
EXIT_DOMAIN = 7

ALPHA_CONSISTENCY = 1e-10


class DefinitionError(Exception):
    pass


def fmt(v: float) -> str:
    return format(float(v), ".17g")


@dataclass
class SystemFile:
    path: Path
    system: LagrangianSystem
    lagrangian_text: str
    initial: dict | None = None
    t0: float = 0.0
    t1: float | None = None
    dt: float | None = None
    reduce: dict = field(default_factory=dict)

    @property
    def cyclic(self) -> str | None:
        return self.system.chart.cyclic

    def require_simulation(self):
        if self.initial is None or self.t1 is None or self.dt is None:
            raise DefinitionError(f"{self.path}: [simulate] needs initial, t1 and dt")
        need = self.system.state_names
        missing = [n for n in need if n not in self.initial]
        if missing:
            raise DefinitionError(f"{self.path}: [simulate] initial is missing {missing}")


def _number(table, key, where):
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise DefinitionError(f"{where}.{key} must be a number, got {v!r}")
    return float(v)


def load_system(path, cyclic: str | None = None) -> SystemFile:
    """Read and validate a TOML system definition.  ``cyclic`` overrides
    the file's choice."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as err:
        raise DefinitionError(f"{path}: {err.strerror or err}") from None
    except tomllib.TOMLDecodeError as err:
        raise DefinitionError(f"{path}: invalid TOML: {err}") from None
    unknown = set(data) - {"system", "params", "simulate", "reduce"}
    if unknown:
        raise DefinitionError(f"{path}: unknown tables {sorted(unknown)}")
    sysd = data.get("system")
    if not isinstance(sysd, dict):
        raise DefinitionError(f"{path}: missing [system] table")
    coords = sysd.get("coordinates")
    if not isinstance(coords, list) or not coords or not all(isinstance(c, str) and c.isidentifier() for c in coords):
        raise DefinitionError(f"{path}: system.coordinates must be a non-empty list of names")
    text = sysd.get("lagrangian")
    if not isinstance(text, str):
        raise DefinitionError(f"{path}: system.lagrangian must be a string")
    cyc = cyclic if cyclic is not None else sysd.get("cyclic")
    if cyc is not None and cyc not in coords:
        raise DefinitionError(f"{path}: cyclic coordinate {cyc!r} is not one of {coords}")
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise DefinitionError(f"{path}: [params] must be a table")
    params = {k: _number(params, k, "params") for k in params}
    try:
        lag = ex.parse(text)
    except ParseError as err:
        raise DefinitionError(f"{path}: system.lagrangian: {err}") from None
    try:
        system = LagrangianSystem(Chart(tuple(coords), cyc), lag, params)
    except ValueError as err:
        raise DefinitionError(f"{path}: {err}") from None
    out = SystemFile(path, system, text)

    sim = data.get("simulate")
    if sim is not None:
        if not isinstance(sim, dict):
            raise DefinitionError(f"{path}: [simulate] must be a table")
        init = sim.get("initial")
        if init is not None:
            if not isinstance(init, dict):
                raise DefinitionError(f"{path}: simulate.initial must be an inline table")
            out.initial = {k: _number(init, k, "simulate.initial") for k in init}
        for key in ("t0", "t1", "dt"):
            if key in sim:
                setattr(out, key, _number(sim, key, "simulate"))
        if out.dt is not None and not out.dt > 0:
            raise DefinitionError(f"{path}: simulate.dt must be positive")
        if out.t1 is not None and not out.t1 > out.t0:
            raise DefinitionError(f"{path}: simulate.t1 must exceed t0")
    red = data.get("reduce", {})
    if not isinstance(red, dict):
        raise DefinitionError(f"{path}: [reduce] must be a table")
    out.reduce = dict(red)
    if "gauge" in red:
        try:
            ex.parse(str(red["gauge"]))
        except ParseError as err:
            raise DefinitionError(f"{path}: reduce.gauge: {err}") from None
    return out


# --------------------------------------------------------------------------
# helpers


def _require_cyclic(sf: SystemFile) -> str:
    if sf.cyclic is None:
        raise DefinitionError(f"{sf.path}: no cyclic coordinate given")
    return sf.cyclic


def _momentum(sf: SystemFile) -> ex.Expr:
    return ex.diff(sf.system.lagrangian, "d" + _require_cyclic(sf))


def _initial_alpha(sf: SystemFile) -> float:
    sf.require_simulation()
    return ex.evaluate(_momentum(sf), {**sf.system.params, **sf.initial})


def _resolve_alpha(sf: SystemFile, override, out) -> float:
    """Explicit flag, then [reduce] alpha, then the value on the initial data."""
    alpha = override if override is not None else sf.reduce.get("alpha")
    if alpha is None:
        return _initial_alpha(sf)
    alpha = float(alpha)
    if sf.initial is not None and all(n in sf.initial for n in sf.system.state_names):
        implied = _initial_alpha(sf)
        if abs(implied - alpha) > ALPHA_CONSISTENCY:
            print(f"warning: alpha = {fmt(alpha)} differs from the initial momentum {fmt(implied)}", file=out)
    return alpha


def _reduce(sf: SystemFile, alpha: float, branch=None, gauge=None, bracket=None) -> ReducedSystem:
    cyc = _require_cyclic(sf)
    branch = branch if branch is not None else sf.reduce.get("branch")
    gauge = gauge if gauge is not None else sf.reduce.get("gauge")
    bracket = bracket if bracket is not None else sf.reduce.get("bracket")
    near = None
    if branch is None and sf.initial is not None:
        near = {**sf.initial}
    record = GaugeRecord(ex.parse(str(gauge))) if gauge is not None else None
    return routhian(sf.system, MomentumLevel(alpha, cyc), gauge=record, branch=branch, near=near, bracket=bracket)


def _reduced_initial(sf: SystemFile, red: ReducedSystem) -> dict:
    """Project the full initial data onto the reduced state."""
    sf.require_simulation()
    point = {**sf.system.params, **sf.initial}
    out = {q: sf.initial[q] for q in red.chart.coords}
    if red.kind == "degenerate":
        for q, p in zip(red.chart.coords, red.chart.momenta):
            out[p] = sf.initial[p] if p in sf.initial else ex.evaluate(ex.diff(sf.system.lagrangian, "d" + q), point)
    else:
        out.update({v: sf.initial[v] for v in red.chart.velocities})
    return out


def _write_csv(traj: Trajectory, dest):
    if dest in (None, "-"):
        traj.to_csv(sys.stdout)
    else:
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            traj.to_csv(fh)


def simulate_full(sf: SystemFile) -> tuple[Trajectory, dict]:
    sf.require_simulation()
    field_ = euler_lagrange(sf.system).first_order()
    traj = integrate_rk4(field_, sf.initial, sf.t0, sf.t1, sf.dt)
    quantities = {"energy": energy(sf.system)}
    if sf.cyclic is not None:
        quantities["iota_X"] = _momentum(sf)
    rep = monitor(traj, quantities, sf.system.params)
    return traj.with_monitors(rep.values), rep.drift


def simulate_reduced(sf: SystemFile, red: ReducedSystem, quadrature="trapezoid"):
    init = _reduced_initial(sf, red)
    traj = integrate_rk4(reduced_dynamics(red), init, sf.t0, sf.t1, sf.dt)
    if red.kind == "degenerate":
        quantities = {"hamiltonian": red.reduced_hamiltonian}
    else:
        quantities = {"energy": energy(red.as_lagrangian())}
    rep = monitor(traj, quantities, red.params)
    y0 = sf.initial[red.cyclic]
    rec = reconstruct_cyclic(red, traj, y0, quadrature=quadrature)
    return rec, rep.drift


# --------------------------------------------------------------------------
# commands


def cmd_validate(args, out) -> int:
    sf = load_system(args.path)
    if sf.initial is not None:
        extra = set(sf.initial) - set(sf.system.state_names) - set(sf.system.chart.momenta)
        if extra:
            raise DefinitionError(f"{sf.path}: simulate.initial has unknown names {sorted(extra)}")
    print("ok", file=out)
    return EXIT_OK


def cmd_symmetry(args, out) -> int:
    sf = load_system(args.path, args.cyclic)
    _require_cyclic(sf)
    res = cyclic_symmetry(sf.system)
    if res.symmetric:
        print(f"symmetric ({res.proof})", file=out)
        return EXIT_OK
    print(f"violation: {ex.render(res.violation)}", file=out)
    return EXIT_SYMMETRY


def _describe(red: ReducedSystem) -> dict:
    r = lambda e: None if e is None else ex.render(e)  # noqa: E731
    info = {
        "kind": red.kind,
        "cyclic": red.cyclic,
        "alpha": red.level.alpha,
        "constraint_solution": red.solution.kind,
        "momentum_constraint": r(red.solution.residual),
        "gauge": r(red.gauge.reference),
        "cyclic_velocity": r(red.cyclic_velocity),
    }
    if red.kind == "regular":
        info["routhian"] = r(red.routhian)
        if red.routhian is not None:
            el = euler_lagrange(red.as_lagrangian())
            info["equations"] = [f"{ex.render(e)} = 0" for e in el.residuals]
    else:
        info["family"] = r(red.family)
        info["constraint"] = r(red.constraint)
        info["reduced_hamiltonian"] = r(red.reduced_hamiltonian)
        if red.reduced_hamiltonian is not None:
            hf = hamiltonian_field(red.reduced_hamiltonian, red.chart)
            names = red.chart.coords + red.chart.momenta
            info["equations"] = [f"d/dt {n} = {ex.render(c)}" for n, c in zip(names, hf.components)]
    return info


def cmd_reduce(args, out) -> int:
    sf = load_system(args.path)
    alpha = _resolve_alpha(sf, args.alpha, sys.stderr)
    red = _reduce(sf, alpha, args.branch, args.gauge, args.bracket)
    info = _describe(red)
    for key, value in info.items():
        if value is None:
            continue
        if isinstance(value, list):
            print(f"{key}:", file=out)
            for line in value:
                print(f"  {line}", file=out)
        else:
            print(f"{key}: {value}", file=out)
    if args.json:
        Path(args.json).write_text(json.dumps(info, indent=2) + "\n", encoding="utf-8")
    if red.kind == "degenerate" and red.reduced_hamiltonian is None:
        print("unsupported: no reduced Hamiltonian for this degenerate reduction", file=sys.stderr)
        return EXIT_UNSUPPORTED
    return EXIT_OK


def _print_drift(drift: dict, out):
    for k, v in drift.items():
        print(f"drift {k}: {fmt(v)}", file=out)


def cmd_simulate(args, out) -> int:
    sf = load_system(args.path)
    sf.require_simulation()
    report = sys.stderr if args.out in (None, "-") else out
    if args.which == "full":
        traj, drift = simulate_full(sf)
    else:
        alpha = _resolve_alpha(sf, args.alpha, sys.stderr)
        red = _reduce(sf, alpha)
        rec, drift = simulate_reduced(sf, red, args.quadrature)
        traj = rec.trajectory
        print(f"alpha: {fmt(alpha)}", file=report)
        if rec.flagged:
            print(f"constraint residual above tolerance at {len(rec.flagged)} samples", file=report)
    _write_csv(traj, args.out)
    _print_drift(drift, report)
    if traj.error:
        print(f"integration stopped early: {traj.error}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_compare(args, out) -> int:
    sf = load_system(args.path)
    sf.require_simulation()
    full, _ = simulate_full(sf)
    alpha = _resolve_alpha(sf, args.alpha, out)
    red = _reduce(sf, alpha)
    rec, _ = simulate_reduced(sf, red, args.quadrature)
    recon = rec.trajectory
    if full.error or recon.error:
        print(f"integration stopped early: {full.error or recon.error}", file=sys.stderr)
        return EXIT_DOMAIN
    common = [n for n in full.names if n in recon.names]
    print(f"alpha: {fmt(alpha)}", file=out)
    worst = 0.0
    errors = {}
    for n in common:
        other = np.interp(full.t, recon.t, recon.column(n))
        errors[n] = np.abs(full.column(n) - other)
        dev = float(errors[n].max())
        worst = max(worst, dev)
        print(f"deviation {n}: {fmt(dev)}", file=out)
    if rec.flagged:
        print(f"constraint residual above tolerance at {len(rec.flagged)} samples", file=out)
    if args.out:
        _write_csv(Trajectory(tuple(f"err_{n}" for n in common), full.t, np.column_stack(list(errors.values()))), args.out)
    ok = worst <= args.tol and not rec.flagged
    print(f"max deviation {fmt(worst)} {'<=' if ok else '>'} tol {fmt(args.tol)}: {'pass' if ok else 'FAIL'}", file=out)
    return EXIT_OK if ok else EXIT_COMPARE


def _read_samples(path, names) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    missing = [n for n in names if rows and n not in rows[0]]
    if not rows or missing:
        raise DefinitionError(f"{path}: sample file needs a header with {list(names)} and at least one row")
    try:
        return [{n: float(r[n]) for n in names} for r in rows]
    except ValueError as err:
        raise DefinitionError(f"{path}: {err}") from None


def cmd_jacobi(args, out) -> int:
    sf = load_system(args.path)
    E = args.energy if args.energy is not None else sf.reduce.get("energy")
    if E is None:
        raise DefinitionError("an energy is required (--energy or reduce.energy)")
    E = float(E)
    sign = -1 if args.sign == "-" else 1
    names = sf.system.state_names
    if args.sample:
        samples = _read_samples(args.sample, names)
    elif sf.initial is not None:
        samples = [{n: sf.initial[n] for n in names if n in sf.initial}]
    else:
        raise DefinitionError("no evaluation points (--sample or simulate.initial)")
    jr = jacobi_reduce(sf.system, E, sign=sign, bracket=args.bracket, method=args.method)
    closed = None
    if jr.potential is not None:
        closed = jacobi_closed_form(sf.system, E, sign)
    header = list(names) + ["L_J", "sdot"] + (["closed", "rel_dev"] if closed else [])
    print(",".join(header), file=out)
    flagged = []
    for i, pt in enumerate(samples):
        try:
            value = jr.value(pt)
            sdot = jr.stationary_sdot(pt)
        except (EvalError, NoRootError) as err:
            flagged.append(i)
            print(f"sample {i}: {err}", file=sys.stderr)
            continue
        row = [pt[n] for n in names] + [value, sdot]
        if closed:
            c = ex.evaluate(closed[0], {**sf.system.params, **pt})
            row += [c, abs(value - c) / max(abs(c), 1e-300)]
        print(",".join(fmt(v) for v in row), file=out)
    if flagged:
        print(f"{len(flagged)} samples outside the energy domain: {flagged}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="routhred", description="Routh reduction of Lagrangian systems with a cyclic coordinate")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and check a system file")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("symmetry", help="check that the cyclic coordinate is a symmetry")
    p.add_argument("path")
    p.add_argument("--cyclic", help="override the cyclic coordinate")
    p.set_defaults(func=cmd_symmetry)

    p = sub.add_parser("reduce", help="print the Routhian or the degenerate reduction")
    p.add_argument("path")
    p.add_argument("--alpha", type=float)
    p.add_argument("--branch", choices=["+", "-"])
    p.add_argument("--gauge", help="reference section f(x) over the reduced coordinates")
    p.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--json", help="also write a JSON description here")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("simulate", help="integrate the full or the reduced system")
    p.add_argument("path")
    p.add_argument("--which", choices=["full", "reduced"], default="full")
    p.add_argument("--alpha", type=float)
    p.add_argument("--quadrature", choices=["trapezoid", "simpson"], default="trapezoid")
    p.add_argument("--out", help="CSV destination (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="full simulation against reduced simulation plus reconstruction")
    p.add_argument("path")
    p.add_argument("--alpha", type=float)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--quadrature", choices=["trapezoid", "simpson"], default="simpson")
    p.add_argument("--out", help="CSV of per-sample absolute deviations")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("jacobi", help="evaluate the Jacobi-reduced Lagrangian at fixed energy")
    p.add_argument("path")
    p.add_argument("--energy", type=float)
    p.add_argument("--sign", choices=["+", "-"], default="+")
    p.add_argument("--sample", help="CSV of evaluation points with a header of state names")
    p.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--method", choices=["auto", "numeric"], default="auto")
    p.set_defaults(func=cmd_jacobi)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (DefinitionError, ParseError, BranchAmbiguityError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DEFINITION
    except SymmetryViolationError as err:
        print(f"symmetry violation: {err}", file=sys.stderr)
        return EXIT_SYMMETRY
    except EmptyConstraintSetError as err:
        print(f"empty constraint set: {err}", file=sys.stderr)
        return EXIT_EMPTY
    except UnsupportedReductionError as err:
        print(f"unsupported: {err}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (EvalError, NoRootError, SingularHessianError) as err:
        print(f"domain error: {err}", file=sys.stderr)
        return EXIT_DOMAIN
    except PreconditionError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DEFINITION


if __name__ == "__main__":
    sys.exit(main())
