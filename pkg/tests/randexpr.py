"""Random expression trees over the grammar, for property tests."""
import math

import numpy as np

from routhred.expr import Binary, Const, DomainError, Unary, Var, compile_expr

VARS = ("a", "b", "c")


def random_expr(rng: np.random.Generator, depth: int = 4, names=VARS):
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.7:
            return Var(str(rng.choice(names)))
        return Const(float(rng.integers(1, 6)) / 2.0)
    r = rng.random()
    if r < 0.2:
        op = str(rng.choice(["neg", "sin", "cos", "exp", "log", "sqrt"]))
        return Unary(op, random_expr(rng, depth - 1, names))
    if r < 0.3:
        base = random_expr(rng, depth - 1, names)
        if rng.random() < 0.7:
            k = float(rng.choice([2, 3, -1, 0.5]))
            return Binary("pow", base, Const(k) if k > 0 else Unary("neg", Const(-k)))
        return Binary("pow", base, random_expr(rng, depth - 2, names) if depth > 1 else Var(str(rng.choice(names))))
    op = str(rng.choice(["add", "sub", "mul", "div"]))
    return Binary(op, random_expr(rng, depth - 1, names), random_expr(rng, depth - 1, names))


def interior_point(e, rng, names=VARS, radius=0.05, bound=1e3, tries=20):
    """A random binding where ``e`` is finite and moderate on a neighbourhood."""
    f = compile_expr(e, names)
    for _ in range(tries):
        x = rng.uniform(-2.0, 2.0, size=len(names))
        try:
            vals = [f(x + d) for d in (np.zeros(len(names)), *(radius * s for s in rng.choice([-1.0, 1.0], size=(4, len(names)))))]
        except DomainError:
            continue
        if all(math.isfinite(v) and abs(v) < bound for v in vals):
            return dict(zip(names, x))
    return None


def random_polynomial(rng, names, degree=3, terms=4):
    """Random polynomial expression with small integer coefficients."""
    out = Const(float(rng.integers(-2, 3)))
    for _ in range(terms):
        mono = Const(float(rng.integers(-3, 4)))
        for _ in range(int(rng.integers(0, degree + 1))):
            mono = Binary("mul", mono, Var(str(rng.choice(names))))
        out = Binary("add", out, mono)
    return out
