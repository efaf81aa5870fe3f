"""Small symbolic expression engine.

Expressions are immutable trees built from :class:`Const`, :class:`Var`,
:class:`Unary` and :class:`Binary` nodes.  The module provides a recursive
descent parser, a renderer whose output re-parses to the same tree,
evaluation (tree walking or compiled to a Python closure), symbolic partial
derivatives, simultaneous substitution and a best-effort simplifier that
folds constants and collects like terms of polynomial subtrees.

Velocity of coordinate ``q`` is the variable ``dq`` by convention.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, ParseError, UnboundVariableError, UnknownFunctionError

UNARY_OPS = ("neg", "sin", "cos", "exp", "log", "sqrt")
FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")

_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


class Expr:
    """Base class for expression nodes.

    Arithmetic operators build new trees, so ``Var("x")**2 + 1`` works.
    """

    __slots__ = ()

    def __add__(self, other):
        return Binary("add", self, as_expr(other))

    def __radd__(self, other):
        return Binary("add", as_expr(other), self)

    def __sub__(self, other):
        return Binary("sub", self, as_expr(other))

    def __rsub__(self, other):
        return Binary("sub", as_expr(other), self)

    def __mul__(self, other):
        return Binary("mul", self, as_expr(other))

    def __rmul__(self, other):
        return Binary("mul", as_expr(other), self)

    def __truediv__(self, other):
        return Binary("div", self, as_expr(other))

    def __rtruediv__(self, other):
        return Binary("div", as_expr(other), self)

    def __pow__(self, other):
        return Binary("pow", self, as_expr(other))

    def __rpow__(self, other):
        return Binary("pow", as_expr(other), self)

    def __neg__(self):
        return Unary("neg", self)

    def __str__(self):
        return render(self)

    @cached_property
    def free_vars(self) -> frozenset:
        return free_vars(self)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class Unary(Expr):
    op: str
    arg: Expr

    def __post_init__(self):
        if self.op not in UNARY_OPS:
            raise ValueError(f"unknown unary op {self.op!r}")


@dataclass(frozen=True, eq=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary op {self.op!r}")


ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return parse(value)
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Const(float(value))
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def free_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, Unary):
        return e.arg.free_vars
    return e.left.free_vars | e.right.free_vars


def is_const(e: Expr, value: float | None = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


# --------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

_ATOM_START = ("number", "identifier", "'('", "'-'")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = self._tokenize(text)
        self.pos = 0

    @staticmethod
    def _tokenize(text):
        tokens = []
        i = 0
        while i < len(text):
            m = _TOKEN_RE.match(text, i)
            if m is None:
                raise ParseError(f"unexpected character {text[i]!r}", _byte_offset(text, i))
            kind = m.lastgroup
            if kind != "ws":
                tokens.append((kind, m.group(), _byte_offset(text, i)))
            i = m.end()
        tokens.append(("eof", "", _byte_offset(text, len(text))))
        return tokens

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text):
        kind, value, offset = self.peek()
        if value != text or kind != "op":
            raise ParseError(f"unexpected {_describe(kind, value)}", offset, (f"'{text}'",))
        return self.take()

    def parse(self):
        e = self.expr()
        kind, value, offset = self.peek()
        if kind != "eof":
            raise ParseError(
                f"unexpected {_describe(kind, value)}", offset, ("'+'", "'-'", "'*'", "'/'", "'^'", "end of input")
            )
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = "add" if self.take()[1] == "+" else "sub"
            e = Binary(op, e, self.term())
        return e

    def term(self):
        e = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = "mul" if self.take()[1] == "*" else "div"
            e = Binary(op, e, self.factor())
        return e

    def factor(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.take()
            return Unary("neg", self.factor())
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Binary("pow", base, self.factor())
        return base

    def atom(self):
        kind, value, offset = self.take()
        if kind == "number":
            return Const(float(value))
        if kind == "ident":
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if value not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {value!r}", offset, FUNCTIONS)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Unary(value, arg)
            return Var(value)
        if kind == "op" and value == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "op" and value == "-":
            return Unary("neg", self.factor())
        raise ParseError(f"unexpected {_describe(kind, value)}", offset, _ATOM_START)


def _byte_offset(text, index):
    return len(text[:index].encode("utf-8"))


def _describe(kind, value):
    return "end of input" if kind == "eof" else repr(value)


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises :class:`ParseError` carrying the byte offset of the failure and
    the set of tokens that would have been accepted there.
    """
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# rendering

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return 3
    if isinstance(e, Const) and e.value < 0:
        return 3
    return 5


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def render(e: Expr) -> str:
    """Render ``e`` as text in the input grammar."""
    if isinstance(e, Const):
        return _fmt_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = render(e.arg)
            if _prec(e.arg) < 3:
                inner = f"({inner})"
            return f"-{inner}"
        return f"{e.op}({render(e.arg)})"
    p = _PREC[e.op]
    left, right = render(e.left), render(e.right)
    if e.op == "pow":
        if _prec(e.left) <= p:
            left = f"({left})"
        if _prec(e.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {_SYMBOL[e.op]} {right}" if p == 1 else f"{left}*{right}" if e.op == "mul" else f"{left}/{right}"


# --------------------------------------------------------------------------
# evaluation


def _pow(base, expo, node):
    if base == 0.0 and expo < 0:
        raise DomainError(node, "zero raised to a negative power")
    if base < 0 and not float(expo).is_integer():
        raise DomainError(node, "negative base with non-integer exponent")
    try:
        return math.pow(base, expo)
    except OverflowError:
        raise DomainError(node, "overflow") from None


def _unary(op, x, node):
    if op == "neg":
        return -x
    if op == "sqrt":
        if x < 0:
            raise DomainError(node, "sqrt of negative value")
        return math.sqrt(x)
    if op == "log":
        if x <= 0:
            raise DomainError(node, "log of non-positive value")
        return math.log(x)
    if op == "exp":
        try:
            return math.exp(x)
        except OverflowError:
            raise DomainError(node, "overflow") from None
    if op == "sin":
        return math.sin(x)
    return math.cos(x)


def evaluate(e: Expr, binding: Mapping[str, float]) -> float:
    """Evaluate ``e`` with every free variable taken from ``binding``."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return float(binding[e.name])
        except KeyError:
            raise UnboundVariableError(e.name) from None
    if isinstance(e, Unary):
        return _unary(e.op, evaluate(e.arg, binding), e)
    a = evaluate(e.left, binding)
    b = evaluate(e.right, binding)
    op = e.op
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if b == 0.0:
            raise DomainError(e, "division by zero")
        return a / b
    return _pow(a, b, e)


# alias used by callers that shadow the builtin name
eval_expr = evaluate


class _Compiler:
    def __init__(self, argnames):
        self.index = {name: i for i, name in enumerate(argnames)}
        self.nodes = []
        self.lines = []
        self.cache = {}

    def emit(self, e: Expr) -> str:
        if e in self.cache:
            return self.cache[e]
        if isinstance(e, Const):
            src = repr(e.value)
        elif isinstance(e, Var):
            if e.name not in self.index:
                raise UnboundVariableError(e.name)
            src = f"x[{self.index[e.name]}]"
        elif isinstance(e, Unary):
            a = self.emit(e.arg)
            if e.op == "neg":
                src = f"(-{a})"
            elif e.op in ("sin", "cos"):
                src = f"_{e.op}({a})"
            else:
                src = f"_unary({e.op!r}, {a}, _nodes[{self._node(e)}])"
        else:
            a, b = self.emit(e.left), self.emit(e.right)
            if e.op in ("add", "sub", "mul"):
                src = f"({a} {_SYMBOL[e.op]} {b})"
            elif e.op == "div":
                src = f"_div({a}, {b}, _nodes[{self._node(e)}])"
            else:
                src = f"_pow({a}, {b}, _nodes[{self._node(e)}])"
        name = f"t{len(self.lines)}"
        self.lines.append(f"    {name} = {src}")
        self.cache[e] = name
        return name

    def _node(self, e):
        self.nodes.append(e)
        return len(self.nodes) - 1


def _div(a, b, node):
    if b == 0.0:
        raise DomainError(node, "division by zero")
    return a / b


def compile_exprs(exprs: Sequence[Expr], argnames: Sequence[str]) -> Callable:
    """Compile expressions into one function ``f(x) -> tuple`` of floats.

    ``x`` is any indexable of values ordered like ``argnames``.  Common
    subtrees are evaluated once.  Domain errors raise like :func:`evaluate`.
    """
    comp = _Compiler(argnames)
    outs = [comp.emit(e) for e in exprs]
    body = "\n".join(comp.lines) if comp.lines else "    pass"
    src = f"def _f(x):\n{body}\n    return ({', '.join(outs)}{',' if len(outs) == 1 else ''})\n"
    scope = {
        "_sin": math.sin,
        "_cos": math.cos,
        "_unary": _unary,
        "_div": _div,
        "_pow": _pow,
        "_nodes": comp.nodes,
    }
    exec(compile(src, "<routhred.expr>", "exec"), scope)
    return scope["_f"]


def compile_expr(e: Expr, argnames: Sequence[str]) -> Callable:
    f = compile_exprs([e], argnames)
    return lambda x: f(x)[0]


# --------------------------------------------------------------------------
# construction helpers that fold the obvious cases


def add(a: Expr, b: Expr) -> Expr:
    if is_const(a, 0.0):
        return b
    if is_const(b, 0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Binary("add", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if is_const(b, 0.0):
        return a
    if is_const(a, 0.0):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Binary("sub", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if is_const(a, 0.0) or is_const(b, 0.0):
        return ZERO
    if is_const(a, 1.0):
        return b
    if is_const(b, 1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Binary("mul", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if is_const(a, 0.0) and not is_const(b, 0.0):
        return ZERO
    if is_const(b, 1.0):
        return a
    return Binary("div", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def power(a: Expr, b: Expr) -> Expr:
    if is_const(b, 0.0):
        return ONE
    if is_const(b, 1.0):
        return a
    return Binary("pow", a, b)


def total(terms: Iterable[Expr]) -> Expr:
    out = ZERO
    for t in terms:
        out = add(out, t)
    return out


# --------------------------------------------------------------------------
# differentiation and substitution


def _diff(e: Expr, v: str) -> Expr:
    if v not in e.free_vars:
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Unary):
        u = e.arg
        du = _diff(u, v)
        if e.op == "neg":
            return neg(du)
        if e.op == "sin":
            return mul(Unary("cos", u), du)
        if e.op == "cos":
            return neg(mul(Unary("sin", u), du))
        if e.op == "exp":
            return mul(e, du)
        if e.op == "log":
            return div(du, u)
        return div(du, mul(Const(2.0), e))
    a, b = e.left, e.right
    da, db = _diff(a, v), _diff(b, v)
    if e.op == "add":
        return add(da, db)
    if e.op == "sub":
        return sub(da, db)
    if e.op == "mul":
        return add(mul(da, b), mul(a, db))
    if e.op == "div":
        return div(sub(mul(da, b), mul(a, db)), power(b, Const(2.0)))
    if v not in b.free_vars:
        lowered = Const(b.value - 1.0) if isinstance(b, Const) else sub(b, ONE)
        return mul(mul(b, power(a, lowered)), da)
    # a^b = exp(b*log(a))
    if simplify(a) == ZERO:
        return ZERO
    return mul(e, add(mul(db, Unary("log", a)), div(mul(b, da), a)))


def diff(e: Expr, v: str) -> Expr:
    """Symbolic partial derivative of ``e`` with respect to variable ``v``."""
    return simplify(_diff(e, v))


def substitute(e: Expr, mapping: Mapping[str, Expr | float | str]) -> Expr:
    """Simultaneously replace variables named in ``mapping``."""
    if not mapping:
        return e
    m = {k: as_expr(val) for k, val in mapping.items()}
    cache = {}

    def go(node):
        if node in cache:
            return cache[node]
        if isinstance(node, Var):
            out = m.get(node.name, node)
        elif isinstance(node, Const) or not (node.free_vars & m.keys()):
            out = node
        elif isinstance(node, Unary):
            out = Unary(node.op, go(node.arg))
        else:
            out = Binary(node.op, go(node.left), go(node.right))
        cache[node] = out
        return out

    return go(e)


# --------------------------------------------------------------------------
# simplification
#
# A polynomial is a dict mapping a monomial to its float coefficient.  A
# monomial is a sorted tuple of (atom, integer exponent) pairs where an atom is
# a Var or a simplified non-polynomial subtree (function application,
# non-integer power, or a multi-term denominator).


@lru_cache(maxsize=65536)
def _atom_key(atom: Expr) -> str:
    return render(atom)


def _mono_key(mono) -> tuple:
    return (sum(abs(k) for _, k in mono), [(_atom_key(a), k) for a, k in mono])


def _mono_mul(m1, m2):
    if not m1:
        return m2
    if not m2:
        return m1
    exps = dict(m1)
    for a, k in m2:
        exps[a] = exps.get(a, 0) + k
    return tuple(sorted(((a, k) for a, k in exps.items() if k != 0), key=lambda ak: _atom_key(ak[0])))


def _poly_add(p, q, scale=1.0):
    out = dict(p)
    for mono, c in q.items():
        v = out.get(mono, 0.0) + scale * c
        if v == 0.0:
            out.pop(mono, None)
        else:
            out[mono] = v
    return out


def _poly_mul(p, q):
    out = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            mono = _mono_mul(m1, m2)
            v = out.get(mono, 0.0) + c1 * c2
            if v == 0.0:
                out.pop(mono, None)
            else:
                out[mono] = v
    return out


def _poly_const(c):
    return {} if c == 0.0 else {(): float(c)}


def _poly_atom(atom, k=1):
    return {((atom, k),): 1.0}


def _as_const(p):
    if not p:
        return 0.0
    if len(p) == 1 and () in p:
        return p[()]
    return None


def _fold_unary(op, x):
    try:
        v = _unary(op, x, None)
    except DomainError:
        return None
    return v if math.isfinite(v) else None


def _to_poly(e: Expr):
    if isinstance(e, Const):
        return _poly_const(e.value)
    if isinstance(e, Var):
        return _poly_atom(e)
    if isinstance(e, Unary):
        if e.op == "neg":
            return {m: -c for m, c in _to_poly(e.arg).items()}
        arg = _from_poly(_to_poly(e.arg))
        if isinstance(arg, Const):
            v = _fold_unary(e.op, arg.value)
            if v is not None:
                return _poly_const(v)
        return _poly_atom(Unary(e.op, arg))
    op = e.op
    if op in ("add", "sub"):
        return _poly_add(_to_poly(e.left), _to_poly(e.right), 1.0 if op == "add" else -1.0)
    if op == "mul":
        return _poly_mul(_to_poly(e.left), _to_poly(e.right))
    if op == "div":
        num, den = _to_poly(e.left), _to_poly(e.right)
        ratio = _poly_ratio(num, den)
        if ratio is not None:
            return _poly_const(ratio)
        return _poly_mul(num, _poly_inverse(den))
    base = _to_poly(e.left)
    expo = _to_poly(e.right)
    k = _as_const(expo)
    cb = _as_const(base)
    if k is not None and cb is not None:
        if not (cb == 0.0 and k < 0) and not (cb < 0 and not float(k).is_integer()):
            try:
                v = math.pow(cb, k)
                if math.isfinite(v):
                    return _poly_const(v)
            except (OverflowError, ValueError):
                pass
    if k is not None and float(k).is_integer():
        n = int(k)
        if n == 0:
            return _poly_const(1.0)
        if n == 1:
            return base
        if len(base) == 1:
            (mono, c), = base.items()
            if n > 0 or c != 0.0:
                return {tuple((a, j * n) for a, j in mono): c ** n}
        if not base:
            return {} if n > 0 else _poly_atom(Binary("pow", ZERO, Const(n)))
        if n < 0:
            return _poly_inverse(_poly_pow_atom(base, -n))
        return _poly_pow_atom(base, n)
    return _poly_atom(Binary("pow", _from_poly(base), _from_poly(expo)))


def _poly_ratio(num, den):
    # num == k * den for a multi-term den
    if len(den) < 2 or num.keys() != den.keys():
        return None
    it = iter(den)
    first = next(it)
    k = num[first] / den[first]
    if all(num[m] == k * den[m] for m in it):
        return k
    return None


def _poly_pow_atom(base, n):
    return _poly_atom(_from_poly(base), n) if n != 1 else base


def _poly_inverse(p):
    if not p:
        return _poly_atom(ZERO, -1)
    if len(p) == 1:
        (mono, c), = p.items()
        return {tuple((a, -k) for a, k in mono): 1.0 / c}
    return _poly_atom(_from_poly(p), -1)


def _factors(mono, sign, out=None):
    for atom, k in mono:
        if (k > 0) != (sign > 0):
            continue
        f = atom if abs(k) == 1 else Binary("pow", atom, Const(abs(k)))
        out = f if out is None else Binary("mul", out, f)
    return out


def _term(mono, c):
    num = _factors(mono, 1, None if abs(c) == 1.0 else Const(c))
    den = _factors(mono, -1)
    if num is None:
        num = Const(c)
    elif c == -1.0:
        num = Unary("neg", num)
    return num if den is None else Binary("div", num, den)


def _from_poly(p) -> Expr:
    if not p:
        return ZERO
    monos = sorted(p, key=_mono_key)
    out = None
    for mono in monos:
        c = p[mono]
        if out is None:
            out = _term(mono, c)
        elif c < 0:
            out = Binary("sub", out, _term(mono, -c))
        else:
            out = Binary("add", out, _term(mono, c))
    return out


def simplify(e: Expr, max_passes: int = 8) -> Expr:
    """Best-effort simplification.

    Folds constants, drops additive zeros and unit factors, and collects like
    terms in polynomial subtrees.  The result evaluates like ``e`` wherever
    ``e`` is defined.  Passes repeat until the tree stops changing, which
    makes the operation idempotent in practice.
    """
    cur = e
    for _ in range(max_passes):
        nxt = _from_poly(_to_poly(cur))
        if nxt == cur:
            return nxt
        cur = nxt
    return cur


def laurent_coefficients(e: Expr, v: str) -> dict[int, Expr] | None:
    """Split ``e`` as ``sum_k c_k * v**k`` with ``c_k`` free of ``v``.

    Returns ``None`` when ``v`` appears inside a non-polynomial subtree (a
    function argument, a non-integer power or a multi-term denominator).
    """
    target = Var(v)
    groups: dict[int, dict] = {}
    for mono, c in _to_poly(e).items():
        k = 0
        rest = []
        for atom, j in mono:
            if atom == target:
                k = j
            elif v in atom.free_vars:
                return None
            else:
                rest.append((atom, j))
        groups.setdefault(k, {})[tuple(rest)] = c
    return {k: _from_poly(p) for k, p in groups.items()}


# --------------------------------------------------------------------------
# numeric zero testing


def random_binding(names: Iterable[str], rng: np.random.Generator, low=0.3, high=2.0, signed=True) -> dict:
    out = {}
    for n in names:
        x = rng.uniform(low, high)
        if signed and rng.random() < 0.5:
            x = -x
        out[n] = x
    return out


def vanishes(
    e: Expr,
    fixed: Mapping[str, float] | None = None,
    samples: int = 1000,
    tol: float = 1e-10,
    rng: np.random.Generator | None = None,
) -> bool:
    """Numerically test whether ``e`` is identically zero.

    Variables not in ``fixed`` are drawn at random; points where ``e`` is
    undefined are skipped.  Returns False if fewer than a tenth of the
    requested samples could be evaluated.
    """
    fixed = dict(fixed or {})
    if isinstance(e, Const):
        return abs(e.value) <= tol
    rng = rng if rng is not None else np.random.default_rng(0)
    names = sorted(e.free_vars - fixed.keys())
    f = compile_expr(e, names + sorted(fixed))
    tail = [fixed[k] for k in sorted(fixed)]
    ok = 0
    for i in range(samples * 4):
        b = random_binding(names, rng, signed=bool(i % 2))
        try:
            val = f([b[n] for n in names] + tail)
        except DomainError:
            continue
        if not math.isfinite(val):
            continue
        if abs(val) > tol:
            return False
        ok += 1
        if ok >= samples:
            break
    return ok >= max(1, samples // 10)
