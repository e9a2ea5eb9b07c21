"""Small symbolic expression language: parse, differentiate, simplify, evaluate.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

so ``-x^2`` is ``-(x^2)`` and ``a^b^c`` is ``a^(b^c)``.  ``pow(a, b)`` is
accepted as a spelling of ``a^b``.

Trees are immutable and hash-consed by structure.  Numeric evaluation goes
through a per-expression compiled Python function; on any floating point
failure it falls back to a tree walk that reports the offending
subexpression.
"""

from __future__ import annotations

import functools
import math
import re
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Expr", "Const", "Var", "Neg", "BinOp", "Call",
    "ExprError", "ParseError", "UnknownFunctionError", "UnboundVariableError", "DomainError",
    "FUNCTIONS", "parse", "to_string", "diff", "simplify", "evaluate", "evaluate_many",
    "free_vars", "as_expr", "lambdify", "substitute", "is_zero", "ZERO", "ONE",
]

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "tanh", "abs", "sign", "pow")
_UNARY_FUNCTIONS = frozenset(FUNCTIONS) - {"pow"}
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ExprError(Exception):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, offset: int, expected: Iterable[str] = ()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class UnknownFunctionError(ParseError):
    pass


class UnboundVariableError(ExprError, KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound variable {name!r}")

    def __str__(self) -> str:
        return self.args[0]


class DomainError(ExprError, ArithmeticError):
    def __init__(self, message: str, subexpr: "Expr"):
        self.subexpr = subexpr
        super().__init__(f"{message} in {to_string(subexpr)}")


# ---------------------------------------------------------------------------
# nodes


class Expr:
    """Base node.  Subclasses set ``_key`` (structural identity) in ``__init__``."""

    __slots__ = ("_key", "_hash")

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr) or self._hash != other._hash:
            return False
        return self._key == other._key

    def __hash__(self):
        return self._hash

    def __setattr__(self, name, value):
        raise AttributeError("Expr nodes are immutable")

    def _init(self, key):
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))

    @property
    def children(self) -> tuple["Expr", ...]:
        return ()

    def __str__(self):
        return to_string(self)

    def __add__(self, other):
        return BinOp("+", self, as_expr(other))

    def __radd__(self, other):
        return BinOp("+", as_expr(other), self)

    def __sub__(self, other):
        return BinOp("-", self, as_expr(other))

    def __rsub__(self, other):
        return BinOp("-", as_expr(other), self)

    def __mul__(self, other):
        return BinOp("*", self, as_expr(other))

    def __rmul__(self, other):
        return BinOp("*", as_expr(other), self)

    def __truediv__(self, other):
        return BinOp("/", self, as_expr(other))

    def __rtruediv__(self, other):
        return BinOp("/", as_expr(other), self)

    def __pow__(self, other):
        return BinOp("^", self, as_expr(other))

    def __neg__(self):
        return Neg(self)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: float):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"non-finite constant {value!r}")
        object.__setattr__(self, "value", value)
        self._init(("c", value))

    def __repr__(self):
        return f"Const({self.value!r})"


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        if not _IDENT.match(name):
            raise ValueError(f"invalid variable name {name!r}")
        object.__setattr__(self, "name", name)
        self._init(("v", name))

    def __repr__(self):
        return f"Var({self.name!r})"


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        object.__setattr__(self, "arg", arg)
        self._init(("neg", arg))

    @property
    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Neg({self.arg!r})"


class BinOp(Expr):
    __slots__ = ("op", "left", "right")

    def __init__(self, op: str, left: Expr, right: Expr):
        if op not in "+-*/^" or len(op) != 1:
            raise ValueError(f"unknown operator {op!r}")
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        self._init(("bin", op, left, right))

    @property
    def children(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"BinOp({self.op!r}, {self.left!r}, {self.right!r})"


class Call(Expr):
    __slots__ = ("fn", "arg")

    def __init__(self, fn: str, arg: Expr):
        if fn not in _UNARY_FUNCTIONS:
            raise ValueError(f"unknown function {fn!r}")
        object.__setattr__(self, "fn", fn)
        object.__setattr__(self, "arg", arg)
        self._init(("call", fn, arg))

    @property
    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Call({self.fn!r}, {self.arg!r})"


ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(value) -> Expr:
    """Coerce numbers and strings (parsed) to ``Expr``."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return parse(value)
    if isinstance(value, (int, float, np.floating, np.integer)):
        v = float(value)
        return Neg(Const(-v)) if v < 0 else Const(v)
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def free_vars(e: Expr) -> frozenset[str]:
    out: set[str] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        else:
            stack.extend(node.children)
    return frozenset(out)


def is_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0.0


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, offset = self.peek()
        if text != value or kind != "op":
            raise ParseError(f"expected {value!r}", offset, {value})
        self.advance()

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", offset, {"+", "-", "*", "/", "^", "end of input"})
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, offset = self.advance()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if self.peek()[:2] != ("op", "("):
                return Var(text)
            if text not in FUNCTIONS:
                raise UnknownFunctionError(f"unknown function {text!r}", offset, FUNCTIONS)
            self.advance()
            args = [self.expr()]
            while self.peek()[:2] == ("op", ","):
                self.advance()
                args.append(self.expr())
            self.expect(")")
            want = 2 if text == "pow" else 1
            if len(args) != want:
                raise ParseError(f"{text} takes {want} argument(s), got {len(args)}", offset)
            if text == "pow":
                return BinOp("^", args[0], args[1])
            return Call(text, args[0])
        if (kind, text) == ("op", "("):
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(
            "unexpected end of input" if kind == "end" else f"unexpected token {text!r}",
            offset,
            {"number", "identifier", "(", "-"},
        )


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises ``ParseError`` carrying the offset of the offending token and the
    set of tokens that would have been accepted there.
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 0, {"number", "identifier", "(", "-"})
    return _Parser(text).parse()


def _fmt_number(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        s = str(int(v))
    else:
        s = repr(v)
    return f"({s})" if v < 0 else s


def to_string(e: Expr) -> str:
    """Fully parenthesized canonical text; ``parse`` reads it back."""
    if isinstance(e, Const):
        return _fmt_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_string(e.arg)})"
    if isinstance(e, BinOp):
        return f"({to_string(e.left)} {e.op} {to_string(e.right)})"
    if isinstance(e, Call):
        return f"{e.fn}({to_string(e.arg)})"
    raise TypeError(type(e))


# ---------------------------------------------------------------------------
# simplification


def _num(v: float) -> Expr:
    return Neg(Const(-v)) if v < 0 else Const(v)


def _const_value(e: Expr) -> float | None:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Neg) and isinstance(e.arg, Const):
        return -e.arg.value
    return None


def _fold(e: Expr) -> Expr | None:
    """Evaluate a node whose children are constants; None if not foldable."""
    try:
        v = _eval_node(e, {})
    except (ExprError, ArithmeticError, ValueError):
        return None
    if not math.isfinite(v):
        return None
    return _num(v)


@functools.lru_cache(maxsize=65536)
def _ac_key(e: Expr):
    """Structural key that ignores the order of operands of + and *."""
    if isinstance(e, BinOp) and e.op in "+*":
        parts = []
        stack = [e.left, e.right]
        while stack:
            x = stack.pop()
            if isinstance(x, BinOp) and x.op == e.op:
                stack += [x.left, x.right]
            else:
                parts.append(_ac_key(x))
        return (e.op, tuple(sorted(parts, key=repr)))
    if isinstance(e, BinOp):
        return (e.op, _ac_key(e.left), _ac_key(e.right))
    if isinstance(e, Neg):
        return ("neg", _ac_key(e.arg))
    if isinstance(e, Call):
        return (e.fn, _ac_key(e.arg))
    return e._key


def _simplify_node(e: Expr) -> Expr:
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Neg):
        a = e.arg
        if isinstance(a, Neg):
            return a.arg
        if is_zero(a):
            return ZERO
        if isinstance(a, Const) and a.value < 0:
            return Const(-a.value)
        return e
    if isinstance(e, Call):
        if _const_value(e.arg) is not None:
            return _fold(e) or e
        return e
    op, a, b = e.op, e.left, e.right
    ca, cb = _const_value(a), _const_value(b)
    if ca is not None and cb is not None:
        return _fold(e) or e
    if op == "+":
        if ca == 0.0:
            return b
        if cb == 0.0:
            return a
        if isinstance(b, Neg):
            return _simplify_node(BinOp("-", a, b.arg))
        if isinstance(a, Neg):
            return _simplify_node(BinOp("-", b, a.arg))
    elif op == "-":
        if cb == 0.0:
            return a
        if ca == 0.0:
            return _simplify_node(Neg(b))
        if a == b or _ac_key(a) == _ac_key(b):
            return ZERO
        if isinstance(b, Neg):
            return _simplify_node(BinOp("+", a, b.arg))
    elif op == "*":
        if ca == 0.0 or cb == 0.0:
            return ZERO
        if ca == 1.0:
            return b
        if cb == 1.0:
            return a
        if ca == -1.0:
            return _simplify_node(Neg(b))
        if cb == -1.0:
            return _simplify_node(Neg(a))
        if isinstance(a, Neg) and isinstance(b, Neg):
            return _simplify_node(BinOp("*", a.arg, b.arg))
        if isinstance(a, Neg):
            return _simplify_node(Neg(_simplify_node(BinOp("*", a.arg, b))))
        if isinstance(b, Neg):
            return _simplify_node(Neg(_simplify_node(BinOp("*", a, b.arg))))
        # gather numeric factors to the left: c1*(c2*x) -> (c1*c2)*x
        if ca is not None and isinstance(b, BinOp) and b.op == "*" and _const_value(b.left) is not None:
            return _simplify_node(BinOp("*", _simplify_node(BinOp("*", a, b.left)), b.right))
        if cb is not None and ca is None:
            return _simplify_node(BinOp("*", b, a))
        # x*(c*y) -> c*(x*y)
        if ca is None and isinstance(b, BinOp) and b.op == "*" and _const_value(b.left) is not None:
            return _simplify_node(BinOp("*", b.left, _simplify_node(BinOp("*", a, b.right))))
        # (c*x)*y -> c*(x*y)
        if isinstance(a, BinOp) and a.op == "*" and _const_value(a.left) is not None and cb is None:
            return _simplify_node(BinOp("*", a.left, _simplify_node(BinOp("*", a.right, b))))
    elif op == "/":
        if ca == 0.0:
            return ZERO
        if cb == 1.0:
            return a
        if cb == -1.0:
            return _simplify_node(Neg(a))
        # (c1*x)/c2 -> (c1/c2)*x
        if cb is not None and isinstance(a, BinOp) and a.op == "*" and _const_value(a.left) is not None:
            return _simplify_node(BinOp("*", _simplify_node(BinOp("/", a.left, b)), a.right))
        if isinstance(a, Neg):
            return _simplify_node(Neg(_simplify_node(BinOp("/", a.arg, b))))
        if isinstance(b, Neg):
            return _simplify_node(Neg(_simplify_node(BinOp("/", a, b.arg))))
    elif op == "^":
        if cb == 1.0:
            return a
        if cb == 0.0:
            return ONE
        if ca == 1.0:
            return ONE
    return e


def simplify(e: Expr) -> Expr:
    """Constant folding plus the neutral/absorbing element rules, to a fixpoint.

    Bottom-up rewriting with memoization; a single pass already reaches the
    fixpoint because every rewrite re-simplifies the nodes it builds.
    """
    memo: dict[Expr, Expr] = {}

    def go(node: Expr) -> Expr:
        hit = memo.get(node)
        if hit is not None:
            return hit
        if isinstance(node, Neg):
            out = Neg(go(node.arg))
        elif isinstance(node, BinOp):
            out = BinOp(node.op, go(node.left), go(node.right))
        elif isinstance(node, Call):
            out = Call(node.fn, go(node.arg))
        else:
            out = node
        out = _simplify_node(out)
        memo[node] = out
        return out

    prev, cur = None, e
    while cur != prev:
        prev, cur = cur, go(cur)
    return cur


# ---------------------------------------------------------------------------
# differentiation


def _d(e: Expr, var: str, memo: dict) -> Expr:
    hit = memo.get(e)
    if hit is not None:
        return hit
    if isinstance(e, Const):
        out = ZERO
    elif isinstance(e, Var):
        out = ONE if e.name == var else ZERO
    elif isinstance(e, Neg):
        out = Neg(_d(e.arg, var, memo))
    elif isinstance(e, BinOp):
        a, b = e.left, e.right
        da, db = _d(a, var, memo), _d(b, var, memo)
        if e.op in "+-":
            out = BinOp(e.op, da, db)
        elif e.op == "*":
            out = da * b + a * db
        elif e.op == "/":
            if var not in free_vars(b):
                out = da / b
            else:
                out = (da * b - a * db) / b ** Const(2)
        else:  # '^'
            if var not in free_vars(b):
                # n * a^(n-1) * a'
                out = b * a ** simplify(b - ONE) * da
            else:
                out = e * (db * Call("log", a) + b * da / a)
    else:
        a = e.arg
        da = _d(a, var, memo)
        fn = e.fn
        if fn == "sin":
            inner = Call("cos", a)
        elif fn == "cos":
            inner = Neg(Call("sin", a))
        elif fn == "tan":
            inner = ONE + Call("tan", a) ** Const(2)
        elif fn == "exp":
            inner = e
        elif fn == "log":
            inner = ONE / a
        elif fn == "sqrt":
            inner = ONE / (Const(2) * e)
        elif fn == "tanh":
            inner = ONE - Call("tanh", a) ** Const(2)
        elif fn == "abs":
            # formal derivative; sign(0) = 0
            inner = Call("sign", a)
        else:  # sign: zero almost everywhere
            inner = ZERO
        out = da * inner
    memo[e] = out
    return out


def diff(e: Expr | str, var: str) -> Expr:
    """Exact symbolic partial derivative, simplified.

    ``d/dx abs(u)`` is taken to be ``sign(u) * u'``, which is the formal
    derivative away from ``u = 0``.
    """
    if not _IDENT.match(var):
        raise ValueError(f"invalid variable name {var!r}")
    e = as_expr(e)
    if var not in free_vars(e):
        return ZERO
    return simplify(_d(e, var, {}))


def substitute(e: Expr, mapping: Mapping[str, Expr | float]) -> Expr:
    repl = {k: as_expr(v) for k, v in mapping.items()}

    def go(node):
        if isinstance(node, Var):
            return repl.get(node.name, node)
        if isinstance(node, Neg):
            return Neg(go(node.arg))
        if isinstance(node, BinOp):
            return BinOp(node.op, go(node.left), go(node.right))
        if isinstance(node, Call):
            return Call(node.fn, go(node.arg))
        return node

    return go(e)


# ---------------------------------------------------------------------------
# evaluation


def _pow(a: float, b: float) -> float:
    if a < 0 and not float(b).is_integer():
        raise ValueError("negative base with non-integer exponent")
    return math.pow(a, b)


def _sign(a: float) -> float:
    return (a > 0) - (a < 0)


_MATH = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp,
    "log": math.log, "sqrt": math.sqrt, "tanh": math.tanh, "abs": abs, "sign": _sign,
}


def _eval_node(e: Expr, b: Mapping[str, float], memo: dict | None = None) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return float(b[e.name])
        except KeyError:
            raise UnboundVariableError(e.name) from None
    if memo is not None and e in memo:
        return memo[e]
    if isinstance(e, Neg):
        out = -_eval_node(e.arg, b, memo)
    elif isinstance(e, BinOp):
        x = _eval_node(e.left, b, memo)
        y = _eval_node(e.right, b, memo)
        op = e.op
        try:
            if op == "+":
                out = x + y
            elif op == "-":
                out = x - y
            elif op == "*":
                out = x * y
            elif op == "/":
                if y == 0.0:
                    raise DomainError("division by zero", e)
                out = x / y
            else:
                if x < 0 and not y.is_integer():
                    raise DomainError("negative base with non-integer exponent", e)
                if x == 0 and y < 0:
                    raise DomainError("zero to a negative power", e)
                out = math.pow(x, y)
        except OverflowError:
            raise DomainError("overflow", e) from None
    else:
        x = _eval_node(e.arg, b, memo)
        fn = e.fn
        if fn == "log" and x <= 0:
            raise DomainError("log of non-positive value", e)
        if fn == "sqrt" and x < 0:
            raise DomainError("sqrt of negative value", e)
        try:
            out = _MATH[fn](x)
        except OverflowError:
            raise DomainError("overflow", e) from None
        except ValueError as exc:
            raise DomainError(str(exc), e) from None
    if memo is not None:
        memo[e] = out
    return out


def _emit(e: Expr, var=lambda name: f"b[{name!r}]") -> str:
    if isinstance(e, Const):
        return f"({e.value!r})"
    if isinstance(e, Var):
        return var(e.name)
    if isinstance(e, Neg):
        return f"(-{_emit(e.arg, var)})"
    if isinstance(e, BinOp):
        a, c = _emit(e.left, var), _emit(e.right, var)
        if e.op == "^":
            cv = _const_value(e.right)
            if cv is not None and cv.is_integer() and abs(cv) <= 64:
                return f"({a}**{int(cv)})"
            return f"_pow({a}, {c})"
        return f"({a} {e.op} {c})"
    return f"_{e.fn}({_emit(e.arg, var)})"


_NAMESPACE = {"_pow": _pow, **{f"_{k}": v for k, v in _MATH.items()}}
_COMPILED: dict[tuple[Expr, ...], object] = {}


def _compiled(exprs: tuple[Expr, ...]):
    fn = _COMPILED.get(exprs)
    if fn is None:
        body = ", ".join(_emit(e) for e in exprs)
        code = f"lambda b: ({body},)"
        fn = eval(compile(code, "<expr>", "eval"), dict(_NAMESPACE))
        if len(_COMPILED) > 20000:
            _COMPILED.clear()
        _COMPILED[exprs] = fn
    return fn


def lambdify(exprs: Sequence[Expr], args: Sequence[str], consts: Mapping[str, float] | None = None):
    """Fast ``f(x) -> ndarray`` for the vector of ``exprs`` with positional ``args``.

    ``consts`` are bound at compile time.  Errors are re-raised through the
    tree walk so they name the failing subexpression.  Non-finite outputs are
    passed through; callers that care (the integrators) check their states.
    """
    exprs, args = tuple(exprs), tuple(args)
    consts = dict(consts or {})
    env = {f"k_{k}": float(v) for k, v in consts.items()}

    def var(name):
        if name in args:
            return f"a_{name}"
        if name in consts:
            return f"k_{name}"
        raise UnboundVariableError(name)

    for e in exprs:
        for name in free_vars(e):
            var(name)
    unpack = ", ".join(f"a_{a}" for a in args) + ("," if len(args) == 1 else "")
    body = ", ".join(_emit(e, var) for e in exprs)
    src = f"def _f(x):\n    {unpack} = x\n    return _array(({body}{',' if len(exprs) == 1 else ''}))\n"
    ns = {**_NAMESPACE, **env, "_array": np.array}
    exec(compile(src, "<lambdify>", "exec"), ns)
    fast = ns["_f"]

    def f(x):
        try:
            out = fast(x.tolist() if isinstance(x, np.ndarray) else list(x))
        except (ArithmeticError, ValueError) as exc:
            b = {**consts, **dict(zip(args, map(float, x)))}
            evaluate_many(exprs, b)
            raise DomainError(str(exc), exprs[0]) from None
        return out

    return f


def evaluate(e: Expr | str, b: Mapping[str, float]) -> float:
    """Evaluate ``e`` under the bindings ``b`` in IEEE double precision.

    Raises ``UnboundVariableError`` naming the missing variable and
    ``DomainError`` naming the failing subexpression.
    """
    return float(evaluate_many((as_expr(e),), b)[0])


def evaluate_many(exprs: Sequence[Expr], b: Mapping[str, float]) -> np.ndarray:
    exprs = tuple(exprs)
    if not exprs:
        return np.zeros(0)
    try:
        vals = _compiled(exprs)(b)
    except (ArithmeticError, ValueError, KeyError, TypeError):
        memo: dict = {}
        vals = tuple(_eval_node(e, b, memo) for e in exprs)
        # reached only if the tree walk succeeds where compiled code did not
    out = np.array(vals, dtype=float)
    if not np.all(np.isfinite(out)):
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise DomainError("non-finite result", exprs[bad])
    return out
