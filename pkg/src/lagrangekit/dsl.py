"""Expression trees for Lagrangians on TM: parsing, printing, exact
differentiation, constant folding and reference evaluation.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = ("-" | "+") unary | power ;
    power   = primary { "^" exponent } ;
    exponent= ["-" | "+"] primary ;           (* must fold to a constant *)
    primary = number | var | func "(" expr ")" | "(" expr ")" ;
    var     = ("x" | "y") digit { digit } ;    (* x1..xn, y1..yn *)
    func    = "neg" | "sin" | "cos" | "exp" | "log" | "sqrt" ;
    number  = digits ["." [digits]] [("e" | "E") ["+" | "-"] digits]
            | "." digits [("e" | "E") ["+" | "-"] digits] ;

``^`` binds tighter than unary minus, so ``-y1^2`` is ``-(y1^2)``.
All binary operators associate to the left.
"""

from __future__ import annotations

import math
import re

from lagrangekit.errors import (
    DomainError,
    IndexOutOfRange,
    LagrangianSyntaxError,
    UnknownFunction,
)

FUNCTIONS = ("neg", "sin", "cos", "exp", "log", "sqrt")


class Expr:
    """Immutable expression node. Structural equality, cached hash."""

    __slots__ = ("_hash",)

    def _key(self):
        raise NotImplementedError

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__, self._key()))
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other):
        if self is other:
            return True
        return type(self) is type(other) and hash(self) == hash(other) and self._key() == other._key()

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __repr__(self):
        return f"{type(self).__name__}{self._key()!r}"

    def __str__(self):
        return to_text(self)

    # Builders, so families can be written as ordinary arithmetic.
    def __add__(self, other):
        return Add((self, as_expr(other)))

    def __radd__(self, other):
        return Add((as_expr(other), self))

    def __sub__(self, other):
        return Add((self, Func("neg", as_expr(other))))

    def __rsub__(self, other):
        return Add((as_expr(other), Func("neg", self)))

    def __mul__(self, other):
        return Mul((self, as_expr(other)))

    def __rmul__(self, other):
        return Mul((as_expr(other), self))

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __pow__(self, exponent):
        return Pow(self, float(exponent))

    def __neg__(self):
        return Func("neg", self)


def _init(obj, **fields):
    for k, v in fields.items():
        object.__setattr__(obj, k, v)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        _init(self, value=float(value))

    def _key(self):
        return (self.value,)


class Var(Expr):
    """Coordinate variable; ``index`` is 1-based."""

    __slots__ = ("index",)
    prefix = "?"

    def __init__(self, index):
        index = int(index)
        if index < 1:
            raise IndexOutOfRange(f"variable index must be >= 1, got {index}")
        _init(self, index=index)

    def _key(self):
        return (self.index,)

    @property
    def name(self):
        return f"{self.prefix}{self.index}"


class X(Var):
    __slots__ = ()
    prefix = "x"


class Y(Var):
    __slots__ = ()
    prefix = "y"


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        _init(self, terms=tuple(terms))

    def _key(self):
        return self.terms


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors):
        _init(self, factors=tuple(factors))

    def _key(self):
        return self.factors


class Div(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num, den):
        _init(self, num=num, den=den)

    def _key(self):
        return (self.num, self.den)


class Pow(Expr):
    __slots__ = ("base", "exponent")

    def __init__(self, base, exponent):
        if isinstance(exponent, Expr):
            raise TypeError("power exponents must be constants")
        _init(self, base=base, exponent=float(exponent))

    def _key(self):
        return (self.base, self.exponent)


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name, arg):
        if name not in FUNCTIONS:
            raise UnknownFunction(f"unknown function {name!r}")
        _init(self, name=name, arg=arg)

    def _key(self):
        return (self.name, self.arg)


ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Const(value)


def variable(tag) -> Var:
    """Accept ``X(1)``, ``"x1"``, ``"y2"`` and return the variable node."""
    if isinstance(tag, Var):
        return tag
    m = re.fullmatch(r"([xy])(\d+)", str(tag).strip())
    if not m:
        raise ValueError(f"not a variable tag: {tag!r}")
    return (X if m.group(1) == "x" else Y)(int(m.group(2)))


def walk(e: Expr):
    """Yield every node of the tree (shared subtrees once)."""
    seen = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        stack.extend(children(node))


def children(e: Expr):
    if isinstance(e, Add):
        return e.terms
    if isinstance(e, Mul):
        return e.factors
    if isinstance(e, Div):
        return (e.num, e.den)
    if isinstance(e, Pow):
        return (e.base,)
    if isinstance(e, Func):
        return (e.arg,)
    return ()


def max_index(e: Expr) -> int:
    return max((node.index for node in walk(e) if isinstance(node, Var)), default=0)


def depends_on_fiber(e: Expr) -> bool:
    return any(isinstance(node, Y) for node in walk(e))


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(text):
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise LagrangianSyntaxError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, n):
        self.tokens = _tokenize(text)
        self.i = 0
        self.n = n

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise LagrangianSyntaxError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise LagrangianSyntaxError(f"unexpected token {text!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = Add((e, rhs if op == "+" else Func("neg", rhs)))
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            e = Mul((e, rhs)) if op == "*" else Div(e, rhs)
        return e

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] in ("-", "+"):
            op = self.take()[1]
            operand = self.unary()
            return Func("neg", operand) if op == "-" else operand
        return self.power()

    def power(self):
        e = self.primary()
        while self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            pos = self.peek()[2]
            sign = 1.0
            while self.peek()[0] == "op" and self.peek()[1] in ("-", "+"):
                if self.take()[1] == "-":
                    sign = -sign
            exponent = simplify(self.primary())
            if not isinstance(exponent, Const):
                raise LagrangianSyntaxError("exponent must be a constant", pos)
            e = Pow(e, sign * exponent.value)
        return e

    def primary(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            m = re.fullmatch(r"([xy])(\d+)", text)
            if m:
                idx = int(m.group(2))
                if not 1 <= idx <= self.n:
                    raise IndexOutOfRange(
                        f"variable {text} out of range for dimension {self.n}", pos
                    )
                return (X if m.group(1) == "x" else Y)(idx)
            if text not in FUNCTIONS:
                raise UnknownFunction(f"unknown function {text!r}", pos)
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Func(text, arg)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(text)
        raise LagrangianSyntaxError(f"unexpected {found}", pos)


def parse(text: str, n: int) -> Expr:
    """Parse ``text`` into an expression over x1..xn, y1..yn."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return _Parser(text, n).parse()


# ---------------------------------------------------------------- printing

_PREC = {Add: 1, Mul: 2, Div: 2, Func: 4, Pow: 5}


def _prec(e):
    if isinstance(e, Func) and e.name == "neg":
        return 3
    if isinstance(e, Const) and e.value < 0:
        return 3
    return _PREC.get(type(e), 6)


def _num(v):
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_text(e: Expr) -> str:
    """Render ``e`` as DSL text that parses back to an equivalent tree."""

    def wrap(child, min_prec):
        s = to_text(child)
        return f"({s})" if _prec(child) < min_prec else s

    if isinstance(e, Const):
        if math.isnan(e.value) or math.isinf(e.value):
            raise ValueError(f"cannot print non-finite constant {e.value}")
        return _num(e.value) if e.value >= 0 else f"-{_num(-e.value)}"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Add):
        if not e.terms:
            return "0"
        return " + ".join(wrap(t, 2) if i else wrap(t, 1) for i, t in enumerate(e.terms))
    if isinstance(e, Mul):
        if not e.factors:
            return "1"
        return "*".join(wrap(f, 3) if i else wrap(f, 2) for i, f in enumerate(e.factors))
    if isinstance(e, Div):
        return f"{wrap(e.num, 2)}/{wrap(e.den, 3)}"
    if isinstance(e, Pow):
        exp = _num(e.exponent) if e.exponent >= 0 else f"(-{_num(-e.exponent)})"
        return f"{wrap(e.base, 6)}^{exp}"
    if isinstance(e, Func):
        if e.name == "neg":
            return f"-{wrap(e.arg, 3)}"
        return f"{e.name}({to_text(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------- evaluation

def _coords(u):
    if hasattr(u, "x") and hasattr(u, "y"):
        return u.x, u.y
    x, y = u
    return x, y


def evaluate(e: Expr, u) -> float:
    """Tree-walking evaluation at ``u`` (a TangentPoint or an ``(x, y)`` pair).

    This is the reference evaluator; compiled programs are checked against it.
    """
    x, y = _coords(u)
    cache = {}

    def ev(node):
        key = id(node)
        if key in cache:
            return cache[key]
        if isinstance(node, Const):
            v = node.value
        elif isinstance(node, X):
            v = float(x[node.index - 1])
        elif isinstance(node, Y):
            v = float(y[node.index - 1])
        elif isinstance(node, Add):
            v = math.fsum(ev(t) for t in node.terms) if node.terms else 0.0
        elif isinstance(node, Mul):
            v = 1.0
            for f in node.factors:
                v *= ev(f)
        elif isinstance(node, Div):
            d = ev(node.den)
            if d == 0.0:
                raise DomainError("division by zero", to_text(node))
            v = ev(node.num) / d
        elif isinstance(node, Pow):
            v = _pow(ev(node.base), node.exponent, node)
        else:
            v = _func(node.name, ev(node.arg), node)
        if not math.isfinite(v):
            raise DomainError("non-finite value", to_text(node))
        cache[key] = v
        return v

    try:
        return ev(e)
    except IndexError as exc:
        raise IndexOutOfRange("point has fewer coordinates than the expression uses") from exc


def _pow(b, c, node):
    if b == 0.0 and c < 0:
        raise DomainError("zero to a negative power", to_text(node))
    if b < 0.0 and c != int(c):
        raise DomainError("negative base to a non-integer power", to_text(node))
    try:
        return b ** c
    except OverflowError:
        raise DomainError("overflow", to_text(node)) from None


def _func(name, a, node):
    if name == "neg":
        return -a
    if name == "sin":
        return math.sin(a)
    if name == "cos":
        return math.cos(a)
    if name == "exp":
        try:
            return math.exp(a)
        except OverflowError:
            raise DomainError("overflow", to_text(node)) from None
    if name == "log":
        if a <= 0.0:
            raise DomainError("log of non-positive value", to_text(node))
        return math.log(a)
    if a < 0.0:
        raise DomainError("sqrt of negative value", to_text(node))
    return math.sqrt(a)


# ---------------------------------------------------------------- simplify

def simplify(e: Expr) -> Expr:
    """Constant folding and zero/one elimination. Nothing else."""
    memo = {}

    def s(node):
        hit = memo.get(node)
        if hit is not None:
            return hit
        out = _simplify_node(node, s)
        memo[node] = out
        return out

    return s(e)


def _simplify_node(node, s):
    if isinstance(node, (Const, Var)):
        return node
    if isinstance(node, Add):
        terms = []
        acc = 0.0
        for t in map(s, node.terms):
            parts = t.terms if isinstance(t, Add) else (t,)
            for p in parts:
                if isinstance(p, Const):
                    acc += p.value
                else:
                    terms.append(p)
        if acc != 0.0 or not terms:
            terms.append(Const(acc))
        return terms[0] if len(terms) == 1 else Add(terms)
    if isinstance(node, Mul):
        factors = []
        acc = 1.0
        for f in map(s, node.factors):
            parts = f.factors if isinstance(f, Mul) else (f,)
            for p in parts:
                if isinstance(p, Const):
                    acc *= p.value
                else:
                    factors.append(p)
        if acc == 0.0:
            return ZERO
        if not factors:
            return Const(acc)
        if acc == -1.0:
            inner = factors[0] if len(factors) == 1 else Mul(factors)
            return Func("neg", inner)
        if acc != 1.0:
            factors.insert(0, Const(acc))
        return factors[0] if len(factors) == 1 else Mul(factors)
    if isinstance(node, Div):
        num, den = s(node.num), s(node.den)
        if isinstance(den, Const) and den.value == 1.0:
            return num
        if isinstance(num, Const) and num.value == 0.0:
            return ZERO
        if isinstance(num, Const) and isinstance(den, Const) and den.value != 0.0:
            return Const(num.value / den.value)
        return Div(num, den)
    if isinstance(node, Pow):
        base = s(node.base)
        if node.exponent == 0.0:
            return ONE
        if node.exponent == 1.0:
            return base
        if isinstance(base, Const):
            try:
                return Const(_pow(base.value, node.exponent, node))
            except DomainError:
                pass
        return Pow(base, node.exponent)
    arg = s(node.arg)
    if node.name == "neg":
        if isinstance(arg, Const):
            return Const(-arg.value)
        if isinstance(arg, Func) and arg.name == "neg":
            return arg.arg
        return Func("neg", arg)
    if isinstance(arg, Const):
        try:
            v = _func(node.name, arg.value, node)
            if math.isfinite(v):
                return Const(v)
        except DomainError:
            pass
    return Func(node.name, arg)


# ---------------------------------------------------------------- derivative

def differentiate(e: Expr, v, fold: bool = True) -> Expr:
    """Exact symbolic partial derivative of ``e`` with respect to ``v``.

    ``v`` is a variable node or a tag such as ``"y1"``. With ``fold`` the
    result is passed through :func:`simplify`.
    """
    var = variable(v)
    memo = {}

    def d(node):
        hit = memo.get(node)
        if hit is not None:
            return hit
        out = _diff_node(node, var, d)
        memo[node] = out
        return out

    out = d(e)
    return simplify(out) if fold else out


def _is_zero(e):
    return isinstance(e, Const) and e.value == 0.0


def _diff_node(node, var, d):
    if isinstance(node, Const):
        return ZERO
    if isinstance(node, Var):
        return ONE if node == var else ZERO
    if isinstance(node, Add):
        parts = [p for p in map(d, node.terms) if not _is_zero(p)]
        return Add(parts) if parts else ZERO
    if isinstance(node, Mul):
        terms = []
        for k, f in enumerate(node.factors):
            df = d(f)
            if _is_zero(df):
                continue
            terms.append(Mul(node.factors[:k] + (df,) + node.factors[k + 1:]))
        return Add(terms) if terms else ZERO
    if isinstance(node, Div):
        dn, dd = d(node.num), d(node.den)
        if _is_zero(dd):
            return Div(dn, node.den) if not _is_zero(dn) else ZERO
        top = Add((Mul((dn, node.den)), Func("neg", Mul((node.num, dd)))))
        return Div(top, Pow(node.den, 2.0))
    if isinstance(node, Pow):
        db = d(node.base)
        if _is_zero(db) or node.exponent == 0.0:
            return ZERO
        c = node.exponent
        return Mul((Const(c), Pow(node.base, c - 1.0), db))
    da = d(node.arg)
    if _is_zero(da):
        return ZERO
    a = node.arg
    if node.name == "neg":
        return Func("neg", da)
    if node.name == "sin":
        return Mul((Func("cos", a), da))
    if node.name == "cos":
        return Func("neg", Mul((Func("sin", a), da)))
    if node.name == "exp":
        return Mul((node, da))
    if node.name == "log":
        return Div(da, a)
    return Div(da, Mul((Const(2.0), node)))
