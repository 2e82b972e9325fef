"""Symbolic scalar expressions: parsing, printing, canonical simplification,
differentiation, high-precision evaluation and equality verdicts.

Expressions are plain sympy trees restricted to exact rationals, symbols,
sums, products, powers and the functions in :data:`FUNCTIONS`.  The grammar
accepted by :func:`parse` is::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("+" | "-") unary | power
    power   := atom ("^" unary)?          # right associative, binds tighter than unary minus
    atom    := number | call | name | "(" expr ")"
    call    := FUNC "(" expr ")"
    number  := digits ("." digits)?       # decimals are read exactly
    name    := [A-Za-z_][A-Za-z0-9_]*

``**`` is accepted as a synonym of ``^``.
"""
from __future__ import annotations

import enum
import os
import random
import re
from fractions import Fraction
from typing import Union

import mpmath
import sympy as sp

from .errors import (
    DomainError,
    ExpressionError,
    ParseError,
    SimplificationBudgetExceeded,
    UnboundSymbolError,
    UnknownFunctionError,
)

Expression = sp.Expr
Number = Union[Fraction, mpmath.mpf]

FUNCTIONS = {
    "exp": sp.exp,
    "log": sp.log,
    "sin": sp.sin,
    "cos": sp.cos,
    "sinh": sp.sinh,
    "cosh": sp.cosh,
    "tanh": sp.tanh,
    "sqrt": sp.sqrt,
}

DEFAULT_BUDGET = 40000


def working_precision():
    """Decimal digits used by :func:`evaluate`; ``PGEO_PRECISION`` overrides the default 50."""
    return int(os.environ.get("PGEO_PRECISION", "50"))


def symbol(name, positive=False):
    if positive:
        return sp.Symbol(name, positive=True)
    return sp.Symbol(name, real=True)


def as_expression(value, positive=()):
    """Coerce strings, numbers and Fractions to an Expression."""
    if isinstance(value, sp.Basic):
        return value
    if isinstance(value, str):
        return parse(value, positive=positive)
    if isinstance(value, Fraction):
        return sp.Rational(value.numerator, value.denominator)
    if isinstance(value, int):
        return sp.Integer(value)
    raise ExpressionError(f"cannot interpret {value!r} as an exact expression")


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", text, bad)
        kind = m.lastgroup
        value = m.group(kind)
        if value == "**":
            value = "^"
        tokens.append((kind, value, m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, positive, symbols):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.positive = set(positive)
        self.symbols = symbols

    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None):
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ParseError(f"expected {value!r}, found {what}", self.text, tok[2])
        self.i += 1
        return tok

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected {tok[1]!r}", self.text, tok[2])
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            _, op, pos = self.take()
            rhs = self.unary()
            if op == "*":
                e = e * rhs
            else:
                if rhs == 0:
                    raise ParseError("division by literal zero", self.text, pos)
                e = e / rhs
        return e

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            exponent = self.unary()
            if base == 0 and exponent.is_positive is not True:
                raise ParseError("0 raised to a non-positive power", self.text, self.peek()[2])
            return base**exponent
        return base

    def atom(self):
        kind, value, pos = self.take()
        if kind == "number":
            return sp.Rational(value)
        if kind == "name":
            if self.peek()[1] == "(":
                fn = FUNCTIONS.get(value)
                if fn is None:
                    raise UnknownFunctionError(f"unknown function {value!r}", self.text, pos)
                self.take("(")
                arg = self.expr()
                self.take(")")
                if value == "sqrt" and arg.is_nonnegative is not True:
                    raise ParseError(
                        f"sqrt argument {arg} is not provably non-negative "
                        "(declare its symbols positive)", self.text, pos)
                if value == "log" and arg.is_positive is False:
                    raise ParseError(f"log of non-positive {arg}", self.text, pos)
                return fn(arg)
            if value in FUNCTIONS:
                raise ParseError(f"function {value!r} used without arguments", self.text, pos)
            return self.name(value)
        if value == "(":
            e = self.expr()
            self.take(")")
            return e
        what = "end of input" if kind == "end" else repr(value)
        raise ParseError(f"unexpected {what}", self.text, pos)

    def name(self, value):
        if self.symbols is not None and value in self.symbols:
            return self.symbols[value]
        return symbol(value, value in self.positive)


def parse(text, positive=(), symbols=None):
    """Parse *text* into an Expression.

    Symbols named in *positive* are created with a positivity assumption; a
    *symbols* mapping, when given, takes precedence so that callers can reuse
    the exact Symbol objects of a model.
    """
    if not isinstance(text, str):
        raise ParseError(f"expected a string, got {type(text).__name__}")
    if not text.strip():
        raise ParseError("empty expression", text, 0)
    return _Parser(text, positive, symbols).parse()


# ---------------------------------------------------------------- printing

class _Printer(sp.printing.str.StrPrinter):
    def _print_Exp1(self, expr):
        return "exp(1)"

    def _print_Rational(self, expr):
        if expr.q == 1:
            return str(expr.p)
        return f"{expr.p}/{expr.q}"


_printer = _Printer({"order": "lex"})


def to_string(e):
    """Stable textual form in the parser's grammar (lexicographic monomial order)."""
    return _printer.doprint(sp.sympify(e)).replace("**", "^")


def linear_combination(coefficients, labels):
    """``2*u1 - u3 + (A + B)*e1``-style text; zero terms are dropped."""
    terms = []
    for c, label in zip(coefficients, labels):
        c = sp.sympify(c)
        if c == 0:
            continue
        if c == 1:
            terms.append(f"+ {label}")
        elif c == -1:
            terms.append(f"- {label}")
        else:
            sign = "+"
            if c.could_extract_minus_sign():
                sign, c = "-", -c
            text = to_string(c)
            if not c.is_Add:
                terms.append(f"{sign} {text}*{label}")
            else:
                terms.append(f"{sign} ({text})*{label}")
    if not terms:
        return "0"
    out = " ".join(terms)
    return out[2:] if out.startswith("+ ") else "-" + out[2:]


# ---------------------------------------------------------------- simplification

_TRIG = (sp.sin, sp.cos, sp.sinh, sp.cosh)


def _expand_functions(e):
    e = e.replace(lambda x: isinstance(x, sp.tanh), lambda x: sp.sinh(x.args[0]) / sp.cosh(x.args[0]))
    e = e.replace(lambda x: isinstance(x, sp.tan), lambda x: sp.sin(x.args[0]) / sp.cos(x.args[0]))

    def needs_expansion(x):
        if not isinstance(x, _TRIG):
            return False
        arg = x.args[0]
        if arg.is_Add:
            return True
        coeff, _ = arg.as_coeff_Mul()
        return coeff.is_Integer and abs(coeff) >= 2

    return e.replace(needs_expansion, lambda x: sp.expand_trig(x))


def _is_square_reducible(x):
    return (
        x.is_Pow
        and isinstance(x.base, (sp.cos, sp.cosh))
        and x.exp.is_Integer
        and abs(x.exp) >= 2
    )


def _reduce_square(x):
    arg = x.base.args[0]
    n = int(abs(x.exp))
    if isinstance(x.base, sp.cosh):
        sq = 1 + sp.sinh(arg) ** 2
    else:
        sq = 1 - sp.sin(arg) ** 2
    out = sq ** (n // 2) * x.base ** (n % 2)
    return out if x.exp > 0 else 1 / out


def _reduce_squares(e):
    return e.replace(_is_square_reducible, _reduce_square)


def simplify(e, budget=DEFAULT_BUDGET):
    """Canonical form under the fixed rewrite set.

    The rewrites, applied in this order until nothing changes:

    1. ``tanh(a) -> sinh(a)/cosh(a)`` (and ``tan`` alike); sin/cos/sinh/cosh of sums and of
       integer multiples are expanded (``cosh(2x) -> cosh(x)^2 + sinh(x)^2``);
    2. even powers ``cosh(a)^2k -> (1 + sinh(a)^2)^k`` and
       ``cos(a)^2k -> (1 - sin(a)^2)^k``;
    3. rational-function normal form (``sympy.cancel``) with functions,
       radicals and symbolic powers as generators;
    4. collection of powers with identical bases (``u*u^(2mu-1) -> u^(2mu)``).
    """
    e = sp.sympify(e)
    if e.is_Number or e.is_Symbol:
        return e
    if budget is not None and sp.count_ops(e, visual=False) > budget:
        raise SimplificationBudgetExceeded(f"expression exceeds node budget {budget}")
    prev = None
    e = _expand_functions(e)
    for _ in range(6):
        if e == prev:
            break
        prev = e
        e = _reduce_squares(e)
        e = sp.cancel(e)
        e = sp.powsimp(e)
        e = _expand_functions(e)
    return e


def differentiate(e, var):
    """Exact partial derivative, canonically simplified."""
    var = _resolve_symbol(e, var)
    return simplify(sp.diff(e, var))


def _resolve_symbol(e, var):
    if isinstance(var, sp.Symbol):
        return var
    for s in sp.sympify(e).free_symbols:
        if s.name == var:
            return s
    # constant with respect to var
    return symbol(var)


def free_names(e):
    return {s.name for s in sp.sympify(e).free_symbols}


def substitute(e, mapping):
    """Substitute symbols (or symbol names) by expressions."""
    e = sp.sympify(e)
    by_name = {s.name: s for s in e.free_symbols}
    subs = {}
    for key, value in mapping.items():
        sym = by_name.get(key) if isinstance(key, str) else key
        if sym is not None:
            subs[sym] = as_expression(value)
    return e.xreplace(subs) if subs else e


# ---------------------------------------------------------------- evaluation

def _to_number(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ExpressionError("booleans are not numbers")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, sp.Rational):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, sp.Basic):
        if value.is_Rational:
            return Fraction(int(value.p), int(value.q))
        return mpmath.mpf(sp.N(value, mpmath.mp.dps + 5))
    return mpmath.mpf(value)


def _is_exact(x):
    return isinstance(x, Fraction)


def _exact_root(q, n):
    """Exact n-th root of a non-negative Fraction, or None."""
    def iroot(k):
        r = round(k ** (1.0 / n)) if k < 2**1000 else int(mpmath.root(k, n))
        for c in (r - 1, r, r + 1):
            if c >= 0 and c**n == k:
                return c
        return None

    a, b = iroot(q.numerator), iroot(q.denominator)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def _mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return x


_SPECIAL_ZERO = {sp.exp: 1, sp.cos: 1, sp.cosh: 1, sp.sin: 0, sp.sinh: 0, sp.tanh: 0}


def _eval(node, env):
    if node.is_Rational:
        return Fraction(int(node.p), int(node.q))
    if node.is_Symbol:
        if node.name not in env:
            raise UnboundSymbolError(node.name)
        return env[node.name]
    if isinstance(node, sp.core.numbers.Exp1):
        return mpmath.e
    if node.is_Number:
        raise DomainError("non-exact constant in expression", node)
    if node.is_Add:
        total = Fraction(0)
        for arg in node.args:
            total = total + _eval(arg, env)
        return total
    if node.is_Mul:
        prod = Fraction(1)
        for arg in node.args:
            prod = prod * _eval(arg, env)
        return prod
    if node.is_Pow:
        base = _eval(node.base, env)
        exp = _eval(node.exp, env)
        return _power(base, exp, node)
    if isinstance(node, sp.Function):
        fn = type(node)
        x = _eval(node.args[0], env)
        if fn is sp.log:
            if x <= 0:
                raise DomainError("log of non-positive value", node)
            if x == 1:
                return Fraction(0)
            return mpmath.log(_mpf(x))
        if x == 0 and fn in _SPECIAL_ZERO:
            return Fraction(_SPECIAL_ZERO[fn])
        impl = {sp.exp: mpmath.exp, sp.sin: mpmath.sin, sp.cos: mpmath.cos,
                sp.sinh: mpmath.sinh, sp.cosh: mpmath.cosh, sp.tanh: mpmath.tanh}.get(fn)
        if impl is None:
            raise DomainError("unsupported function", node)
        return impl(_mpf(x))
    raise DomainError("unsupported node", node)


def _power(base, exp, node):
    if base == 0:
        if exp <= 0:
            raise DomainError("zero raised to a non-positive power", node)
        return Fraction(0)
    if _is_exact(exp) and exp.denominator == 1:
        if _is_exact(base):
            return base ** int(exp)
        return base ** int(exp)
    if base < 0:
        raise DomainError("negative base with non-integer exponent", node)
    if _is_exact(base) and _is_exact(exp):
        root = _exact_root(base, exp.denominator)
        if root is not None:
            return root ** exp.numerator
    return mpmath.power(_mpf(base), _mpf(exp))


def evaluate(e, assignment=None, precision=None):
    """Evaluate *e* under *assignment* (symbol name or Symbol -> value).

    Returns a :class:`fractions.Fraction` when every step stays rational,
    otherwise an ``mpmath.mpf`` carrying *precision* significant digits
    (default :func:`working_precision`).
    """
    precision = precision or working_precision()
    env = {}
    with mpmath.workdps(precision + 15):
        for key, value in (assignment or {}).items():
            name = key.name if isinstance(key, sp.Symbol) else str(key)
            env[name] = _to_number(value)
        result = _eval(sp.sympify(e), env)
    if _is_exact(result):
        return result
    with mpmath.workdps(precision):
        return +result


# ---------------------------------------------------------------- equality

class Equality(enum.Enum):
    """Verdict of :func:`equal`; truthy for PROVED and PROBABLE."""

    PROVED = "proved-equal"
    PROBABLE = "probably-equal"
    DIFFERENT = "different"
    UNDECIDED = "undecided"

    def __bool__(self):
        return self in (Equality.PROVED, Equality.PROBABLE)


def _sample_value(sym, rng):
    if sym.is_positive:
        return Fraction(rng.randint(1, 40), rng.randint(1, 12))
    return Fraction(rng.randint(-36, 36), rng.randint(1, 12))


def numerically_zero(e, samples=16, seed=0, scale_exprs=(), precision=None):
    """Evaluate at *samples* random rational points.

    Returns ``Equality.PROBABLE`` when every admissible sample vanishes,
    ``DIFFERENT`` on the first non-vanishing one, ``UNDECIDED`` when no
    sample point was admissible.
    """
    precision = precision or working_precision()
    rng = random.Random(seed)
    syms = sorted(sp.sympify(e).free_symbols | set().union(*[sp.sympify(s).free_symbols for s in scale_exprs]),
                  key=lambda s: s.name)
    tol = mpmath.mpf(10) ** (-(precision - 12))
    hits = 0
    attempts = 0
    while hits < samples and attempts < samples * 8:
        attempts += 1
        point = {s.name: _sample_value(s, rng) for s in syms}
        try:
            value = evaluate(e, point, precision)
            scale = 1
            for s in scale_exprs:
                scale += abs(_mpf(evaluate(s, point, precision)))
        except (DomainError, ZeroDivisionError, OverflowError):
            continue
        hits += 1
        if abs(_mpf(value)) > tol * scale:
            return Equality.DIFFERENT
    return Equality.PROBABLE if hits else Equality.UNDECIDED


def is_zero(e, samples=16, seed=0, budget=DEFAULT_BUDGET):
    """Zero test with the same verdicts as :func:`equal`."""
    e = sp.sympify(e)
    if e == 0:
        return Equality.PROVED
    try:
        d = simplify(e, budget)
    except SimplificationBudgetExceeded:
        d = e
    else:
        if d == 0:
            return Equality.PROVED
        if d.is_Number:
            return Equality.DIFFERENT
    return numerically_zero(d, samples, seed)


def equal(e1, e2, samples=16, seed=0, budget=DEFAULT_BUDGET):
    """PROVED when the difference simplifies to 0; otherwise sampled at
    *samples* random rational points (PROBABLE / DIFFERENT)."""
    e1, e2 = sp.sympify(e1), sp.sympify(e2)
    d = e1 - e2
    if d == 0:
        return Equality.PROVED
    try:
        ds = simplify(d, budget)
    except SimplificationBudgetExceeded:
        ds = d
    else:
        if ds == 0:
            return Equality.PROVED
        if ds.is_Number:
            return Equality.DIFFERENT
    return numerically_zero(ds, samples, seed, scale_exprs=(e1, e2))


class Verdict(enum.Enum):
    """Tri-state outcome of a symbolic property check."""

    TRUE = "true"
    FALSE = "false"
    UNDECIDED = "undecided"

    def __bool__(self):
        return self is Verdict.TRUE

    @classmethod
    def of(cls, flag):
        return cls.TRUE if flag else cls.FALSE


def all_zero(exprs, budget=DEFAULT_BUDGET):
    """TRUE when every expression is proved zero, FALSE on the first proven
    non-zero one, UNDECIDED when only probabilistic evidence is available."""
    undecided = False
    for e in exprs:
        verdict = is_zero(e, budget=budget)
        if verdict is Equality.DIFFERENT:
            return Verdict.FALSE
        if verdict is not Equality.PROVED:
            undecided = True
    return Verdict.UNDECIDED if undecided else Verdict.TRUE
