"""A deliberately small computer-algebra kernel.

Expressions are immutable and built only through the smart constructors
(:func:`add`, :func:`mul`, :func:`power`, :func:`exp`, :func:`ln`), which keep
them in a canonical form: sums and products are flattened and sorted,
rational constants are folded, identical terms and factors are collected,
``exp(x) * exp(y)`` becomes ``exp(x + y)`` and a rational coefficient is
distributed over a sum.  That is enough for exact differentiation and for
deciding structural equality of propagator eigenvalues; it is not a general
simplifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

from ..syntax import ast


class CASError(ValueError):
    """Expression outside the supported fragment."""


class NotDifferentiable(CASError):
    pass


# -- node types -------------------------------------------------------------------

@dataclass(frozen=True)
class Expr:
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, mul(-1, other))

    def __rsub__(self, other):
        return add(other, mul(-1, self))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return mul(self, power(other, -1))

    def __rtruediv__(self, other):
        return mul(other, power(self, -1))

    def __neg__(self):
        return mul(-1, self)

    def __pow__(self, n):
        return power(self, n)


@dataclass(frozen=True)
class Num(Expr):
    value: Fraction

    def key(self):
        return (0, self.value)


@dataclass(frozen=True)
class Lit(Expr):
    """A literal carrying a unit (``2 ms``); kept opaque so its unit survives."""

    text: str
    unit: str

    def key(self):
        return (1, self.unit, self.text)


@dataclass(frozen=True)
class Sym(Expr):
    name: str

    def key(self):
        return (2, self.name)


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: Expr

    def key(self):
        return (3, self.base.key(), self.exponent.key())


@dataclass(frozen=True)
class Mul(Expr):
    factors: tuple

    def key(self):
        return (4, tuple(f.key() for f in self.factors))


@dataclass(frozen=True)
class Add(Expr):
    terms: tuple

    def key(self):
        return (5, tuple(t.key() for t in self.terms))


@dataclass(frozen=True)
class Func(Expr):
    """``exp``/``ln``, or an opaque call.

    Opaque calls marked ``constant`` (buffer reads, ``resolution()``) are
    treated as values that do not change within a step: they have no free
    symbols and a zero derivative.  Other opaque calls depend on their
    arguments and cannot be differentiated.
    """

    name: str
    args: tuple
    constant: bool = False
    node: object = field(default=None, compare=False, hash=False)

    def key(self):
        return (6, self.name, tuple(a.key() for a in self.args), self.constant)


ZERO = Num(Fraction(0))
ONE = Num(Fraction(1))


def sym(name) -> Sym:
    return Sym(name)


def const(value) -> Num:
    if isinstance(value, Num):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise CASError(f"non-finite constant {value}")
        return Num(Fraction(repr(value)))
    return Num(Fraction(value))


def _coerce(x) -> Expr:
    return x if isinstance(x, Expr) else const(x)


# -- smart constructors -------------------------------------------------------------

def _split_coeff(x):
    """(rational coefficient, remaining product) of a term."""
    if isinstance(x, Num):
        return x.value, ONE
    if isinstance(x, Mul) and isinstance(x.factors[0], Num):
        rest = x.factors[1:]
        return x.factors[0].value, (rest[0] if len(rest) == 1 else Mul(rest))
    return Fraction(1), x


def add(*xs) -> Expr:
    flat = []
    for x in map(_coerce, xs):
        flat.extend(x.terms if isinstance(x, Add) else (x,))
    constant = Fraction(0)
    collected = {}
    for term in flat:
        c, rest = _split_coeff(term)
        if rest == ONE:
            constant += c
        else:
            collected[rest] = collected.get(rest, Fraction(0)) + c
    terms = [mul(Num(c), rest) for rest, c in collected.items() if c != 0]
    terms.sort(key=lambda t: t.key())
    if constant != 0:
        terms.append(Num(constant))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Add(tuple(terms))


def mul(*xs) -> Expr:
    flat = []
    for x in map(_coerce, xs):
        flat.extend(x.factors if isinstance(x, Mul) else (x,))
    coeff = Fraction(1)
    exponents = {}
    exp_args = []
    for f in flat:
        if isinstance(f, Num):
            coeff *= f.value
        elif isinstance(f, Func) and f.name == "exp" and not f.constant:
            exp_args.append(f.args[0])
        elif isinstance(f, Pow):
            exponents.setdefault(f.base, []).append(f.exponent)
        else:
            exponents.setdefault(f, []).append(ONE)
    if coeff == 0:
        return ZERO
    factors = []
    for base, exps in exponents.items():
        p = power(base, add(*exps))
        if isinstance(p, Num):
            coeff *= p.value
        elif p != ONE:
            factors.extend(p.factors if isinstance(p, Mul) else (p,))
    if exp_args:
        e = exp(add(*exp_args))
        if e != ONE:
            factors.append(e)
    if len(factors) != len(set(factors)) or any(isinstance(f, (Mul, Num)) for f in factors):
        # re-collection after merged powers produced nested products
        return mul(Num(coeff), *factors) if factors else Num(coeff)
    factors.sort(key=lambda f: f.key())
    if not factors:
        return Num(coeff)
    if len(factors) == 1 and isinstance(factors[0], Add) and coeff != 1:
        return add(*(mul(Num(coeff), t) for t in factors[0].terms))
    if coeff != 1:
        factors.insert(0, Num(coeff))
    return factors[0] if len(factors) == 1 else Mul(tuple(factors))


def _integer(x):
    if isinstance(x, Num) and x.value.denominator == 1:
        return int(x.value)
    return None


def power(base, exponent) -> Expr:
    base, exponent = _coerce(base), _coerce(exponent)
    n = _integer(exponent)
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Num):
        if n is not None:
            if base.value == 0 and n < 0:
                raise CASError("division by zero")
            return Num(base.value ** n)
        if base == ONE:
            return ONE
    if n is not None:
        if isinstance(base, Pow) and _integer(base.exponent) is not None:
            return power(base.base, _integer(base.exponent) * n)
        if isinstance(base, Mul):
            return mul(*(power(f, n) for f in base.factors))
        if isinstance(base, Func) and base.name == "exp" and not base.constant:
            return exp(mul(n, base.args[0]))
    return Pow(base, exponent)


def exp(x) -> Expr:
    x = _coerce(x)
    if x == ZERO:
        return ONE
    if isinstance(x, Func) and x.name == "ln":
        return x.args[0]
    return Func("exp", (x,))


def ln(x) -> Expr:
    x = _coerce(x)
    if x == ONE:
        return ZERO
    if isinstance(x, Func) and x.name == "exp" and not x.constant:
        return x.args[0]
    return Func("ln", (x,))


def opaque(name, args=(), constant=False, node=None) -> Func:
    return Func(name, tuple(map(_coerce, args)), constant, node)


# -- traversal ------------------------------------------------------------------------

def children(x):
    if isinstance(x, Add):
        return x.terms
    if isinstance(x, Mul):
        return x.factors
    if isinstance(x, Pow):
        return (x.base, x.exponent)
    if isinstance(x, Func) and not x.constant:
        return x.args
    return ()


def free_symbols(x) -> set:
    if isinstance(x, Sym):
        return {x.name}
    return set().union(*map(free_symbols, children(x))) if children(x) else set()


def depends_on(x, name) -> bool:
    return name in free_symbols(x)


def rebuild(x, fn):
    """Bottom-up rebuild through the smart constructors."""
    if isinstance(x, Add):
        return fn(add(*(rebuild(t, fn) for t in x.terms)))
    if isinstance(x, Mul):
        return fn(mul(*(rebuild(f, fn) for f in x.factors)))
    if isinstance(x, Pow):
        return fn(power(rebuild(x.base, fn), rebuild(x.exponent, fn)))
    if isinstance(x, Func) and not x.constant:
        args = tuple(rebuild(a, fn) for a in x.args)
        if x.name == "exp":
            return fn(exp(args[0]))
        if x.name == "ln":
            return fn(ln(args[0]))
        return fn(Func(x.name, args, False, x.node))
    return fn(x)


def subs(x, mapping) -> Expr:
    """Replace symbols by expressions (``mapping``: name -> Expr or number)."""
    mapping = {k: _coerce(v) for k, v in mapping.items()}
    return rebuild(x, lambda e: mapping.get(e.name, e) if isinstance(e, Sym) else e)


def diff(x, name) -> Expr:
    if isinstance(x, (Num, Lit)):
        return ZERO
    if isinstance(x, Sym):
        return ONE if x.name == name else ZERO
    if isinstance(x, Add):
        return add(*(diff(t, name) for t in x.terms))
    if isinstance(x, Mul):
        terms = []
        for i, f in enumerate(x.factors):
            df = diff(f, name)
            if df != ZERO:
                terms.append(mul(*x.factors[:i], df, *x.factors[i + 1:]))
        return add(*terms)
    if isinstance(x, Pow):
        db = diff(x.base, name)
        if not depends_on(x.exponent, name):
            return mul(x.exponent, power(x.base, add(x.exponent, -1)), db)
        de = diff(x.exponent, name)
        return mul(x, add(mul(de, ln(x.base)), mul(x.exponent, db, power(x.base, -1))))
    if isinstance(x, Func):
        if x.constant or not depends_on(x, name):
            return ZERO
        if x.name == "exp":
            return mul(x, diff(x.args[0], name))
        if x.name == "ln":
            return mul(diff(x.args[0], name), power(x.args[0], -1))
        raise NotDifferentiable(f"cannot differentiate {x.name}()")
    raise CASError(f"unknown node {x!r}")


def expand(x) -> Expr:
    """Distribute products over sums and expand positive integer powers of sums."""
    if isinstance(x, Add):
        return add(*map(expand, x.terms))
    if isinstance(x, Mul):
        parts = [expand(f) for f in x.factors]
        return reduce(_distribute, parts, ONE)
    if isinstance(x, Pow):
        base = expand(x.base)
        n = _integer(x.exponent)
        if isinstance(base, Add) and n is not None and n > 0:
            return reduce(_distribute, [base] * n, ONE)
        return power(base, expand(x.exponent))
    if isinstance(x, Func) and not x.constant and x.name in ("exp", "ln"):
        inner = expand(x.args[0])
        return exp(inner) if x.name == "exp" else ln(inner)
    return x


def _distribute(a, b):
    ta = a.terms if isinstance(a, Add) else (a,)
    tb = b.terms if isinstance(b, Add) else (b,)
    return add(*(mul(p, q) for p in ta for q in tb))


def is_zero(x) -> bool:
    return x == ZERO


# -- numeric evaluation ----------------------------------------------------------------

def func_key(x: Func) -> str:
    """Environment key under which an opaque call's value is looked up."""
    if x.node is not None:
        from ..syntax import print_expression
        return print_expression(x.node)
    return f"{x.name}()"


def evaluate(x, env) -> float:
    if isinstance(x, Num):
        return float(x.value)
    if isinstance(x, Lit):
        return float(x.text)
    if isinstance(x, Sym):
        try:
            return float(env[x.name])
        except KeyError:
            raise CASError(f"no value for '{x.name}'") from None
    if isinstance(x, Add):
        return math.fsum(evaluate(t, env) for t in x.terms)
    if isinstance(x, Mul):
        return math.prod(evaluate(f, env) for f in x.factors)
    if isinstance(x, Pow):
        return evaluate(x.base, env) ** evaluate(x.exponent, env)
    if isinstance(x, Func):
        if x.name == "exp" and not x.constant:
            return math.exp(evaluate(x.args[0], env))
        if x.name == "ln" and not x.constant:
            return math.log(evaluate(x.args[0], env))
        key = func_key(x)
        if key in env:
            return float(env[key])
        raise CASError(f"no value for '{key}'")
    raise CASError(f"unknown node {x!r}")


# -- conversion from and to the model AST ---------------------------------------------------

CONSTANT_CALLS = ("resolution", "steps")


def from_ast(expr, resolve=None) -> Expr:
    """Translate a numeric model expression.

    ``resolve(ref)`` may return an Expr to substitute for a variable
    reference (used to inline aliases and shapes); returning None keeps a
    plain symbol.
    """
    def go(e):
        if isinstance(e, ast.Paren):
            return go(e.inner)
        if isinstance(e, ast.NumberLiteral):
            if e.unit:
                return Lit(e.text, e.unit)
            return Num(Fraction(e.text))
        if isinstance(e, ast.VariableRef):
            hit = resolve(e) if resolve else None
            return hit if hit is not None else Sym(e.full_name)
        if isinstance(e, ast.UnaryOp):
            if e.op != "neg":
                raise CASError("boolean expression in a numeric context")
            return mul(-1, go(e.operand))
        if isinstance(e, ast.BinaryOp):
            a, b = go(e.lhs), go(e.rhs)
            if e.op == "+":
                return add(a, b)
            if e.op == "-":
                return add(a, mul(-1, b))
            if e.op == "*":
                return mul(a, b)
            if e.op == "/":
                return mul(a, power(b, -1))
            if e.op == "**":
                return power(a, b)
            raise CASError(f"operator '{e.op}' in a numeric context")
        if isinstance(e, ast.FunctionCall):
            name = e.callee.full_name
            if e.callee.qualifier is None and name in ("exp", "ln") and len(e.args) == 1:
                arg = go(e.args[0])
                return exp(arg) if name == "exp" else ln(arg)
            if e.callee.qualifier is not None and e.callee.name == "getSum":
                return opaque(name, (), True, e)
            if e.callee.qualifier is None and name in CONSTANT_CALLS:
                return opaque(name, (), True, e)
            return opaque(name, tuple(go(a) for a in e.args), False, e)
        raise CASError(f"unsupported expression {type(e).__name__}")
    return go(expr)


def _num_ast(value: Fraction):
    """Literal for a non-negative rational, as exact decimal text when possible."""
    if value.denominator == 1:
        return ast.num(int(value))
    as_float = float(value)
    if Fraction(repr(as_float)) == value:
        return ast.num(as_float)
    return ast.binop("/", ast.num(value.numerator), ast.num(value.denominator))


def to_ast(x):
    """Render back to a model expression that prints readably and reparses."""
    if isinstance(x, Num):
        node = _num_ast(abs(x.value))
        return ast.neg(node) if x.value < 0 else node
    if isinstance(x, Lit):
        return ast.NumberLiteral(x.text, x.unit)
    if isinstance(x, Sym):
        if "." in x.name:
            qualifier, name = x.name.split(".", 1)
            return ast.var(name, qualifier)
        return ast.var(x.name)
    if isinstance(x, Add):
        terms = sorted(x.terms, key=lambda t: (isinstance(t, Num), _is_negative(t)))
        out = to_ast(terms[0])
        for t in terms[1:]:
            if _is_negative(t):
                out = ast.binop("-", out, to_ast(mul(-1, t)))
            else:
                out = ast.binop("+", out, to_ast(t))
        return out
    if isinstance(x, Mul):
        return _mul_ast(x)
    if isinstance(x, Pow):
        return _mul_ast(Mul((x,)))
    if isinstance(x, Func):
        if x.node is not None and x.constant:
            return x.node
        callee = x.node.callee if x.node is not None else ast.var(x.name)
        return ast.FunctionCall(callee, tuple(to_ast(a) for a in x.args))
    raise CASError(f"unknown node {x!r}")


def _is_negative(t):
    c, _ = _split_coeff(t)
    return c < 0


def _mul_ast(x):
    coeff, rest = _split_coeff(x)
    factors = rest.factors if isinstance(rest, Mul) else ((rest,) if rest != ONE else ())
    numer, denom = [], []
    for f in factors:
        n = _integer(f.exponent) if isinstance(f, Pow) else None
        if n is not None and n < 0:
            denom.append(power(f.base, -n))
        else:
            numer.append(f)
    numer_ast = [_factor_ast(f) for f in numer]
    if abs(coeff.numerator) != 1 or not numer_ast:
        numer_ast.insert(0, _num_ast(Fraction(abs(coeff.numerator))))
    if coeff < 0:
        numer_ast[0] = ast.neg(numer_ast[0])
    out = reduce(lambda a, b: ast.binop("*", a, b), numer_ast)
    denom_ast = [_factor_ast(f) for f in denom]
    if coeff.denominator != 1:
        denom_ast.insert(0, _num_ast(Fraction(coeff.denominator)))
    for d in denom_ast:
        out = ast.binop("/", out, d)
    return out


def _factor_ast(f):
    if isinstance(f, Pow):
        return ast.binop("**", to_ast(f.base), to_ast(f.exponent))
    return to_ast(f)


__all__ = [
    "CASError", "NotDifferentiable", "Expr", "Num", "Lit", "Sym", "Add", "Mul", "Pow", "Func",
    "ZERO", "ONE", "sym", "const", "add", "mul", "power", "exp", "ln", "opaque", "free_symbols",
    "depends_on", "subs", "diff", "expand", "is_zero", "evaluate", "from_ast", "to_ast",
    "func_key", "rebuild",
]
