"""Expression typing with physical units.

Typing and lowering are one pass: besides the type, :func:`analyze` returns
a copy of the expression in which every implicit scale change (``+``, ``-``,
comparisons, function arguments) is spelled out as a multiplication by a
numeric literal.  Backends evaluate that copy with plain floats.
"""

from __future__ import annotations

from fractions import Fraction

from ..diagnostics import NO_SPAN, Diagnostic, error
from ..syntax import ast
from ..units import (BOOLEAN, INTEGER, REAL, STRING, UNIT, Boolean, Integer, Real, String,
                     TypeSpec, UnitError, UnitType, Void, as_unit, conversion_factor,
                     normalize, parse_unit, pretty_unit, unit_divide, unit_multiply, unit_power, unit_type)
from .symbols import (ALIAS, BUFFER, BUFFER_METHODS, BUILTIN, COMPONENT, FUNCTION, MS,
                      component_member)


class SemanticError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.render())
        self.diagnostic = diagnostic


def fail(code, message, node):
    raise SemanticError(error(code, message, getattr(node, "span", NO_SPAN)))


def scale_by(expr, factor):
    """``expr`` multiplied by an exact power of ten (identity when the factor is 1).

    The factor literal carries a dimensionless unit of the opposite scale
    (``1000.0 ms/s``), so the product keeps exactly the type it is meant
    to have and re-checking a lowered tree inserts no second conversion.
    """
    factor = Fraction(factor)
    if factor == 1:
        return expr
    exponent = _log10(factor)
    unit = pretty_unit(UnitType(scale=-exponent))
    return ast.binop("*", expr, ast.NumberLiteral(repr(float(factor)), unit))


def _log10(factor: Fraction) -> int:
    n = 0
    while factor >= 10:
        factor /= 10
        n += 1
    while factor < 1:
        factor *= 10
        n -= 1
    if factor != 1:
        raise ValueError("conversion factors are powers of ten")
    return n


def _is_bare_literal(expr) -> bool:
    expr = ast.strip_parens(expr)
    if isinstance(expr, ast.UnaryOp) and expr.op == "neg":
        return _is_bare_literal(expr.operand)
    return isinstance(expr, ast.NumberLiteral) and expr.unit is None


def _integer_literal(expr):
    expr = ast.strip_parens(expr)
    sign = 1
    while isinstance(expr, ast.UnaryOp) and expr.op == "neg":
        sign = -sign
        expr = ast.strip_parens(expr.operand)
    if isinstance(expr, ast.NumberLiteral) and expr.unit is None and expr.is_integer:
        return sign * int(expr.text)
    return None


def assign_compat(target: TypeSpec, value: TypeSpec, allow_coercion=False):
    """Classify storing ``value`` into ``target``: ``"ok"``, ``"coerce"`` or ``"error"``."""
    if target.kind == INTEGER:
        return "ok" if value.kind == INTEGER else "error"
    if target.kind == REAL:
        if value.is_real_like:
            return "ok"
        if value.kind == UNIT:
            return "coerce" if allow_coercion else "error"
        return "error"
    if target.kind == UNIT:
        if value.kind in (INTEGER, REAL):
            # a plain number is read as a magnitude in the declared unit
            return "ok"
        if value.kind == UNIT and value.unit.dimension == target.unit.dimension:
            return "ok"
        return "error"
    if target.kind in (BOOLEAN, STRING):
        return "ok" if value.kind == target.kind else "error"
    return "error"


def convert_for(target: TypeSpec, value: TypeSpec, expr):
    """Lower ``expr`` (of type ``value``) into the storage scale of ``target``."""
    if value.kind != UNIT:
        return expr
    if target.kind == UNIT and value.unit.dimension == target.unit.dimension:
        return scale_by(expr, conversion_factor(value.unit, target.unit))
    if target.kind == REAL and value.unit.dimensionless:
        return scale_by(expr, Fraction(10) ** value.unit.scale)
    return expr


class Typer:
    def __init__(self, scope):
        self.scope = scope

    # -- entry points -----------------------------------------------------

    def visit(self, expr):
        method = getattr(self, "_" + type(expr).__name__)
        return method(expr)

    # -- leaves -----------------------------------------------------------

    def _NumberLiteral(self, e):
        if e.unit:
            try:
                return unit_type(parse_unit(e.unit), e.unit), e
            except UnitError:
                fail("E0301", f"unknown unit '{e.unit}'", e)
        return (Integer if e.is_integer else Real), e

    def _StringLiteral(self, e):
        return String, e

    def _BoolLiteral(self, e):
        return Boolean, e

    def _Paren(self, e):
        t, inner = self.visit(e.inner)
        return t, ast.Paren(inner, e.span)

    def resolve(self, ref: ast.VariableRef):
        """Symbol for a (possibly qualified) reference, enforcing visibility windows."""
        if ref.qualifier:
            owner = self.scope.lookup(ref.qualifier)
            if owner is not None and owner.kind == COMPONENT:
                member = component_member(self.scope, owner.node, ref.name)
                if member is None:
                    fail("E0406", f"component '{owner.node.name}' has no member '{ref.name}'",
                         ref)
                return member
            if owner is not None and owner.kind == BUFFER:
                if ref.name not in BUFFER_METHODS:
                    fail("E0410", f"buffer '{ref.qualifier}' only supports getSum", ref)
                return owner
            if ref.name in BUFFER_METHODS:
                fail("E0410", f"'{ref.qualifier}' is not a declared input buffer", ref)
            fail("E0302", f"unknown symbol '{ref.qualifier}'", ref)
        sym, window = self.scope.lookup_window(ref.name)
        if sym is None:
            if window is not None and window[1] == "E0405":
                fail("E0405", f"guard references unknown symbol '{ref.name}'", ref)
            fail("E0302", f"unknown symbol '{ref.name}'", ref)
        if window is not None and sym.order is not None and sym.scope is not None \
                and sym.scope.kind == "model" and sym.order >= window[0]:
            code = window[1]
            fail(code, f"'{ref.name}' is used before its declaration", ref)
        return sym

    def _VariableRef(self, e):
        sym = self.resolve(e)
        if sym.kind == BUFFER:
            fail("E0410", f"buffer '{e.full_name}' can only be read with getSum", e)
        if sym.kind in (FUNCTION, COMPONENT) or (sym.kind == BUILTIN and sym.type == Void):
            fail("E0303", f"'{e.full_name}' is not a value", e)
        return sym.type, e

    # -- calls ------------------------------------------------------------

    def _FunctionCall(self, e):
        sym = self.resolve(e.callee)
        typed = [self.visit(a) for a in e.args]
        if sym.kind == BUFFER:
            return self._buffer_call(e, sym, typed)
        if sym.kind == BUILTIN and sym.node is not None:
            return self._builtin_call(e, sym.node, typed)
        if sym.kind != FUNCTION:
            fail("E0303", f"'{e.callee.full_name}' is not a function", e)
        fn = sym.node
        if len(typed) != len(fn.params):
            fail("E0303", f"{fn.name} expects {len(fn.params)} argument(s), got {len(typed)}", e)
        args = []
        for param, (t, lowered) in zip(fn.params, typed):
            if assign_compat(param.type, t) == "error":
                fail("E0303", f"argument '{param.name}' of {fn.name} expects {param.type}, "
                              f"got {t}", e)
            args.append(convert_for(param.type, t, lowered))
        return (fn.return_type or Void), ast.FunctionCall(e.callee, tuple(args), e.span)

    def _buffer_call(self, e, sym, typed):
        if len(typed) != 1 or not self._is_time(typed[0][0]):
            fail("E0303", f"{e.callee.full_name} expects one time argument", e)
        t, lowered = typed[0]
        arg = convert_for(MS, t, lowered)
        result = Real if sym.type.buffer == "spike" else unit_type("pA")
        return result, ast.FunctionCall(e.callee, (arg,), e.span)

    @staticmethod
    def _is_time(t):
        return t.kind in (INTEGER, REAL) or (t.kind == UNIT and t.unit.dimension == MS.unit.dimension)

    def _builtin_call(self, e, sig, typed):
        name = sig.name
        if len(typed) != len(sig.params):
            fail("E0303", f"{name} expects {len(sig.params)} argument(s), got {len(typed)}", e)
        if name == "emitSpike":
            model = self.scope.model
            if model is None or model.output != "spike":
                fail("E0408", "emitSpike() requires 'output: spike'", e)
        args = []
        result = sig.returns
        first = typed[0][0] if typed else None
        for kind, (t, lowered) in zip(sig.params, typed):
            if kind == "real":
                if not t.is_real_like:
                    fail("E0303", f"{name} expects a dimensionless argument, got {t}", e)
                args.append(convert_for(Real, t, lowered))
            elif kind == "time":
                if not self._is_time(t):
                    fail("E0303", f"{name} expects a time argument, got {t}", e)
                args.append(convert_for(MS, t, lowered))
            elif kind == "string":
                if t.kind != STRING:
                    fail("E0303", f"{name} expects a string argument, got {t}", e)
                args.append(lowered)
            else:  # "same"
                if not t.is_numeric or self._add_compat(first, t, None, None) is None:
                    fail("E0303", f"{name} arguments must share a dimension", e)
                args.append(self._to_lhs_scale(first, t, lowered))
        if result == "same":
            result = Real if first.kind == INTEGER and typed[1][0].kind != INTEGER else first
        return result, ast.FunctionCall(e.callee, tuple(args), e.span)

    # -- operators --------------------------------------------------------

    def _UnaryOp(self, e):
        t, operand = self.visit(e.operand)
        if e.op == "not":
            if t.kind != BOOLEAN:
                fail("E0304", f"'not' needs a boolean operand, got {t}", e)
            return Boolean, ast.UnaryOp("not", operand, e.span)
        if not t.is_numeric:
            fail("E0301", f"cannot negate a value of type {t}", e)
        return t, ast.UnaryOp("neg", operand, e.span)

    def _add_compat(self, lt, rt, lexpr, rexpr):
        """Result type of ``lt (+|-|cmp) rt``, or None when incompatible."""
        if lt.kind in (INTEGER, REAL) and rt.kind in (INTEGER, REAL):
            return Integer if lt.kind == rt.kind == INTEGER else Real
        if lt.kind == UNIT and rt.kind == UNIT:
            return lt if lt.unit.dimension == rt.unit.dimension else None
        unit_side, other, other_expr = (lt, rt, rexpr) if lt.kind == UNIT else (rt, lt, lexpr)
        if other.kind not in (INTEGER, REAL):
            return None
        if unit_side.unit.dimensionless:
            return Real
        if other_expr is not None and _is_bare_literal(other_expr):
            # an unadorned literal is read in the unit of the other operand
            return unit_side
        return None

    def _to_lhs_scale(self, lt, rt, rexpr):
        if lt.kind == UNIT and rt.kind == UNIT:
            return scale_by(rexpr, conversion_factor(rt.unit, lt.unit))
        return rexpr

    def _BinaryOp(self, e):
        op = e.op
        lt, lhs = self.visit(e.lhs)
        rt, rhs = self.visit(e.rhs)
        if op in ("and", "or"):
            if lt.kind != BOOLEAN or rt.kind != BOOLEAN:
                fail("E0304", f"'{op}' needs boolean operands, got {lt} and {rt}", e)
            return Boolean, ast.BinaryOp(op, lhs, rhs, e.span)
        if op in ("==", "!=") and lt.kind == rt.kind and lt.kind in (BOOLEAN, STRING):
            return Boolean, ast.BinaryOp(op, lhs, rhs, e.span)
        if not lt.is_numeric or not rt.is_numeric:
            fail("E0301", f"operator '{op}' cannot combine {lt} and {rt}", e)
        if op in ("+", "-") or op in ast.COMPARISONS:
            result = self._add_compat(lt, rt, e.lhs, e.rhs)
            if result is None:
                fail("E0301", f"dimension mismatch: {lt} {op} {rt}", e)
            lhs, rhs = self._align(lt, rt, result, lhs, rhs)
            if op in ast.COMPARISONS:
                result = Boolean
            return result, ast.BinaryOp(op, ast.wrap(lhs, op, "lhs"), ast.wrap(rhs, op, "rhs"),
                                        e.span)
        if op in ("*", "/"):
            return self._product(op, lt, rt, lhs, rhs, e)
        if op == "**":
            return self._power(lt, rt, lhs, rhs, e)
        fail("E0301", f"unknown operator '{op}'", e)

    def _align(self, lt, rt, result, lhs, rhs):
        if lt.kind == UNIT and rt.kind == UNIT:
            if result.kind == UNIT:
                return lhs, self._to_lhs_scale(lt, rt, rhs)
            # both dimensionless: bring each to scale 0
            return convert_for(Real, lt, lhs), convert_for(Real, rt, rhs)
        if result == Real:
            return convert_for(Real, lt, lhs), convert_for(Real, rt, rhs)
        return lhs, rhs

    def _product(self, op, lt, rt, lhs, rhs, e):
        node = ast.BinaryOp(op, lhs, rhs, e.span)
        if lt.kind == UNIT or rt.kind == UNIT:
            combine = unit_multiply if op == "*" else unit_divide
            return normalize(combine(as_unit(lt), as_unit(rt))), node
        if op == "*" and lt.kind == rt.kind == INTEGER:
            return Integer, node
        return Real, node

    def _power(self, lt, rt, lhs, rhs, e):
        node = ast.BinaryOp("**", lhs, rhs, e.span)
        if lt.kind == UNIT and not lt.unit.dimensionless:
            n = _integer_literal(e.rhs)
            if n is None:
                fail("E0301", "a unit-typed base needs an integer literal exponent", e)
            return normalize(unit_power(lt.unit, n)), node
        if not rt.is_real_like:
            fail("E0301", f"exponent must be dimensionless, got {rt}", e)
        if lt.kind == rt.kind == INTEGER and (_integer_literal(e.rhs) or 0) >= 0:
            return Integer, node
        return Real, ast.BinaryOp("**", convert_for(Real, lt, lhs), convert_for(Real, rt, rhs),
                                  e.span)


def analyze(expr, scope):
    """(type, lowered expression) for ``expr`` in ``scope``; raises SemanticError."""
    return Typer(scope).visit(expr)


def type_of(expr, scope) -> TypeSpec:
    return analyze(expr, scope)[0]


def lower_expression(expr, scope):
    return analyze(expr, scope)[1]


def is_alias(sym) -> bool:
    return sym is not None and sym.kind == ALIAS


__all__ = ["SemanticError", "Typer", "analyze", "type_of", "lower_expression", "assign_compat",
           "convert_for", "scale_by", "UnitType"]
