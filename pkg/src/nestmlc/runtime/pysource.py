"""Lower checked model code to Python source for the reference interpreter.

Every model becomes one Python module.  Generated functions take the
instance's variable dict ``V``, buffers ``B``, component dicts ``C`` and
the instance itself ``rt``.  Locals and parameters become Python locals
prefixed ``l_`` so they cannot clash with anything generated here.  Each
emitted line remembers the source span it came from, so evaluation
failures can be reported against the model text.
"""

from __future__ import annotations

import math

from ..semantics.symbols import (ALIAS, BUFFER, BUILTIN, COMPONENT, FUNCTION, LOCAL, Symbol)
from ..semantics.typecheck import Typer, analyze, convert_for
from ..syntax import ast
from ..units import BOOLEAN, INTEGER, STRING

_BINARY = {"and": "and", "or": "or", "==": "==", "!=": "!=", "<": "<", "<=": "<=",
           ">": ">", ">=": ">=", "+": "+", "-": "-", "*": "*", "/": "/"}


def _pow(a, b):
    if isinstance(a, int) and isinstance(b, int) and b >= 0:
        return a ** b
    return math.pow(a, b)


RUNTIME_GLOBALS = {"_pow": _pow, "_exp": math.exp, "_ln": math.log, "_E": math.e,
                   "_min": min, "_max": max}


def local(name):
    return "l_" + name


def zero_of(t):
    if t is None:
        return "0.0"
    if t.kind == BOOLEAN:
        return "False"
    if t.kind == STRING:
        return "''"
    if t.kind == INTEGER:
        return "0"
    return "0.0"


class ExpressionSource:
    """Python text for a lowered expression.

    ``record`` names the dict holding unqualified model variables; alias
    reads call the generated alias functions.
    """

    def __init__(self, record="V", prefix=""):
        self.record = record
        self.prefix = prefix          # function-name prefix (component functions)

    def typed(self, expr, scope, target=None):
        t, lowered = analyze(expr, scope)
        if target is not None:
            lowered = convert_for(target, t, lowered)
        return self.render(lowered, scope)

    def render(self, e, scope):
        return getattr(self, "_" + type(e).__name__)(e, scope)

    def _Paren(self, e, scope):
        return self.render(e.inner, scope)

    def _NumberLiteral(self, e, scope):
        return repr(int(e.text)) if e.is_integer else repr(float(e.text))

    def _StringLiteral(self, e, scope):
        return repr(e.value)

    def _BoolLiteral(self, e, scope):
        return repr(bool(e.value))

    def _VariableRef(self, e, scope):
        sym = Typer(scope).resolve(e)
        if e.qualifier:
            return f"C[{e.qualifier!r}][{e.name!r}]"
        if sym.kind == BUILTIN:
            return "_E"
        if sym.kind == LOCAL:
            return local(e.name)
        if sym.kind == ALIAS:
            return f"{self.prefix}a_{e.name}({self.record}, B, C, rt)"
        return f"{self.record}[{e.name!r}]"

    def _UnaryOp(self, e, scope):
        inner = self.render(e.operand, scope)
        return f"(-{inner})" if e.op == "neg" else f"(not {inner})"

    def _BinaryOp(self, e, scope):
        lhs, rhs = self.render(e.lhs, scope), self.render(e.rhs, scope)
        if e.op == "**":
            return f"_pow({lhs}, {rhs})"
        return f"({lhs} {_BINARY[e.op]} {rhs})"

    def _FunctionCall(self, e, scope):
        callee = e.callee
        args = [self.render(a, scope) for a in e.args]
        if callee.qualifier:
            owner = scope.lookup(callee.qualifier)
            if owner is not None and owner.kind == BUFFER:
                return f"B[{callee.qualifier!r}].get_value(rt.offset_of({args[0]}))"
            if owner is not None and owner.kind == COMPONENT:
                fn = f"c_{owner.node.name}_f_{callee.name}"
                return f"{fn}(C[{callee.qualifier!r}], B, C, rt{''.join(', ' + a for a in args)})"
        sym = scope.lookup(callee.name)
        if sym is not None and sym.kind == BUILTIN:
            name = callee.name
            simple = {"exp": "_exp", "ln": "_ln", "min": "_min", "max": "_max",
                      "resolution": "rt.resolution", "steps": "rt.steps",
                      "emitSpike": "rt.emit_spike", "log_info": "rt.log_info"}
            return f"{simple[name]}({', '.join(args)})"
        if sym is None or sym.kind != FUNCTION:
            raise RuntimeError(f"call of unknown function '{callee.name}'")
        rest = "".join(", " + a for a in args)
        return f"{self.prefix}f_{callee.name}({self.record}, B, C, rt{rest})"


class ModuleSource:
    """Accumulates the Python module text for one model."""

    def __init__(self, filename):
        self.filename = filename
        self.lines = []
        self.spans = {}               # 1-based line number -> SourceSpan

    def emit(self, depth, text, span=None):
        self.lines.append("    " * depth + text)
        if span is not None:
            self.spans[len(self.lines)] = span

    def text(self):
        return "\n".join(self.lines) + "\n"


class StatementSource:
    def __init__(self, out: ModuleSource, exprs: ExpressionSource, on_ode=None):
        self.out = out
        self.exprs = exprs
        self.on_ode = on_ode          # callback(stmt, scope, depth) for ODE blocks

    def body(self, stmts, scope, depth):
        start = len(self.out.lines)
        for stmt in stmts:
            getattr(self, "_" + type(stmt).__name__)(stmt, scope, depth)
        if len(self.out.lines) == start:
            self.out.emit(depth, "pass")

    def _Assignment(self, s, scope, depth):
        sym = Typer(scope).resolve(s.target)
        value = s.value if s.op == "=" else ast.binop(s.op[0], s.target, s.value)
        code = self.exprs.typed(value, scope, sym.type)
        if sym.kind == ALIAS:
            rest = f", {code}"
            self.out.emit(depth, f"{self.exprs.prefix}f_set_{s.target.name}"
                                 f"({self.exprs.record}, B, C, rt{rest})", s.span)
            return
        if sym.kind == LOCAL and not s.target.qualifier:
            target = local(s.target.name)
        else:
            target = self.exprs.render(s.target, scope)
        if sym.type is not None and sym.type.kind == INTEGER:
            code = f"int({code})"
        self.out.emit(depth, f"{target} = {code}", s.span)

    def _LocalDeclaration(self, s, scope, depth):
        d = s.decl
        for name in d.names:
            if d.initializer is not None:
                value = self.exprs.typed(d.initializer, scope, d.type)
            else:
                value = zero_of(d.type)
            scope.define(Symbol(name, LOCAL, d.type, s.span, True, d))
            self.out.emit(depth, f"{local(name)} = {value}", s.span)

    def _CallStatement(self, s, scope, depth):
        self.out.emit(depth, self.exprs.typed(s.call, scope), s.span)

    def _Return(self, s, scope, depth):
        if s.value is None:
            self.out.emit(depth, "return", s.span)
            return
        ret = scope.find_kind("function").owner.return_type
        self.out.emit(depth, f"return {self.exprs.typed(s.value, scope, ret)}", s.span)

    def _IfChain(self, s, scope, depth):
        for k, (cond, branch) in enumerate(s.branches):
            keyword = "if" if k == 0 else "elif"
            self.out.emit(depth, f"{keyword} {self.exprs.typed(cond, scope)}:", s.span)
            self.body(branch, scope.child(s, "branch"), depth + 1)
        if s.else_body is not None:
            self.out.emit(depth, "else:", s.span)
            self.body(s.else_body, scope.child(s, "branch"), depth + 1)

    def _OdeBlock(self, s, scope, depth):
        if self.on_ode is None:
            raise RuntimeError("ODE block without a solver plan")
        self.on_ode(s, scope, depth)


def visible_locals(scope):
    names = []
    while scope is not None and scope.kind not in ("model", "global"):
        names += [n for n, sym in scope.symbols.items() if sym.kind == LOCAL]
        scope = scope.parent
    return sorted(set(names))


__all__ = ["ExpressionSource", "StatementSource", "ModuleSource", "RUNTIME_GLOBALS",
           "visible_locals", "local", "zero_of"]
