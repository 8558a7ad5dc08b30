"""Lowering of typed model statements and expressions to C++ text."""

from __future__ import annotations

import json

from ..semantics.symbols import (ALIAS, BUFFER, BUILTIN, COMPONENT, FUNCTION, INTERNAL, LOCAL,
                                 PARAMETER, STATE, Symbol)
from ..semantics.typecheck import Typer, analyze, convert_for, type_of
from ..syntax import ast
from ..units import BOOLEAN, INTEGER, STRING, VOID

INDENT = "  "

# Every identifier generated code may use besides the model's own record
# members; the module file defines them.
SHIM = ("nestml_RingBuffer", "nestml_BadParameter", "nestml_E", "nestml_resolution",
        "nestml_steps", "nestml_time", "nestml_send_spike", "nestml_log_info",
        "nestml_register_model", "exp", "log", "pow", "fmin", "fmax")

_BINARY = {"and": "&&", "or": "||"}
_RECORD = {STATE: "S_", PARAMETER: "P_", INTERNAL: "V_"}


class CodegenError(RuntimeError):
    """Internal invariant violation: the input was not a checked, transformed model."""


def cpp_type(t) -> str:
    if t is None or t.kind == VOID:
        return "void"
    if t.kind == INTEGER:
        return "long"
    if t.kind == BOOLEAN:
        return "bool"
    if t.kind == STRING:
        return "std::string"
    return "double"


def literal(text) -> str:
    """A numeric literal in C++ spelling (unit annotations are dropped)."""
    return text


class ExpressionLowering:
    """Render lowered expressions with full parenthesization.

    ``member`` selects how model variables are spelled: ``record`` gives
    ``S_.V_m`` style access, ``bare`` the plain names (used inside
    component structs).
    """

    def __init__(self, component_prefix=None, member="record"):
        self.member = member
        self.component_prefix = component_prefix or {}

    def typed(self, expr, scope, target=None) -> str:
        """Type-check, insert unit conversions (also into ``target``'s scale) and render."""
        t, lowered = analyze(expr, scope)
        if target is not None:
            lowered = convert_for(target, t, lowered)
        return self.render(lowered, scope)

    def render(self, e, scope) -> str:
        method = getattr(self, "_" + type(e).__name__)
        return method(e, scope)

    def _Paren(self, e, scope):
        return self.render(e.inner, scope)

    def _NumberLiteral(self, e, scope):
        return literal(e.text)

    def _StringLiteral(self, e, scope):
        return json.dumps(e.value)

    def _BoolLiteral(self, e, scope):
        return "true" if e.value else "false"

    def variable(self, name, sym):
        if sym.kind == BUILTIN and name == "E":
            return "nestml_E"
        if sym.kind == ALIAS:
            return f"get_{name}()"
        if sym.kind in _RECORD and self.member == "record" and sym.scope is not None \
                and sym.scope.kind == "model":
            return f"{_RECORD[sym.kind]}.{name}"
        return name

    def _VariableRef(self, e, scope):
        sym = Typer(scope).resolve(e)
        if e.qualifier:
            return f"{self.component_prefix.get(e.qualifier, e.qualifier + '_')}.{e.name}"
        return self.variable(e.name, sym)

    def _UnaryOp(self, e, scope):
        op = "-" if e.op == "neg" else "!"
        return f"({op}{self.render(e.operand, scope)})"

    def _BinaryOp(self, e, scope):
        lhs, rhs = self.render(e.lhs, scope), self.render(e.rhs, scope)
        if e.op == "**":
            return f"pow({lhs}, {rhs})"
        if e.op == "/" and type_of(e.lhs, scope).kind == INTEGER \
                and type_of(e.rhs, scope).kind == INTEGER:
            return f"((1.0 * {lhs}) / {rhs})"
        return f"({lhs} {_BINARY.get(e.op, e.op)} {rhs})"

    def _FunctionCall(self, e, scope):
        callee = e.callee
        args = [self.render(a, scope) for a in e.args]
        if callee.qualifier:
            owner = scope.lookup(callee.qualifier)
            if owner is not None and owner.kind == BUFFER:
                return f"B_.{callee.qualifier}.get_value(lag)"
            prefix = self.component_prefix.get(callee.qualifier, callee.qualifier + "_")
            return f"{prefix}.{callee.name}({', '.join(args)})"
        sym = scope.lookup(callee.name)
        if sym is not None and sym.kind == BUILTIN:
            name = callee.name
            if name == "exp":
                return f"exp({args[0]})"
            if name == "ln":
                return f"log({args[0]})"
            if name in ("min", "max"):
                return f"f{name}({args[0]}, {args[1]})"
            if name == "resolution":
                return "nestml_resolution()"
            if name == "steps":
                return f"nestml_steps({args[0]})"
            if name == "emitSpike":
                return "nestml_send_spike(this, lag)"
            if name == "log_info":
                return f"nestml_log_info({args[0]})"
            raise CodegenError(f"no lowering for builtin '{name}'")
        if sym is None or sym.kind != FUNCTION:
            raise CodegenError(f"call of unknown function '{callee.name}'")
        return f"{callee.name}({', '.join(args)})"


class StatementLowering:
    def __init__(self, exprs: ExpressionLowering):
        self.exprs = exprs

    def body(self, stmts, scope, depth, lines):
        for stmt in stmts:
            getattr(self, "_" + type(stmt).__name__)(stmt, scope, depth, lines)

    def _Assignment(self, s, scope, depth, lines):
        sym = Typer(scope).resolve(s.target)
        value = s.value if s.op == "=" else ast.binop(s.op[0], s.target, s.value)
        if sym.kind == ALIAS:
            # alias writes go through the user's setter
            lines.append(f"{INDENT * depth}set_{s.target.name}("
                         f"{self.exprs.typed(value, scope, sym.type)});")
            return
        target = self.exprs.render(s.target, scope)
        lines.append(f"{INDENT * depth}{target} = {self.exprs.typed(value, scope, sym.type)};")

    def _LocalDeclaration(self, s, scope, depth, lines):
        d = s.decl
        for name in d.names:
            init = ""
            if d.initializer is not None:
                init = " = " + self.exprs.typed(d.initializer, scope, d.type)
            elif cpp_type(d.type) in ("double", "long"):
                init = " = 0"
            scope.define(Symbol(name, LOCAL, d.type, s.span, True, d))
            lines.append(f"{INDENT * depth}{cpp_type(d.type)} {name}{init};")

    def _CallStatement(self, s, scope, depth, lines):
        lines.append(f"{INDENT * depth}{self.exprs.typed(s.call, scope)};")

    def _Return(self, s, scope, depth, lines):
        if s.value is None:
            lines.append(f"{INDENT * depth}return;")
        else:
            ret = scope.find_kind("function").owner.return_type
            lines.append(f"{INDENT * depth}return {self.exprs.typed(s.value, scope, ret)};")

    def _IfChain(self, s, scope, depth, lines):
        pad = INDENT * depth
        for k, (cond, branch) in enumerate(s.branches):
            keyword = "if" if k == 0 else "} else if"
            lines.append(f"{pad}{keyword} ({self.exprs.typed(cond, scope)}) {{")
            self.body(branch, scope.child(s, "branch"), depth + 1, lines)
        if s.else_body is not None:
            lines.append(f"{pad}}} else {{")
            self.body(s.else_body, scope.child(s, "branch"), depth + 1, lines)
        lines.append(f"{pad}}}")

    def _OdeBlock(self, s, scope, depth, lines):
        raise CodegenError("an ODE block reached code generation; transform the model first")


__all__ = ["ExpressionLowering", "StatementLowering", "CodegenError", "cpp_type", "SHIM",
           "COMPONENT"]
