"""Context conditions CC-01 through CC-10.

Every condition is evaluated and every violation reported; checking never
stops at the first problem.  The pass is deterministic, so running it twice
yields identical diagnostic lists.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from ..diagnostics import NO_SPAN, error, sort_diagnostics, warning
from ..syntax import ast
from ..units import BOOLEAN, REAL, UNIT, TypeSpec, as_unit, unit_divide
from .symbols import (ALIAS, BUFFER, BUILTIN, COMPONENT, FUNCTION, INTERNAL, LOCAL, MS,
                      PARAMETER, SHAPE, STATE, Symbol, build_symbol_table, declared_names)
from .typecheck import SemanticError, Typer, analyze, assign_compat

_MODEL_KINDS = (STATE, PARAMETER, INTERNAL, ALIAS)
_DYNAMICS_TARGETS = (STATE, LOCAL)


@dataclass
class _Context:
    kind: str  # "dynamics" | "function"
    model_scope: object
    return_type: Optional[TypeSpec] = None


class _Checker:
    def __init__(self, table):
        self.table = table
        self.diags = []

    def report(self, code, message, node, severity="error"):
        make = error if severity == "error" else warning
        self.diags.append(make(code, message, getattr(node, "span", NO_SPAN)))

    def analyze(self, expr, scope, remap=None):
        """Type ``expr``; on failure record the diagnostic and return None."""
        try:
            return analyze(expr, scope)[0]
        except SemanticError as exc:
            diag = exc.diagnostic
            if remap and diag.code in remap:
                diag = replace(diag, code=remap[diag.code])
            self.diags.append(diag)
            return None

    # -- model level --------------------------------------------------------

    def check_model(self, decl, scope):
        for block, span in decl.duplicate_blocks:
            self.diags.append(error("E0408", f"{decl.name} declares more than one {block} block",
                                    span))
        self.check_declarations(decl, scope)
        for fn in decl.functions:
            self.check_function(fn, scope)
        self.ode_blocks = 0
        for dyn in decl.dynamics:
            self.check_dynamics(dyn, scope)

    def check_declarations(self, decl, scope):
        orders = {}
        for order, (name, _, d) in enumerate(declared_names(decl)):
            orders.setdefault(id(d), []).append(order)
        for block in ("parameter", "state", "internal"):
            for d in getattr(decl, block):
                first, last = orders[id(d)][0], orders[id(d)][-1]
                self.check_declaration(d, scope, first, last, block == "internal")

    def check_declaration(self, d, scope, first, last, in_internal):
        if d.is_alias and d.initializer is None:
            self.report("E0404", f"alias {', '.join(d.names)} needs a defining expression", d)
        if d.initializer is not None:
            value = self.analyze(d.initializer, scope.restricted(first, "E0401"))
            if value is not None:
                self.check_store(d.type, value, d, ", ".join(d.names), coerce=in_internal)
        if d.guard is not None:
            t = self.analyze(d.guard, scope.restricted(last + 1, "E0405"),
                             remap={"E0302": "E0405", "E0401": "E0405"})
            if t is not None and t.kind != BOOLEAN:
                self.report("E0405", f"guard of {', '.join(d.names)} must be boolean, got {t}",
                            d)

    def check_store(self, target_type, value, node, what, coerce=False):
        verdict = assign_compat(target_type, value, allow_coercion=coerce)
        if verdict == "error":
            self.report("E0402", f"cannot assign {value} to {what} of type {target_type}", node)
        elif verdict == "coerce":
            self.report("W0310", f"{what}: {value} value stored as {target_type}", node,
                        "warning")

    # -- bodies -------------------------------------------------------------

    def check_function(self, fn, model_scope):
        scope = model_scope.child(fn, "function")
        for p in fn.params:
            self.define_local(p.name, p.type, p, scope, model_scope)
        self.check_body(fn.body, scope, _Context("function", model_scope, fn.return_type))

    def check_dynamics(self, dyn, model_scope):
        scope = model_scope.child(dyn, "dynamics")
        for p in dyn.params:
            self.define_local(p.name, p.type, p, scope, model_scope)
        self.check_body(dyn.body, scope, _Context("dynamics", model_scope))

    def define_local(self, name, type_, node, scope, model_scope):
        shadowed = model_scope.symbols.get(name)
        if shadowed is not None and shadowed.kind in _MODEL_KINDS:
            self.report("E0407", f"local '{name}' shadows {shadowed.kind} '{name}'", node)
            return
        existing = scope.lookup(name)
        if existing is not None and existing.kind == LOCAL:
            self.report("E0201", f"duplicate local '{name}'", node)
            return
        scope.define(Symbol(name, LOCAL, type_, node.span, True, node))

    def check_body(self, body, scope, ctx):
        for stmt in body:
            handler = getattr(self, "stmt_" + type(stmt).__name__)
            handler(stmt, scope, ctx)

    def stmt_LocalDeclaration(self, stmt, scope, ctx):
        d = stmt.decl
        if d.initializer is not None:
            value = self.analyze(d.initializer, scope)
            if value is not None:
                self.check_store(d.type, value, d, ", ".join(d.names))
        for name in d.names:
            self.define_local(name, d.type, d, scope, ctx.model_scope)
        if d.guard is not None:
            t = self.analyze(d.guard, scope, remap={"E0302": "E0405"})
            if t is not None and t.kind != BOOLEAN:
                self.report("E0405", "guard must be boolean", d)

    def stmt_Assignment(self, stmt, scope, ctx):
        try:
            sym = Typer(scope).resolve(stmt.target)
        except SemanticError as exc:
            self.diags.append(exc.diagnostic)
            return
        name = stmt.target.full_name
        if sym.kind == ALIAS:
            if not sym.writable:
                self.report("E0404", f"alias '{name}' has no set_{sym.name} setter", stmt)
                return
        elif sym.kind in (BUFFER, FUNCTION, BUILTIN, COMPONENT, SHAPE):
            self.report("E0403", f"'{name}' is not an assignable variable", stmt)
            return
        elif ctx.kind == "dynamics" and sym.kind not in _DYNAMICS_TARGETS \
                and stmt.target.qualifier is None:
            self.report("E0403", f"dynamics may not assign {sym.kind} '{name}'", stmt)
            return
        value_expr = stmt.value
        if stmt.op != "=":
            value_expr = ast.binop(stmt.op[0], stmt.target, stmt.value)
            value_expr = replace(value_expr, span=stmt.span)
        value = self.analyze(value_expr, scope)
        if value is not None:
            self.check_store(sym.type, value, stmt, f"'{name}'")

    def stmt_CallStatement(self, stmt, scope, ctx):
        self.analyze(stmt.call, scope)

    def stmt_Return(self, stmt, scope, ctx):
        expected = ctx.return_type
        if stmt.value is None:
            if expected is not None:
                self.report("E0402", f"missing return value of type {expected}", stmt)
            return
        value = self.analyze(stmt.value, scope)
        if expected is None:
            self.report("E0402", "unexpected return value", stmt)
        elif value is not None:
            self.check_store(expected, value, stmt, "return value")

    def stmt_IfChain(self, stmt, scope, ctx):
        for cond, body in stmt.branches:
            t = self.analyze(cond, scope)
            if t is not None and t.kind != BOOLEAN:
                self.report("E0304", f"condition must be boolean, got {t}", stmt)
            self.check_body(body, scope.child(stmt, "branch"), ctx)
        if stmt.else_body is not None:
            self.check_body(stmt.else_body, scope.child(stmt, "branch"), ctx)

    def stmt_OdeBlock(self, stmt, scope, ctx):
        self.ode_blocks += 1
        if self.ode_blocks > 1:
            self.report("E0409", "a model may contain only one ODE block", stmt)
        ode = scope.child(stmt, "ode")
        ode.define(Symbol("t", BUILTIN, MS))
        model = ctx.model_scope.owner
        spike_buffers = [line.name for line in model.input if line.kind == "spike"]
        for shape in stmt.shapes:
            if ode.lookup(shape.name) is not None:
                self.report("E0409", f"shape name '{shape.name}' is already in use", shape)
            self.check_binding(shape, spike_buffers, ctx.model_scope)
            t = self.analyze(shape.kernel, ode)
            ode.define(Symbol(shape.name, SHAPE, t or MS, shape.span, False, shape))
        seen = set()
        for eq in stmt.equations:
            sym = ctx.model_scope.symbols.get(eq.state_var)
            if sym is None or sym.kind != STATE:
                self.report("E0409", f"'{eq.state_var}' is not a declared state variable", eq)
                continue
            if eq.state_var in seen:
                self.report("E0409", f"'{eq.state_var}' has more than one equation", eq)
            seen.add(eq.state_var)
            if sym.type.kind not in (REAL, UNIT):
                self.report("E0409", f"state '{eq.state_var}' of type {sym.type} cannot evolve "
                                     "continuously", eq)
                continue
            rhs = self.analyze(eq.rhs, ode)
            if rhs is None:
                continue
            expected = unit_divide(as_unit(sym.type), MS.unit)
            if not rhs.is_numeric or as_unit(rhs).dimension != expected.dimension:
                self.report("E0301", f"d/dt {eq.state_var} has type {rhs}, expected a rate "
                                     f"of {sym.type}", eq)

    def check_binding(self, shape, spike_buffers, model_scope):
        if shape.buffer is not None:
            sym = model_scope.symbols.get(shape.buffer)
            if sym is None or sym.kind != BUFFER or sym.type.buffer != "spike":
                self.report("E0501", f"shape '{shape.name}' is bound to '{shape.buffer}', "
                                     "which is not a spike buffer", shape)
        elif len(spike_buffers) != 1:
            self.report("E0501", f"shape '{shape.name}' needs 'on <buffer>' with "
                                 f"{len(spike_buffers)} spike buffers declared", shape)


def check_context_conditions(files, table) -> list:
    checker = _Checker(table)
    for f in files:
        for decl in f.declarations:
            scope = table.model_scopes.get(decl.name)
            if scope is None or scope.owner is not decl:
                continue
            checker.check_model(decl, scope)
    return sort_diagnostics(checker.diags)


def check(files):
    """Build the symbol table and run every condition; returns (table, diagnostics)."""
    table = build_symbol_table(files)
    diags = list(table.diagnostics) + check_context_conditions(files, table)
    return table, sort_diagnostics(diags)


__all__ = ["check_context_conditions", "check"]
