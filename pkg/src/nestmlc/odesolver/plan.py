"""Choice between the exact propagator update and the RK4 fallback."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..diagnostics import warning
from ..semantics.symbols import INTERNAL, LOCAL, MS, Symbol
from ..syntax import ast
from ..units import TypeSpec, as_unit, normalize, unit_divide
from . import symbolic as cas
from .kernel import NotLinearKernel
from .linear import LinearSystem, NotLinearConstant, _Builder
from .propagator import PropagatorMatrix, SymbolicFailure, symbolic_expm_triangular


@dataclass
class Exact:
    internal_decls: list            # [(name, Expr)]; the step variable first when injected
    update_assignments: list        # [(state, Expr)], to be applied simultaneously
    spike_increments: dict          # buffer -> [(state, Expr)]
    kernel_slots: list              # [(name, TypeSpec)] new state variables
    aliases: list                   # [(shape, Expr, TypeSpec)] for kernels split over several rates
    types: dict                     # declared name -> TypeSpec
    h: str
    inject_h: bool
    system: Optional[LinearSystem] = None
    propagator: Optional[PropagatorMatrix] = None
    warnings: list = field(default_factory=list)

    kind = "exact"


@dataclass
class Numeric:
    rhs: list                       # [(state, Expr)]
    spike_increments: dict
    kernel_slots: list
    h: str = "h"
    inject_h: bool = False
    method: str = "rk4"
    supported: bool = True
    reason: str = ""
    warnings: list = field(default_factory=list)

    kind = "numeric"


def _step_variable(scope):
    """(name, inject) for the step size ``h``."""
    taken = scope.visible_names()
    sym = scope.lookup("h")
    if sym is None:
        return "h", True
    init = getattr(sym.node, "initializer", None)
    if sym.kind == INTERNAL and isinstance(init, ast.FunctionCall) \
            and init.callee.name == "resolution" and not init.args:
        return "h", False
    name = "h__step"
    while name in taken:
        name += "_"
    return name, True


def _exact(system: LinearSystem, scope) -> Exact:
    h, inject = _step_variable(scope)
    inject = inject and system.size > 0
    taken = scope.visible_names() | {h} | set(system.state_order)
    prop = symbolic_expm_triangular(system.A, h, taken)
    n = system.size
    slots = system.slots

    declared = {}
    decls = []
    types = {}
    if inject:
        decls.append((h, cas.opaque("resolution", constant=True)))
        types[h] = MS
    order = [(i, i) for i in range(n)] + [(i, j) for i in range(n) for j in range(n) if i != j]
    for i, j in order:
        entry = prop.entries[i][j]
        if cas.is_zero(entry) or isinstance(entry, cas.Num) or slots[i].kind == "drive":
            continue
        name = prop.names[i][j]
        value = prop.diagonal[name] if i == j and entry == cas.sym(name) else entry
        declared[(i, j)] = cas.sym(name)
        decls.append((name, value))
        types[name] = _ratio(slots[i].type, slots[j].type)

    def source(j):
        s = slots[j]
        return s.drive if s.kind == "drive" else cas.sym(s.name)

    updates = []
    for i, slot in enumerate(slots):
        if slot.kind == "drive":
            continue
        terms = []
        for j in range(n):
            entry = prop.entries[i][j]
            if cas.is_zero(entry):
                continue
            terms.append(cas.mul(declared.get((i, j), entry), source(j)))
        updates.append((slot.name, cas.add(*terms)))
    kernels = [(s.name, s.type) for s in slots if s.kind == "kernel"]
    aliases = [(k.shape.name, k.value, k.type) for k in system.kernels
               if k.value != cas.sym(k.shape.name)]
    return Exact(decls, updates, system.input_map, kernels, aliases, types, h, inject,
                 system, prop)


def _ratio(a: TypeSpec, b: TypeSpec) -> TypeSpec:
    return normalize(unit_divide(as_unit(a), as_unit(b)))


def _numeric(builder: _Builder, reason, code, span=None, supported=True) -> Numeric:
    rhs = []
    for slot in builder.slots:
        row = builder.rows[slot.name]
        rhs.append((slot.name, cas.add(*(cas.mul(c, cas.sym(s)) for s, c in row.items()))))
    kernels = [(s.name, s.type) for s in builder.slots]
    if supported:
        for eq in builder.block.equations:
            rhs.append((eq.state_var, builder.equation_rhs(eq)))
    else:
        rhs = []
    h, inject = _step_variable(builder.scope)
    diags = []
    if code is not None:
        diags.append(warning(code, reason, span) if span is not None else warning(code, reason))
    return Numeric(rhs, dict(builder.increments), kernels, h, inject and bool(rhs),
                   supported=supported, reason=reason, warnings=diags)


def make_solver_plan(block: ast.OdeBlock, scope, max_order=5, prefer="exact"):
    """Exact plan when the block is linear with a decidable propagator, else Numeric.

    ``prefer="numeric"`` asks for the RK4 plan even when an exact one
    exists (used for cross-checks).  Never raises for a block that passed
    semantic checking.
    """
    builder = _Builder(block, scope, max_order)
    try:
        builder.add_kernels()
    except NotLinearKernel as exc:
        return _numeric(builder, f"kernel is not linear: {exc.reason}", "W0502",
                        block.span, supported=False)
    except cas.CASError as exc:
        return _numeric(builder, f"kernel is not linear: {exc}", "W0502",
                        block.span, supported=False)
    kernel_only = list(builder.slots)
    if prefer == "numeric":
        return _numeric(builder, "numeric integration requested", None)
    try:
        builder.add_equations()
        system = builder.system()
    except (NotLinearConstant, cas.CASError) as exc:
        builder.slots = kernel_only
        span = getattr(exc, "span", block.span)
        return _numeric(builder, f"system is not linear with constant coefficients: {exc}",
                        "W0501", span)
    try:
        return _exact(system, scope)
    except SymbolicFailure as exc:
        builder.slots = kernel_only
        return _numeric(builder, f"no symbolic propagator: {exc.reason}", "W0503", block.span)


def dynamics_scope(model_scope, dyn, upto=None):
    """Scope of a dynamics body: its parameters plus locals declared before ``upto``."""
    scope = model_scope.child(dyn, "dynamics")
    for p in dyn.params:
        scope.define(Symbol(p.name, LOCAL, p.type, p.span, True, p))
    for stmt in dyn.body[:upto]:
        if isinstance(stmt, ast.LocalDeclaration):
            for name in stmt.decl.names:
                scope.define(Symbol(name, LOCAL, stmt.decl.type, stmt.span,
                                    True, stmt.decl))
    return scope


def find_ode_block(model_scope, model):
    """(dynamics, index, block, scope) of the model's ODE block, or None."""
    for dyn in model.dynamics:
        for index, stmt in enumerate(dyn.body):
            if isinstance(stmt, ast.OdeBlock):
                return dyn, index, stmt, dynamics_scope(model_scope, dyn, index)
    return None


__all__ = ["Exact", "Numeric", "make_solver_plan", "dynamics_scope", "find_ode_block"]
