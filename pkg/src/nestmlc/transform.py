"""Rewrite declarative ODE blocks into plain imperative updates.

The output is an ordinary model: the ODE block is replaced by assignments
(exact plans) or by a call to a generated RK4 routine (numeric plans), and
the propagator entries become internal declarations.  Generated names live
in the ``__`` namespace that user source may not use.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .diagnostics import Diagnostic, error, sort_diagnostics
from .odesolver import find_ode_block, make_solver_plan
from .odesolver import symbolic as cas
from .semantics import build_symbol_table, check
from .semantics.symbols import ALIAS
from .syntax import ast, pretty_print
from .units import TypeSpec, as_unit, normalize, unit_divide, unit_type

MS = unit_type("ms")


@dataclass
class TransformReport:
    model: str
    mode: str                                   # "exact" | "numeric" | "none"
    injected_decls: list = field(default_factory=list)
    replaced_spans: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    plan: object = None


# -- expression helpers ----------------------------------------------------------------

def _rename_time(expr, time):
    if time == "t":
        return expr

    def fn(e):
        if isinstance(e, ast.VariableRef) and e.qualifier is None and e.name == "t":
            return replace(e, name=time) if isinstance(time, str) else time
        return e
    return ast.map_expression(expr, fn)


def _emit(x, time):
    return _rename_time(cas.to_ast(x), time)


def _decl(name, type_, value):
    return ast.Declaration((name,), type_, value)


def _time_of(dyn):
    return dyn.params[0].name if dyn.params else ast.NumberLiteral("0", "ms")


def _rate(t: TypeSpec) -> TypeSpec:
    return normalize(unit_divide(as_unit(t), MS.unit))


def _increments(plan, time):
    out = []
    for buffer, entries in plan.spike_increments.items():
        read = ast.FunctionCall(ast.VariableRef("getSum", buffer),
                                (time if not isinstance(time, str) else ast.var(time),))
        for state, value in entries:
            out.append(ast.Assignment(ast.var(state), "+=", ast.binop("*", _emit(value, time),
                                                                       read)))
    return out


# -- exact plans -------------------------------------------------------------------------------

def _exact_statements(plan, time):
    """Update statements with snapshots for every read-after-write hazard."""
    written = set()
    snapshot = {}
    for state, expr in plan.update_assignments:
        for name in cas.free_symbols(expr) & written:
            snapshot.setdefault(name, f"{name}__prev")
        written.add(state)
    types = dict(plan.kernel_slots)
    types.update({s.name: s.type for s in plan.system.slots if s.kind == "state"})
    stmts = [ast.LocalDeclaration(_decl(tmp, types[name], ast.var(name)))
             for name, tmp in snapshot.items()]
    done = set()
    for state, expr in plan.update_assignments:
        mapping = {n: cas.sym(snapshot[n]) for n in cas.free_symbols(expr) & done
                   if n in snapshot}
        stmts.append(ast.Assignment(ast.var(state), "=", _emit(cas.subs(expr, mapping), time)))
        done.add(state)
    return stmts


def _internal_decls(plan, time):
    out = []
    for name, value in plan.internal_decls:
        out.append(_decl(name, plan.types[name], _emit(value, time)))
    return out


# -- numeric plans -------------------------------------------------------------------------------

def _rk4_function(plan, model, time_name, state_types):
    """``integrate_rk4(t)``: classical RK4 over the plan's right-hand sides."""
    h = cas.sym(plan.h)
    t = cas.sym(time_name)
    names = [s for s, _ in plan.rhs]
    body = []

    def stage(k, states, at):
        for s, rhs in plan.rhs:
            value = cas.subs(rhs, {**{n: cas.sym(v) for n, v in states.items()}, "t": at})
            body.append(ast.LocalDeclaration(
                _decl(f"{s}__k{k}", _rate(state_types[s]), cas.to_ast(value))))

    stage(1, {}, t)
    for k, frac in ((2, cas.const(1) / 2), (3, cas.const(1) / 2), (4, cas.ONE)):
        states = {}
        for s in names:
            x = cas.add(cas.sym(s), cas.mul(frac, h, cas.sym(f"{s}__k{k - 1}")))
            body.append(ast.LocalDeclaration(_decl(f"{s}__x{k}", state_types[s], cas.to_ast(x))))
            states[s] = f"{s}__x{k}"
        stage(k, states, cas.add(t, cas.mul(frac, h)))
    for s in names:
        ks = [cas.sym(f"{s}__k{k}") for k in range(1, 5)]
        incr = cas.mul(cas.const(1) / 6, h, cas.add(ks[0], cas.mul(2, ks[1]), cas.mul(2, ks[2]),
                                                     ks[3]))
        body.append(ast.Assignment(ast.var(s), "+=", cas.to_ast(incr)))
    name = "integrate_rk4"
    taken = {f.name for f in model.functions}
    while name in taken:
        name += "__"
    fn = ast.FunctionDecl(name, (ast.Param(time_name, MS),), None, tuple(body))
    return fn


# -- alias writes ------------------------------------------------------------------------------------

def _rewrite_alias_writes(body, aliases):
    out = []
    for stmt in body:
        if isinstance(stmt, ast.Assignment) and stmt.target.qualifier is None \
                and stmt.target.name in aliases:
            value = stmt.value if stmt.op == "=" else \
                ast.binop(stmt.op[0], stmt.target, stmt.value)
            out.append(ast.CallStatement(ast.call(f"set_{stmt.target.name}", value), stmt.span))
        elif isinstance(stmt, ast.IfChain):
            branches = tuple((c, tuple(_rewrite_alias_writes(b, aliases)))
                             for c, b in stmt.branches)
            else_body = None if stmt.else_body is None else \
                tuple(_rewrite_alias_writes(stmt.else_body, aliases))
            out.append(replace(stmt, branches=branches, else_body=else_body))
        else:
            out.append(stmt)
    return out


def _writable_aliases(model, scope):
    names = set()
    for d in model.state + model.parameter + model.internal:
        if d.is_alias:
            for n in d.names:
                sym = scope.lookup(n)
                if sym is not None and sym.kind == ALIAS and sym.writable:
                    names.add(n)
    return names


# -- driver ------------------------------------------------------------------------------------------

def apply_solver_plan(model, plan, scope=None):
    """Replace the model's ODE block according to ``plan``.

    Returns ``(model, report)``; a model without an ODE block comes back
    unchanged with mode ``none``.
    """
    site = None
    for dyn in model.dynamics:
        for index, stmt in enumerate(dyn.body):
            if isinstance(stmt, ast.OdeBlock):
                site = (dyn, index, stmt)
                break
        if site:
            break
    if site is None or plan is None:
        return model, TransformReport(model.name, "none")
    dyn, index, block = site
    report = TransformReport(model.name, plan.kind, warnings=list(plan.warnings), plan=plan,
                             replaced_spans=[block.span])
    time = _time_of(dyn)
    time_name = time if isinstance(time, str) else "t"
    state = list(model.state)
    internal = list(model.internal)
    functions = list(model.functions)

    if plan.kind == "numeric" and not plan.supported:
        report.errors.append(error("E0502", f"cannot integrate the ODE block: {plan.reason}",
                                   block.span))
        return model, report

    for name, type_ in plan.kernel_slots:
        state.append(_decl(name, type_, ast.num(0)))
        report.injected_decls.append(name)

    if plan.kind == "exact":
        decls = _internal_decls(plan, time)
        internal.extend(decls)
        report.injected_decls.extend(d.names[0] for d in decls)
        replacement = _exact_statements(plan, time) + _increments(plan, time)
    else:
        if plan.inject_h:
            internal.append(_decl(plan.h, MS, ast.call("resolution")))
            report.injected_decls.append(plan.h)
        state_types = dict(plan.kernel_slots)
        for d in model.state:
            for n in d.names:
                state_types[n] = d.type
        fn = _rk4_function(plan, model, time_name, state_types)
        functions.append(fn)
        report.injected_decls.append(fn.name)
        call_arg = ast.var(time) if isinstance(time, str) else time
        replacement = [ast.CallStatement(ast.call(fn.name, call_arg))] + \
            _increments(plan, time) if plan.rhs else _increments(plan, time)

    body = list(dyn.body[:index]) + replacement + list(dyn.body[index + 1:])
    if scope is not None:
        body = _rewrite_alias_writes(body, _writable_aliases(model, scope))
    new_dyn = replace(dyn, body=tuple(body))
    dynamics = tuple(new_dyn if d is dyn else d for d in model.dynamics)
    return replace(model, state=tuple(state), internal=tuple(internal),
                   functions=tuple(functions), dynamics=dynamics), report


def transform_files(files):
    """Transform every neuron in ``files``.

    Returns ``(files, reports, diagnostics)``.  Diagnostics hold transform
    errors plus any context-condition errors of the transformed models
    (there should be none).
    """
    table = build_symbol_table(files)
    reports = []
    out_files = []
    for f in files:
        decls = []
        for decl in f.declarations:
            scope = table.model_scopes.get(decl.name)
            if decl.is_component or scope is None:
                decls.append(decl)
                continue
            site = find_ode_block(scope, decl)
            plan = make_solver_plan(site[2], site[3]) if site else None
            new, report = apply_solver_plan(decl, plan, scope)
            decls.append(new)
            reports.append(report)
        out_files.append(replace(f, declarations=tuple(decls)))
    diags = [d for r in reports for d in r.errors]
    if not diags:
        _, after = check(out_files)
        diags = [d for d in after if d.is_error]
    return out_files, reports, sort_diagnostics(diags)


def imports_for(model, files):
    """Imports of the file declaring ``model`` (all imports if none declares it)."""
    files = files or []
    for f in files:
        if any(d is model for d in f.declarations):
            return f.imports
    return tuple(dict.fromkeys(i for f in files for i in f.imports))


def transform_model(model, files=None):
    """Transform one model; ``files`` supplies imported components."""
    own = ast.ModelFile(imports_for(model, files), (model,))
    others = [f for f in (files or []) if model not in f.declarations]
    out, reports, diags = transform_files([own] + others)
    return out[0].declarations[0], reports[0], diags


def transform_and_emit_inspectable(model, files=None) -> str:
    """Pretty-printed transformed model (the ``<model>.solved.nestml`` text)."""
    new, _, _ = transform_model(model, files)
    return pretty_print(new)


__all__ = ["TransformReport", "apply_solver_plan", "transform_files", "transform_model",
           "transform_and_emit_inspectable", "imports_for", "Diagnostic"]
