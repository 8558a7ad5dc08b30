"""Instantiate and step neuron models; run them against a stimulus program."""

from __future__ import annotations

import logging
import math
import sys
from dataclasses import dataclass, field

from ..odesolver import find_ode_block, make_solver_plan
from ..odesolver import symbolic as cas
from ..semantics import build_symbol_table, check
from ..semantics.symbols import ALIAS, LOCAL, Symbol
from ..syntax import ast
from ..transform import imports_for
from ..units import BOOLEAN, INTEGER
from .casfn import compile_cas, constant_calls
from .io import CurrentStep, StimulusError, StimulusProgram, Trace, snap
from .pysource import (RUNTIME_GLOBALS, ExpressionSource, ModuleSource, StatementSource,
                       local, visible_locals)
from .ringbuffer import CURRENT, RingBuffer, sign_filter

log = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    def __init__(self, message, span=None):
        super().__init__(f"{span}: {message}" if span is not None else message)
        self.message = message
        self.span = span


class GuardViolation(SimulationError):
    def __init__(self, name, value, span=None):
        super().__init__(f"guard of '{name}' violated by value {value!r}", span)
        self.name = name
        self.value = value


class EvaluationError(SimulationError):
    pass


class UnsupportedFeature(SimulationError):
    pass


@dataclass
class SimulationConfig:
    resolution_ms: float = 0.1
    duration_ms: float = 100.0
    guard_checks: bool = False
    overrides: dict = field(default_factory=dict)
    sample_every: int = 1
    max_delay_ms: float = 1.0
    solver: str = "exact"        # "numeric" forces the RK4 plan


# -- compilation -----------------------------------------------------------------------

class Program:
    """A model compiled to Python, plus its solver plan when it has an ODE block."""

    def __init__(self, model, files=None, solver="exact"):
        if model.is_component:
            raise UnsupportedFeature(f"'{model.name}' is a component, not a neuron")
        for dyn in model.dynamics:
            if dyn.kind != "timestep":
                raise UnsupportedFeature(f"{dyn.kind} dynamics are not executed by the "
                                         "reference runtime", dyn.span)
        own = ast.ModelFile(imports_for(model, files), (model,))
        others = [f for f in (files or []) if not any(d is model for d in f.declarations)]
        files = [own] + others
        _, diags = check(files)
        errors = [d for d in diags if d.is_error]
        if errors:
            raise SimulationError(f"model does not check: {errors[0].render()}")
        self.model = model
        self.table = build_symbol_table(files)
        self.scope = self.table.scope_of(model.name)
        self.plan = None
        site = find_ode_block(self.scope, model)
        if site is not None:
            self.plan = make_solver_plan(site[2], site[3], prefer=solver)
            if self.plan.kind == "numeric" and not self.plan.supported:
                raise UnsupportedFeature(f"cannot integrate the ODE block: {self.plan.reason}",
                                         site[2].span)
        self.out = ModuleSource(f"<nestml {model.name}>")
        self.decls = []          # (name, kind, Declaration, init fn name, guard fn name)
        self.components = []     # (local name, ComponentDecl, [(name, Declaration, fn)])
        self.ode_calls = {}
        self._emit()
        namespace = dict(RUNTIME_GLOBALS)
        exec(compile(self.out.text(), self.out.filename, "exec"), namespace)
        self.namespace = namespace
        self.ode_fns = {key: namespace[fn] for key, fn in self.ode_calls.items()}

    # declarations and functions, for the model and for every used component
    def _declarations(self, decl, scope, prefix):
        exprs = ExpressionSource(prefix=prefix)
        out = []
        k = 0
        for block in ("parameter", "state", "internal"):
            for d in getattr(decl, block):
                if d.is_alias:
                    for name in d.names:
                        self.out.emit(0, f"def {prefix}a_{name}(V, B, C, rt):")
                        self.out.emit(1, f"return {exprs.typed(d.initializer, scope, d.type)}",
                                      d.span)
                    continue
                for name in d.names:
                    init = guard = None
                    if d.initializer is not None:
                        init = f"{prefix}d_{k}"
                        value = exprs.typed(d.initializer, scope, d.type)
                        if d.type.kind == INTEGER:
                            value = f"int({value})"
                        self.out.emit(0, f"def {init}(V, B, C, rt):")
                        self.out.emit(1, f"return {value}", d.span)
                    if d.guard is not None:
                        guard = f"{prefix}g_{k}"
                        self.out.emit(0, f"def {guard}(V, B, C, rt):")
                        self.out.emit(1, f"return {exprs.typed(d.guard, scope)}", d.guard.span
                                      if hasattr(d.guard, "span") else d.span)
                    out.append((name, block, d, init, guard))
                    k += 1
        for fn in decl.functions:
            fscope = scope.child(fn, "function")
            for p in fn.params:
                fscope.define(Symbol(p.name, LOCAL, p.type, p.span, True, p))
            params = "".join(", " + local(p.name) for p in fn.params)
            self.out.emit(0, f"def {prefix}f_{fn.name}(V, B, C, rt{params}):", fn.span)
            StatementSource(self.out, exprs).body(fn.body, fscope, 1)
        return out

    def _emit(self):
        for use in self.model.uses:
            comp = self.table.global_scope.lookup(use.component).node
            cscope = self.table.scope_of(comp.name)
            entries = self._declarations(comp, cscope, f"c_{comp.name}_")
            self.components.append((use.local_name, comp, entries))
        self.decls = self._declarations(self.model, self.scope, "")
        stmts = StatementSource(self.out, ExpressionSource(), self._ode_statement)
        for k, dyn in enumerate(self.model.dynamics):
            scope = self.scope.child(dyn, "dynamics")
            for p in dyn.params:
                scope.define(Symbol(p.name, LOCAL, p.type, p.span, True, p))
            self.out.emit(0, f"def dyn_{k}(V, B, C, rt):", dyn.span)
            for p in dyn.params:
                self.out.emit(1, f"{local(p.name)} = rt.time")
            stmts.body(dyn.body, scope, 1)
        if self.plan is not None:
            self._ode_functions()

    def _ode_statement(self, stmt, scope, depth):
        names = visible_locals(scope)
        env = ", ".join(f"{n!r}: {local(n)}" for n in names)
        self.out.emit(depth, f"rt.ode_step(V, B, C, {{{env}}})", stmt.span)

    def _ode_functions(self):
        """One function per constant call (buffer read, resolution()) in the plan."""
        site = find_ode_block(self.scope, self.model)
        scope = site[3]
        exprs = ExpressionSource()
        for k, (key, f) in enumerate(sorted(constant_calls(plan_expressions(self.plan))
                                            .items())):
            fn = f"ode_call_{k}"
            self.out.emit(0, f"def {fn}(V, B, C, rt, L):")
            for name in visible_locals(scope):
                self.out.emit(1, f"{local(name)} = L.get({name!r})")
            node = f.node if f.node is not None else ast.call(f.name)
            self.out.emit(1, f"return {exprs.typed(node, scope)}", f.node and f.node.span)
            self.ode_calls[key] = fn


def plan_expressions(plan):
    exprs = []
    if plan.kind == "exact":
        exprs += [e for _, e in plan.internal_decls] + [e for _, e in plan.update_assignments]
    else:
        exprs += [e for _, e in plan.rhs]
    exprs += [e for entries in plan.spike_increments.values() for _, e in entries]
    return exprs


# -- plan execution ----------------------------------------------------------------------

class _PlanExecutor:
    """Runs the solver plan in place of the ODE block (no transformed source involved)."""

    def __init__(self, program, instance):
        self.plan = plan = program.plan
        self.fns = program.ode_fns
        self.instance = instance
        self.increments = {buffer: [(state, compile_cas(e)) for state, e in entries]
                           for buffer, entries in plan.spike_increments.items()}
        self.calls = _callables(program, instance)
        self.fixed = {"E": math.e}
        if plan.inject_h:
            self.fixed[plan.h] = instance.h
        self.step_calls = sorted(constant_calls(
            [e for entries in plan.spike_increments.values() for _, e in entries]
            + [e for _, e in (plan.update_assignments if plan.kind == "exact" else plan.rhs)]))
        if plan.kind == "exact":
            env = self._base_env({}, sorted(constant_calls(e for _, e in plan.internal_decls)))
            for name, expr in plan.internal_decls:
                env[name] = self.fixed[name] = compile_cas(expr)(env, self.calls)
            self.updates = [(s, compile_cas(e)) for s, e in plan.update_assignments]
        else:
            self.rhs = [(s, compile_cas(e)) for s, e in plan.rhs]

    def _base_env(self, L, calls):
        inst = self.instance
        env = dict(inst.values)
        for qualifier, values in inst.components.items():
            env.update({f"{qualifier}.{k}": v for k, v in values.items()})
        env.update(L)
        env.update(self.fixed)
        env["t"] = inst.time
        for key in calls:
            env[key] = self.fns[key](inst.values, inst.buffers, inst.components, inst, L)
        return env

    def step(self, L):
        V = self.instance.values
        env = self._base_env(L, self.step_calls)
        if self.plan.kind == "exact":
            new = [(s, f(env, self.calls)) for s, f in self.updates]
            for s, value in new:
                V[s] = env[s] = value
        else:
            self._rk4(env)
        for buffer, entries in self.increments.items():
            received = self.instance.buffers[buffer].get_value(0)
            for state, f in entries:
                V[state] = env[state] = V[state] + f(env, self.calls) * received

    def _rk4(self, env):
        """Classical RK4 with buffer inputs held over the step."""
        h = env[self.plan.h]
        t = env["t"]
        V = self.instance.values
        names = [s for s, _ in self.rhs]

        def rates(at, states):
            stage = dict(env, t=at, **states)
            return [f(stage, self.calls) for _, f in self.rhs]

        k1 = rates(t, {})
        k2 = rates(t + h / 2, {s: V[s] + h / 2 * k for s, k in zip(names, k1)})
        k3 = rates(t + h / 2, {s: V[s] + h / 2 * k for s, k in zip(names, k2)})
        k4 = rates(t + h, {s: V[s] + h * k for s, k in zip(names, k3)})
        for s, a, b, c, d in zip(names, k1, k2, k3, k4):
            V[s] = env[s] = V[s] + h * (a + 2 * b + 2 * c + d) / 6


def _callables(program, instance):
    """Opaque calls that may appear in numeric right-hand sides."""
    ns = program.namespace
    V, B, C = instance.values, instance.buffers, instance.components
    calls = {"min": min, "max": max}
    for fn in program.model.functions:
        calls[fn.name] = (lambda f: lambda *a: f(V, B, C, instance, *a))(ns[f"f_{fn.name}"])
    for qualifier, comp, _ in program.components:
        for fn in comp.functions:
            f = ns[f"c_{comp.name}_f_{fn.name}"]
            calls[f"{qualifier}.{fn.name}"] = (
                lambda f, q: lambda *a: f(C[q], B, C, instance, *a))(f, qualifier)
    return calls


# -- instances ---------------------------------------------------------------------------

class NeuronInstance:
    def __init__(self, program, resolution_ms, guard_checks=False, max_delay_ms=1.0):
        self.program = program
        self.h = resolution_ms
        self.guard_checks = guard_checks
        self.values = {}
        self.components = {}
        self.buffers = {}
        self.emitted_spikes = []
        self.logs = []
        self.step_index = 0
        self.time = 0.0
        for line in program.model.input:
            kind = CURRENT if line.kind == CURRENT else "spike"
            self.buffers[line.name] = RingBuffer.for_delay(
                max(max_delay_ms, resolution_ms), resolution_ms, kind, sign_filter(line.modifiers))
        self.executor = None

    # builtins reached from generated code
    def resolution(self):
        return self.h

    def steps(self, duration):
        return math.floor(duration / self.h + 0.5)

    def offset_of(self, time):
        return math.floor(time / self.h + 0.5) - self.step_index

    def emit_spike(self):
        if not self.emitted_spikes or self.emitted_spikes[-1] != self.step_index:
            self.emitted_spikes.append(self.step_index)

    def log_info(self, message):
        self.logs.append((self.step_index, message))
        log.info("%s", message)

    def ode_step(self, V, B, C, L):
        self.executor.step(L)

    # introspection
    @property
    def refractory_counter(self):
        return self.values.get("r")

    def value(self, name):
        if name in self.values:
            return self.values[name]
        ns = self.program.namespace
        if f"a_{name}" in ns:
            return self._guarded(lambda: ns[f"a_{name}"](self.values, self.buffers,
                                                          self.components, self))
        raise SimulationError(f"'{name}' is not a variable of {self.program.model.name}")

    def names(self):
        return list(self.values) + [d.names[0] for d in _aliases(self.program.model)]

    def _guarded(self, fn):
        try:
            return fn()
        except SimulationError:
            raise
        except (ArithmeticError, ValueError) as exc:
            raise EvaluationError(str(exc) or type(exc).__name__,
                                  _span_of(self.program, sys.exc_info()[2])) from None

    def check_guards(self, blocks):
        for name, block, d, _, guard in self.program.decls:
            if guard is None or block not in blocks:
                continue
            fn = self.program.namespace[guard]
            if not self._guarded(lambda: fn(self.values, self.buffers, self.components, self)):
                raise GuardViolation(name, self.values.get(name), d.guard.span)


def _aliases(model):
    return [d for block in (model.parameter, model.state, model.internal) for d in block
            if d.is_alias]


def _span_of(program, tb):
    span = None
    while tb is not None:
        if tb.tb_frame.f_code.co_filename == program.out.filename:
            span = program.out.spans.get(tb.tb_lineno, span)
        tb = tb.tb_next
    return span


def instantiate(model, overrides=None, *, resolution_ms=0.1, files=None, guard_checks=False,
                max_delay_ms=1.0, program=None):
    """A fresh instance with parameters, state and internals initialized.

    ``overrides`` replace parameter values (in the declared scale) before
    internals are computed.  Parameter guards are always checked.
    """
    if resolution_ms <= 0:
        raise SimulationError("the resolution must be positive")
    program = program or Program(model, files)
    inst = NeuronInstance(program, resolution_ms, guard_checks, max_delay_ms)
    ns = program.namespace
    for qualifier, comp, entries in program.components:
        values = inst.components[qualifier] = {}
        for name, _, d, init, _ in entries:
            values[name] = inst._guarded(
                lambda: ns[init](values, inst.buffers, inst.components, inst)) \
                if init else (0 if d.type.kind == INTEGER else 0.0)
    overrides = dict(overrides or {})
    parameters = {name for name, block, *_ in program.decls if block == "parameter"}
    unknown = sorted(set(overrides) - parameters)
    if unknown:
        raise SimulationError(f"{', '.join(unknown)}: not a parameter of {model.name}")
    for name, block, d, init, _ in program.decls:
        if block == "parameter" and name in overrides:
            value = overrides[name]
            inst.values[name] = int(value) if d.type.kind == INTEGER else float(value)
            continue
        if init is None:
            inst.values[name] = 0 if d.type.kind == INTEGER else (
                False if d.type.kind == BOOLEAN else 0.0)
            continue
        inst.values[name] = inst._guarded(
            lambda: ns[init](inst.values, inst.buffers, inst.components, inst))
    inst.check_guards({"parameter"})
    if program.plan is not None:
        for name, _ in program.plan.kernel_slots:
            inst.values.setdefault(name, 0.0)
        inst.executor = inst._guarded(lambda: _PlanExecutor(program, inst))
    return inst


def step(instance, step_index):
    """Execute the dynamics once for ``step_index`` and advance the buffers."""
    instance.step_index = step_index
    instance.time = step_index * instance.h
    ns = instance.program.namespace
    for k in range(len(instance.program.model.dynamics)):
        fn = ns[f"dyn_{k}"]
        instance._guarded(lambda: fn(instance.values, instance.buffers, instance.components,
                                     instance))
    for buffer in instance.buffers.values():
        buffer.advance()
    if instance.guard_checks:
        instance.check_guards({"state"})


def _schedule(stimulus, model, h, n_steps, notes):
    """Per-step deliveries ``[(step, buffer, weight)]`` sorted by step."""
    kinds = {line.name: (CURRENT if line.kind == CURRENT else "spike") for line in model.input}
    out = []
    for e in stimulus.events:
        if e.buffer not in kinds:
            raise StimulusError(f"{model.name} has no input buffer '{e.buffer}'")
        if kinds[e.buffer] != e.kind:
            raise StimulusError(f"'{e.buffer}' is a {kinds[e.buffer]} buffer; "
                                f"got a {e.kind} event")
        if isinstance(e, CurrentStep):
            first, moved_a = snap(e.from_ms, h)
            last, moved_b = snap(e.to_ms, h)
            if moved_a or moved_b:
                notes.append(f"current on '{e.buffer}' snapped to "
                             f"[{first * h:g}, {last * h:g}) ms")
            out += [(n, e.buffer, e.amplitude) for n in range(first, min(last, n_steps))]
        else:
            n, moved = snap(e.time_ms, h)
            if moved:
                notes.append(f"{e.kind} event on '{e.buffer}' at {e.time_ms:g} ms snapped "
                             f"to {n * h:g} ms")
            if n < n_steps:
                out.append((n, e.buffer, e.weight))
    out.sort(key=lambda x: x[0])
    return out


def run(model, config=None, stimulus=None, probes=None, files=None, program=None) -> Trace:
    """Simulate ``model`` for ``floor(duration / resolution)`` steps.

    The first row holds the initial values at 0 ms; the row after step n
    is stamped (n + 1) * h.  Spike times use the same stamp.
    """
    config = config or SimulationConfig()
    if config.duration_ms <= 0 or config.resolution_ms <= 0:
        raise SimulationError("duration and resolution must be positive")
    if config.sample_every < 1:
        raise SimulationError("sample_every must be at least 1")
    h = config.resolution_ms
    n_steps = math.floor(config.duration_ms / h + 1e-9)
    inst = instantiate(model, config.overrides, resolution_ms=h, files=files,
                       guard_checks=config.guard_checks, max_delay_ms=config.max_delay_ms,
                       program=program or Program(model, files, config.solver))
    if probes is None:
        probes = [n for d in model.state if not d.is_alias for n in d.names]
    known = set(inst.names())
    missing = [p for p in probes if p not in known]
    if missing:
        raise SimulationError(f"unknown probe(s): {', '.join(missing)}")
    trace = Trace(config.sample_every, list(probes))
    deliveries = _schedule(stimulus or StimulusProgram(), model, h, n_steps, trace.notes)
    window = min(b.size for b in inst.buffers.values()) if inst.buffers else 1
    pending = 0

    def sample(time):
        trace.rows.append((time,) + tuple(inst.value(p) for p in probes))

    sample(0.0)
    for n in range(n_steps):
        while pending < len(deliveries) and deliveries[pending][0] < n + window:
            at, buffer, weight = deliveries[pending]
            inst.buffers[buffer].add_value(at - n, weight)
            pending += 1
        step(inst, n)
        if (n + 1) % config.sample_every == 0:
            sample(round((n + 1) * h, 12))
    trace.spike_times_ms = [round((n + 1) * h, 12) for n in inst.emitted_spikes]
    return trace


__all__ = ["SimulationConfig", "SimulationError", "GuardViolation", "EvaluationError",
           "UnsupportedFeature", "Program", "NeuronInstance", "instantiate", "step", "run"]
