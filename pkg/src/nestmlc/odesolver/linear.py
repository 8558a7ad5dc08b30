"""Assembly of the homogeneous linear system behind an ODE block.

State slots come in three groups: one Jordan chain per kernel rate (the
last slot of a chain carries that rate's share of the kernel value), one
slot per user equation, and one constant-drive slot per equation that has
a state-free additive part.  Kernel chains and equations are ordered so
that every slot depends only on earlier slots apart from the drive slots,
which sit at the end with an all-zero row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..diagnostics import NO_SPAN
from ..semantics.symbols import ALIAS, BUILTIN, SHAPE, Symbol
from ..semantics.typecheck import SemanticError, analyze, convert_for
from ..syntax import ast
from ..units import REAL, UNIT, TypeSpec, as_unit, normalize, unit_divide, unit_power
from ..semantics.symbols import MS
from . import symbolic as cas
from .kernel import KernelOde, NotLinearKernel, shape_to_ode


class NotLinearConstant(Exception):
    def __init__(self, reason, span=NO_SPAN):
        super().__init__(reason)
        self.reason = reason
        self.span = span


@dataclass
class Slot:
    name: str
    kind: str                      # "kernel" | "state" | "drive"
    type: Optional[TypeSpec] = None
    shape: Optional[str] = None
    drive: Optional[cas.Expr] = None   # drive slots: the state-free input expression


@dataclass
class KernelInfo:
    shape: ast.ShapeEquation
    ode: KernelOde
    type: TypeSpec
    buffer: str
    slots: list                     # slot names, chain by chain
    value: cas.Expr                 # kernel value in terms of slot symbols


@dataclass
class LinearSystem:
    slots: list
    A: list
    input_map: dict = field(default_factory=dict)        # buffer -> [(slot, Expr)]
    constant_drives: list = field(default_factory=list)  # [(Expr, slot index)]
    kernels: list = field(default_factory=list)

    @property
    def state_order(self):
        return [s.name for s in self.slots]

    @property
    def size(self):
        return len(self.slots)

    def index(self, name):
        return self.state_order.index(name)


def ode_scope(block, scope):
    """Scope of an ODE block: ``t`` plus the shapes, above the enclosing body scope."""
    ode = scope.child(block, "ode")
    ode.define(Symbol("t", BUILTIN, MS))
    for shape in block.shapes:
        try:
            t, _ = analyze(shape.kernel, ode)
        except SemanticError:
            t = MS
        ode.define(Symbol(shape.name, SHAPE, t, shape.span, False, shape))
    return ode


class _Builder:
    def __init__(self, block, scope, max_order=5):
        self.block = block
        self.scope = scope
        self.ode = ode_scope(block, scope)
        self.max_order = max_order
        self.kernels = []
        self.shape_values = {}
        self.slots = []
        self.rows = {}          # slot name -> {slot name: Expr}
        self.increments = {}

    # -- helpers -------------------------------------------------------------

    def resolve(self, ref):
        if ref.qualifier is None and ref.name in self.shape_values:
            return self.shape_values[ref.name]
        if ref.qualifier is None and ref.name in self.pending_shapes:
            raise NotLinearKernel(f"kernel refers to shape '{ref.name}'")
        sym = self.scope.lookup(ref.name) if ref.qualifier is None else None
        if sym is not None and sym.kind == ALIAS and sym.node is not None:
            _, lowered = analyze(sym.node.initializer, self.scope)
            lowered = convert_for(sym.type, analyze(sym.node.initializer, self.scope)[0], lowered)
            return cas.from_ast(lowered, self.resolve)
        return None

    def buffer_for(self, shape):
        if shape.buffer is not None:
            return shape.buffer
        model = self.scope.model
        spikes = [line.name for line in model.input if line.kind == "spike"] if model else []
        if len(spikes) != 1:
            raise NotLinearKernel(f"shape '{shape.name}' has no unambiguous spike buffer")
        return spikes[0]

    # -- kernels ---------------------------------------------------------------

    def add_kernels(self):
        self.pending_shapes = {s.name for s in self.block.shapes}
        for shape in self.block.shapes:
            self.pending_shapes.discard(shape.name)
            k_type, lowered = analyze(shape.kernel, self.ode)
            expr = cas.from_ast(lowered, self.resolve)
            kode = shape_to_ode(expr, self.max_order)
            buffer = self.buffer_for(shape)
            names = []
            last = []
            multi = len(kode.roots) > 1
            for r, root in enumerate(kode.roots):
                mu = root.multiplicity
                stem = f"{shape.name}__r{r}" if multi else shape.name
                chain = [f"{stem}__d{mu - 1 - j}" for j in range(mu - 1)] + [stem]
                for j, name in enumerate(chain):
                    self.slots.append(Slot(name, "kernel", _slot_type(k_type, mu - 1 - j),
                                           shape.name))
                    row = {name: root.value}
                    if j > 0:
                        row[chain[j - 1]] = cas.ONE
                    self.rows[name] = row
                for name, v in zip(chain, root.chain_increments()):
                    if not cas.is_zero(v):
                        self.increments.setdefault(buffer, []).append((name, v))
                names.extend(chain)
                last.append(cas.sym(chain[-1]))
            value = cas.add(*last)
            self.shape_values[shape.name] = value
            self.kernels.append(KernelInfo(shape, kode, k_type, buffer, names, value))

    # -- equations ---------------------------------------------------------------

    def rate_type(self, state):
        return normalize(unit_divide(as_unit(self.scope.lookup(state).type), MS.unit))

    def equation_rhs(self, eq):
        """Lowered right-hand side in the storage scale of ``d/dt state``."""
        rhs_type, lowered = analyze(eq.rhs, self.ode)
        expected = self.rate_type(eq.state_var)
        if expected.kind == REAL:
            lowered = convert_for(expected, rhs_type, lowered)
        elif rhs_type.kind == UNIT:
            lowered = convert_for(expected, rhs_type, lowered)
        return cas.from_ast(lowered, self.resolve)

    def add_equations(self):
        kernel_names = [s.name for s in self.slots]
        user = [eq.state_var for eq in self.block.equations]
        states = kernel_names + user
        parts = {}
        for eq in self.block.equations:
            rhs = self.equation_rhs(eq)
            if cas.depends_on(rhs, "t"):
                raise NotLinearConstant(f"d/dt {eq.state_var} depends explicitly on t", eq.span)
            row = {}
            for s in states:
                try:
                    c = cas.diff(rhs, s)
                except cas.NotDifferentiable as exc:
                    raise NotLinearConstant(str(exc), eq.span) from None
                bad = cas.free_symbols(c) & (set(states) | {"t"})
                if bad:
                    raise NotLinearConstant(
                        f"d/dt {eq.state_var} is not linear in {', '.join(sorted(bad))}", eq.span)
                if not cas.is_zero(c):
                    row[s] = c
            residual = cas.subs(rhs, {s: 0 for s in states})
            parts[eq.state_var] = (row, residual)
        for name in _triangular_order(user, parts):
            row, residual = parts[name]
            sym = self.scope.lookup(name)
            self.slots.append(Slot(name, "state", sym.type))
            self.rows[name] = row
        for name in [s.name for s in self.slots if s.kind == "state"]:
            row, residual = parts[name]
            if not cas.is_zero(residual):
                drive = f"{name}__drive"
                self.slots.append(Slot(drive, "drive", self.rate_type(name), None, residual))
                self.rows[drive] = {}
                row[drive] = cas.ONE

    def system(self) -> LinearSystem:
        order = [s.name for s in self.slots]
        A = [[self.rows[r].get(c, cas.ZERO) for c in order] for r in order]
        drives = [(s.drive, i) for i, s in enumerate(self.slots) if s.kind == "drive"]
        return LinearSystem(list(self.slots), A, dict(self.increments), drives,
                            list(self.kernels))


def _slot_type(kernel_type, n):
    """Type of the n-th time derivative of a kernel."""
    if n == 0:
        return kernel_type
    unit = unit_divide(as_unit(kernel_type), unit_power(MS.unit, n))
    return normalize(unit)


def _triangular_order(names, parts):
    """Order user equations so that each depends only on earlier ones."""
    remaining = list(names)
    done = []
    while remaining:
        for name in remaining:
            deps = {d for d in parts[name][0] if d in names and d != name}
            if deps <= set(done):
                done.append(name)
                remaining.remove(name)
                break
        else:
            raise NotLinearConstant("equations are coupled in a cycle; the system matrix "
                                    "cannot be made triangular")
    return done


def kernel_slots(block, scope, max_order=5):
    """Only the kernel part (used by the numeric fallback)."""
    b = _Builder(block, scope, max_order)
    b.add_kernels()
    return b


def build_linear_system(block, scope, max_order=5) -> LinearSystem:
    """Raises NotLinearKernel or NotLinearConstant."""
    b = _Builder(block, scope, max_order)
    b.add_kernels()
    b.add_equations()
    return b.system()


__all__ = ["LinearSystem", "Slot", "KernelInfo", "NotLinearConstant", "build_linear_system",
           "kernel_slots", "ode_scope"]
