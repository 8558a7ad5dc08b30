"""Symbols, scopes and the cross-file symbol table."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from ..diagnostics import NO_SPAN, SourceSpan, error
from ..syntax import ast
from ..units import Boolean, Integer, Real, String, TypeSpec, Void, buffer_type, unit_type

STATE = "stateVar"
ALIAS = "aliasVar"
PARAMETER = "parameterVar"
INTERNAL = "internalVar"
LOCAL = "localVar"
FUNCTION = "functionSym"
BUFFER = "bufferSym"
COMPONENT = "componentSym"
NEURON = "neuronSym"
BUILTIN = "builtinSym"
SHAPE = "shapeVar"

MODEL_VARIABLES = (STATE, ALIAS, PARAMETER, INTERNAL)

MS = unit_type("ms")


@dataclass
class Symbol:
    name: str
    kind: str
    type: TypeSpec
    span: SourceSpan = NO_SPAN
    writable: bool = False
    node: Any = None
    # position in the parameter -> state -> internal evaluation order
    order: Optional[int] = None
    scope: Optional["Scope"] = None

    @property
    def is_variable(self) -> bool:
        return self.kind in MODEL_VARIABLES or self.kind in (LOCAL, SHAPE)


@dataclass(frozen=True)
class Builtin:
    """Signature of a builtin function.

    ``params`` entries are ``"real"``, ``"time"``, ``"string"`` or ``"same"``;
    ``returns`` is a TypeSpec or ``"same"`` (the type of the first argument).
    """

    name: str
    params: tuple
    returns: Any


BUILTIN_FUNCTIONS = {
    "resolution": Builtin("resolution", (), MS),
    "steps": Builtin("steps", ("time",), Integer),
    "exp": Builtin("exp", ("real",), Real),
    "ln": Builtin("ln", ("real",), Real),
    "min": Builtin("min", ("same", "same"), "same"),
    "max": Builtin("max", ("same", "same"), "same"),
    "emitSpike": Builtin("emitSpike", (), Void),
    "log_info": Builtin("log_info", ("string",), Void),
}

BUFFER_METHODS = ("getSum",)


class Scope:
    def __init__(self, parent=None, owner=None, kind="block"):
        self.parent = parent
        self.owner = owner
        self.kind = kind
        self.symbols = {}
        # declare-before-use window, see restricted()
        self.limit = None
        self.limit_code = None

    def define(self, symbol: Symbol) -> Optional[Symbol]:
        """Add ``symbol``; returns the clashing symbol instead when the name exists."""
        existing = self.symbols.get(symbol.name)
        if existing is not None:
            return existing
        symbol.scope = self
        self.symbols[symbol.name] = symbol
        return None

    def lookup(self, name) -> Optional[Symbol]:
        scope = self
        while scope is not None:
            if name in scope.symbols:
                return scope.symbols[name]
            scope = scope.parent
        return None

    def lookup_window(self, name):
        """Lookup that also reports the tightest declare-before-use window on the path."""
        scope = self
        window = None
        while scope is not None:
            if scope.limit is not None and window is None:
                window = (scope.limit, scope.limit_code)
            if name in scope.symbols:
                return scope.symbols[name], window
            scope = scope.parent
        return None, window

    def visible_names(self) -> set:
        names = set()
        scope = self
        while scope is not None:
            names.update(scope.symbols)
            scope = scope.parent
        return names

    def child(self, owner=None, kind="block") -> "Scope":
        return Scope(self, owner, kind)

    def restricted(self, limit, code) -> "Scope":
        scope = Scope(self, self.owner, "window")
        scope.limit = limit
        scope.limit_code = code
        return scope

    def find_kind(self, kind) -> Optional["Scope"]:
        scope = self
        while scope is not None:
            if scope.kind == kind:
                return scope
            scope = scope.parent
        return None

    @property
    def model_scope(self) -> Optional["Scope"]:
        return self.find_kind("model")

    @property
    def model(self):
        scope = self.model_scope
        return scope.owner if scope else None

    def __repr__(self):
        return f"Scope({self.kind}, {sorted(self.symbols)})"


@dataclass
class SymbolTable:
    global_scope: Scope
    model_scopes: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def scope_of(self, name) -> Scope:
        return self.model_scopes[name]

    def model(self, name):
        return self.model_scopes[name].owner

    @property
    def ok(self) -> bool:
        return not any(d.is_error for d in self.diagnostics)


def _global_scope() -> Scope:
    scope = Scope(kind="global")
    for name, sig in BUILTIN_FUNCTIONS.items():
        scope.define(Symbol(name, BUILTIN, Void, node=sig))
    scope.define(Symbol("E", BUILTIN, Real))
    return scope


def declared_names(decl):
    """(name, kind, Declaration) in evaluation order: parameters, state, internals."""
    for block, kind in (("parameter", PARAMETER), ("state", STATE), ("internal", INTERNAL)):
        for d in getattr(decl, block):
            for name in d.names:
                yield name, (ALIAS if d.is_alias else kind), d


def _model_scope(decl, global_scope, diags) -> Scope:
    scope = global_scope.child(decl, "model")
    setters = {fn.name for fn in decl.functions}

    def add(symbol):
        clash = scope.define(symbol)
        if clash is not None:
            diags.append(error("E0201", f"duplicate symbol '{symbol.name}' in {decl.name}",
                               symbol.span))

    for order, (name, kind, d) in enumerate(declared_names(decl)):
        writable = kind in (STATE, PARAMETER, INTERNAL) or f"set_{name}" in setters
        add(Symbol(name, kind, d.type, d.span, writable, d, order))
    for line in decl.input:
        add(Symbol(line.name, BUFFER, buffer_type(line.kind), line.span, False, line))
    for fn in decl.functions:
        add(Symbol(fn.name, FUNCTION, fn.return_type or Void, fn.span, False, fn))
    return scope


def build_symbol_table(files) -> SymbolTable:
    """Resolve model declarations, imports and ``use`` bindings across files.

    Problems are collected in ``table.diagnostics`` (E0201, E0202, E0203).
    """
    diags = []
    table = SymbolTable(_global_scope(), files=list(files), diagnostics=diags)
    g = table.global_scope
    owners = {}
    for f in files:
        for decl in f.declarations:
            kind = COMPONENT if decl.is_component else NEURON
            sym = Symbol(decl.name, kind, Void, decl.span, node=decl)
            if g.define(sym) is not None:
                diags.append(error("E0201", f"duplicate declaration '{decl.name}'", decl.span))
                continue
            owners[decl.name] = f
            table.model_scopes[decl.name] = _model_scope(decl, g, diags)

    for f in files:
        local_names = {d.name for d in f.declarations}
        for name in f.imports:
            sym = g.lookup(name)
            if sym is None or sym.kind != COMPONENT:
                diags.append(error("E0202", f"cannot resolve import '{name}'", f.span))
        visible = set(f.imports) | local_names
        for decl in f.declarations:
            if table.model_scopes.get(decl.name) is None or owners.get(decl.name) is not f:
                continue
            scope = table.model_scopes[decl.name]
            for use in decl.uses:
                target = g.lookup(use.component)
                if target is None or target.kind != COMPONENT or use.component not in visible:
                    diags.append(error("E0203", f"cannot resolve 'use {use.component}'",
                                       use.span))
                    continue
                sym = Symbol(use.local_name, COMPONENT, Void, use.span, node=target.node)
                if scope.define(sym) is not None:
                    diags.append(error("E0201", f"duplicate symbol '{use.local_name}'",
                                       use.span))
    return table


def component_member(table_or_scope, component_decl, member) -> Optional[Symbol]:
    """Exported member of a used component: functions and non-alias variables."""
    scope = _component_scope(table_or_scope, component_decl)
    sym = scope.symbols.get(member) if scope else None
    if sym is None or sym.kind not in (FUNCTION, STATE, PARAMETER, INTERNAL):
        return None
    return sym


def _component_scope(scope, component_decl):
    g = scope
    while g.parent is not None:
        g = g.parent
    cache = g.__dict__.setdefault("_component_scopes", {})
    if component_decl.name not in cache:
        cache[component_decl.name] = _model_scope(component_decl, g, [])
    return cache[component_decl.name]


__all__ = [
    "Symbol", "Scope", "SymbolTable", "Builtin", "build_symbol_table", "component_member",
    "BUILTIN_FUNCTIONS", "BUFFER_METHODS", "declared_names", "MS",
    "STATE", "ALIAS", "PARAMETER", "INTERNAL", "LOCAL", "FUNCTION", "BUFFER", "COMPONENT",
    "NEURON", "BUILTIN", "SHAPE", "MODEL_VARIABLES", "Boolean", "String", "ast",
]
