"""Symbol tables, unit-aware typing and context-condition checks."""

from .conditions import check, check_context_conditions
from .symbols import Scope, Symbol, SymbolTable, build_symbol_table
from .typecheck import SemanticError, analyze, lower_expression, type_of

__all__ = ["Scope", "Symbol", "SymbolTable", "SemanticError", "analyze", "build_symbol_table",
           "check", "check_context_conditions", "lower_expression", "type_of"]
