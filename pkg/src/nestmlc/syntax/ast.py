"""Immutable AST for neuron model files.

Every node carries a ``span``; spans never take part in equality, so two
trees parsed from differently formatted text compare equal when they have
the same structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Tuple, Union

from ..diagnostics import NO_SPAN, SourceSpan
from ..units import TypeSpec


def _span():
    return field(default=NO_SPAN, compare=False, repr=False)


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class NumberLiteral:
    text: str
    unit: Optional[str] = None
    span: SourceSpan = _span()

    @property
    def value(self) -> float:
        return float(self.text)

    @property
    def is_integer(self) -> bool:
        return all(c.isdigit() for c in self.text)


@dataclass(frozen=True)
class StringLiteral:
    value: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class BoolLiteral:
    value: bool
    span: SourceSpan = _span()


@dataclass(frozen=True)
class VariableRef:
    name: str
    qualifier: Optional[str] = None
    span: SourceSpan = _span()

    @property
    def full_name(self) -> str:
        return f"{self.qualifier}.{self.name}" if self.qualifier else self.name


@dataclass(frozen=True)
class FunctionCall:
    callee: VariableRef
    args: Tuple["Expression", ...] = ()
    span: SourceSpan = _span()


@dataclass(frozen=True)
class UnaryOp:
    op: str  # "neg" | "not"
    operand: "Expression"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class BinaryOp:
    op: str
    lhs: "Expression"
    rhs: "Expression"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Paren:
    inner: "Expression"
    span: SourceSpan = _span()


Expression = Union[NumberLiteral, StringLiteral, BoolLiteral, VariableRef,
                   FunctionCall, UnaryOp, BinaryOp, Paren]

COMPARISONS = ("<", "<=", "==", "!=", ">=", ">")

# loosest to tightest
PRECEDENCE = {
    "or": 1, "and": 2, "not": 3,
    **{op: 4 for op in COMPARISONS},
    "+": 5, "-": 5, "*": 6, "/": 6, "neg": 7, "**": 8,
}
ATOM_PRECEDENCE = 9


def precedence(expr) -> int:
    if isinstance(expr, BinaryOp):
        return PRECEDENCE[expr.op]
    if isinstance(expr, UnaryOp):
        return PRECEDENCE[expr.op]
    if isinstance(expr, NumberLiteral) and expr.text.startswith("-"):
        return PRECEDENCE["neg"]
    return ATOM_PRECEDENCE


def needs_paren(child, parent_op: str, side: str) -> bool:
    """Whether ``child`` must be parenthesized as an operand of ``parent_op``."""
    p = PRECEDENCE[parent_op]
    c = precedence(child)
    if parent_op == "**":
        # right operand parses as a unary expression, left as a postfix one
        return c <= p if side == "lhs" else c < PRECEDENCE["neg"]
    if parent_op in ("neg", "not"):
        return c < p
    if parent_op in COMPARISONS:
        return c <= p
    if side == "lhs":
        return c < p
    return c <= p


def wrap(child, parent_op: str, side: str = "rhs"):
    return Paren(child) if needs_paren(child, parent_op, side) else child


def binop(op, lhs, rhs):
    """Build a BinaryOp, inserting Paren nodes so the tree prints faithfully."""
    return BinaryOp(op, wrap(lhs, op, "lhs"), wrap(rhs, op, "rhs"))


def neg(operand):
    return UnaryOp("neg", wrap(operand, "neg"))


def call(name, *args, qualifier=None):
    return FunctionCall(VariableRef(name, qualifier), tuple(args))


def var(name, qualifier=None):
    return VariableRef(name, qualifier)


def num(value):
    """Literal for ``value``; negative numbers become a negated literal."""
    if value < 0:
        return neg(num(-value))
    if isinstance(value, int):
        return NumberLiteral(str(value))
    text = repr(float(value))
    if text in ("inf", "-inf", "nan"):
        raise ValueError(f"cannot represent {value} as a literal")
    return NumberLiteral(text)


# -- declarations and statements --------------------------------------------

@dataclass(frozen=True)
class Declaration:
    names: Tuple[str, ...]
    type: TypeSpec
    initializer: Optional[Expression] = None
    guard: Optional[Expression] = None
    is_alias: bool = False
    doc: Optional[str] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Assignment:
    target: VariableRef
    op: str
    value: Expression
    span: SourceSpan = _span()


@dataclass(frozen=True)
class IfChain:
    branches: Tuple[Tuple[Expression, Tuple["Statement", ...]], ...]
    else_body: Optional[Tuple["Statement", ...]] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class CallStatement:
    call: FunctionCall
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ShapeEquation:
    name: str
    kernel: Expression
    buffer: Optional[str] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class DiffEquation:
    state_var: str
    rhs: Expression
    span: SourceSpan = _span()


@dataclass(frozen=True)
class OdeBlock:
    shapes: Tuple[ShapeEquation, ...] = ()
    equations: Tuple[DiffEquation, ...] = ()
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Return:
    value: Optional[Expression] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class LocalDeclaration:
    decl: Declaration
    span: SourceSpan = _span()


Statement = Union[Assignment, IfChain, CallStatement, OdeBlock, Return, LocalDeclaration]


@dataclass(frozen=True)
class Param:
    name: str
    type: TypeSpec
    span: SourceSpan = _span()


@dataclass(frozen=True)
class InputLine:
    name: str
    modifiers: frozenset = frozenset()
    kind: str = "spike"
    span: SourceSpan = _span()


@dataclass(frozen=True)
class DynamicsDecl:
    kind: str  # "timestep" | "minDelay"
    params: Tuple[Param, ...] = ()
    body: Tuple[Statement, ...] = ()
    span: SourceSpan = _span()


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    params: Tuple[Param, ...] = ()
    return_type: Optional[TypeSpec] = None
    body: Tuple[Statement, ...] = ()
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Use:
    component: str
    alias: Optional[str] = None
    span: SourceSpan = _span()

    @property
    def local_name(self) -> str:
        return self.alias or self.component


@dataclass(frozen=True)
class NeuronDecl:
    name: str
    uses: Tuple[Use, ...] = ()
    state: Tuple[Declaration, ...] = ()
    parameter: Tuple[Declaration, ...] = ()
    internal: Tuple[Declaration, ...] = ()
    input: Tuple[InputLine, ...] = ()
    output: Optional[str] = None
    dynamics: Tuple[DynamicsDecl, ...] = ()
    functions: Tuple[FunctionDecl, ...] = ()
    # extra input/output blocks beyond the first, kept for diagnostics
    duplicate_blocks: Tuple[Tuple[str, SourceSpan], ...] = field(default=(), compare=False)
    span: SourceSpan = _span()

    is_component = False


@dataclass(frozen=True)
class ComponentDecl:
    name: str
    uses: Tuple[Use, ...] = ()
    state: Tuple[Declaration, ...] = ()
    parameter: Tuple[Declaration, ...] = ()
    internal: Tuple[Declaration, ...] = ()
    functions: Tuple[FunctionDecl, ...] = ()
    span: SourceSpan = _span()

    is_component = True
    input = ()
    output = None
    dynamics = ()
    duplicate_blocks = ()


@dataclass(frozen=True)
class ModelFile:
    imports: Tuple[str, ...] = ()
    declarations: Tuple[Union[NeuronDecl, ComponentDecl], ...] = ()
    path: str = field(default="<string>", compare=False)
    span: SourceSpan = _span()

    def find(self, name):
        for decl in self.declarations:
            if decl.name == name:
                return decl
        raise KeyError(name)


def walk_statements(body):
    """Yield every statement in ``body``, descending into if-chains."""
    for stmt in body:
        yield stmt
        if isinstance(stmt, IfChain):
            for _, branch in stmt.branches:
                yield from walk_statements(branch)
            if stmt.else_body:
                yield from walk_statements(stmt.else_body)


def walk_expression(expr):
    yield expr
    if isinstance(expr, FunctionCall):
        yield expr.callee
        for a in expr.args:
            yield from walk_expression(a)
    elif isinstance(expr, UnaryOp):
        yield from walk_expression(expr.operand)
    elif isinstance(expr, BinaryOp):
        yield from walk_expression(expr.lhs)
        yield from walk_expression(expr.rhs)
    elif isinstance(expr, Paren):
        yield from walk_expression(expr.inner)


def map_expression(expr, fn):
    """Bottom-up rebuild of ``expr``; ``fn`` sees each already-mapped node."""
    if isinstance(expr, FunctionCall):
        expr = replace(expr, args=tuple(map_expression(a, fn) for a in expr.args))
    elif isinstance(expr, UnaryOp):
        expr = replace(expr, operand=map_expression(expr.operand, fn))
    elif isinstance(expr, BinaryOp):
        expr = replace(expr, lhs=map_expression(expr.lhs, fn), rhs=map_expression(expr.rhs, fn))
    elif isinstance(expr, Paren):
        expr = replace(expr, inner=map_expression(expr.inner, fn))
    return fn(expr)


def strip_parens(expr):
    while isinstance(expr, Paren):
        expr = expr.inner
    return expr
