"""Pretty printer producing re-parseable model text (2-space indentation)."""

from __future__ import annotations

from . import ast

INDENT = "  "


def print_expression(expr) -> str:
    if isinstance(expr, ast.NumberLiteral):
        return f"{expr.text} {expr.unit}" if expr.unit else expr.text
    if isinstance(expr, ast.StringLiteral):
        return f'"{expr.value}"'
    if isinstance(expr, ast.BoolLiteral):
        return "true" if expr.value else "false"
    if isinstance(expr, ast.VariableRef):
        return expr.full_name
    if isinstance(expr, ast.FunctionCall):
        args = ", ".join(print_expression(a) for a in expr.args)
        return f"{expr.callee.full_name}({args})"
    if isinstance(expr, ast.Paren):
        return f"({print_expression(expr.inner)})"
    if isinstance(expr, ast.UnaryOp):
        operand = _operand(expr.operand, expr.op, "rhs")
        return f"-{operand}" if expr.op == "neg" else f"not {operand}"
    if isinstance(expr, ast.BinaryOp):
        lhs = _operand(expr.lhs, expr.op, "lhs")
        rhs = _operand(expr.rhs, expr.op, "rhs")
        return f"{lhs} {expr.op} {rhs}"
    raise TypeError(f"not an expression: {expr!r}")


def _operand(child, op, side):
    text = print_expression(child)
    # trees built by hand may lack Paren nodes; never print an ambiguous string
    if ast.needs_paren(child, op, side):
        return f"({text})"
    return text


def _declaration(decl: ast.Declaration, lines, depth):
    pad = INDENT * depth
    if decl.doc:
        for doc_line in decl.doc.split("\n"):
            lines.append(f"{pad}# {doc_line}".rstrip())
    text = ", ".join(decl.names) + f" {decl.type}"
    if decl.is_alias:
        text = "alias " + text
    if decl.initializer is not None:
        text += f" = {print_expression(decl.initializer)}"
    if decl.guard is not None:
        text += f" [{print_expression(decl.guard)}]"
    lines.append(pad + text)


def _params(params):
    return "(" + ", ".join(f"{p.name} {p.type}" for p in params) + ")"


def _body(stmts, lines, depth):
    for stmt in stmts:
        _statement(stmt, lines, depth)


def _statement(stmt, lines, depth):
    pad = INDENT * depth
    if isinstance(stmt, ast.Assignment):
        lines.append(f"{pad}{stmt.target.full_name} {stmt.op} {print_expression(stmt.value)}")
    elif isinstance(stmt, ast.CallStatement):
        lines.append(pad + print_expression(stmt.call))
    elif isinstance(stmt, ast.Return):
        if stmt.value is None:
            lines.append(pad + "return")
        else:
            lines.append(f"{pad}return {print_expression(stmt.value)}")
    elif isinstance(stmt, ast.LocalDeclaration):
        _declaration(stmt.decl, lines, depth)
    elif isinstance(stmt, ast.IfChain):
        for i, (cond, body) in enumerate(stmt.branches):
            keyword = "if" if i == 0 else "elif"
            lines.append(f"{pad}{keyword} {print_expression(cond)}:")
            _body(body, lines, depth + 1)
        if stmt.else_body is not None:
            lines.append(pad + "else:")
            _body(stmt.else_body, lines, depth + 1)
        lines.append(pad + "end")
    elif isinstance(stmt, ast.OdeBlock):
        lines.append(pad + "ODE:")
        inner = pad + INDENT
        for shape in stmt.shapes:
            text = f"{inner}{shape.name} == {print_expression(shape.kernel)}"
            if shape.buffer:
                text += f" on {shape.buffer}"
            lines.append(text)
        for eq in stmt.equations:
            lines.append(f"{inner}d/dt {eq.state_var} == {print_expression(eq.rhs)}")
        lines.append(pad + "end")
    else:
        raise TypeError(f"not a statement: {stmt!r}")


def _model_decl(decl, lines):
    keyword = "component" if decl.is_component else "neuron"
    lines.append(f"{keyword} {decl.name}:")
    for use in decl.uses:
        lines.append(f"{INDENT}use {use.component}" + (f" as {use.alias}" if use.alias else ""))
    for block in ("state", "parameter", "internal"):
        decls = getattr(decl, block)
        if decls:
            lines.append(f"{INDENT}{block}:")
            for d in decls:
                _declaration(d, lines, 2)
            lines.append(INDENT + "end")
    if decl.input:
        lines.append(INDENT + "input:")
        for line in decl.input:
            mods = [m for m in ("inhibitory", "excitatory") if m in line.modifiers]
            lines.append(f"{INDENT * 2}{line.name} <- " + " ".join(mods + [line.kind]))
        lines.append(INDENT + "end")
    if decl.output:
        lines.append(f"{INDENT}output: {decl.output}")
    for fn in decl.functions:
        head = f"{INDENT}function {fn.name}{_params(fn.params)}"
        if fn.return_type is not None:
            head += f" {fn.return_type}"
        lines.append(head + ":")
        _body(fn.body, lines, 2)
        lines.append(INDENT + "end")
    for dyn in decl.dynamics:
        head = f"{INDENT}dynamics {dyn.kind}"
        if dyn.params:
            head += _params(dyn.params)
        lines.append(head + ":")
        _body(dyn.body, lines, 2)
        lines.append(INDENT + "end")
    lines.append("end")


def pretty_print(model) -> str:
    """Render a ModelFile (or a single neuron/component declaration)."""
    if not isinstance(model, ast.ModelFile):
        model = ast.ModelFile((), (model,))
    chunks = []
    if model.imports:
        chunks.append("\n".join(f"import {name}" for name in model.imports))
    for decl in model.declarations:
        lines = []
        _model_decl(decl, lines)
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + "\n" if chunks else ""
