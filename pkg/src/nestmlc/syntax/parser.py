"""Recursive-descent parser with line-level error recovery."""

from __future__ import annotations

from ..diagnostics import NestmlSyntaxError, ParseError, SourceSpan
from ..units import TYPE_NAMES, TypeSpec, UnitError, is_unit_atom, type_from_text
from . import ast
from .lexer import EOF, IDENT, KEYWORD, NEWLINE, NUMBER, OP, STRING, Token, tokenize

ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=")
BLOCK_KEYWORDS = ("use", "state", "parameter", "internal", "input", "output",
                  "dynamics", "function")


class Parser:
    def __init__(self, tokens, path="<string>"):
        self.path = path
        if tokens:
            last = tokens[-1].span
            width = 0 if tokens[-1].kind == NEWLINE else len(tokens[-1].value)
            eof_span = SourceSpan(path, last.line, last.column + width)
        else:
            eof_span = SourceSpan(path, 1, 1)
        self.tokens = list(tokens) + [Token(EOF, "", eof_span)]
        self.pos = 0
        self.errors = []

    # -- token helpers -----------------------------------------------------

    def peek(self, k=0) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.peek()
        if tok.kind != EOF:
            self.pos += 1
        return tok

    def fail(self, expected, tok=None):
        tok = tok or self.peek()
        found = "end of input" if tok.kind == EOF else repr(tok.value)
        if tok.kind == NEWLINE:
            found = "end of line"
        raise NestmlSyntaxError(f"expected {expected}, found {found}", tok.span)

    def expect_op(self, op) -> Token:
        if not self.peek().is_op(op):
            self.fail(f"'{op}'")
        return self.advance()

    def expect_kw(self, *words) -> Token:
        if not self.peek().is_kw(*words):
            self.fail(" or ".join(f"'{w}'" for w in words))
        return self.advance()

    def expect_ident(self) -> Token:
        if self.peek().kind != IDENT:
            self.fail("identifier")
        return self.advance()

    def skip_newlines(self):
        while self.peek().kind == NEWLINE:
            self.advance()

    def end_line(self):
        tok = self.peek()
        if tok.kind == NEWLINE:
            self.advance()
        elif not (tok.kind == EOF or tok.is_kw("end", "elif", "else")):
            self.fail("end of line")

    def sync_line(self):
        while self.peek().kind not in (NEWLINE, EOF):
            self.advance()
        self.skip_newlines()

    def recover(self, exc):
        self.errors.append(exc)
        self.sync_line()

    # -- file level ----------------------------------------------------------

    def parse_file(self) -> ast.ModelFile:
        imports = []
        decls = []
        start = self.peek().span
        self.skip_newlines()
        while self.peek().kind != EOF:
            tok = self.peek()
            try:
                if tok.is_kw("import"):
                    self.advance()
                    imports.append(self.expect_ident().value)
                    self.end_line()
                elif tok.is_kw("neuron", "component"):
                    decls.append(self.parse_model_decl())
                else:
                    self.fail("'import', 'neuron' or 'component'")
            except NestmlSyntaxError as exc:
                self.errors.append(exc)
                self.advance()
                while self.peek().kind != EOF and not (
                        self.peek().is_kw("neuron", "component")
                        and self.tokens[self.pos - 1].kind == NEWLINE):
                    self.advance()
            self.skip_newlines()
        return ast.ModelFile(tuple(imports), tuple(decls), path=self.path, span=start)

    def parse_model_decl(self):
        head = self.expect_kw("neuron", "component")
        is_component = head.value == "component"
        name = self.expect_ident().value
        self.expect_op(":")
        blocks = {"uses": [], "state": None, "parameter": None, "internal": None,
                  "input": None, "output": None, "dynamics": [], "functions": []}
        duplicates = []
        self.skip_newlines()
        while not self.peek().is_kw("end"):
            tok = self.peek()
            if tok.kind == EOF:
                self.fail("'end'")
            try:
                self.parse_block(blocks, duplicates, is_component)
            except NestmlSyntaxError as exc:
                if self.peek().kind == EOF:
                    raise
                self.recover(exc)
                self.skip_to_block_start()
            self.skip_newlines()
        self.advance()
        self.end_line()
        common = dict(
            name=name, uses=tuple(blocks["uses"]),
            state=tuple(blocks["state"] or ()), parameter=tuple(blocks["parameter"] or ()),
            internal=tuple(blocks["internal"] or ()), functions=tuple(blocks["functions"]),
            span=head.span)
        if is_component:
            return ast.ComponentDecl(**common)
        return ast.NeuronDecl(input=tuple(blocks["input"] or ()), output=blocks["output"],
                              dynamics=tuple(blocks["dynamics"]),
                              duplicate_blocks=tuple(duplicates), **common)

    def skip_to_block_start(self):
        while True:
            tok = self.peek()
            if tok.kind == EOF or tok.is_kw("end", "neuron", "component", *BLOCK_KEYWORDS):
                return
            self.sync_line()

    def parse_block(self, blocks, duplicates, is_component):
        tok = self.peek()
        if tok.is_kw("use"):
            blocks["uses"].append(self.parse_use())
        elif tok.is_kw("state", "parameter", "internal"):
            self.advance()
            self.expect_op(":")
            body = self.parse_declarations()
            if blocks[tok.value] is not None:
                raise NestmlSyntaxError(f"duplicate '{tok.value}' block", tok.span)
            blocks[tok.value] = body
        elif tok.is_kw("input") and not is_component:
            body = self.parse_input_block()
            if blocks["input"] is not None:
                duplicates.append(("input", tok.span))
            else:
                blocks["input"] = body
        elif tok.is_kw("output") and not is_component:
            self.advance()
            self.expect_op(":")
            kind = self.expect_kw("spike", "current").value
            self.end_line()
            if blocks["output"] is not None:
                duplicates.append(("output", tok.span))
            else:
                blocks["output"] = kind
        elif tok.is_kw("dynamics") and not is_component:
            blocks["dynamics"].append(self.parse_dynamics())
        elif tok.is_kw("function"):
            blocks["functions"].append(self.parse_function())
        else:
            allowed = ("use", "state", "parameter", "internal", "function")
            if not is_component:
                allowed = BLOCK_KEYWORDS
            self.fail("a block (" + ", ".join(allowed) + ") or 'end'")

    def parse_use(self):
        tok = self.expect_kw("use")
        component = self.expect_ident().value
        alias = None
        if self.peek().is_kw("as"):
            self.advance()
            alias = self.expect_ident().value
        self.end_line()
        return ast.Use(component, alias, span=tok.span)

    # -- declarations --------------------------------------------------------

    def parse_declarations(self):
        decls = []
        self.skip_newlines()
        while not self.peek().is_kw("end"):
            if self.peek().kind == EOF:
                self.fail("'end'")
            try:
                decls.append(self.parse_declaration())
            except NestmlSyntaxError as exc:
                if self.peek().kind == EOF:
                    raise
                self.recover(exc)
            self.skip_newlines()
        self.advance()
        self.end_line()
        return decls

    def parse_declaration(self, allow_alias=True, local=False):
        first = self.peek()
        doc = first.doc
        is_alias = False
        if first.is_kw("alias"):
            if not allow_alias:
                self.fail("declaration")
            self.advance()
            is_alias = True
        names = [self.expect_ident().value]
        while self.peek().is_op(","):
            self.advance()
            names.append(self.expect_ident().value)
        if is_alias and len(names) != 1:
            raise NestmlSyntaxError("an alias declares exactly one name", first.span)
        type_spec = self.parse_type()
        initializer = guard = None
        if self.peek().is_op("="):
            self.advance()
            initializer = self.parse_expr()
        if self.peek().is_op("["):
            self.advance()
            guard = self.parse_expr()
            self.expect_op("]")
        self.end_line()
        return ast.Declaration(tuple(names), type_spec, initializer, guard, is_alias,
                               None if local else doc, span=first.span)

    def parse_type(self) -> TypeSpec:
        tok = self.peek()
        if tok.kind == IDENT and tok.value in TYPE_NAMES:
            self.advance()
            return TypeSpec(tok.value)
        parts = []
        self._unit_term(parts)
        text = "".join(parts)
        try:
            return type_from_text(text)
        except UnitError as exc:
            raise NestmlSyntaxError(str(exc), tok.span, "E0105") from None

    def _unit_term(self, parts):
        self._unit_factor(parts)
        while self.peek().is_op("*", "/"):
            parts.append(self.advance().value)
            self._unit_factor(parts)

    def _unit_factor(self, parts):
        tok = self.peek()
        if tok.is_op("("):
            parts.append(self.advance().value)
            self._unit_term(parts)
            parts.append(self.expect_op(")").value)
        elif tok.kind == IDENT:
            parts.append(self.advance().value)
        elif tok.kind == NUMBER and tok.value == "1":
            parts.append(self.advance().value)
        else:
            self.fail("type or unit")
        if self.peek().is_op("**"):
            parts.append(self.advance().value)
            if self.peek().is_op("-"):
                parts.append(self.advance().value)
            if self.peek().kind != NUMBER:
                self.fail("integer exponent")
            parts.append(self.advance().value)

    def parse_params(self):
        params = []
        self.expect_op("(")
        if not self.peek().is_op(")"):
            while True:
                name = self.expect_ident()
                params.append(ast.Param(name.value, self.parse_type(), span=name.span))
                if not self.peek().is_op(","):
                    break
                self.advance()
        self.expect_op(")")
        return tuple(params)

    # -- input / dynamics / functions ----------------------------------------

    def parse_input_block(self):
        self.expect_kw("input")
        self.expect_op(":")
        lines = []
        self.skip_newlines()
        while not self.peek().is_kw("end"):
            if self.peek().kind == EOF:
                self.fail("'end'")
            try:
                name = self.expect_ident()
                self.expect_op("<-")
                mods = set()
                while self.peek().is_kw("inhibitory", "excitatory"):
                    mods.add(self.advance().value)
                kind = self.expect_kw("spike", "current").value
                if mods and kind != "spike":
                    raise NestmlSyntaxError("only spike inputs take modifiers", name.span)
                self.end_line()
                lines.append(ast.InputLine(name.value, frozenset(mods), kind, span=name.span))
            except NestmlSyntaxError as exc:
                self.recover(exc)
            self.skip_newlines()
        self.advance()
        self.end_line()
        return lines

    def parse_dynamics(self):
        tok = self.expect_kw("dynamics")
        kind = self.expect_kw("timestep", "minDelay").value
        params = self.parse_params() if self.peek().is_op("(") else ()
        self.expect_op(":")
        body = self.parse_body(in_dynamics=True)
        self.expect_kw("end")
        self.end_line()
        return ast.DynamicsDecl(kind, params, body, span=tok.span)

    def parse_function(self):
        tok = self.expect_kw("function")
        name = self.expect_ident().value
        params = self.parse_params()
        return_type = None
        if not self.peek().is_op(":"):
            return_type = self.parse_type()
        self.expect_op(":")
        body = self.parse_body(in_dynamics=False)
        self.expect_kw("end")
        self.end_line()
        return ast.FunctionDecl(name, params, return_type, body, span=tok.span)

    # -- statements ------------------------------------------------------------

    def parse_body(self, in_dynamics):
        """Statements up to (not including) ``end``, ``elif`` or ``else``."""
        stmts = []
        self.skip_newlines()
        while not self.peek().is_kw("end", "elif", "else"):
            if self.peek().kind == EOF:
                self.fail("'end'")
            try:
                stmts.append(self.parse_statement(in_dynamics))
            except NestmlSyntaxError as exc:
                if self.peek().kind == EOF:
                    raise
                self.recover(exc)
            self.skip_newlines()
        return tuple(stmts)

    def parse_statement(self, in_dynamics):
        tok = self.peek()
        if tok.is_kw("if"):
            return self.parse_if(in_dynamics)
        if tok.is_kw("return"):
            self.advance()
            value = None
            if self.peek().kind not in (NEWLINE, EOF) and not self.peek().is_kw("end"):
                value = self.parse_expr()
            self.end_line()
            return ast.Return(value, span=tok.span)
        if tok.is_kw("ODE"):
            if not in_dynamics:
                raise NestmlSyntaxError("ODE blocks are only allowed in dynamics", tok.span)
            return self.parse_ode()
        if tok.kind == IDENT and (self.peek(1).kind in (IDENT, NUMBER) or self.peek(1).is_op(",")):
            decl = self.parse_declaration(allow_alias=False, local=True)
            return ast.LocalDeclaration(decl, span=tok.span)
        expr = self.parse_expr()
        if self.peek().is_op(*ASSIGN_OPS):
            op = self.advance().value
            if not isinstance(expr, ast.VariableRef):
                raise NestmlSyntaxError("assignment target must be a variable", tok.span)
            value = self.parse_expr()
            self.end_line()
            return ast.Assignment(expr, op, value, span=tok.span)
        if isinstance(expr, ast.FunctionCall):
            self.end_line()
            return ast.CallStatement(expr, span=tok.span)
        self.fail("assignment or call statement", tok)

    def parse_if(self, in_dynamics):
        tok = self.expect_kw("if")
        branches = []
        cond = self.parse_expr()
        self.expect_op(":")
        branches.append((cond, self.parse_body(in_dynamics)))
        else_body = None
        while self.peek().is_kw("elif"):
            self.advance()
            cond = self.parse_expr()
            self.expect_op(":")
            branches.append((cond, self.parse_body(in_dynamics)))
        if self.peek().is_kw("else"):
            self.advance()
            self.expect_op(":")
            else_body = self.parse_body(in_dynamics)
        self.expect_kw("end")
        self.end_line()
        return ast.IfChain(tuple(branches), else_body, span=tok.span)

    def parse_ode(self):
        tok = self.expect_kw("ODE")
        self.expect_op(":")
        shapes, equations = [], []
        self.skip_newlines()
        while not self.peek().is_kw("end"):
            if self.peek().kind == EOF:
                self.fail("'end'")
            try:
                line = self.peek()
                if (line.kind == IDENT and line.value == "d" and self.peek(1).is_op("/")
                        and self.peek(2).kind == IDENT and self.peek(2).value == "dt"):
                    self.advance(), self.advance(), self.advance()
                    name = self.expect_ident().value
                    self.expect_op("==")
                    equations.append(ast.DiffEquation(name, self.parse_expr(), span=line.span))
                else:
                    name = self.expect_ident().value
                    self.expect_op("==")
                    kernel = self.parse_expr()
                    buffer = None
                    if self.peek().kind == IDENT and self.peek().value == "on":
                        self.advance()
                        buffer = self.expect_ident().value
                    shapes.append(ast.ShapeEquation(name, kernel, buffer, span=line.span))
                self.end_line()
            except NestmlSyntaxError as exc:
                if self.peek().kind == EOF:
                    raise
                self.recover(exc)
            self.skip_newlines()
        self.advance()
        self.end_line()
        return ast.OdeBlock(tuple(shapes), tuple(equations), span=tok.span)

    # -- expressions -----------------------------------------------------------

    def parse_expr(self):
        return self.parse_or()

    def _binary_level(self, sub, ops, keyword=False):
        lhs = sub()
        while True:
            tok = self.peek()
            if (tok.is_kw(*ops) if keyword else tok.is_op(*ops)):
                self.advance()
                lhs = ast.BinaryOp(tok.value, lhs, sub(), span=tok.span)
            else:
                return lhs

    def parse_or(self):
        return self._binary_level(self.parse_and, ("or",), keyword=True)

    def parse_and(self):
        return self._binary_level(self.parse_not, ("and",), keyword=True)

    def parse_not(self):
        tok = self.peek()
        if tok.is_kw("not"):
            self.advance()
            return ast.UnaryOp("not", self.parse_not(), span=tok.span)
        return self.parse_comparison()

    def parse_comparison(self):
        lhs = self.parse_additive()
        tok = self.peek()
        if tok.is_op(*ast.COMPARISONS):
            self.advance()
            return ast.BinaryOp(tok.value, lhs, self.parse_additive(), span=tok.span)
        return lhs

    def parse_additive(self):
        return self._binary_level(self.parse_multiplicative, ("+", "-"))

    def parse_multiplicative(self):
        return self._binary_level(self.parse_unary, ("*", "/"))

    def parse_unary(self):
        tok = self.peek()
        if tok.is_op("-"):
            self.advance()
            return ast.UnaryOp("neg", self.parse_unary(), span=tok.span)
        return self.parse_power()

    def parse_power(self):
        base = self.parse_postfix()
        tok = self.peek()
        if tok.is_op("**"):
            self.advance()
            return ast.BinaryOp("**", base, self.parse_unary(), span=tok.span)
        return base

    def parse_postfix(self):
        tok = self.peek()
        if tok.kind != IDENT:
            return self.parse_primary()
        self.advance()
        ref = ast.VariableRef(tok.value, span=tok.span)
        if self.peek().is_op("."):
            self.advance()
            member = self.expect_ident()
            ref = ast.VariableRef(member.value, tok.value, span=tok.span)
            if self.peek().is_op("."):
                raise NestmlSyntaxError("member access is limited to one level", self.peek().span)
        if self.peek().is_op("("):
            self.advance()
            args = []
            if not self.peek().is_op(")"):
                args.append(self.parse_expr())
                while self.peek().is_op(","):
                    self.advance()
                    args.append(self.parse_expr())
            self.expect_op(")")
            return ast.FunctionCall(ref, tuple(args), span=tok.span)
        return ref

    def parse_primary(self):
        tok = self.peek()
        if tok.kind == NUMBER:
            self.advance()
            unit = None
            nxt = self.peek()
            if nxt.kind == IDENT and is_unit_atom(nxt.value):
                unit = self.advance().value
            return ast.NumberLiteral(tok.value, unit, span=tok.span)
        if tok.kind == STRING:
            self.advance()
            return ast.StringLiteral(tok.value, span=tok.span)
        if tok.is_kw("true", "false"):
            self.advance()
            return ast.BoolLiteral(tok.value == "true", span=tok.span)
        if tok.is_op("("):
            self.advance()
            inner = self.parse_expr()
            self.expect_op(")")
            return ast.Paren(inner, span=tok.span)
        self.fail("expression")


def parse_file(source: str, path: str = "<string>", allow_generated: bool = False) -> ast.ModelFile:
    """Parse a whole model file; raises :class:`ParseError` listing every syntax error."""
    try:
        tokens = tokenize(source, path, allow_generated)
    except NestmlSyntaxError as exc:
        raise ParseError([exc]) from None
    parser = Parser(tokens, path)
    model = parser.parse_file()
    if parser.errors:
        raise ParseError(parser.errors)
    return model


def parse_expression(source: str, path: str = "<string>", allow_generated: bool = True):
    parser = Parser(tokenize(source, path, allow_generated), path)
    parser.skip_newlines()
    expr = parser.parse_expr()
    parser.skip_newlines()
    if parser.peek().kind != EOF:
        parser.fail("end of expression")
    return expr


def parse_type(source: str) -> TypeSpec:
    parser = Parser(tokenize(source), "<type>")
    spec = parser.parse_type()
    if parser.peek().kind != EOF:
        parser.fail("end of type")
    return spec
