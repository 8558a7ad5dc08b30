"""Lexer, parser and pretty printer."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nestmlc.diagnostics import NestmlSyntaxError, ParseError
from nestmlc.syntax import ast, parse_expression, parse_file, pretty_print, tokenize
from nestmlc.syntax.lexer import IDENT, NEWLINE, NUMBER, OP
from nestmlc.units import type_from_text

from conftest import FIXTURES, fixture_text, load


def kinds(tokens):
    return [(t.kind, t.value) for t in tokens]


def test_tokenize_guarded_declaration():
    toks = tokenize("C_m pF = 250 [C_m > 0]")
    assert kinds(toks) == [
        (IDENT, "C_m"), (IDENT, "pF"), (OP, "="), (NUMBER, "250"), (OP, "["),
        (IDENT, "C_m"), (OP, ">"), (NUMBER, "0"), (OP, "]"),
    ]


def test_tokenize_empty():
    assert tokenize("") == []


def test_tokenize_illegal_character_span():
    with pytest.raises(NestmlSyntaxError) as info:
        tokenize("@")
    assert info.value.diagnostic().code == "E0102"
    assert (info.value.span.line, info.value.span.column) == (1, 1)


def test_tokenize_unterminated_string():
    with pytest.raises(NestmlSyntaxError) as info:
        tokenize('x = "abc\n')
    assert info.value.diagnostic().code == "E0103"


def test_comment_attaches_to_next_token():
    toks = tokenize("# membrane\nV_m mV")
    assert toks[0].value == "V_m" and toks[0].doc == "membrane"


def test_newlines_separate_statements_but_operators_continue():
    toks = tokenize("a = b +\n c\nd = 1")
    assert [t.kind for t in toks].count(NEWLINE) == 1
    toks = tokenize("a = b\n  / c")
    assert NEWLINE not in [t.kind for t in toks]


def test_reserved_double_underscore():
    with pytest.raises(NestmlSyntaxError) as info:
        tokenize("x__k1 real")
    assert info.value.diagnostic().code == "E0104"
    assert tokenize("x__k1", allow_generated=True)[0].value == "x__k1"


def test_minimal_neuron():
    model = parse_file("neuron n: end")
    decl = model.declarations[0]
    assert decl.name == "n"
    assert decl.state == decl.parameter == decl.internal == decl.input == ()
    assert decl.output is None and decl.dynamics == ()


def test_missing_inner_end_reports_expected_end():
    with pytest.raises(ParseError) as info:
        parse_file("neuron n: state: x mV end")
    diags = info.value.diagnostics()
    assert len(diags) == 1
    assert "expected 'end'" in diags[0].message
    assert diags[0].span.line == 1


def test_parser_reports_several_errors():
    src = "neuron n:\n  state:\n    x mV = )\n    y mV = (\n  end\nend\n"
    with pytest.raises(ParseError) as info:
        parse_file(src)
    assert len(info.value.diagnostics()) >= 2


def test_error_spans_stay_inside_the_source():
    src = "neuron n:\n  parameter:\n    a mV = 1 +\n  end\n"
    with pytest.raises(ParseError) as info:
        parse_file(src)
    lines = src.split("\n")
    for d in info.value.diagnostics():
        assert 1 <= d.span.line <= len(lines)
        assert 1 <= d.span.column <= len(lines[d.span.line - 1]) + 1


def test_iaf_fixture_structure(iaf_file):
    decl = iaf_file.declarations[0]
    state_names = [n for d in decl.state for n in d.names]
    assert state_names == ["y0", "y1", "y2", "V_m", "r", "V_rel"]
    assert decl.state[-1].is_alias
    assert [n for d in decl.parameter for n in d.names][0] == "C_m"
    internal = [n for d in decl.internal for n in d.names]
    assert internal[:3] == ["h", "P11", "P22"] and "P32" in internal
    assert [line.name for line in decl.input] == ["spikeBuffer", "currentBuffer"]
    assert decl.input[0].modifiers == frozenset({"inhibitory", "excitatory"})
    assert decl.output == "spike"
    assert decl.dynamics[0].kind == "timestep"
    assert decl.parameter[0].doc == "Capacity of the membrane."


def test_ode_fixture_structure(ode_file):
    dyn = ode_file.declarations[0].dynamics[0]
    ode = next(s for s in dyn.body if isinstance(s, ast.OdeBlock))
    assert [s.name for s in ode.shapes] == ["I_shape"]
    assert [e.state_var for e in ode.equations] == ["V_m"]


@pytest.mark.parametrize("name", sorted(p.name for p in FIXTURES.glob("*.nestml")))
def test_fixture_round_trip(name):
    first = load(name)[0]
    again = parse_file(pretty_print(first))
    assert again == first
    assert pretty_print(again) == pretty_print(first)


def test_empty_neuron_prints_two_lines():
    assert pretty_print(parse_file("neuron n: end")) == "neuron n:\nend\n"


def test_injected_internal_prints_in_source_form():
    decl = parse_file("neuron n:\n  parameter:\n    tau_syn ms = 2\n  end\nend\n").declarations[0]
    p11 = ast.Declaration(("P11",), type_from_text("real"),
                          parse_expression("exp(-h / tau_syn)"))
    text = pretty_print(ast.NeuronDecl(decl.name, parameter=decl.parameter, internal=(p11,)))
    assert "    P11 real = exp(-h / tau_syn)\n" in text


def test_alpha_kernel_expression_shape():
    expr = parse_expression("w * (E/tau_in) * t * exp(-1/tau_in*t)")
    assert isinstance(expr, ast.BinaryOp) and expr.op == "*"
    assert isinstance(expr.rhs, ast.FunctionCall) and expr.rhs.callee.name == "exp"


def test_precedence_and_right_associative_power():
    expr = parse_expression("a + b * c")
    assert expr.op == "+" and expr.rhs.op == "*"
    power = parse_expression("2 ** 3 ** 2")
    assert power.op == "**" and power.rhs.op == "**"
    assert eval(pretty_expression(power)) == 512


def test_comparisons_bind_looser_than_arithmetic():
    expr = parse_expression("not a + 1 > b and c")
    assert expr.op == "and"
    assert expr.lhs.op == "not" and expr.lhs.operand.op == ">"


def test_unit_literal():
    expr = parse_expression("1 pA * E")
    assert expr.lhs == ast.NumberLiteral("1", "pA")


def pretty_expression(expr):
    from nestmlc.syntax import print_expression
    return print_expression(expr)


# -- property: random models survive print -> parse ---------------------------

NAMES = ["a", "b", "V_m", "tau", "x1", "I_syn"]
TYPES = ["real", "integer", "mV", "pA/ms", "ms**2/pF", "1/ms"]


def numbers():
    ints = st.integers(min_value=0, max_value=1000)
    floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
    return st.one_of(ints, floats).map(ast.num)


def expressions():
    leaves = st.one_of(numbers(), st.sampled_from(NAMES).map(ast.var),
                       st.sampled_from(["mV", "pA", "ms"]).map(lambda u: ast.NumberLiteral("2", u)))

    def extend(children):
        return st.one_of(
            st.tuples(st.sampled_from(["+", "-", "*", "/", "**", "<", "==", "and", "or"]),
                      children, children).map(lambda t: ast.binop(*t)),
            children.map(ast.neg),
            children.map(lambda c: ast.UnaryOp("not", ast.wrap(c, "not"))),
            children.map(ast.Paren),
            st.lists(children, max_size=2).map(lambda args: ast.call("exp", *args)),
            children.map(lambda c: ast.call("getSum", c, qualifier="buf")),
        )

    return st.recursive(leaves, extend, max_leaves=8)


@st.composite
def models(draw):
    decls = tuple(
        ast.Declaration((name,), type_from_text(draw(st.sampled_from(TYPES))),
                        draw(st.none() | expressions()), draw(st.none() | expressions()))
        for name in draw(st.lists(st.sampled_from(NAMES), max_size=3, unique=True))
    )
    body = tuple(
        ast.Assignment(ast.var(draw(st.sampled_from(NAMES))),
                       draw(st.sampled_from(["=", "+=", "*="])), draw(expressions()))
        for _ in range(draw(st.integers(0, 3)))
    )
    if draw(st.booleans()):
        body += (ast.IfChain(((draw(expressions()), body),), draw(st.none() | st.just(body))),)
    dyn = (ast.DynamicsDecl("timestep", (ast.Param("t", type_from_text("ms")),), body),)
    return ast.ModelFile((), (ast.NeuronDecl("m", state=decls, dynamics=dyn),))


@settings(max_examples=150, deadline=None)
@given(expressions())
def test_expression_round_trip(expr):
    assert parse_expression(pretty_expression(expr)) == expr


@settings(max_examples=100, deadline=None)
@given(models())
def test_model_round_trip(model):
    assert parse_file(pretty_print(model)) == model


@settings(max_examples=50, deadline=None)
@given(st.text(max_size=60))
def test_tokenize_is_deterministic(text):
    def attempt():
        try:
            return tokenize(text)
        except NestmlSyntaxError as exc:
            return exc.diagnostic()
    assert attempt() == attempt()
