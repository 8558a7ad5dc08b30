import math
import os
import random
import re

import pytest
from conftest import GOLDEN, fixture_text, load
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from nestmlc.codegen import CodegenError, generate, loc_report
from nestmlc.codegen.emitter import SHIM, ExpressionLowering
from nestmlc.pipeline import compile_files, neurons
from nestmlc.runtime.pysource import RUNTIME_GLOBALS, ExpressionSource
from nestmlc.semantics import SemanticError, analyze, build_symbol_table
from nestmlc.syntax import ast, parse_expression, parse_file
from nestmlc.transform import transform_files

GOLDEN_MODELS = ["iaf_neuron", "iaf_neuron_ode"]


def artifacts_for(name):
    result = compile_files(load(f"{name}.nestml"), name)
    assert result.ok
    return result.artifacts


# -- golden files ---------------------------------------------------------------------------

@pytest.mark.parametrize("name", GOLDEN_MODELS)
def test_golden_files(name):
    """Byte equality with the checked-in outputs (NESTMLC_UPDATE_GOLDEN=1 rewrites them)."""
    root = GOLDEN / name
    arts = artifacts_for(name)
    if os.environ.get("NESTMLC_UPDATE_GOLDEN"):
        root.mkdir(parents=True, exist_ok=True)
        for old in root.iterdir():
            old.unlink()
        for a in arts:
            (root / a.relative_path).write_bytes(a.contents.encode("utf-8"))
    expected = sorted(p.name for p in root.iterdir())
    assert sorted(a.relative_path for a in arts) == expected
    for a in arts:
        assert (root / a.relative_path).read_bytes() == a.contents.encode("utf-8"), a.relative_path


def test_generation_is_deterministic():
    first = artifacts_for("iaf_neuron_ode")
    second = artifacts_for("iaf_neuron_ode")
    assert first == second


def test_artifact_kinds_and_paths():
    arts = artifacts_for("iaf_neuron_ode")
    assert [(a.relative_path, a.kind) for a in arts] == [
        ("iaf_neuron_ode.h", "header"), ("iaf_neuron_ode.cpp", "implementation"),
        ("iaf_neuron_odemodule.cpp", "moduleBootstrap"), ("bootstrap.sh.in", "buildScript"),
        ("iaf_neuron_ode.solved.nestml", "inspectableModel")]


def test_two_models_give_six_artifacts():
    files = load("iaf_neuron.nestml", "iaf_neuron_ode.nestml")
    out, _, _ = transform_files(files)
    arts = generate(neurons(out), "pair", out)
    assert len(arts) == 6
    assert len({a.relative_path for a in arts}) == 6
    module = arts[4].contents
    assert module.index('"iaf_neuron"') < module.index('"iaf_neuron_ode"')


def test_empty_model_list():
    arts = generate([], "nothing")
    assert [a.kind for a in arts] == ["moduleBootstrap", "buildScript"]


def test_implementation_carries_propagator_forms():
    impl = artifacts_for("iaf_neuron_ode")[1].contents
    assert "// P11 real = exp(-h / tau_in)" in impl
    assert "V_.P11 = exp(((-V_.h) / P_.tau_in));" in impl
    assert "// P32 GOhm = (P33 - P11) / C_m / (1 / tau_in - 1 / Tau)" in impl


def test_buffers_and_spikes_are_lowered():
    impl = artifacts_for("iaf_neuron")[1].contents
    assert "B_.currentBuffer.get_value(lag)" in impl
    assert "nestml_send_spike(this, lag);" in impl


def test_guarded_setter_rolls_back():
    header = artifacts_for("iaf_neuron")[0].contents
    setter = header[header.index("void set_C_m(double value) {"):]
    setter = setter[:setter.index("\n  }\n")]
    assert "const double previous = P_.C_m;" in setter
    assert "P_.C_m = previous;" in setter
    assert 'throw nestml_BadParameter("C_m");' in setter
    assert "void set_V_rel(double v);" in header


def test_alias_write_lowers_to_setter():
    source = fixture_text("iaf_neuron.nestml").replace(
        "    y0 = currentBuffer.getSum(t);", "    y0 = currentBuffer.getSum(t);\n    V_rel = 0 mV")
    arts = compile_files([parse_file(source)], "m").artifacts
    assert "    set_V_rel(0);" in arts[1].contents


def test_ode_block_is_refused():
    files = load("iaf_neuron_ode.nestml")
    with pytest.raises(CodegenError):
        generate(neurons(files), "raw", files)


def test_component_struct_is_inlined():
    files = load("iaf_psp.nestml", "psp_helpers.nestml")
    result = compile_files(files, "psp")
    header, impl = result.artifacts[0].contents, result.artifacts[1].contents
    assert "struct PSPHelpers {" in header and "PSPHelpers PSP_;" in header
    assert "PSP_.computePSPStep(t);" in impl


# -- expressions survive re-parsing ------------------------------------------------------------

def _cpp_eval(e, env):
    """Evaluate a re-parsed C++ expression; S_/P_/V_ members come from ``env``."""
    if isinstance(e, ast.Paren):
        return _cpp_eval(e.inner, env)
    if isinstance(e, ast.NumberLiteral):
        return float(e.text)
    if isinstance(e, ast.VariableRef):
        if e.qualifier is None and e.name == "nestml_E":
            return math.e
        assert e.qualifier in ("S_", "P_", "V_"), e
        return env[e.name]
    if isinstance(e, ast.UnaryOp):
        return -_cpp_eval(e.operand, env)
    if isinstance(e, ast.BinaryOp):
        a, b = _cpp_eval(e.lhs, env), _cpp_eval(e.rhs, env)
        return {"+": a + b, "-": a - b, "*": a * b}.get(e.op) if e.op != "/" else a / b
    if isinstance(e, ast.FunctionCall):
        args = [_cpp_eval(a, env) for a in e.args]
        fn = {"exp": math.exp, "log": math.log, "pow": math.pow, "fmin": min, "fmax": max,
              "nestml_resolution": lambda: env["__h"]}[e.callee.name]
        return fn(*args)
    raise AssertionError(f"unexpected node {e!r}")


def _source_eval(expr, scope, env):
    code = ExpressionSource().typed(expr, scope)

    class Rt:
        def resolution(self):
            return env["__h"]

    return eval(code, dict(RUNTIME_GLOBALS), {"V": env, "B": {}, "C": {}, "rt": Rt()})


EXPR_MODEL = """\
neuron exprs:
  parameter:
    a real = 1
    b real = 2
    c real = 3
    x mV = 1
    y V = 1
  end
end
"""
NAMES = ["a", "b", "c", "x", "y"]


def _expressions():
    leaf = st.one_of(st.sampled_from(NAMES).map(ast.var),
                     st.floats(0.5, 4).map(lambda x: ast.NumberLiteral(repr(round(x, 3)))))

    def grow(children):
        binary = st.tuples(st.sampled_from("+-*/"), children, children).map(
            lambda t: ast.BinaryOp(t[0], t[1], t[2]))
        neg = children.map(lambda c: ast.UnaryOp("neg", c))
        square = children.map(lambda c: ast.BinaryOp("**", c, ast.NumberLiteral("2")))
        exp = children.map(lambda c: ast.call("exp", c))
        return st.one_of(binary, neg, square, exp)

    return st.recursive(leaf, grow, max_leaves=10)


@pytest.fixture(scope="module")
def expr_scope():
    return build_symbol_table([parse_file(EXPR_MODEL)]).scope_of("exprs")


@pytest.fixture(scope="module")
def ode_scope():
    out, _, _ = transform_files(load("iaf_neuron_ode.nestml"))
    return build_symbol_table(out).scope_of("iaf_neuron_ode")


def _close(a, b):
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= 1e-12 * max(abs(a), abs(b), 1e-300)


@settings(max_examples=100, deadline=None,
          suppress_health_check=[HealthCheck.filter_too_much, HealthCheck.too_slow])
@given(expr=_expressions(), seed=st.integers(0, 2**32 - 1))
def test_reparsed_expressions_evaluate_the_same(expr, seed, expr_scope):
    """Full parenthesization keeps the meaning under our own precedence rules."""
    rng = random.Random(seed)
    env = {n: rng.uniform(0.5, 3.0) for n in NAMES}
    try:
        _, lowered = analyze(expr, expr_scope)
    except SemanticError:
        assume(False)
    try:
        expected = _source_eval(expr, expr_scope, dict(env))
    except (ZeroDivisionError, OverflowError):
        assume(False)
    text = ExpressionLowering().render(lowered, expr_scope)
    got = _cpp_eval(parse_expression(text), env)
    assert _close(got, expected), text


def test_generated_internals_at_random_points(ode_scope):
    """Every calibrate line of the ODE model at 100 random parameter points."""
    out, _, _ = transform_files(load("iaf_neuron_ode.nestml"))
    model = out[0].declarations[0]
    impl = generate([model], "m", out)[1].contents
    lines = dict(re.findall(r"^  V_\.(\w+) = (.*);$", impl, re.M))
    decls = {d.names[0]: d for d in model.internal}
    rng = random.Random(7)
    for _ in range(100):
        env = {n: rng.uniform(0.5, 3.0) for n in ("C_m", "Tau", "tau_in")} | {"__h": 0.1}
        env["Tau"] += 5.0                         # keep the two rates apart
        for name, text in lines.items():
            if name == "ref_steps":
                continue
            expected = _source_eval(decls[name].initializer, ode_scope, dict(env))
            got = _cpp_eval(parse_expression(text), env)
            assert _close(got, expected), name
            env[name] = expected


# -- lines of code ------------------------------------------------------------------------------

def test_loc_ratio_on_the_iaf_fixture():
    model_loc, generated, ratio = loc_report(fixture_text("iaf_neuron.nestml"),
                                             artifacts_for("iaf_neuron"))
    print(f"\nloc: model {model_loc}, generated {generated}, ratio {ratio:.2f} "
          "(published figure: 20x with full simulator bootstrap)")
    assert ratio >= 5


def test_loc_of_an_empty_neuron():
    source = "neuron empty:\nend\n"
    _, _, ratio = loc_report(source, compile_files([parse_file(source)], "e").artifacts)
    assert 1 < ratio < math.inf


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 6))
def test_extra_state_never_shrinks_output(k):
    def generated(extra):
        lines = "".join(f"    s{i} real = 0\n" for i in range(extra))
        source = fixture_text("leaky.nestml").replace("    V_m mV = 10\n",
                                                      "    V_m mV = 10\n" + lines, 1)
        return loc_report(source, compile_files([parse_file(source)], "m").artifacts)[1]

    assert generated(k + 1) >= generated(k)


# -- no free identifiers ------------------------------------------------------------------------

CPP_WORDS = {"const", "double", "long", "bool", "void", "for", "if", "else", "return", "true",
             "false", "this", "throw", "static_cast", "std", "string", "map", "char", "static",
             "c_str", "maybe_unused", "port", "lag", "from", "to", "origin", "value", "d", "count", "at", "t"}


@pytest.mark.parametrize("name", GOLDEN_MODELS + ["iaf_psp"])
def test_no_free_identifiers(name):
    files = load(f"{name}.nestml") if name != "iaf_psp" else \
        load("iaf_psp.nestml", "psp_helpers.nestml")
    result = compile_files(files, "m")
    header, impl = result.artifacts[0].contents, result.artifacts[1].contents
    model = neurons(result.files)[0]
    fields = set(re.findall(r"^    (?:double|long|bool|std::string) (\w+);$", header, re.M))
    allowed = set(SHIM) | CPP_WORDS | {model.name} | {f.name for f in model.functions}
    allowed |= set(re.findall(r"\b((?:get|set)_\w+)\(", header))
    allowed |= {f"{u.local_name}_" for u in model.uses}
    allowed |= set(re.findall(r"(?:double|long|bool) (\w+)", impl))
    allowed |= {"S_", "P_", "V_", "B_", "calibrate", "handle", "update", "init_buffers",
                "get_status", "set_status", "recordables", "n_recordables"}
    for line in impl.splitlines():
        code = re.sub(r'"[^"]*"', "", line.split("//")[0])
        if code.startswith("#include"):
            continue
        for member in re.findall(r"\b[SPV]_\.(\w+)", code):
            assert member in fields, (member, line)
        for word in re.findall(r"(?<![.\w])([A-Za-z_]\w*)", code):
            assert word in allowed, (word, line)
