"""Symbol tables, unit typing and context conditions."""

from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nestmlc.semantics import (SemanticError, analyze, build_symbol_table, check,
                               check_context_conditions, type_of)
from nestmlc.semantics.symbols import (ALIAS, BUFFER, INTERNAL, LOCAL, PARAMETER, STATE,
                                       Symbol)
from nestmlc.syntax import parse_expression, parse_file, print_expression
from nestmlc.units import parse_unit, unit_type

from conftest import FIXTURES, load

CC_DIR = FIXTURES / "cc"


def scope_for(file, name=None):
    table = build_symbol_table([file])
    return table.scope_of(name or file.declarations[0].name)


def codes(diags, severity="error"):
    return [d.code for d in diags if d.severity == severity]


def test_iaf_symbol_kinds(iaf_file):
    scope = scope_for(iaf_file)
    kind = {name: scope.lookup(name).kind for name in
            ("y0", "y2", "V_m", "V_rel", "C_m", "h", "P11", "P32", "spikeBuffer",
             "currentBuffer")}
    assert kind["y0"] == kind["V_m"] == STATE
    assert kind["V_rel"] == ALIAS
    assert kind["C_m"] == PARAMETER
    assert kind["h"] == kind["P11"] == kind["P32"] == INTERNAL
    assert kind["spikeBuffer"] == kind["currentBuffer"] == BUFFER
    assert scope.lookup("V_rel").writable


def test_alias_without_setter_is_read_only():
    f = parse_file("neuron n:\n  state:\n    v mV\n    alias w mV = v\n  end\nend\n")
    assert not scope_for(f).lookup("w").writable


def test_duplicate_neurons():
    f = parse_file("neuron n: end\nneuron n: end\n")
    assert codes(build_symbol_table([f]).diagnostics) == ["E0201"]


def test_cross_file_component_resolution():
    files = load("iaf_psp.nestml", "psp_helpers.nestml")
    table = build_symbol_table(files)
    assert table.diagnostics == []
    scope = table.scope_of("iaf_psp")
    assert type_of(parse_expression("PSP.computePSPStep(t)"),
                   _with_time(scope)).kind == "void"


def _with_time(scope):
    child = scope.child(kind="dynamics")
    child.define(Symbol("t", LOCAL, unit_type("ms")))
    return child


def test_unresolved_import_and_use():
    table = build_symbol_table(load("iaf_psp.nestml"))
    assert sorted(codes(table.diagnostics)) == ["E0202", "E0203"]


def test_exp_of_time_ratio_is_real(iaf_file):
    scope = scope_for(iaf_file)
    assert type_of(parse_expression("exp(-h / tau_syn)"), scope).kind == "real"


def test_same_unit_addition(iaf_file):
    t = type_of(parse_expression("V_m + E_L"), scope_for(iaf_file))
    assert t.kind == "unit" and t.unit == parse_unit("mV")


def test_dimension_mismatch(iaf_file):
    with pytest.raises(SemanticError) as info:
        type_of(parse_expression("V_m + I_e"), scope_for(iaf_file))
    assert info.value.diagnostic.code == "E0301"


def test_unknown_symbol_and_arity(iaf_file):
    scope = scope_for(iaf_file)
    with pytest.raises(SemanticError) as info:
        type_of(parse_expression("nope + 1"), scope)
    assert info.value.diagnostic.code == "E0302"
    with pytest.raises(SemanticError) as info:
        type_of(parse_expression("exp(1, 2)"), scope)
    assert info.value.diagnostic.code == "E0303"


def test_boolean_operators_need_booleans(iaf_file):
    with pytest.raises(SemanticError) as info:
        type_of(parse_expression("V_m and true"), scope_for(iaf_file))
    assert info.value.diagnostic.code == "E0304"


def test_power_of_unit_needs_integer_literal(iaf_file):
    scope = scope_for(iaf_file)
    assert type_of(parse_expression("V_m ** 2"), scope).unit == parse_unit("mV**2")
    with pytest.raises(SemanticError):
        type_of(parse_expression("V_m ** h"), scope)


def test_cross_scale_comparison_converts(iaf_file):
    t, lowered = analyze(parse_expression("V_m >= 1 V"), scope_for(iaf_file))
    assert t.kind == "boolean"
    assert print_expression(lowered) == "V_m >= 1 V * 1000.0 ms/s"


@pytest.mark.parametrize("text", ["V_m + 1 V", "I_e * 2 ms + 3 nA * 1 s", "exp(h / 1 s)",
                                  "min(V_m, 2 V)", "V_m / 1 V + 1"])
def test_lowering_preserves_types_and_is_idempotent(iaf_file, text):
    scope = scope_for(iaf_file)
    t, lowered = analyze(parse_expression(text), scope)
    t2, again = analyze(lowered, scope)
    assert t2 == t
    assert again == lowered


def test_literal_adopts_unit_of_other_operand(iaf_file):
    t = type_of(parse_expression("V_m >= -99.0"), scope_for(iaf_file))
    assert t.kind == "boolean"


def test_unit_to_real_coercion_warns_only_in_internal_block():
    src = ("neuron n:\n  parameter:\n    C_m pF = 250\n  end\n"
           "  internal:\n    P32 real = 1 / C_m\n  end\nend\n")
    _, diags = check([parse_file(src)])
    assert codes(diags) == [] and codes(diags, "warning") == ["W0310"]
    src = src.replace("internal:\n    P32 real", "state:\n    P32 real")
    _, diags = check([parse_file(src)])
    assert codes(diags) == ["E0402"]


@pytest.mark.parametrize("name", ["iaf_neuron.nestml", "iaf_neuron_ode.nestml", "leaky.nestml",
                                  "nonlinear.nestml", "psp_helpers.nestml"])
def test_reference_fixtures_are_clean(name):
    _, diags = check(load(name))
    assert diags == []


def test_component_model_pair_is_clean():
    _, diags = check(load("iaf_psp.nestml", "psp_helpers.nestml"))
    assert diags == []


CC_CASES = sorted(p.name for p in CC_DIR.glob("*.nestml"))


@pytest.mark.parametrize("name", CC_CASES)
def test_condition_fixture_yields_its_code(name):
    number = int(name[2:4])
    _, diags = check(load("cc/" + name))
    assert codes(diags) == [f"E04{number:02d}"]


def test_every_condition_has_a_fixture():
    assert sorted({int(n[2:4]) for n in CC_CASES}) == list(range(1, 11))


def test_setter_backed_alias_write_is_accepted():
    src = Path(CC_DIR / "cc04_alias_without_setter.nestml").read_text()
    src = src.replace("  dynamics", "  function set_V_rel(v mV):\n    V_m = v - E_L\n  end\n"
                                    "  dynamics")
    _, diags = check([parse_file(src)])
    assert diags == []


def test_all_violations_are_reported():
    src = ("neuron n:\n  state:\n    V_m mV\n  end\n  parameter:\n    C_m pF = 1\n  end\n"
           "  dynamics timestep(t ms):\n    C_m = 100\n    V_m = C_m\n    emitSpike()\n"
           "  end\nend\n")
    _, diags = check([parse_file(src)])
    assert codes(diags) == ["E0403", "E0402", "E0408"]


def test_checking_is_idempotent(iaf_file):
    files = load(*(f"cc/{n}" for n in CC_CASES))
    table = build_symbol_table(files)
    assert check_context_conditions(files, table) == check_context_conditions(files, table)


# -- property: every dynamics assignment has an allowed target or a diagnostic ----

TARGETS = {"V_m": STATE, "C_m": PARAMETER, "P": INTERNAL, "V_rel": ALIAS, "loc": LOCAL}


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(sorted(TARGETS)), min_size=1, max_size=6))
def test_dynamics_write_completeness(targets):
    body = "".join(f"    {name} = 1\n" for name in targets)
    src = ("neuron n:\n  state:\n    V_m mV\n    alias V_rel mV = V_m\n  end\n"
           "  parameter:\n    C_m pF = 1\n  end\n  internal:\n    P real = 1\n  end\n"
           f"  dynamics timestep(t ms):\n    loc real = 0\n{body}  end\nend\n")
    _, diags = check([parse_file(src)])
    flagged = {d.span.line for d in diags if d.code in ("E0403", "E0404")}
    for offset, name in enumerate(targets):
        line = 14 + offset
        allowed = TARGETS[name] in (STATE, LOCAL)
        assert (line in flagged) != allowed
