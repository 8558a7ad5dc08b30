from conftest import fixture_text, load

from nestmlc.semantics import check
from nestmlc.syntax import ast, parse_file, pretty_print
from nestmlc.transform import (apply_solver_plan, transform_and_emit_inspectable,
                               transform_files, transform_model)


def transformed(*names):
    files = load(*names)
    out, reports, diags = transform_files(files)
    assert diags == []
    return out, reports


def internal_lines(text):
    block = text.split("internal:")[1].split("end")[0]
    return [line.strip() for line in block.strip().splitlines()]


def test_ode_model_internal_block_gets_propagators():
    """P11 is the plain exponential and P32 the hand-derived quotient."""
    out, reports = transformed("iaf_neuron_ode.nestml")
    lines = internal_lines(pretty_print(out[0]))
    assert "P11 real = exp(-h / tau_in)" in lines
    assert "P33 real = exp(-h / Tau)" in lines
    assert "P32 GOhm = (P33 - P11) / C_m / (1 / tau_in - 1 / Tau)" in lines
    assert reports[0].mode == "exact"
    assert {"P11", "P32", "I_shape", "I_shape__d1"} <= set(reports[0].injected_decls)


def test_ode_model_kernel_slots_are_state_initialized_to_zero():
    out, _ = transformed("iaf_neuron_ode.nestml")
    state = {n: d for d in out[0].declarations[0].state for n in d.names}
    for name in ("I_shape", "I_shape__d1"):
        assert isinstance(state[name].initializer, ast.NumberLiteral)
        assert float(state[name].initializer.text) == 0.0


def test_ode_block_replaced_in_place():
    """The imperative refractory logic still follows the updates."""
    out, _ = transformed("iaf_neuron_ode.nestml")
    body = out[0].declarations[0].dynamics[0].body
    assert not any(isinstance(s, ast.OdeBlock) for s in body)
    assert isinstance(body[-1], ast.IfChain)
    increments = [s for s in body if isinstance(s, ast.Assignment) and s.op == "+="]
    assert [s.target.name for s in increments] == ["I_shape__d1"]


def test_snapshot_for_read_after_write():
    out, _ = transformed("iaf_neuron_ode.nestml")
    body = out[0].declarations[0].dynamics[0].body
    locals_ = [s.decl.names[0] for s in body if isinstance(s, ast.LocalDeclaration)]
    assert locals_ == ["I_shape__d1__prev", "I_shape__prev"]


def test_model_without_ode_is_unchanged():
    (f,) = load("iaf_neuron.nestml")
    model = f.declarations[0]
    new, report = apply_solver_plan(model, None)
    assert new is model
    assert report.mode == "none" and report.injected_decls == []


def test_nonlinear_model_goes_numeric_with_warning():
    out, reports = transformed("nonlinear.nestml")
    (report,) = reports
    assert report.mode == "numeric"
    assert [w.code for w in report.warnings] == ["W0501"]
    model = out[0].declarations[0]
    assert [f.name for f in model.functions] == ["integrate_rk4"]
    call = model.dynamics[0].body[0]
    assert isinstance(call, ast.CallStatement) and call.call.callee.name == "integrate_rk4"


def test_transform_is_idempotent():
    out, _ = transformed("iaf_neuron_ode.nestml")
    again, reports, diags = transform_files(out)
    assert diags == []
    assert [r.mode for r in reports] == ["none"]
    assert again == out


def test_transformed_models_recheck_clean():
    for names in (["iaf_neuron_ode.nestml"], ["nonlinear.nestml"], ["leaky.nestml"],
                  ["iaf_psp.nestml", "psp_helpers.nestml"]):
        out, _ = transformed(*names)
        text = pretty_print(out[0])
        reparsed = parse_file(text, allow_generated=True)
        _, diags = check([reparsed] + out[1:])
        assert [d for d in diags if d.is_error] == []


def test_inspectable_text_has_no_ode_block():
    (f,) = load("iaf_neuron_ode.nestml")
    text = transform_and_emit_inspectable(f.declarations[0], [f])
    assert "ODE:" not in text
    assert "P11" in text


def test_inspectable_imperative_model_is_identity():
    (f,) = load("iaf_neuron.nestml")
    model = f.declarations[0]
    assert transform_and_emit_inspectable(model, [f]) == pretty_print(model)


def test_component_round_trip_is_identity():
    files = load("iaf_psp.nestml", "psp_helpers.nestml")
    out, _, _ = transform_files(files)
    assert pretty_print(out[1]) == pretty_print(files[1])


def test_transform_model_keeps_imports():
    """A model using a component transforms on its own."""
    files = load("iaf_psp.nestml", "psp_helpers.nestml")
    new, report, diags = transform_model(files[0].declarations[0], files)
    assert diags == [] and report.mode == "none"


ALIASED = """\
neuron leaky_alias:
  state:
    V_m mV = 10
    alias V_half mV = V_m / 2
  end

  function set_V_half(v mV):
    V_m = 2 * v
  end

  parameter:
    tau_m ms = 10
  end

  dynamics timestep(t ms):
    ODE:
      d/dt V_m == -V_m / tau_m
    end
    if V_half > 100 mV:
      V_half = 0 mV
    end
  end
end
"""


def test_alias_write_becomes_setter_call():
    out, _, diags = transform_files([parse_file(ALIASED)])
    assert diags == []
    branch = out[0].declarations[0].dynamics[0].body[-1].branches[0][1]
    assert isinstance(branch[0], ast.CallStatement)
    assert branch[0].call.callee.name == "set_V_half"


def test_user_source_may_not_use_generated_names():
    source = fixture_text("leaky.nestml").replace("tau_m ms = 10", "tau__m ms = 10", 1)
    try:
        parse_file(source)
    except Exception as exc:                  # the parser reports E010x
        assert "__" in str(exc)
    else:
        raise AssertionError("a '__' name was accepted")
