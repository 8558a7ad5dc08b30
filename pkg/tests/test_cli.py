import json
import os
import subprocess
import sys

import pytest

from conftest import FIXTURES, GOLDEN
from nestmlc.cli import main
from nestmlc.runtime import read_trace_csv

IAF = str(FIXTURES / "iaf_neuron.nestml")
ODE = str(FIXTURES / "iaf_neuron_ode.nestml")

BROKEN = """neuron broken:
  state:
    V mV = 0
  end
  dynamics timestep(t ms):
    V = undefined_thing
  end
end
"""

HYPERBOLIC = """neuron hyperbolic:
  state:
    V mV = 0
  end
  parameter:
    tau ms = 10
    C pF = 250
    w pA = 1
  end
  input:
    spikes <- spike
  end
  dynamics timestep(t ms):
    ODE:
      g == w / (1 + t / tau)
      d/dt V == -V / tau + g / C
    end
  end
end
"""


@pytest.fixture
def stimulus(tmp_path):
    path = tmp_path / "one_spike.json"
    path.write_text(json.dumps({"events": [
        {"kind": "spike", "buffer": "spikeBuffer", "time_ms": 10.0, "weight": 1.0}]}))
    return str(path)


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_check_iaf_fixture_is_silent(capsys):
    code, out, err = run_cli(capsys, "check", IAF)
    assert (code, out, err) == (0, "", "")


def test_context_conditions_alias(capsys):
    assert run_cli(capsys, "contextConditions", IAF, ODE)[0] == 0


def test_check_parameter_write_reports_one_e0403(capsys):
    code, _, err = run_cli(capsys, "check", FIXTURES / "cc" / "cc03_dynamics_writes_parameter.nestml")
    lines = err.splitlines()
    assert code == 2
    assert len(lines) == 1 and "error[E0403]" in lines[0]


def test_parse_mode_ignores_semantic_errors(tmp_path, capsys):
    path = tmp_path / "broken.nestml"
    path.write_text(BROKEN)
    assert run_cli(capsys, "parse", path)[0] == 0
    assert run_cli(capsys, "check", path)[0] == 2


def test_syntax_error_exit_1(tmp_path, capsys):
    path = tmp_path / "bad.nestml"
    path.write_text("neuron bad:\n  state:\n    V mV = \n  end\nend\n")
    code, _, err = run_cli(capsys, "check", path)
    assert code == 1
    assert err.startswith(f"{path}:") and "error[E0101]" in err


def test_diagnostics_sorted_across_files(tmp_path, capsys):
    """Diagnostics come out ordered by file, then line and column."""
    a = tmp_path / "a.nestml"
    b = tmp_path / "b.nestml"
    a.write_text(BROKEN.replace("broken", "first"))
    b.write_text(BROKEN.replace("broken", "second"))
    _, _, err = run_cli(capsys, "check", b, a)
    files = [line.split(":")[0] for line in err.splitlines()]
    assert files == sorted(files) and len(set(files)) == 2
    assert run_cli(capsys, "check", b, a)[2] == err


@pytest.mark.parametrize("argv", [
    [],
    ["check"],
    ["frobnicate", IAF],
    ["generate", IAF],
    ["check", "/nonexistent/model.nestml"],
    ["simulate", IAF, ODE],
    ["simulate", ODE, "--neuron", "nobody"],
    ["simulate", ODE, "--set", "C_m"],
    ["simulate", ODE, "--duration", "-1"],
    ["check", IAF, "--no-such-flag"],
])
def test_usage_errors_exit_64(argv, capsys):
    assert run_cli(capsys, *argv)[0] == 64


def test_help_exits_zero(capsys):
    assert run_cli(capsys, "--help")[0] == 0


def test_simulate_writes_1001_rows(tmp_path, stimulus, capsys):
    code, _, err = run_cli(capsys, "simulate", ODE, "--neuron", "iaf_neuron_ode",
                           "--duration", 100, "--resolution", 0.1, "--stimulus", stimulus,
                           "--probe", "V_m", "--out", tmp_path)
    assert code == 0, err
    columns, rows = read_trace_csv(tmp_path / "iaf_neuron_ode.csv")
    assert columns == ["V_m"]
    assert len(rows) == 1001
    assert rows[-1][0] == pytest.approx(100.0)
    assert max(r[1] for r in rows) > 0
    assert (tmp_path / "iaf_neuron_ode.spikes.csv").read_text() == "spike_time_ms\n"
    assert (tmp_path / "iaf_neuron_ode.solved.nestml").exists()


def test_simulate_overrides_and_spikes(tmp_path, capsys):
    """A strong constant drive makes the model fire; the sidecar lists the spikes."""
    code, _, _ = run_cli(capsys, "simulate", ODE, "--set", "I_e=1000", "--out", tmp_path)
    assert code == 0
    spikes = (tmp_path / "iaf_neuron_ode.spikes.csv").read_text().split()[1:]
    assert len(spikes) >= 3


def test_simulate_trace_path_and_plot(tmp_path, stimulus, capsys):
    trace = tmp_path / "runs" / "psp.csv"
    code, _, _ = run_cli(capsys, "simulate", ODE, "--stimulus", stimulus, "--trace", trace,
                         "--plot")
    assert code == 0
    assert trace.exists()
    assert (tmp_path / "runs" / "psp.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_simulate_runtime_errors_exit_4(tmp_path, capsys):
    stim = tmp_path / "wrong.json"
    stim.write_text(json.dumps({"events": [
        {"kind": "spike", "buffer": "noSuchBuffer", "time_ms": 1.0, "weight": 1.0}]}))
    code, _, err = run_cli(capsys, "simulate", ODE, "--stimulus", stim, "--out", tmp_path)
    assert code == 4 and "noSuchBuffer" in err
    assert run_cli(capsys, "simulate", ODE, "--stimulus", tmp_path / "missing.json")[0] == 4
    code, _, err = run_cli(capsys, "simulate", ODE, "--set", "I_e=-1000000",
                           "--check-guards", "--out", tmp_path)
    assert code == 4 and "V_m" in err


def test_numeric_fallback_warns_or_fails(tmp_path, capsys):
    nonlinear = FIXTURES / "nonlinear.nestml"
    code, _, err = run_cli(capsys, "simulate", nonlinear, "--out", tmp_path)
    assert code == 0 and "warning[W0501]" in err
    code, _, err = run_cli(capsys, "simulate", nonlinear, "--require-exact", "--out", tmp_path)
    assert code == 3 and "error[E0503]" in err
    assert run_cli(capsys, "generate", nonlinear, "--require-exact", "--out", tmp_path)[0] == 3
    assert run_cli(capsys, "generate", nonlinear, "--out", tmp_path)[0] == 0


def test_unsupported_ode_exits_3(tmp_path, capsys):
    path = tmp_path / "hyperbolic.nestml"
    path.write_text(HYPERBOLIC)
    code, _, err = run_cli(capsys, "generate", path, "--out", tmp_path / "out")
    assert code == 3 and "error[E0502]" in err
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("name", ["iaf_neuron", "iaf_neuron_ode"])
def test_generate_matches_golden(name, tmp_path, capsys):
    code, _, err = run_cli(capsys, "generate", FIXTURES / f"{name}.nestml", "--module", name,
                           "--out", tmp_path)
    assert code == 0, err
    written = sorted(p.name for p in (tmp_path / name).iterdir())
    assert written == sorted(p.name for p in (GOLDEN / name).iterdir())
    for fname in written:
        assert (tmp_path / name / fname).read_bytes() == (GOLDEN / name / fname).read_bytes()


def test_generate_is_atomic(tmp_path, capsys):
    """A failing run leaves an earlier output untouched and no temporary files behind."""
    out = tmp_path / "out"
    assert run_cli(capsys, "generate", IAF, "--out", out, "--module", "m")[0] == 0
    before = {p.name: p.read_bytes() for p in (out / "m").iterdir()}
    broken = tmp_path / "broken.nestml"
    broken.write_text(BROKEN)
    assert run_cli(capsys, "generate", IAF, broken, "--out", out, "--module", "m")[0] == 2
    assert {p.name: p.read_bytes() for p in (out / "m").iterdir()} == before
    assert run_cli(capsys, "generate", ODE, "--out", out, "--module", "m")[0] == 0
    assert sorted(os.listdir(out)) == ["m"]
    assert (out / "m" / "iaf_neuron_ode.h").exists()
    assert not (out / "m" / "iaf_neuron.h").exists()


def test_python_dash_m_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "nestmlc", "check", IAF],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stderr == ""
