from pathlib import Path

import pytest

from nestmlc.syntax import parse_file

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def fixture_text(name):
    return (FIXTURES / name).read_text()


def load(*names):
    return [parse_file(fixture_text(n), str(FIXTURES / n)) for n in names]


@pytest.fixture
def iaf_file():
    return load("iaf_neuron.nestml")[0]


@pytest.fixture
def ode_file():
    return load("iaf_neuron_ode.nestml")[0]


def ode_site(file, name=None):
    """(block, scope) of a model's ODE block."""
    from nestmlc.odesolver import find_ode_block
    from nestmlc.semantics import build_symbol_table
    model = next(d for d in file.declarations if name is None or d.name == name)
    site = find_ode_block(build_symbol_table([file]).scope_of(model.name), model)
    return site[2], site[3]


def plan_for(text, name=None):
    from nestmlc.odesolver import make_solver_plan
    return make_solver_plan(*ode_site(parse_file(text), name))


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdicts at the end of the run, one line per criterion."""
    import sys
    module = sys.modules.get("test_acceptance")
    verdicts = getattr(module, "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for line in verdicts:
            terminalreporter.write_line(line)
