"""SI unit algebra."""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nestmlc.units import (Dimension, UnitError, UnitType, conversion_factor, normalize,
                           parse_unit, pretty_unit, unit_divide, unit_multiply, unit_power)

VOLT = Dimension((1, 2, -3, -1, 0, 0, 0))
FARAD = Dimension((-1, -2, 4, 2, 0, 0, 0))


def test_millivolt():
    assert parse_unit("mV") == UnitType(VOLT, -3)


def test_picofarad():
    assert parse_unit("pF") == UnitType(FARAD, -12)


def test_rate_of_voltage_has_scale_zero():
    u = parse_unit("mV/ms")
    assert u.dimension == Dimension((1, 2, -4, -1, 0, 0, 0))
    assert u.scale == 0


def test_bare_metre_beats_milli_prefix():
    assert parse_unit("m") == UnitType(Dimension((0, 1, 0, 0, 0, 0, 0)), 0)
    assert parse_unit("ms").scale == -3


def test_kilogram_is_coherent():
    assert parse_unit("kg") == UnitType(Dimension((1, 0, 0, 0, 0, 0, 0)), 0)


def test_unknown_atom():
    with pytest.raises(UnitError):
        parse_unit("parsec")


def test_self_division_normalizes_to_real():
    mv = parse_unit("mV")
    assert normalize(unit_divide(mv, mv)).kind == "real"


def test_charge_from_current_times_time():
    u = unit_multiply(parse_unit("pA"), parse_unit("ms"))
    assert u.dimension == Dimension((0, 0, 1, 1, 0, 0, 0))
    assert u.scale == -15


def test_square():
    u = unit_power(parse_unit("mV"), 2)
    assert u.dimension == VOLT ** 2 and u.scale == -6


def test_conversion_factors():
    assert conversion_factor(parse_unit("mV"), parse_unit("V")) == Fraction(1, 1000)
    assert conversion_factor(parse_unit("pA"), parse_unit("nA")) == Fraction(1, 1000)
    with pytest.raises(UnitError):
        conversion_factor(parse_unit("mV"), parse_unit("pA"))


@pytest.mark.parametrize("text, expected", [
    ("mV", "mV"), ("pA/ms", "pA/ms"), ("1/ms", "1/ms"), ("GOhm", "GOhm"), ("nS", "nS"),
])
def test_pretty_unit_uses_familiar_spellings(text, expected):
    assert pretty_unit(parse_unit(text)) == expected


# -- properties -----------------------------------------------------------------

exponents = st.tuples(*[st.integers(-3, 3)] * 7)
units = st.builds(lambda e, s: UnitType(Dimension(e), s), exponents, st.integers(-18, 18))


@given(units, units, units)
def test_multiply_is_associative(a, b, c):
    assert unit_multiply(unit_multiply(a, b), c) == unit_multiply(a, unit_multiply(b, c))


@given(units, units)
def test_multiply_is_commutative(a, b):
    assert unit_multiply(a, b) == unit_multiply(b, a)


@given(units)
def test_self_division_and_zeroth_power_are_neutral(a):
    assert unit_divide(a, a) == UnitType()
    assert unit_power(a, 0) == UnitType()


@given(units)
def test_pretty_unit_round_trip(u):
    assert parse_unit(pretty_unit(u)) == u


@given(exponents, st.integers(-18, 18), st.integers(-18, 18))
def test_conversion_factors_are_reciprocal(e, s1, s2):
    a, b = UnitType(Dimension(e), s1), UnitType(Dimension(e), s2)
    assert conversion_factor(a, b) * conversion_factor(b, a) == 1
