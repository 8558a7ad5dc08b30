"""SI unit algebra and the scalar type lattice.

A :class:`UnitType` is a dimension vector over the seven SI base dimensions
plus a decimal scale.  Values of a unit-typed quantity are stored as plain
numbers expressed in that scale, so ``250 pF`` is the number 250 with scale
-12.  Conversion between scales of the same dimension is always an exact
power of ten.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

BASE_DIMENSIONS = ("kg", "m", "s", "A", "K", "mol", "cd")


class UnitError(ValueError):
    pass


@dataclass(frozen=True)
class Dimension:
    exponents: tuple = (0, 0, 0, 0, 0, 0, 0)

    def __post_init__(self):
        if len(self.exponents) != 7:
            raise ValueError("dimension needs 7 exponents")

    @property
    def dimensionless(self) -> bool:
        return not any(self.exponents)

    def __mul__(self, other):
        return Dimension(tuple(a + b for a, b in zip(self.exponents, other.exponents)))

    def __truediv__(self, other):
        return Dimension(tuple(a - b for a, b in zip(self.exponents, other.exponents)))

    def __pow__(self, n: int):
        return Dimension(tuple(a * n for a in self.exponents))


DIMENSIONLESS = Dimension()


def _dim(kg=0, m=0, s=0, A=0, K=0, mol=0, cd=0):
    return Dimension((kg, m, s, A, K, mol, cd))


@dataclass(frozen=True)
class UnitType:
    dimension: Dimension = DIMENSIONLESS
    scale: int = 0

    @property
    def dimensionless(self) -> bool:
        return self.dimension.dimensionless

    def __str__(self):
        return pretty_unit(self)


# (dimension, scale of the bare symbol relative to the coherent SI unit)
BASE_UNITS = {
    "V": (_dim(kg=1, m=2, s=-3, A=-1), 0),
    "A": (_dim(A=1), 0),
    "s": (_dim(s=1), 0),
    "F": (_dim(kg=-1, m=-2, s=4, A=2), 0),
    "S": (_dim(kg=-1, m=-2, s=3, A=2), 0),
    "Ohm": (_dim(kg=1, m=2, s=-3, A=-2), 0),
    "Hz": (_dim(s=-1), 0),
    "g": (_dim(kg=1), -3),
    "m": (_dim(m=1), 0),
    "K": (_dim(K=1), 0),
    "mol": (_dim(mol=1), 0),
    "cd": (_dim(cd=1), 0),
}

PREFIXES = {
    "f": -15, "p": -12, "n": -9, "u": -6, "m": -3, "c": -2, "d": -1,
    "da": 1, "h": 2, "k": 3, "M": 6, "G": 9, "T": 12,
}
_PREFIX_BY_SCALE = {v: k for k, v in PREFIXES.items()}

# named units tried first by the pretty printer
_NAMED = ("V", "A", "F", "S", "Ohm", "s", "m", "K", "mol", "cd")


def parse_atom(atom: str) -> UnitType:
    if atom == "1":
        return UnitType()
    if atom in BASE_UNITS:
        dim, scale = BASE_UNITS[atom]
        return UnitType(dim, scale)
    # longest prefix first so that ``da`` wins over ``d``
    for prefix in sorted(PREFIXES, key=len, reverse=True):
        if atom.startswith(prefix) and atom[len(prefix):] in BASE_UNITS:
            dim, scale = BASE_UNITS[atom[len(prefix):]]
            return UnitType(dim, scale + PREFIXES[prefix])
    raise UnitError(f"unknown unit '{atom}'")


def is_unit_atom(text: str) -> bool:
    try:
        parse_atom(text)
    except UnitError:
        return False
    return True


def unit_multiply(a: UnitType, b: UnitType) -> UnitType:
    return UnitType(a.dimension * b.dimension, a.scale + b.scale)


def unit_divide(a: UnitType, b: UnitType) -> UnitType:
    return UnitType(a.dimension / b.dimension, a.scale - b.scale)


def unit_power(a: UnitType, n: int) -> UnitType:
    return UnitType(a.dimension ** n, a.scale * n)


def conversion_factor(src: UnitType, dst: UnitType) -> Fraction:
    """Factor that converts a value in ``src`` into the scale of ``dst``."""
    if src.dimension != dst.dimension:
        raise UnitError(f"cannot convert {pretty_unit(src)} to {pretty_unit(dst)}")
    return Fraction(10) ** (src.scale - dst.scale)


_TOKEN = re.compile(r"\s*(?:(\*\*)|([*/()])|(-?\d+)|([A-Za-z]+))")


def parse_unit(text: str) -> UnitType:
    """Parse a unit expression such as ``mV``, ``mV/ms``, ``pA*ms`` or ``mV**2``."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise UnitError(f"malformed unit expression '{text}'")
        tokens.append(next(g for g in m.groups() if g is not None))
        pos = m.end()
    if not tokens:
        raise UnitError("empty unit expression")
    unit, rest = _parse_term(tokens)
    if rest:
        raise UnitError(f"trailing input in unit expression '{text}'")
    return unit


def _parse_term(tokens):
    unit, tokens = _parse_factor(tokens)
    while tokens and tokens[0] in ("*", "/"):
        op = tokens[0]
        rhs, tokens = _parse_factor(tokens[1:])
        unit = unit_multiply(unit, rhs) if op == "*" else unit_divide(unit, rhs)
    return unit, tokens


def _parse_factor(tokens):
    if not tokens:
        raise UnitError("unexpected end of unit expression")
    head = tokens[0]
    if head == "(":
        unit, tokens = _parse_term(tokens[1:])
        if not tokens or tokens[0] != ")":
            raise UnitError("missing ')' in unit expression")
        tokens = tokens[1:]
    elif head in ("*", "/", ")", "**"):
        raise UnitError(f"unexpected '{head}' in unit expression")
    else:
        unit = parse_atom(head)
        tokens = tokens[1:]
    if tokens and tokens[0] == "**":
        if len(tokens) < 2 or not re.fullmatch(r"-?\d+", tokens[1]):
            raise UnitError("unit exponent must be an integer literal")
        unit = unit_power(unit, int(tokens[1]))
        tokens = tokens[2:]
    return unit, tokens


def _atom(symbol, exponent):
    return symbol if exponent == 1 else f"{symbol}**{exponent}"


# prefixes a neuroscientist would reach for first
_PREFERRED = {"s": "m", "V": "m", "F": "p", "A": "p", "S": "n", "Ohm": "M", "m": "u"}


def _named_forms():
    """Candidate spellings over named units: single powers, then pairs."""
    for e in (1, -1, 2, -2):
        for name in _NAMED:
            yield ((name, e),)
    for ea, eb in ((1, 1), (1, -1), (2, -1), (1, -2)):
        for a in _NAMED:
            for b in _NAMED:
                if a == b or (ea, eb) == (1, 1) and _NAMED.index(a) > _NAMED.index(b):
                    continue
                yield ((a, ea), (b, eb))


def _spell(form, u):
    dim = DIMENSIONLESS
    scale = 0
    for name, e in form:
        d, s0 = BASE_UNITS[name]
        dim = dim * d ** e
        scale += s0 * e
    if dim != u.dimension:
        return None
    residual = u.scale - scale
    best = None
    for i, (name_i, e_i) in enumerate(form):
        options = [["", _PREFERRED.get(n, "")] for n, _ in form]
        options[i] = [None]
        for combo in _combos(options):
            rest = residual - sum(PREFIXES.get(p, 0) * e for p, (_, e) in zip(combo, form)
                                  if p is not None)
            if rest % e_i:
                continue
            want = rest // e_i
            if want and want not in _PREFIX_BY_SCALE:
                continue
            chosen = list(combo)
            chosen[i] = _PREFIX_BY_SCALE.get(want, "")
            score = sum(1 for p, (n, _) in zip(chosen, form) if p != _PREFERRED.get(n, ""))
            if best is None or score < best[0]:
                best = (score, chosen)
    if best is None:
        return None
    num = [_atom(p + n, e) for p, (n, e) in zip(best[1], form) if e > 0]
    den = [_atom(p + n, -e) for p, (n, e) in zip(best[1], form) if e < 0]
    return "*".join(num or ["1"]) + "".join("/" + d for d in den)


def _combos(options):
    if not options:
        yield []
        return
    for head in options[0]:
        for tail in _combos(options[1:]):
            yield [head] + tail


def pretty_unit(u: UnitType) -> str:
    """Render ``u`` so that ``parse_unit(pretty_unit(u)) == u``."""
    if u.dimensionless:
        if u.scale == 0:
            return "1"
        if u.scale in _PREFIX_BY_SCALE:
            return f"{_PREFIX_BY_SCALE[u.scale]}s/s"
    for form in _named_forms():
        text = _spell(form, u)
        if text is not None:
            return text
    if u.dimension == BASE_UNITS["g"][0] and u.scale == 0:
        return "kg"

    # generic form over base symbols (mass as gram)
    symbols = ["g", "m", "s", "A", "K", "mol", "cd"]
    exps = list(u.dimension.exponents)
    residual = u.scale + 3 * exps[0]
    num = [[sym, e] for sym, e in zip(symbols, exps) if e > 0]
    den = [[sym, -e] for sym, e in zip(symbols, exps) if e < 0]
    prefixed = False
    if residual:
        # absorb the residual scale into a single exponent-one atom when possible
        for group, sign in ((num, 1), (den, -1)):
            for item in group:
                p = sign * residual
                if item[1] == 1 and p in _PREFIX_BY_SCALE:
                    item[0] = _PREFIX_BY_SCALE[p] + item[0]
                    residual = 0
                    prefixed = True
                    break
            if prefixed:
                break
    parts = [_atom(s, e) for s, e in num]
    # leftover scale as dimensionless pairs like ks/s
    extra = []
    while residual:
        step = max((p for p in _PREFIX_BY_SCALE if abs(p) <= abs(residual) and p * residual > 0),
                   key=abs)
        extra.append(f"{_PREFIX_BY_SCALE[step]}s/s")
        residual -= step
    text = "*".join(parts) if parts else "1"
    for s, e in den:
        text += "/" + _atom(s, e)
    for pair in extra:
        text += "*" + pair
    return text


# ---------------------------------------------------------------------------
# scalar types

INTEGER = "integer"
REAL = "real"
STRING = "string"
BOOLEAN = "boolean"
VOID = "void"
UNIT = "unit"
BUFFER = "buffer"

TYPE_NAMES = (INTEGER, REAL, STRING, BOOLEAN, VOID)


@dataclass(frozen=True)
class TypeSpec:
    """A declared or inferred type.

    ``text`` keeps the source spelling of a unit (``mV/ms``) for printing and
    does not take part in equality.
    """

    kind: str
    unit: UnitType | None = None
    buffer: str | None = None
    text: str | None = field(default=None, compare=False)

    def __str__(self):
        if self.kind == UNIT:
            return self.text or pretty_unit(self.unit)
        if self.kind == BUFFER:
            return f"{self.buffer} buffer"
        return self.kind

    @property
    def is_numeric(self) -> bool:
        return self.kind in (INTEGER, REAL, UNIT)

    @property
    def is_real_like(self) -> bool:
        return self.kind in (INTEGER, REAL) or (self.kind == UNIT and self.unit.dimensionless)


Integer = TypeSpec(INTEGER)
Real = TypeSpec(REAL)
String = TypeSpec(STRING)
Boolean = TypeSpec(BOOLEAN)
Void = TypeSpec(VOID)


def unit_type(unit: UnitType | str, text: str | None = None) -> TypeSpec:
    if isinstance(unit, str):
        text = text or unit
        unit = parse_unit(unit)
    return TypeSpec(UNIT, unit, text=text)


def buffer_type(kind: str) -> TypeSpec:
    return TypeSpec(BUFFER, buffer=kind)


def type_from_text(text: str) -> TypeSpec:
    if text in TYPE_NAMES:
        return TypeSpec(text)
    return unit_type(parse_unit(text), text)


def as_unit(t: TypeSpec) -> UnitType:
    """Unit view of a numeric type; plain numbers are dimensionless scale 0."""
    if t.kind == UNIT:
        return t.unit
    if t.kind in (INTEGER, REAL):
        return UnitType()
    raise UnitError(f"type {t} has no unit")


def normalize(unit: UnitType, text: str | None = None) -> TypeSpec:
    """Dimensionless scale-0 units collapse to ``real``."""
    if unit.dimensionless and unit.scale == 0:
        return Real
    return TypeSpec(UNIT, unit, text=text)
