"""Turn solver-plan expressions into plain Python callables of ``(env, F)``."""

from __future__ import annotations

from ..odesolver import symbolic as cas
from .pysource import RUNTIME_GLOBALS


def _source(x) -> str:
    if isinstance(x, cas.Num):
        return repr(float(x.value))
    if isinstance(x, cas.Lit):
        return repr(float(x.text))
    if isinstance(x, cas.Sym):
        return f"env[{x.name!r}]"
    if isinstance(x, cas.Add):
        return "(" + " + ".join(_source(t) for t in x.terms) + ")"
    if isinstance(x, cas.Mul):
        return "(" + " * ".join(_source(f) for f in x.factors) + ")"
    if isinstance(x, cas.Pow):
        if isinstance(x.exponent, cas.Num) and x.exponent.value == -1:
            return f"(1.0 / {_source(x.base)})"
        return f"_pow({_source(x.base)}, {_source(x.exponent)})"
    if isinstance(x, cas.Func):
        if x.name == "exp" and not x.constant:
            return f"_exp({_source(x.args[0])})"
        if x.name == "ln" and not x.constant:
            return f"_ln({_source(x.args[0])})"
        if x.constant:
            return f"env[{cas.func_key(x)!r}]"
        return f"F[{x.name!r}](" + ", ".join(_source(a) for a in x.args) + ")"
    raise TypeError(f"cannot compile {x!r}")


def compile_cas(x):
    """``fn(env, F)`` evaluating ``x``; ``F`` maps names of opaque calls to callables."""
    code = compile(f"lambda env, F: {_source(x)}", "<solver plan>", "eval")
    return eval(code, dict(RUNTIME_GLOBALS))


def constant_calls(exprs):
    """Distinct constant opaque calls (buffer reads, ``resolution()``...) in ``exprs``."""
    found = {}

    def visit(x):
        if isinstance(x, cas.Func) and x.constant:
            found.setdefault(cas.func_key(x), x)
        for child in cas.children(x):
            visit(child)

    for e in exprs:
        visit(e)
    return found


__all__ = ["compile_cas", "constant_calls"]
