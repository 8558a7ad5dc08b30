"""Closed-form matrix exponential of an acyclic (triangularizable) system matrix.

Write A = D + N with D diagonal and N the couplings.  When the coupling
graph has no cycles, every entry of exp(A h) is a sum over coupling paths
from the column slot to the row slot: the product of the edge weights times
the divided difference of ``x -> exp(x h)`` taken over the diagonal entries
met along the path.  Divided differences over repeated nodes become the
confluent limits ``h**r / r! * exp(a h)``, which covers Jordan chains.

The diagonal exponentials are referred to by placeholder symbols (the
names of the diagonal P entries), so an off-diagonal entry reads like
``(P33 - P11) / C_m / (1 / tau_in - 1 / Tau)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import symbolic as cas


class SymbolicFailure(Exception):
    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


@dataclass
class PropagatorMatrix:
    h: str
    entries: list           # entries[i][j], in terms of the diagonal placeholders
    diagonal: dict          # placeholder name -> exp(a * h)
    names: list             # names[i][j]: P-name for entry i, j

    @property
    def size(self):
        return len(self.entries)

    def explicit(self, i, j):
        """Entry with the diagonal placeholders replaced by their exponentials."""
        return cas.subs(self.entries[i][j], self.diagonal)


def p_name(i, j, n):
    return f"P{i + 1}{j + 1}" if n < 10 else f"P{i + 1}_{j + 1}"


def _paths(A, n):
    """For every (row, col), the list of coupling paths col -> ... -> row."""
    succ = {j: [i for i in range(n) if i != j and not cas.is_zero(A[i][j])] for j in range(n)}
    state = {}

    def visit(v):
        if state.get(v) == 1:
            raise SymbolicFailure("the coupling graph has a cycle")
        if state.get(v) == 2:
            return
        state[v] = 1
        for w in succ[v]:
            visit(w)
        state[v] = 2

    for v in range(n):
        visit(v)

    paths = {}

    def walk(path):
        paths.setdefault((path[-1], path[0]), []).append(tuple(path))
        for w in succ[path[-1]]:
            walk(path + [w])

    for j in range(n):
        walk([j])
    return paths


def _draws(exprs, count=3, seed=4242):
    names = sorted(set().union(*(cas.free_symbols(e) for e in exprs)) if exprs else ())
    rng = np.random.default_rng(seed)
    draws = [{n: rng.uniform(0.5, 3.0) for n in names} for _ in range(count)]
    for d in draws:
        if "E" in d:
            d["E"] = math.e
    return draws


def symbolic_expm_triangular(A, h="h", taken=()) -> PropagatorMatrix:
    """Symbolic exp(A h).  ``taken`` are names the P entries must avoid.

    Raises SymbolicFailure when the coupling graph is cyclic or when two
    diagonal entries differ structurally but coincide numerically.
    """
    n = len(A)
    taken = set(taken)
    names = [[_free_name(p_name(i, j, n), taken) for j in range(n)] for i in range(n)]
    hs = cas.sym(h)
    diag = [A[i][i] for i in range(n)]

    placeholder = {}
    diagonal = {}
    for i, a in enumerate(diag):
        if cas.is_zero(a) or a in placeholder:
            continue
        placeholder[a] = cas.sym(names[i][i])
        diagonal[names[i][i]] = cas.exp(cas.mul(a, hs))

    def E(a):
        return cas.ONE if cas.is_zero(a) else placeholder[a]

    checked = {}

    def difference(a, b):
        d = cas.add(a, cas.mul(-1, b))
        key = (a.key(), b.key())
        if key not in checked:
            if cas.is_zero(d):
                checked[key] = True
            else:
                env = _draws([a, b])
                checked[key] = all(abs(cas.evaluate(d, e)) <= 1e-12 * max(
                    abs(cas.evaluate(a, e)), abs(cas.evaluate(b, e)), 1e-300) for e in env)
            if checked[key] and not cas.is_zero(d):
                raise SymbolicFailure(
                    "diagonal entries differ structurally but agree numerically")
        return d

    @lru_cache(maxsize=None)
    def dd(nodes):
        """Divided difference of exp(x h) over a tuple of diagonal indices."""
        values = [diag[k] for k in nodes]
        first = values[0]
        other = next((k for k, v in zip(nodes, values) if v != first), None)
        if other is None:
            r = len(nodes) - 1
            return cas.mul(cas.const(1) / math.factorial(r), cas.power(hs, r), E(first)) \
                if r else E(first)
        without_other = list(nodes)
        without_other.remove(other)
        d = difference(first, diag[other])
        return cas.mul(cas.add(dd(tuple(without_other)), cas.mul(-1, dd(nodes[1:]))),
                       cas.power(d, -1))

    paths = _paths(A, n)
    entries = [[cas.ZERO] * n for _ in range(n)]
    for (i, j), group in paths.items():
        if i == j:
            entries[i][i] = E(diag[i])
            continue
        total = []
        for path in group:
            weight = cas.mul(*(A[path[k + 1]][path[k]] for k in range(len(path) - 1)))
            total.append(cas.mul(weight, dd(tuple(reversed(path)))))
        entries[i][j] = cas.add(*total)
    return PropagatorMatrix(h, entries, diagonal, names)


def _free_name(name, taken):
    while name in taken:
        name += "__p"
    return name


__all__ = ["PropagatorMatrix", "SymbolicFailure", "symbolic_expm_triangular", "p_name"]
