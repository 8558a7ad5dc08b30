"""Inference of the linear ODE satisfied by a postsynaptic kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import symbolic as cas

SAMPLE_STEP = 0.5
EXTRA_TIMES = 8
EXTRA_DRAWS = 3
TOLERANCE = 1e-9
SEED = 1729


class NotLinearKernel(Exception):
    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


class SingularSample(NotLinearKernel):
    pass


@dataclass(frozen=True)
class Root:
    """One exponential rate of the kernel with the polynomial weights in front of it.

    The kernel contains ``sum_n betas[n] * t**n * exp(value * t)``.
    """

    value: cas.Expr
    betas: tuple

    @property
    def multiplicity(self) -> int:
        return len(self.betas)

    def chain_increments(self):
        """Initial values of a Jordan chain whose last slot reproduces this root's part."""
        mu = self.multiplicity
        return tuple(cas.mul(math.factorial(mu - 1 - j), self.betas[mu - 1 - j])
                     for j in range(mu))


@dataclass(frozen=True)
class KernelOde:
    order: int
    coefficients: tuple          # c_0 .. c_{m-1}: k^(m) = sum c_i k^(i)
    initial_conditions: tuple    # k(0), k'(0), ..., k^(m-1)(0)
    roots: tuple                 # Root, in canonical order


def _parameters(kernel, t):
    names = sorted(cas.free_symbols(kernel) - {t})
    calls = sorted({cas.func_key(f) for f in _constant_calls(kernel)})
    return names + calls


def _constant_calls(x):
    if isinstance(x, cas.Func) and x.constant:
        yield x
    for c in cas.children(x):
        yield from _constant_calls(c)


def _draw(names, rng):
    env = {"E": math.e}
    for n in names:
        if n != "E":
            env[n] = rng.uniform(0.5, 3.0)
    return env


def numeric_order(kernel, max_order=5, t="t", seed=SEED):
    """Smallest order passing the sampled linear-dependence test, with its coefficients.

    Coefficients are returned for the first parameter draw; this is the
    independent check against which the symbolic result is compared.
    """
    rng = np.random.default_rng(seed)
    names = _parameters(kernel, t)
    draws = [_draw(names, rng) for _ in range(1 + EXTRA_DRAWS)]
    derivs = [kernel]
    for m in range(1, max_order + 1):
        derivs.append(cas.diff(derivs[-1], t))
        coeffs = None
        ok = True
        for k, env in enumerate(draws):
            c = _solve_coefficients(derivs, m, env, t, rng)
            if k == 0:
                coeffs = c
            extra = rng.uniform(0.2, 5.0, EXTRA_TIMES)
            if not _verify(derivs, m, c, env, t, extra):
                ok = False
                break
        if ok:
            return m, coeffs
    raise NotLinearKernel(f"no linear ODE of order <= {max_order} reproduces the kernel")


def _values(derivs, env, t, at):
    env = dict(env)
    env[t] = at
    return [cas.evaluate(d, env) for d in derivs]


def _solve_coefficients(derivs, m, env, t, rng):
    times = SAMPLE_STEP * np.arange(1, m + 1)
    for _ in range(3):
        rows = [_values(derivs, env, t, float(s)) for s in times]
        M = np.array([r[:m] for r in rows])
        b = np.array([r[m] for r in rows])
        if np.all(np.isfinite(M)) and np.linalg.cond(M) < 1e12:
            return np.linalg.solve(M, b)
        times = np.sort(rng.uniform(0.2, 5.0, m))
    raise SingularSample("sample matrix singular for three sample-time draws")


def _verify(derivs, m, coeffs, env, t, times):
    for s in times:
        vals = _values(derivs, env, t, float(s))
        lhs = vals[m]
        terms = [c * v for c, v in zip(coeffs, vals[:m])]
        scale = max(abs(lhs), sum(abs(x) for x in terms), 1e-300)
        if not math.isfinite(lhs) or abs(lhs - sum(terms)) > TOLERANCE * scale:
            return False
    return True


def exp_poly_roots(kernel, t="t"):
    """Decompose ``kernel`` as a sum of ``beta * t**n * exp(a * t)`` terms."""
    roots = {}
    expanded = cas.expand(kernel)
    terms = expanded.terms if isinstance(expanded, cas.Add) else (expanded,)
    for term in terms:
        factors = term.factors if isinstance(term, cas.Mul) else (term,)
        n = 0
        rate = cas.ZERO
        coeff = []
        for f in factors:
            if f == cas.Sym(t):
                n += 1
            elif isinstance(f, cas.Pow) and f.base == cas.Sym(t) and \
                    isinstance(f.exponent, cas.Num) and f.exponent.value.denominator == 1 \
                    and f.exponent.value > 0:
                n += int(f.exponent.value)
            elif isinstance(f, cas.Func) and f.name == "exp" and not f.constant:
                arg = cas.expand(f.args[0])
                slope = cas.diff(arg, t)
                if cas.depends_on(slope, t):
                    raise NotLinearKernel("exponent is not linear in t")
                rate = cas.add(rate, slope)
                coeff.append(cas.exp(cas.subs(arg, {t: 0})))
            elif cas.depends_on(f, t):
                raise NotLinearKernel("kernel is not an exponential polynomial in t")
            else:
                coeff.append(f)
        betas = roots.setdefault(rate, {})
        betas[n] = cas.add(betas.get(n, cas.ZERO), cas.mul(*coeff))
    out = []
    for rate in sorted(roots, key=lambda r: r.key()):
        betas = roots[rate]
        betas = {n: b for n, b in betas.items() if not cas.is_zero(b)}
        if not betas:
            continue
        mu = max(betas) + 1
        out.append(Root(rate, tuple(betas.get(n, cas.ZERO) for n in range(mu))))
    return tuple(out)


def characteristic_coefficients(roots):
    """c_0..c_{m-1} with prod (x - a)**mu = x**m - sum c_i x**i."""
    x = "x__char"
    poly = cas.ONE
    for root in roots:
        for _ in range(root.multiplicity):
            poly = cas.expand(cas.mul(poly, cas.add(cas.sym(x), cas.mul(-1, root.value))))
    m = sum(r.multiplicity for r in roots)
    coeffs = [cas.ZERO] * (m + 1)
    terms = poly.terms if isinstance(poly, cas.Add) else (poly,)
    for term in terms:
        power = 0
        rest = []
        for f in (term.factors if isinstance(term, cas.Mul) else (term,)):
            if f == cas.Sym(x):
                power += 1
            elif isinstance(f, cas.Pow) and f.base == cas.Sym(x):
                power += int(f.exponent.value)
            else:
                rest.append(f)
        coeffs[power] = cas.add(coeffs[power], cas.mul(*rest))
    return tuple(cas.mul(-1, c) for c in coeffs[:m])


def shape_to_ode(kernel, max_order=5, t="t") -> KernelOde:
    """Linear constant-coefficient ODE of smallest order reproducing ``kernel``.

    Raises NotLinearKernel (or its subclass SingularSample).
    """
    order, numeric = numeric_order(kernel, max_order, t)
    roots = exp_poly_roots(kernel, t)
    if sum(r.multiplicity for r in roots) != order:
        raise NotLinearKernel("kernel structure disagrees with the sampled order")
    coefficients = characteristic_coefficients(roots)
    env = _draw(_parameters(kernel, t), np.random.default_rng(SEED))
    for sym_c, num_c in zip(coefficients, numeric):
        value = cas.evaluate(sym_c, env)
        if abs(value - num_c) > 1e-6 * max(1.0, abs(value)):
            raise NotLinearKernel("symbolic and sampled coefficients disagree")
    initial = []
    d = kernel
    for _ in range(order):
        initial.append(cas.subs(d, {t: 0}))
        d = cas.diff(d, t)
    return KernelOde(order, coefficients, tuple(initial), roots)


__all__ = ["KernelOde", "Root", "NotLinearKernel", "SingularSample", "shape_to_ode",
           "numeric_order", "exp_poly_roots", "characteristic_coefficients"]
