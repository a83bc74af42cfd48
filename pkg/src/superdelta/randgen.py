"""Seeded random instances for property tests and the self-test."""
from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

from .graded import EVEN, ODD, Chart, SuperExpr, Variable, invert
from .operators import HALF, DiffOperator, VectorField
from .poisson import EvenPoissonTensor, SymTensor2


def chart_of(n_even: int, n_odd: int, even_names=None, odd_names=None) -> Chart:
    even_names = even_names or (["x", "y", "z", "w"][:n_even] if n_even <= 4 else [f"x{i}" for i in range(n_even)])
    odd_names = odd_names or (["th", "ph", "ch", "ps"][:n_odd] if n_odd <= 4 else [f"t{i}" for i in range(n_odd)])
    return Chart([(n, EVEN) for n in even_names] + [(n, ODD) for n in odd_names])


def _odd_monomials(chart: Chart, parity: int, allowed=None):
    odd = [v.name for v in chart.variables if v.is_odd and (allowed is None or v.name in allowed)]
    out = []
    for k in range(len(odd) + 1):
        if k % 2 == parity:
            out.extend(combinations(odd, k))
    return out


def random_poly(rng: random.Random, chart: Chart, parity: int = EVEN, terms: int = 3, max_deg: int = 2,
                allowed=None, coeff: int = 3, zero_ok: bool = True) -> SuperExpr:
    """Random polynomial of the given parity in the allowed variables."""
    evens = [v.name for v in chart.variables if not v.is_odd and (allowed is None or v.name in allowed)]
    mons = _odd_monomials(chart, parity, allowed)
    total = chart.zero
    if not mons:
        return total
    for _ in range(terms):
        c = rng.randint(-coeff, coeff)
        if c == 0:
            continue
        t = chart.const(c)
        for _ in range(rng.randint(0, max_deg)):
            if evens:
                t = t * chart.var(rng.choice(evens))
        for nm in rng.choice(mons):
            t = t * chart.var(nm)
        total = total + t
    if not zero_ok and total.is_zero():
        return random_poly(rng, chart, parity, terms, max_deg, allowed, coeff, zero_ok)
    return total


def random_rational(rng: random.Random, chart: Chart, parity: int = EVEN, terms: int = 3, max_deg: int = 2,
                    denominators: bool = True) -> SuperExpr:
    num = random_poly(rng, chart, parity, terms, max_deg)
    if not denominators or not num or rng.random() < 0.5:
        return num
    evens = [v.name for v in chart.variables if not v.is_odd]
    if not evens:
        return num
    d = chart.var(rng.choice(evens)) * chart.const(rng.choice([1, 2, -1])) + chart.const(rng.choice([1, 2, 3]))
    return num * invert(d)


def random_invertible(rng: random.Random, chart: Chart, max_deg: int = 2, rational: bool = True) -> SuperExpr:
    """Even expression with nonzero body (a volume density)."""
    while True:
        body = chart.const(rng.choice([1, 2, 3])) + random_poly(rng, chart, EVEN, 2, max_deg)
        if body.body():
            break
    if rational and rng.random() < 0.5:
        evens = [v.name for v in chart.variables if not v.is_odd]
        if evens:
            body = body * invert(chart.var(rng.choice(evens)) + chart.const(rng.choice([1, 2])))
    return body


def random_odd_tensor(rng: random.Random, chart: Chart, terms: int = 2, max_deg: int = 1,
                      density: float = 0.6) -> SymTensor2:
    n = len(chart)
    m = [[chart.zero] * n for _ in range(n)]
    vs = chart.variables
    for i in range(n):
        for j in range(i, n):
            if i == j and vs[i].is_odd:
                continue
            if rng.random() > density:
                continue
            par = (1 + vs[i].parity + vs[j].parity) % 2
            e = random_poly(rng, chart, par, terms, max_deg)
            m[i][j] = e
            m[j][i] = -e if vs[i].parity * vs[j].parity else e
    return SymTensor2(chart, m, ODD)


def random_operator(rng: random.Random, chart: Chart, parity: int, order: int = 2, terms: int = 4,
                    weight=HALF) -> DiffOperator:
    n = len(chart)
    out = DiffOperator.zero(chart, weight)
    for _ in range(terms):
        k = rng.randint(0, order)
        word = tuple(sorted(rng.randrange(n) for _ in range(k)))
        if any(word.count(i) > 1 and chart.variables[i].is_odd for i in word):
            continue
        pw = sum(chart.variables[i].parity for i in word) % 2
        c = random_poly(rng, chart, (parity + pw) % 2, 2, 2)
        if c:
            out = out + DiffOperator(chart, {word: c}, weight)
    return out


def random_field(rng: random.Random, chart: Chart, parity: int, terms: int = 2, max_deg: int = 2,
                 allowed=None) -> VectorField:
    comps = [random_poly(rng, chart, (parity + v.parity) % 2, terms, max_deg, allowed) for v in chart.variables]
    return VectorField(chart, comps)


def lie_poisson(chart: Chart, structure: dict) -> EvenPoissonTensor:
    """{u_i, u_k} = c^m_{ik} u_m from ``{(i, k): {m: c}}`` with chart indices."""
    n = len(chart)
    m = [[chart.zero] * n for _ in range(n)]
    for (i, k), row in structure.items():
        e = chart.zero
        for mm, c in row.items():
            e = e + chart.var(mm).scale(c)
        m[i][k] = e
        m[k][i] = -e
    return EvenPoissonTensor(chart, m)


def random_lie_algebra_3d(rng: random.Random):
    """Structure constants of a random 3-dimensional Lie algebra.

    Uses the semidirect family [e1,e2]=a e2 + b e3, [e1,e3]=c e2 + d e3, [e2,e3]=0,
    which satisfies Jacobi for every (a,b,c,d).
    """
    a, b, c, d = (rng.randint(-2, 2) for _ in range(4))
    perm = rng.sample(range(3), 3)
    e1, e2, e3 = perm
    table = {(e1, e2): {e2: a, e3: b}, (e1, e3): {e2: c, e3: d}}
    return {k: {m: v for m, v in row.items() if v} for k, row in table.items()}


def random_jacobi_P(rng: random.Random, chart: Chart) -> EvenPoissonTensor:
    """Poisson tensor on a 2- or 3-dimensional even chart.

    2-D: any bivector.  3-D: P^{ij} = f eps^{ijk} d_k g, which always satisfies Jacobi.
    """
    n = len(chart)
    if n == 2:
        f = random_poly(rng, chart, EVEN, 3, 2, zero_ok=False)
        return EvenPoissonTensor(chart, [[chart.zero, f], [-f, chart.zero]])
    if n != 3:
        raise ValueError("random Poisson tensors are generated in dimensions 2 and 3")
    f = random_poly(rng, chart, EVEN, 2, 1, zero_ok=False)
    g = random_poly(rng, chart, EVEN, 3, 2, zero_ok=False)
    m = [[chart.zero] * 3 for _ in range(3)]
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        e = f * g.derive(k)
        m[i][j] = e
        m[j][i] = -e
    return EvenPoissonTensor(chart, m)


def random_bivector(rng: random.Random, chart: Chart) -> EvenPoissonTensor:
    n = len(chart)
    m = [[chart.zero] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            e = random_poly(rng, chart, EVEN, 2, 2)
            m[i][j] = e
            m[j][i] = -e
    return EvenPoissonTensor(chart, m)


def primed_chart(chart: Chart, suffix: str = "p") -> Chart:
    taken = {v.name for v in chart.variables}
    out = []
    for v in chart.variables:
        nm = v.name + suffix
        while nm in taken:
            nm += suffix
        taken.add(nm)
        out.append(Variable(nm, v.parity))
    return Chart(out)


def random_change(rng: random.Random, chart: Chart, target: Chart | None = None, max_deg: int = 2,
                  terms: int = 2, linear: bool = False):
    """Random invertible change x -> x' with an explicit inverse.

    In a random variable order, x'_k = g_k * x_k + f_k where f_k, g_k only
    involve earlier variables and g_k is an even expression with constant
    nonzero body; the inverse follows by back-substitution.
    """
    from .transforms import CoordChange
    target = target or primed_chart(chart)
    n = len(chart)
    order = rng.sample(range(n), n)
    fwd = [None] * n
    inv = [None] * n
    earlier: list[str] = []
    for k in order:
        v = chart.variables[k]
        deg = 1 if linear else max_deg
        while True:
            g = chart.const(rng.choice([1, 1, 2, -1, Fraction(1, 2)]))
            if earlier and not linear:
                g = g + random_poly(rng, chart, EVEN, 1, 1, allowed=earlier)
            if g.body():
                break
        f = random_poly(rng, chart, v.parity, terms, deg, allowed=earlier) if earlier else chart.zero
        if linear:
            f = _linear_part(f)
        fwd[k] = g * chart.var(k) + f
        # invert: x_k = (x'_k - f) / g with earlier x expressed in x'
        # later variables do not occur in f, g; map them to zero to satisfy substitute
        sub = {chart.variables[j].name: inv[j] if inv[j] is not None else target.zero for j in range(n)}
        ft = f.subs(sub, target=target) if f else target.zero
        gt = g.subs(sub, target=target)
        inv[k] = (target.var(k) - ft) * invert(gt)
        earlier.append(v.name)
    fmap = {target.variables[i].name: fwd[i] for i in range(n)}
    imap = {chart.variables[i].name: inv[i] for i in range(n)}
    return CoordChange(chart, target, fmap, imap)


def _linear_part(e: SuperExpr) -> SuperExpr:
    chart = e.chart
    total = chart.zero
    for odd, poly in e.numerator_terms():
        for mon, c in poly.terms():
            if sum(mon) + len(odd) == 1:
                t = chart.const(c)
                for nm, ex in zip(chart.even_names, mon):
                    if ex:
                        t = t * chart.var(nm)
                for nm in odd:
                    t = t * chart.var(nm)
                total = total + t
    return total
