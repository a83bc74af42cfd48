"""Odd and even Poisson structures.

The odd bracket of an odd graded-symmetric tensor ``E`` is

    [F, G] = (-1)^{p(a)p(F)} d_a F  E^{ab}  d_b G

so that ``[x^a, x^b] = (-1)^{p(a)} E^{ab}``.  The Jacobi identity is
decided by the canonical even bracket of the quadratic Hamiltonian
``H_E = 1/2 E^{ab} p_b p_a`` with itself on the cotangent chart.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .graded import EVEN, ODD, Chart, GradedError, ParityError, SuperExpr, Variable
from .operators import VectorField
from .superlinalg import SingularError, SuperMatrix, super_inverse


class SymmetryError(GradedError):
    pass


def _sgn(n: int) -> int:
    return -1 if n & 1 else 1


class SymTensor2:
    """Rank-2 contravariant tensor with E^{ab} = (-1)^{p(a)p(b)} E^{ba}."""

    def __init__(self, chart: Chart, entries, parity: int = ODD, check: bool = True):
        self.chart = chart
        self.parity = parity
        self.matrix = SuperMatrix(chart, chart, chart, entries, parity, check=check)
        if check:
            self.check_symmetry()

    @classmethod
    def from_dict(cls, chart: Chart, entries: dict, parity: int = ODD) -> "SymTensor2":
        """Build from ``{(a, b): value}``; missing transposed entries are filled in."""
        n = len(chart)
        m = [[chart.zero] * n for _ in range(n)]
        given = set()
        for (a, b), v in entries.items():
            i, j = chart.index(a), chart.index(b)
            m[i][j] = chart.coerce(v)
            given.add((i, j))
        for i, j in list(given):
            if (j, i) not in given:
                s = _sgn(chart.variables[i].parity * chart.variables[j].parity)
                m[j][i] = m[i][j] if s > 0 else -m[i][j]
        return cls(chart, m, parity)

    @classmethod
    def zero(cls, chart: Chart, parity: int = ODD) -> "SymTensor2":
        n = len(chart)
        return cls(chart, [[chart.zero] * n for _ in range(n)], parity)

    def check_symmetry(self):
        vs = self.chart.variables
        for i in range(len(vs)):
            for j in range(i, len(vs)):
                a, b = self.matrix.entries[i][j], self.matrix.entries[j][i]
                want = b if not (vs[i].parity * vs[j].parity) else -b
                if a != want:
                    raise SymmetryError(f"entries ({vs[i].name},{vs[j].name}) and ({vs[j].name},{vs[i].name})"
                                        f" violate graded symmetry: {a} vs {b}")

    def __getitem__(self, key) -> SuperExpr:
        return self.matrix[key]

    def entry(self, i: int, j: int) -> SuperExpr:
        return self.matrix.entries[i][j]

    @property
    def entries(self):
        return self.matrix.entries

    def __eq__(self, other):
        return isinstance(other, SymTensor2) and self.parity == other.parity and self.matrix == other.matrix

    def __hash__(self):
        return hash(self.matrix)

    def __repr__(self):
        return f"SymTensor2({self.matrix!r})"

    def is_zero(self) -> bool:
        return self.matrix.is_zero()

    def nonzero_entries(self):
        names = [v.name for v in self.chart.variables]
        for i, r in enumerate(self.matrix.entries):
            for j, e in enumerate(r):
                if e:
                    yield names[i], names[j], e

    def inverse(self) -> SuperMatrix:
        """Lower-index inverse e with E^{ac} e_{cb} = delta^a_b."""
        try:
            return super_inverse(self.matrix)
        except SingularError:
            raise SingularError("tensor is degenerate") from None

    def is_invertible(self) -> bool:
        try:
            self.inverse()
            return True
        except SingularError:
            return False

    def map(self, fn) -> "SymTensor2":
        return SymTensor2(self.chart, [[fn(e) for e in r] for r in self.matrix.entries], self.parity)

    def __add__(self, other):
        return SymTensor2(self.chart, [[x + y for x, y in zip(r, s)]
                                       for r, s in zip(self.entries, other.entries)], self.parity)


def darboux_chart(n: int, even_prefix: str = "q", odd_prefix: str = "th") -> Chart:
    names = [(f"{even_prefix}{i + 1}" if n > 1 else even_prefix, EVEN) for i in range(n)]
    names += [(f"{odd_prefix}{i + 1}" if n > 1 else odd_prefix, ODD) for i in range(n)]
    return Chart(names)


def darboux_tensor(chart: Chart) -> SymTensor2:
    """Constant tensor with [q^i, theta_j] = delta^i_j, in the chart's order."""
    ev = [i for i, v in enumerate(chart.variables) if not v.is_odd]
    od = [i for i, v in enumerate(chart.variables) if v.is_odd]
    if len(ev) != len(od):
        raise ValueError("Darboux form needs an n|n chart")
    n = len(chart)
    m = [[chart.zero] * n for _ in range(n)]
    for i, j in zip(ev, od):
        m[i][j] = chart.one
        m[j][i] = chart.one
    return SymTensor2(chart, m, ODD)


# ---------------------------------------------------------------------------
# brackets

def _par(e: SuperExpr) -> int:
    p = e.parity
    return p or 0


def bracket(E: SymTensor2, F: SuperExpr, G: SuperExpr) -> SuperExpr:
    chart = E.chart
    F, G = chart.coerce(F), chart.coerce(G)
    if not F or not G:
        return chart.zero
    pf = _par(F)
    dF = [F.derive(i) for i in range(len(chart))]
    dG = [G.derive(i) for i in range(len(chart))]
    total = chart.zero
    for a, fa in enumerate(dF):
        if not fa:
            continue
        if chart.variables[a].parity * pf:
            fa = -fa
        for b, gb in enumerate(dG):
            e = E.entry(a, b)
            if e and gb:
                total = total + fa * e * gb
    return total


def momentum_names(chart: Chart) -> list[str]:
    taken = {v.name for v in chart.variables}
    out = []
    for v in chart.variables:
        nm = f"p_{v.name}"
        while nm in taken:
            nm = "p" + nm
        taken.add(nm)
        out.append(nm)
    return out


@dataclass(frozen=True)
class HamiltonianLift:
    """Cotangent chart (x^a, p_a) with p(p_a) = p(x^a) and the lift H_E."""
    base: Chart
    chart: Chart
    hamiltonian: SuperExpr

    @property
    def n(self) -> int:
        return len(self.base)

    def momentum(self, a) -> SuperExpr:
        return self.chart.var(self.n + self.base.index(a))


def cotangent_chart(chart: Chart) -> Chart:
    extra = [Variable(nm, v.parity) for nm, v in zip(momentum_names(chart), chart.variables)]
    return chart.extend(extra, name=f"T*{chart.name}" if chart.name else "")


def hamiltonian_lift(E: SymTensor2) -> HamiltonianLift:
    base = E.chart
    big = cotangent_chart(base)
    n = len(base)
    h = big.zero
    for a in range(n):
        for b in range(n):
            e = E.entry(a, b)
            if e:
                h = h + big.coerce(e) * big.var(n + b) * big.var(n + a)
    return HamiltonianLift(base, big, h.scale(Fraction(1, 2)))


def canonical_even_bracket(lift_chart: Chart, n: int, F: SuperExpr, G: SuperExpr) -> SuperExpr:
    """(F,G) on the cotangent chart whose first ``n`` variables are x^a and last ``n`` are p_a."""
    total = lift_chart.zero
    pf = _par(F)
    for a in range(n):
        pa = lift_chart.variables[a].parity
        t1 = F.derive(n + a) * G.derive(a)
        t2 = F.derive(a) * G.derive(n + a)
        term = t1 - t2 if not pa else t1 + t2
        if pa * (pf + 1) & 1:
            term = -term
        total = total + term
    return total


def jacobi_residual(E: SymTensor2) -> SuperExpr:
    """(H_E, H_E) on the cotangent chart; zero iff E is an odd Poisson tensor."""
    lift = hamiltonian_lift(E)
    return canonical_even_bracket(lift.chart, lift.n, lift.hamiltonian, lift.hamiltonian)


def jacobi_cyclic_tensor(E: SymTensor2) -> dict[tuple[int, int, int], SuperExpr]:
    """Components of (-1)^{p(a)(p(c)+1)} E^{ap} d_p E^{bc} + cyclic permutations."""
    chart = E.chart
    n = len(chart)
    par = [v.parity for v in chart.variables]
    dE = {}

    def d(p, b, c):
        key = (p, b, c)
        if key not in dE:
            dE[key] = E.entry(b, c).derive(p)
        return dE[key]

    def piece(a, b, c):
        s = chart.zero
        for p in range(n):
            e = E.entry(a, p)
            if e:
                de = d(p, b, c)
                if de:
                    s = s + e * de
        return -s if par[a] * (par[c] + 1) & 1 else s

    out = {}
    for a in range(n):
        for b in range(n):
            for c in range(n):
                t = piece(a, b, c) + piece(b, c, a) + piece(c, a, b)
                if t:
                    out[(a, b, c)] = t
    return out


def jacobi_cyclic_contracted(E: SymTensor2) -> SuperExpr:
    """1/3 sum (-1)^{p(a)p(c)} T^{abc} p_c p_b p_a for the cyclic tensor T.

    With this normalization it coincides with (H_E, H_E) identically.
    """
    big = cotangent_chart(E.chart)
    n = len(E.chart)
    par = [v.parity for v in E.chart.variables]
    total = big.zero
    for (a, b, c), t in jacobi_cyclic_tensor(E).items():
        term = big.coerce(t) * big.var(n + c) * big.var(n + b) * big.var(n + a)
        total = total - term if par[a] * par[c] else total + term
    return total.scale(Fraction(1, 3))


def is_odd_poisson(E: SymTensor2) -> bool:
    return jacobi_residual(E).is_zero()


# ---------------------------------------------------------------------------
# Hamiltonian and Poisson vector fields

def hamiltonian_field(E: SymTensor2, F: SuperExpr) -> VectorField:
    """D_F with components (-1)^{p(a)p(F)} E^{ab} d_b F.

    This is the first-order part of the commutator [Delta, F] for any
    Delta with principal symbol E, and D_F(G) = (-1)^{p(F)} [F, G].
    """
    chart = E.chart
    F = chart.coerce(F)
    pf = _par(F)
    dF = [F.derive(b) for b in range(len(chart))]
    comps = []
    for a in range(len(chart)):
        s = chart.zero
        for b, fb in enumerate(dF):
            e = E.entry(a, b)
            if e and fb:
                s = s + e * fb
        comps.append(-s if chart.variables[a].parity * pf else s)
    return VectorField(chart, comps)


def is_casimir(E: SymTensor2, F: SuperExpr) -> bool:
    return hamiltonian_field(E, F).is_zero()


def poisson_field_defect(E: SymTensor2, X: VectorField) -> dict[tuple[str, str], SuperExpr]:
    """Failure of X to be a derivation of the bracket, on coordinate pairs.

    X[x^a, x^b] - [X x^a, x^b] - (-1)^{p(X)(p(a)+1)} [x^a, X x^b]; since both
    sides are biderivations this vanishes iff the Lie derivative of E along X does.
    """
    chart = E.chart
    px = X.parity or 0
    xs = chart.vars()
    out = {}
    for a, xa in enumerate(xs):
        for b, xb in enumerate(xs):
            t = X(bracket(E, xa, xb)) - bracket(E, X.components[a], xb)
            u = bracket(E, xa, X.components[b])
            t = t - u if not (px * (chart.variables[a].parity + 1) & 1) else t + u
            if t:
                out[(chart.variables[a].name, chart.variables[b].name)] = t
    return out


def poisson_field_check(E: SymTensor2, X: VectorField) -> bool:
    return not poisson_field_defect(E, X)


# ---------------------------------------------------------------------------
# even Poisson tensors

class EvenPoissonTensor:
    """Antisymmetric P^{ij} on a purely even chart; {F,G} = d_i F P^{ij} d_j G."""

    def __init__(self, chart: Chart, entries):
        if chart.odd_names:
            raise ParityError("even Poisson tensors live on purely even charts")
        self.chart = chart
        n = len(chart)
        self.entries = tuple(tuple(chart.coerce(e) for e in r) for r in entries)
        for i in range(n):
            for j in range(n):
                if self.entries[i][j] != -self.entries[j][i]:
                    raise SymmetryError(f"P is not antisymmetric at ({i},{j})")

    @classmethod
    def from_dict(cls, chart: Chart, entries: dict) -> "EvenPoissonTensor":
        n = len(chart)
        m = [[chart.zero] * n for _ in range(n)]
        for (a, b), v in entries.items():
            i, j = chart.index(a), chart.index(b)
            m[i][j] = chart.coerce(v)
            m[j][i] = -m[i][j]
        return cls(chart, m)

    def entry(self, i, j) -> SuperExpr:
        return self.entries[i][j]

    def __repr__(self):
        return f"EvenPoissonTensor({self.entries})"

    def bracket(self, F: SuperExpr, G: SuperExpr) -> SuperExpr:
        n = len(self.chart)
        total = self.chart.zero
        for i in range(n):
            fi = F.derive(i)
            if not fi:
                continue
            for j in range(n):
                p = self.entries[i][j]
                if p:
                    total = total + fi * p * G.derive(j)
        return total

    def hamiltonian_field(self, F: SuperExpr) -> VectorField:
        """D_F with D_F G = {F, G}."""
        n = len(self.chart)
        comps = []
        for j in range(n):
            s = self.chart.zero
            for i in range(n):
                p = self.entries[i][j]
                if p:
                    s = s + F.derive(i) * p
            comps.append(s)
        return VectorField(self.chart, comps)

    def jacobi_tensor(self) -> dict[tuple[int, int, int], SuperExpr]:
        """Nonzero components of P^{il} d_l P^{jk} + cyclic."""
        n = len(self.chart)

        def piece(i, j, k):
            s = self.chart.zero
            for l in range(n):
                p = self.entries[i][l]
                if p:
                    s = s + p * self.entries[j][k].derive(l)
            return s

        out = {}
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    t = piece(i, j, k) + piece(j, k, i) + piece(k, i, j)
                    if t:
                        out[(i, j, k)] = t
        return out

    def is_poisson(self) -> bool:
        return not self.jacobi_tensor()
