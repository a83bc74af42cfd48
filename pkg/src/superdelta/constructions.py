"""Geometric constructions of odd Poisson structures.

* the Koszul lift of an even Poisson tensor to Pi TM, with the coordinate volume;
* the odd-time structure on N x Pi R built from an odd vector field on N;
* tangent lifts of form-valued vector fields and the Nijenhuis bracket.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .graded import EVEN, ODD, Chart, GradedError, ParityError, SuperExpr, Variable
from .laplacian import ConsistencyError, delta_square, from_potential, modular_field
from .operators import (HALF, DiffOperator, VectorField, field_bracket, field_of, lie_derivative,
                        principal_symbol)
from .poisson import EvenPoissonTensor, SymTensor2, hamiltonian_field, jacobi_residual


def _fresh(name: str, taken: set) -> str:
    while name in taken:
        name += "_"
    taken.add(name)
    return name


# ---------------------------------------------------------------------------
# Pi TM

class PiTangentChart:
    """Base coordinates x^i followed by fiber coordinates dx^i of opposite parity."""

    def __init__(self, base: Chart, prefix: str = "d"):
        self.base = base
        taken = {v.name for v in base.variables}
        fib = [Variable(_fresh(prefix + v.name, taken), 1 - v.parity) for v in base.variables]
        self.chart = base.extend(fib, name=f"PiT({base.name})" if base.name else "")
        self.n = len(base)

    def x(self, i) -> SuperExpr:
        return self.chart.var(self.base.index(i))

    def dx(self, i) -> SuperExpr:
        return self.chart.var(self.n + self.base.index(i))

    def fiber_index(self, i) -> int:
        return self.n + self.base.index(i)

    def differential(self) -> VectorField:
        """d = dx^k d/dx^k."""
        c = self.chart
        comps = [self.dx(k) for k in range(self.n)] + [c.zero] * self.n
        return VectorField(c, comps)

    def d(self, f) -> SuperExpr:
        return self.differential()(self.chart.coerce(f))


def koszul_lift(P: EvenPoissonTensor, pit: PiTangentChart | None = None) -> SymTensor2:
    """Odd tensor on Pi TM with blocks [[0, -P], [P, dx^k d_k P]]."""
    pit = pit or PiTangentChart(P.chart)
    c = pit.chart
    n = pit.n
    m = [[c.zero] * (2 * n) for _ in range(2 * n)]
    for i in range(n):
        for j in range(n):
            p = P.entry(i, j)
            if not p:
                continue
            p = c.coerce(p)
            m[i][n + j] = -p
            m[n + i][j] = p
            m[n + i][n + j] = pit.d(p)
    return SymTensor2(c, m, ODD)


@dataclass
class KoszulReport:
    jacobi_even: bool
    jacobi_odd: bool
    delta_square_zero: bool
    modular_field_zero: bool
    delta: DiffOperator = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.jacobi_even and self.jacobi_odd and self.delta_square_zero and self.modular_field_zero


def koszul_delta_check(P: EvenPoissonTensor) -> KoszulReport:
    """Build Delta on half-densities on Pi TM for the coordinate volume |D(x, dx)|.

    The potential of that volume vanishes in (x, dx), so Delta = from_potential(E_P, 0).
    """
    pit = PiTangentChart(P.chart)
    E = koszul_lift(P, pit)
    delta = from_potential(E, 0)
    even_ok = P.is_poisson()
    odd_ok = jacobi_residual(E).is_zero()
    sq = delta_square(delta)
    mf_zero = False
    if odd_ok:
        mf_zero = modular_field(delta).is_zero()
    return KoszulReport(even_ok, odd_ok, sq.is_zero(), mf_zero, delta)


# ---------------------------------------------------------------------------
# odd time

@dataclass
class OddTimeStructure:
    chart: Chart
    tau: int
    eta: VectorField          # on the base chart
    tensor: SymTensor2
    delta: DiffOperator

    def lift_field(self, X: VectorField) -> VectorField:
        """Base field viewed on N x Pi R (no d/dtau component)."""
        c = self.chart
        return VectorField(c, [c.coerce(x) for x in X.components] + [c.zero])


def odd_time_chart(base: Chart, name: str = "tau") -> Chart:
    taken = {v.name for v in base.variables}
    return base.extend([Variable(_fresh(name, taken), ODD)])


def odd_time_structure(eta: VectorField) -> OddTimeStructure:
    """Delta = 1/2 (L_A L_B + L_B L_A) with A = tau*eta, B = d/dtau."""
    if eta.parity == EVEN:
        raise ParityError("the odd-time construction needs an odd vector field")
    base = eta.chart
    c = odd_time_chart(base)
    t = len(base)
    tau = c.var(t)
    A = VectorField(c, [tau * c.coerce(x) for x in eta.components] + [c.zero])
    B = VectorField(c, [c.zero] * t + [c.one])
    la, lb = lie_derivative(A), lie_derivative(B)
    delta = (la * lb + lb * la).scale(HALF)
    E = principal_symbol(delta, order=2)
    return OddTimeStructure(c, t, eta, SymTensor2(c, E.matrix.entries, ODD), delta)


def odd_time_tensor(eta: VectorField) -> SymTensor2:
    """The tensor with {x^a, tau} = tau eta^a and all other generator brackets zero."""
    base = eta.chart
    c = odd_time_chart(base)
    t = len(base)
    tau = c.var(t)
    m = [[c.zero] * (t + 1) for _ in range(t + 1)]
    for a, v in enumerate(base.variables):
        br = tau * c.coerce(eta.components[a])
        # E^{ab} = (-1)^{p(a)} {x^a, x^b}
        m[a][t] = -br if v.is_odd else br
        m[t][a] = br
    return SymTensor2(c, m, ODD)


def self_bracket(eta: VectorField) -> VectorField:
    """[eta, eta] read off from the commutator of first-order operators (2 eta o eta)."""
    op = eta.operator(0)
    sq = (op * op).scale(2)
    if sq.order() > 1:
        raise ConsistencyError("second-order part of the self-commutator does not cancel")
    return field_of(sq)


def odd_time_modular_field(eta: VectorField) -> VectorField:
    """1/8 [eta, eta] on the base."""
    return self_bracket(eta).scale(HALF * HALF * HALF)


@dataclass
class Nontriviality:
    nontrivial: bool
    certificate: tuple[str, SuperExpr] | None


def odd_time_nontriviality(eta: VectorField) -> Nontriviality:
    """Nonzero 1/8[eta, eta] gives a nontrivial modular class.

    Hamiltonian fields of the odd-time bracket lie in the ideal (tau), while
    the modular field is tau-free; the certificate is a nonzero tau-free
    component.
    """
    if eta.parity == EVEN:
        raise ParityError("the odd-time construction needs an odd vector field")
    X = odd_time_modular_field(eta)
    chart = odd_time_chart(eta.chart)
    tname = chart.variables[-1].name
    for v, comp in zip(eta.chart.variables, X.components):
        if not comp:
            continue
        lifted = chart.coerce(comp)
        if not lifted.derive(tname).is_zero():
            raise ConsistencyError("modular field component depends on the odd time")
        return Nontriviality(True, (v.name, comp))
    return Nontriviality(False, None)


def in_tau_ideal(s: OddTimeStructure, f: SuperExpr) -> bool:
    """f vanishes when tau = 0."""
    c = s.chart
    tname = c.variables[s.tau].name
    return f.subs({tname: c.zero}).is_zero()


def hamiltonian_in_tau_ideal(s: OddTimeStructure, F: SuperExpr) -> bool:
    D = hamiltonian_field(s.tensor, s.chart.coerce(F))
    return all(in_tau_ideal(s, x) for x in D.components)


# ---------------------------------------------------------------------------
# form-valued vector fields and the Nijenhuis bracket

class FormValuedField:
    """X = X^i(x, dx) d/dx^i on a base chart, with coefficients on Pi TM."""

    def __init__(self, pit: PiTangentChart, components, parity: int | None = None):
        c = pit.chart
        comps = [c.coerce(x) for x in components]
        if len(comps) != pit.n:
            raise ValueError(f"expected {pit.n} components, got {len(comps)}")
        par = None
        for v, x in zip(pit.base.variables, comps):
            if not x:
                continue
            p = (x.parity + v.parity) % 2
            if par is None:
                par = p
            elif par != p:
                raise ParityError("form-valued field is not homogeneous")
        if parity is not None and par is not None and parity != par:
            raise ParityError("declared parity does not match the components")
        self.pit = pit
        self.components = comps
        self.parity = par if par is not None else (parity if parity is not None else EVEN)

    @classmethod
    def from_matrix(cls, pit: PiTangentChart, rows) -> "FormValuedField":
        """X = dx^j X^i_j d_i from ``rows[j][i] = X^i_j(x)``."""
        c = pit.chart
        comps = [c.zero] * pit.n
        for j, row in enumerate(rows):
            for i, x in enumerate(row):
                if x:
                    comps[i] = comps[i] + pit.dx(j) * c.coerce(x)
        return cls(pit, comps)

    def __eq__(self, other):
        return isinstance(other, FormValuedField) and self.components == other.components

    __hash__ = None

    def is_zero(self) -> bool:
        return all(not x for x in self.components)

    def __str__(self):
        names = [v.name for v in self.pit.base.variables]
        parts = [f"({c})*d_{names[i]}" for i, c in enumerate(self.components) if c]
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"FormValuedField({self})"


def tangent_lift(X: FormValuedField) -> VectorField:
    """X^i d_i + (-1)^{p(X)} d(X^i) d/d(dx^i)."""
    pit = X.pit
    fib = [pit.d(x) if x else pit.chart.zero for x in X.components]
    if X.parity:
        fib = [-f for f in fib]
    return VectorField(pit.chart, list(X.components) + fib)


def project(pit: PiTangentChart, V: VectorField) -> FormValuedField:
    """Inverse of tangent_lift; raises if V is not a lift."""
    X = FormValuedField(pit, V.components[:pit.n])
    if tangent_lift(X) != V:
        raise ConsistencyError("vector field on Pi TM is not the lift of a form-valued field")
    return X


def nijenhuis_bracket(X: FormValuedField, Y: FormValuedField) -> FormValuedField:
    if X.pit.chart != Y.pit.chart:
        raise GradedError("form-valued fields live on different charts")
    return project(X.pit, field_bracket(tangent_lift(X), tangent_lift(Y)))


def commutes_with_d(V: VectorField, pit: PiTangentChart) -> bool:
    return field_bracket(V, pit.differential()).is_zero()


def nijenhuis_square_formula(pit: PiTangentChart, rows) -> FormValuedField:
    """2 dx^j dx^r (X^m_j d_m X^i_r + d_r X^m_j X^i_m) d_i for X = dx^j X^i_j d_i."""
    c = pit.chart
    n = pit.n
    X = [[c.coerce(rows[j][i]) for i in range(n)] for j in range(n)]
    comps = []
    for i in range(n):
        s = c.zero
        for j in range(n):
            for r in range(n):
                inner = c.zero
                for m in range(n):
                    inner = inner + X[j][m] * X[r][i].derive(m) + X[j][m].derive(r) * X[m][i]
                if inner:
                    s = s + pit.dx(j) * pit.dx(r) * inner
        comps.append(s.scale(2))
    return FormValuedField(pit, comps)
