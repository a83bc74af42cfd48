"""Second-order self-adjoint operators with a prescribed principal symbol.

Every such operator on half-densities has the local form

    Delta = 1/2 sum_{a,b} (-1)^{p(b)(p(S)+1)} d_b o S^{ba} o d_a  +  1/2 U

where ``S`` is the principal symbol and ``U`` (the potential) is a scalar.
For an odd tensor the sign is trivial and this expands to
``1/2 (E^{ab} d_b d_a + d_b E^{ba} d_a + U)``.  Volume forms enter only
through log-derivatives ``d_a rho / rho``; square roots are never formed.
"""
from __future__ import annotations

from fractions import Fraction

from .graded import ODD, GradedError, ParityError, SuperExpr, invert, sum_exprs
from .operators import (HALF, DiffOperator, VectorField, _compose_terms, _left_partial,
                        compose, conjugate, field_of, lie_derivative, log_gradient)
from .poisson import EvenPoissonTensor, SymTensor2, bracket, hamiltonian_field, jacobi_residual

QUARTER = Fraction(1, 4)


class NotPoissonError(GradedError):
    """Raised when an operation needs the Jacobi identity and it fails."""


class ConsistencyError(GradedError):
    """An internal cross-check between two routes failed."""


def _par(e) -> int:
    return e.parity or 0


def _divergence_form(S: SymTensor2, weight_fn=None, weight=HALF) -> dict:
    """Terms of sum (-1)^{p(b)(p(S)+1)} d_b o (w S^{ba}) o d_a, w = weight_fn or 1."""
    chart = S.chart
    n = len(chart)
    out: dict = {}
    for a in range(n):
        for b in range(n):
            s = S.entry(b, a)
            if not s:
                continue
            if weight_fn is not None:
                s = weight_fn * s
            inner = {(a,): s}
            t = _left_partial(b, inner, chart)
            neg = chart.variables[b].parity * (S.parity + 1) & 1
            for w, c in t.items():
                c = -c if neg else c
                old = out.get(w)
                out[w] = c if old is None else old + c
    return {w: c for w, c in out.items() if c}


def from_potential(S: SymTensor2, U) -> DiffOperator:
    chart = S.chart
    U = chart.coerce(U)
    if U and U.parity != S.parity:
        raise ParityError("potential parity must match the tensor parity")
    terms = _divergence_form(S)
    if U:
        terms[()] = terms.get((), chart.zero) + U
    op = DiffOperator(chart, {}, HALF)
    op = DiffOperator(chart, terms, HALF) if terms else op
    return op.scale(HALF)


def potential_of(delta: DiffOperator) -> SuperExpr:
    """U with delta = from_potential(symbol, U); checks that delta has that form."""
    from .operators import principal_symbol
    S = principal_symbol(delta, 2)
    base = from_potential(S, 0)
    diff = delta - base
    if diff.order() > 0:
        raise ConsistencyError("operator is not of the canonical self-adjoint form")
    return diff.free_term().scale(2)


# ---------------------------------------------------------------------------
# potentials from a volume form or a connection

def potential_from_volume(S: SymTensor2, rho) -> SuperExpr:
    """U = -1/2 d_a(S^{ab} l_b) - 1/4 l_a S^{ab} l_b with l = d(rho)/rho."""
    rho = S.chart.coerce(rho)
    ell = log_gradient(rho)
    return _potential_from_covector(S, ell, Fraction(-1, 2), Fraction(-1, 4))


def potential_from_connection(S: SymTensor2, gamma) -> SuperExpr:
    """U = 1/2 d_a gamma^a - 1/4 gamma_a gamma^a with gamma^a = S^{ab} gamma_b."""
    chart = S.chart
    gamma = [chart.coerce(g) for g in gamma]
    for v, g in zip(chart.variables, gamma):
        if g and g.parity != v.parity:
            raise ParityError(f"connection component for {v.name} has the wrong parity")
    return _potential_from_covector(S, gamma, HALF, -QUARTER)


def _potential_from_covector(S: SymTensor2, ell, c1, c2) -> SuperExpr:
    chart = S.chart
    n = len(chart)
    upper = []
    for a in range(n):
        s = chart.zero
        for b in range(n):
            e = S.entry(a, b)
            if e and ell[b]:
                s = s + e * ell[b]
        upper.append(s)
    div = chart.zero
    quad = chart.zero
    for a in range(n):
        if upper[a]:
            div = div + upper[a].derive(a)
            if ell[a]:
                quad = quad + ell[a] * upper[a]
    return div.scale(c1) + quad.scale(c2)


def connection_from_volume(rho) -> list[SuperExpr]:
    """gamma_a = -d_a log rho."""
    return [g.scale(-1) for g in log_gradient(rho)]


def bv_on_functions(S: SymTensor2, rho) -> DiffOperator:
    """Delta_rho = 1/2 rho^-1 d_b o rho S^{ba} o d_a acting on functions (weight 0)."""
    chart = S.chart
    rho = chart.coerce(rho)
    inv = invert(rho)
    terms = _divergence_form(S, weight_fn=rho)
    op = DiffOperator(chart, terms, 0)
    return op.left_mul(inv).scale(HALF)


def delta_from_volume(S: SymTensor2, rho) -> DiffOperator:
    """The divergence construction sqrt(rho) o Delta_rho o rho^(-1/2) on half-densities."""
    return conjugate(bv_on_functions(S, rho), S.chart.coerce(rho), HALF).with_weight(HALF)


# ---------------------------------------------------------------------------
# squares and modular fields

def delta_square(delta: DiffOperator) -> DiffOperator:
    return compose(delta, delta)


def modular_field(delta: DiffOperator, check_jacobi: bool = True) -> VectorField:
    """The field X with delta^2 = L_X on half-densities.

    The order-0 part of delta^2 is checked against 1/2 div X.
    """
    from .operators import principal_symbol
    if check_jacobi:
        E = principal_symbol(delta, 2)
        if not jacobi_residual(E).is_zero():
            raise NotPoissonError("principal symbol does not satisfy the Jacobi identity")
    sq = delta_square(delta)
    if sq.order() > 1:
        raise NotPoissonError("delta^2 has order 3")
    X = field_of(sq)
    if lie_derivative(X, HALF) != sq:
        raise ConsistencyError("delta^2 is first order but not a Lie derivative")
    return X


def modular_field_formula(E: SymTensor2, U) -> VectorField:
    """Closed-form modular field of from_potential(E, U).

    X^a = 1/4 d_b(E^{bc} d_c d_p E^{pa}) + 1/2 (-1)^{p(a)} E^{ab} d_b U.
    Both coefficients are fixed by the normalization Delta = 1/2(... + U).
    """
    chart = E.chart
    U = chart.coerce(U)
    n = len(chart)
    dU = [U.derive(b) for b in range(n)]
    # t^a = d_p E^{pa}, then v^{ba} = E^{bc} d_c t^a
    t = [sum_exprs(chart, (E.entry(p, a).derive(p) for p in range(n))) for a in range(n)]
    comps = []
    for a in range(n):
        div = chart.zero
        for b in range(n):
            inner = chart.zero
            for c in range(n):
                e = E.entry(b, c)
                if e and t[a]:
                    inner = inner + e * t[a].derive(c)
            if inner:
                div = div + inner.derive(b)
        ham = chart.zero
        for b in range(n):
            e = E.entry(a, b)
            if e and dU[b]:
                ham = ham + e * dU[b]
        if chart.variables[a].parity:
            ham = -ham
        comps.append(div.scale(QUARTER) + ham.scale(HALF))
    return VectorField(chart, comps)


def residual_delta_squared_zero(E: SymTensor2, U) -> VectorField:
    """The field whose vanishing is equivalent to Delta^2 = 0 for from_potential(E, U)."""
    if not jacobi_residual(E).is_zero():
        raise NotPoissonError("principal symbol does not satisfy the Jacobi identity")
    return modular_field_formula(E, U)


# ---------------------------------------------------------------------------
# the canonical potential of an odd symplectic structure

def bering_potential(E: SymTensor2) -> SuperExpr:
    """U = 1/4 d_b d_a E^{ab} - 1/12 (-1)^{p(b)(p(d)+1)} d_a E^{bc} e_{cd} d_b E^{da}.

    ``e`` is the lower-index inverse of E; raises SingularError for degenerate E.
    """
    chart = E.chart
    n = len(chart)
    inv = E.inverse().entries
    par = [v.parity for v in chart.variables]
    first = chart.zero
    for a in range(n):
        for b in range(n):
            x = E.entry(a, b)
            if x:
                first = first + x.derive(a).derive(b)
    # dE[a][b][c] = d_a E^{bc}
    dE = [[[E.entry(b, c).derive(a) if E.entry(b, c) else chart.zero for c in range(n)]
           for b in range(n)] for a in range(n)]
    second = chart.zero
    for a in range(n):
        for b in range(n):
            for d in range(n):
                right = dE[b][d][a]
                if not right:
                    continue
                left = chart.zero
                for c in range(n):
                    if dE[a][b][c] and inv[c][d]:
                        left = left + dE[a][b][c] * inv[c][d]
                if not left:
                    continue
                t = left * right
                second = second - t if par[b] * (par[d] + 1) % 2 else second + t
    return first.scale(QUARTER) - second.scale(Fraction(1, 12))


def canonical_laplacian(E: SymTensor2) -> DiffOperator:
    return from_potential(E, bering_potential(E))


def sigma_rho(E: SymTensor2, rho) -> SuperExpr:
    """Delta(sqrt rho) / sqrt rho for the canonical odd Laplacian of E.

    Computed as rho^(-1/2) o Delta o rho^(1/2) applied to 1, so only
    log-derivatives of rho occur.
    """
    chart = E.chart
    rho = chart.coerce(rho)
    if not rho.body():
        raise ZeroDivisionError("volume form must have an invertible body")
    return conjugate(canonical_laplacian(E), rho, -HALF).act(chart.one)


# ---------------------------------------------------------------------------
# even Poisson structures

def weinstein_modular_field(P: EvenPoissonTensor, rho=1, log_grad=None) -> VectorField:
    """X(F) = rho^-1 d_a(rho P^{ab} d_b F), i.e. X^b = d_a P^{ab} + l_a P^{ab}.

    ``log_grad`` may replace d(rho)/rho directly (used for non-rational
    rescalings such as exp(G) rho).
    """
    chart = P.chart
    if any(v.is_odd for v in chart.variables):
        raise ParityError("the even modular field needs a purely even chart")
    n = len(chart)
    ell = log_grad if log_grad is not None else log_gradient(chart.coerce(rho))
    ell = [chart.coerce(x) for x in ell]
    comps = []
    for b in range(n):
        s = chart.zero
        for a in range(n):
            e = P.entry(a, b)
            if not e:
                continue
            s = s + e.derive(a)
            if ell[a]:
                s = s + ell[a] * e
        comps.append(s)
    return VectorField(chart, comps)
