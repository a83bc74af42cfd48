import random

import pytest
from hypothesis import given, settings, strategies as st

from superdelta.acceptance import jacobi_tensor, random_potential
from superdelta.constructions import odd_time_modular_field, odd_time_structure
from superdelta.graded import EVEN, ODD, ParityError, Variable, invert
from superdelta.laplacian import (NotPoissonError, bering_potential, bv_on_functions, connection_from_volume,
                                  delta_from_volume, delta_square, from_potential, modular_field,
                                  modular_field_formula, potential_from_connection, potential_from_volume,
                                  potential_of, residual_delta_squared_zero, sigma_rho, weinstein_modular_field)
from superdelta.operators import HALF, DiffOperator, VectorField, adjoint, compose, is_self_adjoint
from superdelta.poisson import EvenPoissonTensor, SymTensor2, bracket, darboux_chart, darboux_tensor, hamiltonian_field
from superdelta.randgen import (chart_of, lie_poisson, random_field, random_invertible, random_change,
                                random_lie_algebra_3d, random_odd_tensor, random_poly)
from superdelta.transforms import transform_potential, transform_tensor

seeds = st.integers(0, 10**6)


def _darboux_box(n):
    """sum_i d_{q_i} d_{th_i} as an operator on half-densities, built by composition."""
    ch = darboux_chart(n)
    total = DiffOperator(ch, {}, HALF)
    for i in range(n):
        q, th = ch.variables[i].name, ch.variables[n + i].name
        total = total + compose(DiffOperator.partial(ch, q, HALF), DiffOperator.partial(ch, th, HALF))
    return ch, total


@pytest.mark.parametrize("n", [1, 2, 3])
def test_darboux_gives_canonical_laplacian(n):
    ch, box = _darboux_box(n)
    E = darboux_tensor(ch)
    assert from_potential(E, 0) == box
    assert delta_square(box).is_zero()
    assert modular_field(box).is_zero()
    assert bering_potential(E).is_zero()


def test_zero_tensor_gives_half_potential():
    ch = chart_of(1, 1)
    F = ch.var("th") * ch.var("x")
    E = SymTensor2.zero(ch)
    assert from_potential(E, F) == DiffOperator.mult(F.scale(HALF), HALF)


def test_potential_parity_checked():
    ch = darboux_chart(1)
    with pytest.raises(ParityError):
        from_potential(darboux_tensor(ch), ch.var("q"))


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_self_adjoint_and_round_trip(seed):
    rng = random.Random(seed)
    ch = chart_of(*rng.choice([(1, 1), (2, 1), (1, 2), (2, 2)]))
    E = random_odd_tensor(rng, ch)
    U = random_potential(rng, ch)
    delta = from_potential(E, U)
    assert adjoint(delta) == delta
    assert potential_of(delta) == U


# -- volumes and connections -------------------------------------------------

def test_unit_volume_has_zero_potential():
    rng = random.Random(3)
    E = random_odd_tensor(rng, chart_of(2, 2))
    assert potential_from_volume(E, 1).is_zero()
    assert potential_from_connection(E, [E.chart.zero] * 4).is_zero()


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_volume_potential_against_divergence_construction(seed):
    rng = random.Random(seed)
    ch = chart_of(*rng.choice([(1, 1), (2, 1), (1, 2)]))
    E = random_odd_tensor(rng, ch)
    rho = random_invertible(rng, ch)
    U = potential_from_volume(E, rho)
    assert potential_of(delta_from_volume(E, rho)) == U
    assert potential_from_connection(E, connection_from_volume(rho)) == U


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_generic_connection_is_self_adjoint(seed):
    rng = random.Random(seed)
    ch = chart_of(*rng.choice([(1, 1), (2, 1), (1, 2)]))
    E = random_odd_tensor(rng, ch)
    gamma = [random_poly(rng, ch, v.parity, 2, 2) for v in ch.variables]
    assert is_self_adjoint(from_potential(E, potential_from_connection(E, gamma)))


def test_connection_parity_checked(c11):
    E = darboux_tensor(c11)
    with pytest.raises(ParityError):
        potential_from_connection(E, [c11.var("th"), c11.zero])


# -- functions and volume forms ----------------------------------------------

def test_bv_operator_darboux_unit_volume():
    ch = darboux_chart(1)
    box = compose(DiffOperator.partial(ch, "q", 0), DiffOperator.partial(ch, "th", 0))
    assert bv_on_functions(darboux_tensor(ch), 1) == box


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_bv_operator_extra_bracket_term(seed):
    rng = random.Random(seed)
    ch = darboux_chart(2)
    E = darboux_tensor(ch)
    rho = random_invertible(rng, ch)
    f = random_poly(rng, ch, rng.randrange(2), 3, 2)
    flat = bv_on_functions(E, 1).act(f)
    assert bv_on_functions(E, rho).act(f) == flat + (invert(rho) * bracket(E, rho, f)).scale(HALF)


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_sigma_on_darboux_square_volume(seed):
    """For rho = f^2 the square root is f itself."""
    rng = random.Random(seed)
    ch = darboux_chart(2)
    E = darboux_tensor(ch)
    f = random_invertible(rng, ch, rational=False)
    expected = invert(f) * from_potential(E, 0).act(f)
    assert sigma_rho(E, f * f) == expected
    assert sigma_rho(E, 1).is_zero()


# -- modular fields -----------------------------------------------------------

@settings(max_examples=20, deadline=None)
@given(seeds)
def test_modular_field_formula_against_square(seed):
    rng = random.Random(seed)
    E = jacobi_tensor(rng)
    U = random_potential(rng, E.chart)
    assert modular_field(from_potential(E, U)) == modular_field_formula(E, U)


def test_non_jacobi_rejected(c11):
    E = SymTensor2.from_dict(c11, {("x", "th"): c11.var("x"), ("x", "x"): c11.var("th")})
    delta = from_potential(E, 0)
    assert delta_square(delta).order() == 3
    with pytest.raises(NotPoissonError):
        modular_field(delta)
    with pytest.raises(NotPoissonError):
        residual_delta_squared_zero(E, 0)


def test_odd_time_residual_is_eighth_self_bracket():
    rng = random.Random(8)
    eta = random_field(rng, chart_of(1, 2), ODD, 2, 2)
    s = odd_time_structure(eta)
    expected = s.lift_field(odd_time_modular_field(eta))
    assert residual_delta_squared_zero(s.tensor, potential_of(s.delta)) == expected
    # with U = 0 only the odd-time direction changes
    bare = residual_delta_squared_zero(s.tensor, 0)
    assert bare.components[:s.tau] == expected.components[:s.tau]


def test_odd_constant_shift_leaves_residual():
    ch = darboux_chart(1).extend([Variable("eps", ODD)])
    base = darboux_chart(1)
    E = SymTensor2(ch, [[ch.coerce(x) for x in row] + [ch.zero] for row in darboux_tensor(base).entries]
                   + [[ch.zero] * 3], ODD)
    U = ch.var("th") * ch.var("q") ** 2
    assert residual_delta_squared_zero(E, U + ch.var("eps")) == residual_delta_squared_zero(E, U)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_bering_potential_covariance(seed):
    rng = random.Random(seed)
    ch = darboux_chart(rng.choice([1, 2]))
    E = darboux_tensor(ch)
    phi = random_change(rng, ch)
    assert bering_potential(transform_tensor(E, phi)) == transform_potential(0, E, phi)


# -- even Poisson ---------------------------------------------------------------

def test_constant_symplectic_modular_field():
    ch = chart_of(2, 0)
    P = EvenPoissonTensor.from_dict(ch, {("x", "y"): 1})
    assert weinstein_modular_field(P).is_zero()


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_lie_poisson_covector(seed):
    rng = random.Random(seed)
    ch = chart_of(3, 0)
    table = random_lie_algebra_3d(rng)
    P = lie_poisson(ch, table)

    def c(i, k, m):
        if (i, k) in table:
            return table[(i, k)].get(m, 0)
        if (k, i) in table:
            return -table[(k, i)].get(m, 0)
        return 0

    # t_m = sum_i c^i_{im}
    expected = [ch.const(sum(c(i, m, i) for i in range(3))) for m in range(3)]
    assert weinstein_modular_field(P) == VectorField(ch, expected)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_weinstein_shift(seed):
    rng = random.Random(seed)
    ch = chart_of(2, 0)
    P = EvenPoissonTensor.from_dict(ch, {("x", "y"): random_poly(rng, ch, EVEN, 3, 2)})
    rho = random_invertible(rng, ch)
    G = random_poly(rng, ch, EVEN, 2, 2)
    if (ch.one + G).is_zero():
        G = G + ch.one
    one_g = ch.one + G
    diff = weinstein_modular_field(P, rho * one_g) - weinstein_modular_field(P, rho)
    D = P.hamiltonian_field(G)
    assert diff == VectorField(ch, [invert(one_g) * x for x in D.components])


def test_weinstein_rejects_odd_chart(c11):
    class Fake:
        chart = c11
    with pytest.raises(ParityError):
        weinstein_modular_field(Fake())
