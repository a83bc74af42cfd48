import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from superdelta.graded import EVEN, ODD, invert
from superdelta.operators import (HALF, Density, DiffOperator, VectorField, WeightError, adjoint, apply,
                                  commutator, compose, conjugate, field_bracket, is_self_adjoint, lie_derivative,
                                  principal_symbol)
from superdelta.randgen import chart_of, random_field, random_invertible, random_operator, random_poly

seeds = st.integers(0, 10**6)
CHARTS = [(1, 0), (0, 2), (1, 1), (2, 1), (1, 2), (2, 2)]


def _pick(rng):
    return chart_of(*rng.choice(CHARTS))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_composition_is_sequential_action(seed):
    rng = random.Random(seed)
    ch = _pick(rng)
    a = random_operator(rng, ch, rng.randrange(2), 2, 3)
    b = random_operator(rng, ch, rng.randrange(2), 2, 3)
    f = random_poly(rng, ch, rng.randrange(2), 3, 3)
    assert compose(a, b).act(f) == a.act(b.act(f))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_composition_associative(seed):
    rng = random.Random(seed)
    ch = _pick(rng)
    a, b, c = (random_operator(rng, ch, rng.randrange(2), 2, 3) for _ in range(3))
    assert (a * b) * c == a * (b * c)


def test_canonical_commutator(c11):
    dx = DiffOperator.partial(c11, "x")
    x = DiffOperator.mult(c11.var("x"))
    assert commutator(dx, x) == DiffOperator.identity(c11)
    dth = DiffOperator.partial(c11, "th")
    th = DiffOperator.mult(c11.var("th"))
    # odd pair: d_th th + th d_th = 1
    assert commutator(dth, th) == DiffOperator.identity(c11)


# -- adjoints --------------------------------------------------------------

def test_adjoint_of_euler_operator():
    ch = chart_of(1, 0)
    x = ch.var("x")
    A = DiffOperator(ch, {("x",): x})
    assert adjoint(A) == -A - DiffOperator.identity(ch)


def _berezin(f):
    for v in f.chart.variables:
        f = f.derive(v.name)
    return f


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_adjoint_matches_berezin_pairing(seed):
    """On a purely odd chart the pairing of half-densities is a Berezin integral."""
    rng = random.Random(seed)
    ch = chart_of(0, rng.choice([1, 2, 3]))
    A = random_operator(rng, ch, rng.randrange(2), 2, 4)
    p1, p2 = rng.randrange(2), rng.randrange(2)
    s1 = random_poly(rng, ch, p1, 3, 0)
    s2 = random_poly(rng, ch, p2, 3, 0)
    lhs = _berezin(A.act(s1) * s2)
    rhs = _berezin(s1 * adjoint(A).act(s2))
    sign = -1 if (A.parity or 0) * p1 else 1
    assert lhs == rhs.scale(sign)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_lie_derivative_of_even_field_is_anti_self_adjoint(seed):
    rng = random.Random(seed)
    ch = _pick(rng)
    X = random_field(rng, ch, EVEN)
    L = lie_derivative(X, HALF)
    assert adjoint(L) == -L


def test_lie_derivative_euler():
    ch = chart_of(1, 0)
    L = lie_derivative(VectorField(ch, [ch.var("x")]), HALF)
    assert L == DiffOperator(ch, {("x",): ch.var("x"), (): ch.const(HALF)})


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_lie_derivative_is_homomorphism(seed):
    rng = random.Random(seed)
    ch = _pick(rng)
    X = random_field(rng, ch, rng.randrange(2))
    Y = random_field(rng, ch, rng.randrange(2))
    for w in (0, HALF, 1):
        lhs = lie_derivative(field_bracket(X, Y), w)
        assert lhs == commutator(lie_derivative(X, w), lie_derivative(Y, w))


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_field_bracket_jacobi(seed):
    rng = random.Random(seed)
    ch = _pick(rng)
    X, Y, Z = (random_field(rng, ch, rng.randrange(2), 2, 1) for _ in range(3))
    px, py = X.parity or 0, Y.parity or 0
    lhs = field_bracket(X, field_bracket(Y, Z))
    rhs = field_bracket(field_bracket(X, Y), Z)
    swap = field_bracket(Y, field_bracket(X, Z))
    assert lhs == rhs + (swap.scale(-1) if px * py else swap)


# -- symbols and conjugation ----------------------------------------------

def test_principal_symbol_reads_second_order_part(c11):
    A = DiffOperator(c11, {("x", "th"): c11.one, ("x",): c11.var("th")})
    S = principal_symbol(A)
    assert S.entry(1, 0) == c11.one and S.entry(0, 1) == c11.one
    assert principal_symbol(A - A.part(2), 1).components[0] == c11.var("th")


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_conjugation_matches_explicit_multiplication(seed):
    rng = random.Random(seed)
    ch = _pick(rng)
    A = random_operator(rng, ch, rng.randrange(2), 2, 3)
    r = random_invertible(rng, ch)
    explicit = DiffOperator.mult(r, A.weight) * A * DiffOperator.mult(invert(r), A.weight)
    assert conjugate(A, r, 1) == explicit
    # half powers compose to integer ones
    assert conjugate(conjugate(A, r, HALF), r, HALF) == explicit


def test_apply_half_power_factor():
    ch = chart_of(1, 0)
    x = ch.var("x")
    r = ch.one + x * x
    s = Density(ch.one, HALF, [(r, HALF)])
    dx = DiffOperator.partial(ch, "x")
    out = apply(dx, s)
    # d/dx sqrt(r) = r'/(2 sqrt r)
    assert out == Density(x * invert(r), HALF, [(r, HALF)])


def test_apply_weight_mismatch():
    ch = chart_of(1, 0)
    with pytest.raises(WeightError):
        apply(DiffOperator.partial(ch, "x", 0), Density(ch.one, HALF))


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_symmetrization_is_self_adjoint(seed):
    rng = random.Random(seed)
    ch = _pick(rng)
    A = random_operator(rng, ch, rng.randrange(2), 2, 4)
    assert is_self_adjoint((A + adjoint(A)).scale(HALF))
