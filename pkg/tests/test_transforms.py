import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from superdelta.acceptance import jacobi_tensor, random_potential
from superdelta.constructions import PiTangentChart
from superdelta.graded import EVEN, ODD, Chart
from superdelta.laplacian import bering_potential, from_potential
from superdelta.operators import HALF, Density, DiffOperator, apply
from superdelta.poisson import SymTensor2, bracket, darboux_chart, darboux_tensor, jacobi_residual
from superdelta.randgen import chart_of, primed_chart, random_change, random_odd_tensor, random_operator, random_poly
from superdelta.transforms import (CoordChange, NotInverseError, identity_change, is_darboux, projective_by_conjugation,
                                   projective_in_new_coordinate, schwarzian, transform_density, transform_operator,
                                   transform_potential, transform_projective, transform_tensor)

seeds = st.integers(0, 10**6)
CHARTS = [(1, 1), (2, 1), (1, 2), (2, 2)]


def _setup(seed, charts=CHARTS):
    rng = random.Random(seed)
    ch = chart_of(*rng.choice(charts))
    return rng, ch, random_change(rng, ch)


def test_identity_change(c22):
    rng = random.Random(2)
    phi = identity_change(c22)
    E = random_odd_tensor(rng, c22)
    U = random_potential(rng, c22)
    assert phi.berezinian == c22.one
    assert transform_tensor(E, phi) == E
    assert transform_potential(U, E, phi) == U


def test_wrong_inverse_rejected():
    ch = chart_of(1, 1)
    tgt = primed_chart(ch)
    with pytest.raises(NotInverseError):
        CoordChange(ch, tgt, {"xp": ch.var("x") * 2, "thp": ch.var("th")},
                    {"x": tgt.var("xp"), "th": tgt.var("thp")})


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_berezinian_of_composite(seed):
    rng, ch, phi = _setup(seed)
    psi = random_change(rng, phi.target, primed_chart(phi.target, "q"))
    both = phi.then(psi)
    assert both.berezinian == phi.berezinian * phi.to_source(psi.berezinian)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_log_berezinian_two_routes(seed):
    rng, ch, phi = _setup(seed)
    src = phi.log_ber_gradient_source()
    tgt = phi.log_ber_gradient_target()
    K = phi.jacobian_target()
    # chain rule d_a = K[a][a'] d_a'
    for a in range(len(ch)):
        via = phi.target.zero
        for j in range(len(ch)):
            via = via + K[a][j] * tgt[j]
        assert phi.to_target(src[a]) == via


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_tensor_against_coordinate_brackets(seed):
    """E'^{ij} = (-1)^{p(i)} [x'^i, x'^j], the bracket taken in the old chart."""
    rng, ch, phi = _setup(seed)
    E = random_odd_tensor(rng, ch)
    Et = transform_tensor(E, phi)
    for i, vi in enumerate(phi.target.variables):
        for j in range(len(ch)):
            br = phi.to_target(bracket(E, phi.forward[i], phi.forward[j]))
            assert Et.entry(i, j) == (-br if vi.is_odd else br)


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_jacobi_residual_zero_iff(seed):
    rng, ch, phi = _setup(seed, [(1, 1), (2, 1), (1, 2)])
    E = random_odd_tensor(rng, ch, terms=2, max_deg=2)
    before = jacobi_residual(E).is_zero()
    assert jacobi_residual(transform_tensor(E, phi)).is_zero() == before


def test_linear_darboux_change_is_constant():
    ch = darboux_chart(1)
    tgt = primed_chart(ch)
    q, th = ch.vars()
    phi = CoordChange(ch, tgt, {"qp": q.scale(3), "thp": th.scale(2)},
                      {"q": tgt.var("qp").scale(Fraction(1, 3)), "th": tgt.var("thp").scale(Fraction(1, 2))})
    Et = transform_tensor(darboux_tensor(ch), phi)
    assert Et.entry(0, 1) == tgt.const(6)
    assert transform_potential(0, darboux_tensor(ch), phi).is_zero()


# -- densities and operators ------------------------------------------------

def test_weight_zero_density_is_substitution():
    rng, ch, phi = _setup(4)
    f = random_poly(rng, ch, EVEN, 3, 2)
    assert transform_density(Density(f, 0), phi) == Density(phi.to_target(f), 0)


def test_tangent_lift_has_unit_berezinian():
    pit = PiTangentChart(chart_of(2, 0))
    src = pit.chart
    tgt = primed_chart(src)
    x, y, dx, dy = src.vars()
    xp, yp, dxp, dyp = tgt.vars()
    phi = CoordChange(src, tgt, {tgt.variables[0].name: x + y * y, tgt.variables[1].name: y,
                                 tgt.variables[2].name: dx + (y * dy).scale(2), tgt.variables[3].name: dy},
                      {"x": xp - yp * yp, "y": yp, "dx": dxp - (yp * dyp).scale(2), "dy": dyp})
    assert phi.berezinian == src.one
    f = x * dx * dy
    assert transform_density(Density(f, 1), phi) == Density(phi.to_target(f), 1)


def test_half_density_constant_jacobian():
    ch = chart_of(1, 1)
    tgt = primed_chart(ch)
    x, th = ch.vars()
    phi = CoordChange(ch, tgt, {"xp": x.scale(4), "thp": th},
                      {"x": tgt.var("xp").scale(Fraction(1, 4)), "th": tgt.var("thp")})
    s = transform_density(Density(ch.one, HALF), phi)
    # J = 4, J^(-1/2) = 1/2
    assert s.weight == HALF
    assert Density(s.coefficient, HALF, s.factors) == Density(tgt.one, HALF, [(tgt.const(4), -HALF)])


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_operator_transform_commutes_with_action(seed):
    rng, ch, phi = _setup(seed, [(1, 1), (2, 1), (1, 2)])
    weight = rng.choice([0, HALF, 1])
    A = random_operator(rng, ch, rng.randrange(2), 2, 3).with_weight(weight)
    s = Density(random_poly(rng, ch, rng.randrange(2), 3, 2), weight)
    assert transform_density(apply(A, s), phi) == apply(transform_operator(A, phi), transform_density(s, phi))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_potential_law_matches_operator_transform(seed):
    rng = random.Random(seed)
    E = jacobi_tensor(rng)
    phi = random_change(rng, E.chart)
    U = random_potential(rng, E.chart)
    lhs = transform_operator(from_potential(E, U), phi)
    Up = transform_potential(U, E, phi)
    assert lhs == from_potential(transform_tensor(E, phi), Up)
    back = transform_potential(Up, transform_tensor(E, phi), phi.inverted())
    assert back == U


def test_quadratic_change_potential_is_bering():
    ch = darboux_chart(1)
    tgt = primed_chart(ch)
    q, th = ch.vars()
    # q' = q, th' = th (1 + q^2)
    phi = CoordChange(ch, tgt, {"qp": q, "thp": th * (ch.one + q * q)},
                      {"q": tgt.var("qp"), "th": tgt.var("thp") * (tgt.one + tgt.var("qp") ** 2) ** -1})
    E = darboux_tensor(ch)
    assert transform_potential(0, E, phi) == bering_potential(transform_tensor(E, phi))


def test_is_darboux():
    ch = darboux_chart(1)
    E = darboux_tensor(ch)
    assert is_darboux(E)
    assert not is_darboux(SymTensor2(ch, [[ch.zero, ch.const(2)], [ch.const(2), ch.zero]], ODD))
    rng = random.Random(9)
    assert not is_darboux(transform_tensor(E, random_change(rng, ch, terms=3)))


# -- projective connections -----------------------------------------------------

def _line():
    return Chart([("x", EVEN)])


def test_affine_projective_change():
    ch = _line()
    x = ch.var("x")
    U = x * x + 1
    y = x.scale(3) + 5
    assert schwarzian(y, "x").is_zero()
    assert transform_projective(U, y) == U.scale(Fraction(1, 9))


def test_inversion_has_zero_schwarzian():
    ch = _line()
    x = ch.var("x")
    assert schwarzian(x ** -1, "x").is_zero()


@pytest.mark.parametrize("U_text, y_text", [("0", "x + x^3"), ("x", "x + x^2"), ("x^2 + 1", "1/(1 + x)"),
                                            ("0", "1/x")])
def test_projective_law_against_conjugation(U_text, y_text):
    ch = _line()
    U, y = ch.parse(U_text), ch.parse(y_text)
    Unew = transform_projective(U, y)
    if y_text == "x + x^3":
        assert not schwarzian(y, "x").is_zero()
    assert projective_by_conjugation(U, y) == projective_in_new_coordinate(Unew, y)
