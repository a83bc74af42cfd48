"""The acceptance suite run by ``superdelta selftest``.

Each criterion returns a list of :class:`Check` records.  Randomness comes
from ``random.Random(f"{seed}:{criterion}")`` so every criterion is
reproducible on its own and records never depend on timing.
"""
from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass
from fractions import Fraction

from .constructions import (FormValuedField, PiTangentChart, commutes_with_d, koszul_lift, nijenhuis_bracket,
                            nijenhuis_square_formula, odd_time_modular_field, odd_time_nontriviality,
                            odd_time_structure, tangent_lift)
from .graded import EVEN, ODD, Chart, invert
from .laplacian import (bering_potential, bv_on_functions, delta_from_volume, delta_square, from_potential,
                        modular_field, modular_field_formula, potential_from_connection, potential_from_volume,
                        weinstein_modular_field)
from .operators import (HALF, DiffOperator, VectorField, adjoint, field_bracket, is_self_adjoint, lie_derivative,
                        principal_symbol)
from .poisson import EvenPoissonTensor, SymTensor2, darboux_chart, darboux_tensor, hamiltonian_field, jacobi_residual
from .randgen import (chart_of, lie_poisson, random_bivector, random_change, random_field, random_invertible,
                      random_jacobi_P, random_lie_algebra_3d, random_odd_tensor, random_operator, random_poly,
                      random_rational)
from .transforms import (projective_by_conjugation, projective_in_new_coordinate, schwarzian, transform_operator,
                         transform_potential, transform_projective, transform_tensor)

SMALL_CHARTS = [(0, 1), (1, 0), (1, 1), (2, 1), (1, 2), (2, 2)]


@dataclass
class Check:
    command: str
    check: str
    verdict: str
    detail: str
    inputs: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, ensure_ascii=True)


def _check(name: str, ok: bool, detail: str = "", command: str = "selftest") -> Check:
    return Check(command, name, "pass" if ok else "fail", detail)


def _rng(seed: int, k: int) -> random.Random:
    return random.Random(f"{seed}:{k}")


def _par(op) -> int:
    return op.parity or 0


def _count(name: str, results: list[bool], what: str) -> Check:
    bad = [i for i, r in enumerate(results) if not r]
    detail = f"{len(results) - len(bad)}/{len(results)} {what}"
    if bad:
        detail += f"; failing instances {bad[:5]}"
    return _check(name, not bad, detail)


# ---------------------------------------------------------------------------
# tensors with and without the Jacobi identity

def jacobi_tensor(rng: random.Random) -> SymTensor2:
    """A random odd Poisson tensor from one of several families."""
    kind = rng.randrange(4)
    if kind == 0:
        n = rng.choice([1, 2])
        ch = darboux_chart(n)
        phi = random_change(rng, ch)
        if n == 2 and rng.random() < 0.5:
            phi = phi.then(random_change(rng, phi.target))
        return transform_tensor(darboux_tensor(ch), phi)
    if kind == 1:
        eta = random_field(rng, chart_of(*rng.choice([(1, 1), (1, 0), (0, 2)])), ODD, 2, 2)
        return odd_time_structure(eta).tensor
    if kind == 2:
        P = random_jacobi_P(rng, chart_of(2, 0))
        return koszul_lift(P)
    # product of 1|1 structures E^{x th} = f(x), E^{y ph} = g(y)
    ch = chart_of(2, 2)
    f = random_poly(rng, ch, EVEN, 2, 2, allowed=["x"], zero_ok=False)
    g = random_poly(rng, ch, EVEN, 2, 2, allowed=["y"], zero_ok=False)
    return SymTensor2.from_dict(ch, {("x", "th"): f, ("y", "ph"): g})


def random_potential(rng: random.Random, chart: Chart) -> object:
    return random_poly(rng, chart, ODD, 2, 2)


# ---------------------------------------------------------------------------

def criterion_1(seed: int) -> list[Check]:
    rng = _rng(seed, 1)
    inv, prod = [], []
    for _ in range(100):
        ch = chart_of(*rng.choice(SMALL_CHARTS))
        A = random_operator(rng, ch, rng.randrange(2), 2, 4)
        B = random_operator(rng, ch, rng.randrange(2), 2, 3)
        inv.append(adjoint(adjoint(A)) == A)
        lhs = adjoint(A * B)
        rhs = adjoint(B) * adjoint(A)
        if _par(A) * _par(B):
            rhs = -rhs
        prod.append(lhs == rhs)
    sa = []
    for _ in range(30):
        ch = chart_of(*rng.choice(SMALL_CHARTS))
        E = random_odd_tensor(rng, ch)
        sa.append(is_self_adjoint(from_potential(E, random_potential(rng, ch))))
    return [_count("1.adjoint-involution", inv, "operators with (A*)* = A"),
            _count("1.adjoint-product", prod, "pairs with (AB)* = (-1)^{p(A)p(B)} B*A*"),
            _count("1.from-potential-self-adjoint", sa, "operators self-adjoint")]


def _random_member(rng: random.Random, E: SymTensor2) -> DiffOperator:
    """A self-adjoint operator with principal symbol E, by one of four routes."""
    ch = E.chart
    route = rng.randrange(4)
    if route == 0:
        return from_potential(E, random_potential(rng, ch))
    if route == 1:
        return delta_from_volume(E, random_invertible(rng, ch))
    if route == 2:
        gamma = [random_rational(rng, ch, v.parity, 2, 1) for v in ch.variables]
        return from_potential(E, potential_from_connection(E, gamma))
    # symmetrize an arbitrary odd operator with the right leading part
    lead = from_potential(E, 0).part(2)
    Z = lead + random_operator(rng, ch, ODD, 1, 4)
    return (Z + adjoint(Z)).scale(HALF)


def criterion_2(seed: int) -> list[Check]:
    rng = _rng(seed, 2)
    ok, symb = [], []
    for _ in range(50):
        ch = chart_of(*rng.choice(SMALL_CHARTS[2:]))
        E = random_odd_tensor(rng, ch)
        d1, d2 = _random_member(rng, E), _random_member(rng, E)
        symb.append(is_self_adjoint(d1) and is_self_adjoint(d2)
                    and principal_symbol(d1, 2) == E and principal_symbol(d2, 2) == E)
        ok.append((d1 - d2).order() <= 0)
    return [_count("2.members-of-class", symb, "pairs self-adjoint with symbol E"),
            _count("2.scalar-difference", ok, "pairs differing by an order-0 operator")]


def criterion_3(seed: int) -> list[Check]:
    rng = _rng(seed, 3)
    tri, equiv, field_ok = [], [], []
    n_jac = 0
    for i in range(50):
        if i % 2:
            E = jacobi_tensor(rng)
        else:
            E = random_odd_tensor(rng, chart_of(*rng.choice(SMALL_CHARTS[2:])))
        ch = E.chart
        U = random_potential(rng, ch)
        delta = from_potential(E, U)
        sq = delta_square(delta)
        o = sq.order()
        tri.append(o in (3, 1, float("-inf")))
        jac = jacobi_residual(E).is_zero()
        equiv.append((o <= 1) == jac)
        if jac:
            n_jac += 1
            X = modular_field_formula(E, U)
            L = lie_derivative(X, HALF)
            field_ok.append(sq.part(1) == L.part(1) and sq.part(0) == L.part(0) and sq.order() <= 1)
    return [_count("3.trichotomy", tri, "squares of order 3, 1 or zero"),
            _count("3.order-vs-jacobi", equiv, "instances with order <= 1 iff Jacobi"),
            _count("3.explicit-modular-field", field_ok, f"Jacobi instances (of 50) with delta^2 = L_X")]


def criterion_4(seed: int) -> list[Check]:
    rng = _rng(seed, 4)
    res = []
    for _ in range(25):
        E = jacobi_tensor(rng)
        ch = E.chart
        delta = from_potential(E, random_potential(rng, ch))
        F = random_poly(rng, ch, ODD, 3, 2)
        lhs = modular_field(delta + DiffOperator.mult(F, HALF)) - modular_field(delta)
        res.append(lhs == hamiltonian_field(E, F))
    return [_count("4.shift-law", res, "instances with X(delta+F) - X(delta) = D_F")]


def _darboux_cases(rng: random.Random, count: int):
    for i in range(count):
        n = 1 if i % 2 == 0 else 2
        ch = darboux_chart(n)
        phi = random_change(rng, ch, terms=3)
        if n == 2:
            phi = phi.then(random_change(rng, phi.target, terms=3))
        yield ch, darboux_tensor(ch), phi


def criterion_5(seed: int) -> list[Check]:
    rng = _rng(seed, 5)
    zero = [bering_potential(darboux_tensor(darboux_chart(n))).is_zero() for n in (1, 2, 3)]
    cov = []
    nontrivial = 0
    for ch, E, phi in _darboux_cases(rng, 20):
        target = transform_potential(0, E, phi)
        nontrivial += not target.is_zero()
        cov.append(bering_potential(transform_tensor(E, phi)) == target)
    return [_count("5.darboux-vanishing", zero, "Darboux charts (1|1, 2|2, 3|3) with zero potential"),
            _count("5.covariance", cov, f"changes with matching potentials ({nontrivial} nonzero)")]


def criterion_6(seed: int) -> list[Check]:
    rng = _rng(seed, 6)
    flat = [delta_square(from_potential(darboux_tensor(darboux_chart(n)), 0)).is_zero() for n in (1, 2, 3)]
    pulled, nil = [], []
    for ch, E, phi in _darboux_cases(rng, 10):
        delta = from_potential(E, 0)
        Et = transform_tensor(E, phi)
        canon = from_potential(Et, bering_potential(Et))
        pulled.append(transform_operator(delta, phi) == canon)
        nil.append(delta_square(canon).is_zero())
    return [_count("6.darboux-nilpotent", flat, "Darboux charts with delta^2 = 0"),
            _count("6.pullback-is-bering", pulled, "changes where the pulled-back operator has the Bering potential"),
            _count("6.pullback-nilpotent", nil, "changes with delta^2 = 0 after pullback")]


def criterion_7(seed: int) -> list[Check]:
    rng = _rng(seed, 7)
    equiv, nil = [], []
    n_jac = 0
    for i in range(25):
        dim = 2 if i % 3 == 0 else 3
        ch = chart_of(dim, 0)
        if dim == 3 and i % 3 == 1:
            P = lie_poisson(ch, random_lie_algebra_3d(rng)) if rng.random() < 0.5 else random_jacobi_P(rng, ch)
        elif dim == 3:
            P = random_bivector(rng, ch)
        else:
            P = random_jacobi_P(rng, ch)
        E = koszul_lift(P)
        even = P.is_poisson()
        equiv.append(jacobi_residual(E).is_zero() == even)
        if even:
            n_jac += 1
            nil.append(delta_square(from_potential(E, 0)).is_zero())
    return [_count("7.koszul-jacobi", equiv, "bivectors where odd and even Jacobi agree"),
            _count("7.koszul-nilpotent", nil, "Poisson tensors with delta^2 = 0 on Pi TM")]


def criterion_8(seed: int) -> list[Check]:
    rng = _rng(seed, 8)
    sq_ok, verdict_ok = [], []
    for i in range(25):
        base = chart_of(*rng.choice(SMALL_CHARTS))
        if i % 5 == 0:
            # fields with [eta, eta] = 0: odd constant directions
            comps = [base.zero] * len(base)
            for k, v in enumerate(base.variables):
                if v.is_odd:
                    comps[k] = base.const(rng.randint(1, 3))
            if not base.odd_names:
                comps[0] = base.zero
            eta = VectorField(base, comps)
        else:
            eta = random_field(rng, base, ODD, 2, 2)
        s = odd_time_structure(eta)
        X = odd_time_modular_field(eta)
        sq_ok.append(delta_square(s.delta) == lie_derivative(s.lift_field(X), HALF))
        nt = odd_time_nontriviality(eta)
        good = nt.nontrivial == (not X.is_zero())
        if nt.nontrivial:
            name, comp = nt.certificate
            good = good and comp == X[name] and not comp.is_zero()
        verdict_ok.append(good)
    return [_count("8.odd-time-square", sq_ok, "fields with delta^2 = L_{1/8[eta,eta]}"),
            _count("8.nontriviality", verdict_ok, "fields with correct verdict and certificate")]


def _random_form_field(rng: random.Random, pit: PiTangentChart, degree: int) -> FormValuedField:
    """Components homogeneous of the given form degree in dx."""
    c = pit.chart
    n = pit.n
    comps = []
    for i in range(n):
        s = c.zero
        for _ in range(2):
            coef = random_poly(rng, pit.base, EVEN, 2, 2)
            if not coef:
                continue
            idx = rng.sample(range(n), degree) if degree <= n else None
            if idx is None:
                continue
            t = c.coerce(coef)
            for j in idx:
                t = t * pit.dx(j)
            s = s + t
        comps.append(s)
    return FormValuedField(pit, comps)


def criterion_9(seed: int) -> list[Check]:
    rng = _rng(seed, 9)
    commute, formula, hom = [], [], []
    for i in range(10):
        pit = PiTangentChart(chart_of(rng.choice([2, 3]), 0))
        X = _random_form_field(rng, pit, rng.randrange(3))
        commute.append(commutes_with_d(tangent_lift(X), pit))
    for i in range(5):
        pit = PiTangentChart(chart_of(2, 0))
        rows = [[random_poly(rng, pit.base, EVEN, 4, 3) for _ in range(2)] for _ in range(2)]
        X = FormValuedField.from_matrix(pit, rows)
        formula.append(nijenhuis_bracket(X, X) == nijenhuis_square_formula(pit, rows))
    for i in range(25):
        pit = PiTangentChart(chart_of(2, 0))
        X = _random_form_field(rng, pit, rng.randrange(3))
        Y = _random_form_field(rng, pit, rng.randrange(3))
        br = nijenhuis_bracket(X, Y)
        hom.append(tangent_lift(br) == field_bracket(tangent_lift(X), tangent_lift(Y)))
    return [_count("9.lift-commutes-with-d", commute, "lifts commuting with d"),
            _count("9.self-bracket-formula", formula, "2-D endomorphisms matching the closed form"),
            _count("9.lift-homomorphism", hom, "pairs with lift[X,Y]_N = [lift X, lift Y]")]


def criterion_10(seed: int) -> list[Check]:
    rng = _rng(seed, 10)
    lp, shift = [], []
    ch = chart_of(3, 0, ["u", "v", "w"])
    for _ in range(6):
        table = random_lie_algebra_3d(rng)
        P = lie_poisson(ch, table)
        X = weinstein_modular_field(P)
        # t_m = c^i_{im}
        t = []
        for m in range(3):
            s = Fraction(0)
            for i in range(3):
                s += table.get((i, m), {}).get(i, 0) - table.get((m, i), {}).get(i, 0)
            t.append(ch.const(s))
        lp.append(P.is_poisson() and X == VectorField(ch, t))
    for _ in range(6):
        base = chart_of(rng.choice([2, 3]), 0)
        P = random_jacobi_P(rng, base)
        rho = random_invertible(rng, base)
        G = random_poly(rng, base, EVEN, 2, 2)
        X = weinstein_modular_field(P, rho)
        # rho' = exp(G) rho: only log-derivatives are needed
        ell = [a + b for a, b in zip([rho.derive(i) * invert(rho) for i in range(len(base))],
                                     [G.derive(i) for i in range(len(base))])]
        X2 = weinstein_modular_field(P, log_grad=ell)
        ok = X2 - X == P.hamiltonian_field(G)
        # rho' = (1 + G^2) rho, rational: shift by D_{log(1+G^2)}
        h = base.one + G * G
        X3 = weinstein_modular_field(P, h * rho)
        D = P.hamiltonian_field(G * G).map(lambda e: e * invert(h))
        shift.append(ok and X3 - X == D)
    return [_count("10.lie-poisson-covector", lp, "Lie algebras with t_m = c^i_{im}"),
            _count("10.volume-shift", shift, "rescalings with X' = X + D_G")]


def criterion_11(seed: int) -> list[Check]:
    rng = _rng(seed, 11)
    ch = chart_of(1, 0)
    x = ch.var(0)
    conj = []
    for _ in range(10):
        U = random_rational(rng, ch, EVEN, 2, 2)
        while True:
            y = random_rational(rng, ch, EVEN, 3, 3) + x.scale(rng.choice([1, 2, -1]))
            if y.derive(0) and y.derive(0).body():
                break
        conj.append(projective_by_conjugation(U, y) == projective_in_new_coordinate(transform_projective(U, y), y))
    aff = []
    for _ in range(5):
        a, b = rng.choice([1, 2, -3, Fraction(1, 2)]), rng.randint(-3, 3)
        y = x.scale(a) + ch.const(b)
        U = random_rational(rng, ch, EVEN, 2, 2)
        aff.append(schwarzian(y, 0).is_zero() and transform_projective(U, y) == U.scale(Fraction(1) / (a * a)))
    return [_count("11.projective-conjugation", conj, "maps where both routes agree"),
            _count("11.affine-schwarzian", aff, "affine maps with zero Schwarzian")]


def criterion_12(seed: int) -> list[Check]:
    rng = _rng(seed, 12)
    res = []
    for i in range(10):
        ch = darboux_chart(1 + i % 2)
        E = darboux_tensor(ch)
        rho = random_invertible(rng, ch)
        res.append(delta_from_volume(E, rho) == from_potential(E, potential_from_volume(E, rho)))
    return [_count("12.conjugation-identity", res, "volume forms with sqrt(rho) Delta_rho rho^-1/2 = Delta^(rho)")]


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
            7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11,
            12: criterion_12}


def run_criterion(k: int, seed: int) -> list[Check]:
    try:
        return CRITERIA[k](seed)
    except Exception as exc:  # a crash is a failed criterion, not a crashed suite
        return [_check(f"{k}.error", False, f"{type(exc).__name__}: {exc}")]


def records_text(checks: list[Check]) -> str:
    return "".join(c.to_json() + "\n" for c in checks)
