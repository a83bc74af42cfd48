"""Coordinate changes and how geometric objects transform under them.

A change goes from a source chart (x^a) to a target chart (x^{a'}) and is
given by both component lists.  The Jacobian supermatrix has rows indexed
by source variables and columns by target variables,
``K[a][a'] = d_a x^{a'}`` (left derivatives), and ``J = Ber(K)``.  With
left derivatives the chain rule reads ``d_a = K[a][a'] d_{a'}``.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping

from .graded import ODD, Chart, ChartError, GradedError, ParityError, SuperExpr, invert, substitute
from .laplacian import from_potential
from .operators import (DiffOperator, Density, VectorField, _add_term, _compose_terms,
                        conjugate, log_gradient)
from .poisson import SymTensor2, bracket
from .superlinalg import SuperMatrix, berezinian, log_derivative_ber


class NotInverseError(GradedError):
    pass


class CoordChange:
    def __init__(self, source: Chart, target: Chart, forward: Mapping, inverse: Mapping, verify: bool = True):
        if source.dim() != target.dim():
            raise ChartError("source and target charts have different dimensions")
        self.source = source
        self.target = target
        self.forward: tuple[SuperExpr, ...] = self._components(target, source, forward, "forward")
        self.inverse: tuple[SuperExpr, ...] = self._components(source, target, inverse, "inverse")
        if verify:
            self.verify()
        self._jac = None
        self._ber = None
        self._ber_t = None
        self._ell_t = None

    @staticmethod
    def _components(named: Chart, on: Chart, mapping: Mapping, what: str):
        out = []
        for v in named.variables:
            if v.name in mapping:
                e = mapping[v.name]
            elif v in named.variables and v.name in on and on.parity(v.name) == v.parity \
                    and not mapping:
                e = on.var(v.name)
            else:
                raise ChartError(f"{what} map has no component for {v.name}")
            e = on.parse(e) if isinstance(e, str) else on.coerce(e)
            if e and e.parity != v.parity:
                raise ParityError(f"{what} component for {v.name} has the wrong parity")
            out.append(e)
        return tuple(out)

    def verify(self):
        fmap = {v.name: e for v, e in zip(self.target.variables, self.forward)}
        imap = {v.name: e for v, e in zip(self.source.variables, self.inverse)}
        for v, e in zip(self.target.variables, self.forward):
            if substitute(e, imap, target=self.target) != self.target.var(v.name):
                raise NotInverseError(f"forward o inverse is not the identity on {v.name}")
        for v, e in zip(self.source.variables, self.inverse):
            if substitute(e, fmap, target=self.source) != self.source.var(v.name):
                raise NotInverseError(f"inverse o forward is not the identity on {v.name}")

    # -- pushing functions around -------------------------------------
    def to_target(self, f) -> SuperExpr:
        """f(x) rewritten as a function of x' (that is, f o phi^-1)."""
        f = self.source.coerce(f) if not isinstance(f, SuperExpr) else f
        imap = {v.name: e for v, e in zip(self.source.variables, self.inverse)}
        return substitute(f, imap, target=self.target)

    def to_source(self, f) -> SuperExpr:
        """f(x') rewritten as a function of x (f o phi)."""
        f = self.target.coerce(f) if not isinstance(f, SuperExpr) else f
        fmap = {v.name: e for v, e in zip(self.target.variables, self.forward)}
        return substitute(f, fmap, target=self.source)

    def inverted(self) -> "CoordChange":
        out = CoordChange.__new__(CoordChange)
        out.source, out.target = self.target, self.source
        out.forward, out.inverse = self.inverse, self.forward
        out._jac = out._ber = out._ber_t = out._ell_t = None
        return out

    def then(self, other: "CoordChange") -> "CoordChange":
        """First self, then other."""
        if other.source != self.target:
            raise ChartError("changes are not composable")
        fwd = {v.name: self.to_source(e) for v, e in zip(other.target.variables, other.forward)}
        inv = {v.name: other.to_target(e) for v, e in zip(self.source.variables, self.inverse)}
        return CoordChange(self.source, other.target, fwd, inv, verify=False)

    # -- Jacobian data -------------------------------------------------
    @property
    def jacobian(self) -> SuperMatrix:
        if self._jac is None:
            src = self.source
            rows = [[f.derive(a) for f in self.forward] for a in range(len(src))]
            self._jac = SuperMatrix(src, src.variables, self.target.variables, rows)
        return self._jac

    def jacobian_target(self) -> list[list[SuperExpr]]:
        """K[a][a'] as functions of the target coordinates."""
        return [[self.to_target(e) for e in r] for r in self.jacobian.entries]

    @property
    def berezinian(self) -> SuperExpr:
        """J = Ber(dx'/dx) as a function of the source coordinates."""
        if self._ber is None:
            self._ber = berezinian(self.jacobian)
        return self._ber

    @property
    def berezinian_target(self) -> SuperExpr:
        if self._ber_t is None:
            self._ber_t = self.to_target(self.berezinian)
        return self._ber_t

    def log_ber_gradient_target(self) -> list[SuperExpr]:
        """d_{a'} log J in target coordinates, via d J / J."""
        if self._ell_t is None:
            self._ell_t = log_gradient(self.berezinian_target)
        return self._ell_t

    def log_ber_gradient_source(self) -> list[SuperExpr]:
        """d_a log J in source coordinates, via the supertrace of K^-1 dK."""
        return [log_derivative_ber(self.jacobian, a) for a in range(len(self.source))]


def identity_change(chart: Chart) -> CoordChange:
    m = {v.name: chart.var(v.name) for v in chart.variables}
    return CoordChange(chart, chart, m, m)


def _check_source(obj_chart: Chart, phi: CoordChange):
    if obj_chart != phi.source:
        raise ChartError("object does not live on the source chart of the change")


# ---------------------------------------------------------------------------
# tensors, fields, densities

def transform_tensor(E: SymTensor2, phi: CoordChange) -> SymTensor2:
    """E'^{a'b'} = (-1)^{p(a')} [x^{a'}, x^{b'}]_E, rewritten in x'."""
    _check_source(E.chart, phi)
    tgt = phi.target
    n = len(tgt)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            b = bracket(E, phi.forward[i], phi.forward[j])
            if tgt.variables[i].parity:
                b = -b
            row.append(phi.to_target(b))
        rows.append(row)
    return SymTensor2(tgt, rows, E.parity)


def transform_field(X: VectorField, phi: CoordChange) -> VectorField:
    _check_source(X.chart, phi)
    return VectorField(phi.target, [phi.to_target(X(f)) for f in phi.forward])


def transform_density(s: Density, phi: CoordChange) -> Density:
    """s'(x') = s(x) J^{-weight}, as a function of x'."""
    _check_source(s.chart, phi)
    coef = phi.to_target(s.coefficient)
    factors = [(phi.to_target(b), e) for b, e in s.factors]
    w = s.weight
    if w:
        factors.append((phi.berezinian_target, -w))
    return Density(coef, w, factors)


def transform_operator(A: DiffOperator, phi: CoordChange) -> DiffOperator:
    """The operator A' with A'(s') = (A s)' for densities of A's weight."""
    _check_source(A.chart, phi)
    tgt = phi.target
    n = len(tgt)
    lam = A.weight
    K = phi.jacobian_target()
    ell = None
    if lam:
        # d_a log J in target coordinates, by the chain rule d_a = K[a][a'] d_a'
        ell_t = phi.log_ber_gradient_target()
        ell = []
        for a in range(n):
            s = tgt.zero
            for j in range(n):
                if K[a][j] and ell_t[j]:
                    s = s + K[a][j] * ell_t[j]
            ell.append(s)
    first = []
    for a in range(n):
        t = {}
        for j in range(n):
            if K[a][j]:
                t[(j,)] = K[a][j]
        if ell is not None and ell[a]:
            t[()] = ell[a].scale(lam)
        first.append(t)
    cache: dict[tuple, dict] = {(): {(): tgt.one}}

    def word(w):
        r = cache.get(w)
        if r is None:
            r = _compose_terms(tgt, first[w[0]], word(w[1:]))
            cache[w] = r
        return r

    out: dict = {}
    for w, c in A.terms.items():
        ct = phi.to_target(c)
        for w2, c2 in word(w).items():
            _add_term(out, w2, ct * c2)
    op = DiffOperator._wrap(tgt, out, A.weight, A.shift)
    if A.shift:
        d = A.shift
        if d.denominator != 1:
            raise ValueError("only integer weight shifts are supported")
        op = op.left_mul(phi.berezinian_target ** int(-d))
    return op


def transform_potential(U, E: SymTensor2, phi: CoordChange) -> SuperExpr:
    """U' = U + 1/2 d_a'(E'^{a'b'} l_b') - 1/4 l_a' E'^{a'b'} l_b', l = d log J."""
    _check_source(E.chart, phi)
    Et = transform_tensor(E, phi)
    tgt = phi.target
    n = len(tgt)
    ell = phi.log_ber_gradient_target()
    upper = []
    for a in range(n):
        s = tgt.zero
        for b in range(n):
            e = Et.entry(a, b)
            if e and ell[b]:
                s = s + e * ell[b]
        upper.append(s)
    div = tgt.zero
    quad = tgt.zero
    for a in range(n):
        if upper[a]:
            div = div + upper[a].derive(a)
            if ell[a]:
                quad = quad + ell[a] * upper[a]
    return phi.to_target(E.chart.coerce(U)) + div.scale(Fraction(1, 2)) - quad.scale(Fraction(1, 4))


def is_darboux(E: SymTensor2, chart: Chart | None = None) -> bool:
    chart = chart or E.chart
    ev = [i for i, v in enumerate(chart.variables) if not v.is_odd]
    od = [i for i, v in enumerate(chart.variables) if v.is_odd]
    if len(ev) != len(od):
        raise ValueError("Darboux coordinates need an n|n chart")
    if E.parity != ODD:
        return False
    pairs = set(zip(ev, od)) | set(zip(od, ev))
    n = len(chart)
    for i in range(n):
        for j in range(n):
            want = 1 if (i, j) in pairs else 0
            if E.entry(i, j) != want:
                return False
    return True


# ---------------------------------------------------------------------------
# one-dimensional projective connections

def schwarzian(y: SuperExpr, x) -> SuperExpr:
    y1 = y.derive(x)
    y2 = y1.derive(x)
    y3 = y2.derive(x)
    inv = invert(y1)
    return y3 * inv - (y2 * y2 * inv * inv).scale(Fraction(3, 2))


def transform_projective(U: SuperExpr, y: SuperExpr, phi: CoordChange | None = None) -> SuperExpr:
    """New projective connection under y = y(x).

    U'(y) y_x^2 = U(x) - 1/2 S(y), S the Schwarzian.  The result is returned
    as a function of x, or of y when the change ``phi`` (with inverse) is given.
    """
    chart = U.chart
    if chart.odd_names or len(chart) != 1:
        raise ValueError("projective connections live on a 1-dimensional even chart")
    x = chart.variables[0].name
    y1 = y.derive(x)
    if not y1 or y1.body().is_zero():
        raise ValueError("the map has a critical point")
    res = (U - schwarzian(y, x).scale(Fraction(1, 2))) * invert(y1 * y1)
    return phi.to_target(res) if phi is not None else res


def projective_operator(U: SuperExpr) -> DiffOperator:
    """d_x^2 + U from weight -1/2 to weight 3/2 densities."""
    chart = U.chart
    x = chart.variables[0].name
    return DiffOperator(chart, {(x, x): chart.one, (): U}, Fraction(-1, 2), 2)


def projective_by_conjugation(U: SuperExpr, y: SuperExpr) -> DiffOperator:
    """y_x^-2 o (y_x^{1/2} o (d_x^2 + U) o y_x^{-1/2}), all in x coordinates.

    This is J^{-(lambda+delta)} o Delta o J^{lambda} with J = y_x, lambda = -1/2,
    delta = 2, the transformed operator before renaming d_y = y_x^-1 d_x.
    """
    chart = U.chart
    x = chart.variables[0].name
    y1 = y.derive(x)
    op = DiffOperator(chart, {(x, x): chart.one, (): U}, 0)
    op = conjugate(op, y1, Fraction(1, 2))
    return op.left_mul(invert(y1 * y1))


def projective_in_new_coordinate(Unew_of_x: SuperExpr, y: SuperExpr) -> DiffOperator:
    """(y_x^-1 d_x)^2 + U' written in x coordinates."""
    chart = Unew_of_x.chart
    x = chart.variables[0].name
    inv = invert(y.derive(x))
    dy = DiffOperator(chart, {(x,): inv}, 0)
    return dy * dy + DiffOperator(chart, {(): Unew_of_x}, 0)
