"""Differential operators on densities of a fixed weight.

An operator is stored in coefficients-left normal form::

    sum over words w of  c_w(x) * d_{w[0]} d_{w[1]} ... d_{w[-1]}

where a word is a tuple of chart indices sorted by the chart order, with
each odd index used at most once (odd derivatives square to zero).  The
word acts right to left, i.e. ``d_{w[-1]}`` hits the argument first.

Local coordinates trivialize densities, so an operator acts on the
coefficient function; the weight only matters for composition checks,
adjoints and coordinate changes.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

from .graded import EVEN, ODD, Chart, GradedError, ParityError, SuperExpr, sum_exprs

NEG_INF = float("-inf")  # order of the zero operator

HALF = Fraction(1, 2)


class WeightError(GradedError):
    pass


def _parity_of_word(chart: Chart, word) -> int:
    return sum(chart.variables[i].parity for i in word) & 1


def _insert(chart: Chart, i: int, word: tuple) -> tuple[int, tuple] | None:
    """d_i * d_word rewritten as sign * d_word' with word' sorted; None if it vanishes."""
    pi = chart.variables[i].parity
    odd_before = 0
    pos = len(word)
    for k, j in enumerate(word):
        if j == i and pi == ODD:
            return None
        if j >= i:
            pos = k
            break
        if chart.variables[j].parity == ODD:
            odd_before += 1
    sign = -1 if (pi and odd_before & 1) else 1
    return sign, word[:pos] + (i,) + word[pos:]


def _add_term(terms: dict, word, c: SuperExpr):
    if not c:
        return
    old = terms.get(word)
    if old is None:
        terms[word] = c
    else:
        s = old + c
        if s:
            terms[word] = s
        else:
            del terms[word]


class DiffOperator:
    """Immutable differential operator on a chart.

    ``weight`` is the density weight of the argument; ``shift`` is added to
    it by the operator (zero for everything except projective operators).
    """

    __slots__ = ("chart", "terms", "weight", "shift", "_parity")

    def __init__(self, chart: Chart, terms: Mapping[tuple, SuperExpr] | None = None,
                 weight=HALF, shift=0):
        self.chart = chart
        clean = {}
        for w, c in (terms or {}).items():
            w = tuple(chart.index(v) for v in w)
            if list(w) != sorted(w):
                raise ValueError(f"word {w} is not in normal order")
            if any(w.count(i) > 1 and chart.variables[i].is_odd for i in w):
                continue
            c = chart.coerce(c)
            _add_term(clean, w, c)
        self.terms: dict[tuple, SuperExpr] = clean
        self.weight = Fraction(weight)
        self.shift = Fraction(shift)
        self._parity = "unset"

    @classmethod
    def _wrap(cls, chart, terms, weight, shift) -> "DiffOperator":
        obj = object.__new__(cls)
        obj.chart = chart
        obj.terms = terms
        obj.weight = weight
        obj.shift = shift
        obj._parity = "unset"
        return obj

    # -- constructors --------------------------------------------------
    @classmethod
    def zero(cls, chart: Chart, weight=HALF, shift=0) -> "DiffOperator":
        return cls(chart, {}, weight, shift)

    @classmethod
    def mult(cls, f: SuperExpr, weight=HALF) -> "DiffOperator":
        return cls(f.chart, {(): f}, weight)

    @classmethod
    def partial(cls, chart: Chart, v, weight=HALF) -> "DiffOperator":
        return cls(chart, {(chart.index(v),): chart.one}, weight)

    @classmethod
    def identity(cls, chart: Chart, weight=HALF) -> "DiffOperator":
        return cls(chart, {(): chart.one}, weight)

    def with_weight(self, weight, shift=None) -> "DiffOperator":
        return DiffOperator._wrap(self.chart, self.terms, Fraction(weight),
                                  self.shift if shift is None else Fraction(shift))

    # -- structure -----------------------------------------------------
    @property
    def out_weight(self) -> Fraction:
        return self.weight + self.shift

    @property
    def parity(self) -> int | None:
        if self._parity == "unset":
            ps = set()
            for w, c in self.terms.items():
                if not c.is_homogeneous():
                    raise ParityError("operator has a parity-mixed coefficient")
                ps.add((c.parity + _parity_of_word(self.chart, w)) & 1)
            if len(ps) > 1:
                raise ParityError("operator has parity-mixed terms")
            self._parity = ps.pop() if ps else None
        return self._parity

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def order(self):
        if not self.terms:
            return NEG_INF
        return max(len(w) for w in self.terms)

    def part(self, k: int) -> "DiffOperator":
        """Terms with words of length exactly ``k``."""
        return DiffOperator._wrap(self.chart, {w: c for w, c in self.terms.items() if len(w) == k},
                                  self.weight, self.shift)

    def coefficient(self, *vs) -> SuperExpr:
        """Coefficient of the normal-ordered word made of ``vs``."""
        word = tuple(sorted(self.chart.index(v) for v in vs))
        return self.terms.get(word, self.chart.zero)

    def free_term(self) -> SuperExpr:
        return self.terms.get((), self.chart.zero)

    # -- comparison ----------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, DiffOperator):
            return (self.chart == other.chart and self.terms == other.terms
                    and self.weight == other.weight and self.shift == other.shift)
        if isinstance(other, (int, Fraction, SuperExpr)):
            return self == DiffOperator.mult(self.chart.coerce(other), self.weight).with_weight(
                self.weight, self.shift)
        return NotImplemented

    def __hash__(self):
        return hash((tuple(sorted(self.terms.items(), key=lambda t: t[0])), self.weight))

    def __str__(self):
        if not self.terms:
            return "0"
        names = [v.name for v in self.chart.variables]
        parts = []
        for w in sorted(self.terms, key=lambda w: (-len(w), w)):
            c = str(self.terms[w])
            if not w:
                parts.append(c)
                continue
            d = "*".join(f"d_{names[i]}" for i in w)
            parts.append(d if c == "1" else f"-{d}" if c == "-1" else f"({c})*{d}")
        return " + ".join(parts)

    __repr__ = __str__

    # -- linear structure ----------------------------------------------
    def _check_compatible(self, other: "DiffOperator"):
        if self.chart != other.chart:
            raise GradedError("operators live on different charts")
        if self.weight != other.weight or self.shift != other.shift:
            raise WeightError("operators act between different weights")

    def __add__(self, other):
        if isinstance(other, (int, Fraction, SuperExpr)):
            other = DiffOperator.mult(self.chart.coerce(other), self.weight).with_weight(self.weight, self.shift)
        self._check_compatible(other)
        terms = dict(self.terms)
        for w, c in other.terms.items():
            _add_term(terms, w, c)
        return DiffOperator._wrap(self.chart, terms, self.weight, self.shift)

    __radd__ = __add__

    def __neg__(self):
        return DiffOperator._wrap(self.chart, {w: -c for w, c in self.terms.items()}, self.weight, self.shift)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, DiffOperator):
            return compose(self, other)
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if isinstance(other, SuperExpr):
            return compose(self, DiffOperator.mult(other, self.weight))
        return NotImplemented

    def __rmul__(self, other):
        # left multiplication by a function or scalar
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if isinstance(other, SuperExpr):
            return self.left_mul(other)
        return NotImplemented

    def scale(self, q) -> "DiffOperator":
        return DiffOperator._wrap(self.chart, {w: c.scale(q) for w, c in self.terms.items() if q},
                                  self.weight, self.shift)

    def left_mul(self, f: SuperExpr) -> "DiffOperator":
        terms = {}
        for w, c in self.terms.items():
            _add_term(terms, w, f * c)
        return DiffOperator._wrap(self.chart, terms, self.weight, self.shift)

    def map_coefficients(self, fn) -> "DiffOperator":
        terms = {}
        for w, c in self.terms.items():
            _add_term(terms, w, fn(c))
        return DiffOperator._wrap(self.chart, terms, self.weight, self.shift)

    # -- action --------------------------------------------------------
    def __call__(self, f: SuperExpr) -> SuperExpr:
        return self.act(f)

    def act(self, f: SuperExpr) -> SuperExpr:
        """Action on a coefficient function."""
        f = self.chart.coerce(f)
        total = self.chart.zero
        cache: dict[tuple, SuperExpr] = {(): f}

        def dw(word):
            r = cache.get(word)
            if r is None:
                r = dw(word[1:]).derive(word[0])
                cache[word] = r
            return r

        for w, c in self.terms.items():
            d = dw(w)
            if d:
                total = total + c * d
        return total


# ---------------------------------------------------------------------------
# composition

def _left_partial(i: int, terms: Mapping[tuple, SuperExpr], chart: Chart) -> dict:
    """Normal form of d_i o (sum c_w d_w)."""
    out: dict = {}
    pi = chart.variables[i].parity
    for w, c in terms.items():
        _add_term(out, w, c.derive(i))
        ins = _insert(chart, i, w)
        if ins is None:
            continue
        sign, w2 = ins
        if pi == ODD:
            ev, od = c.split_parity()
            c2 = ev - od
        else:
            c2 = c
        if sign < 0:
            c2 = -c2
        _add_term(out, w2, c2)
    return out


def _compose_terms(chart: Chart, a: Mapping, b: Mapping) -> dict:
    out: dict = {}
    cache: dict[tuple, dict] = {(): dict(b)}

    def word_times_b(word):
        r = cache.get(word)
        if r is None:
            r = _left_partial(word[0], word_times_b(word[1:]), chart)
            cache[word] = r
        return r

    for u, cu in a.items():
        for w, c in word_times_b(u).items():
            _add_term(out, w, cu * c)
    return out


def compose(a: DiffOperator, b: DiffOperator) -> DiffOperator:
    """The operator s -> a(b(s))."""
    if a.chart != b.chart:
        raise GradedError("operators live on different charts")
    if b.out_weight != a.weight:
        raise WeightError(f"cannot compose: output weight {b.out_weight} != input weight {a.weight}")
    return DiffOperator._wrap(a.chart, _compose_terms(a.chart, a.terms, b.terms), b.weight, a.shift + b.shift)


def _par(x) -> int:
    p = x.parity
    return p or 0


def commutator(a: DiffOperator, b: DiffOperator) -> DiffOperator:
    """Graded commutator ab - (-1)^{p(a)p(b)} ba."""
    ab = compose(a, b)
    ba = compose(b, a)
    return ab + ba if _par(a) * _par(b) else ab - ba


def adjoint(a: DiffOperator) -> DiffOperator:
    """Formal adjoint on half-densities.

    Term by term, (c d_W)* = (-1)^{p(c)p(W) + |W|} d_W o c, re-normalized.
    """
    if a.weight != HALF or a.shift != 0:
        raise WeightError("the adjoint is only defined for operators on half-densities")
    chart = a.chart
    out: dict = {}
    for w, c in a.terms.items():
        pw = _parity_of_word(chart, w)
        ev, od = c.split_parity()
        for part, pc in ((ev, EVEN), (od, ODD)):
            if not part:
                continue
            sign = -1 if ((pc * pw) + len(w)) & 1 else 1
            moved = _compose_terms(chart, {w: chart.one}, {(): part})
            for w2, c2 in moved.items():
                _add_term(out, w2, c2 if sign > 0 else -c2)
    return DiffOperator._wrap(chart, out, a.weight, a.shift)


def is_self_adjoint(a: DiffOperator) -> bool:
    return adjoint(a) == a


# ---------------------------------------------------------------------------
# vector fields

class VectorField:
    """X = X^a d_a; components are indexed like the chart variables."""

    __slots__ = ("chart", "components")

    def __init__(self, chart: Chart, components: Iterable | Mapping):
        self.chart = chart
        if isinstance(components, Mapping):
            comps = [chart.zero] * len(chart)
            for k, v in components.items():
                comps[chart.index(k)] = chart.coerce(v)
        else:
            comps = [chart.coerce(v) for v in components]
            if len(comps) != len(chart):
                raise ValueError("wrong number of vector field components")
        self.components: tuple[SuperExpr, ...] = tuple(comps)

    @classmethod
    def zero(cls, chart: Chart) -> "VectorField":
        return cls(chart, [chart.zero] * len(chart))

    def __getitem__(self, v) -> SuperExpr:
        return self.components[self.chart.index(v)]

    @property
    def parity(self) -> int | None:
        ps = set()
        for i, c in enumerate(self.components):
            if c:
                if not c.is_homogeneous():
                    raise ParityError("vector field has a parity-mixed component")
                ps.add((c.parity + self.chart.variables[i].parity) & 1)
        if len(ps) > 1:
            raise ParityError("vector field is not parity homogeneous")
        return ps.pop() if ps else None

    def is_zero(self) -> bool:
        return all(not c for c in self.components)

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        return isinstance(other, VectorField) and self.chart == other.chart and \
            self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.chart, [a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.chart, [a - b for a, b in zip(self.components, other.components)])

    def __neg__(self):
        return VectorField(self.chart, [-a for a in self.components])

    def scale(self, q) -> "VectorField":
        return VectorField(self.chart, [a.scale(q) for a in self.components])

    def left_mul(self, f: SuperExpr) -> "VectorField":
        return VectorField(self.chart, [f * a for a in self.components])

    def map(self, fn) -> "VectorField":
        return VectorField(self.chart, [fn(a) for a in self.components])

    def __str__(self):
        names = [v.name for v in self.chart.variables]
        parts = [f"({c})*d_{names[i]}" for i, c in enumerate(self.components) if c]
        return " + ".join(parts) if parts else "0"

    __repr__ = __str__

    def as_dict(self) -> dict[str, str]:
        return {v.name: str(c) for v, c in zip(self.chart.variables, self.components) if c}

    def operator(self, weight=0) -> DiffOperator:
        """The derivation X^a d_a (no divergence term)."""
        return DiffOperator(self.chart, {(i,): c for i, c in enumerate(self.components) if c}, weight)

    def __call__(self, f: SuperExpr) -> SuperExpr:
        total = self.chart.zero
        for i, c in enumerate(self.components):
            if c:
                d = f.derive(i)
                if d:
                    total = total + c * d
        return total

    def divergence(self) -> SuperExpr:
        """Sum of (-1)^{p(a)(p(X)+1)} d_a X^a, the coordinate divergence."""
        px = _par(self)
        total = self.chart.zero
        for i, c in enumerate(self.components):
            if c:
                d = c.derive(i)
                if self.chart.variables[i].parity * (px + 1) & 1:
                    total = total - d
                else:
                    total = total + d
        return total


def field_bracket(x: VectorField, y: VectorField) -> VectorField:
    """Graded commutator [X, Y] of vector fields."""
    sign = -1 if _par(x) * _par(y) else 1
    comps = []
    for a in range(len(x.chart)):
        t = x(y.components[a])
        u = y(x.components[a])
        comps.append(t - u if sign > 0 else t + u)
    return VectorField(x.chart, comps)


def field_of(op: DiffOperator) -> VectorField:
    """Read the first-order part of ``op`` as a vector field."""
    comps = [op.terms.get((i,), op.chart.zero) for i in range(len(op.chart))]
    return VectorField(op.chart, comps)


def lie_derivative(x: VectorField, weight=HALF) -> DiffOperator:
    """L_X on densities of the given weight: X^a d_a + weight * div X."""
    weight = Fraction(weight)
    op = x.operator(weight)
    if weight:
        op = op + DiffOperator.mult(x.divergence().scale(weight), weight)
    return op


def principal_symbol(a: DiffOperator, order: int | None = None):
    """Order 2: the graded-symmetric tensor S with a = 1/2 S^{ab} d_b d_a + lower.

    Order 1: the vector field of first-order coefficients.  Passing ``order``
    reads that part even when the operator has lower order.
    """
    from .poisson import SymTensor2

    chart = a.chart
    k = a.order() if order is None else order
    if order is not None and a.order() > order:
        raise ValueError(f"operator has order {a.order()} > {order}")
    if k == 1:
        return field_of(a)
    if k != 2:
        raise ValueError(f"principal symbol is extracted for orders 1 and 2, got {k}")
    n = len(chart)
    ent = [[chart.zero] * n for _ in range(n)]
    for w, c in a.terms.items():
        if len(w) != 2:
            continue
        i, j = w
        if i == j:
            ent[i][i] = c.scale(2)
        else:
            pi, pj = chart.variables[i].parity, chart.variables[j].parity
            ent[i][j] = -c if pi * pj else c
            ent[j][i] = c
    par = a.parity
    return SymTensor2(chart, ent, par if par is not None else ODD, check=False)


# ---------------------------------------------------------------------------
# conjugation by formal powers

def conjugate_logderiv(a: DiffOperator, ell: list[SuperExpr], alpha) -> DiffOperator:
    """Replace every d_i by d_i - alpha * ell_i.

    With ell_i = d_i(r)/r this is r^alpha o a o r^(-alpha) for an even,
    invertible r, computed without ever forming r^alpha.
    """
    alpha = Fraction(alpha)
    chart = a.chart
    if not alpha:
        return a
    cache: dict[tuple, dict] = {(): {(): chart.one}}

    def word_op(word):
        r = cache.get(word)
        if r is None:
            rest = word_op(word[1:])
            i = word[0]
            r = _left_partial(i, rest, chart)
            sh = ell[i].scale(-alpha)
            if sh:
                for w, c in rest.items():
                    _add_term(r, w, sh * c)
            cache[word] = r
        return r

    out: dict = {}
    for w, c in a.terms.items():
        for w2, c2 in word_op(w).items():
            _add_term(out, w2, c * c2)
    return DiffOperator._wrap(chart, out, a.weight, a.shift)


def log_gradient(r: SuperExpr) -> list[SuperExpr]:
    """[d_a r / r] for an even invertible r."""
    from .graded import invert
    inv = invert(r)
    return [r.derive(i) * inv for i in range(len(r.chart))]


def conjugate(a: DiffOperator, r: SuperExpr, alpha) -> DiffOperator:
    """r^alpha o a o r^(-alpha)."""
    return conjugate_logderiv(a, log_gradient(r), alpha)


# ---------------------------------------------------------------------------
# densities

class Density:
    """s(x) |Dx|^weight, optionally times formal powers of even invertible functions.

    ``factors`` is a tuple of ``(base, exponent)`` with exponents in (0, 1);
    integer parts of exponents are folded into ``coefficient``.
    """

    __slots__ = ("coefficient", "weight", "factors")

    def __init__(self, coefficient: SuperExpr, weight=HALF, factors=()):
        self.weight = Fraction(weight)
        coef = coefficient
        merged: dict[SuperExpr, Fraction] = {}
        for base, ex in factors:
            merged[base] = merged.get(base, Fraction(0)) + Fraction(ex)
        fl = []
        for base, ex in merged.items():
            n = ex.numerator // ex.denominator
            rem = ex - n
            if n:
                coef = coef * base ** n
            if rem:
                fl.append((base, rem))
        fl.sort(key=lambda t: (str(t[0]), t[1]))
        self.coefficient = coef
        self.factors = tuple(fl)

    @property
    def chart(self) -> Chart:
        return self.coefficient.chart

    def __eq__(self, other):
        if not isinstance(other, Density):
            return NotImplemented
        if self.weight != other.weight:
            return False
        if not self.coefficient and not other.coefficient:
            return True
        return self.coefficient == other.coefficient and self.factors == other.factors

    def __hash__(self):
        return hash((self.coefficient, self.weight, self.factors))

    def __str__(self):
        f = "".join(f"*({b})^({e})" for b, e in self.factors)
        return f"({self.coefficient}){f}|D|^{self.weight}"

    __repr__ = __str__


def apply(a: DiffOperator, s: Density) -> Density:
    if s.weight != a.weight:
        raise WeightError(f"operator expects weight {a.weight}, density has weight {s.weight}")
    op = a
    for base, ex in s.factors:
        op = conjugate(op, base, -ex)
    return Density(op.act(s.coefficient), a.out_weight, s.factors)
