"""Z2-graded rational expressions in even and odd coordinates.

A :class:`SuperExpr` is stored as a global fraction::

    (sum over odd monomials m of  c_m(x) * theta^m) / d(x)

where ``c_m`` and ``d`` are polynomials in the even coordinates with
rational coefficients (sparse polynomials from :mod:`sympy.polys.rings`),
``theta^m`` is an ordered square-free product of odd coordinates encoded
as a bitmask, and ``d`` is monic and coprime to the collection of ``c_m``.
Two expressions are equal iff these canonical data coincide.

All derivatives are *left* derivatives: ``derive(e, v)`` moves ``v`` to the
front of each monomial (picking up a Koszul sign) and then removes it.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping

from sympy import QQ
from sympy.polys.rings import PolyRing


class GradedError(ValueError):
    """Base class for errors raised by the graded expression layer."""


class ParityError(GradedError):
    pass


class ZeroBodyError(GradedError, ZeroDivisionError):
    pass


class ChartError(GradedError):
    pass


EVEN, ODD = 0, 1

_PARITY_NAMES = {"even": EVEN, "odd": ODD, "0": EVEN, "1": ODD}


@dataclass(frozen=True)
class Variable:
    name: str
    parity: int

    def __post_init__(self):
        if self.parity not in (EVEN, ODD):
            raise ValueError(f"bad parity {self.parity!r} for {self.name}")
        if not self.name.isidentifier():
            raise ValueError(f"bad variable name {self.name!r}")

    @property
    def is_odd(self) -> bool:
        return self.parity == ODD

    def __str__(self):
        return f"{self.name}:{'odd' if self.parity else 'even'}"


def _popcount(m: int) -> int:
    return bin(m).count("1")


class Chart:
    """An ordered list of coordinates with fixed parities.

    The declaration order is the global variable order: odd monomials,
    derivative words and printed output are all normalized against it.
    """

    def __init__(self, variables: Iterable[Variable | tuple[str, int | str]], name: str = ""):
        vs = []
        for v in variables:
            if not isinstance(v, Variable):
                nm, par = v
                if isinstance(par, str):
                    par = _PARITY_NAMES[par.strip().lower()]
                v = Variable(nm, par)
            vs.append(v)
        names = [v.name for v in vs]
        if len(set(names)) != len(names):
            raise ChartError(f"duplicate variable names in chart: {names}")
        self.name = name
        self.variables: tuple[Variable, ...] = tuple(vs)
        self._index = {v.name: i for i, v in enumerate(vs)}
        self.even_names = [v.name for v in vs if not v.is_odd]
        self.odd_names = [v.name for v in vs if v.is_odd]
        # chart index -> position inside the ring gens / odd bitmask
        self._slot = []
        ne = no = 0
        for v in vs:
            if v.is_odd:
                self._slot.append(no)
                no += 1
            else:
                self._slot.append(ne)
                ne += 1
        self.ring = PolyRing(self.even_names, QQ)
        self._sign_cache: dict[tuple[int, int], int] = {}
        self._zero = None
        self._one = None

    @classmethod
    def from_decl(cls, text: str, name: str = "") -> "Chart":
        """``Chart.from_decl("x:even, th:odd")``"""
        items = []
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if ":" not in part:
                raise ChartError(f"expected name:parity, got {part!r}")
            nm, par = part.split(":", 1)
            par = par.strip().lower()
            if par not in _PARITY_NAMES:
                raise ChartError(f"unknown parity {par!r} for {nm.strip()}")
            items.append(Variable(nm.strip(), _PARITY_NAMES[par]))
        return cls(items, name=name)

    # -- basic queries -------------------------------------------------
    def __len__(self):
        return len(self.variables)

    def __iter__(self):
        return iter(self.variables)

    def __contains__(self, name):
        if isinstance(name, Variable):
            return self._index.get(name.name) is not None and self.variables[self._index[name.name]] == name
        return name in self._index

    def __eq__(self, other):
        return isinstance(other, Chart) and self.variables == other.variables

    def __hash__(self):
        return hash(self.variables)

    def __repr__(self):
        return f"Chart({', '.join(str(v) for v in self.variables)})"

    def index(self, v: str | Variable | int) -> int:
        if isinstance(v, int):
            return v
        name = v.name if isinstance(v, Variable) else v
        try:
            return self._index[name]
        except KeyError:
            raise ChartError(f"unknown variable {name!r} in {self!r}") from None

    def parity(self, v) -> int:
        return self.variables[self.index(v)].parity

    def dim(self) -> tuple[int, int]:
        return len(self.even_names), len(self.odd_names)

    def extend(self, extra: Iterable[Variable | tuple[str, int | str]], name: str = "") -> "Chart":
        return Chart(list(self.variables) + list(extra), name=name)

    # -- constructors --------------------------------------------------
    def var(self, v) -> "SuperExpr":
        i = self.index(v)
        slot = self._slot[i]
        if self.variables[i].is_odd:
            return SuperExpr._raw(self, {1 << slot: self.ring.one}, self.ring.one)
        return SuperExpr._raw(self, {0: self.ring.gens[slot]}, self.ring.one)

    def vars(self) -> list["SuperExpr"]:
        return [self.var(i) for i in range(len(self))]

    def const(self, c) -> "SuperExpr":
        c = _to_qq(c)
        if c == 0:
            return self.zero
        return SuperExpr._raw(self, {0: self.ring(c)}, self.ring.one)

    @property
    def zero(self) -> "SuperExpr":
        if self._zero is None:
            self._zero = SuperExpr._raw(self, {}, self.ring.one)
        return self._zero

    @property
    def one(self) -> "SuperExpr":
        if self._one is None:
            self._one = SuperExpr._raw(self, {0: self.ring.one}, self.ring.one)
        return self._one

    def parse(self, text: str) -> "SuperExpr":
        from .parsing import parse_expr
        return parse_expr(text, self)

    def coerce(self, e) -> "SuperExpr":
        """Bring ``e`` (a number or an expression on another chart) into this chart.

        Variables are matched by name and must keep their parity.
        """
        if isinstance(e, SuperExpr):
            if e.chart is self or e.chart == self:
                if e.chart is self:
                    return e
                return SuperExpr._raw(self, dict(e._num), e._den)
            return substitute(e, {}, target=self)
        return self.const(e)

    # -- internal helpers ----------------------------------------------
    def _odd_sign(self, m1: int, m2: int) -> int:
        """Sign of theta^m1 * theta^m2 relative to theta^(m1|m2); masks disjoint."""
        key = (m1, m2)
        s = self._sign_cache.get(key)
        if s is None:
            n = 0
            j = m2
            while j:
                low = j & -j
                n += _popcount(m1 & ~((low << 1) - 1))
                j ^= low
            s = -1 if n & 1 else 1
            self._sign_cache[key] = s
        return s


# Charts are compared structurally; this is a convenience for functions
# that accept "the chart of e".
def _same_chart(a: "SuperExpr", b: "SuperExpr") -> Chart:
    if a.chart is b.chart or a.chart == b.chart:
        return a.chart
    raise ChartError(f"expressions live on different charts: {a.chart!r} vs {b.chart!r}")


def _to_qq(c):
    if isinstance(c, Fraction):
        return QQ(c.numerator, c.denominator)
    if isinstance(c, int):
        return QQ(c)
    if isinstance(c, str):
        f = Fraction(c)
        return QQ(f.numerator, f.denominator)
    return QQ.convert(c)


def _normalize(ring, num: dict, den):
    """Drop zeros, cancel common factors, make the denominator monic."""
    num = {m: c for m, c in num.items() if c}
    if not num:
        return {}, ring.one
    if den == ring.one:
        return num, den
    if den.is_ground:
        inv = QQ.one / den.LC
        return {m: c.mul_ground(inv) for m, c in num.items()}, ring.one
    g = den
    for c in num.values():
        g = g.gcd(c)
        if g.is_ground:
            break
    if not g.is_ground:
        den = den.exquo(g)
        num = {m: c.exquo(g) for m, c in num.items()}
    lc = den.LC
    if lc != 1:
        inv = QQ.one / lc
        den = den.mul_ground(inv)
        num = {m: c.mul_ground(inv) for m, c in num.items()}
    return num, den


class SuperExpr:
    """Immutable canonical element of the graded rational function ring."""

    __slots__ = ("chart", "_num", "_den", "_hash")

    def __init__(self, *a, **k):
        raise TypeError("use Chart.var/Chart.const/Chart.parse to build expressions")

    @classmethod
    def _raw(cls, chart: Chart, num: dict, den) -> "SuperExpr":
        obj = object.__new__(cls)
        obj.chart = chart
        obj._num = num
        obj._den = den
        obj._hash = None
        return obj

    @classmethod
    def _make(cls, chart: Chart, num: dict, den) -> "SuperExpr":
        num, den = _normalize(chart.ring, num, den)
        return cls._raw(chart, num, den)

    # -- structure -----------------------------------------------------
    def is_zero(self) -> bool:
        return not self._num

    def __bool__(self):
        return bool(self._num)

    @property
    def parity(self) -> int | None:
        """0 or 1 for homogeneous expressions, None for zero.

        Raises ParityError for parity-mixed sums.
        """
        ps = {_popcount(m) & 1 for m in self._num}
        if not ps:
            return None
        if len(ps) > 1:
            raise ParityError(f"expression {self} has mixed parity")
        return ps.pop()

    def is_homogeneous(self) -> bool:
        return len({_popcount(m) & 1 for m in self._num}) <= 1

    def split_parity(self) -> tuple["SuperExpr", "SuperExpr"]:
        ev = {m: c for m, c in self._num.items() if not _popcount(m) & 1}
        od = {m: c for m, c in self._num.items() if _popcount(m) & 1}
        return (SuperExpr._make(self.chart, ev, self._den),
                SuperExpr._make(self.chart, od, self._den))

    def body(self) -> "SuperExpr":
        """The odd-variable-free part."""
        c = self._num.get(0)
        if c is None:
            return self.chart.zero
        return SuperExpr._make(self.chart, {0: c}, self._den)

    def is_constant(self) -> bool:
        return self._den == self.chart.ring.one and all(
            m == 0 and c.is_ground for m, c in self._num.items())

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise GradedError(f"{self} is not a constant")
        c = self._num.get(0)
        if c is None:
            return Fraction(0)
        q = c.LC
        return Fraction(int(q.numerator), int(q.denominator))

    def odd_free(self) -> bool:
        return all(m == 0 for m in self._num)

    def is_polynomial(self) -> bool:
        return self._den == self.chart.ring.one

    def depends_on(self, v) -> bool:
        i = self.chart.index(v)
        slot = self.chart._slot[i]
        if self.chart.variables[i].is_odd:
            return any(m >> slot & 1 for m in self._num)
        g = self.chart.ring.gens[slot]
        return any(c.diff(g) for c in self._num.values()) or bool(self._den.diff(g))

    def in_ideal(self, v) -> bool:
        """True iff every monomial contains the odd variable ``v``."""
        i = self.chart.index(v)
        if not self.chart.variables[i].is_odd:
            raise ParityError("ideal membership is only tracked for odd generators")
        bit = 1 << self.chart._slot[i]
        return all(m & bit for m in self._num)

    def numerator_terms(self):
        """Iterate ``(odd names tuple, even PolyElement)`` pairs of the numerator."""
        odd = self.chart.odd_names
        for m, c in self._num.items():
            yield tuple(odd[k] for k in range(len(odd)) if m >> k & 1), c

    @property
    def denominator(self):
        return self._den

    # -- arithmetic ----------------------------------------------------
    def _coerce_other(self, other):
        if isinstance(other, SuperExpr):
            _same_chart(self, other)
            return other
        if isinstance(other, (int, Fraction)) or type(other).__name__ in ("mpq", "PythonMPQ"):
            return self.chart.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce_other(other)
        if other is NotImplemented:
            return NotImplemented
        if not other._num:
            return self
        if not self._num:
            return other
        d1, d2 = self._den, other._den
        if d1 == d2:
            num = dict(self._num)
            for m, c in other._num.items():
                num[m] = num[m] + c if m in num else c
            if d1 == self.chart.ring.one:
                return SuperExpr._raw(self.chart, {m: c for m, c in num.items() if c}, d1)
            return SuperExpr._make(self.chart, num, d1)
        g = d1.gcd(d2)
        f1 = d2.exquo(g)
        f2 = d1.exquo(g)
        num = {m: c * f1 for m, c in self._num.items()}
        for m, c in other._num.items():
            c = c * f2
            num[m] = num[m] + c if m in num else c
        return SuperExpr._make(self.chart, num, d1 * f1)

    __radd__ = __add__

    def __neg__(self):
        return SuperExpr._raw(self.chart, {m: -c for m, c in self._num.items()}, self._den)

    def __pos__(self):
        return self

    def __sub__(self, other):
        other = self._coerce_other(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce_other(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce_other(other)
        if other is NotImplemented:
            return NotImplemented
        if not self._num or not other._num:
            return self.chart.zero
        chart = self.chart
        sign = chart._odd_sign
        num: dict = {}
        for m1, c1 in self._num.items():
            for m2, c2 in other._num.items():
                if m1 & m2:
                    continue
                c = c1 * c2
                if m1 and m2 and sign(m1, m2) < 0:
                    c = -c
                m = m1 | m2
                num[m] = num[m] + c if m in num else c
        den = self._den * other._den
        if den == chart.ring.one:
            return SuperExpr._raw(chart, {m: c for m, c in num.items() if c}, den)
        return SuperExpr._make(chart, num, den)

    def __rmul__(self, other):
        # scalars commute with everything
        other = self._coerce_other(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self

    def __truediv__(self, other):
        other = self._coerce_other(other)
        if other is NotImplemented:
            return NotImplemented
        return self * invert(other)

    def __rtruediv__(self, other):
        other = self._coerce_other(other)
        if other is NotImplemented:
            return NotImplemented
        return other * invert(self)

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return invert(self) ** (-n)
        if n >= 2 and self._num and self.is_homogeneous() and self.parity == ODD:
            return self.chart.zero
        result = self.chart.one
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def scale(self, q) -> "SuperExpr":
        q = _to_qq(q)
        if q == 0:
            return self.chart.zero
        return SuperExpr._raw(self.chart, {m: c.mul_ground(q) for m, c in self._num.items()}, self._den)

    # -- comparison ----------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.chart.const(other)
        if not isinstance(other, SuperExpr):
            return NotImplemented
        if not (self.chart is other.chart or self.chart == other.chart):
            return False
        return self._den == other._den and self._num == other._num

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((tuple(sorted((m, c) for m, c in self._num.items())), self._den))
        return self._hash

    # -- printing ------------------------------------------------------
    def __str__(self):
        return to_string(self)

    def __repr__(self):
        return f"SuperExpr({to_string(self)!r})"

    # -- calculus ------------------------------------------------------
    def derive(self, v) -> "SuperExpr":
        return derive(self, v)

    def diff(self, *vs) -> "SuperExpr":
        """``e.diff(a, b)`` is the left derivative d_a d_b e (d_b applied first)."""
        e = self
        for v in reversed(vs):
            e = derive(e, v)
        return e

    def subs(self, mapping, target=None) -> "SuperExpr":
        return substitute(self, mapping, target=target)


# ---------------------------------------------------------------------------
# printing

def _fmt_coeff(q) -> str:
    num, den = int(q.numerator), int(q.denominator)
    return str(num) if den == 1 else f"{num}/{den}"


def _poly_terms_sorted(p, nvars):
    # graded order: higher total degree first, then lexicographic on exponents
    return sorted(p.terms(), key=lambda t: (-sum(t[0]), tuple(-e for e in t[0])))


def _poly_str(p, names) -> str:
    pieces = []
    for exps, c in _poly_terms_sorted(p, len(names)):
        factors = []
        for nm, e in zip(names, exps):
            if e == 1:
                factors.append(nm)
            elif e > 1:
                factors.append(f"{nm}^{e}")
        pieces.append((c, factors))
    return _join_terms(pieces)


def _join_terms(pieces) -> str:
    out = []
    for i, (c, factors) in enumerate(pieces):
        neg = c < 0
        a = -c if neg else c
        if factors:
            body = "*".join(factors)
            if a != 1:
                body = f"{_fmt_coeff(a)}*{body}"
        else:
            body = _fmt_coeff(a)
        if i == 0:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out) if out else "0"


def to_string(e: SuperExpr) -> str:
    """Canonical printed form; stable across runs."""
    if not e._num:
        return "0"
    chart = e.chart
    evn = chart.even_names
    odd = chart.odd_names
    pieces = []
    for m in sorted(e._num, key=lambda m: (_popcount(m), [k for k in range(len(odd)) if m >> k & 1])):
        onames = [odd[k] for k in range(len(odd)) if m >> k & 1]
        for exps, c in _poly_terms_sorted(e._num[m], len(evn)):
            factors = []
            for nm, ex in zip(evn, exps):
                if ex == 1:
                    factors.append(nm)
                elif ex > 1:
                    factors.append(f"{nm}^{ex}")
            pieces.append((c, factors + onames))
    s = _join_terms(pieces)
    if e._den != chart.ring.one:
        d = _poly_str(e._den, evn)
        if len(pieces) > 1:
            s = f"({s})"
        if any(ch in d for ch in " *"):
            d = f"({d})"
        return f"{s}/{d}"
    return s


# ---------------------------------------------------------------------------
# calculus

def derive(e: SuperExpr, v) -> SuperExpr:
    """Left derivative of ``e`` with respect to the coordinate ``v``."""
    chart = e.chart
    i = chart.index(v)
    slot = chart._slot[i]
    if not e._num:
        return e
    if chart.variables[i].is_odd:
        bit = 1 << slot
        below = bit - 1
        num = {}
        for m, c in e._num.items():
            if m & bit:
                num[m ^ bit] = -c if _popcount(m & below) & 1 else c
        return SuperExpr._raw(chart, num, e._den) if e._den == chart.ring.one else SuperExpr._make(chart, num, e._den)
    g = chart.ring.gens[slot]
    den = e._den
    if den == chart.ring.one:
        num = {m: c.diff(g) for m, c in e._num.items()}
        return SuperExpr._raw(chart, {m: c for m, c in num.items() if c}, den)
    dd = den.diff(g)
    num = {m: c.diff(g) * den - c * dd for m, c in e._num.items()}
    return SuperExpr._make(chart, num, den * den)


def invert(e: SuperExpr) -> SuperExpr:
    """Multiplicative inverse of an even expression with nonzero body.

    The nilpotent part is handled by the terminating geometric series.
    """
    chart = e.chart
    if not e._num:
        raise ZeroBodyError("cannot invert zero")
    if e.parity != EVEN:
        raise ParityError(f"cannot invert odd expression {e}")
    b = e._num.get(0)
    if not b:
        raise ZeroBodyError(f"expression {e} has zero body")
    body_inv = SuperExpr._make(chart, {0: e._den}, b)
    if len(e._num) == 1:
        return body_inv
    nil = SuperExpr._make(chart, {m: c for m, c in e._num.items() if m}, e._den)
    r = -(nil * body_inv)
    total = chart.one
    power = chart.one
    while True:
        power = power * r
        if not power:
            break
        total = total + power
    return body_inv * total


def substitute(e: SuperExpr, mapping: Mapping, target: Chart | None = None) -> SuperExpr:
    """Simultaneous substitution of coordinates.

    ``mapping`` sends variables of ``e.chart`` (names, indices or Variables)
    to expressions on ``target`` (default: ``e.chart``). Unmapped variables
    are sent to the variable of the same name in ``target``.
    """
    src = e.chart
    if target is None:
        imgs = [v for v in mapping.values() if isinstance(v, SuperExpr)]
        target = imgs[0].chart if imgs else src
    images: list[SuperExpr | None] = [None] * len(src)
    for k, img in mapping.items():
        i = src.index(k)
        if not isinstance(img, SuperExpr):
            img = target.const(img)
        elif not (img.chart is target or img.chart == target):
            raise ChartError("substitution images must share one chart")
        p = img.parity
        if p is not None and p != src.variables[i].parity:
            raise ParityError(f"substitution for {src.variables[i].name} changes parity")
        images[i] = img
    for i, v in enumerate(src.variables):
        if images[i] is None:
            if v.name not in target:
                raise ChartError(f"no image for {v.name} in target chart")
            if target.parity(v.name) != v.parity:
                raise ParityError(f"{v.name} has different parity in target chart")
            images[i] = target.var(v.name)

    even_imgs = [images[i] for i, v in enumerate(src.variables) if not v.is_odd]
    odd_imgs = [images[i] for i, v in enumerate(src.variables) if v.is_odd]
    power_cache: dict[tuple[int, int], SuperExpr] = {}

    def power(k, n):
        key = (k, n)
        r = power_cache.get(key)
        if r is None:
            r = even_imgs[k] if n == 1 else power(k, n - 1) * even_imgs[k]
            power_cache[key] = r
        return r

    def eval_poly(p):
        acc = target.zero
        for exps, c in p.terms():
            t = target.const(c)
            for k, n in enumerate(exps):
                if n:
                    t = t * power(k, n)
            acc = acc + t
        return acc

    result = target.zero
    for m, c in e._num.items():
        t = eval_poly(c)
        k = 0
        mm = m
        while mm:
            if mm & 1:
                t = t * odd_imgs[k]
            mm >>= 1
            k += 1
        result = result + t
    if e._den != src.ring.one:
        d = eval_poly(e._den)
        if d.is_zero() or not d._num.get(0):
            raise ZeroBodyError("substitution makes a denominator vanish")
        result = result * invert(d)
    return result


def as_expr(chart: Chart, x) -> SuperExpr:
    if isinstance(x, SuperExpr):
        return chart.coerce(x)
    if isinstance(x, str):
        return chart.parse(x)
    return chart.const(x)


def sum_exprs(chart: Chart, items) -> SuperExpr:
    return reduce(lambda a, b: a + b, items, chart.zero)
