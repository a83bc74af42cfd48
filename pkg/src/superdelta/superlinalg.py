"""Supermatrices over :class:`SuperExpr`: products, inverse, Berezinian.

Rows and columns are labelled by :class:`Variable` objects so the block
structure comes from the labels rather than from integer positions.  An
entry in row ``a`` and column ``b`` of a matrix of parity ``p`` must have
parity ``p + p(a) + p(b)`` (or be zero).
"""
from __future__ import annotations

from typing import Sequence

from .graded import (EVEN, ODD, Chart, GradedError, ParityError, SuperExpr,
                     Variable, ZeroBodyError, invert)


class SingularError(GradedError):
    pass


def _labels(xs) -> tuple[Variable, ...]:
    if isinstance(xs, Chart):
        return xs.variables
    return tuple(xs)


class SuperMatrix:
    def __init__(self, chart: Chart, rows, cols, entries: Sequence[Sequence], parity: int = EVEN,
                 check: bool = True):
        self.chart = chart
        self.rows = _labels(rows)
        self.cols = _labels(cols)
        self.parity = parity
        data = []
        for r in entries:
            data.append(tuple(chart.coerce(e) if not isinstance(e, SuperExpr) or e.chart is not chart
                              else e for e in r))
        self.entries: tuple[tuple[SuperExpr, ...], ...] = tuple(data)
        if len(self.entries) != len(self.rows) or any(len(r) != len(self.cols) for r in self.entries):
            raise ValueError("entry array does not match row/column labels")
        if check:
            self._check_parities()

    def _check_parities(self):
        for i, a in enumerate(self.rows):
            for j, b in enumerate(self.cols):
                e = self.entries[i][j]
                if e.is_zero():
                    continue
                want = (self.parity + a.parity + b.parity) % 2
                if not e.is_homogeneous() or e.parity != want:
                    raise ParityError(f"entry ({a.name},{b.name}) = {e} should have parity {want}")

    # -- constructors --------------------------------------------------
    @classmethod
    def identity(cls, chart: Chart, labels=None) -> "SuperMatrix":
        labels = _labels(labels if labels is not None else chart)
        n = len(labels)
        return cls(chart, labels, labels,
                   [[chart.one if i == j else chart.zero for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, chart: Chart, rows, cols, parity: int = EVEN) -> "SuperMatrix":
        rows, cols = _labels(rows), _labels(cols)
        return cls(chart, rows, cols, [[chart.zero] * len(cols) for _ in rows], parity)

    # -- access --------------------------------------------------------
    @property
    def shape(self):
        return len(self.rows), len(self.cols)

    def _ri(self, a) -> int:
        return _pos(self.rows, a)

    def _ci(self, b) -> int:
        return _pos(self.cols, b)

    def __getitem__(self, key) -> SuperExpr:
        a, b = key
        return self.entries[self._ri(a)][self._ci(b)]

    def __eq__(self, other):
        return (isinstance(other, SuperMatrix) and self.rows == other.rows and self.cols == other.cols
                and self.entries == other.entries)

    def __hash__(self):
        return hash((self.rows, self.cols, self.entries))

    def __repr__(self):
        body = "; ".join(", ".join(str(e) for e in r) for r in self.entries)
        return f"SuperMatrix[{body}]"

    def is_zero(self) -> bool:
        return all(e.is_zero() for r in self.entries for e in r)

    def map(self, fn) -> "SuperMatrix":
        return SuperMatrix(self.chart, self.rows, self.cols,
                           [[fn(e) for e in r] for r in self.entries], self.parity, check=False)

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other: "SuperMatrix") -> "SuperMatrix":
        self._same_shape(other)
        return SuperMatrix(self.chart, self.rows, self.cols,
                           [[x + y for x, y in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)],
                           self.parity)

    def __sub__(self, other: "SuperMatrix") -> "SuperMatrix":
        self._same_shape(other)
        return SuperMatrix(self.chart, self.rows, self.cols,
                           [[x - y for x, y in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)],
                           self.parity)

    def __neg__(self):
        return self.map(lambda e: -e)

    def _same_shape(self, other):
        if [v.parity for v in self.rows] != [v.parity for v in other.rows] or \
           [v.parity for v in self.cols] != [v.parity for v in other.cols]:
            raise ValueError("supermatrix shapes differ")

    def __matmul__(self, other: "SuperMatrix") -> "SuperMatrix":
        if [v.parity for v in self.cols] != [v.parity for v in other.rows]:
            raise ValueError("inner block structures differ")
        z = self.chart.zero
        out = []
        for r in self.entries:
            row = []
            for j in range(len(other.cols)):
                acc = z
                for k, x in enumerate(r):
                    if x:
                        y = other.entries[k][j]
                        if y:
                            acc = acc + x * y
                row.append(acc)
            out.append(row)
        return SuperMatrix(self.chart, self.rows, other.cols, out, (self.parity + other.parity) % 2)

    def scale_left(self, f: SuperExpr) -> "SuperMatrix":
        return SuperMatrix(self.chart, self.rows, self.cols, [[f * e for e in r] for r in self.entries],
                           (self.parity + (f.parity or 0)) % 2)

    def block(self, row_parity: int, col_parity: int) -> "SuperMatrix":
        ri = [i for i, v in enumerate(self.rows) if v.parity == row_parity]
        ci = [j for j, v in enumerate(self.cols) if v.parity == col_parity]
        return SuperMatrix(self.chart, [self.rows[i] for i in ri], [self.cols[j] for j in ci],
                           [[self.entries[i][j] for j in ci] for i in ri], self.parity, check=False)

    def diagonal(self) -> list[SuperExpr]:
        return [self.entries[i][i] for i in range(min(self.shape))]


def _pos(labels, key) -> int:
    if isinstance(key, int):
        return key
    name = key.name if isinstance(key, Variable) else key
    for i, v in enumerate(labels):
        if v.name == name:
            return i
    raise KeyError(name)


def _gauss_jordan(chart: Chart, rows: list[list[SuperExpr]]) -> list[list[SuperExpr]]:
    """Left inverse of a square array by row operations.

    Row operations are left multiplications, so the elimination is valid in
    the non-commutative setting as long as every pivot is an even element
    with nonzero body (hence invertible).
    """
    n = len(rows)
    a = [list(r) + [chart.one if i == j else chart.zero for j in range(n)] for i, r in enumerate(rows)]
    for k in range(n):
        piv = None
        for i in range(k, n):
            e = a[i][k]
            if e and e.is_homogeneous() and e.parity == EVEN and not e.body().is_zero():
                piv = i
                break
        if piv is None:
            raise SingularError("supermatrix has a singular body")
        a[k], a[piv] = a[piv], a[k]
        inv = invert(a[k][k])
        a[k] = [inv * e for e in a[k]]
        for i in range(n):
            if i != k and a[i][k]:
                f = a[i][k]
                a[i] = [x - f * y if y else x for x, y in zip(a[i], a[k])]
    return [r[n:] for r in a]


def super_inverse(m: SuperMatrix) -> SuperMatrix:
    """Two-sided inverse; rows of the result are labelled by the columns of ``m``."""
    if m.shape[0] != m.shape[1]:
        raise ValueError("only square supermatrices can be inverted")
    inv = _gauss_jordan(m.chart, [list(r) for r in m.entries])
    return SuperMatrix(m.chart, m.cols, m.rows, inv, m.parity)


def determinant(m: SuperMatrix) -> SuperExpr:
    """Determinant of a matrix whose entries are all even (so they commute)."""
    chart = m.chart
    n = m.shape[0]
    a = [list(r) for r in m.entries]
    for r in a:
        for e in r:
            if e and (not e.is_homogeneous() or e.parity != EVEN):
                raise ParityError("determinant needs even entries")
    det = chart.one
    for k in range(n):
        piv = next((i for i in range(k, n) if not a[i][k].body().is_zero()), None)
        if piv is None:
            # body of the determinant vanishes; fall back to cofactor expansion
            return _cofactor_det(chart, [r[k:] for r in a[k:]]) * det
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            det = -det
        p = a[k][k]
        det = det * p
        inv = invert(p)
        for i in range(k + 1, n):
            if a[i][k]:
                f = a[i][k] * inv
                a[i] = [x - f * y if y else x for x, y in zip(a[i], a[k])]
    return det


def _cofactor_det(chart, a) -> SuperExpr:
    n = len(a)
    if n == 0:
        return chart.one
    if n == 1:
        return a[0][0]
    total = chart.zero
    for j in range(n):
        if a[0][j]:
            minor = [r[:j] + r[j + 1:] for r in a[1:]]
            t = a[0][j] * _cofactor_det(chart, minor)
            total = total + t if j % 2 == 0 else total - t
    return total


def berezinian(m: SuperMatrix) -> SuperExpr:
    """Ber(M) = det(A - B D^-1 C) / det(D) for an even supermatrix."""
    if m.parity != EVEN:
        raise ParityError("the Berezinian is defined for even supermatrices")
    if [v.parity for v in m.rows] != [v.parity for v in m.cols] and \
            sorted(v.parity for v in m.rows) != sorted(v.parity for v in m.cols):
        raise ValueError("row and column dimensions differ")
    a = m.block(EVEN, EVEN)
    b = m.block(EVEN, ODD)
    c = m.block(ODD, EVEN)
    d = m.block(ODD, ODD)
    if d.shape[0] == 0:
        return determinant(a)
    try:
        d_inv = super_inverse(d)
    except SingularError:
        raise ZeroBodyError("odd-odd block is singular") from None
    if a.shape[0] == 0:
        return invert(determinant(d))
    schur = a - b @ d_inv @ c
    return determinant(schur) * invert(determinant(d))


def supertrace(m: SuperMatrix) -> SuperExpr:
    """str(M) = sum over even labels minus sum over odd labels (even M)."""
    if m.parity != EVEN:
        raise ParityError("use log_derivative_ber for odd matrices")
    total = m.chart.zero
    for i, v in enumerate(m.rows):
        e = m.entries[i][i]
        total = total - e if v.is_odd else total + e
    return total


def log_derivative_ber(m: SuperMatrix, v) -> SuperExpr:
    """d_v log Ber(M) computed as a supertrace of M^-1 d_v M, without forming Ber.

    For odd v, write the odd derivative as eps * d_v with an auxiliary odd
    constant eps (an even derivation); pulling eps to the front past
    (M^-1)_{ab} turns the sign (-1)^{p(a)} into (-1)^{p(b)}.
    """
    inv = super_inverse(m)
    odd_v = m.chart.parity(v) == ODD
    total = m.chart.zero
    for i, a in enumerate(inv.rows):
        for j, b in enumerate(inv.cols):
            x = inv.entries[i][j]
            if not x:
                continue
            dy = m.entries[j][i].derive(v)
            if not dy:
                continue
            t = x * dy
            neg = b.is_odd if odd_v else a.is_odd
            total = total - t if neg else total + t
    return total
