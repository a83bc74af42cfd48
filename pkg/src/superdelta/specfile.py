"""Sectioned plain-text manifold descriptions.

Example::

    [chart M]
    vars = q:even, th:odd

    [tensor E]
    chart = M
    q,th = 1            # the graded-symmetric partner is filled in

    [change phi]
    from = M
    to = Mp
    forward.qp = q + q^2
    inverse.q = ...

Section kinds: chart, tensor, poisson, volume, connection, field, formfield,
potential, change.  Scalar sections (volume, potential) use ``value = ...``.
Lines starting with ``#`` and text after `` #`` are comments.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .constructions import FormValuedField, PiTangentChart
from .graded import Chart, ChartError, GradedError, SuperExpr, Variable, _PARITY_NAMES
from .operators import VectorField
from .parsing import ParseError, parse_expr
from .poisson import EvenPoissonTensor, SymTensor2
from .transforms import CoordChange

KINDS = ("chart", "tensor", "poisson", "volume", "connection", "field", "formfield", "potential", "change")

_HEADER = re.compile(r"^\[\s*([A-Za-z]+)\s+([A-Za-z_][A-Za-z_0-9]*)\s*\]\s*$")


@dataclass
class _Entry:
    key: str
    value: str
    line: int
    col: int          # column of the value


@dataclass
class _Section:
    kind: str
    name: str
    line: int
    entries: list[_Entry] = field(default_factory=list)

    def get(self, key: str) -> _Entry | None:
        for e in self.entries:
            if e.key == key:
                return e
        return None

    def need(self, key: str) -> _Entry:
        e = self.get(key)
        if e is None:
            raise ParseError(f"section [{self.kind} {self.name}] needs '{key} = ...'", self.line, 1)
        return e


@dataclass
class ManifoldSpec:
    charts: dict[str, Chart] = field(default_factory=dict)
    tensors: dict[str, SymTensor2] = field(default_factory=dict)
    poisson: dict[str, EvenPoissonTensor] = field(default_factory=dict)
    volumes: dict[str, SuperExpr] = field(default_factory=dict)
    connections: dict[str, list[SuperExpr]] = field(default_factory=dict)
    fields: dict[str, VectorField] = field(default_factory=dict)
    formfields: dict[str, FormValuedField] = field(default_factory=dict)
    potentials: dict[str, SuperExpr] = field(default_factory=dict)
    changes: dict[str, CoordChange] = field(default_factory=dict)

    def lookup(self, name: str):
        """(kind, object) for a name, searching every namespace."""
        for kind, table in (("tensor", self.tensors), ("poisson", self.poisson), ("volume", self.volumes),
                            ("connection", self.connections), ("field", self.fields),
                            ("formfield", self.formfields), ("potential", self.potentials),
                            ("change", self.changes), ("chart", self.charts)):
            if name in table:
                return kind, table[name]
        raise KeyError(f"unknown name {name!r}")


def _strip_comment(text: str) -> str:
    if text.lstrip().startswith("#"):
        return ""
    i = text.find(" #")
    return text[:i] if i >= 0 else text


def _split(text: str) -> list[_Section]:
    sections: list[_Section] = []
    cur: _Section | None = None
    for ln, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).rstrip()
        if not line.strip():
            continue
        if line.lstrip().startswith("["):
            m = _HEADER.match(line.strip())
            if not m:
                raise ParseError("malformed section header", ln, raw.index("[") + 1)
            kind, name = m.group(1).lower(), m.group(2)
            if kind not in KINDS:
                raise ParseError(f"unknown section kind {kind!r}", ln, raw.index(m.group(1)) + 1)
            cur = _Section(kind, name, ln)
            sections.append(cur)
            continue
        if cur is None:
            raise ParseError("entry outside of any section", ln, 1)
        if "=" not in line:
            raise ParseError("expected 'key = value'", ln, len(line) - len(line.lstrip()) + 1)
        eq = line.index("=")
        key = line[:eq].strip()
        val = line[eq + 1:]
        col = eq + 2 + (len(val) - len(val.lstrip()))
        if not key:
            raise ParseError("missing key", ln, 1)
        cur.entries.append(_Entry(key, val.strip(), ln, col))
    return sections


def _chart_of(sec: _Section, spec: ManifoldSpec, key: str = "chart") -> Chart:
    e = sec.need(key)
    if e.value not in spec.charts:
        raise ParseError(f"unknown chart {e.value!r}", e.line, e.col)
    return spec.charts[e.value]


def _expr(e: _Entry, chart: Chart) -> SuperExpr:
    return parse_expr(e.value, chart, e.line, e.col)


def _parse_chart(sec: _Section) -> Chart:
    e = sec.need("vars")
    vs = []
    pos = 0
    for part in e.value.split(","):
        col = e.col + pos + (len(part) - len(part.lstrip()))
        pos += len(part) + 1
        part = part.strip()
        if ":" not in part:
            raise ParseError(f"expected name:parity, got {part!r}", e.line, col)
        nm, par = (s.strip() for s in part.split(":", 1))
        if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", nm):
            raise ParseError(f"bad variable name {nm!r}", e.line, col)
        if par.lower() not in _PARITY_NAMES:
            raise ParseError(f"unknown parity {par!r}", e.line, col + part.index(":") + 1)
        vs.append(Variable(nm, _PARITY_NAMES[par.lower()]))
    try:
        return Chart(vs, name=sec.name)
    except ChartError as exc:
        raise ParseError(str(exc), e.line, e.col) from None


def _pair_entries(sec: _Section, chart: Chart):
    for e in sec.entries:
        if e.key == "chart":
            continue
        parts = [p.strip() for p in e.key.split(",")]
        if len(parts) != 2:
            raise ParseError(f"tensor entry key must be 'a,b', got {e.key!r}", e.line, 1)
        for p in parts:
            if p not in chart:
                raise ParseError(f"unknown variable {p!r} in chart {chart.name}", e.line, 1)
        yield (parts[0], parts[1]), _expr(e, chart), e


def _components(sec: _Section, chart: Chart, skip=("chart", "parity")) -> tuple[list[SuperExpr], _Entry | None]:
    comps = [chart.zero] * len(chart)
    first = None
    for e in sec.entries:
        if e.key in skip:
            continue
        if e.key not in chart:
            raise ParseError(f"unknown variable {e.key!r} in chart {chart.name}", e.line, 1)
        comps[chart.index(e.key)] = _expr(e, chart)
        first = first or e
    return comps, first


def loads(text: str) -> ManifoldSpec:
    spec = ManifoldSpec()
    seen: set[str] = set()
    for sec in _split(text):
        if sec.name in seen:
            raise ParseError(f"duplicate name {sec.name!r}", sec.line, 1)
        seen.add(sec.name)
        try:
            _load_section(sec, spec)
        except ParseError:
            raise
        except (GradedError, ZeroDivisionError) as exc:
            raise ParseError(f"[{sec.kind} {sec.name}]: {exc}", sec.line, 1) from None
    return spec


def _load_section(sec: _Section, spec: ManifoldSpec):
    k = sec.kind
    if k == "chart":
        spec.charts[sec.name] = _parse_chart(sec)
    elif k == "tensor":
        chart = _chart_of(sec, spec)
        entries = {key: v for key, v, _ in _pair_entries(sec, chart)}
        spec.tensors[sec.name] = SymTensor2.from_dict(chart, entries)
    elif k == "poisson":
        chart = _chart_of(sec, spec)
        entries = {key: v for key, v, _ in _pair_entries(sec, chart)}
        spec.poisson[sec.name] = EvenPoissonTensor.from_dict(chart, entries)
    elif k in ("volume", "potential"):
        chart = _chart_of(sec, spec)
        val = _expr(sec.need("value"), chart)
        (spec.volumes if k == "volume" else spec.potentials)[sec.name] = val
    elif k == "connection":
        chart = _chart_of(sec, spec)
        spec.connections[sec.name] = _components(sec, chart)[0]
    elif k == "field":
        chart = _chart_of(sec, spec)
        spec.fields[sec.name] = VectorField(chart, _components(sec, chart)[0])
    elif k == "formfield":
        base = _chart_of(sec, spec)
        pit = PiTangentChart(base)
        comps = [pit.chart.zero] * len(base)
        for e in sec.entries:
            if e.key == "chart":
                continue
            if e.key not in base:
                raise ParseError(f"unknown variable {e.key!r} in chart {base.name}", e.line, 1)
            comps[base.index(e.key)] = _expr(e, pit.chart)
        spec.formfields[sec.name] = FormValuedField(pit, comps)
    elif k == "change":
        src = _chart_of(sec, spec, "from")
        tgt = _chart_of(sec, spec, "to")
        fwd, inv = {}, {}
        for e in sec.entries:
            if e.key in ("from", "to"):
                continue
            head, _, var = e.key.partition(".")
            if head == "forward" and var in tgt:
                fwd[var] = _expr(e, src)
            elif head == "inverse" and var in src:
                inv[var] = _expr(e, tgt)
            else:
                raise ParseError(f"expected forward.<target var> or inverse.<source var>, got {e.key!r}",
                                 e.line, 1)
        spec.changes[sec.name] = CoordChange(src, tgt, fwd, inv)


def load(path) -> ManifoldSpec:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
