from pathlib import Path

import pytest

from superdelta.parsing import ParseError
from superdelta.specfile import load, loads
from superdelta.transforms import is_darboux

SPECS = Path(__file__).resolve().parent.parent / "specs"

BASIC = """\
# comment line
[chart M]
vars = q:even, th:odd

[tensor E]
chart = M
q,th = 1      # partner filled in

[potential U]
chart = M
value = th*q^2

[volume rho]
chart = M
value = 1 + q^2

[connection g]
chart = M
q = q
th = th

[field X]
chart = M
q = q
"""


def test_basic_document():
    spec = loads(BASIC)
    E = spec.tensors["E"]
    assert is_darboux(E)
    M = spec.charts["M"]
    assert spec.potentials["U"] == M.var("th") * M.var("q") ** 2
    assert spec.volumes["rho"] == M.one + M.var("q") ** 2
    assert spec.connections["g"] == [M.var("q"), M.var("th")]
    assert list(spec.fields["X"].components) == [M.var("q"), M.zero]
    assert spec.lookup("rho")[0] == "volume"
    with pytest.raises(KeyError):
        spec.lookup("nope")


@pytest.mark.parametrize("path", sorted(SPECS.glob("*.sd")), ids=lambda p: p.name)
def test_shipped_specs_load(path):
    spec = load(path)
    assert spec.charts


def _error(text):
    with pytest.raises(ParseError) as info:
        loads(text)
    return info.value


def test_expression_error_position():
    err = _error("[chart M]\nvars = q:even, th:odd\n[tensor E]\nchart = M\nq,th = q +* 1\n")
    assert (err.line, err.column) == (5, 11)


def test_unknown_parity_position():
    err = _error("[chart M]\nvars = q:even, th:strange\n")
    assert err.line == 2
    assert err.column == 19


def test_structural_errors():
    assert _error("vars = q:even\n").line == 1
    assert _error("[chart M]\nvars = q:even\n[chart M]\nvars = x:even\n").line == 3
    assert _error("[widget W]\n").line == 1
    err = _error("[chart M]\nvars = q:even\n[tensor E]\nchart = N\nq,q = 1\n")
    assert (err.line, err.column) == (4, 9)
    err = _error("[chart M]\nvars = q:even, th:odd\n[tensor E]\nchart = M\nq,z = 1\n")
    assert err.line == 5


def test_asymmetric_tensor_rejected():
    text = "[chart M]\nvars = q:even, th:odd\n[tensor E]\nchart = M\nq,th = q\nth,q = 1\n"
    err = _error(text)
    assert err.line == 3


def test_wrong_inverse_reported_at_section():
    text = ("[chart M]\nvars = q:even\n[chart N]\nvars = Q:even\n"
            "[change phi]\nfrom = M\nto = N\nforward.Q = 2*q\ninverse.q = Q\n")
    assert _error(text).line == 5


def test_change_round_trip():
    spec = load(SPECS / "darboux2.sd")
    phi = spec.changes["phi"]
    for v in phi.source.variables:
        assert phi.to_source(phi.to_target(phi.source.var(v.name))) == phi.source.var(v.name)
