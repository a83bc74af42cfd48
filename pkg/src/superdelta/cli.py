"""Command-line front end.

    superdelta check-jacobi SPEC TENSOR
    superdelta build-delta SPEC TENSOR [--volume V | --connection G | --potential U | --bering]
    superdelta delta-square SPEC TENSOR [same options]
    superdelta modular-field SPEC NAME [same options]     (NAME: tensor, or odd field for odd time)
    superdelta transform SPEC OBJECT --change C [--potential U | --bering]
    superdelta koszul SPEC P
    superdelta odd-time SPEC ETA
    superdelta nijenhuis SPEC X [Y]
    superdelta selftest [--seed N]

Every command prints one line per check and exits 0 iff all checks pass.
``--out FILE`` writes the same checks as JSON lines.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time

from . import acceptance
from .acceptance import Check
from .constructions import (FormValuedField, commutes_with_d, koszul_lift, nijenhuis_bracket,
                            nijenhuis_square_formula, odd_time_modular_field, odd_time_nontriviality,
                            odd_time_structure, odd_time_tensor, tangent_lift)
from .graded import EVEN, ODD, GradedError
from .laplacian import (bering_potential, delta_from_volume, delta_square, from_potential, modular_field,
                        modular_field_formula, potential_from_connection, potential_from_volume)
from .operators import HALF, Density, VectorField, is_self_adjoint, lie_derivative, principal_symbol
from .parsing import ParseError
from .poisson import EvenPoissonTensor, SymTensor2, jacobi_residual, poisson_field_check
from .specfile import ManifoldSpec, load
from .transforms import (transform_density, transform_field, transform_operator, transform_potential,
                         transform_tensor)

DEFAULT_SEED = 20240101


class UsageError(Exception):
    pass


class Run:
    def __init__(self, command: str):
        self.command = command
        self.checks: list[Check] = []
        self.info: list[str] = []

    def check(self, name: str, ok: bool, detail: str = ""):
        self.checks.append(Check(self.command, name, "pass" if ok else "fail", detail))
        return ok

    def note(self, text: str):
        self.info.append(text)

    def guarded(self, name: str, fn):
        """Run ``fn``; a raised library error becomes a failed check."""
        try:
            return fn()
        except (GradedError, ZeroDivisionError) as exc:
            self.check(name, False, f"{type(exc).__name__}: {exc}")
            return None


def _get(spec: ManifoldSpec, table: str, name: str):
    t = getattr(spec, table)
    if name not in t:
        raise UsageError(f"unknown {table[:-1] if table.endswith('s') else table} {name!r}")
    return t[name]


def _delta_from_options(run: Run, spec: ManifoldSpec, E: SymTensor2, args):
    """Build Delta in F_E following --volume/--connection/--potential/--bering."""
    if getattr(args, "volume", None):
        rho = _get(spec, "volumes", args.volume)
        U = potential_from_volume(E, rho)
        d = from_potential(E, U)
        run.check("volume-routes-agree", delta_from_volume(E, rho) == d,
                  "potential formula versus sqrt(rho) o Delta_rho o rho^-1/2")
        return d, U
    if getattr(args, "connection", None):
        U = potential_from_connection(E, _get(spec, "connections", args.connection))
        return from_potential(E, U), U
    if getattr(args, "bering", False):
        U = bering_potential(E)
        return from_potential(E, U), U
    if getattr(args, "potential", None):
        U = _get(spec, "potentials", args.potential)
        return from_potential(E, U), U
    return from_potential(E, 0), E.chart.zero


# ---------------------------------------------------------------------------

def cmd_check_jacobi(run: Run, spec: ManifoldSpec, args):
    E = _get(spec, "tensors", args.tensor)
    res = jacobi_residual(E)
    run.check("jacobi", res.is_zero(), "residual 0" if res.is_zero() else f"residual {res}")


def cmd_build_delta(run: Run, spec: ManifoldSpec, args):
    E = _get(spec, "tensors", args.tensor)
    built = run.guarded("build", lambda: _delta_from_options(run, spec, E, args))
    if built is None:
        return
    d, U = built
    run.note(f"potential: {U}")
    run.note(f"delta: {d}")
    run.check("self-adjoint", is_self_adjoint(d))
    run.check("principal-symbol", principal_symbol(d, 2) == E)


def cmd_delta_square(run: Run, spec: ManifoldSpec, args):
    E = _get(spec, "tensors", args.tensor)
    built = run.guarded("build", lambda: _delta_from_options(run, spec, E, args))
    if built is None:
        return
    d, _ = built
    sq = delta_square(d)
    o = sq.order()
    run.note(f"delta^2: {sq}")
    run.check("order", o in (3, 1, float("-inf")), "zero" if sq.is_zero() else f"order {o}")
    jac = jacobi_residual(E).is_zero()
    run.check("order-matches-jacobi", (o <= 1) == jac, f"jacobi {'holds' if jac else 'fails'}")


def cmd_modular_field(run: Run, spec: ManifoldSpec, args):
    if args.name in spec.fields:
        eta = spec.fields[args.name]
        _odd_time(run, eta)
        return
    E = _get(spec, "tensors", args.name)
    built = run.guarded("build", lambda: _delta_from_options(run, spec, E, args))
    if built is None:
        return
    d, U = built
    if not run.check("jacobi", jacobi_residual(E).is_zero(), "precondition for the modular field"):
        return
    X = run.guarded("delta-square-is-lie-derivative", lambda: modular_field(d))
    if X is None:
        return
    run.check("delta-square-is-lie-derivative", True)
    run.note(f"modular field: {X}")
    run.check("explicit-formula", modular_field_formula(E, U) == X)
    run.check("poisson-field", poisson_field_check(E, X))


def _odd_time(run: Run, eta: VectorField):
    if eta.parity == EVEN:
        run.check("odd-field", False, "the odd-time construction needs an odd vector field")
        return
    s = odd_time_structure(eta)
    X = odd_time_modular_field(eta)
    run.note(f"delta: {s.delta}")
    run.note(f"modular field 1/8[eta,eta]: {X}")
    run.check("bracket-table", s.tensor == odd_time_tensor(eta), "{x^a, tau} = tau eta^a")
    run.check("self-adjoint", is_self_adjoint(s.delta))
    run.check("delta-square", delta_square(s.delta) == lie_derivative(s.lift_field(X), HALF),
              "delta^2 = L_{1/8[eta,eta]}")
    nt = odd_time_nontriviality(eta)
    if nt.nontrivial:
        name, comp = nt.certificate
        detail = f"nontrivial=true; tau-free component {name}: {comp}"
    else:
        detail = "nontrivial=false"
    run.check("nontriviality", nt.nontrivial == (not X.is_zero()), detail)


def cmd_odd_time(run: Run, spec: ManifoldSpec, args):
    _odd_time(run, _get(spec, "fields", args.eta))


def cmd_transform(run: Run, spec: ManifoldSpec, args):
    phi = _get(spec, "changes", args.change)
    try:
        kind, obj = spec.lookup(args.object)
    except KeyError:
        raise UsageError(f"unknown object {args.object!r}") from None
    if kind == "tensor":
        E = obj
        Et = transform_tensor(E, phi)
        run.note(f"tensor: {Et.matrix}")
        if args.bering:
            U = bering_potential(E)
            Ut = transform_potential(U, E, phi)
            run.note(f"potential: {Ut}")
            run.check("bering-covariance", bering_potential(Et) == Ut)
            if jacobi_residual(E).is_zero():
                run.check("bering-nilpotent", delta_square(from_potential(Et, Ut)).is_zero())
        else:
            U = _get(spec, "potentials", args.potential) if args.potential else E.chart.zero
            Ut = transform_potential(U, E, phi)
            run.note(f"potential: {Ut}")
        d = from_potential(E, U)
        run.check("operator-coherence", transform_operator(d, phi) == from_potential(Et, Ut),
                  "pulled-back operator has the transformed symbol and potential")
    elif kind == "field":
        run.note(f"field: {transform_field(obj, phi)}")
        run.check("transformed", True)
    elif kind == "volume":
        run.note(f"density: {transform_density(Density(obj, 1), phi)}")
        run.check("transformed", True)
    else:
        raise UsageError(f"cannot transform a {kind}")


def cmd_koszul(run: Run, spec: ManifoldSpec, args):
    P = _get(spec, "poisson", args.poisson)
    E = koszul_lift(P)
    run.note(f"lifted tensor: {E.matrix}")
    even = P.is_poisson()
    odd = jacobi_residual(E).is_zero()
    run.check("jacobi-equivalence", even == odd, f"even jacobi {'holds' if even else 'fails'}")
    if not run.check("even-jacobi", even, "precondition for delta^2 = 0"):
        return
    d = from_potential(E, 0)
    run.check("delta-square-zero", delta_square(d).is_zero())
    run.check("modular-field-zero", modular_field(d).is_zero())


def cmd_nijenhuis(run: Run, spec: ManifoldSpec, args):
    X = _get(spec, "formfields", args.x)
    Y = _get(spec, "formfields", args.y) if args.y else X
    for nm, F in ((args.x, X), (args.y, Y)) if args.y else ((args.x, X),):
        run.check(f"lift-commutes-with-d[{nm}]", commutes_with_d(tangent_lift(F), F.pit))
    br = run.guarded("bracket", lambda: nijenhuis_bracket(X, Y))
    if br is None:
        return
    run.note(f"bracket: {br}")
    run.check("bracket", True, "lift of the bracket is the commutator of lifts")
    if args.y is None:
        rows = _endomorphism_rows(X)
        if rows is not None:
            run.check("self-bracket-formula", br == nijenhuis_square_formula(X.pit, rows))


def _endomorphism_rows(X: FormValuedField):
    """rows[j][i] = X^i_j when X = dx^j X^i_j d_i on an even base, else None."""
    pit = X.pit
    if pit.base.odd_names:
        return None
    n = pit.n
    rows = [[pit.base.zero] * n for _ in range(n)]
    for i, comp in enumerate(X.components):
        for j in range(n):
            c = comp.derive(pit.fiber_index(j))
            if c and not c.is_zero():
                for k in range(n):
                    if not c.derive(pit.fiber_index(k)).is_zero():
                        return None
                rows[j][i] = c.subs({v.name: pit.base.zero for v in pit.chart.variables[n:]}, target=pit.base)
    if FormValuedField.from_matrix(pit, rows) != X:
        return None
    return rows


def cmd_selftest(run: Run, spec, args):
    seed = _seed(args)
    run.note(f"seed: {seed}")
    first: list[Check] = []
    for k in sorted(acceptance.CRITERIA):
        t = time.perf_counter()
        got = acceptance.run_criterion(k, seed)
        run.note(f"criterion {k}: {time.perf_counter() - t:.2f}s")
        first.extend(got)
    run.checks.extend(first)
    again: list[Check] = []
    for k in sorted(acceptance.CRITERIA):
        again.extend(acceptance.run_criterion(k, seed))
    same = acceptance.records_text(first) == acceptance.records_text(again)
    run.check("13.determinism", same, "two runs with the same seed give identical records")


def _seed(args) -> int:
    env = os.environ.get("SUPERDELTA_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"SUPERDELTA_SEED must be an integer, got {env!r}") from None
    return args.seed if args.seed is not None else DEFAULT_SEED


# ---------------------------------------------------------------------------

def _delta_options(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--volume", metavar="V")
    g.add_argument("--connection", metavar="G")
    g.add_argument("--potential", metavar="U")
    g.add_argument("--bering", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="superdelta", description="Verify identities for odd Laplacians.")
    p.add_argument("--out", help="write checks as JSON lines to this file")
    sub = p.add_subparsers(dest="command", required=True)

    def cmd(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(fn=fn)
        sp.add_argument("--out", help="write checks as JSON lines to this file", default=argparse.SUPPRESS)
        return sp

    sp = cmd("check-jacobi", cmd_check_jacobi, "check the Jacobi identity of an odd tensor")
    sp.add_argument("spec")
    sp.add_argument("tensor")
    for name, fn, h in (("build-delta", cmd_build_delta, "build an operator in the class of a tensor"),
                        ("delta-square", cmd_delta_square, "square an operator and report its order")):
        sp = cmd(name, fn, h)
        sp.add_argument("spec")
        sp.add_argument("tensor")
        _delta_options(sp)
    sp = cmd("modular-field", cmd_modular_field, "modular vector field of a tensor, or of an odd-time field")
    sp.add_argument("spec")
    sp.add_argument("name")
    _delta_options(sp)
    sp = cmd("transform", cmd_transform, "pull an object back along a coordinate change")
    sp.add_argument("spec")
    sp.add_argument("object")
    sp.add_argument("--change", required=True)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--potential", metavar="U")
    g.add_argument("--bering", action="store_true")
    sp = cmd("koszul", cmd_koszul, "lift an even Poisson tensor to Pi TM")
    sp.add_argument("spec")
    sp.add_argument("poisson")
    sp = cmd("odd-time", cmd_odd_time, "odd-time structure of an odd vector field")
    sp.add_argument("spec")
    sp.add_argument("eta")
    sp = cmd("nijenhuis", cmd_nijenhuis, "Nijenhuis bracket of form-valued fields")
    sp.add_argument("spec")
    sp.add_argument("x")
    sp.add_argument("y", nargs="?")
    sp = cmd("selftest", cmd_selftest, "run the acceptance suite")
    sp.add_argument("--seed", type=int)
    return p


def _inputs(args) -> str:
    """Resolved arguments as ``key=value`` pairs, in a fixed order."""
    skip = {"fn", "command", "out"}
    items = []
    for k, v in sorted(vars(args).items()):
        if k in skip or v is None or v is False:
            continue
        items.append(k if v is True else f"{k}={v}")
    return " ".join(items)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    run = Run(args.command)
    t0 = time.perf_counter()
    try:
        spec = load(args.spec) if hasattr(args, "spec") else None
        args.fn(run, spec, args)
    except ParseError as exc:
        print(f"{args.spec}:{exc.line}:{exc.column}: error: {exc.message}", file=sys.stderr)
        return 2
    except (UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.command == "selftest":
        args.seed = _seed(args)
    inputs = _inputs(args)
    run.checks = [dataclasses.replace(c, inputs=inputs) for c in run.checks]
    print(f"{args.command} {inputs}")
    for line in run.info:
        print(line)
    for c in run.checks:
        print(f"{c.verdict.upper():4}  {c.check}" + (f"  ({c.detail})" if c.detail else ""))
    ok = bool(run.checks) and all(c.passed for c in run.checks)
    print(f"{'ok' if ok else 'FAILED'}: {sum(c.passed for c in run.checks)}/{len(run.checks)} checks passed "
          f"in {time.perf_counter() - t0:.2f}s")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(acceptance.records_text(run.checks))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
