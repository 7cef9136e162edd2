"""Command line interface: ``stripbif <command> ...``.

Every command exits with status 0 on success.  Failures print a single JSON
line ``{"error": ..., "message": ...}`` to stderr and exit with status 1
(bad input) or 2 (a check that did not pass).
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from stripbif import linear_analysis as la
from stripbif.continuation import ContinuationConfig, trace_branch
from stripbif.domain import BoundaryProfile, LinearPair, StripField, inner_product, make_strip, pair_norm
from stripbif.operators import adjoint_apply, linearization_at_origin
from stripbif.persistence import (
    BranchFormatError,
    export_branch,
    export_domain,
    export_rescaled,
    import_branch,
    select_point,
)
from stripbif.verify import check_overdetermined, schiffer_rescale


class CheckFailed(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        raise SystemExit(1)


def _emit(obj, fmt: str = "json"):
    if fmt == "json":
        print(json.dumps(obj))
        return
    rows = obj if isinstance(obj, list) else [obj]
    keys = list(rows[0])
    print("  ".join(f"{k:>14}" for k in keys))
    for r in rows:
        print("  ".join(f"{v:>14.6g}" if isinstance(v, float) else f"{str(v):>14}" for v in r.values()))


def cmd_eigenvalues(args):
    seq = la.eigenvalue_sequence(args.m)
    _emit([{"ell": e.ell, "mu": str(e.mu), "decimal": float(e.mu)} for e in seq], args.format)


def _random_pair(grid, rng, dirichlet):
    return StripField.random(grid, rng, dirichlet), BoundaryProfile(rng.standard_normal(3))


def linear_check(m: int, ell: int, Nx: int = 8, Nt: int = 64, seed: int = 0) -> dict:
    params = make_strip(m, ell)
    mu = float(la.eigenvalue(params))
    ker = la.kernel_pair(params, Nx, Nt)
    cok = la.cokernel_pair(params, Nx, Nt)
    rng = np.random.default_rng(seed)
    defect = 0.0
    for _ in range(10):
        v, g = _random_pair(ker.field.grid, rng, True)
        w, z = _random_pair(ker.field.grid, rng, False)
        lhs = inner_product(linearization_at_origin(mu, v, g).pair(), LinearPair(w, z))
        rhs = adjoint_apply(mu, w, z).pair(LinearPair(v, g))
        defect = max(defect, abs(lhs - rhs) / (pair_norm(LinearPair(v, g)) * pair_norm(LinearPair(w, z))))
    return {
        "m": m, "ell": ell, "mu": str(la.eigenvalue(params)),
        "kernel_residual": linearization_at_origin(mu, ker.field, ker.profile).sup(),
        "cokernel_residual": adjoint_apply(mu, cok.field, cok.profile).sup(),
        "adjoint_defect": defect,
        "transversality": la.discrete_transversality(params, Nx, Nt),
        "transversality_closed_form": la.transversality_pairing(params),
    }


def cmd_linear_check(args):
    _emit(linear_check(args.m, args.ell, args.nx, args.nt))


def cmd_continue(args):
    params = make_strip(args.m, args.ell)
    cfg = ContinuationConfig(s_max=args.s_max, ds=args.ds, newton_tol=args.tol, Nx=args.nx, Nt=args.nt)
    branch = trace_branch(params, cfg, sign=args.sign)
    export_branch(branch, args.out, params)
    out = {"points": len(branch), "s_end": branch[-1].s, "lambda_end": branch[-1].lam,
           "max_residual": max(p.residual for p in branch), "out": str(args.out)}
    if branch.failure:
        out["failure"] = branch.failure
        _emit(out)
        raise CheckFailed(branch.failure)
    _emit(out)


def cmd_verify(args):
    bf = import_branch(args.branch)
    rows = []
    for p in bf.points:
        r = check_overdetermined(p, bf.params)
        rows.append({"s": p.s, "lambda": p.lam, **r.as_dict()})
    _emit(rows, args.format)
    bad = [r["s"] for r in rows if not check_overdetermined_ok(r, args.tol)]
    if bad:
        raise CheckFailed(f"{len(bad)} point(s) exceed tol {args.tol}: first at s = {bad[0]}")


def check_overdetermined_ok(row: dict, tol: float) -> bool:
    keys = ("dirichlet_sup", "neumann_top_sup", "neumann_bottom_sup", "pde_sup", "oddness_defect")
    return all(row[k] <= tol for k in keys) and (row["s"] == 0 or row["sign_changing"])


def cmd_export_domain(args):
    bf = import_branch(args.branch)
    p = select_point(bf.points, args.s)
    export_domain(p, bf.params, args.samples, args.out)
    _emit({"s": p.s, "lambda": p.lam, "out": str(args.out)})


def cmd_rescale(args):
    bf = import_branch(args.branch)
    p = select_point(bf.points, args.s)
    W, info = schiffer_rescale(p, bf.params)
    export_rescaled(W, args.samples, args.out)
    _emit({"s": p.s, "lambda": p.lam, "residual_sup": info["residual_sup"],
           "neumann_top_mean": float(np.mean(info["neumann_top"])), "out": str(args.out)})


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="stripbif", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eigenvalues", help="exact bifurcation values mu_ell(m)")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.set_defaults(func=cmd_eigenvalues)

    p = sub.add_parser("linear-check", help="kernel, cokernel, adjoint and transversality checks")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--nx", type=int, default=8)
    p.add_argument("--nt", type=int, default=64)
    p.set_defaults(func=cmd_linear_check)

    p = sub.add_parser("continue", help="trace a branch and write it to a JSON file")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--s-max", type=float, default=0.05)
    p.add_argument("--ds", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--nx", type=int, default=8)
    p.add_argument("--nt", type=int, default=64)
    p.add_argument("--sign", type=int, choices=(1, -1), default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_continue)

    p = sub.add_parser("verify", help="check the overdetermined problem along a stored branch")
    p.add_argument("--branch", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export-domain", help="boundary curves and field samples as CSV")
    p.add_argument("--branch", required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_domain)

    p = sub.add_parser("rescale", help="Schiffer-rescaled solution as CSV")
    p.add_argument("--branch", required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rescale)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CheckFailed as exc:
        print(json.dumps({"error": "check_failed", "message": str(exc)}), file=sys.stderr)
        return 2
    except BranchFormatError as exc:
        print(json.dumps({"error": "parse_error", "message": str(exc), "where": exc.where}), file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
