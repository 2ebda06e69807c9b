"""Command-line front end.

Exit-code contract: 0 success, 2 precondition failure (bad input, domain or
degree violations), 3 non-convergence, 4 golden-value mismatch.  All outputs
are deterministic for a fixed seed and configuration.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .conformal import conformal_oracle_check
from .curvature import (gauduchon_curvature, ricci_and_scalars,
                        scalar_comparison_defect)
from .dsl import ParseError, load_manifest
from .goldens import GOLDEN_TOL, golden_scalars
from .grid import (GridError, GridMetric, TorusGrid, laplacian_duality_defect,
                   gauduchon_degrees)
from .jets import JetError, inverse_and_det
from .manifolds import DomainError, builtin, builtin_names, manifold_from_manifest
from .report import (SCHEMA_VERSION, curvature_records, records_to_csv,
                     records_to_text, solver_record)
from .solvers import (ConvergenceError, PreconditionError,
                      bismut_yamabe_minimize, solve_chern_negative,
                      solve_chern_zero)

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_NO_CONVERGENCE = 3
EXIT_GOLDEN_MISMATCH = 4

DEFAULT_FACTORS = [
    "re(z1)/4",
    "im(z2)*re(z2)/5",
    "log(1 + abs2(z1)/3)",
]


def _parse_params(items):
    params = {}
    for item in items or []:
        if "=" not in item:
            raise ParseError(f"--param expects name=value, got {item!r}")
        key, val = item.split("=", 1)
        params[key.strip()] = float(val)
    return params


def _resolve_manifold(spec: str, n, params):
    if os.path.isfile(spec):
        return manifold_from_manifest(load_manifest(spec))
    return builtin(spec, n=n, **params)


def _write_out(text: str, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _ts_list(arg: str):
    return [float(x) for x in arg.split(",") if x != ""]


def _periods(args, n):
    if not getattr(args, "periods", None):
        return None
    vals = [float(x) for x in args.periods.split(",") if x != ""]
    return tuple(vals)


def cmd_catalog(args) -> int:
    for name in builtin_names():
        man = builtin(name)
        flags = []
        if man.declared_gauduchon:
            flags.append("gauduchon")
        if man.declared_balanced:
            flags.append("balanced")
        if man.periods:
            flags.append("periodic")
        print(f"{name:18s} n={man.n}  params={sorted(man.params)}  "
              f"[{', '.join(flags)}]  domain: {man.domain.description}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    man = _resolve_manifold(args.manifold, args.n, _parse_params(args.param))
    z = man.sample_points(args.points, seed=args.seed)
    ts = _ts_list(args.t)
    records = curvature_records(man, z, ts)
    text = records_to_csv(records) if args.format == "csv" \
        else records_to_text(records)
    _write_out(text, args.out)
    if not args.golden:
        return EXIT_OK
    golden = golden_scalars(man.name, man.n, man.params)
    if golden is None:
        print(f"GOLDEN SKIP {man.name}: no stored values")
        return EXIT_OK
    jet = man.jet(z)
    ginv, _ = inverse_and_det(jet)
    ric = ricci_and_scalars(gauduchon_curvature(jet, 0.0, ginv), jet, ginv)
    status = EXIT_OK
    for key, got in (("s1", ric.s1), ("s2", ric.s2)):
        want = golden[key]
        dev = float(np.max(np.abs(got - want)))
        ok = dev < GOLDEN_TOL
        print(f"GOLDEN {'PASS' if ok else 'FAIL'} {man.name} {key}: "
              f"stored {want:.12g}, max deviation {dev:.3e}")
        if not ok:
            status = EXIT_GOLDEN_MISMATCH
    return status


def cmd_check(args) -> int:
    man = _resolve_manifold(args.manifold, args.n, _parse_params(args.param))
    tol = args.tol
    if args.what == "conformal":
        z = man.sample_points(args.points, seed=args.seed)
        factors = args.factor or DEFAULT_FACTORS
        rows = []
        worst = 0.0
        for f in factors:
            for t in _ts_list(args.t):
                d = conformal_oracle_check(man, f, t, z)
                worst = max(worst, d["max"])
                rows.append({"schema": SCHEMA_VERSION, "manifold": man.name,
                             "factor": f, "t": t, "defect_s2": d["s2"],
                             "defect_ric3": d["ric3"], "defect_ric4": d["ric4"]})
        text = records_to_csv(rows) if args.format == "csv" \
            else records_to_text(rows)
        _write_out(text, args.out)
        print(f"conformal oracle max defect {worst:.3e} (tol {tol:g})")
        return EXIT_OK if worst < tol else EXIT_NO_CONVERGENCE
    if args.what == "comparison":
        z = man.sample_points(args.points, seed=args.seed)
        jet = man.jet(z)
        worst = 0.0
        for t in _ts_list(args.t):
            defect = scalar_comparison_defect(jet, t)
            worst = max(worst, float(np.max(np.abs(defect))))
        print(f"comparison identity max defect {worst:.3e} (tol {tol:g})")
        return EXIT_OK if worst < tol else EXIT_NO_CONVERGENCE
    # duality
    grid = TorusGrid(n=man.n, N=args.grid, scheme=args.scheme,
                     periods=_periods(args, man.n))
    gm = GridMetric.from_manifold(man, grid)
    rng = np.random.default_rng(args.seed)
    x = grid.points()
    u = np.zeros(grid.shape)
    for k in range(man.n):
        u += np.sin(2 * np.pi * x[..., k].real) + 0.5 * np.cos(
            2 * np.pi * x[..., k].imag)
    defect = laplacian_duality_defect(gm, u)
    print(f"laplacian duality defect {defect:.3e} at N={args.grid} "
          f"({args.scheme}, tol {tol:g})")
    return EXIT_OK if defect < tol else EXIT_NO_CONVERGENCE


def cmd_solve(args) -> int:
    man = _resolve_manifold(args.manifold, args.n, _parse_params(args.param))
    grid = TorusGrid(n=man.n, N=args.grid, scheme=args.scheme,
                     periods=_periods(args, man.n))
    gm = GridMetric.from_manifold(man, grid)
    digest = {"manifold": man.name, "n": man.n,
              "params": ";".join(f"{k}={v:g}" for k, v in sorted(man.params.items())),
              "grid": args.grid, "scheme": args.scheme, "tol": args.tol,
              "seed": args.seed, "threads": args.threads,
              "problem": args.problem}
    if args.problem == "chern-zero":
        rep = solve_chern_zero(gm, resid_tol=args.tol)
    elif args.problem == "chern-negative":
        rep = solve_chern_negative(gm)
        if rep.residual_linf > args.tol:
            raise ConvergenceError(
                f"final residual {rep.residual_linf:.3e} > tol {args.tol:g}")
    else:
        rep = bismut_yamabe_minimize(gm, el_tol=args.tol)
    rec = solver_record(rep, digest)
    text = records_to_csv([rec]) if args.format == "csv" \
        else records_to_text([rec])
    _write_out(text, args.out)
    if args.dump_solution:
        _dump_field(rep.solution, args.dump_solution)
    g1, g2, _ = gauduchon_degrees(gm)
    print(f"{args.problem}: lambda={rep.lam:.10g} residual_linf="
          f"{rep.residual_linf:.3e} residual_l2={rep.residual_l2:.3e} "
          f"degrees=({g1:.3e}, {g2:.3e}) wall={rep.wall_time:.2f}s")
    return EXIT_OK


def _dump_field(field, path):
    # lexicographic node order in (x1, y1, x2, y2, ...)
    vals = field.values.reshape(-1)
    lines = ["index,value"]
    lines += [f"{i},{format(v, '.17g')}" for i, v in enumerate(vals)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hermcurv",
        description="Hermitian curvature engine and constant-scalar-curvature "
                    "solvers on coordinate charts")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("catalog", help="list builtin manifolds")

    def common_options(p, manifold_positional):
        if manifold_positional:
            p.add_argument("manifold", help="builtin name or manifest path")
        else:
            p.add_argument("--manifold", required=True,
                           help="builtin name or manifest path")
        p.add_argument("--n", type=int, default=None, help="complex dimension")
        p.add_argument("--param", action="append", metavar="NAME=VALUE",
                       help="real manifold parameter (repeatable)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("text", "csv"), default="text")
        p.add_argument("--out", default=None, help="write the report here")

    def grid_options(p):
        p.add_argument("--grid", type=int, default=16)
        p.add_argument("--periods", default=None,
                       help="comma-separated real periods (default all 1)")
        p.add_argument("--scheme", choices=("fd2", "spectral"), default="fd2")

    p_ins = sub.add_parser("inspect", help="pointwise curvature report")
    common_options(p_ins, manifold_positional=True)
    p_ins.add_argument("--points", type=int, default=10)
    p_ins.add_argument("--t", default="0", help="comma-separated t values")
    p_ins.add_argument("--golden", action="store_true",
                       help="compare against stored golden values")

    p_chk = sub.add_parser("check", help="identity defect tables")
    p_chk.add_argument("what", choices=("conformal", "comparison", "duality"))
    common_options(p_chk, manifold_positional=False)
    p_chk.add_argument("--points", type=int, default=20)
    p_chk.add_argument("--t", default="0,0.5,1,-1")
    p_chk.add_argument("--factor", action="append",
                       help="conformal factor expression (repeatable)")
    p_chk.add_argument("--tol", type=float, default=1e-7)
    grid_options(p_chk)

    p_sol = sub.add_parser("solve", help="constant-curvature solvers")
    p_sol.add_argument("problem", choices=("chern-zero", "chern-negative",
                                           "bismut"))
    common_options(p_sol, manifold_positional=False)
    grid_options(p_sol)
    p_sol.add_argument("--tol", type=float, default=1e-6)
    p_sol.add_argument("--threads", type=int, default=1,
                       help="recorded in the report; maps are deterministic")
    p_sol.add_argument("--dump-solution", default=None, metavar="PATH",
                       help="write the solution field as node-indexed CSV")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "catalog":
            return cmd_catalog(args)
        if args.command == "inspect":
            return cmd_inspect(args)
        if args.command == "check":
            return cmd_check(args)
        if args.command == "solve":
            return cmd_solve(args)
        raise AssertionError(args.command)
    except (PreconditionError, ParseError, DomainError, JetError, GridError,
            KeyError, ValueError) as err:
        print(f"precondition error: {err}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ConvergenceError as err:
        print(f"non-convergence: {err}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
