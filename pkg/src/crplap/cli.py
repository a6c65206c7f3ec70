"""Command line interface.

Subcommands
-----------
run      adaptive first-eigenvalue computation; writes ``trace.csv`` and
         per-level ``mesh_<k>.plapmesh`` / ``solution_<k>.csv``
torsion  torsion function (f = 1) on the initial mesh
bvp      one p-Laplace solve with a constant load on the initial mesh
verify   built-in oracle suite

Options can also come from a TOML file of ``key = value`` lines
(``--config``); flags given on the command line win.  ``PLAP_SEED`` sets
the seed unless ``--seed`` is given.
"""

import argparse
import logging
import os
import sys
import time

from . import __version__
from .adapt import AdaptiveConfig, adaptive_loop
from .assembly import CRSystem, LinearSolveConfig
from .crspace import write_solution_csv
from .eigen import IISSConfig
from .errors import CRPlapError, SolverFailure
from .mesh import write_mesh
from .plap import DCConfig, decomposition_coordination

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger("crplap")

# option name -> (type, default)
OPTIONS = {
    "domain": (str, "square"),
    "p": (float, 2.0),
    "theta": (float, 0.6),
    "eps_k": (float, 1e-4),
    "eps_m": (float, 1e-5),
    "eps_n": (float, 1e-5),
    "K": (int, 9),
    "n": (int, None),
    "seed": (int, 0),
    "lambda_ref": (float, None),
    "out": (str, "."),
    "sweeps": (int, 2),
    "max_dc_iter": (int, 2000),
    "linear_solver": (str, "direct"),
    "threads": (int, 1),
    "load": (float, 1.0),
}


def _common(parser):
    g = parser.add_argument_group("problem")
    g.add_argument("--domain", help="square, lshape or file:<mesh path> (default square)")
    g.add_argument("--p", type=float, help="exponent p > 1 (default 2)")
    g.add_argument("--n", type=int, help="initial grid resolution")
    g.add_argument("--seed", type=int, help="seed of the splitting start fields")
    g = parser.add_argument_group("solver")
    g.add_argument("--eps-m", dest="eps_m", type=float, help="IISS tolerance (default 1e-5)")
    g.add_argument("--eps-n", dest="eps_n", type=float, help="splitting tolerance (default 1e-5)")
    g.add_argument("--max-dc-iter", dest="max_dc_iter", type=int,
                   help="splitting iteration budget (default 2000)")
    g.add_argument("--linear-solver", dest="linear_solver", choices=["direct", "cg"])
    g.add_argument("--threads", type=int, help="accepted for compatibility; kernels are vectorized")
    g = parser.add_argument_group("output")
    g.add_argument("--out", help="existing output directory (default .)")
    g.add_argument("--config", help="TOML file with key = value options")
    g.add_argument("-v", "--verbose", action="count", default=0)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="crplap",
        description="Adaptive Crouzeix-Raviart FEM for the first p-Laplace eigenvalue.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="adaptive eigenvalue computation")
    _common(run)
    run.add_argument("--theta", type=float, help="Dörfler parameter (default 0.6)")
    run.add_argument("--eps-k", dest="eps_k", type=float, help="level stopping tolerance (default 1e-4)")
    run.add_argument("--K", type=int, help="maximal level (default 9)")
    run.add_argument("--sweeps", type=int, help="bisections per marked element (default 2)")
    run.add_argument("--lambda-ref", dest="lambda_ref", type=float,
                     help="reference eigenvalue; appends e_mu to the trace")
    run.add_argument("--no-timings", dest="no_timings", action="store_true",
                     help="write 0 in the seconds column (byte-reproducible traces)")

    tor = sub.add_parser("torsion", help="torsion function on the initial mesh")
    _common(tor)

    bvp = sub.add_parser("bvp", help="one p-Laplace solve with constant load")
    _common(bvp)
    bvp.add_argument("--load", type=float, help="constant right-hand side (default 1)")

    ver = sub.add_parser("verify", help="run the oracle suite")
    ver.add_argument("--perturb-jump", dest="perturb_jump", type=float, default=0.0,
                     help=argparse.SUPPRESS)
    ver.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def resolve_options(args, environ=None):
    """Merge defaults, ``PLAP_SEED``, the config file and flags (in that order)."""
    environ = os.environ if environ is None else environ
    opts = {k: d for k, (_, d) in OPTIONS.items()}
    if environ.get("PLAP_SEED"):
        opts["seed"] = int(environ["PLAP_SEED"])
    path = getattr(args, "config", None)
    if path:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        for key, value in data.items():
            key = key.replace("-", "_")
            if key not in OPTIONS:
                raise CRPlapError(f"unknown option {key!r} in {path}")
            typ = OPTIONS[key][0]
            opts[key] = typ(value)
    for key in OPTIONS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def _configs(opts):
    linear = LinearSolveConfig(method=opts["linear_solver"])
    dc = DCConfig(tol=opts["eps_n"], max_iter=opts["max_dc_iter"], seed=opts["seed"], linear=linear)
    return IISSConfig(tol=opts["eps_m"], dc=dc)


def _adaptive_config(opts):
    return AdaptiveConfig(
        p=opts["p"], theta=opts["theta"], eps_k=opts["eps_k"], K=opts["K"],
        domain=opts["domain"], n=opts["n"], seed=opts["seed"], sweeps=opts["sweeps"],
        iiss=_configs(opts),
    )


def _check_out(path):
    if not os.path.isdir(path):
        raise CRPlapError(f"output directory {path!r} does not exist")
    return path


def cmd_run(opts, no_timings=False):
    out = _check_out(opts["out"])
    cfg = _adaptive_config(opts)
    trace_path = os.path.join(out, "trace.csv")

    def on_level(rec, mesh, pair):
        write_mesh(mesh, os.path.join(out, f"mesh_{rec.k}.plapmesh"))
        write_solution_csv(pair.u, os.path.join(out, f"solution_{rec.k}.csv"))
        print(f"k={rec.k} dof={rec.dof} mu={rec.mu:.9g} eta1={rec.eta1:.3e} eta2={rec.eta2:.3e}", flush=True)

    try:
        trace = adaptive_loop(cfg, on_level=on_level)
    except SolverFailure as exc:
        partial = getattr(exc, "trace", None)
        if partial is not None:
            partial.write_csv(trace_path, include_time=not no_timings)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    trace.write_csv(trace_path, lambda_ref=opts["lambda_ref"], include_time=not no_timings)
    if opts["lambda_ref"] is not None:
        print(f"e_mu={trace.e_mu(opts['lambda_ref']):.9g}")
    return 0


def _single_solve(opts, load, name):
    out = _check_out(opts["out"])
    cfg = _adaptive_config(opts)
    mesh = cfg.initial_mesh()
    dc = cfg.iiss.dc
    system = CRSystem(mesh, dc.linear)
    lines = []
    t0 = time.perf_counter()
    try:
        state = decomposition_coordination(
            system, load, opts["p"], dc,
            callback=lambda n, u, rel: lines.append(f"{n},{rel:.9g}"),
        )
    finally:
        with open(os.path.join(out, f"{name}_convergence.csv"), "w") as fh:
            fh.write("iteration,rel_change\n")
            fh.write("".join(line + "\n" for line in lines))
    write_solution_csv(state.u, os.path.join(out, f"{name}.csv"))
    print(
        f"{name}: dof={mesh.n_dof} iterations={state.iterations} "
        f"rel_change={state.rel_change:.3e} residual={state.residual:.3e} "
        f"seconds={time.perf_counter() - t0:.2f}"
    )
    return 0


def cmd_verify(perturb_jump=0.0):
    from .verify import run_checks

    results = run_checks(perturb_jump=perturb_jump)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(name)s %(message)s")
    try:
        if args.command == "verify":
            return cmd_verify(args.perturb_jump)
        opts = resolve_options(args)
        if args.command == "run":
            return cmd_run(opts, no_timings=args.no_timings)
        if args.command == "torsion":
            return _single_solve(opts, 1.0, "torsion")
        return _single_solve(opts, opts["load"], "solution")
    except SolverFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CRPlapError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
