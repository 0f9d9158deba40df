"""Command line front end.

Exit codes: 0 converged, 2 not well posed (or rank deficient), 3 iteration
cap reached, 4 I/O or parse error, 5 stagnation by rounding errors or a
degenerate step.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io, probgen
from .errors import DimensionError, NotWellPosedError, RankDeficientError
from .power import solve_power
from .reference import solve_tls_svd
from .solver import SolverConfig, Status, StepMode, SubproblemMode, solve
from .variational import ProblemData

log = logging.getLogger("tlsgn")

EXIT_OK, EXIT_ILL_POSED, EXIT_MAXIT, EXIT_IO, EXIT_STAGNATED = 0, 2, 3, 4, 5
STATUS_EXIT = {
    Status.CONVERGED: EXIT_OK,
    Status.MAXIT_REACHED: EXIT_MAXIT,
    Status.STAGNATED_ROUNDING: EXIT_STAGNATED,
    Status.STEP_DEGENERATE: EXIT_STAGNATED,
}
LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "trace": logging.DEBUG}


class InputError(Exception):
    pass


def build_parser():
    p = argparse.ArgumentParser(prog="tlsgn", description="Solve a total least squares problem A x ~ b.")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--A", dest="a_path", metavar="PATH", help="data matrix A (.mtx or .csv)")
    src.add_argument("--gen", metavar="SPEC",
                     help='generate a problem, e.g. "m=100,n=10,gap=4,seed=0"')
    p.add_argument("--b", dest="b_path", metavar="PATH", help="right-hand side b (.mtx or .csv)")
    p.add_argument("--method", choices=["gn-basic", "gn-optimal", "svd", "power"], default="gn-optimal")
    p.add_argument("--subproblem", choices=[m.value for m in SubproblemMode],
                   default=SubproblemMode.RANK_ONE_UPDATE.value)
    p.add_argument("--epsilon", type=float, default=None,
                   help="absolute tolerance on ||J^T f|| (default: rel-epsilon * sigma_1(C)^2)")
    p.add_argument("--rel-epsilon", type=float, default=SolverConfig.rel_epsilon)
    p.add_argument("--maxit", type=int, default=SolverConfig.maxit)
    guard = p.add_mutually_exclusive_group()
    guard.add_argument("--eta-guard", dest="eta_guard", action="store_true", default=None)
    guard.add_argument("--no-eta-guard", dest="eta_guard", action="store_false")
    p.add_argument("--trace", metavar="PATH", help="write the per-iteration trace as CSV")
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.add_argument("--seeds", help="comma separated seeds for a batch of generated problems")
    p.add_argument("--repeat", type=int, help="batch of N generated problems, seeds seed..seed+N-1")
    p.add_argument("--out-dir", metavar="DIR", help="directory for per-run outputs in batch mode")
    p.add_argument("--jobs", type=int, default=1, help="concurrent runs in batch mode")
    return p


def load_problem(args, gen=None):
    if gen is not None:
        return probgen.generate(probgen.parse_gen(gen))
    if not args.b_path:
        raise InputError("--A requires --b")
    try:
        a = io.read_matrix(args.a_path)
        b = io.read_vector(args.b_path)
        return ProblemData(a, b)
    except (OSError, ValueError, DimensionError) as exc:
        raise InputError(str(exc)) from exc


def run_method(problem, args):
    """Returns (payload dict, trace or None, exit code)."""
    if args.method == "svd":
        x, eta = solve_tls_svd(problem)
        return {"status": Status.CONVERGED.value, "iterations": 0, "eta": eta, "x": x}, None, EXIT_OK
    if args.method == "power":
        res = solve_power(problem, maxit=args.maxit)
    else:
        cfg = SolverConfig(
            epsilon=args.epsilon, rel_epsilon=args.rel_epsilon, maxit=args.maxit,
            step_mode=StepMode.BASIC if args.method == "gn-basic" else StepMode.OPTIMAL,
            subproblem_mode=args.subproblem, eta_guard=args.eta_guard)
        res = solve(problem, cfg)
    payload = {"status": res.status.value, "iterations": res.iterations,
               "eta": res.eta_final, "x": res.x_hat}
    return payload, res.trace, STATUS_EXIT[res.status]


def format_payload(payload, fmt):
    x = [float(v) for v in np.asarray(payload["x"])]
    if fmt == "json":
        out = dict(payload, x=x, eta=float(payload["eta"]))
        return json.dumps(out)
    lines = [f"status {payload['status']}", f"iterations {payload['iterations']}",
             f"eta {float(payload['eta']):.17g}", "x " + " ".join(f"{v:.17g}" for v in x)]
    return "\n".join(lines)


def run_one(args, gen=None, trace_path=None):
    problem = load_problem(args, gen)
    payload, trace, code = run_method(problem, args)
    payload = dict(method=args.method, m=problem.m, n=problem.n, **payload)
    if trace_path and trace is not None:
        try:
            trace.write_csv(trace_path)
        except OSError as exc:
            raise InputError(f"cannot write trace: {exc}") from exc
    return payload, code


def _batch(args):
    if args.seeds:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    else:
        base = probgen.parse_gen(args.gen).seed
        seeds = list(range(base, base + args.repeat))
    out_dir = Path(args.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)

    def task(seed):
        gen = f"{args.gen},seed={seed}" if "seed=" not in args.gen else \
            ",".join(f"seed={seed}" if t.strip().startswith("seed=") else t for t in args.gen.split(","))
        trace_path = out_dir / f"trace-{seed}.csv" if args.trace else None
        try:
            payload, code = run_one(args, gen, trace_path)
        except NotWellPosedError as exc:
            payload, code = {"error": str(exc)}, EXIT_ILL_POSED
        (out_dir / f"run-{seed}.{args.format}").write_text(
            format_payload(payload, args.format) + "\n" if "x" in payload else json.dumps(payload) + "\n")
        return code

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        codes = list(pool.map(task, seeds))
    print(json.dumps({"runs": len(seeds), "exit_codes": dict(zip(map(str, seeds), codes))}))
    return max(codes)


def main(argv=None):
    level = os.environ.get("TLSGN_LOG", "quiet").lower()
    logging.basicConfig(level=LOG_LEVELS.get(level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.seeds or args.repeat:
            if not args.gen:
                raise InputError("--seeds/--repeat need --gen")
            return _batch(args)
        payload, code = run_one(args, args.gen, args.trace)
    except InputError as exc:
        print(f"tlsgn: input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NotWellPosedError, RankDeficientError) as exc:
        print(f"tlsgn: {exc}", file=sys.stderr)
        return EXIT_ILL_POSED
    except ValueError as exc:
        print(f"tlsgn: invalid argument: {exc}", file=sys.stderr)
        return EXIT_IO
    print(format_payload(payload, args.format))
    if code != EXIT_OK:
        print(f"tlsgn: {payload['status']} after {payload['iterations']} iterations", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
