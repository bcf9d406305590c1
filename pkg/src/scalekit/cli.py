"""Command-line front end.

Every subcommand prints a JSON report on stdout, optionally writes its
result (matrix, tensor or map) with --out and its convergence trace with
--trace. The exit code depends only on the outcome: 0 converged or exactly
scalable, 2 approximately scalable only, 3 infeasible, 1 anything else.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from . import io as sio
from .balance import balance, dad_scale_sym
from .config import ScalingError, SolverConfig, Status
from .diagnostics import rate_estimate, verify_scaling
from .equivalence import gradient_scale, menon_scale, ras_scale
from .feasibility import MarginSpec, Verdict, scalability, subset_witness
from .generalized import loglinear_scale, nd_ras, pnorm_scale, product_scale
from .operators import (filter_normal_form, menon_pos_scale, operator_sinkhorn,
                        scale_with_marginals, as_hermitian)
from .structure import analyze_structure

EXIT_OK, EXIT_ERROR, EXIT_APPROX, EXIT_INFEASIBLE = 0, 1, 2, 3

_EXIT = {
    Status.CONVERGED: EXIT_OK,
    Status.APPROX_ONLY: EXIT_APPROX,
    Status.INFEASIBLE: EXIT_INFEASIBLE,
    Status.MAX_ITERS: EXIT_ERROR,
    Verdict.EXACT: EXIT_OK,
    Verdict.APPROX_ONLY: EXIT_APPROX,
    Verdict.INFEASIBLE: EXIT_INFEASIBLE,
}


def exit_code(outcome):
    return _EXIT[outcome]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would read as ApproxOnly
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text):
    try:
        return np.array([float(t) for t in text.replace(";", ",").split(",") if t.strip()])
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _seed(args):
    env = os.environ.get("SCALEKIT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"SCALEKIT_SEED must be an integer, got {env!r}") from None
    return args.seed


def _cfg(args):
    return SolverConfig(tol=args.tol, max_iters=args.max_iters)


def _margins(args, A):
    m, n = A.shape
    r = _floats(args.rows) if args.rows else np.ones(m)
    c = _floats(args.cols) if args.cols else np.full(n, r.sum() / n)
    return MarginSpec(r, c)


def _out_format(args, src):
    if args.format:
        return args.format
    return sio.detect_format(src) if src and os.path.exists(src) else "mtx"


def _save_matrix(args, B, src):
    if args.out:
        sio.save_matrix(args.out, B, _out_format(args, src))


def _scaling_report(res):
    rep = {"status": res.status, "iterations": res.iterations, "d1": res.d1, "d2": res.d2}
    if len(res.trace):
        last = res.trace.records[-1]
        rep["row_resid"], rep["col_resid"] = last.row_resid, last.col_resid
    if res.trace.vanished:
        rep["vanished"] = res.trace.vanished
    return rep


# --- handlers: each returns (report, outcome) ------------------------------

def cmd_scale(args):
    A = sio.load_matrix(args.matrix)
    m = _margins(args, A)
    solver = {"ras": ras_scale, "menon": menon_scale, "gradient": gradient_scale}[args.method]
    res = solver(A, m, _cfg(args))
    if args.trace:
        sio.write_trace(args.trace, res.trace)
    _save_matrix(args, res.B, args.matrix)
    rep = _scaling_report(res)
    if res.status in (Status.CONVERGED, Status.APPROX_ONLY):
        v = verify_scaling(A, m, res, tol=max(args.tol * 100, 1e-8))
        rep["verification"] = {"passed": v.passed, "cross_ratio_drift": v.cross_ratio_drift,
                               "notes": v.notes}
    return rep, res.status


def cmd_balance(args):
    A = sio.load_matrix(args.matrix)
    res = balance(A, _cfg(args))
    if args.trace:
        sio.write_trace(args.trace, res.trace)
    _save_matrix(args, res.B, args.matrix)
    return {"status": res.status, "iterations": res.iterations, "d": res.d,
            "entropy_objective": res.entropy_objective}, res.status


def cmd_dad(args):
    A = sio.load_matrix(args.matrix)
    r = _floats(args.targets) if args.targets else np.ones(A.shape[0])
    verdict = scalability(A, MarginSpec(r, r)).verdict
    if verdict != Verdict.EXACT:
        return {"status": verdict, "message": "no symmetric scaling to these row sums"}, verdict
    x, B, status = dad_scale_sym(A, r, _cfg(args), check=False)
    _save_matrix(args, B, args.matrix)
    return {"status": status, "d": x}, status


def cmd_tensor(args):
    T = sio.load_tensor(args.tensor)
    if args.margins:
        margins = [_floats(part) for part in args.margins.split(";")]
    else:
        margins = [np.full(d, T.size / d) for d in T.shape]
    schedule = [int(a) for a in args.schedule.split(",")] if args.schedule else None
    res = nd_ras(T, margins, schedule, _cfg(args))
    if args.trace:
        sio.write_trace(args.trace, res.trace)
    if args.out:
        sio.save_tensor(args.out, res.T)
    return {"status": res.status, "iterations": res.iterations, "factors": res.factors}, res.status


def _vector(arg):
    if os.path.exists(arg):
        return sio.load_matrix(arg, nonneg=False).ravel()
    return _floats(arg)


def cmd_loglinear(args):
    x = _vector(args.x)
    C = sio.load_matrix(args.C, nonneg=False)
    b = _floats(args.b)
    fit, k = loglinear_scale(x, C, b, _cfg(args), return_iterations=True)
    if args.out:
        sio.save_matrix(args.out, fit.w[None, :], _out_format(args, args.C))
    return {"status": Status.CONVERGED, "iterations": k, "w": fit.w, "D": fit.D}, Status.CONVERGED


def cmd_pnorm(args):
    A = sio.load_matrix(args.matrix)
    res = pnorm_scale(A, _margins(args, A), args.p, _cfg(args))
    if args.trace:
        sio.write_trace(args.trace, res.trace)
    _save_matrix(args, res.B, args.matrix)
    return _scaling_report(res), res.status


def cmd_product(args):
    A = sio.load_matrix(args.matrix)
    res = product_scale(A, _floats(args.rows), _floats(args.cols))
    _save_matrix(args, res.B, args.matrix)
    return _scaling_report(res), res.status


def cmd_feasible(args):
    A = sio.load_matrix(args.matrix)
    m = _margins(args, A)
    f = scalability(A, m)
    rep = {"verdict": f.verdict, "flow_value": f.flow_value}
    if f.caveat:
        rep["caveat"] = f.caveat
    if f.witness_matrix is not None:
        rep["witness_matrix"] = f.witness_matrix
    if f.witness_sets is not None:
        rep["witness_sets"] = {"rows": sorted(f.witness_sets[0]), "cols": sorted(f.witness_sets[1])}
    if min(A.shape) <= 16:
        w = subset_witness(A, m)
        if w is not None:
            rep["subset_witness"] = {"rows": sorted(w.rows), "cols": sorted(w.cols), "kind": w.kind}
    return rep, f.verdict


def cmd_analyze(args):
    A = sio.load_matrix(args.matrix)
    rep = dataclasses.asdict(analyze_structure(A))
    rep["shape"] = A.shape
    rep["nnz"] = int(np.count_nonzero(A))
    return rep, Status.CONVERGED


def cmd_op_scale(args):
    E = sio.load_map(args.map)
    cfg = _cfg(args)
    if args.method == "sinkhorn":
        res = operator_sinkhorn(E, cfg)
    else:
        res = menon_pos_scale(E, cfg, seed=_seed(args))
    if args.trace:
        sio.write_ds_trace(args.trace, res.ds_history)
    if args.out:
        sio.save_map(args.out, res.E_scaled)
    return {"status": res.status, "iterations": res.iterations, "ds_error": res.ds_history[-1],
            "X": res.X, "Y": res.Y}, res.status


def _hermitian(path):
    return as_hermitian(sio.load_matrix(path, nonneg=False))


def cmd_op_marginals(args):
    E = sio.load_map(args.map)
    V, W = _hermitian(args.V), _hermitian(args.W)
    res = scale_with_marginals(E, V, W, _cfg(args), seed=_seed(args))
    if args.trace:
        sio.write_ds_trace(args.trace, res.ds_history)
    if args.out:
        sio.save_map(args.out, res.E_scaled)
    return {"status": res.status, "iterations": res.iterations, "residual": res.ds_history[-1],
            "X": res.X, "Y": res.Y, "notes": res.notes}, res.status


def cmd_filter(args):
    rho = _hermitian(args.state)
    res = filter_normal_form(rho, _cfg(args))
    _save_matrix(args, res.rho, args.state)
    return {"status": res.status, "iterations": res.iterations, "X1": res.X1, "X2": res.X2}, res.status


def cmd_rate(args):
    A = sio.load_matrix(args.matrix)
    m = _margins(args, A)
    res = ras_scale(A, m, _cfg(args))
    if args.trace:
        sio.write_trace(args.trace, res.trace)
    rep = {"status": res.status, "iterations": res.iterations}
    if res.status == Status.CONVERGED:
        est = rate_estimate(res.trace, res.B, window=args.window)
        rep.update(measured_rate=est.measured_rate, sigma2_squared=est.sigma2_squared,
                   degenerate=est.degenerate)
    return rep, res.status


# --- parser ----------------------------------------------------------------

def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--max-iters", type=int, default=10000)
    common.add_argument("--out", help="write the result here")
    common.add_argument("--format", choices=("mtx", "csv"), help="output matrix format (default: as input)")
    common.add_argument("--trace", help="write the convergence trace as CSV")
    common.add_argument("--seed", type=int, default=0, help="sampling seed (SCALEKIT_SEED overrides)")

    p = _Parser(prog="scalekit", description="Diagonal scaling of matrices, tensors and positive maps.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, handler, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(handler=handler)
        return sp

    def margins(sp):
        sp.add_argument("--rows", help="row sums, comma separated (default all ones)")
        sp.add_argument("--cols", help="column sums (default: uniform with the row total)")

    sp = add("scale", cmd_scale, "equivalence scaling D1 A D2")
    sp.add_argument("--matrix", required=True)
    margins(sp)
    sp.add_argument("--method", choices=("ras", "menon", "gradient"), default="ras")

    sp = add("balance", cmd_balance, "balance D A D^-1")
    sp.add_argument("--matrix", required=True)

    sp = add("dad", cmd_dad, "symmetric scaling D A D")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--targets", help="row sums (default all ones)")

    sp = add("tensor-scale", cmd_tensor, "multi-axis scaling of a tensor")
    sp.add_argument("--tensor", required=True)
    sp.add_argument("--margins", help="one list per axis, separated by ';'")
    sp.add_argument("--schedule", help="axis order of one period, e.g. 2,1,0")

    sp = add("loglinear", cmd_loglinear, "log-linear model fit")
    sp.add_argument("--x", required=True, help="prior weights: file or comma list")
    sp.add_argument("--C", required=True, help="constraint matrix file")
    sp.add_argument("--b", required=True, help="constraint right-hand side")

    sp = add("pnorm-scale", cmd_pnorm, "scaling to row and column p-norms")
    sp.add_argument("--matrix", required=True)
    margins(sp)
    sp.add_argument("--p", type=float, required=True)

    sp = add("product-scale", cmd_product, "scaling to row and column products")
    sp.add_argument("--matrix", required=True)
    sp.add_argument("--rows", required=True)
    sp.add_argument("--cols", required=True)

    sp = add("feasible", cmd_feasible, "exact / approximate / infeasible verdict")
    sp.add_argument("--matrix", required=True)
    margins(sp)

    sp = add("analyze", cmd_analyze, "structure report")
    sp.add_argument("--matrix", required=True)

    sp = add("op-scale", cmd_op_scale, "doubly stochastic scaling of a positive map")
    sp.add_argument("--map", required=True)
    sp.add_argument("--method", choices=("sinkhorn", "menon"), default="sinkhorn")

    sp = add("op-marginals", cmd_op_marginals, "scale a positive map so that E'(V) = W")
    sp.add_argument("--map", required=True)
    sp.add_argument("--V", required=True)
    sp.add_argument("--W", required=True)

    sp = add("filter", cmd_filter, "local filtering normal form of a bipartite state")
    sp.add_argument("--state", required=True)

    sp = add("rate", cmd_rate, "observed RAS rate against sigma_2 squared")
    sp.add_argument("--matrix", required=True)
    margins(sp)
    sp.add_argument("--window", type=int, default=50)
    return p


def run_command(argv, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        report, outcome = args.handler(args)
    except UsageError as err:
        print(f"error: {err}", file=stderr)
        return EXIT_ERROR
    except (ScalingError, ValueError, OSError, np.linalg.LinAlgError) as err:
        print(f"error: {err}", file=stderr)
        return EXIT_ERROR
    report = {"command": args.command, **report}
    sio.dump_report(report, stdout)
    return exit_code(outcome)


def main(argv=None):
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))
