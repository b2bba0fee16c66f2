"""Command-line entry point: ``gerf <subcommand> ...`` or ``python3 -m gerf``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..core import ProblemInstance, SolverConfig, make_rng, read_matrix, relative_error, write_matrix
from ..imaging import BregmanParams, radial_mask, shepp_logan, write_pgm
from ..penalty import PenaltySpec
from ..solvers import dca_solve, irl1_solve, lasso_admm
from .csvio import rows_to_csv, write_rows
from .experiments import (
    SUCCESS_TOL,
    ExperimentRow,
    ExperimentSpec,
    MatrixSpec,
    run_irl1_vs_dca,
    run_mse_study,
    run_phase_transition,
    worker_count,
)
from .generators import NOISE_STREAM, gen_gaussian_matrix, gen_oversampled_dct, gen_sparse_signal
from .gnsp import check_gnsp_sampled, verify_counterexample
from .mri import MRI_METHODS, run_mri_demo

__all__ = ["run_cli", "main", "parse_grid"]

log = logging.getLogger("gerf")

LAM_NOISE_FREE = 1e-5
LAM_NOISY = 1e-2
OMITTED = "l1-l2 vector baseline omitted (no solver specified for it)"


def parse_grid(text):
    """``a:step:b`` (inclusive) or a comma list, as a sorted tuple of ints."""
    text = text.strip()
    if ":" in text:
        parts = [int(v) for v in text.split(":")]
        if len(parts) != 3 or parts[1] <= 0:
            raise argparse.ArgumentTypeError(f"bad range {text!r}, expected start:step:stop")
        start, step, stop = parts
        vals = list(range(start, stop + 1, step))
    else:
        vals = [int(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise argparse.ArgumentTypeError(f"empty grid {text!r}")
    return tuple(sorted(set(vals)))


def _penalty(text):
    try:
        return PenaltySpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _add_solver_args(p, lam_default):
    hint = "keyed to noise: 1e-5 noise-free, 1e-2 noisy" if lam_default is None else f"{lam_default:g}"
    p.add_argument("--lam", type=float, default=lam_default, help=f"regularization weight (default {hint})")
    p.add_argument("--rho", type=float, default=None, help="ADMM penalty (default 10 * lam)")
    p.add_argument("--outer-max", type=int, default=10)
    p.add_argument("--inner-max", type=int, default=None, help="ADMM iterations per outer step (default 2N)")
    p.add_argument("--tol", type=float, default=1e-6, help="outer relative-change tolerance")


def _solver_cfg(args):
    return SolverConfig(lam=args.lam, rho=args.rho, outer_max=args.outer_max,
                        inner_max=args.inner_max, outer_tol=args.tol, seed=getattr(args, "seed", 0))


def _solver_meta(cfg):
    return {
        "lam": cfg.lam,
        "rho": cfg.rho,
        "outer_max": cfg.outer_max,
        "inner_max": "2N" if cfg.inner_max is None else cfg.inner_max,
        "outer_tol": cfg.outer_tol,
        "admm_residual_tol": 1e-10,
    }


def _base_meta(command, args):
    return {
        "command": command,
        "version": __version__,
        "threads": worker_count(),
        "seed": getattr(args, "seed", 0),
    }


def _emit(rows, out, meta):
    if out == "-":
        sys.stdout.write(rows_to_csv(rows))
    else:
        write_rows(out, rows, meta)
        log.info("wrote %s and %s.meta", out, out)


def _matrix_spec(args):
    return MatrixSpec(args.matrix, args.m, args.n, args.F)


def cmd_recover(args):
    A = read_matrix(args.A)
    y = read_matrix(args.y)
    if A.ndim != 2 or y.ndim != 1:
        print(f"error: A must be a matrix and y a vector (got {A.shape}, {y.shape})", file=sys.stderr)
        return 2
    if A.shape[0] != y.shape[0]:
        print(f"error: dimension mismatch: A is {A.shape[0]}x{A.shape[1]} but y has length {y.shape[0]}",
              file=sys.stderr)
        return 2
    truth = read_matrix(args.truth) if args.truth else None
    if truth is not None and truth.shape != (A.shape[1],):
        print(f"error: truth has shape {truth.shape}, expected ({A.shape[1]},)", file=sys.stderr)
        return 2
    inst = ProblemInstance(A, y, truth=truth)
    cfg = _solver_cfg(args)
    spec = args.penalty
    solver = args.solver
    if solver == "auto":
        solver = "admm" if spec.kind == "l1" else "dca" if spec.kind == "gerf" else "irl1"
    if solver == "dca":
        if spec.kind != "gerf":
            print("error: the DCA solver needs a gerf penalty", file=sys.stderr)
            return 2
        rep = dca_solve(inst, spec.p, spec.sigma, cfg)
    elif solver == "irl1":
        rep = irl1_solve(inst, spec, cfg)
    else:
        rep = lasso_admm(inst, cfg)
    res = rep.result
    write_matrix(args.out, res.estimate)
    print(f"penalty={spec.label} solver={solver} outer_iters={res.outer_iters} "
          f"converged={res.converged} objective={res.objective_trace[-1]:.17g} "
          f"seconds={res.wall_time:.3f}")
    if truth is not None:
        print(f"relative_error={relative_error(res.estimate, truth):.17g}")
    return 0


def cmd_phase(args):
    penalties = tuple(args.penalty or [PenaltySpec.gerf(2, 0.5), PenaltySpec.l1()])
    spec = ExperimentSpec("PhaseTransition", _matrix_spec(args), args.k, args.trials,
                          _solver_cfg(args), penalties, args.seed)
    rows = run_phase_transition(spec)
    meta = _base_meta("phase", args) | _solver_meta(spec.solver) | {
        "matrix": spec.matrix.label,
        "trials": spec.trials,
        "k_grid": " ".join(map(str, spec.sparsity_grid)),
        "penalties": " ".join(p.label for p in penalties),
        "success_tol": SUCCESS_TOL,
        "note": OMITTED,
    }
    _emit(rows, args.out, meta)
    return 0


def cmd_mse(args):
    penalties = tuple(args.penalty or [PenaltySpec.gerf(1, 1), PenaltySpec.gerf(2, 1), PenaltySpec.l1()])
    matrix = MatrixSpec("gaussian", max(args.m), args.n)
    spec = ExperimentSpec("MseStudy", matrix, (args.k,), args.trials, _solver_cfg(args), penalties,
                          args.seed, noise_sd=args.noise, m_grid=args.m)
    rows = run_mse_study(spec)
    meta = _base_meta("mse", args) | _solver_meta(spec.solver) | {
        "matrix": f"gaussian(m x {args.n})",
        "m_grid": " ".join(map(str, args.m)),
        "k": args.k,
        "noise_sd": args.noise,
        "trials": args.trials,
        "penalties": " ".join(p.label for p in penalties),
        "value": "mean squared error ||x_hat - x||^2",
        "note": OMITTED,
    }
    _emit(rows, args.out, meta)
    return 0


def cmd_irl1_vs_dca(args):
    lam = args.lam if args.lam is not None else (LAM_NOISY if args.noise > 0 else LAM_NOISE_FREE)
    args.lam = lam
    spec = ExperimentSpec("Irl1VsDca", MatrixSpec("gaussian", args.m, args.n), args.k, 1,
                          _solver_cfg(args), (PenaltySpec.gerf(args.p, args.sigma),), args.seed,
                          noise_sd=args.noise)
    rows = run_irl1_vs_dca(spec, args.p, args.sigma, args.reps)
    meta = _base_meta("irl1-vs-dca", args) | _solver_meta(spec.solver) | {
        "matrix": spec.matrix.label,
        "noise_sd": args.noise,
        "reps": args.reps,
    }
    _emit(rows, args.out, meta)
    return 0


def cmd_mri(args):
    params = BregmanParams(args.grad_weight, args.data_weight, args.inner, args.outer_max, args.tol)
    methods = args.method or list(MRI_METHODS)
    rows, _, timings = run_mri_demo(args.n, args.lines, methods, params, args.outdir, args.seed)
    for r in rows:
        print(f"{r.method}: relative_error={r.value:.6e} seconds={timings[r.method]:.1f}")
    meta = _base_meta("mri", args) | {
        "n": args.n,
        "lines": args.lines,
        "methods": " ".join(methods),
        "grad_weight": params.grad_weight,
        "data_weight": params.data_weight,
        "inner": params.inner,
        "outer_max": params.outer_max,
        "outer_tol": params.tol,
        "boundary": "periodic",
        "value": "relative error ||u_hat - u||_F / ||u||_F",
    }
    out = args.out or str(Path(args.outdir) / "mri.csv")
    _emit(rows, out, meta)
    return 0


def cmd_gnsp(args):
    if args.A:
        A = read_matrix(args.A)
        if A.ndim != 2:
            print("error: A must be a matrix", file=sys.stderr)
            return 2
    else:
        A = gen_gaussian_matrix(args.m, args.n, args.seed)
    try:
        ce = check_gnsp_sampled(A, args.s, args.p, args.sigma, args.samples, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if ce is None:
        print(f"no counterexample in {args.samples} sampled kernel directions")
    else:
        left, right = ce.sides(args.p, args.sigma)
        print(f"counterexample: S={list(ce.support)} J(v_S)={left:.17g} J(v_Sc)={right:.17g} "
              f"verified={verify_counterexample(ce, args.p, args.sigma)}")
        print("v=" + " ".join(f"{v:.17g}" for v in ce.v))
    rows = [ExperimentRow("gnsp", args.p, args.sigma, args.s, float(ce is not None), args.samples, args.seed)]
    if args.out:
        meta = _base_meta("gnsp-check", args) | {
            "matrix": args.A or f"gaussian({args.m}x{args.n})",
            "value": "1 if a counterexample was found",
        }
        _emit(rows, args.out, meta)
    return 0


def cmd_gen(args):
    what = args.what
    if what == "matrix":
        if args.kind == "gaussian":
            A = gen_gaussian_matrix(args.m, args.n, args.seed)
        else:
            A = gen_oversampled_dct(args.m, args.n, args.F, args.seed)
        write_matrix(args.out, A)
    elif what == "signal":
        write_matrix(args.out, gen_sparse_signal(args.n, args.k, args.seed))
    elif what == "measure":
        A = read_matrix(args.A)
        x = read_matrix(args.x)
        if A.ndim != 2 or x.shape != (A.shape[1],):
            print(f"error: dimension mismatch: A {A.shape}, x {x.shape}", file=sys.stderr)
            return 2
        y = A @ x
        if args.noise > 0:
            y = y + args.noise * make_rng(args.seed, NOISE_STREAM).standard_normal(y.shape[0])
        write_matrix(args.out, y)
    elif what == "mask":
        write_pgm(args.out, radial_mask(args.n, args.lines).astype(float), vmin=0.0, vmax=1.0)
    elif what == "phantom":
        img = shepp_logan(args.n)
        if str(args.out).endswith(".pgm"):
            write_pgm(args.out, img, bits=16, vmin=0.0, vmax=1.0)
        else:
            write_matrix(args.out, img)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="gerf", description="GERF sparse recovery experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("recover", help="solve one instance stored in GERFMAT1 files")
    p.add_argument("--A", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--truth")
    p.add_argument("--penalty", type=_penalty, default=PenaltySpec.gerf(2, 1))
    p.add_argument("--solver", choices=("auto", "dca", "irl1", "admm"), default="auto")
    p.add_argument("--out", required=True, help="estimate, GERFMAT1")
    _add_solver_args(p, LAM_NOISE_FREE)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("phase", help="success rate versus sparsity")
    p.add_argument("--matrix", choices=("gaussian", "dct"), default="gaussian")
    p.add_argument("--m", type=int, default=64)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--F", type=float, default=10.0)
    p.add_argument("--penalty", type=_penalty, action="append")
    p.add_argument("--k", type=parse_grid, default=parse_grid("2:2:32"))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="phase.csv")
    _add_solver_args(p, LAM_NOISE_FREE)
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("mse", help="noisy MSE versus number of measurements")
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--k", type=int, default=130)
    p.add_argument("--m", type=parse_grid, default=parse_grid("240:40:400"))
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--penalty", type=_penalty, action="append")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="mse.csv")
    _add_solver_args(p, LAM_NOISY)
    p.set_defaults(func=cmd_mse)

    p = sub.add_parser("irl1-vs-dca", help="IRL1 and DCA on the same instance")
    p.add_argument("--m", type=int, default=64)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--k", type=parse_grid, default=(30,))
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="irl1_vs_dca.csv")
    _add_solver_args(p, None)
    p.set_defaults(func=cmd_irl1_vs_dca)

    p = sub.add_parser("mri", help="phantom reconstruction from radial k-space lines")
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--lines", type=int, default=7)
    p.add_argument("--method", action="append", help=f"one of {', '.join(MRI_METHODS)} or gerf:p=..,sigma=..")
    p.add_argument("--grad-weight", type=float, default=BregmanParams.grad_weight)
    p.add_argument("--data-weight", type=float, default=BregmanParams.data_weight)
    p.add_argument("--inner", type=int, default=BregmanParams.inner)
    p.add_argument("--outer-max", type=int, default=BregmanParams.outer_max)
    p.add_argument("--tol", type=float, default=BregmanParams.tol)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", default="mri_out")
    p.add_argument("--out", help="CSV path (default OUTDIR/mri.csv)")
    p.set_defaults(func=cmd_mri)

    p = sub.add_parser("gnsp-check", help="sampled falsifier for the null space property")
    p.add_argument("--A", help="GERFMAT1 matrix (default: random Gaussian m x n)")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gnsp)

    p = sub.add_parser("gen", help="write matrices, signals, measurements, masks or the phantom")
    gsub = p.add_subparsers(dest="what", required=True)
    g = gsub.add_parser("matrix")
    g.add_argument("--kind", choices=("gaussian", "dct"), default="gaussian")
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--F", type=float, default=10.0)
    g = gsub.add_parser("signal")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g = gsub.add_parser("measure")
    g.add_argument("--A", required=True)
    g.add_argument("--x", required=True)
    g.add_argument("--noise", type=float, default=0.0)
    g = gsub.add_parser("mask")
    g.add_argument("--n", type=int, default=256)
    g.add_argument("--lines", type=int, default=7)
    g = gsub.add_parser("phantom")
    g.add_argument("--n", type=int, default=256)
    for g in gsub.choices.values():
        g.add_argument("--seed", type=int, default=0)
        g.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)
    return ap


def run_cli(argv=None):
    """Parse ``argv`` and run the subcommand; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def main():
    sys.exit(run_cli())
