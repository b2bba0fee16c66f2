"""Monte Carlo experiments: success-rate sweeps, MSE study, IRL1/DCA comparison."""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from ..core import ProblemInstance, SolverConfig, make_rng, relative_error
from ..penalty import PenaltySpec
from ..solvers import dca_solve, irl1_solve, lasso_admm
from .generators import NOISE_STREAM, gen_gaussian_matrix, gen_oversampled_dct, gen_sparse_signal

__all__ = [
    "MatrixSpec",
    "ExperimentSpec",
    "ExperimentRow",
    "solve_with",
    "make_instance",
    "oracle_mse",
    "run_phase_transition",
    "run_mse_study",
    "run_irl1_vs_dca",
    "worker_count",
]

log = logging.getLogger(__name__)

SUCCESS_TOL = 1e-3
KINDS = ("PhaseTransition", "MseStudy", "Irl1VsDca", "MriDemo", "GnspCheck")


@dataclass(frozen=True)
class MatrixSpec:
    """``gaussian`` (i.i.d. N(0, 1)) or ``dct`` (oversampled cosine, factor ``F``)."""

    kind: str = "gaussian"
    m: int = 64
    n: int = 256
    F: float = 10.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "dct"):
            raise ValueError(f"unknown matrix kind {self.kind!r}")
        if self.m < 1 or self.n < 1:
            raise ValueError("matrix dimensions must be positive")

    def build(self, seed, *keys, m=None):
        m = self.m if m is None else m
        if self.kind == "gaussian":
            return gen_gaussian_matrix(m, self.n, seed, *keys)
        return gen_oversampled_dct(m, self.n, self.F, seed, *keys)

    @property
    def label(self):
        if self.kind == "gaussian":
            return f"gaussian({self.m}x{self.n})"
        return f"dct({self.m}x{self.n},F={self.F:g})"


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str
    matrix: MatrixSpec = field(default_factory=MatrixSpec)
    sparsity_grid: tuple = (2,)
    trials: int = 1
    solver: SolverConfig = field(default_factory=SolverConfig)
    penalties: tuple = (PenaltySpec.l1(),)
    base_seed: int = 0
    noise_sd: float = 0.0
    m_grid: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        grid = tuple(int(k) for k in self.sparsity_grid)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("sparsity grid must be strictly increasing")
        object.__setattr__(self, "sparsity_grid", grid)
        object.__setattr__(self, "penalties", tuple(self.penalties))
        object.__setattr__(self, "m_grid", tuple(int(m) for m in self.m_grid))
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")


@dataclass(frozen=True)
class ExperimentRow:
    """One CSV line; ``value`` is a success rate, an MSE or a timing."""

    method: str
    param1: float
    param2: float
    k_or_m: int
    value: float
    n_trials: int
    seed: int

    @property
    def sort_key(self):
        return (self.method, _nan_key(self.param1), _nan_key(self.param2), self.k_or_m)


def _nan_key(v):
    return (1, 0.0) if math.isnan(v) else (0, v)


def worker_count():
    """Trial-level worker count from ``GERF_THREADS`` (default: logical cores)."""
    env = os.environ.get("GERF_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ValueError(f"GERF_THREADS must be an integer, got {env!r}") from exc
        return max(1, n)
    return os.cpu_count() or 1


def _map(fn, tasks):
    workers = min(worker_count(), len(tasks))
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def solve_with(spec, instance, cfg):
    """Dispatch: Lasso to ADMM, GERF to DCA, the other penalties to IRL1."""
    if spec.kind == "l1":
        return lasso_admm(instance, cfg)
    if spec.kind == "gerf":
        return dca_solve(instance, spec.p, spec.sigma, cfg)
    return irl1_solve(instance, spec, cfg)


def make_instance(matrix, k, seed, trial, noise_sd=0.0, m=None):
    """Instance for one ``(k or m, trial)`` cell; every method sees the same draw."""
    m = matrix.m if m is None else m
    A = matrix.build(seed, m, k, trial, m=m)
    x = gen_sparse_signal(matrix.n, k, seed, m, k, trial)
    y = A @ x
    if noise_sd > 0:
        y = y + noise_sd * make_rng(seed, NOISE_STREAM, m, k, trial).standard_normal(m)
    return ProblemInstance(A, y, truth=x, noise_sd=noise_sd)


def _phase_cell(task):
    spec, k, trial = task
    inst = make_instance(spec.matrix, k, spec.base_seed, trial)
    out = []
    for pen in spec.penalties:
        try:
            est = solve_with(pen, inst, spec.solver).estimate
            ok = relative_error(est, inst.truth) <= SUCCESS_TOL if k > 0 else not np.any(est)
        except (ArithmeticError, np.linalg.LinAlgError) as exc:
            log.warning("%s failed at k=%d trial=%d: %s", pen.label, k, trial, exc)
            ok = False
        out.append(bool(ok))
    return k, trial, out


def run_phase_transition(spec):
    """Success rate (relative error <= 1e-3) per penalty and sparsity level.

    Trials are keyed by ``(base_seed, k, trial)`` so results do not depend
    on scheduling, and all penalties are scored on identical instances.
    """
    tasks = [(spec, k, t) for k in spec.sparsity_grid for t in range(spec.trials)]
    hits = {(i, k): 0 for i in range(len(spec.penalties)) for k in spec.sparsity_grid}
    for k, _, out in _map(_phase_cell, tasks):
        for i, ok in enumerate(out):
            hits[i, k] += ok
    rows = []
    for (i, k), h in hits.items():
        pen = spec.penalties[i]
        p1, p2 = pen.params
        rows.append(ExperimentRow(pen.label, p1, p2, k, h / spec.trials, spec.trials, spec.base_seed))
    return sorted(rows, key=lambda r: r.sort_key)


def oracle_mse(A, support, noise_sd):
    """``noise_sd^2 * trace((A_S^T A_S)^{-1})``.

    Raises
    ------
    numpy.linalg.LinAlgError
        If ``A_S`` does not have full column rank.
    """
    A = np.asarray(A, dtype=np.float64)
    S = np.asarray(support, dtype=np.intp)
    if S.size == 0:
        return 0.0
    G = A[:, S].T @ A[:, S]
    try:
        factor = linalg.cho_factor(G, lower=True)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"A_S is rank deficient: {exc}") from exc
    # guard against a numerically singular but "successful" factorization
    d = np.abs(np.diag(factor[0]))
    if d.min() <= 1e-12 * d.max():
        raise np.linalg.LinAlgError("A_S is rank deficient")
    inv = linalg.cho_solve(factor, np.eye(S.size))
    return float(noise_sd**2 * np.trace(inv))


def _mse_cell(task):
    spec, m, trial = task
    k = spec.sparsity_grid[0]
    inst = make_instance(spec.matrix, k, spec.base_seed, trial, spec.noise_sd, m=m)
    errs = []
    for pen in spec.penalties:
        try:
            est = solve_with(pen, inst, spec.solver).estimate
            errs.append(float(np.sum((est - inst.truth) ** 2)))
        except (ArithmeticError, np.linalg.LinAlgError) as exc:
            log.warning("%s failed at m=%d trial=%d: %s", pen.label, m, trial, exc)
            errs.append(math.nan)
    orc = oracle_mse(inst.A, np.flatnonzero(inst.truth), spec.noise_sd)
    return m, trial, errs, orc


def run_mse_study(spec):
    """Mean squared error ``||x_hat - x||^2`` per method and ``m``, plus the oracle.

    ``spec.sparsity_grid`` holds the single sparsity level and ``spec.m_grid``
    the measurement counts; the oracle benchmark is reported as method
    ``oracle``.
    """
    if not spec.noise_sd > 0:
        log.info("noise-free MSE study: oracle MSE is identically zero")
    if len(spec.sparsity_grid) != 1:
        raise ValueError("the MSE study uses a single sparsity level")
    if not spec.m_grid:
        raise ValueError("m_grid is empty")
    tasks = [(spec, m, t) for m in spec.m_grid for t in range(spec.trials)]
    acc = {}
    for m, _, errs, orc in _map(_mse_cell, tasks):
        for i, e in enumerate(errs):
            acc.setdefault((i, m), []).append(e)
        acc.setdefault((-1, m), []).append(orc)
    rows = []
    for (i, m), vals in acc.items():
        if i < 0:
            label, p1, p2 = "oracle", math.nan, math.nan
        else:
            pen = spec.penalties[i]
            label, (p1, p2) = pen.label, pen.params
        rows.append(ExperimentRow(label, p1, p2, m, float(np.mean(vals)), spec.trials, spec.base_seed))
    return sorted(rows, key=lambda r: r.sort_key)


def run_irl1_vs_dca(spec, p=2.0, sigma=1.0, reps=10):
    """IRL1 and DCA on one instance per sparsity level in ``spec.sparsity_grid``.

    Reports, per solver, the relative error and the mean wall time over
    ``reps`` repeated solves, and the relative gap between the two estimates
    (method ``agreement``).
    """
    gerf = PenaltySpec.gerf(p, sigma)
    rows = []
    for k in spec.sparsity_grid:
        inst = make_instance(spec.matrix, k, spec.base_seed, 0, spec.noise_sd)
        est, times = {}, {"irl1": [], "dca": []}
        for _ in range(reps):
            t0 = time.perf_counter()
            est["irl1"] = irl1_solve(inst, gerf, spec.solver).estimate
            times["irl1"].append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            est["dca"] = dca_solve(inst, p, sigma, spec.solver).estimate
            times["dca"].append(time.perf_counter() - t0)
        for name in ("irl1", "dca"):
            rows.append(ExperimentRow(f"{name}:relative_error", p, sigma, k,
                                      relative_error(est[name], inst.truth), 1, spec.base_seed))
            rows.append(ExperimentRow(f"{name}:seconds", p, sigma, k,
                                      float(np.mean(times[name])), reps, spec.base_seed))
        gap = np.linalg.norm(est["irl1"] - est["dca"]) / max(np.linalg.norm(est["dca"]), 1e-300)
        rows.append(ExperimentRow("agreement", p, sigma, k, float(gap), 1, spec.base_seed))
    return sorted(rows, key=lambda r: r.sort_key)


def with_solver(spec, **changes):
    """Copy of ``spec`` with solver fields replaced."""
    return replace(spec, solver=replace(spec.solver, **changes))
