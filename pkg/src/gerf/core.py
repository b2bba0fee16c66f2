"""Shared containers, seeding, linear-algebra helpers and matrix file I/O."""

from __future__ import annotations

import hashlib
import struct
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg

__all__ = [
    "ProblemInstance",
    "SolverConfig",
    "RecoveryResult",
    "as_matrix",
    "as_vector",
    "make_rng",
    "CholeskySolver",
    "cholesky_cached_solve",
    "relative_error",
    "write_matrix",
    "read_matrix",
]

MAGIC = b"GERFMAT1"


def as_matrix(a, name="A"):
    """Return ``a`` as a C-contiguous float64 2-D array, rejecting NaN/Inf."""
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_vector(v, name="y"):
    arr = np.ascontiguousarray(v, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class ProblemInstance:
    """Linear measurement model ``y = A x + noise``.

    ``truth`` and ``noise_sd`` are optional and only used for scoring.
    """

    A: np.ndarray
    y: np.ndarray
    truth: np.ndarray | None = None
    noise_sd: float | None = None

    def __post_init__(self):
        A = as_matrix(self.A)
        y = as_vector(self.y)
        if y.shape[0] != A.shape[0]:
            raise ValueError(
                f"y has length {y.shape[0]} but A has {A.shape[0]} rows"
            )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)
        if self.truth is not None:
            truth = as_vector(self.truth, "truth")
            if truth.shape[0] != A.shape[1]:
                raise ValueError(
                    f"truth has length {truth.shape[0]} but A has {A.shape[1]} columns"
                )
            object.__setattr__(self, "truth", truth)
        if self.noise_sd is not None and self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")

    @property
    def shape(self):
        return self.A.shape


@dataclass(frozen=True)
class SolverConfig:
    """Parameters shared by the IRL1, DCA and ADMM-Lasso solvers.

    ``inner_max=None`` means ``2 * N`` inner ADMM iterations, resolved at
    solve time from the problem width. ``rho=None`` resolves to ``10 * lam``;
    a penalty far above ``lam`` stalls ADMM at small ``lam``.
    """

    lam: float = 1e-5
    rho: float | None = None
    outer_max: int = 10
    inner_max: int | None = None
    outer_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.rho is None:
            object.__setattr__(self, "rho", 10.0 * self.lam)
        for name in ("lam", "rho", "outer_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.outer_max < 1:
            raise ValueError("outer_max must be at least 1")
        if self.inner_max is not None and self.inner_max < 1:
            raise ValueError("inner_max must be at least 1")

    def inner_iters(self, n):
        return 2 * n if self.inner_max is None else self.inner_max


@dataclass
class RecoveryResult:
    estimate: np.ndarray
    outer_iters: int
    objective_trace: np.ndarray = field(repr=False)
    converged: bool
    wall_time: float

    def __post_init__(self):
        if len(self.objective_trace) != self.outer_iters:
            raise ValueError("objective_trace length must equal outer_iters")


def make_rng(seed, *keys):
    """Counter-based generator for the stream addressed by ``(seed, *keys)``.

    Each distinct key tuple gets an independent Philox stream, so one trial
    can be regenerated without replaying the others.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


class CholeskySolver:
    """Solve ``G v = b`` repeatedly for a fixed SPD matrix ``G``."""

    def __init__(self, G):
        G = as_matrix(G, "G")
        if G.shape[0] != G.shape[1]:
            raise ValueError("G must be square")
        try:
            self._factor = linalg.cho_factor(G, lower=True, check_finite=False)
        except linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"Cholesky factorization failed: {exc}") from exc
        self.n = G.shape[0]

    @classmethod
    def for_gram(cls, A, rho):
        """Factor ``A^T A + rho I``."""
        G = A.T @ A
        G[np.diag_indices_from(G)] += rho
        return cls(G)

    def solve(self, b):
        return linalg.cho_solve(self._factor, b, check_finite=False)


_CACHE_SIZE = 32
_cache: OrderedDict[bytes, CholeskySolver] = OrderedDict()
_cache_lock = threading.Lock()


def cholesky_cached_solve(G, b):
    """Solve the SPD system ``G v = b``, reusing the factorization of ``G``.

    Factorizations are kept in a small LRU keyed by a digest of ``G``.

    Raises
    ------
    numpy.linalg.LinAlgError
        If ``G`` is not positive definite.
    """
    G = as_matrix(G, "G")
    key = hashlib.sha1(G.tobytes()).digest() + struct.pack("<QQ", *G.shape)
    with _cache_lock:
        solver = _cache.get(key)
        if solver is not None:
            _cache.move_to_end(key)
    if solver is None:
        solver = CholeskySolver(G)
        with _cache_lock:
            _cache[key] = solver
            while len(_cache) > _CACHE_SIZE:
                _cache.popitem(last=False)
    return solver.solve(np.asarray(b, dtype=np.float64))


def relative_error(x_hat, x):
    """``||x_hat - x|| / ||x||`` (Frobenius norm for 2-D inputs)."""
    x_hat = np.asarray(x_hat, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x_hat.shape != x.shape:
        raise ValueError(f"shape mismatch: {x_hat.shape} vs {x.shape}")
    denom = np.linalg.norm(x)
    if denom == 0:
        raise ZeroDivisionError("relative error undefined for a zero reference")
    return float(np.linalg.norm(x_hat - x) / denom)


def write_matrix(path, a):
    """Write a real matrix (or vector, as a column) in GERFMAT1 layout."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError("only 1-D and 2-D arrays can be written")
    rows, cols = arr.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQ", rows, cols))
        fh.write(np.ascontiguousarray(arr).astype("<f8").tobytes())


def read_matrix(path):
    """Read a GERFMAT1 file; column vectors come back 1-D."""
    data = Path(path).read_bytes()
    if len(data) < 24 or data[:8] != MAGIC:
        raise ValueError(f"{path}: not a GERFMAT1 file")
    rows, cols = struct.unpack("<QQ", data[8:24])
    body = data[24:]
    if len(body) != 8 * rows * cols:
        raise ValueError(
            f"{path}: expected {rows}x{cols} values, found {len(body) // 8}"
        )
    arr = np.frombuffer(body, dtype="<f8").astype(np.float64).reshape(rows, cols)
    if cols == 1:
        arr = arr[:, 0]
    return arr.copy()
