"""Random instance generators. Every draw is keyed by ``(seed, *keys)``."""

from __future__ import annotations

import numpy as np

from ..core import make_rng

__all__ = ["gen_gaussian_matrix", "gen_oversampled_dct", "gen_sparse_signal", "mutual_coherence"]

# stream ids, so a matrix and a signal drawn from the same seed are independent
MATRIX_STREAM = 0
SIGNAL_STREAM = 1
NOISE_STREAM = 2


def _check_dims(m, n):
    if m < 1 or n < 1:
        raise ValueError(f"matrix dimensions must be positive, got {m}x{n}")


def gen_gaussian_matrix(m, n, seed, *keys):
    """``m x n`` matrix of i.i.d. standard normal entries."""
    _check_dims(m, n)
    return make_rng(seed, MATRIX_STREAM, *keys).standard_normal((m, n))


def gen_oversampled_dct(m, n, F, seed, *keys):
    """Oversampled cosine dictionary with refinement factor ``F``.

    Column ``j`` (0-based) is ``cos(2 pi w j / F) / sqrt(m)`` for a single
    ``w`` drawn uniformly from ``[0, 1]^m``; larger ``F`` gives more coherent
    columns.
    """
    _check_dims(m, n)
    if not F > 0:
        raise ValueError("F must be positive")
    w = make_rng(seed, MATRIX_STREAM, *keys).uniform(0.0, 1.0, size=m)
    j = np.arange(n)
    return np.cos(2.0 * np.pi * np.outer(w, j) / F) / np.sqrt(m)


def gen_sparse_signal(n, k, seed, *keys):
    """Length-``n`` vector with ``k`` standard normal entries on a uniform random support."""
    if not 0 <= k <= n:
        raise ValueError(f"sparsity k={k} outside [0, {n}]")
    rng = make_rng(seed, SIGNAL_STREAM, *keys)
    x = np.zeros(n)
    support = rng.choice(n, size=k, replace=False)
    x[support] = rng.standard_normal(k)
    return x


def mutual_coherence(A):
    """Largest absolute normalized inner product between distinct columns."""
    A = np.asarray(A, dtype=np.float64)
    cols = A / np.linalg.norm(A, axis=0)
    G = np.abs(cols.T @ cols)
    np.fill_diagonal(G, 0.0)
    return float(G.max())
