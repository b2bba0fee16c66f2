"""Sampled falsifier for the generalized null space property.

The property asks ``J(v_S) < J(v_{S^c})`` for every nonzero kernel vector
``v`` and every support ``|S| <= s``. Sampling kernel directions can only
refute it, never certify it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import as_matrix, make_rng
from ..penalty import phi

__all__ = ["Counterexample", "kernel_basis", "check_gnsp_sampled", "verify_counterexample"]

MAX_N = 16
_BATCH = 4096


@dataclass(frozen=True)
class Counterexample:
    v: np.ndarray
    support: tuple

    def sides(self, p, sigma):
        """``(J(v_S), J(v_{S^c}))``."""
        vals = phi(np.abs(self.v), p, sigma)
        mask = np.zeros(self.v.shape[0], dtype=bool)
        mask[list(self.support)] = True
        return float(vals[mask].sum()), float(vals[~mask].sum())


def kernel_basis(A, rtol=1e-12):
    """Orthonormal basis of ``ker A`` (columns), from the SVD."""
    A = as_matrix(A)
    _, s, vt = np.linalg.svd(A, full_matrices=True)
    tol = rtol * (s[0] if s.size else 0.0) * max(A.shape)
    rank = int(np.sum(s > tol))
    return vt[rank:].T


def verify_counterexample(ce, p, sigma):
    """Re-evaluate the penalties directly; true if the inequality really fails."""
    left, right = ce.sides(p, sigma)
    return left >= right


def check_gnsp_sampled(A, s, p, sigma, n_samples, seed):
    """Search ``n_samples`` random kernel directions for a violated inequality.

    For a fixed direction the hardest support of size ``<= s`` is the set
    of its ``s`` largest-magnitude entries (the penalty is increasing in
    ``|v_j|``), so checking that set covers all supports exhaustively.

    Returns
    -------
    Counterexample or None
        The first violating ``(v, S)`` in sampling order.

    Raises
    ------
    ValueError
        If ``ker A`` is trivial, ``N > 16`` or ``s >= N / 2``.
    """
    A = as_matrix(A)
    n = A.shape[1]
    if n > MAX_N:
        raise ValueError(f"gnsp check is limited to N <= {MAX_N}, got {n}")
    if not 0 <= s < n / 2:
        raise ValueError(f"need 0 <= s < N/2, got s={s}, N={n}")
    basis = kernel_basis(A)
    if basis.shape[1] == 0:
        raise ValueError("ker A is trivial: the null space property is vacuous")
    rng = make_rng(seed)
    done = 0
    while done < n_samples:
        b = min(_BATCH, n_samples - done)
        V = rng.standard_normal((b, basis.shape[1])) @ basis.T
        V /= np.linalg.norm(V, axis=1, keepdims=True)
        vals = phi(np.abs(V), p, sigma)
        order = np.argsort(-np.abs(V), axis=1, kind="stable")
        top = np.take_along_axis(vals, order[:, :s], axis=1).sum(axis=1)
        bad = np.flatnonzero(top >= vals.sum(axis=1) - top)
        if bad.size:
            i = bad[0]
            return Counterexample(V[i].copy(), tuple(sorted(int(j) for j in order[i, :s])))
        done += b
    return None
