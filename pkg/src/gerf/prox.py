"""Thresholding operators and the proximal operator of the GERF penalty."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .penalty import phi

__all__ = [
    "ProxQuery",
    "ProxConvergenceError",
    "soft_threshold",
    "hard_threshold",
    "prox_gerf",
    "prox_gerf_p1",
    "prox_objective",
    "lambert_w0",
]

_INV_E = math.exp(-1.0)
_TIE_TOL = 1e-12


class ProxConvergenceError(ArithmeticError):
    """Root finding inside the proximal operator ran out of iterations."""


@dataclass(frozen=True)
class ProxQuery:
    x: float
    mu: float
    p: float
    sigma: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not (self.p > 0 and self.sigma > 0):
            raise ValueError("p and sigma must be positive")


def soft_threshold(x, t):
    """``sign(x) * max(|x| - t, 0)``; ``t`` may be a scalar or broadcastable array."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("thresholds must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def hard_threshold(x, t):
    """Keep entries with ``|x| > t`` (strictly), zero the rest."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    return np.where(np.abs(x) > t, x, 0.0)


def lambert_w0(z, tol=1e-12):
    """Principal branch of the Lambert W function on ``[-1/e, inf)``.

    Halley iteration from a branch-point series (near ``-1/e``), ``log1p``
    (moderate ``z``) or asymptotic (large ``z``) starting guess.
    """
    z = float(z)
    if z < -_INV_E:
        # allow rounding noise right at the branch point
        if z < -_INV_E * (1 + 4e-16):
            raise ValueError(f"lambert_w0 is real only for z >= -1/e, got {z}")
        z = -_INV_E
    if z == 0.0:
        return 0.0
    if z == -_INV_E:
        return -1.0
    if z < -0.25:
        q = math.sqrt(2.0 * (math.e * z + 1.0))
        w = -1.0 + q - q * q / 3.0 + 11.0 / 72.0 * q**3
    elif z < 3.0:
        w = math.log1p(z)
        if z > 0:
            w *= 1.0 - math.log1p(w) / (2.0 + w)
    else:
        lz = math.log(z)
        w = lz - math.log(lz)
    for _ in range(64):
        ew = math.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w -= step
        if abs(step) <= tol * (1.0 + abs(w)):
            break
    return w


def prox_objective(u, x, mu, p, sigma):
    """``(u - x)^2 / (2 mu) + phi(|u|)``, the scalar prox objective."""
    u = np.asarray(u, dtype=np.float64)
    return (u - x) ** 2 / (2.0 * mu) + phi(np.abs(u), p, sigma)


def _stationarity(u, ax, mu, p, sigma):
    # mu times the derivative of the objective on u > 0
    return u + mu * math.exp(-((u / sigma) ** p)) - ax


def _stationarity_prime(u, mu, p, sigma):
    t = u / sigma
    return 1.0 - mu * (p / sigma) * t ** (p - 1.0) * math.exp(-(t**p))


def _bisect_then_newton(f, df, lo, hi, f_lo, xtol=1e-15, maxiter=200):
    """Root of ``f`` on ``[lo, hi]`` given a sign change (safeguarded Newton)."""
    u = 0.5 * (lo + hi)
    for _ in range(maxiter):
        fu = f(u)
        if fu == 0.0:
            return u
        if (fu < 0) == (f_lo < 0):
            lo, f_lo = u, fu
        else:
            hi = u
        d = df(u)
        nxt = u - fu / d if d != 0.0 else None
        if nxt is None or not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - u) <= xtol * max(1.0, abs(u)) or hi - lo <= xtol * max(1.0, hi):
            return nxt
        u = nxt
    raise ProxConvergenceError(
        f"prox root finding did not converge on [{lo}, {hi}]"
    )


def _critical_points(ax, mu, p, sigma):
    """Interior zeros of the stationarity map's derivative on ``(0, ax)``.

    The derivative ``1 - mu * w(u)`` has ``w`` decreasing for ``p <= 1`` and
    unimodal (peak at ``(u/sigma)^p = (p-1)/p``) for ``p > 1``, so each
    monotone piece holds at most one zero.
    """

    def dfun(u):
        if u > 0.0:
            return _stationarity_prime(u, mu, p, sigma)
        if p < 1.0:
            return -math.inf
        return 1.0 - mu / sigma if p == 1.0 else 1.0

    pieces = [(0.0, ax)]
    if p > 1.0:
        peak = sigma * ((p - 1.0) / p) ** (1.0 / p)
        if peak < ax:
            pieces = [(0.0, peak), (peak, ax)]
    crit = []
    for lo, hi in pieces:
        d_lo, d_hi = dfun(lo), dfun(hi)
        if (d_lo < 0) != (d_hi < 0) and d_hi != 0.0:
            crit.append(_plain_bisect(dfun, lo, hi, d_lo))
    return crit


def _plain_bisect(f, lo, hi, f_lo, iters=200):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (f_lo < 0):
            lo, f_lo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _best_candidate(cands, ax, mu, p, sigma):
    vals = prox_objective(np.array(cands), ax, mu, p, sigma)
    best = float(np.min(vals))
    # ties go to the smallest magnitude
    return min(c for c, v in zip(cands, vals) if v <= best + _TIE_TOL)


def prox_gerf(q, mu=None, p=None, sigma=None):
    """Proximal operator of ``mu * phi(|.|)`` at a scalar point.

    Accepts a :class:`ProxQuery` or ``(x, mu, p, sigma)``. Every root of the
    first-order condition ``|x| = u + mu exp(-(u/sigma)^p)`` on ``(0, |x|)``
    is located by splitting the interval into monotone pieces; the roots and
    ``u = 0`` are compared by objective value and the smallest wins.

    Returns
    -------
    float
        A global minimizer, with the sign of ``x`` (or zero).
    """
    if not isinstance(q, ProxQuery):
        q = ProxQuery(float(q), float(mu), float(p), float(sigma))
    x, mu, p, sigma = q.x, q.mu, q.p, q.sigma
    ax = abs(x)
    if ax == 0.0:
        return 0.0
    f = lambda u: _stationarity(u, ax, mu, p, sigma)
    df = lambda u: _stationarity_prime(u, mu, p, sigma)
    knots = [0.0, *_critical_points(ax, mu, p, sigma), ax]
    cands = [0.0]
    f_vals = [mu - ax] + [f(k) for k in knots[1:]]
    for lo, hi, f_lo, f_hi in zip(knots[:-1], knots[1:], f_vals[:-1], f_vals[1:]):
        if hi <= lo:
            continue
        if f_hi == 0.0:
            cands.append(hi)
        elif (f_lo < 0) != (f_hi < 0) and f_lo != 0.0:
            cands.append(_bisect_then_newton(f, df, lo, hi, f_lo))
    u = _best_candidate(cands, ax, mu, p, sigma)
    return math.copysign(u, x) if u else 0.0


def prox_gerf_p1(x, mu, sigma):
    """Closed-form proximal operator of ``mu * phi`` for shape ``p = 1``.

    The nonzero stationary point is ``|x| + sigma * W0(-(mu/sigma) exp(-|x|/sigma))``
    whenever the Lambert-W argument is at least ``-1/e``; it is kept only if
    it beats ``u = 0`` on the objective.
    """
    if not mu > 0 or not sigma > 0:
        raise ValueError("mu and sigma must be positive")
    ax = abs(float(x))
    if ax == 0.0:
        return 0.0
    # log-space argument avoids underflow of exp(-|x|/sigma) for large |x|
    log_mag = math.log(mu / sigma) - ax / sigma
    if log_mag > -1.0 + 1e-15:
        return 0.0
    z = -math.exp(log_mag)
    u = ax + sigma * lambert_w0(z)
    if u <= 0.0:
        return 0.0
    u = _best_candidate([0.0, u], ax, mu, 1.0, sigma)
    return math.copysign(u, x) if u else 0.0
