"""The generalized-error-function (GERF) penalty family and baseline penalties.

For shape ``p > 0`` and scale ``sigma > 0`` the scalar penalty is

.. math::

    \\Phi_{p,\\sigma}(t) = \\int_0^t e^{-(\\tau/\\sigma)^p} d\\tau
                       = \\frac{\\sigma}{p}\\,\\gamma(1/p, (t/\\sigma)^p),

with :math:`\\gamma` the (unregularized) lower incomplete gamma function,
and the vector penalty is :math:`J_{p,\\sigma}(x) = \\sum_j \\Phi_{p,\\sigma}(|x_j|)`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PenaltySpec",
    "lower_gamma",
    "phi",
    "phi_sup",
    "penalty_value",
    "irl1_weight",
    "dc_gradient",
    "limit_diagnostics",
]

_MAX_TERMS = 2000
_TINY = 1e-300


def _lower_gamma_series(a, x, tol):
    # gamma(a, x) = x^a e^-x sum_n x^n / (a (a+1) ... (a+n)), good for x < a + 1
    term = np.full_like(x, 1.0 / a)
    total = term.copy()
    denom = a
    active = np.ones(x.shape, dtype=bool)
    for _ in range(_MAX_TERMS):
        denom += 1.0
        term = np.where(active, term * x / denom, 0.0)
        total += term
        active &= np.abs(term) > tol * np.abs(total)
        if not active.any():
            break
    else:
        raise ArithmeticError("incomplete gamma series did not converge")
    return np.exp(a * np.log(x) - x) * total


def _upper_gamma_cf(a, x, tol):
    # modified Lentz evaluation of the continued fraction for Gamma(a, x), x >= a + 1
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, _MAX_TERMS):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > tol
        if not active.any():
            break
    else:
        raise ArithmeticError("incomplete gamma continued fraction did not converge")
    return np.exp(a * np.log(x) - x) * h


def lower_gamma(a, x, tol=1e-15):
    """Unregularized lower incomplete gamma :math:`\\gamma(a, x)` for ``a > 0``, ``x >= 0``.

    Uses the power series below ``x = a + 1`` and the Lentz continued
    fraction for the upper function above it.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x < 0):
        raise ValueError("x must be nonnegative")
    out = np.zeros_like(x)
    small = (x > 0) & (x < a + 1.0)
    large = x >= a + 1.0
    if small.any():
        out[small] = _lower_gamma_series(a, x[small], tol)
    if large.any():
        out[large] = math.exp(math.lgamma(a)) - _upper_gamma_cf(a, x[large], tol)
    return out[0] if scalar else out


def _check_shape_scale(p, sigma):
    if not p > 0:
        raise ValueError(f"shape p must be positive, got {p}")
    if not sigma > 0:
        raise ValueError(f"scale sigma must be positive, got {sigma}")


def phi(x, p, sigma):
    """Scalar GERF penalty :math:`\\Phi_{p,\\sigma}` on ``x >= 0`` (vectorized)."""
    _check_shape_scale(p, sigma)
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("phi is defined on nonnegative arguments")
    if p == 1.0:
        return sigma * -np.expm1(-x / sigma)
    return (sigma / p) * lower_gamma(1.0 / p, (x / sigma) ** p)


def phi_sup(p, sigma):
    """Limit of :func:`phi` at infinity, ``sigma * Gamma(1/p) / p``."""
    _check_shape_scale(p, sigma)
    return sigma * math.gamma(1.0 / p) / p


def dc_gradient(x, p, sigma):
    """Gradient of the convex part removed in the DC split of the GERF penalty.

    Componentwise ``sign(x) * (1 - exp(-(|x|/sigma)^p))``.
    """
    _check_shape_scale(p, sigma)
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * -np.expm1(-((np.abs(x) / sigma) ** p))


@dataclass(frozen=True)
class PenaltySpec:
    """One member of the GERF family, or a baseline penalty.

    ``kind`` is one of ``"gerf"``, ``"l1"``, ``"lp"``, ``"tl1"``. The
    meaning of ``p``/``sigma``/``a``/``eps`` depends on the kind.
    """

    kind: str
    p: float = 1.0
    sigma: float = 1.0
    a: float = 1.0
    eps: float = 1e-6

    def __post_init__(self):
        if self.kind == "gerf":
            _check_shape_scale(self.p, self.sigma)
        elif self.kind == "lp":
            if not 0 < self.p < 1:
                raise ValueError("lp penalty needs 0 < p < 1")
            if not self.eps > 0:
                raise ValueError("lp smoothing eps must be positive")
        elif self.kind == "tl1":
            if not self.a > 0:
                raise ValueError("tl1 needs a > 0")
        elif self.kind != "l1":
            raise ValueError(f"unknown penalty kind {self.kind!r}")

    @classmethod
    def gerf(cls, p, sigma):
        return cls("gerf", p=float(p), sigma=float(sigma))

    @classmethod
    def l1(cls):
        return cls("l1")

    @classmethod
    def lp(cls, p=0.5, eps=1e-6):
        return cls("lp", p=float(p), eps=float(eps))

    @classmethod
    def tl1(cls, a=1.0):
        return cls("tl1", a=float(a))

    @classmethod
    def parse(cls, text):
        """Parse ``gerf:p=2,sigma=0.5``, ``lasso``/``l1``, ``lp:p=0.5``, ``tl1:a=1``."""
        name, _, rest = text.strip().partition(":")
        name = name.lower()
        kw = {}
        if rest:
            for item in rest.split(","):
                m = re.fullmatch(r"\s*(\w+)\s*=\s*([^\s]+)\s*", item)
                if not m:
                    raise ValueError(f"bad penalty parameter {item!r} in {text!r}")
                kw[m.group(1)] = float(m.group(2))
        if name in ("lasso", "l1"):
            if kw:
                raise ValueError("l1 penalty takes no parameters")
            return cls.l1()
        if name == "gerf":
            unknown = set(kw) - {"p", "sigma"}
            if unknown:
                raise ValueError(f"unknown gerf parameters {sorted(unknown)}")
            return cls.gerf(kw.get("p", 1.0), kw.get("sigma", 1.0))
        if name == "lp":
            return cls.lp(kw.get("p", 0.5), kw.get("eps", 1e-6))
        if name == "tl1":
            return cls.tl1(kw.get("a", 1.0))
        raise ValueError(f"unknown penalty {name!r}")

    @property
    def label(self):
        if self.kind == "gerf":
            return f"gerf:p={self.p:g},sigma={self.sigma:g}"
        if self.kind == "lp":
            return f"lp:p={self.p:g}"
        if self.kind == "tl1":
            return f"tl1:a={self.a:g}"
        return "lasso"

    @property
    def params(self):
        """The two numeric parameters reported in CSV rows."""
        if self.kind == "gerf":
            return self.p, self.sigma
        if self.kind == "lp":
            return self.p, self.eps
        if self.kind == "tl1":
            return self.a, float("nan")
        return float("nan"), float("nan")


def penalty_value(x, spec):
    """Separable penalty ``sum_j penalty(|x_j|)``."""
    t = np.abs(np.asarray(x, dtype=np.float64))
    if spec.kind == "gerf":
        return float(np.sum(phi(t, spec.p, spec.sigma)))
    if spec.kind == "l1":
        return float(np.sum(t))
    if spec.kind == "lp":
        return float(np.sum(t**spec.p))
    return float(np.sum((spec.a + 1.0) * t / (spec.a + t)))


def irl1_weight(x, spec):
    """Reweighting factor used by IRL1: the penalty derivative at ``|x|``.

    For GERF this is ``exp(-(|x|/sigma)^p)``; the ``lp`` derivative is
    smoothed as ``p (|x| + eps)^(p-1)`` to stay finite at zero.
    """
    t = np.abs(np.asarray(x, dtype=np.float64))
    if spec.kind == "gerf":
        return np.exp(-((t / spec.sigma) ** spec.p))
    if spec.kind == "l1":
        return np.ones_like(t)
    if spec.kind == "lp":
        return spec.p * (t + spec.eps) ** (spec.p - 1.0)
    return spec.a * (spec.a + 1.0) / (spec.a + t) ** 2


def limit_diagnostics(x, p, sigma):
    """Ratios tracking the l1 (large sigma) and scaled-l0 (small sigma) limits.

    Returns ``{"l1_ratio": J / ||x||_1, "l0_ratio": (J / sigma) / (Gamma(1/p)/p * ||x||_0)}``.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.any(x):
        raise ValueError("limit diagnostics need a nonzero vector")
    J = penalty_value(x, PenaltySpec.gerf(p, sigma))
    l1 = float(np.sum(np.abs(x)))
    l0 = int(np.count_nonzero(x))
    # log space: Gamma(1/p) overflows for small p
    log_l0_scale = math.lgamma(1.0 / p) - math.log(p) + math.log(l0)
    return {
        "l1_ratio": J / l1,
        "l0_ratio": math.exp(math.log(J / sigma) - log_l0_scale),
    }
