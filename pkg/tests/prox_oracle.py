"""Brute-force grid oracle for the scalar GERF prox (shared by unit and acceptance tests)."""

import numpy as np
from scipy import special


def phi_ref(t, p, sigma):
    # independent of gerf.penalty: closed forms where they exist, scipy otherwise
    z = t / sigma
    if p == 1.0:
        return sigma * -np.expm1(-z)
    if p == 2.0:
        return sigma * np.sqrt(np.pi) / 2 * special.erf(z)
    a = 1.0 / p
    return sigma / p * special.gamma(a) * special.gammainc(a, z**p)


def objective_ref(u, x, mu, p, sigma):
    u = np.asarray(u, dtype=np.float64)
    return (u - x) ** 2 / (2 * mu) + phi_ref(np.abs(u), p, sigma)


def grid_gap(u, x, mu, p, sigma, points=100_000):
    """objective(u) - min over the grid {x k / points}; <= 0 means u is at least as good."""
    grid = x * np.arange(points + 1) / points
    return float(objective_ref(u, x, mu, p, sigma) - objective_ref(grid, x, mu, p, sigma).min())


def random_query(rng):
    x = float(rng.uniform(-6, 6))
    mu = float(10 ** rng.uniform(-1.5, 0.7))
    p = float(rng.choice([0.1, 0.3, 0.5, 1.0, 1.5, 2.0, 3.0]) if rng.random() < 0.5 else rng.uniform(0.1, 4))
    sigma = float(10 ** rng.uniform(-1.5, 1.5))
    return x, mu, p, sigma
