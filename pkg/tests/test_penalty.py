import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from gerf.penalty import (
    PenaltySpec,
    dc_gradient,
    irl1_weight,
    limit_diagnostics,
    lower_gamma,
    penalty_value,
    phi,
    phi_sup,
)

shapes = st.sampled_from([0.3, 0.5, 1.0, 1.5, 2.0, 3.0])
scales = st.sampled_from([0.1, 0.5, 1.0, 2.0, 10.0])


def quad_phi(x, p, sigma):
    val, _ = integrate.quad(lambda t: math.exp(-((t / sigma) ** p)), 0.0, x, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def test_lower_gamma_against_scipy(rng):
    for a in (0.05, 0.5, 1.0, 2.5, 10.0, 50.0):
        x = np.concatenate([[0.0], rng.uniform(0, 3 * a + 5, 200)])
        ref = special.gammainc(a, x) * special.gamma(a)
        assert np.allclose(lower_gamma(a, x), ref, rtol=5e-14, atol=1e-300)


def test_lower_gamma_domain():
    with pytest.raises(ValueError):
        lower_gamma(0.0, 1.0)
    with pytest.raises(ValueError):
        lower_gamma(1.0, -1.0)


def test_phi_examples():
    assert phi(0.0, 2.0, 0.7) == 0.0
    assert phi(1.0, 1.0, 1.0) == pytest.approx(1 - math.exp(-1), abs=1e-15)
    assert phi(20.0, 2.0, 1.0) == pytest.approx(math.sqrt(math.pi) / 2, abs=1e-14)
    assert phi(20.0, 2.0, 1.0) == pytest.approx(quad_phi(20.0, 2.0, 1.0), abs=1e-12)


def test_phi_matches_quadrature(rng):
    for _ in range(200):
        p = rng.choice([0.2, 0.5, 0.9, 1.0, 1.7, 2.0, 4.0])
        sigma = rng.choice([0.1, 1.0, 3.0])
        x = rng.uniform(0, 5)
        assert phi(x, p, sigma) == pytest.approx(quad_phi(x, p, sigma), abs=1e-12)


def test_phi_domain_errors():
    for p, s in ((0.0, 1.0), (-1.0, 1.0), (1.0, 0.0)):
        with pytest.raises(ValueError):
            phi(1.0, p, s)
    with pytest.raises(ValueError):
        phi(-1.0, 1.0, 1.0)


@given(shapes, scales, st.floats(0, 50), st.floats(0, 50))
def test_phi_monotone_and_bounded(p, sigma, a, b):
    lo, hi = sorted((a, b))
    assert phi(lo, p, sigma) <= phi(hi, p, sigma)
    assert phi(hi, p, sigma) <= phi_sup(p, sigma) * (1 + 1e-14)


def test_concavity_randomized(rng):
    for _ in range(1000):
        p = rng.uniform(0.1, 4.0)
        sigma = rng.uniform(0.05, 5.0)
        a, b = np.sort(rng.uniform(0, 10, 2))
        t = rng.uniform(0, 1)
        mid = phi(t * a + (1 - t) * b, p, sigma)
        assert mid >= t * phi(a, p, sigma) + (1 - t) * phi(b, p, sigma) - 1e-10


def test_subadditivity_randomized(rng):
    for _ in range(1000):
        spec = PenaltySpec.gerf(rng.uniform(0.1, 4.0), rng.uniform(0.05, 5.0))
        x = rng.standard_normal(6) * 3
        y = rng.standard_normal(6) * 3
        assert penalty_value(x + y, spec) <= penalty_value(x, spec) + penalty_value(y, spec) + 1e-10
        # disjoint supports: exact additivity
        xd, yd = x.copy(), y.copy()
        xd[3:] = 0
        yd[:3] = 0
        assert penalty_value(xd + yd, spec) == pytest.approx(
            penalty_value(xd, spec) + penalty_value(yd, spec), abs=1e-10
        )


def test_symmetry_randomized(rng):
    for _ in range(1000):
        spec = PenaltySpec.gerf(rng.uniform(0.1, 4.0), rng.uniform(0.05, 5.0))
        x = rng.standard_normal(5) * 2
        flip = np.where(rng.random(5) < 0.5, -1.0, 1.0)
        assert penalty_value(-x, spec) == penalty_value(x, spec)
        assert penalty_value(flip * x, spec) == penalty_value(x, spec)


def test_penalty_value_examples():
    spec = PenaltySpec.gerf(2, 1)
    assert penalty_value(np.zeros(4), spec) == 0.0
    assert penalty_value(np.array([-1.3, 0, 0]), spec) == pytest.approx(phi(1.3, 2, 1))
    assert penalty_value(np.array([1.0, -1.0]), spec) == pytest.approx(2 * quad_phi(1, 2, 1), abs=1e-13)
    assert penalty_value(np.array([1.0, -1.0]), spec) == pytest.approx(1.49364827, abs=1e-8)


def test_baseline_penalties():
    x = np.array([0.5, -2.0, 0.0])
    assert penalty_value(x, PenaltySpec.l1()) == 2.5
    assert penalty_value(x, PenaltySpec.lp(0.5)) == pytest.approx(math.sqrt(0.5) + math.sqrt(2))
    assert penalty_value(x, PenaltySpec.tl1(1.0)) == pytest.approx(2 * 0.5 / 1.5 + 2 * 2 / 3)
    assert np.allclose(irl1_weight(x, PenaltySpec.l1()), 1.0)
    assert irl1_weight(np.array([1.0]), PenaltySpec.tl1(1.0))[0] == pytest.approx(0.5)
    assert irl1_weight(np.array([0.0]), PenaltySpec.lp(0.5, 1e-6))[0] == pytest.approx(0.5 * 1e-6**-0.5)


def test_irl1_weight_examples():
    spec = PenaltySpec.gerf(1, 1)
    assert irl1_weight(np.array([0.0]), spec)[0] == 1.0
    assert irl1_weight(np.array([1.0]), spec)[0] == pytest.approx(math.exp(-1))


@pytest.mark.parametrize("x", [0.1, 0.5, 2.0])
@pytest.mark.parametrize("p,sigma", [(1.0, 1.0), (2.0, 1.0), (0.5, 2.0)])
def test_irl1_weight_is_derivative(x, p, sigma):
    h = 1e-5
    fd = (phi(x + h, p, sigma) - phi(x - h, p, sigma)) / (2 * h)
    assert irl1_weight(np.array([x]), PenaltySpec.gerf(p, sigma))[0] == pytest.approx(fd, abs=1e-6)


@given(shapes, scales, st.floats(0, 20), st.floats(0, 20))
def test_irl1_weight_nonincreasing(p, sigma, a, b):
    spec = PenaltySpec.gerf(p, sigma)
    lo, hi = sorted((a, b))
    wl, wh = irl1_weight(np.array([lo, hi]), spec)
    assert 0 <= wh <= wl <= 1


def test_dc_gradient_examples(rng):
    assert np.array_equal(dc_gradient(np.zeros(3), 2, 1), np.zeros(3))
    assert dc_gradient(np.array([1.0]), 1, 1)[0] == pytest.approx(1 - math.exp(-1))
    x = rng.standard_normal(50) * 3
    assert np.array_equal(dc_gradient(-x, 1.5, 0.7), -dc_gradient(x, 1.5, 0.7))
    g = dc_gradient(x, 1.5, 0.7)
    assert np.all((np.abs(g) >= 0) & (np.abs(g) < 1))


def test_dc_split_reconstructs_penalty(rng):
    # J = ||x||_1 - h(x) with grad h = dc_gradient; check h numerically
    x = rng.standard_normal(4)
    p, sigma = 2.0, 0.8
    spec = PenaltySpec.gerf(p, sigma)
    h = lambda z: np.abs(z).sum() - penalty_value(z, spec)
    eps = 1e-6
    fd = np.array([(h(x + eps * e) - h(x - eps * e)) / (2 * eps) for e in np.eye(4)])
    assert np.allclose(fd, dc_gradient(x, p, sigma), atol=1e-7)


def test_limit_large_sigma():
    d = limit_diagnostics(np.array([1.0, -2.0, 3.0]), 2, 1e4)
    assert 0.9999 <= d["l1_ratio"] <= 1.0


def test_limit_small_sigma():
    d = limit_diagnostics(np.array([1.0, -2.0, 3.0]), 2, 1e-4)
    assert 0.9999 <= d["l0_ratio"] <= 1.0001


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0])
def test_limit_diagnostics_both_ends(p):
    x = np.array([0.3, -1.0, 4.0, 0.0])
    # the l1 gap decays like (|x|/sigma)^p, slowly for small p
    ratios = [limit_diagnostics(x, p, s)["l1_ratio"] for s in (1e2, 1e4, 1e8)]
    assert ratios[0] < ratios[1] < ratios[2] <= 1.0
    assert ratios[2] == pytest.approx(1.0, abs=1e-3)
    assert limit_diagnostics(x, p, 1e-4)["l0_ratio"] == pytest.approx(1.0, abs=1e-4)


def test_small_shape_limit_is_l1_over_e():
    # as p -> 0 the integrand exp(-t^p) tends to exp(-1) for t > 0, so J -> ||x||_1 / e
    x = np.array([1.0, -2.0, 3.0])
    d = limit_diagnostics(x, 1e-3, 1.0)
    ref = sum(quad_phi(abs(v), 1e-3, 1.0) for v in x) / 6.0
    assert d["l1_ratio"] == pytest.approx(ref, rel=1e-8)
    assert d["l1_ratio"] == pytest.approx(math.exp(-1), abs=1e-2)


def test_limit_diagnostics_zero_vector():
    with pytest.raises(ValueError):
        limit_diagnostics(np.zeros(3), 1, 1)


def alzer_bounds(x, p):
    g = math.gamma(1 + 1 / p)
    if p < 1:
        a, b = 1.0, g ** (-p)
    else:
        a, b = g ** (-p), 1.0
    return (1 - math.exp(-b * x**p)) ** (1 / p), (1 - math.exp(-a * x**p)) ** (1 / p)


@pytest.mark.parametrize("p", [0.5, 2.0])
def test_alzer_sandwich(p):
    for x in np.arange(0.1, 5.0001, 0.1):
        lo, hi = alzer_bounds(x, p)
        mid = phi(x, p, 1.0) / math.gamma(1 + 1 / p)
        assert lo < mid < hi


def test_spec_parse_and_labels():
    assert PenaltySpec.parse("gerf:p=2,sigma=0.5") == PenaltySpec.gerf(2, 0.5)
    assert PenaltySpec.parse("lasso") == PenaltySpec.l1()
    assert PenaltySpec.parse("L1").label == "lasso"
    assert PenaltySpec.parse("lp:p=0.5").kind == "lp"
    assert PenaltySpec.parse("tl1:a=2").a == 2.0
    assert PenaltySpec.gerf(2, 0.5).label == "gerf:p=2,sigma=0.5"
    for bad in ("gerf:p=-1", "gerf:q=2", "foo", "lp:p=1.5", "l1:p=1", "gerf:p"):
        with pytest.raises(ValueError):
            PenaltySpec.parse(bad)
