import math

import numpy as np
import pytest

from gerf.core import SolverConfig
from gerf.harness.csvio import HEADER, read_metadata, rows_to_csv, write_rows
from gerf.harness.experiments import (
    ExperimentRow,
    ExperimentSpec,
    MatrixSpec,
    make_instance,
    oracle_mse,
    run_mse_study,
    run_phase_transition,
    worker_count,
)
from gerf.harness.generators import (
    gen_gaussian_matrix,
    gen_oversampled_dct,
    gen_sparse_signal,
    mutual_coherence,
)
from gerf.harness.gnsp import Counterexample, check_gnsp_sampled, kernel_basis, verify_counterexample
from gerf.penalty import PenaltySpec, phi


def test_gaussian_matrix():
    A = gen_gaussian_matrix(64, 256, 1)
    assert A.shape == (64, 256)
    assert np.array_equal(A, gen_gaussian_matrix(64, 256, 1))
    assert not np.array_equal(A, gen_gaussian_matrix(64, 256, 2))
    col = gen_gaussian_matrix(10_000, 1, 3)[:, 0]
    assert 0.94 <= col.var(ddof=1) <= 1.06
    assert abs(col.mean()) <= 5 / 100
    with pytest.raises(ValueError):
        gen_gaussian_matrix(0, 3, 1)


def test_oversampled_dct():
    for F in (5, 10):
        A = gen_oversampled_dct(64, 1024, F, 4)
        assert A.shape == (64, 1024)
        assert np.allclose(A[:, 0], 1 / 8)
    assert mutual_coherence(gen_oversampled_dct(64, 1024, 10, 4)) > mutual_coherence(gen_oversampled_dct(64, 1024, 5, 4))
    assert np.array_equal(gen_oversampled_dct(8, 16, 5, 1), gen_oversampled_dct(8, 16, 5, 1))


def test_sparse_signal():
    assert not gen_sparse_signal(10, 0, 1).any()
    assert np.count_nonzero(gen_sparse_signal(10, 10, 1)) == 10
    assert np.count_nonzero(gen_sparse_signal(256, 8, 1)) == 8
    with pytest.raises(ValueError):
        gen_sparse_signal(4, 5, 1)


def test_support_is_uniform():
    counts = np.zeros(256)
    draws = 10_000
    for t in range(draws):
        counts[gen_sparse_signal(256, 8, 0, t) != 0] += 1
    p = 8 / 256
    sd = math.sqrt(draws * p * (1 - p))
    assert np.all(np.abs(counts - draws * p) <= 5 * sd)


def test_oracle_mse_examples(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((10, 4)))
    assert oracle_mse(Q, [0, 1, 2], 0.3) == pytest.approx(0.09 * 3, rel=1e-12)
    A = np.zeros((5, 2))
    A[:, 0] = 2.0
    assert oracle_mse(A, [0], 0.1) == pytest.approx(0.01 / 20, rel=1e-12)
    for _ in range(20):
        A = rng.standard_normal((10, 6))
        S = rng.choice(6, 3, replace=False)
        ref = 0.1**2 * np.trace(np.linalg.inv(A[:, S].T @ A[:, S]))
        assert oracle_mse(A, S, 0.1) == pytest.approx(ref, rel=1e-12)
    B = np.ones((5, 3))
    with pytest.raises(np.linalg.LinAlgError):
        oracle_mse(B, [0, 1], 0.1)


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec("PhaseTransition", trials=0)
    with pytest.raises(ValueError):
        ExperimentSpec("PhaseTransition", sparsity_grid=(4, 2))
    with pytest.raises(ValueError):
        ExperimentSpec("Nope")
    with pytest.raises(ValueError):
        MatrixSpec("sparse")


def test_instances_are_common_across_methods():
    a = make_instance(MatrixSpec(), 6, 3, 2)
    b = make_instance(MatrixSpec(), 6, 3, 2)
    assert np.array_equal(a.A, b.A) and np.array_equal(a.truth, b.truth)
    assert np.count_nonzero(a.truth) == 6


def small_phase_spec(seed=7):
    return ExperimentSpec(
        "PhaseTransition",
        MatrixSpec("gaussian", 16, 32),
        (1, 3, 9),
        4,
        SolverConfig(outer_max=4),
        (PenaltySpec.gerf(2, 0.5), PenaltySpec.l1(), PenaltySpec.tl1(1.0)),
        seed,
    )


def test_phase_rows_and_reproducibility(monkeypatch):
    monkeypatch.setenv("GERF_THREADS", "1")
    rows = run_phase_transition(small_phase_spec())
    assert len(rows) == 9
    assert all(0 <= r.value <= 1 and r.n_trials == 4 for r in rows)
    body = rows_to_csv(rows)
    assert body == rows_to_csv(run_phase_transition(small_phase_spec()))
    monkeypatch.setenv("GERF_THREADS", "2")
    assert body == rows_to_csv(run_phase_transition(small_phase_spec()))


def test_worker_count(monkeypatch):
    monkeypatch.setenv("GERF_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("GERF_THREADS", "x")
    with pytest.raises(ValueError):
        worker_count()
    monkeypatch.delenv("GERF_THREADS")
    assert worker_count() >= 1


def test_mse_noise_free_sanity(monkeypatch):
    monkeypatch.setenv("GERF_THREADS", "1")
    spec = ExperimentSpec("MseStudy", MatrixSpec("gaussian", 60, 80), (5,), 2, SolverConfig(lam=1e-5),
                          (PenaltySpec.gerf(1, 1),), 0, noise_sd=0.0, m_grid=(60,))
    rows = {r.method: r.value for r in run_mse_study(spec)}
    assert rows["gerf:p=1,sigma=1"] <= 1e-6
    assert rows["oracle"] == 0.0


def test_csv_format(tmp_path):
    rows = [ExperimentRow("gerf:p=2,sigma=0.5", 2.0, 0.5, 14, 0.1, 50, 7), ExperimentRow("lasso", math.nan, math.nan, 2, 1.0, 50, 7)]
    text = rows_to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == HEADER
    assert lines[1] == '"gerf:p=2,sigma=0.5",2,0.5,14,0.10000000000000001,50,7'
    assert lines[2] == "lasso,nan,nan,2,1,50,7"
    write_rows(tmp_path / "r.csv", rows, {"lam": 1e-5, "seed": 7})
    assert (tmp_path / "r.csv").read_text() == text
    assert read_metadata(tmp_path / "r.csv.meta") == {"lam": "1.0000000000000001e-05", "seed": "7"}


def test_gnsp_empty_support_never_violates():
    A = np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
    assert check_gnsp_sampled(A, 0, 1.0, 1.0, 1000, 0) is None


def test_gnsp_equal_halves():
    with pytest.raises(ValueError):
        check_gnsp_sampled(np.array([[1.0, 1.0]]), 1, 1.0, 1.0, 100, 0)
    # s < N/2 forbids s = 1 for N = 2; pad with a zero column to make room
    A = np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]])
    ce = check_gnsp_sampled(A, 1, 1.0, 1.0, 100, 0)
    assert ce is not None and verify_counterexample(ce, 1.0, 1.0)
    left, right = ce.sides(1.0, 1.0)
    assert left == pytest.approx(right)


def test_gnsp_no_counterexample():
    k = np.array([1.0, 3.0, 3.0, 3.0]) / math.sqrt(28)
    # rows spanning the orthogonal complement of k
    Q, _ = np.linalg.qr(np.column_stack([k, np.eye(4)[:, :3]]))
    A = Q[:, 1:].T
    basis = kernel_basis(A)
    assert basis.shape[1] == 1
    assert abs(abs(basis[:, 0] @ k) - 1) < 1e-12
    assert check_gnsp_sampled(A, 1, 1.0, 1.0, 100_000, 0) is None


def test_gnsp_domain_errors(rng):
    with pytest.raises(ValueError):
        check_gnsp_sampled(np.eye(3), 1, 1, 1, 10, 0)
    with pytest.raises(ValueError):
        check_gnsp_sampled(rng.standard_normal((3, 20)), 1, 1, 1, 10, 0)


def test_gnsp_reports_reverify(rng):
    for seed in range(5):
        A = rng.standard_normal((3, 8))
        for s in (1, 2, 3):
            ce = check_gnsp_sampled(A, s, 1.0, 1.0, 20_000, seed)
            if ce is not None:
                assert verify_counterexample(ce, 1.0, 1.0)
                assert np.allclose(A @ ce.v, 0, atol=1e-10)
                assert len(ce.support) == s


def test_counterexample_sides():
    ce = Counterexample(np.array([0.5, -0.5]), (0,))
    assert ce.sides(2.0, 1.0) == (pytest.approx(phi(0.5, 2.0, 1.0)), pytest.approx(phi(0.5, 2.0, 1.0)))
