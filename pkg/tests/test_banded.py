import numpy as np
import pytest

from nbbtf import (
    NotPositiveDefiniteError,
    RngStream,
    SymBandedMatrix,
    build_difference_operator,
    cholesky_banded,
    sample_mvn_canonical,
)


def random_banded_pd(T, p, seed):
    # diagonal dominance keeps the matrix positive definite
    gen = np.random.default_rng(seed)
    bands = np.zeros((p + 1, T))
    for d in range(1, p + 1):
        bands[d, : T - d] = gen.normal(size=T - d)
    row_sums = np.zeros(T)
    for d in range(1, p + 1):
        row_sums[d:] += np.abs(bands[d, : T - d])
        row_sums[: T - d] += np.abs(bands[d, : T - d])
    bands[0] = row_sums + gen.uniform(0.5, 2.0, size=T)
    return SymBandedMatrix(bands)


# ---------------------------------------------------------------------------
# Difference operator
# ---------------------------------------------------------------------------

def test_second_difference_example():
    op = build_difference_operator(5, 2)
    out = op.apply(np.array([1.0, 2.0, 4.0, 7.0, 11.0]))
    assert np.array_equal(out, np.array([1.0, 2.0, 1.0, 1.0, 1.0]))


def test_first_difference_constant_series():
    op = build_difference_operator(3, 1)
    assert np.array_equal(op.apply(np.array([5.0, 5.0, 5.0])), np.array([5.0, 0.0, 0.0]))


def test_operator_matches_explicit_loops():
    gen = np.random.default_rng(3)
    theta = gen.normal(size=12)
    d1 = np.array([theta[t] - theta[t - 1] for t in range(1, 12)])
    d2 = np.array([theta[t] - 2 * theta[t - 1] + theta[t - 2] for t in range(2, 12)])
    d3 = np.array(
        [theta[t] - 3 * theta[t - 1] + 3 * theta[t - 2] - theta[t - 3] for t in range(3, 12)]
    )
    for D, expected in ((1, d1), (2, d2), (3, d3)):
        out = build_difference_operator(12, D).apply(theta)
        assert np.allclose(out[:D], theta[:D])
        assert np.allclose(out[D:], expected, atol=1e-12)


def test_dense_operator_matches_explicit_matrix():
    op = build_difference_operator(6, 2)
    expected = np.zeros((6, 6))
    expected[0, 0] = expected[1, 1] = 1.0
    for t in range(2, 6):
        expected[t, t] = 1.0
        expected[t, t - 1] = -2.0
        expected[t, t - 2] = 1.0
    assert np.array_equal(op.to_dense(), expected)


@pytest.mark.parametrize("D", [1, 2, 3])
def test_stacked_system_recovers_theta(D):
    gen = np.random.default_rng(10 + D)
    for T in (D + 1, 8, 20):
        theta = gen.normal(size=T)
        op = build_difference_operator(T, D)
        stacked = op.apply(theta)
        recovered = np.linalg.solve(op.to_dense(), stacked)
        assert np.allclose(recovered, theta, atol=1e-10)


def test_weighted_gram_matches_dense():
    gen = np.random.default_rng(0)
    for T, D in ((6, 2), (9, 1), (11, 3)):
        op = build_difference_operator(T, D)
        w = gen.uniform(0.2, 3.0, size=T)
        dense = op.to_dense().T @ np.diag(w) @ op.to_dense()
        bands = op.weighted_gram_bands(w)
        for d in range(D + 1):
            assert np.allclose(bands[d, : T - d], np.diagonal(dense, -d), atol=1e-12)


def test_difference_operator_rejects_bad_sizes():
    with pytest.raises(ValueError):
        build_difference_operator(2, 2)
    with pytest.raises(ValueError):
        build_difference_operator(10, 4)
    with pytest.raises(ValueError):
        build_difference_operator(10, 0)


# ---------------------------------------------------------------------------
# Banded Cholesky
# ---------------------------------------------------------------------------

def test_cholesky_identity():
    q = SymBandedMatrix(np.vstack([np.ones(3), np.zeros(3)]))
    factor = cholesky_banded(q)
    assert np.allclose(factor[0], 1.0)
    assert np.allclose(factor[1, :2], 0.0)


def test_cholesky_tridiagonal_reconstructs():
    bands = np.array([[2.0, 2.0, 2.0], [-1.0, -1.0, 0.0]])
    q = SymBandedMatrix(bands)
    factor = cholesky_banded(q)
    L = np.zeros((3, 3))
    L[np.arange(3), np.arange(3)] = factor[0]
    L[np.arange(1, 3), np.arange(2)] = factor[1, :2]
    assert np.abs(L @ L.T - q.to_dense()).max() < 1e-12


def test_cholesky_flags_non_positive_definite():
    bands = np.array([[-1.0, 2.0, 2.0], [0.0, 0.0, 0.0]])
    with pytest.raises(NotPositiveDefiniteError) as err:
        cholesky_banded(SymBandedMatrix(bands))
    assert err.value.index == 0


def test_cholesky_agrees_with_dense_oracle():
    for seed in range(5):
        for p in (1, 2, 3):
            q = random_banded_pd(8, p, seed)
            factor = cholesky_banded(q)
            dense = np.linalg.cholesky(q.to_dense())
            for d in range(p + 1):
                got = factor[d, : 8 - d]
                want = np.diagonal(dense, -d)
                assert np.abs(got - want).max() <= 1e-10 * np.abs(want).max()


def test_cholesky_rejects_non_finite():
    bands = np.array([[2.0, np.nan, 2.0], [0.0, 0.0, 0.0]])
    with pytest.raises(ValueError):
        cholesky_banded(SymBandedMatrix(bands))


# ---------------------------------------------------------------------------
# Canonical Gaussian sampling
# ---------------------------------------------------------------------------

def test_mvn_identity_mean(rng):
    q = SymBandedMatrix(np.vstack([np.ones(3), np.zeros(3)]))
    draws = sample_mvn_canonical(q, np.array([1.0, 2.0, 3.0]), rng, size=100_000)
    se = draws.std(axis=0, ddof=1) / np.sqrt(draws.shape[0])
    assert np.all(np.abs(draws.mean(axis=0) - [1.0, 2.0, 3.0]) < 3 * se)


def test_mvn_tridiagonal_covariance(rng):
    q = SymBandedMatrix(np.array([[2.0, 2.0, 2.0], [-1.0, -1.0, 0.0]]))
    expected = np.array([[0.75, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 0.75]])
    draws = sample_mvn_canonical(q, np.zeros(3), rng, size=200_000)
    assert np.abs(np.cov(draws.T) - expected).max() < 0.02


def test_mvn_deterministic_given_seed():
    q = SymBandedMatrix(np.array([[2.0, 2.0, 2.0], [-1.0, -1.0, 0.0]]))
    ell = np.array([0.3, -0.1, 1.0])
    a = sample_mvn_canonical(q, ell, RngStream(5, 2))
    b = sample_mvn_canonical(q, ell, RngStream(5, 2))
    assert np.array_equal(a, b)


def test_mvn_matches_dense_oracle_moments(rng):
    n = 200_000
    for seed in range(5):
        T = 4 + seed
        p = 1 + seed % 3
        q = random_banded_pd(T, p, 100 + seed)
        gen = np.random.default_rng(seed)
        ell = gen.normal(size=T)
        dense = q.to_dense()
        cov = np.linalg.inv(dense)
        mean = cov @ ell
        draws = sample_mvn_canonical(q, ell, rng, size=n)
        se_mean = np.sqrt(np.diag(cov) / n)
        assert np.all(np.abs(draws.mean(axis=0) - mean) < 4 * se_mean)
        sample_cov = np.cov(draws.T)
        se_cov = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov**2) / n)
        assert np.all(np.abs(sample_cov - cov) < 4 * se_cov)


def test_mvn_rejects_dimension_mismatch(rng):
    q = SymBandedMatrix(np.vstack([np.ones(3), np.zeros(3)]))
    with pytest.raises(ValueError):
        sample_mvn_canonical(q, np.zeros(4), rng)


def test_mvn_propagates_factorization_failure(rng):
    bands = np.array([[1.0, -3.0, 1.0], [0.0, 0.0, 0.0]])
    with pytest.raises(NotPositiveDefiniteError):
        sample_mvn_canonical(SymBandedMatrix(bands), np.zeros(3), rng)
