import numpy as np
import pytest

from qbdr import (AsymptoticsUndefinedError, assemble_generator,
                  oracle_stationary, random_blocks, rate_matrices,
                  stationary_rmatrix, stationary_unrestricted)
from qbdr.stationary import boundary_matrix
from conftest import mapph_example, scalar_blocks


def test_scalar_geometric(scalar_pr):
    dist = stationary_rmatrix(scalar_pr)
    np.testing.assert_allclose(dist.stacked(), [4 / 7, 2 / 7, 1 / 7],
                               atol=1e-13)


@pytest.mark.parametrize("seed", range(8))
def test_defining_residual(seed):
    blocks = random_blocks(1 + seed % 4, 2 + seed, np.random.default_rng(seed))
    dist = stationary_rmatrix(blocks)
    q = assemble_generator(blocks)
    pi = dist.stacked()
    assert np.max(np.abs(pi @ q)) <= 1e-10
    assert pi.sum() == pytest.approx(1.0, abs=1e-12)
    assert pi.min() >= 0.0


def test_matches_oracle_on_mapph():
    blocks = mapph_example(C=5)
    dist = stationary_rmatrix(blocks)
    pi_oracle = oracle_stationary(assemble_generator(blocks))
    np.testing.assert_allclose(dist.stacked(), pi_oracle, atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_boundary_system_rank(seed):
    blocks = random_blocks(2, 4, np.random.default_rng(seed))
    r, rhat = rate_matrices(blocks)
    system = boundary_matrix(blocks, r, rhat)
    sing = np.linalg.svd(system, compute_uv=False)
    null_count = np.count_nonzero(sing <= 4 * 2 * np.finfo(float).eps
                                  * sing[0] * 100)
    assert null_count == 1


def test_geometric_structure(scalar_pr):
    dist = stationary_rmatrix(scalar_pr)
    r, rhat = rate_matrices(scalar_pr)
    for k in range(3):
        expected = (dist.v0 @ np.linalg.matrix_power(r, k)
                    + dist.vC @ np.linalg.matrix_power(rhat, 2 - k))
        np.testing.assert_allclose(dist.pi[k], expected, atol=1e-14)


def test_null_recurrent_rejected():
    with pytest.raises(AsymptoticsUndefinedError):
        stationary_rmatrix(scalar_blocks(1.0, 1.0, 3))


def test_unrestricted_geometric(scalar_pr):
    rows = stationary_unrestricted(scalar_pr, 6)
    expected = [0.5 ** (k + 1) for k in range(7)]
    np.testing.assert_allclose([r[0] for r in rows], expected, atol=1e-13)


def test_unrestricted_matches_large_capacity():
    blocks = mapph_example(C=5, swapped=True)  # positive recurrent
    big = mapph_example(C=60, swapped=True)
    rows = stationary_unrestricted(blocks, 4)
    dist = stationary_rmatrix(big)
    for k in range(5):
        np.testing.assert_allclose(rows[k], dist.pi[k], atol=1e-9)
