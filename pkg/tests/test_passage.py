import numpy as np
import pytest

from qbdr import (AsymptoticsUndefinedError, PreconditionError,
                  assemble_generator, barred_blocks,
                  deviation_block_asymptotic, deviation_matrix_diffeq,
                  gmatrices, mu_all, mu_k, mu_limit, oracle_deviation,
                  oracle_passage, oracle_stationary, passage_column,
                  passage_column_unbounded, passage_level_matrices,
                  random_blocks, stationary_rmatrix)
from qbdr.passage import (censored_passage_generator, passage_z_factor,
                          passage_z_matrix)
from conftest import scalar_blocks


def test_barred_rows():
    blocks = random_blocks(3, 3, np.random.default_rng(0))
    bb = barred_blocks(blocks, 1)
    assert not bb.A_minus1[1].any() and not bb.A1[1].any()
    np.testing.assert_allclose(bb.A0[1], [0.0, -1.0, 0.0])
    np.testing.assert_allclose(bb.B0[0], blocks.B0[0])
    np.testing.assert_allclose(bb.C0[2], blocks.C0[2])


def test_mu_boundary_single_term():
    blocks = scalar_blocks(1.0, 2.0, 1)
    gm = gmatrices(blocks)
    expected = gm.Ghat @ gm.H0 @ np.ones(1)
    np.testing.assert_allclose(mu_k(blocks, gm, 0), expected, atol=1e-13)


def test_mu_scalar_value(scalar_pr):
    gm = gmatrices(scalar_pr)
    assert mu_k(scalar_pr, gm, 1)[0] == pytest.approx(1.5, abs=1e-12)


def test_mu_sweep_matches_direct():
    blocks = random_blocks(3, 6, np.random.default_rng(1))
    gm = gmatrices(blocks)
    swept = mu_all(blocks, gm)
    for k in range(7):
        np.testing.assert_allclose(mu_k(blocks, gm, k), swept[k], atol=1e-10)


def test_mu_limit_matches_large_capacity(scalar_pr):
    big = scalar_blocks(1.0, 2.0, 200)
    gm_big = gmatrices(big)
    gm = gmatrices(scalar_pr)
    for k in range(6):
        gap = np.max(np.abs(mu_k(big, gm_big, k) - mu_limit(scalar_pr, gm, k)))
        assert gap <= 1e-8


def test_passage_exponential_first_arrival():
    blocks = scalar_blocks(1.0, 2.0, 1)
    col = passage_column(blocks, 1, 0)
    assert col.m[0][0] == pytest.approx(1.0, abs=1e-12)
    assert col.m[1][0] == 0.0
    col0 = passage_column(blocks, 0, 0)
    assert col0.m[1][0] == pytest.approx(0.5, abs=1e-12)
    assert col0.m[0][0] == 0.0


@pytest.mark.parametrize("seed,n,c", [(0, 1, 4), (1, 2, 5), (2, 3, 6),
                                      (3, 2, 3), (4, 2, 8)])
def test_passage_matches_oracle_all_targets(seed, n, c):
    blocks = random_blocks(n, c, np.random.default_rng(seed))
    q = assemble_generator(blocks)
    gm = gmatrices(blocks)
    for level in range(c + 1):
        for j in range(n):
            col = passage_column(blocks, level, j, gm)
            reference = oracle_passage(q, level * n + j)
            assert np.max(np.abs(col.stacked() - reference)) <= 1e-8
            assert col.residual <= 1e-8
            assert col.m[level][j] == 0.0
            assert col.stacked().min() >= 0.0


def test_passage_small_capacity_routes():
    for c in (1, 2):
        blocks = random_blocks(2, c, np.random.default_rng(c))
        q = assemble_generator(blocks)
        for level in range(c + 1):
            col = passage_column(blocks, level, 0)
            np.testing.assert_allclose(col.stacked(),
                                       oracle_passage(q, level * 2),
                                       atol=1e-10)


def test_passage_rejects_null_recurrent():
    with pytest.raises(AsymptoticsUndefinedError):
        passage_column(scalar_blocks(1.0, 1.0, 4), 0, 0)


@pytest.mark.parametrize("seed,n,c", [(0, 2, 5), (1, 3, 4), (2, 2, 7)])
def test_passage_z_factorization(seed, n, c):
    blocks = random_blocks(n, c, np.random.default_rng(seed))
    gm = gmatrices(blocks)
    for level in (0, 1, c - 1, c):
        for j in range(n):
            z = passage_z_matrix(blocks, level, j, gm)
            ring = censored_passage_generator(blocks, level, j)
            factor = passage_z_factor(blocks, level, gm)
            assert np.max(np.abs(z - ring @ factor)) <= 1e-10


def test_passage_unbounded_target_states(scalar_pr):
    col = passage_column_unbounded(scalar_pr, 0, 0, kmax=5)
    assert col[0][0] == 0.0
    col3 = passage_column_unbounded(scalar_pr, 3, 0, kmax=5)
    assert col3[3][0] == 0.0


def test_passage_unbounded_matches_large_capacity(scalar_pr):
    big = scalar_blocks(1.0, 2.0, 200)
    gm_big = gmatrices(big)
    for level in (0, 1, 4):
        unb = passage_column_unbounded(scalar_pr, level, 0, kmax=5)
        fin = passage_column(big, level, 0, gm_big)
        for k in range(6):
            assert np.max(np.abs(unb[k] - fin.m[k])) <= 1e-6


def test_passage_unbounded_needs_positive_recurrence(scalar_tr):
    with pytest.raises(PreconditionError):
        passage_column_unbounded(scalar_tr, 0, 0, kmax=3)


def test_deviation_block_two_state_hand_value(two_state):
    # M_01 = M_10 = 1 at unit rates, pi = (1/2, 1/2):
    # D_01 = (1/2 - 1) * 1/2 = -1/4
    pi = [np.array([0.5]), np.array([0.5])]
    block = deviation_block_asymptotic(two_state, pi, 0, 1)
    assert block[0, 0] == pytest.approx(-0.25, abs=1e-12)


@pytest.mark.parametrize("seed,n,c", [(0, 2, 4), (1, 3, 5), (2, 1, 7)])
def test_deviation_assembly_identities(seed, n, c):
    blocks = random_blocks(n, c, np.random.default_rng(seed))
    q = assemble_generator(blocks)
    pi = stationary_rmatrix(blocks)
    dev = deviation_matrix_diffeq(blocks, pi)
    size = q.shape[0]
    np.testing.assert_allclose(dev @ np.ones(size), 0.0, atol=1e-9)
    np.testing.assert_allclose(q @ dev, np.outer(np.ones(size), pi.stacked())
                               - np.eye(size), atol=1e-9)
    np.testing.assert_allclose(pi.stacked() @ dev, 0.0, atol=1e-9)


@pytest.mark.parametrize("seed", range(4))
def test_deviation_assembly_matches_oracle(seed):
    blocks = random_blocks(1 + seed % 3, 3 + seed, np.random.default_rng(seed))
    q = assemble_generator(blocks)
    dev = deviation_matrix_diffeq(blocks)
    reference = oracle_deviation(q, oracle_stationary(q))
    rel = np.linalg.norm(dev - reference) / np.linalg.norm(reference)
    assert rel <= 1e-8


def test_level_matrices_zero_diagonal():
    blocks = random_blocks(3, 5, np.random.default_rng(9))
    mats = passage_level_matrices(blocks, 2)
    np.testing.assert_allclose(np.diag(mats[2]), 0.0)
