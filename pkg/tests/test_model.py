import json

import numpy as np
import pytest

from qbdr import (Drift, QbdBlocks, RewardSpec, StructuralError,
                  assemble_generator, classify_drift, is_irreducible,
                  load_model, random_blocks, save_model, validate)
from conftest import mapph_example, scalar_blocks


def test_assemble_scalar_birth_death(scalar_pr):
    expected = np.array([[-1.0, 1.0, 0.0],
                         [2.0, -3.0, 1.0],
                         [0.0, 2.0, -2.0]])
    np.testing.assert_allclose(assemble_generator(scalar_pr), expected)


@pytest.mark.parametrize("seed,n,c", [(0, 1, 3), (1, 2, 4), (2, 3, 6)])
def test_assemble_rows_conservative(seed, n, c):
    blocks = random_blocks(n, c, np.random.default_rng(seed))
    q = assemble_generator(blocks)
    np.testing.assert_allclose(q.sum(axis=1), 0.0, atol=1e-12)


def test_assemble_mapph_order_and_sparsity():
    blocks = mapph_example(C=5)
    q = assemble_generator(blocks)
    assert q.shape == (24, 24)
    n = blocks.n
    for k in range(6):
        for l in range(6):
            if abs(k - l) > 1:
                assert not q[k * n:(k + 1) * n, l * n:(l + 1) * n].any()


def test_assemble_rejects_mismatched_blocks():
    bad = QbdBlocks(n=2, C=2, A_minus1=np.eye(2), A0=-np.eye(2),
                    A1=np.eye(3), B0=-np.eye(2), C0=-np.eye(2))
    with pytest.raises(StructuralError):
        assemble_generator(bad)


def test_classify_drift_scalar_cases():
    pr = classify_drift(scalar_blocks(1.0, 2.0, 2))
    assert pr.tag is Drift.POSITIVE_RECURRENT
    assert pr.mean_drift == pytest.approx(-1.0, abs=1e-12)

    tr = classify_drift(scalar_blocks(2.0, 1.0, 2))
    assert tr.tag is Drift.TRANSIENT
    assert tr.mean_drift == pytest.approx(1.0, abs=1e-12)


def test_classify_drift_mapph_high_blocking():
    assert classify_drift(mapph_example()).tag is Drift.TRANSIENT


def test_classify_drift_null_recurrent_band():
    crit = classify_drift(scalar_blocks(1.0, 1.0, 2))
    assert crit.tag is Drift.NULL_RECURRENT


@pytest.mark.parametrize("scale", [0.5, 3.0, 10.0])
def test_classify_drift_time_rescaling(scale):
    blocks = random_blocks(3, 4, np.random.default_rng(11))
    base = classify_drift(blocks)
    scaled = QbdBlocks(n=3, C=4, A_minus1=scale * blocks.A_minus1,
                       A0=scale * blocks.A0, A1=scale * blocks.A1,
                       B0=scale * blocks.B0, C0=scale * blocks.C0)
    rescaled = classify_drift(scaled)
    assert rescaled.tag is base.tag
    assert rescaled.mean_drift == pytest.approx(scale * base.mean_drift,
                                                rel=1e-9)


def test_validate_accepts_valid_model(scalar_pr):
    assert validate(scalar_pr) == []


def test_validate_flags_negative_rate():
    blocks = QbdBlocks(n=1, C=2, A_minus1=[[2.0]], A0=[[-2.9]],
                       A1=[[-0.1]], B0=[[-1.0]], C0=[[-2.0]])
    report = validate(blocks)
    assert any(v.block == "A1" and "negative" in v.kind for v in report)


def test_validate_flags_row_sum_with_magnitude():
    blocks = QbdBlocks(n=1, C=2, A_minus1=[[2.0]], A0=[[-3.0 + 1e-6]],
                       A1=[[1.0]], B0=[[-1.0]], C0=[[-2.0]])
    report = validate(blocks)
    hits = [v for v in report if "row sum" in v.kind]
    assert hits and hits[0].magnitude == pytest.approx(1e-6, rel=1e-3)


def test_validate_empty_implies_assemble_succeeds():
    for seed in range(5):
        blocks = random_blocks(2, 3, np.random.default_rng(seed))
        assert validate(blocks) == []
        assemble_generator(blocks)


def test_is_irreducible(scalar_pr):
    assert is_irreducible(scalar_pr)
    disconnected = QbdBlocks(
        n=2, C=1,
        A_minus1=[[1.0, 0.0], [0.0, 1.0]],
        A0=[[-2.0, 0.0], [0.0, -2.0]],
        A1=[[1.0, 0.0], [0.0, 1.0]],
        B0=[[-1.0, 0.0], [0.0, -1.0]],
        C0=[[-1.0, 0.0], [0.0, -1.0]])
    assert not is_irreducible(disconnected)


def test_blocks_arrays_read_only(scalar_pr):
    with pytest.raises(ValueError):
        scalar_pr.A0[0, 0] = 5.0


def test_model_json_roundtrip(tmp_path, scalar_pr):
    rewards = RewardSpec(g=(np.array([0.5]), np.array([0.0]),
                            np.array([2.0])))
    path = tmp_path / "model.json"
    save_model(path, scalar_pr, rewards)
    blocks, loaded = load_model(path)
    np.testing.assert_allclose(assemble_generator(blocks),
                               assemble_generator(scalar_pr))
    np.testing.assert_allclose(loaded.stacked(), rewards.stacked())
    # reward block is optional
    data = json.loads(path.read_text())
    del data["reward"]
    path.write_text(json.dumps(data))
    _, none_rewards = load_model(path)
    assert none_rewards is None
