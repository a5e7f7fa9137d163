"""Shared models and dense reference formulas for the test suite."""

import numpy as np
import pytest

from qbdr import MapParams, PhParams, QbdBlocks, build_blocks, random_blocks


def scalar_blocks(lam, mu, C):
    """Birth-death queue with arrival rate lam and service rate mu."""
    return QbdBlocks(n=1, C=C, A_minus1=[[mu]], A0=[[-lam - mu]],
                     A1=[[lam]], B0=[[-lam]], C0=[[-mu]])


@pytest.fixture
def scalar_pr():
    """Positive recurrent scalar model: lam=1, mu=2, C=2."""
    return scalar_blocks(1.0, 2.0, 2)


@pytest.fixture
def scalar_tr():
    """Transient scalar model: lam=2, mu=1, C=2."""
    return scalar_blocks(2.0, 1.0, 2)


@pytest.fixture
def two_state():
    """Symmetric two-state chain as a C=1 QBD with unit rates."""
    return QbdBlocks(n=1, C=1, A_minus1=[[1.0]], A0=[[-2.0]], A1=[[1.0]],
                     B0=[[-1.0]], C0=[[-1.0]])


def mapph_example(C=5, swapped=False):
    """The MAP/PH/1/C example: PH-renewal arrivals, PH services.

    ``swapped=True`` exchanges the arrival and service distributions,
    turning the high-blocking system into a low-blocking one.
    """
    arr_tau = np.array([0.8, 0.2])
    arr_T = np.array([[-10.0, 2.0], [1.0, -6.0]])
    srv_tau = np.array([0.4, 0.6])
    srv_T = np.array([[-3.0, 2.0], [1.0, -4.0]])
    if swapped:
        arr_tau, srv_tau = srv_tau, arr_tau
        arr_T, srv_T = srv_T, arr_T
    d1 = np.outer(-arr_T @ np.ones(2), arr_tau)
    map_params = MapParams(D0=arr_T, D1=d1)
    ph_params = PhParams(tau=srv_tau, T=srv_T)
    return build_blocks(map_params, ph_params, C)


@pytest.fixture
def mapph_high():
    return mapph_example()


@pytest.fixture
def mapph_low():
    return mapph_example(swapped=True)


def seeded_models(count, max_n=4, max_c=20, min_drift=0.05, seed=0):
    """Deterministic list of random ergodic models covering the size grid."""
    out = []
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        n = 1 + i % max_n
        c = 1 + (3 + 7 * i) % max_c
        out.append(random_blocks(n, c, rng, min_drift=min_drift))
    return out


def random_rewards(blocks, seed=0):
    rng = np.random.default_rng([seed, blocks.n, blocks.C])
    from qbdr import RewardSpec
    return RewardSpec(g=tuple(rng.uniform(0.0, 2.0, blocks.n)
                              for _ in range(blocks.C + 1)))


def dense_reward_transform(q, g, s):
    """Resolvent form of the transformed reward: (sI - Q)^{-1} g / s."""
    size = q.shape[0]
    return np.linalg.solve(s * np.eye(size) - q, g / s)


def dense_deviation_transform(q, pi, s):
    """(1/s)(sI - Q)^{-1} - (1/s^2) 1 pi."""
    size = q.shape[0]
    return (np.linalg.inv(s * np.eye(size) - q) / s
            - np.outer(np.ones(size), pi) / s ** 2)
