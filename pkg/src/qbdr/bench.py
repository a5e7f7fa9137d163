"""Random test models and the two-method timing benchmark.

Both timed tasks compute the last block-column of the asymptotic deviation
matrix, the quantity the two solution strategies share: the
difference-equation route solves first-passage boundary systems for the
top target level, the perturbation route climbs the capacity ladder and
slices the result.
"""

import time
from dataclasses import dataclass

import numpy as np

from .gmatrices import SolverConfig, gmatrices
from .model import QbdBlocks
from .passage import deviation_block_asymptotic, passage_level_matrices
from .perturbation import deviation_recursive
from .stationary import stationary_rmatrix

__all__ = [
    "BenchRecord",
    "random_blocks",
    "last_block_column_diffeq",
    "last_block_column_perturbation",
    "run_bench",
]


@dataclass(frozen=True)
class BenchRecord:
    n: int
    C: int
    method: str
    mean_cpu_seconds: float
    repetitions: int
    seed: int


def random_blocks(n, C, rng, min_drift=0.02):
    """Random ergodic QBD blocks with off-diagonal rates uniform on [0, 1].

    Boundary blocks fold the missing neighbour back into the local block
    (B0 = A0 + A_minus1, C0 = A0 + A1), which keeps every row conservative
    and the chain irreducible.  Draws whose mean drift sits within
    ``min_drift`` of zero are rejected so that the s = 0 asymptotic
    quantities stay well conditioned.
    """
    from .model import classify_drift

    for _ in range(1000):
        a_down = rng.uniform(0.0, 1.0, (n, n))
        a_up = rng.uniform(0.0, 1.0, (n, n))
        a_local = rng.uniform(0.0, 1.0, (n, n))
        np.fill_diagonal(a_local, 0.0)
        rows = a_down.sum(axis=1) + a_local.sum(axis=1) + a_up.sum(axis=1)
        a_local -= np.diag(rows)
        blocks = QbdBlocks(n=n, C=C, A_minus1=a_down, A0=a_local,
                           A1=a_up, B0=a_local + a_down, C0=a_local + a_up)
        if abs(classify_drift(blocks).mean_drift) >= min_drift:
            return blocks
    raise RuntimeError("could not draw a model away from null recurrence")


def last_block_column_diffeq(blocks, config=SolverConfig()):
    """Blocks D_{k,C}, k = 0..C, via the first-passage route."""
    gmat = gmatrices(blocks, 0.0, config) if blocks.C > 2 else None
    pi = stationary_rmatrix(blocks, config, gmat=gmat)
    mats = passage_level_matrices(blocks, blocks.C, gmat, config)
    column = [deviation_block_asymptotic(blocks, pi, k, blocks.C,
                                         level_mats=mats)
              for k in range(blocks.C + 1)]
    return np.vstack(column)


def last_block_column_perturbation(blocks):
    """Blocks D_{k,C}, k = 0..C, by slicing the capacity-ladder result."""
    state = deviation_recursive(blocks)
    n = blocks.n
    return state.dev[:, blocks.C * n:(blocks.C + 1) * n].copy()


_METHODS = {
    "DifferenceEq": last_block_column_diffeq,
    "Perturbation": last_block_column_perturbation,
}


def _time_method(func, blocks, reps, min_span=0.05):
    """Mean CPU seconds per call, warm-up excluded.

    Fast calls are repeated in an inner loop until each timed span clears
    ``min_span``, so the result is meaningful even where the CPU-time
    clock has coarse granularity.
    """
    func(blocks)  # warm-up excluded from the mean
    inner = 1
    while True:
        start = time.process_time()
        for _ in range(inner):
            func(blocks)
        span = time.process_time() - start
        if span >= min_span or inner >= 1 << 16:
            break
        if span <= min_span / 16:  # below clock granularity: grow gently
            inner = min(inner * 8, 1 << 16)
        else:
            inner = min(int(inner * min_span / span) + 1, 1 << 16)
    total = 0.0
    for _ in range(reps):
        start = time.process_time()
        for _ in range(inner):
            func(blocks)
        total += (time.process_time() - start) / inner
    return total / reps


def run_bench(n_values, C_values, reps=3, seed=0):
    """Time both methods on random models over a grid of (n, C).

    One model is drawn per grid point from a stream keyed by
    (seed, n, C), so records are reproducible up to machine timing noise.
    """
    records = []
    for n in n_values:
        for C in C_values:
            rng = np.random.default_rng([seed, n, C])
            blocks = random_blocks(n, C, rng)
            for method, func in _METHODS.items():
                mean = _time_method(func, blocks, reps)
                records.append(BenchRecord(n=n, C=C, method=method,
                                           mean_cpu_seconds=mean,
                                           repetitions=reps, seed=seed))
    return records
