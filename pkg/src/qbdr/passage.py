"""Mean first passage times and asymptotic deviation blocks.

Entry (k i, l j) of the deviation matrix equals
pi_(l,j) [ M_pi(l,j) - M_(k,i)(l,j) ] where M holds mean first entrance
times, so the asymptotic deviation blocks reduce to first-passage columns.
For a fixed target state (l, j) the passage-time vectors over all levels
solve a second-order matrix difference equation with level-l rows pinned;
the solution mixes powers of G and Ghat around a particular term mu_k(C)
built from the local kernel H0, with the free vectors fixed by a small
boundary system Z^(j) of dimension 2n, 3n or 4n depending on where the
target sits relative to the boundaries.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, PreconditionError
from .gmatrices import SolverConfig, gmatrices, require_not_null_recurrent
from .linalg import censor_generator, matrix_powers, solve_refined
from .model import Drift, assemble_generator, classify_drift
from .stationary import stationary_rmatrix

__all__ = [
    "PassageColumn",
    "BarredBlocks",
    "barred_blocks",
    "mu_k",
    "mu_all",
    "mu_limit",
    "passage_column",
    "passage_column_unbounded",
    "passage_z_matrix",
    "passage_z_factor",
    "passage_level_set",
    "censored_passage_generator",
    "passage_level_matrices",
    "deviation_block_asymptotic",
    "deviation_matrix_diffeq",
]

_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class PassageColumn:
    """Mean first passage times to state (target_level, target_phase).

    ``m[k][i]`` is the expected entrance time from level k, phase i; the
    target entry is exactly zero.
    """

    target_level: int
    target_phase: int
    m: tuple
    residual: float

    def stacked(self):
        return np.concatenate(self.m)


@dataclass(frozen=True)
class BarredBlocks:
    """Blocks with the target-phase row absorbed.

    Row j of the off-level blocks is zeroed; row j of the local blocks is
    replaced by -e_j (unit absorption rate from the target state).
    """

    A_minus1: np.ndarray
    A1: np.ndarray
    B0: np.ndarray
    A0: np.ndarray
    C0: np.ndarray


def barred_blocks(blocks, j):
    """Blocks with row j replaced as the pinned target-state row."""
    n = blocks.n
    if not 0 <= j < n:
        raise ValueError(f"phase {j} out of range 0..{n - 1}")

    def zero_row(mat):
        out = mat.copy()
        out[j, :] = 0.0
        return out

    def unit_row(mat):
        out = mat.copy()
        out[j, :] = 0.0
        out[j, j] = -1.0
        return out

    return BarredBlocks(
        A_minus1=zero_row(blocks.A_minus1), A1=zero_row(blocks.A1),
        B0=unit_row(blocks.B0), A0=unit_row(blocks.A0),
        C0=unit_row(blocks.C0))


def mu_k(blocks, gmat, k):
    """Particular passage term mu_k(C) = sum G^j H0 1 + sum Ghat^j H0 1."""
    C = blocks.C
    if not 0 <= k <= C:
        raise ValueError(f"level {k} out of range 0..{C}")
    h = gmat.H0 @ np.ones(blocks.n)
    out = np.zeros(blocks.n)
    gpow = np.eye(blocks.n)
    for _ in range(k):
        out = out + gpow @ h
        gpow = gpow @ gmat.G
    ghpow = gmat.Ghat.copy()
    for _ in range(1, C - k + 1):
        out = out + ghpow @ h
        ghpow = ghpow @ gmat.Ghat
    return out


def mu_all(blocks, gmat):
    """All vectors mu_0(C) .. mu_C(C) by forward/backward sweeps."""
    C, n = blocks.C, blocks.n
    h = gmat.H0 @ np.ones(n)
    down = [np.zeros(n)]
    for k in range(1, C + 1):
        down.append(gmat.G @ down[k - 1] + h)
    up = [np.zeros(n)] * (C + 1)
    for k in range(C - 1, -1, -1):
        up[k] = gmat.Ghat @ (up[k + 1] + h)
    return [down[k] + up[k] for k in range(C + 1)]


def mu_limit(blocks, gmat, k):
    """Limit of mu_k(C) as C grows, valid for positive recurrent models:
    sum_{j<k} G^j H0 1 + ((I - Ghat)^{-1} - I) H0 1."""
    n = blocks.n
    h = gmat.H0 @ np.ones(n)
    out = np.linalg.solve(np.eye(n) - gmat.Ghat, gmat.Ghat @ h)
    gpow = np.eye(n)
    for _ in range(k):
        out = out + gpow @ h
        gpow = gpow @ gmat.G
    return out


def passage_level_set(blocks, level):
    """Levels on which the boundary system for a target level lives."""
    C = blocks.C
    if level == 0 or level == C:
        return (0, C)
    if level == C - 1:
        return (0, C - 1, C)
    return (0, level, level + 1, C)


def _modified_generator(blocks, level, j):
    """Full generator with the target-state row pinned to -e^T."""
    q = assemble_generator(blocks)
    idx = level * blocks.n + j
    q[idx, :] = 0.0
    q[idx, idx] = -1.0
    return q, idx


def censored_passage_generator(blocks, level, j):
    """The pinned generator censored onto :func:`passage_level_set`.

    This is the generator factor of the stated Z^(j) matrices; tests use it
    to confirm the factorization.
    """
    n = blocks.n
    q, _ = _modified_generator(blocks, level, j)
    keep = []
    for lv in passage_level_set(blocks, level):
        keep.extend(range(lv * n, (lv + 1) * n))
    return censor_generator(q, keep)


def passage_z_matrix(blocks, level, j, gmat, powers=None):
    """The boundary system matrix Z^(j) for one target state."""
    b = blocks
    C, n = b.C, b.n
    bb = barred_blocks(b, j)
    if powers is None:
        powers = (matrix_powers(gmat.G, C), matrix_powers(gmat.Ghat, C))
    gp, ghp = powers
    g, gh = gmat.G, gmat.Ghat
    zero = np.zeros((n, n))
    if level == 0:
        return np.block([
            [bb.B0 + bb.A1 @ g, (bb.B0 @ gh + bb.A1) @ ghp[C - 1]],
            [(b.A_minus1 + b.C0 @ g) @ gp[C - 1], b.A_minus1 @ gh + b.C0],
        ])
    if level == C:
        return np.block([
            [b.B0 + b.A1 @ g, (b.B0 @ gh + b.A1) @ ghp[C - 1]],
            [(bb.A_minus1 + bb.C0 @ g) @ gp[C - 1], bb.A_minus1 @ gh + bb.C0],
        ])
    if level == C - 1:
        return np.block([
            [b.B0 + b.A1 @ g, (b.B0 @ gh + b.A1) @ ghp[C - 2], zero],
            [(bb.A_minus1 + bb.A0 @ g) @ gp[C - 2], bb.A_minus1 @ gh + bb.A0,
             bb.A1],
            [b.A_minus1 @ gp[C - 1], b.A_minus1, b.C0],
        ])
    return np.block([
        [b.B0 + b.A1 @ g, (b.B0 @ gh + b.A1) @ ghp[level - 1], zero, zero],
        [(bb.A_minus1 + bb.A0 @ g) @ gp[level - 1], bb.A_minus1 @ gh + bb.A0,
         bb.A1, bb.A1 @ ghp[C - level - 1]],
        [b.A_minus1 @ gp[level], b.A_minus1, b.A0 + b.A1 @ g,
         (b.A0 @ gh + b.A1) @ ghp[C - level - 2]],
        [zero, zero, (b.C0 @ g + b.A_minus1) @ gp[C - level - 2],
         b.C0 + b.A_minus1 @ gh],
    ])


def passage_z_factor(blocks, level, gmat):
    """The power-matrix factor linking Z^(j) to the censored generator."""
    C, n = blocks.C, blocks.n
    eye = np.eye(n)
    zero = np.zeros((n, n))
    gp = np.linalg.matrix_power
    g, gh = gmat.G, gmat.Ghat
    if level == 0 or level == C:
        return np.block([[eye, gp(gh, C)], [gp(g, C), eye]])
    if level == C - 1:
        return np.block([
            [eye, gp(gh, C - 1), zero],
            [gp(g, C - 1), eye, zero],
            [zero, zero, eye],
        ])
    return np.block([
        [eye, gp(gh, level), zero, zero],
        [gp(g, level), eye, zero, zero],
        [zero, zero, eye, gp(gh, C - level - 1)],
        [zero, zero, gp(g, C - level - 1), eye],
    ])


def _column_residual(blocks, level, j, stacked):
    q, idx = _modified_generator(blocks, level, j)
    rhs = -np.ones(q.shape[0])
    rhs[idx] = 0.0
    return float(np.max(np.abs(q @ stacked - rhs)))


def _direct_taboo_column(blocks, level, j):
    """Dense pinned-system solve, used for the C <= 2 degenerate sizes."""
    q, idx = _modified_generator(blocks, level, j)
    rhs = -np.ones(q.shape[0])
    rhs[idx] = 0.0
    try:
        m = np.linalg.solve(q, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"taboo passage system singular: {exc}") from exc
    return m


def passage_column(blocks, level, j, gmat=None, config=SolverConfig(),
                   powers=None, mu=None):
    """Mean first passage times from every state to target (level, j).

    Phases are 0-based.  Dispatches on the position of the target level:
    boundary targets need a 2n boundary solve, the level next to the upper
    boundary a 3n solve, and interior targets a 4n solve.  Capacities
    C <= 2 have no interior band and route to a dense pinned solve with the
    same output contract.  ``powers`` (the cached G/Ghat power lists) and
    ``mu`` may be supplied to share work across columns.

    Raises
    ------
    AsymptoticsUndefinedError
        For null-recurrent models (mu_k undefined).
    NumericalError
        If a boundary system is singular.
    """
    C, n = blocks.C, blocks.n
    if not 0 <= level <= C:
        raise ValueError(f"target level {level} out of range 0..{C}")
    if not 0 <= j < n:
        raise ValueError(f"target phase {j} out of range 0..{n - 1}")

    if C <= 2:
        stacked = _direct_taboo_column(blocks, level, j)
        m = [stacked[k * n:(k + 1) * n].copy() for k in range(C + 1)]
        return _finish_column(blocks, level, j, m)

    require_not_null_recurrent(blocks, "mean first passage expansions")
    if gmat is None:
        gmat = gmatrices(blocks, 0.0, config)
    if powers is None:
        powers = (matrix_powers(gmat.G, C), matrix_powers(gmat.Ghat, C))
    gp, ghp = powers
    if mu is None:
        mu = mu_all(blocks, gmat)
    bb = barred_blocks(blocks, j)
    one = np.ones(n)
    ej = np.eye(n)[j]
    z = passage_z_matrix(blocks, level, j, gmat, powers=powers)

    if level == 0:
        rhs = np.concatenate([
            one - ej + bb.B0 @ mu[0] + bb.A1 @ mu[1],
            one + blocks.A_minus1 @ mu[C - 1] + blocks.C0 @ mu[C],
        ])
        v, w = _solve_boundary(z, rhs, n, 2)
        m = [gp[k] @ v + ghp[C - k] @ w + mu[k] for k in range(C + 1)]
    elif level == C:
        rhs = np.concatenate([
            one + blocks.B0 @ mu[0] + blocks.A1 @ mu[1],
            one - ej + bb.A_minus1 @ mu[C - 1] + bb.C0 @ mu[C],
        ])
        v, w = _solve_boundary(z, rhs, n, 2)
        m = [gp[k] @ v + ghp[C - k] @ w + mu[k] for k in range(C + 1)]
    elif level == C - 1:
        rhs = np.concatenate([
            one + blocks.B0 @ mu[0] + blocks.A1 @ mu[1],
            one - ej + bb.A_minus1 @ mu[C - 2] + bb.A0 @ mu[C - 1]
            + bb.A1 @ mu[C],
            one + blocks.A_minus1 @ mu[C - 1] + blocks.C0 @ mu[C],
        ])
        v, w, x = _solve_boundary(z, rhs, n, 3)
        m = [gp[k] @ v + ghp[C - 1 - k] @ w + mu[k] for k in range(C)]
        m.append(x + mu[C])
    else:
        rhs = np.concatenate([
            one + blocks.B0 @ mu[0] + blocks.A1 @ mu[1],
            one - ej + bb.A_minus1 @ mu[level - 1] + bb.A0 @ mu[level]
            + bb.A1 @ mu[level + 1],
            one + blocks.A_minus1 @ mu[level] + blocks.A0 @ mu[level + 1]
            + blocks.A1 @ mu[level + 2],
            one + blocks.A_minus1 @ mu[C - 1] + blocks.C0 @ mu[C],
        ])
        v_lo, w_lo, v_hi, w_hi = _solve_boundary(z, rhs, n, 4)
        m = [gp[k] @ v_lo + ghp[level - k] @ w_lo + mu[k]
             for k in range(level + 1)]
        m += [gp[k - level - 1] @ v_hi + ghp[C - k] @ w_hi + mu[k]
              for k in range(level + 1, C + 1)]
    return _finish_column(blocks, level, j, m)


def _solve_boundary(z, rhs, n, parts):
    try:
        sol = solve_refined(-z, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"passage boundary system singular: {exc}") from exc
    return tuple(sol[i * n:(i + 1) * n] for i in range(parts))


def _finish_column(blocks, level, j, m):
    m[level][j] = 0.0  # entrance time from the target itself
    scale = max(1.0, max(np.max(np.abs(v)) for v in m))
    for v in m:
        v[(v < 0) & (v > -1e-12 * scale)] = 0.0
    stacked = np.concatenate(m)
    res = _column_residual(blocks, level, j, stacked)
    return PassageColumn(target_level=level, target_phase=j,
                         m=tuple(m), residual=res)


def passage_column_unbounded(blocks, level, j, kmax, gmat=None,
                             config=SolverConfig()):
    """Passage times to (level, j) in the upper-unbounded QBD, levels
    0..kmax.

    Only defined for positive recurrent models; the particular term uses
    the limit mu_k(infinity).
    """
    if classify_drift(blocks).tag is not Drift.POSITIVE_RECURRENT:
        raise PreconditionError(
            "unbounded passage times need a positive recurrent model")
    n = blocks.n
    if not 0 <= j < n:
        raise ValueError(f"target phase {j} out of range 0..{n - 1}")
    if gmat is None:
        gmat = gmatrices(blocks, 0.0, config)
    bb = barred_blocks(blocks, j)
    one = np.ones(n)
    ej = np.eye(n)[j]
    mu_inf = [mu_limit(blocks, gmat, k)
              for k in range(max(kmax, level + 2) + 1)]
    g, gh = gmat.G, gmat.Ghat

    if level == 0:
        lead = bb.B0 + bb.A1 @ g
        v = -np.linalg.solve(lead, one - ej + bb.B0 @ mu_inf[0]
                             + bb.A1 @ mu_inf[1])
        m = [np.linalg.matrix_power(g, k) @ v + mu_inf[k]
             for k in range(kmax + 1)]
    else:
        zero = np.zeros((n, n))
        w3 = np.block([
            [blocks.B0 + blocks.A1 @ g,
             (blocks.B0 @ gh + blocks.A1)
             @ np.linalg.matrix_power(gh, level - 1), zero],
            [(bb.A_minus1 + bb.A0 @ g)
             @ np.linalg.matrix_power(g, level - 1),
             bb.A_minus1 @ gh + bb.A0, bb.A1],
            [blocks.A_minus1 @ np.linalg.matrix_power(g, level),
             blocks.A_minus1, blocks.A0 + blocks.A1 @ g],
        ])
        rhs = np.concatenate([
            one + blocks.B0 @ mu_inf[0] + blocks.A1 @ mu_inf[1],
            one - ej + bb.A_minus1 @ mu_inf[level - 1]
            + bb.A0 @ mu_inf[level] + bb.A1 @ mu_inf[level + 1],
            one + blocks.A_minus1 @ mu_inf[level]
            + blocks.A0 @ mu_inf[level + 1] + blocks.A1 @ mu_inf[level + 2],
        ])
        v_lo, w_lo, v_hi = _solve_boundary(w3, rhs, n, 3)
        m = []
        for k in range(kmax + 1):
            if k <= level:
                m.append(np.linalg.matrix_power(g, k) @ v_lo
                         + np.linalg.matrix_power(gh, level - k) @ w_lo
                         + mu_inf[k])
            else:
                m.append(np.linalg.matrix_power(g, k - level - 1) @ v_hi
                         + mu_inf[k])
    if level <= kmax:
        m[level][j] = 0.0
    return tuple(m)


def passage_level_matrices(blocks, level, gmat=None, config=SolverConfig()):
    """All blocks M_{k, level}, k = 0..C, for one target level.

    Column j of M_{k, level} is the passage column for phase j.
    """
    n, C = blocks.n, blocks.C
    powers = mu = None
    if C > 2:
        if gmat is None:
            gmat = gmatrices(blocks, 0.0, config)
        powers = (matrix_powers(gmat.G, C), matrix_powers(gmat.Ghat, C))
        mu = mu_all(blocks, gmat)
    cols = [passage_column(blocks, level, j, gmat, config, powers, mu)
            for j in range(n)]
    mats = []
    for k in range(C + 1):
        mats.append(np.column_stack([cols[j].m[k] for j in range(n)]))
    return mats


def deviation_block_asymptotic(blocks, pi, k, level, level_mats=None,
                               gmat=None, config=SolverConfig()):
    """Asymptotic deviation block D_{k, level} from passage times.

    D_{k,l} = [ 1 (sum_x pi_x M_{x,l}) - M_{k,l} ] diag(pi_l).
    """
    n, C = blocks.n, blocks.C
    if level_mats is None:
        level_mats = passage_level_matrices(blocks, level, gmat, config)
    pi_level = np.asarray(pi[level])
    if np.any((pi_level != 0) & (np.abs(pi_level) < 1e-300)):
        warnings.warn(f"stationary weights at level {level} underflow",
                      RuntimeWarning, stacklevel=2)
    mean_row = np.zeros(n)
    for x in range(C + 1):
        mean_row = mean_row + np.asarray(pi[x]) @ level_mats[x]
    return (np.outer(np.ones(n), mean_row) - level_mats[k]) * pi_level


def deviation_matrix_diffeq(blocks, pi=None, config=SolverConfig()):
    """Full asymptotic deviation matrix assembled from passage columns."""
    n, C = blocks.n, blocks.C
    gmat = gmatrices(blocks, 0.0, config) if C > 2 else None
    if pi is None:
        pi = stationary_rmatrix(blocks, config, gmat=gmat)
    out = np.empty((n * (C + 1), n * (C + 1)))
    for level in range(C + 1):
        mats = passage_level_matrices(blocks, level, gmat, config)
        for k in range(C + 1):
            out[k * n:(k + 1) * n, level * n:(level + 1) * n] = \
                deviation_block_asymptotic(blocks, pi, k, level,
                                           level_mats=mats)
    return out
