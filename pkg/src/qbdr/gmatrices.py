"""Solvers for the quadratic matrix equations of a QBD process.

G(s) is the minimal nonnegative solution of

    A_minus1 + (A0 - sI) X + A1 X^2 = 0,

and Ghat(s) solves the same equation with the roles of A1 and A_minus1
exchanged.  Entry (i, j) of G(s) is the Laplace transform of the first
passage time one level down, restricted to the paths that land in phase j;
Ghat(s) is the analogous one-level-up quantity.  Both are evaluated here
for real s >= 0 and, for the numerical transform inversion, for complex s
with positive real part (the iterations carry over unchanged in complex
arithmetic).

Two algorithms are provided: logarithmic reduction (quadratically
convergent, the default) and plain functional iteration from the zero
matrix (linearly convergent, kept as an independent reference path).
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import AsymptoticsUndefinedError, IterationLimitError
from .model import Drift, classify_drift

__all__ = [
    "Algorithm",
    "SolverConfig",
    "GMatrices",
    "solve_g",
    "solve_ghat",
    "g_residual",
    "ghat_residual",
    "h0",
    "gmatrices",
    "rate_matrices",
]


class Algorithm(enum.Enum):
    FUNCTIONAL_ITERATION = "functional"
    LOGARITHMIC_REDUCTION = "logred"


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rule for the quadratic-equation solvers.

    ``tolerance`` bounds the entrywise max-norm of the defining-equation
    residual at the returned solution.
    """

    tolerance: float = 1e-12
    max_iterations: int = 100_000
    algorithm: Algorithm = Algorithm.LOGARITHMIC_REDUCTION

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class GMatrices:
    """G(s), Ghat(s) and the local kernel H0(s) with solver residuals."""

    s: complex
    G: np.ndarray
    Ghat: np.ndarray
    H0: np.ndarray
    residual_G: float
    residual_Ghat: float


def _check_s(s):
    s = complex(s)
    if s.imag == 0.0:
        if s.real < 0:
            raise ValueError("s must be nonnegative")
        return s.real
    if s.real <= 0:
        raise ValueError("complex s requires a positive real part")
    return s


def g_residual(blocks, s, g):
    """Max-norm residual of A_minus1 + (A0 - sI) G + A1 G^2."""
    shifted = blocks.A0 - s * np.eye(blocks.n)
    return float(np.max(np.abs(blocks.A_minus1 + shifted @ g + blocks.A1 @ g @ g)))


def ghat_residual(blocks, s, ghat):
    """Max-norm residual of A1 + (A0 - sI) Ghat + A_minus1 Ghat^2."""
    shifted = blocks.A0 - s * np.eye(blocks.n)
    return float(np.max(np.abs(
        blocks.A1 + shifted @ ghat + blocks.A_minus1 @ ghat @ ghat)))


def _solve_quadratic(down, local, up, s, config):
    """Minimal solution of down + (local - sI) X + up X^2 = 0."""
    n = local.shape[0]
    is_complex = isinstance(s, complex)
    dtype = complex if is_complex else float
    eye = np.eye(n, dtype=dtype)
    shifted = (s * eye - local).astype(dtype)
    # One-step kernels of the uniformized jump chain: the equation becomes
    # X = b_down + b_up X^2 with b_down + b_up (sub)stochastic.
    b_down = np.linalg.solve(shifted, down.astype(dtype))
    b_up = np.linalg.solve(shifted, up.astype(dtype))

    def residual(x):
        return float(np.max(np.abs(down + (local - s * eye) @ x + up @ x @ x)))

    if config.algorithm is Algorithm.FUNCTIONAL_ITERATION:
        x = np.zeros((n, n), dtype=dtype)
        res = residual(x)
        for _ in range(config.max_iterations):
            if res <= config.tolerance:
                return x, res
            x = b_down + b_up @ (x @ x)
            res = residual(x)
        if res <= config.tolerance:
            return x, res
        raise IterationLimitError(
            f"functional iteration stalled at residual {res:.3e}", residual=res)

    # Logarithmic reduction: each sweep squares the number of jump-chain
    # steps accounted for, so convergence is quadratic away from the
    # null-recurrent boundary and linear (rate 1/2) on it.
    low, high = b_down.copy(), b_up.copy()
    x = b_down.copy()
    trail = b_up.copy()
    x_best, best = x, residual(x)
    stale = 0
    for _ in range(config.max_iterations):
        if best <= config.tolerance:
            return x_best, best
        mix = high @ low + low @ high
        try:
            factor = np.linalg.inv(eye - mix)
        except np.linalg.LinAlgError as exc:
            raise IterationLimitError(
                f"logarithmic reduction broke down at residual {best:.3e}",
                residual=best) from exc
        high = factor @ (high @ high)
        low = factor @ (low @ low)
        x = x + trail @ low
        trail = trail @ high
        res = residual(x)
        if not np.isfinite(res):
            raise IterationLimitError(
                f"logarithmic reduction diverged (last residual {best:.3e})",
                residual=best)
        if res < best:
            x_best, best, stale = x, res, 0
        else:
            stale += 1
            if stale >= 10:
                break
    if best <= config.tolerance:
        return x_best, best
    raise IterationLimitError(
        f"logarithmic reduction stalled at residual {best:.3e}", residual=best)


def solve_g(blocks, s=0.0, config=SolverConfig()):
    """Minimal nonnegative solution G(s); see module docstring."""
    s = _check_s(s)
    g, _ = _solve_quadratic(blocks.A_minus1, blocks.A0, blocks.A1, s, config)
    return g


def solve_ghat(blocks, s=0.0, config=SolverConfig()):
    """Minimal nonnegative solution Ghat(s); roles of A1/A_minus1 swapped."""
    s = _check_s(s)
    g, _ = _solve_quadratic(blocks.A1, blocks.A0, blocks.A_minus1, s, config)
    return g


def h0(blocks, s, g, ghat):
    """Local-time kernel H0(s) = -(A0 - sI + A1 G(s) + A_minus1 Ghat(s))^{-1}.

    For s = 0 this exists only away from null recurrence, where the inner
    matrix turns singular; that case fails fast.
    """
    if s == 0:
        require_not_null_recurrent(blocks, "the s=0 local kernel H0")
    eye = np.eye(blocks.n)
    inner = blocks.A0 - s * eye + blocks.A1 @ g + blocks.A_minus1 @ ghat
    try:
        return -np.linalg.inv(inner)
    except np.linalg.LinAlgError as exc:
        raise AsymptoticsUndefinedError(
            "H0 undefined: local kernel singular (null-recurrent model at s=0)"
        ) from exc


def gmatrices(blocks, s=0.0, config=SolverConfig()):
    """Solve both quadratic equations at s and bundle G, Ghat, H0.

    Raises
    ------
    IterationLimitError
        If either solver fails to reach the residual tolerance.
    AsymptoticsUndefinedError
        If s = 0 and the model is null recurrent (H0 singular).
    """
    s = _check_s(s)
    g, res_g = _solve_quadratic(blocks.A_minus1, blocks.A0, blocks.A1, s, config)
    ghat, res_gh = _solve_quadratic(blocks.A1, blocks.A0, blocks.A_minus1, s, config)
    return GMatrices(s=s, G=g, Ghat=ghat, H0=h0(blocks, s, g, ghat),
                     residual_G=res_g, residual_Ghat=res_gh)


def rate_matrices(blocks, g=None, ghat=None, config=SolverConfig()):
    """Sojourn-rate matrices (R, Rhat) from the s = 0 passage matrices.

    R records the expected sojourn rate one level up per unit of local time
    in the current level, Rhat the same one level down:

        R = A1 (-(A0 + A1 G))^{-1},   Rhat = A_minus1 (-(A0 + A_minus1 Ghat))^{-1}.
    """
    require_not_null_recurrent(blocks, "the sojourn-rate matrices")
    if g is None:
        g = solve_g(blocks, 0.0, config)
    if ghat is None:
        ghat = solve_ghat(blocks, 0.0, config)
    try:
        r = blocks.A1 @ np.linalg.inv(-(blocks.A0 + blocks.A1 @ g))
        rhat = blocks.A_minus1 @ np.linalg.inv(
            -(blocks.A0 + blocks.A_minus1 @ ghat))
    except np.linalg.LinAlgError as exc:
        raise AsymptoticsUndefinedError(
            "rate matrices undefined: inner matrix singular") from exc
    return r, rhat


def require_not_null_recurrent(blocks, what="asymptotic quantities"):
    """Raise :class:`AsymptoticsUndefinedError` for null-recurrent models."""
    if classify_drift(blocks).tag is Drift.NULL_RECURRENT:
        raise AsymptoticsUndefinedError(
            f"{what} undefined for a null-recurrent model")
