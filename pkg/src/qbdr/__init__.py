"""Rewards, deviation matrices and first-passage times of finite QBD
processes.

The model is a level-independent quasi-birth-and-death process on levels
0..C with n phases.  Two independent solution strategies are provided for
the expected-reward function, the (transient and asymptotic) deviation
matrix and mean first passage times: boundary-pinned matrix difference
equations working with n- and 2n-sized objects, and a capacity-ladder
recursion updating full matrices one level at a time.  Dense brute-force
oracles back both.
"""

from .bench import (BenchRecord, last_block_column_diffeq,
                    last_block_column_perturbation, random_blocks, run_bench)
from .errors import (AsymptoticsUndefinedError, IterationLimitError,
                     ModelError, ModelParseError, NumericalError,
                     NumericalRankError, PreconditionError, QbdError,
                     StructuralError, TailConvergenceError, UpdateError)
from .gmatrices import (Algorithm, GMatrices, SolverConfig, g_residual,
                        ghat_residual, gmatrices, h0, rate_matrices, solve_g,
                        solve_ghat)
from .mapph import (MapParams, PhParams, build_blocks, gained_revenue_rewards,
                    lost_revenue_rewards)
from .model import (Drift, DriftClass, QbdBlocks, RewardSpec, Violation,
                    assemble_generator, classify_drift, is_irreducible,
                    load_model, save_model, validate)
from .oracle import (OracleConfig, oracle_deviation, oracle_passage,
                     oracle_reward, oracle_stationary,
                     oracle_transient_deviation)
from .passage import (BarredBlocks, PassageColumn, barred_blocks,
                      deviation_block_asymptotic, deviation_matrix_diffeq,
                      mu_all, mu_k, mu_limit, passage_column,
                      passage_column_unbounded, passage_level_matrices)
from .perturbation import (BlockUpdate, CapacityLadderState, block_update,
                           deviation_recursive, deviation_update, pi_step,
                           resolvent_recursive, t_generator, t_group_inverse)
from .stationary import (StationaryDistribution, stationary_rmatrix,
                         stationary_unrestricted)
from .transform import (BoundaryVectors, InversionConfig, TransformContext,
                        deviation_time, deviation_transform,
                        deviation_transform_block,
                        deviation_transform_unbounded, invert_laplace,
                        nu_k, occupation_matrix, reward_time,
                        reward_transform, reward_transform_unbounded,
                        transform_context, z_matrix)

__version__ = "0.1.0"
