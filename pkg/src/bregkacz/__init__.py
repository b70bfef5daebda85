"""Randomized block Bregman-Kaczmarz solvers with acceleration and restarts.

The solvers find the f-minimal solution of a consistent linear system
Ax = b for a 1-strongly convex potential f, touching only one block of
rows per iteration.  Alongside the three methods (plain, accelerated,
restarted accelerated) the package ships the dual-space diagnostics the
convergence theory is phrased in, a synthetic problem generator, and a
benchmark command line.
"""

from .linops import (BlockPartition, InvalidPartitionError, MatrixFileError,
                     PowerIterationError, block_apply, block_apply_transpose,
                     block_lipschitz, partition_rows, read_matrix_market,
                     read_vector, validate_matrix, write_matrix_market,
                     write_vector)
from .potentials import (GroupSparse, Potential, Sparse, SquaredNorm,
                         bregman_distance, soft_shrinkage)
from .problems import (MetricUnavailableError, ProblemInstance,
                       generate_for_potential, generate_gaussian, load_problem,
                       relative_error, relative_residual, save_problem)
from .sampling import BlockSampler, SplitMix64, block_probabilities
from .solvers import (RestartEvent, RestartSchedule, RunConfig, RunResult,
                      SolverState, TraceRecord, arbk_step, bk_step,
                      doubling_period, period_for_zeta, primal_iterate,
                      restart_period_kstar, run, run_arbk, run_bk, run_rarbk,
                      theta_next)
from .theory import (BoundVacuousError, PlCertificate, UndefinedConstantError,
                     acceleration_c0, arbk_rate_bound, bk_rate_factor,
                     bk_sublinear_bound, dual_gradient, dual_objective,
                     duality_gap_identity, l_bar_alpha,
                     min_positive_singular_value, pl_constant_bruteforce,
                     weighted_alpha_norm)

__version__ = "0.1.0"
