"""Parallel-friendly multi-splitting polynomial preconditioners for s.p.d.
block tridiagonal matrices, with a PCG solver, dense spectral oracles and an
LQR benchmark harness."""

from .blocktri import BlockTridiagMatrix, assemble_dense, matvec, parity_split, read_matrix, write_matrix
from .exceptions import (
    DimensionMismatchError,
    NonPositiveCurvatureError,
    NotPositiveDefiniteError,
    SchurNotSpdError,
)
from .krylov import PcgConfig, PcgResult, PCGSolver, pcg_solve, pcg_solve_batch
from .precond import (
    DIAGONAL_ONLY,
    EQUAL_WEIGHTS,
    OPTIMAL,
    STAIRS_ONLY,
    PolyPreconditioner,
    SpectrumInterval,
    SplittingWeights,
    apply_G,
    apply_H,
    apply_Mm_inv,
    distinct_count,
    f_a,
    predict_spectrum,
)
from .splitting import BlockFactorization, SplittingKind, factorize, solve_B

__version__ = "0.1.0"
