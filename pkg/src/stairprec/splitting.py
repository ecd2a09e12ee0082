"""Diagonal and stair splittings ``A = B - C`` and their B-solves.

Three splittings share the diagonal blocks of ``A``:

* ``DIAGONAL``: ``B_d = blockdiag(D_1, ..., D_N)``.
* ``STAIR_LEFT``: ``B_l`` keeps the full block rows ``2, 4, ...`` (1-based)
  of ``A`` and only ``D_i`` in rows ``1, 3, ...``.
* ``STAIR_RIGHT``: ``B_r`` keeps the full rows ``1, 3, ...`` and only ``D_i``
  in rows ``2, 4, ...``.

``C = B - A`` is never formed. A stair solve runs in two phases: the
decoupled rows first, then the coupled rows, each phase independent across
block rows.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .blocktri import BlockTridiagMatrix, assemble_dense
from .exceptions import DimensionMismatchError, NotPositiveDefiniteError
from .validation import check_block_vector


class SplittingKind(enum.Enum):
    DIAGONAL = "diagonal"
    STAIR_LEFT = "stair_left"
    STAIR_RIGHT = "stair_right"


# 0-based parity of the block rows that are decoupled (phase 1) in each stair
_DECOUPLED_PARITY = {SplittingKind.STAIR_LEFT: 0, SplittingKind.STAIR_RIGHT: 1}


@dataclass(frozen=True, eq=False)
class BlockFactorization:
    """Per-block Cholesky factors ``D_k = L_k L_k^T`` of a block tridiagonal matrix.

    ``chol_inv`` caches ``L_k^{-1}`` so that every ``D_k^{-1}`` application
    is two batched triangular products.
    """

    chol: np.ndarray
    chol_inv: np.ndarray
    matrix: BlockTridiagMatrix

    @property
    def N(self):
        return self.matrix.N

    @property
    def n(self):
        return self.matrix.n

    def solve_diag(self, Y, rows=slice(None)):
        """Apply ``D_i^{-1}`` to the ``(k, n, c)`` stack ``Y`` for block rows ``rows``."""
        Li = self.chol_inv[rows]
        return Li.transpose(0, 2, 1) @ (Li @ Y)


def factorize(A):
    """Cholesky-factor every diagonal block of ``A``.

    Raises
    ------
    NotPositiveDefiniteError
        If some ``D_k`` is not numerically positive definite; ``.block``
        holds the 1-based index of the first such block.
    """
    try:
        chol = np.linalg.cholesky(A.diag)
    except np.linalg.LinAlgError:
        for k, D in enumerate(A.diag, start=1):
            try:
                np.linalg.cholesky(D)
            except np.linalg.LinAlgError:
                raise NotPositiveDefiniteError(f"diagonal block D_{k} is not positive definite", block=k) from None
        raise
    eye = np.broadcast_to(np.eye(A.n), chol.shape)
    chol_inv = np.linalg.solve(chol, eye)
    # solve() on a triangular matrix leaves round-off above the diagonal
    chol_inv = np.tril(chol_inv)
    return BlockFactorization(chol=chol, chol_inv=chol_inv, matrix=A)


def _couple(A, X, rows, N):
    """Neighbour contribution ``O_{i-1}^T x_{i-1} + O_i x_{i+1}`` for block rows ``rows``."""
    out = np.zeros((len(rows),) + X.shape[1:])
    left = rows >= 1
    if left.any():
        r = rows[left]
        out[left] += A.off[r - 1].transpose(0, 2, 1) @ X[r - 1]
    right = rows <= N - 2
    if right.any():
        r = rows[right]
        out[right] += A.off[r] @ X[r + 1]
    return out


def solve_B(kind, F, y):
    """Return ``x`` with ``B_kind x = y``.

    ``y`` may be a vector or a matrix of column vectors.
    """
    A = F.matrix
    N, n = A.N, A.n
    Y, shape = check_block_vector(y, N, n)
    if kind is SplittingKind.DIAGONAL:
        return F.solve_diag(Y).reshape(shape)
    try:
        first = _DECOUPLED_PARITY[kind]
    except KeyError:
        raise ValueError(f"unknown splitting kind {kind!r}") from None
    X = np.empty_like(Y)
    phase1 = np.arange(first, N, 2)
    phase2 = np.arange(1 - first, N, 2)
    X[phase1] = F.solve_diag(Y[phase1], phase1)
    if phase2.size:
        X[phase2] = F.solve_diag(Y[phase2] - _couple(A, X, phase2, N), phase2)
    return X.reshape(shape)


def apply_B(kind, A, x):
    """Product ``B_kind @ x`` (test and residual support)."""
    N, n = A.N, A.n
    X, shape = check_block_vector(x, N, n)
    Y = A.diag @ X
    if kind is not SplittingKind.DIAGONAL:
        coupled = np.arange(1 - _DECOUPLED_PARITY[kind], N, 2)
        Y[coupled] += _couple(A, X, coupled, N)
    return Y.reshape(shape)


def assemble_B(kind, A):
    """Dense ``B_kind``; ``C_kind`` is ``assemble_B(kind, A) - assemble_dense(A)``."""
    N, n = A.N, A.n
    M = assemble_dense(A)
    keep = np.zeros(N, dtype=bool)
    if kind is not SplittingKind.DIAGONAL:
        keep[1 - _DECOUPLED_PARITY[kind]::2] = True
    B = np.zeros_like(M)
    for i in range(N):
        s = slice(i * n, (i + 1) * n)
        if keep[i]:
            B[s] = M[s]
        else:
            B[s, s] = M[s, s]
    return B


def check_p_regular(kind, A):
    """Dense oracle: is ``A = B - C`` P-regular, i.e. ``sym(B + C)`` p.d.?

    Only meant for desk-scale matrices.
    """
    if A.N * A.n > 400:
        raise DimensionMismatchError("check_p_regular is a dense oracle limited to N*n <= 400")
    B = assemble_B(kind, A)
    C = B - assemble_dense(A)
    S = B + C
    try:
        np.linalg.cholesky(0.5 * (S + S.T))
    except np.linalg.LinAlgError:
        return False
    return True
