"""Preconditioned conjugate gradient for block tridiagonal systems.

The exit test is on the true residual ``||A x_k - b||_2``, recomputed with
an extra product every iteration, and the iteration always starts from
``x_0 = 0``.  ``pcg_solve_batch`` runs independent CG recurrences on the
columns of a right-hand-side matrix; a column stops updating as soon as it
converges, so its iterate and count match a single-vector solve.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_is_fitted

from .blocktri import BlockTridiagMatrix, matvec
from .exceptions import NonPositiveCurvatureError
from .validation import check_block_vector


@dataclass
class PcgConfig:
    tol_abs: float = 1e-6
    max_iter: Optional[int] = None  # None -> 10 * N * n
    record_history: bool = False

    def __post_init__(self):
        if not self.tol_abs > 0:
            raise ValueError("tol_abs must be positive")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def resolve_max_iter(self, A):
        return self.max_iter if self.max_iter is not None else 10 * A.N * A.n


@dataclass
class PcgResult:
    x: np.ndarray
    iterations: int
    converged: bool
    residual_history: Optional[list] = None


@dataclass
class PcgBatchResult:
    """Per-column outcome of :func:`pcg_solve_batch`.

    ``breakdown[j]`` marks columns stopped by ``p^T A p <= 0`` or
    ``r^T M^{-1} r <= 0``; their
    ``x`` is the best iterate seen.
    """

    x: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    breakdown: np.ndarray
    residual_history: Optional[list] = field(default=None)


def _identity(r):
    return r.copy()


def pcg_solve_batch(A, B, precond=None, cfg=None):
    """Solve ``A X = B`` column by column with PCG.

    Parameters
    ----------
    A : BlockTridiagMatrix
    B : ndarray, shape (N*n,) or (N*n, k)
    precond : callable or None
        Applies an s.p.d. operator to a matrix of column vectors.
        ``None`` runs plain CG.
    cfg : PcgConfig, optional
    """
    cfg = cfg or PcgConfig()
    apply_M = _identity if precond is None else precond
    Bv, shape = check_block_vector(B, A.N, A.n)
    B2 = Bv.reshape(A.N * A.n, -1)
    k = B2.shape[1]
    max_iter = cfg.resolve_max_iter(A)

    X = np.zeros_like(B2)
    R = B2.copy()
    res = np.linalg.norm(B2, axis=0)
    best_X = X.copy()
    best_res = res.copy()
    iterations = np.zeros(k, dtype=np.int64)
    converged = res < cfg.tol_abs
    breakdown = np.zeros(k, dtype=bool)
    history = [[float(r)] for r in res] if cfg.record_history else None

    active = np.flatnonzero(~converged)
    P = np.zeros_like(B2)
    rz = np.zeros(k)
    if active.size:
        Z = apply_M(R[:, active])
        P[:, active] = Z
        rz[active] = np.einsum("ij,ij->j", R[:, active], Z)
        bad = ~(rz[active] > 0)
        breakdown[active[bad]] = True
        active = active[~bad]

    it = 0
    while active.size and it < max_iter:
        Pa = P[:, active]
        Q = matvec(A, Pa)
        pq = np.einsum("ij,ij->j", Pa, Q)
        bad = ~(pq > 0)
        if bad.any():
            breakdown[active[bad]] = True
            keep = ~bad
            active, Pa, Q, pq = active[keep], Pa[:, keep], Q[:, keep], pq[keep]
            if not active.size:
                break
        alpha = rz[active] / pq
        X[:, active] += alpha * Pa
        R[:, active] -= alpha * Q
        iterations[active] += 1
        it += 1

        true_res = np.linalg.norm(B2[:, active] - matvec(A, X[:, active]), axis=0)
        better = true_res < best_res[active]
        if better.any():
            cols = active[better]
            best_res[cols] = true_res[better]
            best_X[:, cols] = X[:, cols]
        if history is not None:
            for j, r in zip(active, true_res):
                history[j].append(float(r))
        done = true_res < cfg.tol_abs
        converged[active[done]] = True
        active = active[~done]
        if not active.size:
            break

        Z = apply_M(R[:, active])
        rz_new = np.einsum("ij,ij->j", R[:, active], Z)
        # r^T M^{-1} r <= 0 with r != 0: the preconditioner is not p.d.
        bad = ~(rz_new > 0)
        if bad.any():
            breakdown[active[bad]] = True
            keep = ~bad
            active, Z, rz_new = active[keep], Z[:, keep], rz_new[keep]
        beta = rz_new / rz[active]
        rz[active] = rz_new
        P[:, active] = Z + beta * P[:, active]

    # unconverged columns report their best iterate
    out = np.where(converged, X, best_X)
    return PcgBatchResult(
        x=out.reshape(shape),
        iterations=iterations,
        converged=converged,
        breakdown=breakdown,
        residual_history=history,
    )


def pcg_solve(A, b, precond=None, cfg=None):
    """Solve ``A x = b`` with PCG from ``x_0 = 0``.

    Returns a :class:`PcgResult`; ``converged`` is False when ``max_iter``
    is exhausted, in which case ``x`` is the iterate with the smallest true
    residual.

    Raises
    ------
    NonPositiveCurvatureError
        If a search direction has ``p^T A p <= 0`` or a residual has
        ``r^T M^{-1} r <= 0``.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1:
        raise ValueError("pcg_solve takes a single right-hand side; use pcg_solve_batch")
    out = pcg_solve_batch(A, b[:, None], precond, cfg)
    if out.breakdown[0]:
        raise NonPositiveCurvatureError(
            f"non-positive curvature after {int(out.iterations[0])} iterations; matrix or preconditioner is not s.p.d."
        )
    return PcgResult(
        x=out.x[:, 0],
        iterations=int(out.iterations[0]),
        converged=bool(out.converged[0]),
        residual_history=out.residual_history[0] if out.residual_history is not None else None,
    )


class PCGSolver(BaseEstimator):
    """Estimator wrapper: ``fit`` a preconditioner on ``A``, then ``solve``/``predict``.

    Parameters
    ----------
    preconditioner : estimator or None
        Unfitted preconditioner with ``fit(A)`` and ``apply(y)``, e.g.
        :class:`~stairprec.precond.PolyPreconditioner`. It is cloned on fit.
    tol : float, default 1e-6
        Threshold on ``||A x - b||_2``.
    max_iter : int or None
    record_history : bool
    """

    def __init__(self, preconditioner=None, tol=1e-6, max_iter=None, record_history=False):
        self.preconditioner = preconditioner
        self.tol = tol
        self.max_iter = max_iter
        self.record_history = record_history

    def fit(self, A, y=None):
        if not isinstance(A, BlockTridiagMatrix):
            raise TypeError(f"expected a BlockTridiagMatrix, got {type(A).__name__}")
        self.matrix_ = A
        self.preconditioner_ = None if self.preconditioner is None else clone(self.preconditioner).fit(A)
        self.config_ = PcgConfig(self.tol, self.max_iter, self.record_history)
        return self

    def _apply(self):
        return None if self.preconditioner_ is None else self.preconditioner_.apply

    def solve(self, b):
        check_is_fitted(self, "matrix_")
        return pcg_solve(self.matrix_, b, self._apply(), self.config_)

    def predict(self, B):
        """Solutions for each row of ``B``."""
        check_is_fitted(self, "matrix_")
        B = np.asarray(B, dtype=np.float64)
        if B.ndim == 1:
            return self.solve(B).x
        return pcg_solve_batch(self.matrix_, B.T, self._apply(), self.config_).x.T
