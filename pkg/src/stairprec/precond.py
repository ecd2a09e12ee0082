"""Parametrized multi-splitting preconditioners and their m-step polynomials.

For weights ``(a, b)`` with ``2a + b = 1`` the multi-splitting operators are

    G_ab = a (B_l^{-1} + B_r^{-1}) + b B_d^{-1}
    H_ab = I - G_ab A

and the m-step preconditioner is the truncated Neumann series

    M_m^{-1} = (I + H_ab + ... + H_ab^{m-1}) G_ab.

Everything is applied matrix-free through the block Cholesky factors.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.sparse.linalg import LinearOperator
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .blocktri import BlockTridiagMatrix, matvec
from .splitting import SplittingKind, factorize, solve_B
from .validation import check_positive_int

WEIGHT_ATOL = 1e-14


@dataclass(frozen=True)
class SplittingWeights:
    """Weights ``a`` (each stair splitting) and ``b`` (diagonal splitting)."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError("weights must be finite")
        if abs(2 * a + b - 1) > WEIGHT_ATOL:
            raise ValueError(f"weights must satisfy 2a + b = 1, got a={a}, b={b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_a(cls, a):
        return cls(a, 1.0 - 2.0 * a)

    @property
    def in_C_plus(self):
        """Nonnegative weights: ``a >= 0`` and ``b >= 0``."""
        return self.a >= 0 and self.b >= 0

    @property
    def in_C_g(self):
        """``a >= 0`` and ``b >= -1``: the region with s.p.d. guarantees."""
        return self.a >= 0 and self.b >= -1


DIAGONAL_ONLY = SplittingWeights(0.0, 1.0)
STAIRS_ONLY = SplittingWeights(0.5, 0.0)
EQUAL_WEIGHTS = SplittingWeights.from_a(1.0 / 3.0)
OPTIMAL = SplittingWeights(1.0, -1.0)


def apply_G(w, F, y):
    """``G_ab y`` using three B-solves (zero-weight terms are skipped)."""
    out = 0.0
    if w.a != 0.0:
        out = w.a * (solve_B(SplittingKind.STAIR_LEFT, F, y) + solve_B(SplittingKind.STAIR_RIGHT, F, y))
    if w.b != 0.0:
        out = out + w.b * solve_B(SplittingKind.DIAGONAL, F, y)
    if np.isscalar(out):
        return np.zeros_like(np.asarray(y, dtype=np.float64))
    return out


def apply_H(w, F, y):
    """``H_ab y = y - G_ab A y``."""
    y = np.asarray(y, dtype=np.float64)
    return y - apply_G(w, F, matvec(F.matrix, y))


def apply_Mm_inv(w, m, F, y):
    """Horner evaluation of ``(I + H + ... + H^{m-1}) G y``.

    Costs ``m`` applications of ``G`` and ``m - 1`` products with ``A``.
    """
    m = check_positive_int(m, "m")
    g = apply_G(w, F, y)
    s = g
    for _ in range(m - 1):
        s = g + s - apply_G(w, F, matvec(F.matrix, s))
    return s


def _sign(sign):
    if sign in ("+", 1):
        return 1.0
    if sign in ("-", -1):
        return -1.0
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def f_a(a, sign, lam):
    """``a*lam +/- (1 - a)*sqrt(lam)``.

    Maps an eigenvalue ``lam`` of ``B_l^{-1} C_l`` to the pair of eigenvalues
    of ``H_ab``. ``lam`` may be an array; it must lie in ``[0, 1]`` (the
    endpoints carry the suprema of the open-interval ranges).
    """
    lam = np.asarray(lam, dtype=np.float64)
    if np.any((lam < 0) | (lam > 1)) or not np.all(np.isfinite(lam)):
        raise ValueError("lam must lie in [0, 1]")
    out = a * lam + _sign(sign) * (1.0 - a) * np.sqrt(lam)
    return float(out) if out.ndim == 0 else out


class Extrema(NamedTuple):
    argmax: float
    max: float
    max_reachable: bool
    argmin: float
    min: float
    min_reachable: bool


def f_minus_extrema(a):
    """Closed-form extreme points of ``f_{a-}`` over ``lam in (0, 1)`` for ``a in [-1, 1]``.

    Unreachable extrema sit at an endpoint and are suprema/infima only.
    For ``a <= 1/3`` the function is decreasing on the whole interval.
    """
    if not -1.0 <= a <= 1.0:
        raise ValueError("closed form only holds for a in [-1, 1]")
    if a <= 1.0 / 3.0:
        return Extrema(0.0, 0.0, False, 1.0, 2 * a - 1, False)
    lam_star = (1 - a) ** 2 / (4 * a * a)
    fmin = -((1 - a) ** 2) / (4 * a)
    inside = 0.0 < lam_star < 1.0
    if a <= 0.5:
        return Extrema(0.0, 0.0, False, lam_star, fmin, inside)
    return Extrema(1.0, 2 * a - 1, False, lam_star, fmin, inside)


@dataclass(frozen=True)
class SpectrumInterval:
    lo: float
    hi: float
    lo_open: bool = True
    hi_open: bool = True

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval: lo={self.lo} > hi={self.hi}")

    def contains(self, values, slack=0.0):
        """True if every value lies in the interval widened by ``slack``.

        With ``slack > 0`` open ends are treated as closed.
        """
        v = np.asarray(values, dtype=np.float64)
        if slack > 0:
            return bool(np.all((v >= self.lo - slack) & (v <= self.hi + slack)))
        lo_ok = v > self.lo if self.lo_open else v >= self.lo
        hi_ok = v < self.hi if self.hi_open else v <= self.hi
        return bool(np.all(lo_ok & hi_ok))

    def to_dict(self):
        return {"lo": self.lo, "hi": self.hi, "lo_open": self.lo_open, "hi_open": self.hi_open}


def predict_spectrum(a, lambda_max):
    """Worst-case ``rho(H_ab)`` and hull of ``sigma(G_ab A)`` from the weight ``a``.

    Both are conservative bounds over every possible ``lambda in (0, 1)``,
    with ``lambda_max`` entering only through ``f_{a+}(lambda_max)``.

    Returns
    -------
    rho_H : float or None
        None when ``a`` is outside ``[0, 1]`` (no convergence guarantee).
    interval : SpectrumInterval or None
        None when ``a`` is outside ``[-1, 1]`` (positivity not guaranteed).
    """
    a = float(a)
    if not 0.0 <= lambda_max <= 1.0:
        raise ValueError("lambda_max must lie in [0, 1]")
    rho = None
    if 0.0 <= a <= 1.0:
        fplus = a * lambda_max + (1 - a) * math.sqrt(lambda_max)
        if a <= 1.0 / 3.0:
            rho = max(1 - 2 * a, fplus)
        else:
            rho = max((1 - a) ** 2 / (4 * a), fplus)
    interval = None
    if -1.0 <= a <= 1.0 / 3.0:
        interval = SpectrumInterval(0.0, 2 - 2 * a, True, True)
    elif 1.0 / 3.0 < a <= 1.0:
        interval = SpectrumInterval(0.0, 1 + (1 - a) ** 2 / (4 * a), True, False)
    return rho, interval


def distinct_count(N, n):
    """Number of distinct eigenvalues of ``M_m^{-1} A`` for ``a=1, b=-1``."""
    N = check_positive_int(N, "N")
    n = check_positive_int(n, "n")
    if N % 2 == 0:
        return (N // 2) * n
    return (N // 2) * n + 1


class PolyPreconditioner(TransformerMixin, BaseEstimator):
    """m-step multi-splitting polynomial preconditioner.

    Parameters
    ----------
    a : float, default 1.0
        Weight of each stair splitting.
    b : float or None, default None
        Weight of the diagonal splitting; ``None`` means ``1 - 2a``.
    m : int, default 1
        Number of polynomial steps; ``m=1`` is ``G_ab`` itself.
    unsafe : bool, default False
        Allow weights outside ``a >= 0, b >= -1``, where ``M_m^{-1}`` may
        fail to be s.p.d.

    Attributes
    ----------
    weights_ : SplittingWeights
    factorization_ : BlockFactorization
    matrix_ : BlockTridiagMatrix

    Examples
    --------
    >>> P = PolyPreconditioner(a=1.0, m=2).fit(A)       # doctest: +SKIP
    >>> z = P.apply(r)                                  # doctest: +SKIP
    """

    def __init__(self, a=1.0, b=None, m=1, unsafe=False):
        self.a = a
        self.b = b
        self.m = m
        self.unsafe = unsafe

    def _weights(self):
        b = 1.0 - 2.0 * self.a if self.b is None else self.b
        w = SplittingWeights(self.a, b)
        if not w.in_C_g and not self.unsafe:
            raise ValueError(
                f"weights (a={w.a}, b={w.b}) lie outside a >= 0, b >= -1; pass unsafe=True to experiment"
            )
        return w

    def fit(self, A, y=None):
        if not isinstance(A, BlockTridiagMatrix):
            raise TypeError(f"expected a BlockTridiagMatrix, got {type(A).__name__}")
        check_positive_int(self.m, "m")
        self.weights_ = self._weights()
        self.factorization_ = factorize(A)
        self.matrix_ = A
        self.n_features_in_ = A.shape[0]
        return self

    @classmethod
    def from_factorization(cls, F, weights, m=1, unsafe=False):
        """Build a fitted preconditioner sharing an existing factorization."""
        P = cls(a=weights.a, b=weights.b, m=m, unsafe=unsafe)
        P.weights_ = P._weights()
        P.factorization_ = F
        P.matrix_ = F.matrix
        P.n_features_in_ = F.matrix.shape[0]
        return P

    def apply(self, y):
        """``M_m^{-1} y`` for a vector or a matrix of column vectors."""
        check_is_fitted(self, "factorization_")
        return apply_Mm_inv(self.weights_, self.m, self.factorization_, y)

    __call__ = apply

    def apply_G(self, y):
        check_is_fitted(self, "factorization_")
        return apply_G(self.weights_, self.factorization_, y)

    def apply_H(self, y):
        check_is_fitted(self, "factorization_")
        return apply_H(self.weights_, self.factorization_, y)

    def transform(self, X):
        """Apply ``M_m^{-1}`` to each row of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            return self.apply(X)
        return self.apply(X.T).T

    def to_dense(self):
        """Dense ``M_m^{-1}`` assembled column by column from unit vectors."""
        check_is_fitted(self, "factorization_")
        return self.apply(np.eye(self.matrix_.shape[0]))

    def as_linear_operator(self):
        check_is_fitted(self, "factorization_")
        return LinearOperator(self.matrix_.shape, matvec=self.apply, matmat=self.apply, dtype=np.float64)

