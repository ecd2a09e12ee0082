"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""

import numbers

import numpy as np

from .exceptions import DimensionMismatchError

SYMMETRY_ATOL = 1e-12


def check_blocks(blocks, name, n=None, count=None):
    """Coerce ``blocks`` to a float64 array of shape ``(count, n, n)``."""
    arr = np.asarray(blocks, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
        raise ValueError(f"{name} must have shape (k, n, n), got {arr.shape}")
    if n is not None and arr.shape[1] != n:
        raise ValueError(f"{name} blocks have size {arr.shape[1]}, expected {n}")
    if count is not None and arr.shape[0] != count:
        raise ValueError(f"{name} has {arr.shape[0]} blocks, expected {count}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or inf")
    return arr


def check_block_vector(v, N, n):
    """Return ``v`` viewed as an ``(N, n, k)`` stack plus the original shape.

    ``v`` is either a single vector of length ``N*n`` or a matrix with
    ``N*n`` rows whose columns are treated as independent vectors.
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim not in (1, 2) or arr.shape[0] != N * n:
        raise DimensionMismatchError(
            f"expected a vector with {N * n} rows (N={N}, n={n}), got shape {arr.shape}"
        )
    return arr.reshape(N, n, -1), arr.shape


def check_positive_int(value, name, minimum=1):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def is_symmetric(M, atol):
    M = np.asarray(M)
    return M.ndim == 2 and M.shape[0] == M.shape[1] and np.allclose(M, M.T, rtol=0, atol=atol)
