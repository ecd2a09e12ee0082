"""Symmetric block tridiagonal matrices.

A matrix with ``N`` diagonal blocks of size ``n`` is stored as two dense
stacks::

    diag[k]  ->  D_{k+1}          k = 0 .. N-1
    off[k]   ->  O_{k+1}          k = 0 .. N-2

so that block row ``i`` (0-based) reads ``O_{i-1}^T  D_i  O_i``.  Block
indices in docstrings are 1-based (``D_1 .. D_N``); arrays are 0-based and
block ``k`` lives at array position ``k - 1``.

Vectors are plain float arrays of length ``N*n`` (or ``(N*n, k)`` for a
batch of ``k`` column vectors); ``x.reshape(N, n)`` exposes the sub-vectors
``x_1 .. x_N``.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatchError, NotPositiveDefiniteError
from .validation import SYMMETRY_ATOL, check_block_vector, check_blocks


@dataclass(frozen=True, eq=False)
class BlockTridiagMatrix:
    """Symmetric block tridiagonal matrix with dense ``n x n`` blocks.

    Parameters
    ----------
    diag : array_like, shape (N, n, n)
        Symmetric diagonal blocks.
    off : array_like, shape (N-1, n, n)
        Super-diagonal blocks; the sub-diagonal holds their transposes.
    validate_spd : bool, default False
        Run a dense Cholesky of the assembled matrix. Costs O((Nn)^3).
    """

    diag: np.ndarray
    off: np.ndarray
    validate_spd: bool = field(default=False, repr=False)

    def __post_init__(self):
        diag = check_blocks(self.diag, "diag")
        N, n = diag.shape[0], diag.shape[1]
        if N < 1 or n < 1:
            raise ValueError("need at least one non-empty diagonal block")
        off = np.asarray(self.off, dtype=np.float64)
        if N == 1 and off.size == 0:
            off = np.zeros((0, n, n))
        off = check_blocks(off, "off", n=n, count=N - 1)

        asym = np.abs(diag - diag.transpose(0, 2, 1)).max(axis=(1, 2))
        bad = np.flatnonzero(asym > SYMMETRY_ATOL)
        if bad.size:
            k = int(bad[0]) + 1
            raise ValueError(f"diagonal block D_{k} is not symmetric (max |D - D^T| = {asym[k - 1]:.3e})")

        diag = np.array(diag, copy=True)
        off = np.array(off, copy=True)
        diag.setflags(write=False)
        off.setflags(write=False)
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "off", off)

        if self.validate_spd:
            try:
                np.linalg.cholesky(assemble_dense(self))
            except np.linalg.LinAlgError:
                raise NotPositiveDefiniteError("assembled matrix is not positive definite") from None

    @property
    def N(self):
        return self.diag.shape[0]

    @property
    def n(self):
        return self.diag.shape[1]

    @property
    def shape(self):
        size = self.N * self.n
        return (size, size)

    @classmethod
    def from_dense(cls, M, n, validate_spd=False):
        """Extract the block tridiagonal band of a dense matrix.

        Entries outside the band are ignored.
        """
        M = np.asarray(M, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % n:
            raise DimensionMismatchError(f"cannot split a {M.shape} matrix into {n}x{n} blocks")
        N = M.shape[0] // n
        diag = np.stack([M[i * n:(i + 1) * n, i * n:(i + 1) * n] for i in range(N)])
        off = np.array([M[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] for i in range(N - 1)]).reshape(N - 1, n, n)
        return cls(diag, off, validate_spd=validate_spd)

    def __matmul__(self, x):
        return matvec(self, x)


def matvec(A, x):
    """Structured product ``A @ x`` in O(N n^2) per column.

    ``y_i = O_{i-1}^T x_{i-1} + D_i x_i + O_i x_{i+1}`` with boundary terms
    dropped. ``x`` may be a single vector or a matrix of column vectors.
    """
    X, shape = check_block_vector(x, A.N, A.n)
    Y = A.diag @ X
    if A.N > 1:
        Y[:-1] += A.off @ X[1:]
        Y[1:] += A.off.transpose(0, 2, 1) @ X[:-1]
    return Y.reshape(shape)


def assemble_dense(A):
    """Dense ``(Nn, Nn)`` array; the lower band mirrors the upper band exactly."""
    N, n = A.N, A.n
    M = np.zeros((N * n, N * n))
    for i in range(N):
        s = slice(i * n, (i + 1) * n)
        M[s, s] = A.diag[i]
        if i + 1 < N:
            t = slice((i + 1) * n, (i + 2) * n)
            M[s, t] = A.off[i]
            M[t, s] = A.off[i].T
    # D_i is only symmetric to SYMMETRY_ATOL; force bit-exact symmetry
    M = np.triu(M) + np.triu(M, 1).T
    return M


def parity_split(v, N, n):
    """Split ``v`` into ``(v_e, v_o)`` with ``v_e + v_o == v``.

    ``v_e`` keeps the even-numbered sub-vectors ``v_2, v_4, ...`` and
    ``v_o`` the odd-numbered ``v_1, v_3, ...`` (1-based), zeros elsewhere.
    """
    V, shape = check_block_vector(v, N, n)
    ve = np.zeros_like(V)
    vo = np.zeros_like(V)
    ve[1::2] = V[1::2]
    vo[0::2] = V[0::2]
    return ve.reshape(shape), vo.reshape(shape)


def write_matrix(A, path):
    """Write ``A`` in the plain-text block format.

    First line ``N n``; then the ``N`` diagonal blocks followed by the
    ``N-1`` off-diagonal blocks, each as ``n`` rows of ``n`` numbers.
    """
    lines = [f"{A.N} {A.n}"]
    for block in list(A.diag) + list(A.off):
        for row in block:
            lines.append(" ".join(format(float(x), ".17g") for x in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix(path, validate_spd=False):
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected header 'N n', got {header!r}")
        N, n = int(header[0]), int(header[1])
        values = np.loadtxt(fh, ndmin=2) if (2 * N - 1) * n else np.zeros((0, n))
    expected = (2 * N - 1) * n
    if values.shape != (expected, n):
        raise ValueError(f"{path}: expected {expected} rows of {n} values, got {values.shape}")
    blocks = values.reshape(2 * N - 1, n, n)
    return BlockTridiagMatrix(blocks[:N], blocks[N:], validate_spd=validate_spd)
