"""Random LQR benchmark instances and their Schur complements.

An LQR problem with horizon ``T`` is the equality-constrained QP over
``z = (x_0, u_0, x_1, u_1, ..., x_T)``::

    min  1/2 z^T H z      H = blockdiag(Q_0, R_0, Q_1, ..., R_{T-1}, Q_T)
    s.t. x_0 = x_init
         x_{t+1} - A_t x_t - B_t u_t = 0

With ``G`` the constraint Jacobian, ``S = G H^{-1} G^T`` is s.p.d. block
tridiagonal with ``N = T + 1`` blocks of size ``nx``.

Random streams use numpy's PCG64. Instance ``k`` of a sweep with base seed
``s`` is generated from seed ``s ^ k``; right-hand sides come from a
separate stream spawned from the same seed.
"""

import json
import os
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .blocktri import BlockTridiagMatrix, assemble_dense, write_matrix
from .exceptions import SchurNotSpdError

GENERATOR_VERSION = 1
RHS_STREAM = 1
U64 = (1 << 64) - 1


@dataclass
class GeneratorConfig:
    """Knobs of the random LQR ensemble.

    ``nu`` defaults to ``max(1, n // 3)`` and ``cost_eps`` to ``0.1 * n``.
    ``dynamics`` selects the law of ``A_t``: ``"gaussian"`` draws i.i.d.
    normal entries, ``"orthogonal"`` a Haar-random orthogonal matrix; both
    are multiplied by ``dyn_scale`` (Gaussian entries also by ``1/sqrt(n)``).
    Long products of Gaussian dynamics make some eigenvalues of
    ``B_l^{-1} C_l`` exponentially small; orthogonal dynamics with
    ``cost_factor_scale=0`` keep them well separated.
    """

    seed: int = 0
    N: int = 20
    n: int = 15
    nu: Optional[int] = None
    dyn_scale: float = 1.0
    cost_factor_scale: float = 1.0
    cost_eps: Optional[float] = None
    dynamics: str = "gaussian"

    def __post_init__(self):
        if self.N < 2 or self.n < 1:
            raise ValueError(f"need N >= 2 and n >= 1, got N={self.N}, n={self.n}")
        if self.nu is None:
            self.nu = max(1, self.n // 3)
        if self.nu < 1:
            raise ValueError("nu must be >= 1")
        if self.cost_eps is None:
            self.cost_eps = 0.1 * self.n
        if self.dynamics not in ("gaussian", "orthogonal"):
            raise ValueError(f"unknown dynamics {self.dynamics!r}")
        if not 0 <= self.seed <= U64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def for_instance(self, k):
        """Config of the ``k``-th instance in a sweep (seed ``seed ^ k``)."""
        d = asdict(self)
        d["seed"] = (self.seed ^ k) & U64
        return GeneratorConfig(**d)


@dataclass
class LqrProblem:
    A: list
    B: list
    Q: list
    R: list
    x0: np.ndarray
    config: Optional[GeneratorConfig] = field(default=None, repr=False)

    @property
    def T(self):
        return len(self.A)

    @property
    def nx(self):
        return self.Q[0].shape[0]

    @property
    def nu(self):
        return self.R[0].shape[0] if self.R else 0


class HessianFactors(NamedTuple):
    """Cholesky factors (scipy ``cho_factor`` form) of the cost blocks."""

    Q: list
    R: list


def random_lqr(cfg):
    """Deterministic random LQR problem with ``T = N - 1`` and ``nx = n``."""
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    T, nx, nu = cfg.N - 1, cfg.n, cfg.nu
    scale = cfg.dyn_scale / np.sqrt(nx)
    A, B = [], []
    for _ in range(T):
        if cfg.dynamics == "orthogonal":
            A.append(_haar_orthogonal(rng, nx) * cfg.dyn_scale)
        else:
            A.append(rng.standard_normal((nx, nx)) * scale)
        B.append(rng.standard_normal((nx, nu)) * scale)
    Q = [_spd(rng, nx, cfg.cost_factor_scale, cfg.cost_eps) for _ in range(T + 1)]
    R = [_spd(rng, nu, cfg.cost_factor_scale, cfg.cost_eps) for _ in range(T)]
    x0 = rng.standard_normal(nx)
    return LqrProblem(A, B, Q, R, x0, config=cfg)


def _haar_orthogonal(rng, size):
    q, r = np.linalg.qr(rng.standard_normal((size, size)))
    return q * np.sign(np.diag(r))


def _spd(rng, size, factor_scale, eps):
    L = rng.standard_normal((size, size)) * factor_scale
    return L @ L.T + eps * np.eye(size)


def kkt_matrices(p):
    """Dense Hessian ``H`` and constraint Jacobian ``G`` of the LQR QP."""
    T, nx, nu = p.T, p.nx, p.nu
    blocks = []
    for t in range(T):
        blocks += [p.Q[t], p.R[t]]
    blocks.append(p.Q[T])
    sizes = [b.shape[0] for b in blocks]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    H = np.zeros((offsets[-1], offsets[-1]))
    for b, o in zip(blocks, offsets):
        H[o:o + b.shape[0], o:o + b.shape[0]] = b

    def x_col(t):
        return offsets[2 * t]

    def u_col(t):
        return offsets[2 * t + 1]

    G = np.zeros(((T + 1) * nx, offsets[-1]))
    I = np.eye(nx)
    G[0:nx, x_col(0):x_col(0) + nx] = I
    for t in range(T):
        r = slice((t + 1) * nx, (t + 2) * nx)
        G[r, x_col(t):x_col(t) + nx] = -p.A[t]
        G[r, u_col(t):u_col(t) + nu] = -p.B[t]
        G[r, x_col(t + 1):x_col(t + 1) + nx] = I
    return H, G


def schur_complement(p, validate=True):
    """Block tridiagonal ``S = G H^{-1} G^T`` of an LQR problem.

    Diagonal blocks are ``Q_0^{-1}`` and
    ``A_{t-1} Q_{t-1}^{-1} A_{t-1}^T + B_{t-1} R_{t-1}^{-1} B_{t-1}^T + Q_t^{-1}``;
    the off-diagonal block coupling stages ``t`` and ``t+1`` is
    ``-Q_t^{-1} A_t^T``.

    Raises
    ------
    SchurNotSpdError
        If ``validate`` and the assembled ``S`` fails a dense Cholesky.
    """
    T, nx = p.T, p.nx
    try:
        Qf = [cho_factor(Q, lower=True) for Q in p.Q]
        Rf = [cho_factor(R, lower=True) for R in p.R]
    except np.linalg.LinAlgError as exc:
        raise SchurNotSpdError(f"cost matrix is not positive definite: {exc}") from None
    I = np.eye(nx)
    Qinv = [cho_solve(f, I) for f in Qf]
    diag = np.empty((T + 1, nx, nx))
    off = np.empty((T, nx, nx))
    diag[0] = Qinv[0]
    for t in range(1, T + 1):
        At, Bt = p.A[t - 1], p.B[t - 1]
        D = At @ Qinv[t - 1] @ At.T + Bt @ cho_solve(Rf[t - 1], Bt.T) + Qinv[t]
        diag[t] = 0.5 * (D + D.T)
    for t in range(T):
        off[t] = -Qinv[t] @ p.A[t].T
    diag[0] = 0.5 * (diag[0] + diag[0].T)
    S = BlockTridiagMatrix(diag, off)
    if validate:
        try:
            np.linalg.cholesky(assemble_dense(S))
        except np.linalg.LinAlgError:
            seed = p.config.seed if p.config is not None else None
            raise SchurNotSpdError(f"Schur complement is not s.p.d. (seed={seed})") from None
    return S, HessianFactors(Qf, Rf)


def random_rhs(cfg, count):
    """``count`` standard-normal right-hand sides of length ``N * n``."""
    if count < 0:
        raise ValueError("count must be >= 0")
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(RHS_STREAM,))
    rng = np.random.Generator(np.random.PCG64(ss))
    return [rng.standard_normal(cfg.N * cfg.n) for _ in range(count)]


def generate_instance(cfg, max_resample=16):
    """Schur complement for ``cfg``, resampling with ``seed + 1`` on s.p.d. failure.

    Returns ``(A, used_cfg, failures)``.
    """
    failures = 0
    current = cfg
    for _ in range(max_resample + 1):
        try:
            A, _ = schur_complement(random_lqr(current))
            return A, current, failures
        except SchurNotSpdError:
            failures += 1
            d = asdict(current)
            d["seed"] = (current.seed + 1) & U64
            current = GeneratorConfig(**d)
    raise SchurNotSpdError(f"no s.p.d. instance after {max_resample} resamples from seed {cfg.seed}")


def write_instance(A, cfg, directory, name):
    """Write ``<name>.txt`` (block text format) and ``<name>.json`` (provenance)."""
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, name)
    write_matrix(A, path + ".txt")
    meta = {"generator_version": GENERATOR_VERSION, "rng": "numpy.PCG64", **asdict(cfg)}
    with open(path + ".json", "w", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path + ".txt", path + ".json"
