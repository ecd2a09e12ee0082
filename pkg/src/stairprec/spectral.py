"""Dense spectral oracles for desk-scale problems.

Spectra of non-symmetric products such as ``M^{-1} A`` are obtained from a
symmetric matrix similar to them: with ``M^{-1} = L L^T``, ``L^T A L`` is
similar to ``M^{-1} A``; with ``A = R R^T``, ``R^T G R`` is similar to
``G A`` for any symmetric ``G`` (definite or not).  Only a symmetric
eigensolver is needed.
"""

import json
from dataclasses import dataclass

import numpy as np

from .blocktri import assemble_dense
from .exceptions import NotPositiveDefiniteError
from .precond import DIAGONAL_ONLY, PolyPreconditioner, SpectrumInterval, apply_G
from .splitting import factorize
from .validation import is_symmetric

DISTINCT_RTOL = 1e-7
ONE_ATOL = 1e-8


def sym_eig(M, return_vectors=False):
    """Ascending eigenvalues (and optionally eigenvectors) of a symmetric matrix."""
    M = np.asarray(M, dtype=np.float64)
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    if not is_symmetric(M, atol=1e-10 * scale):
        raise ValueError("sym_eig requires a symmetric matrix")
    M = 0.5 * (M + M.T)
    if return_vectors:
        return np.linalg.eigh(M)
    return np.linalg.eigvalsh(M)


def cluster_eigenvalues(values, rtol=DISTINCT_RTOL):
    """Group sorted values; neighbours within ``rtol * max(1, |mu|)`` share a group."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        return []
    gaps = np.diff(v) > rtol * np.maximum(1.0, np.abs(v[1:]))
    cuts = np.flatnonzero(gaps) + 1
    return np.split(v, cuts)


def count_distinct(values, rtol=DISTINCT_RTOL):
    return len(cluster_eigenvalues(values, rtol))


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    distinct: int
    cond: float
    interval: SpectrumInterval
    pairing_ok: bool

    @classmethod
    def from_eigenvalues(cls, eigenvalues, rtol=DISTINCT_RTOL):
        ev = np.sort(np.asarray(eigenvalues, dtype=np.float64))
        groups = cluster_eigenvalues(ev, rtol)
        if ev.size and ev[0] > 0:
            cond = float(ev[-1] / ev[0])
        else:
            cond = float("inf")
        # eigenvalues at 1 are unpaired by construction; all others come in pairs
        interior = [g for g in groups if np.abs(g - 1.0).min() > ONE_ATOL]
        pairing_ok = all(len(g) % 2 == 0 for g in interior)
        interval = SpectrumInterval(float(ev[0]), float(ev[-1]), False, False)
        return cls(ev, len(groups), cond, interval, pairing_ok)

    def count_ones(self, atol=ONE_ATOL):
        return int(np.count_nonzero(np.abs(self.eigenvalues - 1.0) <= atol))

    def to_dict(self):
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "distinct": self.distinct,
            "cond": self.cond,
            "interval": self.interval.to_dict(),
            "pairing_ok": self.pairing_ok,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d):
        return cls(
            eigenvalues=np.asarray(d["eigenvalues"], dtype=np.float64),
            distinct=int(d["distinct"]),
            cond=float(d["cond"]),
            interval=SpectrumInterval(**d["interval"]),
            pairing_ok=bool(d["pairing_ok"]),
        )


def _fitted(A, P):
    if getattr(P, "matrix_", None) is A:
        return P
    return PolyPreconditioner(a=P.a, b=P.b, m=P.m, unsafe=P.unsafe).fit(A)


def spectrum_of_preconditioned(A, P):
    """Exact spectrum of ``M_m^{-1} A`` through the congruence ``L^T A L``.

    ``P`` is a :class:`PolyPreconditioner`; it is fitted on ``A`` if needed.

    Raises
    ------
    NotPositiveDefiniteError
        If the assembled ``M_m^{-1}`` is not numerically p.d.
    """
    P = _fitted(A, P)
    Minv = P.to_dense()
    Minv = 0.5 * (Minv + Minv.T)
    try:
        L = np.linalg.cholesky(Minv)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError(
            f"M^-1 for a={P.weights_.a}, b={P.weights_.b}, m={P.m} is not positive definite"
        ) from None
    S = L.T @ assemble_dense(A) @ L
    return SpectrumReport.from_eigenvalues(sym_eig(0.5 * (S + S.T)))


def dense_G(A, w, F=None):
    F = F if F is not None else factorize(A)
    G = apply_G(w, F, np.eye(A.shape[0]))
    return 0.5 * (G + G.T)


def spectrum_GA(A, w, F=None):
    """Eigenvalues of ``G_ab A`` for any weights, via ``R^T G R`` with ``A = R R^T``."""
    G = dense_G(A, w, F)
    R = np.linalg.cholesky(assemble_dense(A))
    S = R.T @ G @ R
    return sym_eig(0.5 * (S + S.T))


def spectral_radius_H(A, w, F=None):
    """``rho(H_ab) = max |1 - mu|`` over ``mu in sigma(G_ab A)``."""
    mu = spectrum_GA(A, w, F)
    return float(np.abs(1.0 - mu).max())


def eig_stair_product(A, F=None):
    """Nonzero eigenvalues of ``B_l^{-1} C_l``, ascending.

    From the block Jacobi spectrum ``1 +/- sqrt(lambda)``: each nonzero
    ``lambda`` contributes exactly one eigenvalue above 1, so
    ``lambda = (mu - 1)^2`` over ``mu > 1``.
    """
    F = F if F is not None else factorize(A)
    P = PolyPreconditioner.from_factorization(F, DIAGONAL_ONLY)
    mu = spectrum_of_preconditioned(A, P).eigenvalues
    upper = mu[mu > 1.0 + ONE_ATOL]
    return np.sort((upper - 1.0) ** 2)
