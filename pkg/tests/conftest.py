import numpy as np
import pytest

from stairprec.blocktri import BlockTridiagMatrix, assemble_dense
from stairprec.splitting import SplittingKind, assemble_B


def random_blocktri(rng, N, n, coupling=1.0):
    """Random s.p.d. block tridiagonal matrix (block diagonally dominant)."""
    off = rng.standard_normal((N - 1, n, n)) * coupling
    norms = np.linalg.norm(off, 2, axis=(1, 2)) if N > 1 else np.zeros(0)
    diag = []
    for i in range(N):
        X = rng.standard_normal((n, n))
        bound = (norms[i - 1] if i > 0 else 0.0) + (norms[i] if i < N - 1 else 0.0)
        D = X @ X.T + (bound + 0.5) * np.eye(n)
        diag.append(0.5 * (D + D.T))
    return BlockTridiagMatrix(np.array(diag), off)


def dense_splittings(A):
    """Dense (B, C) pairs for all three splittings, C = B - A."""
    M = assemble_dense(A)
    out = {}
    for kind in SplittingKind:
        B = assemble_B(kind, A)
        out[kind] = (B, B - M)
    return out


def dense_G_H(A, a, b):
    """G_ab and H_ab from explicit inverses of the dense B matrices."""
    sp = dense_splittings(A)
    inv = {k: np.linalg.inv(B) for k, (B, _) in sp.items()}
    L, R, D = SplittingKind.STAIR_LEFT, SplittingKind.STAIR_RIGHT, SplittingKind.DIAGONAL
    G = a * (inv[L] + inv[R]) + b * inv[D]
    H = a * (inv[L] @ sp[L][1] + inv[R] @ sp[R][1]) + b * inv[D] @ sp[D][1]
    return G, H


@pytest.fixture
def A3():
    """tridiag(-1, 2, -1) with N=3, n=1."""
    return BlockTridiagMatrix([[[2.0]], [[2.0]], [[2.0]]], [[[-1.0]], [[-1.0]]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


# acceptance criterion number -> (passed, one-line detail); filled by test_acceptance
ACCEPTANCE = {}


def record_acceptance(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
