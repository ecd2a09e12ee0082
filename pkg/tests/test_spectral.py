import json
import math

import numpy as np
import pytest

from conftest import dense_G_H, dense_splittings, random_blocktri
from stairprec.blocktri import BlockTridiagMatrix, assemble_dense
from stairprec.exceptions import NotPositiveDefiniteError
from stairprec.precond import DIAGONAL_ONLY, OPTIMAL, PolyPreconditioner, SplittingWeights
from stairprec.spectral import (
    SpectrumReport,
    count_distinct,
    eig_stair_product,
    spectral_radius_H,
    spectrum_GA,
    spectrum_of_preconditioned,
    sym_eig,
)
from stairprec.splitting import SplittingKind


def test_sym_eig_identity():
    np.testing.assert_array_equal(sym_eig(np.eye(3)), [1.0, 1.0, 1.0])


def test_sym_eig_laplacian(A3):
    expected = [2 - math.sqrt(2), 2.0, 2 + math.sqrt(2)]
    np.testing.assert_allclose(sym_eig(assemble_dense(A3)), expected, rtol=0, atol=1e-14)


def test_sym_eig_sorted():
    np.testing.assert_array_equal(sym_eig(np.diag([3.0, 1.0, 2.0])), [1.0, 2.0, 3.0])


def test_sym_eig_rejects_nonsymmetric():
    with pytest.raises(ValueError):
        sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_eigenvectors_reconstruct(rng):
    X = rng.standard_normal((6, 6))
    M = X + X.T
    w, V = sym_eig(M, return_vectors=True)
    np.testing.assert_allclose(V @ np.diag(w) @ V.T, M, atol=1e-12)
    np.testing.assert_allclose(V.T @ V, np.eye(6), atol=1e-12)


def test_optimal_spectrum_A3(A3):
    rep = spectrum_of_preconditioned(A3, PolyPreconditioner(a=1.0))
    np.testing.assert_allclose(rep.eigenvalues, [0.5, 0.5, 1.0], atol=1e-14)
    assert rep.distinct == 2
    assert rep.cond == pytest.approx(2.0, rel=1e-13)
    assert rep.count_ones() == 1 and rep.pairing_ok


def test_jacobi_spectrum_A3(A3):
    rep = spectrum_of_preconditioned(A3, PolyPreconditioner(a=0.0))
    s = math.sqrt(0.5)
    np.testing.assert_allclose(rep.eigenvalues, [1 - s, 1.0, 1 + s], atol=1e-14)
    assert rep.cond == pytest.approx((1 + s) / (1 - s), rel=1e-12)


@pytest.mark.parametrize("a,m", [(0.0, 1), (1.0, 3), (0.5, 2)])
def test_block_diagonal_spectrum_is_one(rng, a, m):
    A = random_blocktri(rng, 4, 3)
    A0 = BlockTridiagMatrix(A.diag, np.zeros_like(A.off))
    rep = spectrum_of_preconditioned(A0, PolyPreconditioner(a=a, m=m))
    np.testing.assert_allclose(rep.eigenvalues, 1.0, atol=1e-12)
    assert rep.cond == pytest.approx(1.0, abs=1e-12)


def test_spectrum_matches_nonsymmetric_oracle(rng):
    A = random_blocktri(rng, 5, 2)
    P = PolyPreconditioner(a=0.3, m=2).fit(A)
    rep = spectrum_of_preconditioned(A, P)
    mu = np.sort(np.linalg.eigvals(P.to_dense() @ assemble_dense(A)).real)
    np.testing.assert_allclose(rep.eigenvalues, mu, atol=1e-9)


def test_spectrum_GA_matches_dense(rng):
    A = random_blocktri(rng, 5, 2)
    w = SplittingWeights.from_a(1.2)
    G, _ = dense_G_H(A, w.a, w.b)
    mu = np.sort(np.linalg.eigvals(G @ assemble_dense(A)).real)
    np.testing.assert_allclose(spectrum_GA(A, w), mu, atol=1e-9)


def test_indefinite_M_raises(rng):
    # with a large enough weight G_ab A picks up a negative eigenvalue
    A = random_blocktri(rng, 6, 2, coupling=3.0)
    for a in (3.0, 6.0, 12.0):
        w = SplittingWeights.from_a(a)
        if spectrum_GA(A, w)[0] < 0:
            with pytest.raises(NotPositiveDefiniteError):
                spectrum_of_preconditioned(A, PolyPreconditioner(a=a, unsafe=True))
            return
    pytest.skip("no indefinite G found for this draw")


def test_stair_product_A3(A3):
    np.testing.assert_allclose(eig_stair_product(A3), [0.5], atol=1e-14)


def test_stair_product_block_diagonal(rng):
    A = random_blocktri(rng, 4, 2)
    A0 = BlockTridiagMatrix(A.diag, np.zeros_like(A.off))
    assert eig_stair_product(A0).size == 0


def test_stair_product_matches_dense(rng):
    A = random_blocktri(rng, 6, 2)
    B, C = dense_splittings(A)[SplittingKind.STAIR_LEFT]
    lam = np.linalg.eigvals(np.linalg.solve(B, C))
    lam = np.sort(lam.real[np.abs(lam) > 1e-10])
    np.testing.assert_allclose(eig_stair_product(A), lam, atol=1e-9)


def test_spectral_radius_examples(A3):
    assert spectral_radius_H(A3, OPTIMAL) == pytest.approx(0.5, abs=1e-14)
    assert spectral_radius_H(A3, DIAGONAL_ONLY) == pytest.approx(math.sqrt(0.5), abs=1e-14)
    A0 = BlockTridiagMatrix(A3.diag, np.zeros_like(A3.off))
    assert spectral_radius_H(A0, OPTIMAL) == pytest.approx(0.0, abs=1e-14)


def test_count_distinct_rule():
    assert count_distinct([1.0, 1.0 + 5e-8, 2.0]) == 2
    assert count_distinct([1.0, 1.0 + 5e-7]) == 2
    assert count_distinct([]) == 0


def test_pairing_flag():
    assert SpectrumReport.from_eigenvalues([0.5, 0.5, 1.0]).pairing_ok
    assert not SpectrumReport.from_eigenvalues([0.4, 0.5, 1.0]).pairing_ok


def test_report_json_roundtrip(A3):
    rep = spectrum_of_preconditioned(A3, PolyPreconditioner(a=1.0, m=2))
    back = SpectrumReport.from_dict(json.loads(rep.to_json()))
    np.testing.assert_array_equal(back.eigenvalues, rep.eigenvalues)
    assert (back.distinct, back.cond, back.interval, back.pairing_ok) == (
        rep.distinct, rep.cond, rep.interval, rep.pairing_ok)


def test_exact_ones_odd_N(rng):
    A = random_blocktri(rng, 5, 3)
    rep = spectrum_of_preconditioned(A, PolyPreconditioner(a=1.0))
    assert rep.count_ones() == 3
