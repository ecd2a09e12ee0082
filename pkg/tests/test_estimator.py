import numpy as np
import pytest
from scipy.sparse.linalg import cg
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import random_blocktri
from stairprec import PCGSolver, PolyPreconditioner
from stairprec.blocktri import assemble_dense


def test_get_set_params():
    P = PolyPreconditioner(a=0.5, m=3)
    assert P.get_params() == {"a": 0.5, "b": None, "m": 3, "unsafe": False}
    P.set_params(m=2)
    assert P.m == 2


def test_clone_is_unfitted(A3):
    P = PolyPreconditioner(a=1.0).fit(A3)
    Q = clone(P)
    assert Q.get_params() == P.get_params()
    with pytest.raises(NotFittedError):
        Q.apply(np.ones(3))


def test_scipy_cg_with_linear_operator(rng):
    A = random_blocktri(rng, 6, 3)
    M = PolyPreconditioner(a=1.0, m=2).fit(A).as_linear_operator()
    b = rng.standard_normal(18)
    x, info = cg(assemble_dense(A), b, M=M, rtol=1e-12)
    assert info == 0
    np.testing.assert_allclose(assemble_dense(A) @ x, b, atol=1e-9)


def test_solver_estimator(rng):
    A = random_blocktri(rng, 5, 2)
    solver = PCGSolver(PolyPreconditioner(a=1.0), tol=1e-10).fit(A)
    assert solver.preconditioner_ is not solver.preconditioner
    B = rng.standard_normal((3, 10))
    X = solver.predict(B)
    np.testing.assert_allclose(X @ assemble_dense(A), B, atol=1e-9)
    np.testing.assert_allclose(solver.predict(B[0]), X[0], atol=1e-12)
    assert solver.solve(B[0]).converged


def test_solver_without_preconditioner(A3):
    res = PCGSolver().fit(A3).solve(np.array([1.0, 0.0, 0.0]))
    assert res.converged and res.iterations <= 3


def test_solver_rejects_dense(A3):
    with pytest.raises(TypeError):
        PCGSolver().fit(np.eye(3))
