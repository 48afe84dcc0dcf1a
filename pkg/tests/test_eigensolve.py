import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from gse.eigensolve import (
    NotConvergedWarning,
    SymmetricOperator,
    count_below,
    dense_eig_oracle,
    materialize,
    smallest_eig,
)


def _path_laplacian(n):
    return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")


def test_path_laplacian_closed_form():
    n = 300
    res = smallest_eig(SymmetricOperator.from_matrix(_path_laplacian(n)), tol=1e-11)
    exact = 2 - 2 * np.cos(np.pi / (n + 1))
    assert res.converged
    assert res.value == pytest.approx(exact, abs=1e-12)
    assert np.linalg.norm(res.vector) == pytest.approx(1.0)
    assert res.vector.sum() > 0


def test_matrix_free_and_sparse_agree():
    rng = np.random.default_rng(1)
    A = _path_laplacian(200) + sp.diags(rng.random(200))
    a = smallest_eig(SymmetricOperator.from_matrix(A), tol=1e-11).value
    b = smallest_eig(SymmetricOperator(200, A.dot, 6.0), tol=1e-11).value
    assert a == pytest.approx(b, abs=1e-10)


def test_degenerate_bottom_reports_multiplicity():
    w = np.array([1.0, 1.0, 1.0, 2.0, 3.0, 5.0])
    Q, _ = np.linalg.qr(np.random.default_rng(3).standard_normal((6, 6)))
    M = (Q * w) @ Q.T
    res = smallest_eig(SymmetricOperator(6, M.dot, 6.0), tol=1e-12)
    assert res.value == pytest.approx(1.0, abs=1e-12)
    assert res.multiplicity == 3
    assert dense_eig_oracle(SymmetricOperator.from_matrix(M)).multiplicity == 3


def test_count_below_matches_dense_inertia():
    rng = np.random.default_rng(4)
    A = _path_laplacian(80) + sp.diags(rng.random(80))
    w = np.linalg.eigvalsh(A.toarray())
    for sigma in (0.01, 0.5, 1.7, 3.3):
        c = count_below(A, sigma)
        if c is not None:
            assert c == int(np.sum(w < sigma))


def test_nonconvergence_warns_and_flags():
    A = _path_laplacian(400)
    with pytest.warns(NotConvergedWarning):
        res = smallest_eig(SymmetricOperator(400, A.dot, 4.0), tol=1e-14, max_iter=5)
    assert not res.converged


def test_rejects_bad_inputs():
    op = SymmetricOperator.from_matrix(np.eye(3))
    with pytest.raises(ValueError):
        smallest_eig(op, tol=0)
    with pytest.raises(ValueError):
        smallest_eig(op, v0=np.zeros(3))
    with pytest.raises(ValueError):
        dense_eig_oracle(SymmetricOperator(5000, lambda v: v, 1.0))


def test_materialize_round_trip():
    M = np.array([[2.0, -1.0], [-1.0, 3.0]])
    np.testing.assert_array_equal(materialize(SymmetricOperator(2, M.dot, 4.0)), M)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 60), seed=st.integers(0, 10_000), shift=st.floats(-3, 3))
def test_rayleigh_quotient_property(n, seed, shift):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((n, n))
    M = B @ B.T / n + shift * np.eye(n)
    with warnings.catch_warnings():
        warnings.simplefilter("error", NotConvergedWarning)
        res = smallest_eig(SymmetricOperator.from_matrix(M), tol=1e-10)
    x = res.vector
    assert res.value == pytest.approx(float(x @ M @ x), abs=1e-10)
    assert res.value == pytest.approx(np.linalg.eigvalsh(M)[0], abs=1e-9)
