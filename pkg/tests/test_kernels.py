import numpy as np
import pytest

from conftest import random_graph
from gecc import kernels
from gecc.kernels import get_backend

py = get_backend("python")
try:
    cy = get_backend("cython")
except ImportError:  # extension not built
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled extension not built")


@pytest.fixture(params=range(5))
def data(request):
    rng = np.random.default_rng(request.param)
    n, d, k = 300 + 37 * request.param, 7, 11
    X = rng.normal(size=(n, d))
    C = X[rng.choice(n, k, replace=False)].copy()
    C[0] = X[5]  # a zero distance
    return X, C, rng.integers(0, k, n), k


@needs_ext
def test_assign_identical(data):
    X, C, _, _ = data
    lc, dc = cy.assign_nearest(X, C)
    lp, dp = py.assign_nearest(X, C)
    assert np.array_equal(lc, lp) and np.array_equal(dc, dp)


@needs_ext
def test_sq_dist_identical(data):
    X, C, _, _ = data
    assert np.array_equal(cy.sq_dist_to_point(X, C[1]), py.sq_dist_to_point(X, C[1]))


@needs_ext
def test_cluster_sums_identical(data):
    X, _, labels, k = data
    sc, nc = cy.cluster_sums(X, labels, k)
    sp, np_ = py.cluster_sums(X, labels, k)
    assert np.array_equal(sc, sp) and np.array_equal(nc, np_)


@needs_ext
def test_spmm_identical():
    rng = np.random.default_rng(3)
    g = random_graph(rng, 80, p=0.1)
    X = rng.normal(size=(80, 5))
    assert np.array_equal(cy.spmm_csr(g.indptr, g.indices, g.data, X),
                          py.spmm_csr(g.indptr, g.indices, g.data, X))


@needs_ext
@pytest.mark.parametrize("m", [1.1, 1.5, 2.0, 3.0])
def test_fcm_close(data, m):
    X, C, _, _ = data
    np.testing.assert_allclose(cy.fcm_memberships(X, C, m), py.fcm_memberships(X, C, m),
                               rtol=1e-13, atol=1e-15)


def test_spmm_matches_scipy():
    rng = np.random.default_rng(4)
    g = random_graph(rng, 60, p=0.2)
    X = rng.normal(size=(60, 3))
    np.testing.assert_allclose(kernels.spmm_csr(g.indptr, g.indices, g.data, X),
                               g.to_scipy() @ X, atol=1e-13)


def test_assign_matches_bruteforce(data):
    X, C, _, _ = data
    labels, mind = kernels.assign_nearest(X, C)
    d2 = ((X[:, None, :] - C[None]) ** 2).sum(-1)
    np.testing.assert_allclose(mind, d2.min(1), atol=1e-12)
    assert np.array_equal(labels, d2.argmin(1))


def test_weighted_sums(data):
    X, _, labels, k = data
    W = np.eye(k)[labels]
    sums, mass = kernels.weighted_sums(X, W)
    ref, cnt = kernels.cluster_sums(X, labels, k)
    np.testing.assert_allclose(sums, ref, atol=1e-12)
    assert np.array_equal(mass, cnt)


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")
    with pytest.raises(ValueError):
        get_backend("fortran")
