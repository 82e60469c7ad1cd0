"""Backend selection for the hot loops.

The compiled extension ``gecc._ckernels`` is used when it imports; otherwise
the NumPy versions in ``gecc._pykernels`` take over. Set ``GECC_BACKEND=python``
to force the fallback (useful for benchmarking and parity tests).
"""
import os

import numpy as np

from . import _pykernels

if os.environ.get("GECC_BACKEND", "").lower() == "python":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

__all__ = [
    "BACKEND",
    "assign_nearest",
    "cluster_sums",
    "fcm_memberships",
    "get_backend",
    "spmm_csr",
    "sq_dist_to_point",
    "weighted_sums",
]


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def get_backend(name=None):
    """Return the kernel module for ``name`` ("cython" or "python"), default active."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def spmm_csr(indptr, indices, data, X):
    return _impl.spmm_csr(_i64(indptr), _i64(indices), _f64(data), _f64(X))


def assign_nearest(X, C):
    return _impl.assign_nearest(_f64(X), _f64(C))


def sq_dist_to_point(X, c):
    return _impl.sq_dist_to_point(_f64(X), _f64(c))


def cluster_sums(X, labels, k):
    return _impl.cluster_sums(_f64(X), _i64(labels), int(k))


def weighted_sums(X, W):
    # BLAS beats a hand loop here, so both backends share the NumPy version
    return _pykernels.weighted_sums(_f64(X), _f64(W))


def fcm_memberships(X, C, fuzziness):
    return _impl.fcm_memberships(_f64(X), _f64(C), float(fuzziness))
