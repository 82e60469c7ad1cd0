# cython: language_level=3
"""Compiled inner loops for propagation and clustering.

Every reduction runs in a fixed sequential order (feature dimension innermost,
points in ascending index) so results match ``gecc._pykernels`` bit for bit,
except ``fcm_memberships`` where libm ``pow`` and ``np.power`` may differ in the
last ulp. Dense ``W.T @ X`` products are left to BLAS.
All loops release the GIL; restarts running on worker threads overlap.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()

ctypedef cnp.int64_t idx_t


def spmm_csr(const idx_t[::1] indptr, const idx_t[::1] indices,
             const double[::1] data, const double[:, ::1] X):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t d = X.shape[1]
    out_arr = np.zeros((n, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, p
    cdef idx_t col
    cdef double w
    with nogil:
        for i in range(n):
            for p in range(indptr[i], indptr[i + 1]):
                col = indices[p]
                w = data[p]
                for j in range(d):
                    out[i, j] += w * X[col, j]
    return out_arr


def assign_nearest(const double[:, ::1] X, const double[:, ::1] C):
    """Nearest centroid per row (ties to the lowest index) and its squared distance."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t k = C.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    labels_arr = np.empty(n, dtype=np.int64)
    mind_arr = np.empty(n, dtype=np.float64)
    cdef idx_t[::1] labels = labels_arr
    cdef double[::1] mind = mind_arr
    cdef Py_ssize_t i, l, j
    cdef double acc, t, best
    cdef idx_t arg
    with nogil:
        for i in range(n):
            best = 0.0
            arg = -1
            for l in range(k):
                acc = 0.0
                for j in range(d):
                    t = X[i, j] - C[l, j]
                    acc = acc + t * t
                if arg < 0 or acc < best:
                    best = acc
                    arg = l
            labels[i] = arg
            mind[i] = best
    return labels_arr, mind_arr


def sq_dist_to_point(const double[:, ::1] X, const double[::1] c):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double acc, t
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(d):
                t = X[i, j] - c[j]
                acc = acc + t * t
            out[i] = acc
    return out_arr


def cluster_sums(const double[:, ::1] X, const idx_t[::1] labels, Py_ssize_t k):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    sums_arr = np.zeros((k, d), dtype=np.float64)
    counts_arr = np.zeros(k, dtype=np.float64)
    cdef double[:, ::1] sums = sums_arr
    cdef double[::1] counts = counts_arr
    cdef Py_ssize_t i, j
    cdef idx_t l
    with nogil:
        for i in range(n):
            l = labels[i]
            counts[l] += 1.0
            for j in range(d):
                sums[l, j] += X[i, j]
    return sums_arr, counts_arr


def fcm_memberships(const double[:, ::1] X, const double[:, ::1] C, double fuzziness):
    """Fuzzy c-means membership update; a point sitting on a centroid takes it fully."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t k = C.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef double expo = 1.0 / (fuzziness - 1.0)
    U_arr = np.zeros((n, k), dtype=np.float64)
    dist_arr = np.empty(k, dtype=np.float64)
    cdef double[:, ::1] U = U_arr
    cdef double[::1] dist = dist_arr
    cdef Py_ssize_t i, l, j, arg
    cdef double acc, t, best, total
    with nogil:
        for i in range(n):
            arg = 0
            for l in range(k):
                acc = 0.0
                for j in range(d):
                    t = X[i, j] - C[l, j]
                    acc = acc + t * t
                dist[l] = acc
                if acc < dist[arg]:
                    arg = l
            best = dist[arg]
            if best == 0.0:
                U[i, arg] = 1.0
                continue
            total = 0.0
            for l in range(k):
                U[i, l] = pow(best / dist[l], expo)
                total = total + U[i, l]
            for l in range(k):
                U[i, l] = U[i, l] / total
    return U_arr
