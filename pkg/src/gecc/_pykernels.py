"""NumPy implementations of the hot loops.

Reference semantics for ``gecc._ckernels``. Accumulations follow the same order
as the compiled loops (features innermost, points ascending), which keeps the
two backends bit-identical for everything except ``fcm_memberships`` (``pow``
may differ in the last ulp). ``weighted_sums`` is shared by both backends.
"""
import numpy as np

_CHUNK = 2048


def spmm_csr(indptr, indices, data, X):
    n = indptr.shape[0] - 1
    out = np.zeros((n, X.shape[1]), dtype=np.float64)
    lengths = np.diff(indptr)
    if n == 0 or lengths.max(initial=0) == 0:
        return out
    # walk the s-th stored entry of every row at once so each row still
    # accumulates its neighbours in storage order
    for s in range(int(lengths.max())):
        rows = np.flatnonzero(lengths > s)
        pos = indptr[rows] + s
        out[rows] += data[pos][:, None] * X[indices[pos]]
    return out


def _sq_dists(Xc, C):
    acc = np.zeros((Xc.shape[0], C.shape[0]), dtype=np.float64)
    for j in range(Xc.shape[1]):
        t = Xc[:, j, None] - C[None, :, j]
        acc += t * t
    return acc


def assign_nearest(X, C):
    n = X.shape[0]
    labels = np.empty(n, dtype=np.int64)
    mind = np.empty(n, dtype=np.float64)
    for start in range(0, n, _CHUNK):
        d2 = _sq_dists(X[start:start + _CHUNK], C)
        arg = d2.argmin(axis=1)
        labels[start:start + _CHUNK] = arg
        mind[start:start + _CHUNK] = d2[np.arange(d2.shape[0]), arg]
    return labels, mind


def sq_dist_to_point(X, c):
    acc = np.zeros(X.shape[0], dtype=np.float64)
    for j in range(X.shape[1]):
        t = X[:, j] - c[j]
        acc += t * t
    return acc


def cluster_sums(X, labels, k):
    sums = np.zeros((k, X.shape[1]), dtype=np.float64)
    np.add.at(sums, labels, X)
    counts = np.bincount(labels, minlength=k).astype(np.float64)
    return sums, counts


def weighted_sums(X, W):
    return W.T @ X, W.sum(axis=0)


def fcm_memberships(X, C, fuzziness):
    n, k = X.shape[0], C.shape[0]
    expo = 1.0 / (fuzziness - 1.0)
    U = np.zeros((n, k), dtype=np.float64)
    for start in range(0, n, _CHUNK):
        d2 = _sq_dists(X[start:start + _CHUNK], C)
        arg = d2.argmin(axis=1)
        rows = np.arange(d2.shape[0])
        best = d2[rows, arg]
        block = np.zeros_like(d2)
        hit = best == 0.0
        block[rows[hit], arg[hit]] = 1.0
        free = ~hit
        if free.any():
            ratio = np.power(best[free, None] / d2[free], expo)
            total = np.zeros(ratio.shape[0])
            for l in range(k):
                total += ratio[:, l]
            block[free] = ratio / total[:, None]
        U[start:start + _CHUNK] = block
    return U
