"""Downstream linear (SGC-style) evaluation, error-bound checks and coreset baselines.

The classifier is ``Y_hat = F W`` with ``W`` from regularized least squares,
``W = (F^T F + eps I)^-1 F^T Y``. Matrix norms in the bound checks are
spectral (operator 2-) norms.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from . import kernels
from .clustering import ClusterConfig, cluster_counts, kmeanspp_seed, lloyd
from .condense import CondensedGraph
from .graph import fmt_float

BOUND_RTOL = 1e-10


class SingularSystemError(np.linalg.LinAlgError):
    pass


@dataclass(eq=False)
class LinearModel:
    W: np.ndarray
    epsilon: float

    def predict(self, F):
        return np.asarray(F, dtype=np.float64) @ self.W


def fit_linear(F, Y, epsilon=1e-6, sample_weight=None):
    """Closed-form least squares, solved through a Cholesky factorization.

    With ``epsilon == 0`` a rank-deficient ``F`` raises
    :class:`SingularSystemError`; pass a small positive ``epsilon`` instead.
    ``sample_weight`` scales each row's squared residual.
    """
    F = np.asarray(F, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if F.ndim != 2 or F.shape[0] < 1:
        raise ValueError("F must be a non-empty 2-D array")
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != F.shape[0]:
        raise ValueError(f"F has {F.shape[0]} rows but Y has {Y.shape[0]}")
    Fw = F if sample_weight is None else F * np.asarray(sample_weight, dtype=np.float64)[:, None]
    d = F.shape[1]
    if epsilon == 0 and np.linalg.matrix_rank(F) < d:
        raise SingularSystemError(
            "F^T F is singular (rank-deficient features); use epsilon > 0"
        )
    A = Fw.T @ F + epsilon * np.eye(d)
    b = Fw.T @ Y
    try:
        W = scipy.linalg.cho_solve(scipy.linalg.cho_factor(A), b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"normal equations not positive definite ({exc}); "
                                  "use epsilon > 0") from None
    return LinearModel(W, float(epsilon))


def predict_labels(model, F):
    return np.argmax(model.predict(F), axis=1)


def evaluate(model, F_test, y_test):
    """Fraction of rows whose argmax score (ties to lowest class) matches."""
    y_test = np.asarray(y_test)
    if y_test.size == 0:
        return float("nan")
    return float(np.mean(predict_labels(model, F_test) == y_test))


def condensed_accuracy(condensed, F_test, y_test, num_classes, epsilon=1e-6):
    Y = np.eye(num_classes)[condensed.labels]
    return evaluate(fit_linear(condensed.features, Y, epsilon), F_test, y_test)


# -- bound checks --------------------------------------------------------------


@dataclass
class BoundEntry:
    theorem: int
    lhs: float
    rhs: float
    passed: bool
    premise: bool | None = None
    skipped: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def violation(self):
        """A failed inequality whose premises hold."""
        return self.skipped is None and not self.passed and self.premise is not False


def _norm(A):
    return float(np.linalg.norm(np.atleast_2d(A), 2))


def _leq(lhs, rhs):
    return lhs <= rhs + BOUND_RTOL * max(1.0, abs(rhs))


def check_theorem1(F, F_prime, P, W, W_prime):
    """Training-stage prediction distance under the projection ``P^T``.

    Checks ``||P^T F W - F' W'|| <= ||P^T F - F'|| ||W'|| + ||P^T F|| ||W - W'||``;
    the looser form with ``||F||`` in the last term is recorded as ``rhs_main``.
    """
    F, F_prime, P = (np.asarray(a, dtype=np.float64) for a in (F, F_prime, P))
    W, W_prime = np.asarray(W, dtype=np.float64), np.asarray(W_prime, dtype=np.float64)
    KF = P.T @ F
    lhs = _norm(KF @ W - F_prime @ W_prime)
    rep = _norm(KF - F_prime)
    par = _norm(W - W_prime)
    rhs = rep * _norm(W_prime) + _norm(KF) * par
    rhs_main = rep * _norm(W_prime) + _norm(F) * par
    return BoundEntry(1, lhs, rhs, _leq(lhs, rhs), extra={
        "rhs_main": rhs_main, "passed_main": _leq(lhs, rhs_main),
        "representation_distance": rep, "parameter_distance": par,
    })


def check_theorem2(F_test, Y_test, W, W_prime):
    """``||Y - F W'|| <= ||Y - F W|| + ||F|| ||W - W'||`` on test rows."""
    F, Y = np.asarray(F_test, dtype=np.float64), np.asarray(Y_test, dtype=np.float64)
    W, W_prime = np.asarray(W, dtype=np.float64), np.asarray(W_prime, dtype=np.float64)
    lhs = _norm(Y - F @ W_prime)
    base = _norm(Y - F @ W)
    rhs = base + _norm(F) * _norm(W - W_prime)
    return BoundEntry(2, lhs, rhs, _leq(lhs, rhs), extra={"original_error": base})


def theorem3_weights(F, Y, P):
    """``W`` on the full data and ``W'`` on mean centroids with mean labels.

    ``W'`` is the minimum-norm least-squares solution, which equals
    ``(C^T C)^-1 C^T Y'`` whenever ``C^T C`` is invertible.
    """
    F, Y, P = (np.asarray(a, dtype=np.float64) for a in (F, Y, P))
    counts = P.sum(axis=0)
    C = (P.T @ F) / counts[:, None]
    Yp = (P.T @ Y) / counts[:, None]
    W = np.linalg.solve(F.T @ F, F.T @ Y)
    W_prime = np.linalg.lstsq(C, Yp, rcond=None)[0]
    return W, W_prime, C, Yp


def check_theorem3(F, Y, P):
    """Parameter distance against ``const * max(diag(P^T P))^2``.

    The bound's derivation assumes ``lambda_min(C^T C) >= lambda_min(F^T F) /
    max_count^2``; ``premise`` records whether that holds so a failure without
    the premise is not counted as a violation.
    """
    F, Y, P = (np.asarray(a, dtype=np.float64) for a in (F, Y, P))
    A = F.T @ F
    lam = float(np.linalg.eigvalsh(A)[0])
    counts = P.sum(axis=0)
    max_count = float(counts.max())
    if lam <= 1e-10:
        return BoundEntry(3, float("nan"), float("nan"), False, skipped="rank-deficient F",
                          extra={"lambda_min": lam, "max_diag_PtP": max_count})
    W, W_prime, C, _ = theorem3_weights(F, Y, P)
    nF, nY = _norm(F), _norm(Y)
    const = nF * nY * (lam + nF) / lam**2
    lhs = _norm(W - W_prime)
    rhs = const * max_count**2
    lam_B = float(np.linalg.eigvalsh(C.T @ C)[0])
    premise = lam_B >= lam / max_count**2
    return BoundEntry(3, lhs, rhs, _leq(lhs, rhs), premise=premise, extra={
        "constant": const, "lambda_min": lam, "lambda_min_B": lam_B,
        "max_diag_PtP": max_count,
    })


@dataclass(eq=False)
class BoundInstance:
    F: np.ndarray
    Y: np.ndarray
    P: np.ndarray
    centroids: np.ndarray
    centroid_Y: np.ndarray
    F_test: np.ndarray
    Y_test: np.ndarray


def random_instance(rng, n_range=(20, 100), d_range=(3, 10)):
    """Random full-rank features, labels and a class-wise hard k-means assignment."""
    while True:
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        d = int(rng.integers(d_range[0], d_range[1] + 1))
        F = rng.normal(size=(n, d)) + rng.normal(size=d)
        if np.linalg.eigvalsh(F.T @ F)[0] > 1e-8:
            break
    c = int(rng.integers(2, 5))
    y = rng.integers(0, c, size=n)
    y[:c] = np.arange(c)
    y = rng.permutation(y)
    Y = np.eye(c)[y]
    r = float(rng.uniform(0.1, 0.5))
    sizes = np.bincount(y, minlength=c)
    M = cluster_counts(sizes, r)
    cfg = ClusterConfig(r=r, max_iter=100)
    P = np.zeros((n, int(M.sum())))
    cents, cy = [], []
    offset = 0
    for k in range(c):
        rows = np.flatnonzero(y == k)
        init, _ = kmeanspp_seed(F[rows], int(M[k]), rng)
        res = lloyd(F[rows], init, cfg)
        P[rows, offset + res.assignment.labels] = 1.0
        cents.append(res.centroids)
        cy.append(np.full(M[k], k))
        offset += int(M[k])
    n_test = int(rng.integers(10, 50))
    F_test = rng.normal(size=(n_test, d)) + F.mean(axis=0)
    Y_test = np.eye(c)[rng.integers(0, c, size=n_test)]
    return BoundInstance(F, Y, P, np.vstack(cents), np.eye(c)[np.concatenate(cy)],
                         F_test, Y_test)


def bounds_sweep(theorem, instances, seed=0, epsilon=1e-6):
    """Evaluate one theorem on ``instances`` seeded random instances."""
    if theorem not in (1, 2, 3):
        raise ValueError(f"unknown theorem {theorem}")
    out = []
    for i in range(instances):
        rng = np.random.default_rng([int(seed), int(theorem), i])
        inst = random_instance(rng)
        if theorem == 3:
            entry = check_theorem3(inst.F, inst.Y, inst.P)
        else:
            W = fit_linear(inst.F, inst.Y, epsilon).W
            W_prime = fit_linear(inst.centroids, inst.centroid_Y, epsilon).W
            if theorem == 1:
                entry = check_theorem1(inst.F, inst.centroids, inst.P, W, W_prime)
            else:
                entry = check_theorem2(inst.F_test, inst.Y_test, W, W_prime)
        out.append(entry)
    return out


BOUNDS_COLUMNS = ["theorem", "instance", "lhs", "rhs", "pass", "premise"]


def write_bounds_csv(entries, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BOUNDS_COLUMNS)
        seen = {}
        for e in entries:
            i = seen.get(e.theorem, 0)
            seen[e.theorem] = i + 1
            premise = "" if e.premise is None else int(bool(e.premise))
            w.writerow([e.theorem, i, fmt_float(e.lhs), fmt_float(e.rhs),
                        "skip" if e.skipped else int(e.passed), premise])


# -- coreset baselines -----------------------------------------------------------


def _kcenter(X, budget, start):
    chosen = [int(start)]
    d2 = kernels.sq_dist_to_point(X, X[start])
    for _ in range(budget - 1):
        d2[chosen[-1]] = -1.0
        nxt = int(np.argmax(d2))
        chosen.append(nxt)
        d2 = np.minimum(d2, kernels.sq_dist_to_point(X, X[nxt]))
    return np.asarray(chosen, dtype=np.int64)


def kcenter_greedy(X, budget, start=0):
    """Greedy farthest-point selection starting from row ``start``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if budget > X.shape[0]:
        raise ValueError(f"budget {budget} exceeds {X.shape[0]} points")
    return _kcenter(X, budget, start)


def herding(X, budget):
    """Greedy mean matching: each pick moves the running mean closest to the class mean."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    if budget > n:
        raise ValueError(f"budget {budget} exceeds {n} points")
    mu = X.mean(axis=0)
    total = np.zeros(X.shape[1])
    free = np.ones(n, dtype=bool)
    chosen = []
    for t in range(1, budget + 1):
        cand = (total[None, :] + X) / t
        gap = kernels.sq_dist_to_point(cand, mu)
        gap[~free] = np.inf
        i = int(np.argmin(gap))
        chosen.append(i)
        free[i] = False
        total += X[i]
    return np.asarray(chosen, dtype=np.int64)


BASELINES = ("random", "kcenter", "herding")


def coreset_baselines(F_train, y_train, r, method, seed=0, node_ids=None, num_classes=None):
    """Select real training nodes per class as a condensed graph."""
    if method not in BASELINES:
        raise ValueError(f"method must be one of {BASELINES}, got {method!r}")
    F_train = np.asarray(F_train, dtype=np.float64)
    y_train = np.asarray(y_train, dtype=np.int64)
    if node_ids is None:
        node_ids = np.arange(y_train.size)
    c = num_classes or int(y_train.max()) + 1
    sizes = np.bincount(y_train, minlength=c)
    M = cluster_counts(sizes, r)
    feats, labs, prov = [], [], []
    for k in range(c):
        rows = np.flatnonzero(y_train == k)
        rng = np.random.default_rng([int(seed), k])
        if method == "random":
            pick = np.sort(rng.choice(rows.size, size=int(M[k]), replace=False))
        elif method == "kcenter":
            pick = kcenter_greedy(F_train[rows], int(M[k]), start=int(rng.integers(rows.size)))
        else:
            pick = herding(F_train[rows], int(M[k]))
        feats.append(F_train[rows[pick]])
        labs.append(np.full(pick.size, k, dtype=np.int64))
        prov.extend([[(int(node_ids[rows[i]]), 1.0)] for i in pick])
    return CondensedGraph(np.vstack(feats), np.concatenate(labs), prov,
                          np.ones(int(M.sum())))
