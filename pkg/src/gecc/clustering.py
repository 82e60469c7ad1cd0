"""Class-wise clustering of node representations.

Hard k-means (Lloyd) and fuzzy c-means, k-means++ and incremental seeding, and
restart selection by the balanced SSE

    J(P, C) = ||F - P C||^2 + w * ||P^T 1 - u||^2

where ``u`` is the per-class perfectly balanced cluster size ``n_k / M_k``.
"""
from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels

HARD = "hard"
FUZZY = "fuzzy"
SEED_LAW_QUARTIC = "quartic"
SEED_LAW_CLASSIC = "classic"


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class ClusterConfig:
    r: float = 0.5
    mode: str = HARD
    fuzziness: float = 1.1
    repeats: int = 10
    max_iter: int = 300
    tol: float = 1e-8
    seed: int = 0
    balance_weight: float = 1.0
    seed_law: str = SEED_LAW_QUARTIC

    def __post_init__(self):
        if not 0.0 < self.r <= 1.0:
            raise ConfigurationError(f"reduction rate must lie in (0, 1], got {self.r}")
        if self.mode not in (HARD, FUZZY):
            raise ConfigurationError(f"mode must be 'hard' or 'fuzzy', got {self.mode!r}")
        if self.fuzziness < 1.0:
            raise ConfigurationError("fuzziness must be >= 1")
        if self.repeats < 1 or self.max_iter < 1:
            raise ConfigurationError("repeats and max_iter must be >= 1")
        if self.tol < 0:
            raise ConfigurationError("tol must be non-negative")
        if self.seed_law not in (SEED_LAW_QUARTIC, SEED_LAW_CLASSIC):
            raise ConfigurationError(f"seed_law must be 'quartic' or 'classic', got {self.seed_law!r}")

    @property
    def soft(self):
        return self.mode == FUZZY and self.fuzziness > 1.0


@dataclass(eq=False)
class Assignment:
    """Node-to-cluster assignment for one class.

    ``labels`` is the hard cluster index (the argmax for soft assignments);
    ``membership`` holds the row-stochastic soft matrix when present.
    """

    labels: np.ndarray
    k: int
    membership: np.ndarray | None = None

    @property
    def soft(self):
        return self.membership is not None

    @property
    def counts(self):
        """Column sums of P, i.e. the diagonal of ``D_P``."""
        if self.membership is not None:
            return self.membership.sum(axis=0)
        return np.bincount(self.labels, minlength=self.k).astype(np.float64)

    def matrix(self):
        if self.membership is not None:
            return self.membership.copy()
        P = np.zeros((self.labels.size, self.k))
        P[np.arange(self.labels.size), self.labels] = 1.0
        return P

    def reconstruct(self, C):
        """``P @ C``."""
        if self.membership is not None:
            return self.membership @ C
        return C[self.labels]


@dataclass(eq=False)
class ClusterResult:
    assignment: Assignment
    centroids: np.ndarray
    iterations: int
    sse: float
    history: list = field(default_factory=list)
    init_centroids: np.ndarray | None = None


class BalancedSSE(NamedTuple):
    sse: float
    penalty: float
    J: float


@dataclass(eq=False)
class ClassClustering:
    """Outcome of the restart loop for one class."""

    best: ClusterResult
    objective: BalancedSSE
    best_run: int
    run_objectives: list
    run_iterations: list
    warm_iterations: int | None = None
    seed_indices: np.ndarray | None = None
    runs: list | None = None


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def worker_count():
    """Worker threads for restart-level parallelism (``GECC_THREADS``)."""
    env = os.environ.get("GECC_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(4, os.cpu_count() or 1))


# -- sizing ----------------------------------------------------------------


def cluster_counts(class_sizes, r):
    """Clusters per class, ``max(1, round(n_k * r))`` with halves rounded up."""
    sizes = np.asarray(class_sizes, dtype=np.int64)
    if not 0.0 < r <= 1.0:
        raise ConfigurationError(f"reduction rate must lie in (0, 1], got {r}")
    if np.any(sizes <= 0):
        missing = np.flatnonzero(sizes <= 0).tolist()
        raise ConfigurationError(f"classes {missing} have no training nodes")
    M = np.floor(sizes * r + 0.5).astype(np.int64)
    return np.clip(M, 1, sizes)


def balance_target(class_sizes, M):
    """Blockwise-constant ``u``: ``M_k`` copies of ``n_k / M_k`` per class."""
    sizes = np.asarray(class_sizes, dtype=np.float64)
    M = np.asarray(M, dtype=np.int64)
    return np.repeat(sizes / M, M)


# -- seeding ---------------------------------------------------------------


def seed_weights(points, centers, law=SEED_LAW_CLASSIC):
    """Unnormalized selection weights for the next seed.

    ``D(x) = min_c ||x - c||^2``. The classic k-means++ law weights by ``D``;
    the quartic law squares it again (weight ``D^2``).
    """
    X = np.asarray(points, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, X.shape[1])
    if centers.shape[0] == 0:
        return np.ones(X.shape[0])
    _, d2 = kernels.assign_nearest(X, centers)
    return d2 * d2 if law == SEED_LAW_QUARTIC else d2


def _draw(weights, taken, rng):
    total = weights.sum()
    if not total > 0 or not np.isfinite(total):
        free = np.flatnonzero(~taken)
        return int(free[rng.integers(free.size)])
    cum = np.cumsum(weights)
    idx = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    if idx >= weights.size or weights[idx] == 0:
        idx = int(np.flatnonzero(weights > 0)[-1])
    return idx


def _sample_seeds(X, prior, count, rng, law):
    n = X.shape[0]
    taken = np.zeros(n, dtype=bool)
    chosen = []
    if prior.shape[0]:
        d2 = kernels.assign_nearest(X, prior)[1]
    else:
        d2 = None
    for _ in range(count):
        if d2 is None:
            idx = int(rng.integers(n))
        else:
            w = d2 * d2 if law == SEED_LAW_QUARTIC else d2.copy()
            w[taken] = 0.0
            idx = _draw(w, taken, rng)
        chosen.append(idx)
        taken[idx] = True
        dnew = kernels.sq_dist_to_point(X, X[idx])
        d2 = dnew if d2 is None else np.minimum(d2, dnew)
    return np.asarray(chosen, dtype=np.int64)


def kmeanspp_seed(points, k, rng):
    """k-means++ seeding; returns ``(centroids, row_indices)``."""
    X = np.ascontiguousarray(points, dtype=np.float64)
    if k > X.shape[0]:
        raise ValueError(f"cannot pick {k} seeds from {X.shape[0]} points")
    idx = _sample_seeds(X, np.empty((0, X.shape[1])), k, _rng(rng), SEED_LAW_CLASSIC)
    return X[idx].copy(), idx


def incremental_seed(points_new, prior, grow_by, rng, law=SEED_LAW_QUARTIC):
    """Extend ``prior`` with ``grow_by`` seeds drawn from ``points_new``.

    Each new seed is drawn without replacement with probability proportional
    to its distance weight against the centroids held so far (prior plus the
    seeds already drawn). Returns ``(prior + new seeds, new_row_indices)``.
    """
    X = np.ascontiguousarray(points_new, dtype=np.float64)
    d = X.shape[1] if X.ndim == 2 else np.asarray(prior).shape[-1]
    prior = np.asarray(prior, dtype=np.float64).reshape(-1, d)
    if grow_by < 0:
        raise ValueError("grow_by must be non-negative")
    if grow_by == 0:
        return prior.copy(), np.empty(0, dtype=np.int64)
    if grow_by > X.shape[0]:
        raise ValueError(f"cannot draw {grow_by} new seeds from {X.shape[0]} new points")
    idx = _sample_seeds(X, prior, grow_by, _rng(rng), law)
    return np.vstack([prior, X[idx]]), idx


# -- Lloyd / fuzzy c-means ---------------------------------------------------


def _hard_sse(X, labels, C):
    diff = X - C[labels]
    return float(np.einsum("ij,ij->", diff, diff))


def _repair_empty(labels, mind, k):
    counts = np.bincount(labels, minlength=k)
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return labels
    labels = labels.copy()
    mind = mind.copy()
    for j in empty:
        donors = counts[labels] > 1
        cand = np.where(donors, mind, -np.inf)
        i = int(np.argmax(cand))
        counts[labels[i]] -= 1
        labels[i] = j
        counts[j] += 1
        mind[i] = -np.inf
    return labels


def lloyd(points, init, cfg=None):
    """Hard k-means from the given initial centroids.

    Stops once the summed squared centroid shift drops to ``cfg.tol`` or after
    ``cfg.max_iter`` iterations. Returned centroids are the exact means of the
    returned assignment.
    """
    cfg = cfg or ClusterConfig()
    X = np.ascontiguousarray(points, dtype=np.float64)
    C = np.array(init, dtype=np.float64, copy=True)
    k = C.shape[0]
    if k > X.shape[0] or k < 1:
        raise ValueError(f"need 1 <= k <= {X.shape[0]} centroids, got {k}")
    init_c = C.copy()
    history = []
    labels = None
    it = 0
    for it in range(1, cfg.max_iter + 1):
        labels, mind = kernels.assign_nearest(X, C)
        labels = _repair_empty(labels, mind, k)
        sums, counts = kernels.cluster_sums(X, labels, k)
        C_new = sums / counts[:, None]
        shift = float(np.sum((C_new - C) ** 2))
        C = C_new
        history.append(_hard_sse(X, labels, C))
        if shift <= cfg.tol:
            break
    return ClusterResult(Assignment(labels, k), C, it, history[-1], history, init_c)


def fuzzy_cmeans(points, init, cfg=None):
    """Fuzzy c-means (Bezdek); ``fuzziness == 1`` falls back to :func:`lloyd`.

    Internal centroid updates weight members by ``u ** m``. The returned
    centroids are plain membership-weighted means ``D_P^-1 P^T F`` of the final
    memberships, and ``sse`` is the hard SSE of the argmax assignment.
    """
    cfg = cfg or ClusterConfig(mode=FUZZY)
    m = float(cfg.fuzziness)
    if m <= 1.0:
        return lloyd(points, init, cfg)
    X = np.ascontiguousarray(points, dtype=np.float64)
    C = np.array(init, dtype=np.float64, copy=True)
    k = C.shape[0]
    if k > X.shape[0] or k < 1:
        raise ValueError(f"need 1 <= k <= {X.shape[0]} centroids, got {k}")
    init_c = C.copy()
    history = []
    it = 0
    for it in range(1, cfg.max_iter + 1):
        U = kernels.fcm_memberships(X, C, m)
        Um = U**m
        sums, mass = kernels.weighted_sums(X, Um)
        C_new = C.copy()
        live = mass > 0
        C_new[live] = sums[live] / mass[live, None]
        shift = float(np.sum((C_new - C) ** 2))
        C = C_new
        history.append(float(np.sum(Um * _pairwise_sq(X, C))))
        if shift <= cfg.tol:
            break
    U = kernels.fcm_memberships(X, C, m)
    sums, mass = kernels.weighted_sums(X, U)
    C_out = C.copy()
    live = mass > 0
    C_out[live] = sums[live] / mass[live, None]
    labels = np.argmax(U, axis=1).astype(np.int64)
    return ClusterResult(Assignment(labels, k, U), C_out, it, _hard_sse(X, labels, C_out),
                         history, init_c)


def _pairwise_sq(X, C):
    return np.stack([kernels.sq_dist_to_point(X, c) for c in C], axis=1)


def run_clustering(points, init, cfg):
    if cfg.soft:
        return fuzzy_cmeans(points, init, cfg)
    return lloyd(points, init, cfg)


# -- objective and restart selection ------------------------------------------


def balanced_sse(F, P, C, u, weight=1.0):
    """Reconstruction error, size penalty and their weighted sum."""
    F = np.asarray(F, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if isinstance(P, Assignment):
        recon, counts = P.reconstruct(C), P.counts
    else:
        P = np.asarray(P, dtype=np.float64)
        if P.shape != (F.shape[0], C.shape[0]):
            raise ValueError(f"P has shape {P.shape}, expected {(F.shape[0], C.shape[0])}")
        recon, counts = P @ C, P.sum(axis=0)
    if recon.shape != F.shape or counts.shape != u.shape:
        raise ValueError("F, P, C and u have inconsistent shapes")
    diff = F - recon
    sse = float(np.einsum("ij,ij->", diff, diff))
    dev = counts - u
    penalty = float(dev @ dev)
    return BalancedSSE(sse, penalty, sse + weight * penalty)


def cluster_class(points, M_k, cfg, warm=None, seed=None, new_rows=None, keep_runs=False):
    """Run ``cfg.repeats`` clusterings of one class and keep the lowest ``J``.

    With ``warm`` (prior centroids) the first run is seeded incrementally from
    them, drawing the missing ``M_k - len(warm)`` seeds from ``new_rows``; the
    remaining runs use k-means++. Each run gets its own child of ``seed`` (a
    ``SeedSequence`` or entropy), so results do not depend on thread count.
    ``keep_runs`` retains every run's :class:`ClusterResult` for inspection.
    """
    X = np.ascontiguousarray(points, dtype=np.float64)
    n = X.shape[0]
    if M_k > n:
        raise ConfigurationError(f"{M_k} clusters requested for {n} points")
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(cfg.seed if seed is None else seed)
    streams = seed.spawn(cfg.repeats)
    u = np.full(M_k, n / M_k)

    if warm is not None:
        warm = np.asarray(warm, dtype=np.float64).reshape(-1, X.shape[1])
        if warm.shape[0] == 0:
            warm = None
        elif warm.shape[0] > M_k:
            warnings.warn(
                f"{warm.shape[0]} prior centroids exceed the target {M_k}; cold start instead",
                stacklevel=2,
            )
            warm = None

    def run(i):
        rng = np.random.default_rng(streams[i])
        if i == 0 and warm is not None:
            grow = M_k - warm.shape[0]
            rows = np.arange(n) if new_rows is None else np.asarray(new_rows, dtype=np.int64)
            if grow > rows.size:
                rows = np.arange(n)
            init, picked = incremental_seed(X[rows], warm, grow, rng, cfg.seed_law)
            picked = rows[picked]
        else:
            init, picked = kmeanspp_seed(X, M_k, rng)
        res = run_clustering(X, init, cfg)
        return res, balanced_sse(X, res.assignment, res.centroids, u, cfg.balance_weight), picked

    workers = min(worker_count(), cfg.repeats)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(run, range(cfg.repeats)))
    else:
        runs = [run(i) for i in range(cfg.repeats)]

    objectives = [obj.J for _, obj, _ in runs]
    best = int(np.argmin(objectives))
    res, obj, picked = runs[best]
    return ClassClustering(
        best=res,
        objective=obj,
        best_run=best,
        run_objectives=objectives,
        run_iterations=[r.iterations for r, _, _ in runs],
        warm_iterations=runs[0][0].iterations if warm is not None else None,
        seed_indices=picked,
        runs=[r for r, _, _ in runs] if keep_runs else None,
    )


def class_seed(seed, step, cls):
    """Independent seed stream for (base seed, step, class)."""
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFF, int(step), int(cls)])
