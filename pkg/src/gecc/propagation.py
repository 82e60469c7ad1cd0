"""Parameter-free multi-hop feature propagation.

Representations are ``F = sum_k alpha_k * A_hat^k X`` with the symmetric
self-loop normalization ``A_hat = D~^-1/2 (A + I) D~^-1/2``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .graph import SparseGraph

ALPHA_RANGE = (-0.3, 0.9)
DEFAULT_ALPHAS = (0.2, 0.3, 0.5)


@dataclass(frozen=True)
class PropagationConfig:
    """Propagation depth ``K`` and the ``K + 1`` hop weights."""

    K: int = 2
    alphas: tuple = DEFAULT_ALPHAS

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        object.__setattr__(self, "alphas", alphas)
        if self.K < 0:
            raise ValueError("K must be non-negative")
        if len(alphas) != self.K + 1:
            raise ValueError(f"need K + 1 = {self.K + 1} alphas, got {len(alphas)}")
        if not any(alphas):
            raise ValueError("at least one alpha must be nonzero")
        if not all(np.isfinite(alphas)):
            raise ValueError("alphas must be finite")
        lo, hi = ALPHA_RANGE
        if any(a < lo or a > hi for a in alphas):
            warnings.warn(
                f"alphas {alphas} fall outside the usual tuning range [{lo}, {hi}]",
                stacklevel=3,
            )

    @classmethod
    def parse(cls, alphas, K=None):
        """Build from a comma-separated string (``"0.3,-0.2,0.9"``) or a sequence."""
        if isinstance(alphas, str):
            alphas = [float(tok) for tok in alphas.split(",") if tok.strip()]
        alphas = tuple(alphas)
        if K is None:
            K = len(alphas) - 1
        return cls(int(K), alphas)

    @property
    def is_identity(self):
        return self.alphas[0] == 1.0 and not any(self.alphas[1:])


def normalize(graph: SparseGraph) -> SparseGraph:
    """Symmetrically normalized adjacency with self-loops added first."""
    n = graph.num_nodes
    rows = np.concatenate([graph.row_ids(), np.arange(n, dtype=np.int64)])
    cols = np.concatenate([graph.indices, np.arange(n, dtype=np.int64)])
    vals = np.concatenate([graph.data, np.ones(n)])
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    # merge an existing self-loop with the added identity
    starts = np.flatnonzero(np.r_[True, (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])])
    rows, cols, vals = rows[starts], cols[starts], np.add.reduceat(vals, starts)

    deg = np.bincount(rows, weights=vals, minlength=n)
    vals = vals / np.sqrt(deg[rows] * deg[cols])
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return SparseGraph(n, indptr, cols, vals)


def propagate(graph_hat: SparseGraph, X, cfg: PropagationConfig | None = None):
    """Weighted sum of ``A_hat^k X`` for ``k = 0..K``.

    Evaluated in Horner form, ``F = a_0 X + A_hat (a_1 X + A_hat (a_2 X + ...))``,
    so only ``K`` sparse-dense products and one work buffer are needed and the
    matrix powers are never formed.
    """
    cfg = cfg or PropagationConfig()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != graph_hat.num_nodes:
        raise ValueError(
            f"feature matrix has shape {X.shape}, graph has {graph_hat.num_nodes} nodes"
        )
    alphas = cfg.alphas
    F = alphas[-1] * X
    for a in reversed(alphas[:-1]):
        F = kernels.spmm_csr(graph_hat.indptr, graph_hat.indices, graph_hat.data, F)
        if a:
            F += a * X
    if not np.all(np.isfinite(F)):
        raise FloatingPointError("propagation produced non-finite values")
    return F


def propagate_graph(graph: SparseGraph, X, cfg: PropagationConfig | None = None):
    return propagate(normalize(graph), X, cfg)
