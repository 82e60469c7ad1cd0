"""Stochastic-block-model datasets for desk-scale experiments."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .graph import (
    TRANSDUCTIVE,
    BatchStream,
    Dataset,
    LabelSet,
    SparseGraph,
    save_graph,
    stratified_batches,
    stratified_split,
    write_features,
    write_labels,
    write_splits,
    write_stream,
)


@dataclass(frozen=True)
class SyntheticSpec:
    """SBM structure plus Gaussian class features.

    Each class mean is a random sign vector scaled by ``mean_scale``; with
    ``subclusters > 1`` nodes are further spread around that many
    sub-means at distance ``subcluster_spread``.
    """

    classes: int = 2
    nodes_per_class: int = 100
    p_in: float = 0.5
    p_out: float = 0.01
    dim: int = 8
    sigma: float = 0.1
    mean_scale: float = 1.0
    subclusters: int = 1
    subcluster_spread: float = 0.0
    batches: int = 5
    mode: str = TRANSDUCTIVE
    split: tuple = (0.6, 0.2, 0.2)

    def __post_init__(self):
        if self.classes < 1 or self.nodes_per_class < 1:
            raise ValueError("synthetic graph needs at least one class and one node per class")
        if not (0.0 <= self.p_in <= 1.0 and 0.0 <= self.p_out <= 1.0):
            raise ValueError("edge probabilities must lie in [0, 1]")
        if self.sigma < 0 or self.subcluster_spread < 0:
            raise ValueError("noise scales must be non-negative")
        if self.batches < 1 or self.subclusters < 1 or self.dim < 1:
            raise ValueError("batches, subclusters and dim must be >= 1")
        object.__setattr__(self, "split", tuple(float(s) for s in self.split))

    @property
    def num_nodes(self):
        return self.classes * self.nodes_per_class

    def to_dict(self):
        return asdict(self)


def _triu_decode(k, n):
    """Row/column of the ``k``-th strictly-upper-triangular entry (row-major)."""
    k = np.asarray(k, dtype=np.int64)
    i = n - 2 - np.floor(np.sqrt(-8.0 * k + 4.0 * n * (n - 1) - 7) / 2.0 - 0.5).astype(np.int64)
    j = k + i + 1 - n * (n - 1) // 2 + (n - i) * ((n - i) - 1) // 2
    return i, j


def _sample_pairs(total, p, rng):
    count = rng.binomial(total, p) if total > 0 else 0
    if count == 0:
        return np.empty(0, dtype=np.int64)
    return np.sort(rng.choice(total, size=count, replace=False))


def sbm_edges(block_sizes, p_in, p_out, rng):
    """Independent-edge SBM; returns ``(src, dst)`` with ``src < dst``."""
    starts = np.concatenate([[0], np.cumsum(block_sizes)])
    src, dst = [], []
    for a, na in enumerate(block_sizes):
        k = _sample_pairs(na * (na - 1) // 2, p_in, rng)
        i, j = _triu_decode(k, na)
        src.append(i + starts[a])
        dst.append(j + starts[a])
        for b in range(a + 1, len(block_sizes)):
            nb = block_sizes[b]
            k = _sample_pairs(na * nb, p_out, rng)
            src.append(k // nb + starts[a])
            dst.append(k % nb + starts[b])
    return np.concatenate(src), np.concatenate(dst)


def make_sbm(spec: SyntheticSpec, seed=0):
    rng = np.random.default_rng(seed)
    c, npc = spec.classes, spec.nodes_per_class
    y = np.repeat(np.arange(c), npc)
    src, dst = sbm_edges([npc] * c, spec.p_in, spec.p_out, rng)
    graph = SparseGraph.from_edges(src, dst, spec.num_nodes)

    means = spec.mean_scale * rng.choice([-1.0, 1.0], size=(c, spec.dim))
    X = means[y].copy()
    if spec.subclusters > 1:
        offsets = spec.subcluster_spread * rng.normal(size=(c, spec.subclusters, spec.dim))
        sub = rng.integers(0, spec.subclusters, size=y.size)
        X += offsets[y, sub]
    X += spec.sigma * rng.normal(size=X.shape)

    train, val, test = stratified_split(y, spec.split, rng)
    labels = LabelSet(y, c, train, val, test)
    batches = stratified_batches(train, y, spec.batches, rng)
    stream = BatchStream(spec.mode, tuple(batches))
    return Dataset(graph, X, labels, stream)


def write_dataset(data: Dataset, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_graph(data.graph, out / "graph.edges")
    write_features(data.features, out / "features.csv")
    write_labels(data.labels.labels, out / "labels.txt")
    write_splits(
        {"train": data.labels.train_idx, "val": data.labels.val_idx, "test": data.labels.test_idx},
        out / "splits.json",
    )
    if data.stream is not None:
        write_stream(data.stream, out / "stream.json")
    return out
