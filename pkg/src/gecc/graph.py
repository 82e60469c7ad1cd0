"""Sparse graph storage, label bookkeeping and evolving snapshots.

Nodes are 0-indexed everywhere. Graphs are stored symmetrized in CSR form with
sorted column indices per row; input self-loops are dropped (the normalization
step adds its own).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TRANSDUCTIVE = "transductive"
INDUCTIVE = "inductive"


class GraphFormatError(ValueError):
    """Malformed input file; carries the offending path and line number."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


@dataclass(frozen=True, eq=False)
class SparseGraph:
    """Symmetric weighted graph in CSR form.

    ``indptr`` has length ``num_nodes + 1``; row ``i`` stores its neighbours in
    ``indices[indptr[i]:indptr[i+1]]`` (sorted, unique) with weights in ``data``.
    """

    num_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        for name, dtype in (("indptr", np.int64), ("indices", np.int64), ("data", np.float64)):
            arr = np.ascontiguousarray(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.indptr.shape != (self.num_nodes + 1,):
            raise ValueError("indptr must have num_nodes + 1 entries")
        if self.indptr[0] != 0 or np.any(np.diff(self.indptr) < 0):
            raise ValueError("indptr must start at 0 and be non-decreasing")
        if self.indptr[-1] != self.indices.size or self.indices.size != self.data.size:
            raise ValueError("indptr[-1] must equal the number of stored entries")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= self.num_nodes):
            raise IndexError("column index out of range")

    @classmethod
    def from_edges(cls, src, dst, num_nodes, weights=None, keep_self_loops=False):
        """Build a symmetrized graph from an edge list.

        Duplicate pairs collapse to one entry (the first weight seen wins).
        """
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if weights is None:
            weights = np.ones(src.size)
        weights = np.asarray(weights, dtype=np.float64).ravel()
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= num_nodes):
            raise IndexError(f"edge endpoint outside [0, {num_nodes})")
        if not keep_self_loops:
            keep = src != dst
            src, dst, weights = src[keep], dst[keep], weights[keep]
        loops = src == dst
        rows = np.concatenate([src, dst[~loops]])
        cols = np.concatenate([dst, src[~loops]])
        vals = np.concatenate([weights, weights[~loops]])
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        if rows.size:
            first = np.ones(rows.size, dtype=bool)
            first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
            rows, cols, vals = rows[first], cols[first], vals[first]
        indptr = np.zeros(num_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=num_nodes), out=indptr[1:])
        return cls(int(num_nodes), indptr, cols, vals)

    @property
    def nnz(self):
        return int(self.indices.size)

    @property
    def num_edges(self):
        """Undirected edge count (self-loops count once)."""
        rows = self.row_ids()
        loops = int(np.count_nonzero(rows == self.indices))
        return (self.nnz - loops) // 2 + loops

    def row_ids(self):
        return np.repeat(np.arange(self.num_nodes, dtype=np.int64), np.diff(self.indptr))

    def degrees(self):
        """Weighted degree (row sums)."""
        return np.bincount(self.row_ids(), weights=self.data, minlength=self.num_nodes)

    def edge_list(self):
        """Upper-triangular ``(u, v)`` pairs with ``u <= v``."""
        rows = self.row_ids()
        keep = rows <= self.indices
        return rows[keep], self.indices[keep]

    def to_dense(self):
        out = np.zeros((self.num_nodes, self.num_nodes))
        out[self.row_ids(), self.indices] = self.data
        return out

    def to_scipy(self):
        import scipy.sparse as sp

        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.num_nodes,) * 2)

    def is_symmetric(self):
        rows = self.row_ids()
        fwd = {(int(r), int(c)): float(v) for r, c, v in zip(rows, self.indices, self.data)}
        return all(fwd.get((c, r)) == v for (r, c), v in fwd.items())

    def induced_subgraph(self, nodes):
        """Subgraph on ``nodes`` (any order), relabelled to ``0..len(nodes)-1``."""
        nodes = np.asarray(nodes, dtype=np.int64)
        remap = np.full(self.num_nodes, -1, dtype=np.int64)
        remap[nodes] = np.arange(nodes.size)
        rows = remap[self.row_ids()]
        cols = remap[self.indices]
        keep = (rows >= 0) & (cols >= 0)
        return SparseGraph.from_edges(
            rows[keep], cols[keep], nodes.size, weights=self.data[keep], keep_self_loops=True
        )

    def fingerprint(self):
        h = hashlib.sha1()
        h.update(np.int64(self.num_nodes).tobytes())
        for arr in (self.indptr, self.indices, self.data):
            h.update(arr.tobytes())
        return h.hexdigest()

    def same_structure(self, other):
        return (
            self.num_nodes == other.num_nodes
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
        )


@dataclass(frozen=True, eq=False)
class LabelSet:
    labels: np.ndarray
    num_classes: int
    train_idx: np.ndarray
    val_idx: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    test_idx: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self):
        for name in ("labels", "train_idx", "val_idx", "test_idx"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.labels.size
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError(f"labels must lie in [0, {self.num_classes})")
        seen = np.zeros(n, dtype=bool)
        for name in ("train_idx", "val_idx", "test_idx"):
            idx = getattr(self, name)
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise IndexError(f"{name} has an index outside [0, {n})")
            if np.any(seen[idx]) or np.unique(idx).size != idx.size:
                raise ValueError("train/val/test splits must be disjoint")
            seen[idx] = True

    @property
    def num_nodes(self):
        return self.labels.size

    def train_counts(self):
        return np.bincount(self.labels[self.train_idx], minlength=self.num_classes)

    def one_hot(self, idx=None):
        y = self.labels if idx is None else self.labels[idx]
        return np.eye(self.num_classes)[y]


@dataclass(frozen=True)
class BatchStream:
    mode: str
    batches: tuple

    def __post_init__(self):
        if self.mode not in (TRANSDUCTIVE, INDUCTIVE):
            raise ValueError(f"stream mode must be {TRANSDUCTIVE!r} or {INDUCTIVE!r}, got {self.mode!r}")
        batches = tuple(np.unique(np.asarray(b, dtype=np.int64)) for b in self.batches)
        if not batches:
            raise ValueError("stream has no batches")
        allnodes = np.concatenate(batches)
        if np.unique(allnodes).size != allnodes.size:
            raise ValueError("stream batches must be pairwise disjoint")
        object.__setattr__(self, "batches", batches)

    def __len__(self):
        return len(self.batches)

    def cumulative(self, t):
        return np.sort(np.concatenate(self.batches[:t]))


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Graph, features and labels visible at step ``t``.

    ``node_ids[i]`` is the original index of snapshot node ``i``; for
    transductive streams it is the identity.
    """

    step: int
    graph: SparseGraph
    features: np.ndarray
    labels: LabelSet
    node_ids: np.ndarray
    new_train: np.ndarray  # snapshot-local indices of the nodes added by batch t

    def to_local(self, original):
        lookup = {int(o): i for i, o in enumerate(self.node_ids)}
        return np.array([lookup[int(o)] for o in np.atleast_1d(original)], dtype=np.int64)


def snapshot(full, features, labels, stream, t):
    """Assemble snapshot ``t`` (1-based) of an evolving stream."""
    if not 1 <= t <= len(stream):
        raise IndexError(f"step {t} outside 1..{len(stream)}")
    features = np.asarray(features, dtype=np.float64)
    if stream.mode == TRANSDUCTIVE:
        if any(b.size and b.max() >= full.num_nodes for b in stream.batches):
            raise IndexError("transductive batch refers to a node outside the graph")
        train = stream.cumulative(t)
        labs = LabelSet(labels.labels, labels.num_classes, train, labels.val_idx, labels.test_idx)
        return Snapshot(t, full, features, labs, np.arange(full.num_nodes), stream.batches[t - 1])

    node_ids = stream.cumulative(t)
    sub = full.induced_subgraph(node_ids)
    train_mask = np.isin(node_ids, labels.train_idx)
    labs = LabelSet(labels.labels[node_ids], labels.num_classes, np.flatnonzero(train_mask))
    new_local = np.searchsorted(node_ids, stream.batches[t - 1])
    new_local = new_local[train_mask[new_local]]
    return Snapshot(t, sub, features[node_ids], labs, node_ids, new_local)


def stratified_batches(idx, labels, m, rng):
    """Split ``idx`` into ``m`` disjoint batches that each keep the class mix.

    Within each class the nodes are shuffled and cut so that the cumulative
    count after ``t`` batches is ``round(n_k * t / m)``, hence never more than
    half a node away from exact proportionality.
    """
    idx = np.asarray(idx, dtype=np.int64)
    labels = np.asarray(labels)
    parts = [[] for _ in range(m)]
    for k in np.unique(labels[idx]):
        members = rng.permutation(idx[labels[idx] == k])
        cuts = np.floor(members.size * np.arange(m + 1) / m + 0.5).astype(np.int64)
        for b in range(m):
            parts[b].append(members[cuts[b]:cuts[b + 1]])
    return [np.sort(np.concatenate(p)) if p else np.empty(0, dtype=np.int64) for p in parts]


def stratified_split(labels, fractions, rng):
    """Per-class split by largest-remainder rounding of ``fractions``."""
    labels = np.asarray(labels)
    fractions = np.asarray(fractions, dtype=np.float64)
    fractions = fractions / fractions.sum()
    parts = [[] for _ in fractions]
    for k in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == k))
        raw = fractions * members.size
        counts = np.floor(raw).astype(int)
        short = members.size - counts.sum()
        counts[np.argsort(-(raw - counts), kind="stable")[:short]] += 1
        bounds = np.concatenate([[0], np.cumsum(counts)])
        for p in range(len(fractions)):
            parts[p].append(members[bounds[p]:bounds[p + 1]])
    return [np.sort(np.concatenate(p)) for p in parts]


# -- file formats ----------------------------------------------------------


def load_graph(edge_file, num_nodes):
    """Read a whitespace-separated ``u v`` edge list into a symmetrized graph."""
    path = Path(edge_file)
    src, dst = [], []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2:
                raise GraphFormatError(f"expected 'u v', got {text!r}", path, lineno)
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphFormatError(f"non-integer node id in {text!r}", path, lineno) from None
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise IndexError(f"{path}:{lineno}: node id outside [0, {num_nodes}) in {text!r}")
            src.append(u)
            dst.append(v)
    return SparseGraph.from_edges(src, dst, num_nodes)


def save_graph(graph, path):
    u, v = graph.edge_list()
    with Path(path).open("w") as fh:
        for a, b in zip(u.tolist(), v.tolist()):
            fh.write(f"{a} {b}\n")


def fmt_float(x):
    """Pinned decimal form: 9 significant digits, no negative zero."""
    s = f"{x:.9g}"
    return "0" if s == "-0" else s


def read_features(path):
    path = Path(path)
    rows = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                rows.append([float(tok) for tok in text.split(",")])
            except ValueError:
                raise GraphFormatError("non-numeric feature value", path, lineno) from None
    if not rows:
        return np.empty((0, 0))
    if len({len(r) for r in rows}) != 1:
        raise GraphFormatError("rows have differing numbers of columns", path)
    X = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise GraphFormatError("features must be finite", path)
    return X


def write_features(X, path):
    with Path(path).open("w") as fh:
        for row in np.asarray(X):
            fh.write(",".join(fmt_float(v) for v in row.tolist()) + "\n")


def read_labels(path):
    path = Path(path)
    out = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                out.append(int(text))
            except ValueError:
                raise GraphFormatError(f"non-integer label {text!r}", path, lineno) from None
    return np.array(out, dtype=np.int64)


def write_labels(y, path):
    with Path(path).open("w") as fh:
        for v in np.asarray(y).tolist():
            fh.write(f"{int(v)}\n")


def read_splits(path):
    with Path(path).open() as fh:
        raw = json.load(fh)
    try:
        return {k: np.asarray(raw[k], dtype=np.int64) for k in ("train", "val", "test")}
    except KeyError as exc:
        raise GraphFormatError(f"splits file lacks {exc.args[0]!r}", path) from None


def write_splits(splits, path):
    payload = {k: [int(i) for i in splits[k]] for k in ("train", "val", "test")}
    Path(path).write_text(json.dumps(payload) + "\n")


def read_stream(path):
    with Path(path).open() as fh:
        raw = json.load(fh)
    return BatchStream(raw["mode"], tuple(raw["batches"]))


def write_stream(stream, path):
    payload = {"mode": stream.mode, "batches": [[int(i) for i in b] for b in stream.batches]}
    Path(path).write_text(json.dumps(payload) + "\n")


@dataclass(frozen=True, eq=False)
class Dataset:
    graph: SparseGraph
    features: np.ndarray
    labels: LabelSet
    stream: BatchStream | None = None


def load_dataset(graph_path, features_path, labels_path, splits_path, stream_path=None,
                 num_classes=None):
    for p in (graph_path, features_path, labels_path, splits_path):
        if not Path(p).exists():
            raise FileNotFoundError(f"no such file: {p}")
    X = read_features(features_path)
    y = read_labels(labels_path)
    if X.shape[0] != y.size:
        raise GraphFormatError(f"{X.shape[0]} feature rows but {y.size} labels", features_path)
    graph = load_graph(graph_path, y.size)
    splits = read_splits(splits_path)
    c = int(num_classes) if num_classes is not None else int(y.max()) + 1
    labels = LabelSet(y, c, splits["train"], splits["val"], splits["test"])
    stream = read_stream(stream_path) if stream_path is not None else None
    return Dataset(graph, X, labels, stream)


def load_dataset_dir(directory: str | Path):
    d = Path(directory)
    stream = d / "stream.json"
    return load_dataset(d / "graph.edges", d / "features.csv", d / "labels.txt", d / "splits.json",
                        stream if stream.exists() else None)
