"""Static condensation: propagate, cluster each class, emit centroid nodes.

The condensed graph is structure-free: its adjacency is the identity and is
never stored. Each centroid keeps the list of original nodes (with membership
weights) that formed it.
"""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import (
    ClusterConfig,
    class_seed,
    cluster_class,
    cluster_counts,
)
from .graph import LabelSet, fmt_float, read_features, read_labels, write_features, write_labels
from .propagation import PropagationConfig, propagate_graph

REPORT_COLUMNS = [
    "stage", "class", "n_train", "centroids", "iterations", "J", "sse", "penalty",
    "repr_dist_sum", "repr_dist_mean", "seconds",
]


@dataclass(eq=False)
class CondensedGraph:
    """Centroid features and labels; adjacency is implicitly the identity."""

    features: np.ndarray
    labels: np.ndarray
    provenance: list
    cluster_sizes: np.ndarray

    @property
    def num_nodes(self):
        return int(self.labels.size)

    @property
    def dim(self):
        return int(self.features.shape[1])

    def class_centroids(self, k):
        return self.features[self.labels == k]

    def class_counts(self, num_classes):
        return np.bincount(self.labels, minlength=num_classes)

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_features(self.features, out / "condensed_features.csv")
        write_labels(self.labels, out / "condensed_labels.txt")
        with (out / "provenance.jsonl").open("w") as fh:
            for j, members in enumerate(self.provenance):
                pairs = ",".join(f"[{int(node)},{fmt_float(w)}]" for node, w in members)
                fh.write(f'{{"centroid":{j},"class":{int(self.labels[j])},"members":[{pairs}]}}\n')

    @classmethod
    def read(cls, directory):
        d = Path(directory)
        X = read_features(d / "condensed_features.csv")
        y = read_labels(d / "condensed_labels.txt")
        prov = []
        sizes = []
        pfile = d / "provenance.jsonl"
        if pfile.exists():
            with pfile.open() as fh:
                for line in fh:
                    if line.strip():
                        rec = json.loads(line)
                        members = [(int(a), float(w)) for a, w in rec["members"]]
                        prov.append(members)
                        sizes.append(sum(w for _, w in members))
        return cls(X, y, prov, np.asarray(sizes, dtype=np.float64))


@dataclass
class ClassReport:
    cls: int
    n_train: int
    centroids: int
    iterations: int
    J: float
    sse: float
    penalty: float
    repr_dist_sum: float
    repr_dist_mean: float
    seconds: float
    warm_iterations: int | None = None
    run_iterations: list = field(default_factory=list)
    run_objectives: list = field(default_factory=list)


@dataclass
class CondenseReport:
    seconds_propagate: float
    classes: list
    cache_hit: bool = False

    @property
    def seconds_cluster(self):
        return sum(c.seconds for c in self.classes)

    @property
    def J(self):
        return sum(c.J for c in self.classes)

    def rows(self):
        yield {"stage": "propagate", "class": "all", "seconds": self.seconds_propagate}
        for c in self.classes:
            yield {
                "stage": "cluster", "class": c.cls, "n_train": c.n_train,
                "centroids": c.centroids, "iterations": c.iterations, "J": c.J, "sse": c.sse,
                "penalty": c.penalty, "repr_dist_sum": c.repr_dist_sum,
                "repr_dist_mean": c.repr_dist_mean, "seconds": c.seconds,
            }

    def write_csv(self, path):
        with Path(path).open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
            w.writeheader()
            for row in self.rows():
                w.writerow({k: _cell(v) for k, v in row.items()})


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return fmt_float(float(v))
    return v


def representation_distances(F, assignment, C):
    """``||P^T F - D_P C||`` and ``||D_P^-1 P^T F - C||`` (Frobenius)."""
    P = assignment.matrix()
    proj = P.T @ F
    counts = P.sum(axis=0)
    return (
        float(np.linalg.norm(proj - counts[:, None] * C)),
        float(np.linalg.norm(proj / counts[:, None] - C)),
    )


def condense(graph, X, labels: LabelSet, cfg_prop: PropagationConfig | None = None,
             cfg_clust: ClusterConfig | None = None, warm=None, *, step=1, propagated=None,
             node_ids=None, new_train=None):
    """Condense the labelled nodes of one (snapshot) graph.

    Parameters
    ----------
    graph, X, labels
        Snapshot structure, raw features and labels; clustering uses
        ``labels.train_idx`` only, propagation uses every node.
    warm : dict, optional
        Class -> prior centroids (propagated space) to seed one run per class.
    step : int
        Step index mixed into the per-class random streams.
    propagated : ndarray, optional
        Precomputed representations (skips propagation, e.g. a cache hit).
    node_ids : ndarray, optional
        Original ids of the snapshot nodes, used for provenance.
    new_train : ndarray, optional
        Snapshot-local ids of newly arrived training nodes; warm seeding draws
        new centroids from these.

    Returns
    -------
    (CondensedGraph, CondenseReport)
    """
    cfg_prop = cfg_prop or PropagationConfig()
    cfg_clust = cfg_clust or ClusterConfig()
    t0 = time.perf_counter()
    if propagated is None:
        F = propagate_graph(graph, X, cfg_prop)
        cache_hit = False
    else:
        F = np.asarray(propagated, dtype=np.float64)
        cache_hit = True
    t_prop = time.perf_counter() - t0
    if node_ids is None:
        node_ids = np.arange(graph.num_nodes)
    new_set = None if new_train is None else np.asarray(new_train, dtype=np.int64)

    train = np.sort(labels.train_idx)
    y_train = labels.labels[train]
    sizes = np.bincount(y_train, minlength=labels.num_classes)
    M = cluster_counts(sizes, cfg_clust.r)

    feats, labs, prov, csize, reports = [], [], [], [], []
    for k in range(labels.num_classes):
        t1 = time.perf_counter()
        rows = train[y_train == k]
        Fk = F[rows]
        prior = None if warm is None else warm.get(k)
        local_new = None
        if prior is not None and new_set is not None:
            local_new = np.flatnonzero(np.isin(rows, new_set))
        out = cluster_class(Fk, int(M[k]), cfg_clust, warm=prior,
                            seed=class_seed(cfg_clust.seed, step, k), new_rows=local_new)
        res = out.best
        d_sum, d_mean = representation_distances(Fk, res.assignment, res.centroids)
        feats.append(res.centroids)
        labs.append(np.full(M[k], k, dtype=np.int64))
        csize.append(res.assignment.counts)
        prov.extend(_provenance(res.assignment, node_ids[rows]))
        reports.append(ClassReport(
            cls=k, n_train=int(rows.size), centroids=int(M[k]), iterations=res.iterations,
            J=out.objective.J, sse=out.objective.sse, penalty=out.objective.penalty,
            repr_dist_sum=d_sum, repr_dist_mean=d_mean, seconds=time.perf_counter() - t1,
            warm_iterations=out.warm_iterations, run_iterations=out.run_iterations,
            run_objectives=out.run_objectives,
        ))

    condensed = CondensedGraph(
        np.vstack(feats), np.concatenate(labs), prov, np.concatenate(csize)
    )
    return condensed, CondenseReport(t_prop, reports, cache_hit)


def _provenance(assignment, original_ids):
    if assignment.membership is None:
        out = [[] for _ in range(assignment.k)]
        for node, lab in zip(original_ids.tolist(), assignment.labels.tolist()):
            out[lab].append((node, 1.0))
        return out
    U = assignment.membership
    return [
        [(int(node), float(w)) for node, w in zip(original_ids, U[:, j]) if w > 0]
        for j in range(assignment.k)
    ]
