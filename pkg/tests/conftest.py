import sys

import numpy as np
import pytest

from gecc.graph import SparseGraph
from gecc.synth import SyntheticSpec, make_sbm, write_dataset


def random_graph(rng, n, p=0.15):
    """Erdos-Renyi style graph, some isolated nodes likely for small ``p``."""
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return SparseGraph.from_edges(iu[keep], ju[keep], n)


def dense_normalized(graph):
    A = graph.to_dense() + np.eye(graph.num_nodes)
    d = A.sum(axis=1)
    Dm = np.diag(1.0 / np.sqrt(d))
    return Dm @ A @ Dm


def dense_propagate(graph, X, alphas):
    A_hat = dense_normalized(graph)
    out = np.zeros_like(X, dtype=np.float64)
    P = np.eye(graph.num_nodes)
    for a in alphas:
        out += a * (P @ X)
        P = P @ A_hat
    return out


def sequential_means(X, labels, k):
    """Per-cluster means summed member by member in ascending row order."""
    out = np.zeros((k, X.shape[1]))
    for j in range(k):
        rows = np.flatnonzero(labels == j)
        for col in range(X.shape[1]):
            acc = 0.0
            for i in rows:
                acc += X[i, col]
            out[j, col] = acc / rows.size
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_sbm():
    spec = SyntheticSpec(classes=3, nodes_per_class=60, p_in=0.15, p_out=0.01, dim=6,
                         sigma=0.5, batches=5)
    return make_sbm(spec, 3)


@pytest.fixture
def small_sbm_dir(tmp_path, small_sbm):
    return write_dataset(small_sbm, tmp_path / "data")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
