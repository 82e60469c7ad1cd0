import numpy as np
import pytest

from gecc.clustering import ClusterConfig
from gecc.condense import condense
from gecc.evaluation import (
    SingularSystemError,
    check_theorem1,
    check_theorem2,
    check_theorem3,
    condensed_accuracy,
    coreset_baselines,
    evaluate,
    fit_linear,
    kcenter_greedy,
    random_instance,
    theorem3_weights,
)
from gecc.propagation import PropagationConfig, propagate_graph


def onehot(y, c):
    return np.eye(c)[y]


def test_identity_fit():
    m = fit_linear(np.eye(2), np.eye(2), epsilon=0)
    np.testing.assert_allclose(m.W, np.eye(2), atol=1e-15)


def test_duplicate_column_needs_ridge(rng):
    F = rng.normal(size=(20, 3))
    F = np.column_stack([F, F[:, 1]])
    Y = onehot(rng.integers(0, 2, 20), 2)
    with pytest.raises(SingularSystemError, match="epsilon"):
        fit_linear(F, Y, epsilon=0)
    assert np.all(np.isfinite(fit_linear(F, Y, epsilon=1e-6).W))


def test_normal_equation_residual(rng):
    F = rng.normal(size=(100, 10))
    Y = onehot(rng.integers(0, 3, 100), 3)
    W = fit_linear(F, Y, 1e-6).W
    res = (F.T @ F + 1e-6 * np.eye(10)) @ W - F.T @ Y
    assert np.linalg.norm(res) < 1e-8


def test_local_optimality(rng):
    F = rng.normal(size=(80, 6))
    Y = onehot(rng.integers(0, 3, 80), 3)
    W = fit_linear(F, Y, 0).W
    base = np.linalg.norm(F @ W - Y)
    for _ in range(50):
        delta = rng.normal(size=W.shape)
        delta *= 1e-3 / np.linalg.norm(delta)
        assert base <= np.linalg.norm(F @ (W + delta) - Y)


def test_weighted_fit_equals_duplicated_rows(rng):
    C = rng.normal(size=(12, 4))
    y = rng.integers(0, 3, 12)
    sizes = rng.integers(1, 6, 12)
    a = fit_linear(C, onehot(y, 3), 1e-6, sample_weight=sizes).W
    b = fit_linear(np.repeat(C, sizes, axis=0), onehot(np.repeat(y, sizes), 3), 1e-6).W
    np.testing.assert_allclose(a, b, atol=1e-6)


def test_shape_mismatch():
    with pytest.raises(ValueError):
        fit_linear(np.ones((3, 2)), np.ones((4, 2)))
    with pytest.raises(ValueError):
        fit_linear(np.ones((0, 2)), np.ones((0, 2)))


def test_separable_accuracy():
    F = np.column_stack([np.r_[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0], np.ones(6)])
    y = np.r_[0, 0, 0, 1, 1, 1]
    assert evaluate(fit_linear(F, onehot(y, 2), 0), F, y) == 1.0


def test_shuffled_labels_near_chance():
    rng = np.random.default_rng(0)
    c, n = 4, 4000
    F = rng.normal(size=(n, 5))
    y = rng.integers(0, c, n)
    m = fit_linear(F[:2000], onehot(y[:2000], c))
    acc = evaluate(m, F[2000:], y[2000:])
    sd = np.sqrt(0.25 * 0.75 / 2000)
    assert abs(acc - 1 / c) <= 3 * sd


def test_ties_go_to_lowest_class():
    from gecc.evaluation import LinearModel

    m = LinearModel(np.zeros((2, 3)), 0.0)
    assert evaluate(m, np.ones((4, 2)), np.zeros(4, dtype=int)) == 1.0


def test_permutation_invariant(rng):
    F = rng.normal(size=(50, 3))
    y = rng.integers(0, 2, 50)
    m = fit_linear(F, onehot(y, 2))
    p = rng.permutation(50)
    assert evaluate(m, F, y) == evaluate(m, F[p], y[p])


def test_full_rate_condense_matches_full_fit(small_sbm):
    d = small_sbm
    cp = PropagationConfig()
    F = propagate_graph(d.graph, d.features, cp)
    cg, _ = condense(d.graph, d.features, d.labels, cp, ClusterConfig(r=1.0, repeats=1),
                     propagated=F)
    tr, te = d.labels.train_idx, d.labels.test_idx
    y = d.labels.labels
    full = evaluate(fit_linear(F[tr], onehot(y[tr], 3)), F[te], y[te])
    assert condensed_accuracy(cg, F[te], y[te], 3) == full


# -- bound checks --------------------------------------------------------------


def test_theorem1_zero_case(rng):
    F = rng.normal(size=(30, 4))
    P = onehot(rng.integers(0, 5, 30), 5)
    P[:5] = np.eye(5)
    W = rng.normal(size=(4, 2))
    e = check_theorem1(F, P.T @ F, P, W, W)
    assert e.lhs == 0.0 and e.rhs == 0.0 and e.passed


def test_theorem1_hard_instance():
    inst = random_instance(np.random.default_rng(50), n_range=(50, 50))
    W = fit_linear(inst.F, inst.Y).W
    Wp = fit_linear(inst.centroids, inst.centroid_Y).W
    e = check_theorem1(inst.F, inst.centroids, inst.P, W, Wp)
    assert e.passed and e.lhs > 0
    assert e.extra["passed_main"]


def test_theorem2_equality_and_adversarial(rng):
    F = rng.normal(size=(40, 5))
    Y = onehot(rng.integers(0, 3, 40), 3)
    W = rng.normal(size=(5, 3))
    e = check_theorem2(F, Y, W, W)
    assert e.lhs == e.extra["original_error"] == e.rhs
    assert check_theorem2(F, Y, W, -W).passed
    inst = random_instance(rng)
    W = fit_linear(inst.F, inst.Y).W
    Wp = fit_linear(inst.centroids, inst.centroid_Y).W
    assert check_theorem2(inst.F_test, inst.Y_test, W, Wp).passed


def test_theorem3_identity_assignment(rng):
    F = rng.normal(size=(20, 4))
    Y = onehot(rng.integers(0, 2, 20), 2)
    e = check_theorem3(F, Y, np.eye(20))
    assert e.lhs <= 1e-12 and e.extra["max_diag_PtP"] == 1.0 and e.passed


def test_theorem3_random_instance(rng):
    F = rng.normal(size=(60, 5))
    Y = onehot(rng.integers(0, 3, 60), 3)
    P = onehot(np.r_[0, 1, 2, rng.integers(0, 3, 57)], 3)
    e = check_theorem3(F, Y, P)
    assert e.passed and not e.violation


def test_theorem3_rhs_monotone_in_max_diag(rng):
    F = rng.normal(size=(12, 2))
    Y = onehot(rng.integers(0, 2, 12), 2)
    balanced = onehot(np.repeat([0, 1, 2], 4), 3)
    skewed = onehot(np.r_[np.zeros(8, int), 1, 1, 2, 2], 3)
    a, b = check_theorem3(F, Y, balanced), check_theorem3(F, Y, skewed)
    assert a.extra["max_diag_PtP"] < b.extra["max_diag_PtP"]
    assert a.rhs <= b.rhs


def test_theorem3_rank_deficient_skipped():
    F = np.ones((10, 2))
    e = check_theorem3(F, onehot(np.arange(10) % 2, 2), np.eye(10))
    assert e.skipped and not e.violation


def test_theorem3_weights_match_condensed_fit():
    rng = np.random.default_rng(8)
    inst = random_instance(rng, n_range=(80, 80), d_range=(3, 3))
    while inst.centroids.shape[0] < inst.F.shape[1] + 2:
        inst = random_instance(rng, n_range=(80, 80), d_range=(3, 3))
    _, Wp, C, Yp = theorem3_weights(inst.F, inst.Y, inst.P)
    np.testing.assert_allclose(C, inst.centroids, atol=1e-12)
    np.testing.assert_allclose(Yp, inst.centroid_Y, atol=1e-15)
    W_fit = fit_linear(inst.centroids, inst.centroid_Y, epsilon=0).W
    np.testing.assert_allclose(Wp, W_fit, atol=1e-9)


# -- baselines ---------------------------------------------------------------------


def test_kcenter_collinear():
    X = np.array([[0.0], [5.0], [10.0]])
    assert kcenter_greedy(X, 2, start=0).tolist() == [0, 2]


@pytest.mark.parametrize("method", ["random", "kcenter", "herding"])
def test_baselines_full_rate(method, rng):
    F = rng.normal(size=(30, 3))
    y = rng.integers(0, 3, 30)
    cg = coreset_baselines(F, y, 1.0, method, seed=1)
    ids = sorted(m[0][0] for m in cg.provenance)
    assert ids == list(range(30))
    order = np.argsort([m[0][0] for m in cg.provenance])
    np.testing.assert_array_equal(cg.features[order], F)
    np.testing.assert_array_equal(cg.labels[order], y)


@pytest.mark.parametrize("method", ["random", "kcenter", "herding"])
def test_baseline_budgets(method, rng):
    F = rng.normal(size=(50, 3))
    y = np.repeat([0, 1], [30, 20])
    cg = coreset_baselines(F, y, 0.2, method, node_ids=np.arange(100, 150))
    assert cg.class_counts(2).tolist() == [6, 4]
    assert all(100 <= m[0][0] < 150 for m in cg.provenance)


def test_herding_first_pick_nearest_mean():
    from gecc.evaluation import herding

    X = np.array([[0.0], [1.0], [2.0], [10.0]])
    assert herding(X, 1).tolist() == [2]


def test_budget_errors(rng):
    with pytest.raises(ValueError):
        kcenter_greedy(rng.normal(size=(3, 2)), 4)
    with pytest.raises(ValueError):
        coreset_baselines(np.ones((3, 2)), np.zeros(3, int), 0.5, "bogus")
