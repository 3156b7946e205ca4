import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vasim.forest import (ClassMetrics, ForestModel, ForestParams, Tree, cross_validate,
                          kfold_assignments, metrics, train)

SMALL = ForestParams(n_estimators=25)
REFERENCE = ForestParams(bootstrap=True, criterion="gini", max_depth=10, n_estimators=200)


def blobs(n=200, seed=0, sep=4.0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 1, (n // 2, 2)), rng.normal(sep, 1, (n // 2, 2))])
    y = ["a"] * (n // 2) + ["b"] * (n // 2)
    return X, y


def traverse(tree_json, x):
    """Independent per-tree walk over the serialised arrays."""
    node = 0
    while tree_json["feature"][node] >= 0:
        f = tree_json["feature"][node]
        node = tree_json["left"][node] if x[f] <= tree_json["threshold"][node] \
            else tree_json["right"][node]
    c = np.array(tree_json["counts"][node], float)
    return c / c.sum()


def leaf_tree(counts):
    return Tree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]),
                np.array([counts], dtype=float))


def hand_model(trees, k=2):
    return ForestModel(tuple(trees), tuple("ab"[:k]), ForestParams(n_estimators=len(trees)),
                       0, 1)


# Training -----------------------------------------------------------------

def test_single_class_is_certain():
    X = np.random.default_rng(0).normal(size=(30, 3))
    m = train(X, ["only"] * 30, SMALL, seed=1)
    assert np.all(m.predict_proba(X) == 1.0)


def test_two_points_separate():
    m = train([[0.0], [1.0]], ["x", "y"], ForestParams(n_estimators=1, bootstrap=False,
                                                       max_depth=1), seed=0)
    assert m.predict([[0.0], [1.0]]) == ["x", "y"]
    assert m.trees[0].threshold[0] == 0.5


def test_blobs_oob_accuracy():
    X, y = blobs()
    # Nearest-centroid oracle confirms the blobs are separable.
    cents = np.array([X[:100].mean(0), X[100:].mean(0)])
    nc = np.argmin(((X[:, None, :] - cents[None]) ** 2).sum(-1), axis=1)
    assert np.mean(nc == np.repeat([0, 1], 100)) >= 0.97
    m = train(X, y, REFERENCE, seed=3)
    assert m.oob_accuracy >= 0.95


def test_deterministic_given_seed():
    X, y = blobs(sep=1.5)
    a, b = train(X, y, SMALL, seed=9), train(X, y, SMALL, seed=9)
    assert all(s.same_structure(t) for s, t in zip(a.trees, b.trees))
    c = train(X, y, SMALL, seed=10)
    assert not all(s.same_structure(t) for s, t in zip(a.trees, c.trees))


def test_jobs_do_not_change_trees():
    X, y = blobs(sep=1.5)
    a = train(X, y, SMALL, seed=4)
    b = train(X, y, SMALL, seed=4, jobs=3)
    assert all(s.same_structure(t) for s, t in zip(a.trees, b.trees))
    assert a.oob_accuracy == b.oob_accuracy


@pytest.mark.parametrize("depth", [1, 3, 10])
def test_depth_and_counts_invariants(depth):
    X, y = blobs(sep=1.0)
    m = train(X, y, ForestParams(n_estimators=10, max_depth=depth), seed=2)
    for t in m.trees:
        assert t.depth() <= depth
        leaves = t.counts[t.feature < 0]
        assert np.all(leaves >= 0) and np.all(leaves.sum(1) > 0)


def test_min_leaf_respected():
    X, y = blobs(sep=0.5)
    m = train(X, y, ForestParams(n_estimators=5, min_leaf=7, bootstrap=False), seed=0)
    for t in m.trees:
        assert t.counts[t.feature < 0].sum(1).min() >= 7


def test_training_accuracy_monotone_in_depth():
    X, y = blobs(sep=0.8, seed=5)
    accs = []
    for d in range(1, 11):
        m = train(X, y, ForestParams(n_estimators=5, max_depth=d, bootstrap=False), seed=1)
        accs.append(np.mean(np.array(m.predict(X)) == np.array(y)))
    assert all(b >= a for a, b in zip(accs, accs[1:]))


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.integers(0, 10**6))
def test_row_order_irrelevant_without_randomness(data_seed, perm_seed):
    rng = np.random.default_rng(data_seed)
    X = np.round(rng.normal(size=(40, 3)), 1)  # rounding forces ties
    y = list(rng.choice(["p", "q", "r"], 40))
    params = ForestParams(n_estimators=1, bootstrap=False, features_per_split="all")
    perm = np.random.default_rng(perm_seed).permutation(40)
    a = train(X, y, params, seed=0, class_order="pqr")
    b = train(X[perm], [y[i] for i in perm], params, seed=0, class_order="pqr")
    assert a.trees[0].same_structure(b.trees[0])


@pytest.mark.parametrize("bad", [dict(n_estimators=0), dict(max_depth=0), dict(min_leaf=0),
                                 dict(criterion="entropy"), dict(features_per_split="log2")])
def test_params_validation(bad):
    with pytest.raises(ValueError):
        ForestParams(**bad)


def test_train_errors():
    with pytest.raises(ValueError, match="empty"):
        train(np.zeros((0, 2)), [])
    with pytest.raises(ValueError, match="lengths"):
        train([[0.0]], ["a", "b"])
    with pytest.raises(ValueError, match="class_order"):
        train([[0.0], [1.0]], ["a", "z"], class_order=("a", "b"))


# Inference ----------------------------------------------------------------

def test_vote_counting():
    m = hand_model([leaf_tree([0, 1])] * 112 + [leaf_tree([1, 0])] * 88)
    assert m.predict_proba([[0.0]])[0, 1] == pytest.approx(0.56, abs=1e-12)


def test_single_leaf_fraction():
    p = hand_model([leaf_tree([3, 1])]).predict_proba([[7.0]])[0]
    assert p.tolist() == [0.75, 0.25]


def test_forest_equals_mean_of_trees():
    X, y = blobs(sep=1.0, seed=8)
    m = train(X, y, ForestParams(n_estimators=30), seed=5)
    doc = json.loads(json.dumps(m.to_json()))
    probe = np.random.default_rng(1).normal(0.5, 2, (60, 2))
    oracle = np.array([np.mean([traverse(t, x) for t in doc["trees"]], axis=0) for x in probe])
    assert np.allclose(m.predict_proba(probe), oracle, atol=1e-12)
    assert np.allclose(oracle.sum(1), 1.0, atol=1e-9)


@given(st.lists(st.floats(-50, 50), min_size=2, max_size=2))
@settings(max_examples=40)
def test_proba_is_distribution(x):
    m = _shared_model()
    p = m.predict_proba([x])[0]
    assert abs(p.sum() - 1) <= 1e-9 and np.all((p >= 0) & (p <= 1))


_CACHE = {}


def _shared_model():
    if "m" not in _CACHE:
        X = np.random.default_rng(2).normal(size=(90, 2))
        _CACHE["m"] = train(X, list(np.repeat(["a", "b", "c"], 30)), SMALL, seed=0)
    return _CACHE["m"]


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        _shared_model().predict_proba([[1.0, 2.0, 3.0]])


def test_json_round_trip(tmp_path):
    m = _shared_model()
    m.save(tmp_path / "m.forest.json")
    back = ForestModel.load(tmp_path / "m.forest.json")
    assert back.class_order == m.class_order and back.oob_accuracy == m.oob_accuracy
    probe = np.random.default_rng(3).normal(size=(50, 2))
    assert np.array_equal(back.predict_proba(probe), m.predict_proba(probe))
    with pytest.raises(ValueError, match="format"):
        ForestModel.from_json({"format": "other"})


# Metrics and cross validation ----------------------------------------------

def test_metrics_formula():
    labels = ["p"] * 100 + ["n"] * 50
    preds = ["p"] * 98 + ["n"] * 2 + ["p"] * 3 + ["n"] * 47
    m = metrics(preds, labels, ("n", "p"))
    assert m.per_class["p"].recall == pytest.approx(0.98)
    assert m.per_class["p"].precision == pytest.approx(0.9703, abs=1e-4)
    assert m.confusion == ((47, 3), (2, 98))


def test_metrics_all_one_class():
    m = metrics(["a"] * 10, ["a"] * 5 + ["b"] * 5)
    assert m.per_class["a"].recall == 1.0 and m.per_class["b"].recall == 0.0
    assert m.per_class["b"].f1 == 0.0


def test_metrics_errors():
    with pytest.raises(ValueError):
        metrics([], [])
    with pytest.raises(ValueError):
        metrics(["a"], ["a", "b"])


@given(st.lists(st.sampled_from("abc"), min_size=1, max_size=60), st.data())
def test_f1_definition(labels, data):
    preds = data.draw(st.lists(st.sampled_from("abc"), min_size=len(labels),
                               max_size=len(labels)))
    m = metrics(preds, labels, tuple("abc"))
    for c, cm in m.per_class.items():
        p, r = cm.precision, cm.recall
        assert cm.f1 == pytest.approx(2 * p * r / (p + r) if p + r else 0.0)
        assert 0 <= cm.f1 <= 1
    assert sum(cm.support for cm in m.per_class.values()) == len(labels)


def test_cv_separable_is_perfect():
    X, y = blobs(n=120, sep=20.0)
    m = cross_validate(X, y, SMALL, 5, seed=0)
    assert m.macro_f1 == 1.0 and m.stratified and m.warning is None


def test_cv_permuted_labels_is_chance():
    X, y = blobs(n=400, sep=4.0, seed=11)
    y = list(np.random.default_rng(12).permutation(y))
    m = cross_validate(X, y, SMALL, 5, seed=1)
    assert m.macro_f1 == pytest.approx(0.5, abs=0.07)


def test_cv_falls_back_without_stratification():
    X, y = blobs(n=40, sep=3.0)
    y[0] = "rare"
    m = cross_validate(X, y, SMALL, 5, seed=0)
    assert not m.stratified and "fewer than 5" in m.warning


def test_cv_errors():
    X, y = blobs(n=10)
    with pytest.raises(ValueError):
        cross_validate(X, y, SMALL, 1, seed=0)
    with pytest.raises(ValueError):
        cross_validate(X, y, SMALL, 11, seed=0)


def test_stratified_folds_balanced():
    labels = ["a"] * 60 + ["b"] * 40
    folds, strat = kfold_assignments(labels, 20, 3)
    assert strat
    for f in range(20):
        members = [labels[i] for i in np.flatnonzero(folds == f)]
        assert members.count("a") == 3 and members.count("b") == 2


def test_metrics_json_serialisable():
    m = metrics(["a", "b"], ["a", "a"])
    json.dumps(m.to_json())
    assert isinstance(m.per_class["a"], ClassMetrics)
