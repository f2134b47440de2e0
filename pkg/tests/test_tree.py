import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hydrotwin.mlkit import DegenerateData, tree_fit, tree_predict
from hydrotwin.mlkit.tree import LEAF


def brute_force_root(X, y, min_leaf=1):
    """Enumerate every (feature, midpoint) and return the lowest weighted Gini."""
    best = (np.inf, None, None)
    for f in range(X.shape[1]):
        values = np.unique(X[:, f])
        for lo, hi in zip(values, values[1:]):
            t = 0.5 * (lo + hi)
            mask = X[:, f] <= t
            if mask.sum() < min_leaf or (~mask).sum() < min_leaf:
                continue
            score = 0.0
            for part in (y[mask], y[~mask]):
                _, c = np.unique(part, return_counts=True)
                score += len(part) * (1 - ((c / len(part)) ** 2).sum())
            if score < best[0] - 1e-12:
                best = (score, f, t)
    return best


def leaves_of(model):
    return np.flatnonzero(model.feature == LEAF)


def test_root_split_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(30):
        n = int(rng.integers(6, 40))
        X = rng.integers(0, 6, size=(n, 3)).astype(float)
        y = rng.integers(1, 4, size=n)
        if len(np.unique(y)) < 2:
            continue
        model = tree_fit(X, y, max_depth=1, min_samples_leaf=1)
        score, f, t = brute_force_root(X, y)
        if f is None:
            assert model.n_nodes == 1
            continue
        assert (model.feature[0], model.threshold[0]) == (f, t)


def test_fits_distinct_training_rows_exactly():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(200, 4))
    y = rng.integers(1, 6, size=200)
    model = tree_fit(X, y, min_samples_leaf=1)
    assert np.array_equal(model.predict(X), y)
    assert not model.degenerate


def test_axis_aligned_problem():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    model = tree_fit(X, np.array([1, 1, 2, 2]), min_samples_leaf=1)
    assert model.n_nodes == 3
    assert model.threshold[0] == 1.5
    assert tree_predict(model, [1.4]) == 1 and tree_predict(model, [1.6]) == 2


def test_tie_prefers_lowest_feature_then_threshold():
    X = np.array([[0, 0], [1, 1], [2, 2], [3, 3]], dtype=float)
    model = tree_fit(X, np.array([1, 2, 1, 2]), max_depth=1, min_samples_leaf=1)
    assert model.feature[0] == 0
    assert model.threshold[0] == 0.5


@pytest.mark.filterwarnings("ignore::hydrotwin.mlkit.DegenerateData")
@given(st.integers(0, 2**32 - 1))
def test_row_order_does_not_matter(seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 4, size=(30, 3)).astype(float)
    y = rng.integers(1, 4, size=30)
    if len(np.unique(y)) < 2:
        return
    perm = rng.permutation(30)
    a = tree_fit(X, y, min_samples_leaf=1)
    b = tree_fit(X[perm], y[perm], min_samples_leaf=1)
    grid = np.array(list(itertools.product(range(4), repeat=3)), dtype=float)
    assert np.array_equal(a.predict(grid), b.predict(grid))
    assert a.n_nodes == b.n_nodes


@pytest.mark.filterwarnings("ignore::hydrotwin.mlkit.DegenerateData")
@given(arrays(float, (25, 2), elements=st.floats(-5, 5)),
       arrays(np.int64, 25, elements=st.integers(1, 3)),
       st.integers(1, 5), st.integers(1, 6))
def test_limits_are_respected(X, y, min_leaf, max_depth):
    if len(np.unique(y)) < 2:
        return
    model = tree_fit(X, y, max_depth=max_depth, min_samples_leaf=min_leaf)
    assert model.depth() <= max_depth
    hist = model.histogram.sum(axis=1)
    assert hist[0] == len(y)
    assert np.all(hist[leaves_of(model)] >= min(min_leaf, len(y)))
    # children partition their parent
    for i in np.flatnonzero(model.feature != LEAF):
        assert np.array_equal(model.histogram[i],
                              model.histogram[model.left[i]] + model.histogram[model.right[i]])


def test_identical_rows_with_conflicting_labels_warn():
    X = np.zeros((4, 2))
    with pytest.warns(DegenerateData):
        model = tree_fit(X, np.array([2, 1, 2, 1]))
    assert model.degenerate
    # majority tie resolves to the lowest label
    assert model.predict_one([0, 0]) == 1


def test_input_validation():
    with pytest.raises(ValueError):
        tree_fit(np.zeros((3, 2)), np.array([1, 1, 1]))
    with pytest.raises(ValueError):
        tree_fit(np.zeros((3, 2)), np.array([1, 2]))
    with pytest.raises(ValueError):
        tree_fit(np.array([[np.nan], [1.0]]), np.array([1, 2]))


def test_predict_matches_predict_one():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(100, 3))
    y = (X[:, 0] > 0).astype(int) + 2 * (X[:, 1] > 0.5)
    model = tree_fit(X, y)
    Q = rng.normal(size=(50, 3))
    assert [model.predict_one(q) for q in Q] == model.predict(Q).tolist()


def test_training_rows_land_in_leaves_that_count_them():
    rng = np.random.default_rng(3)
    X = rng.integers(0, 5, size=(120, 3)).astype(float)
    y = rng.integers(1, 4, size=120)
    model = tree_fit(X, y, max_depth=5, min_samples_leaf=3)
    leaves = model.apply(X)
    assert np.all(model.feature[leaves] == LEAF)
    for leaf in np.unique(leaves):
        routed = y[leaves == leaf]
        expected = [(routed == c).sum() for c in model.classes]
        assert model.histogram[leaf].tolist() == expected
    assert set(np.unique(leaves)) == set(leaves_of(model))
