import numpy as np
import pytest

from igt.svm import (C_GRID, ClassifierModel, fit_binary, fit_fixed_c, fit_linear_svm,
                     standardize_stats, stratified_folds)


def blobs(rng, n=60, sep=4.0, classes=2, dim=3):
    centers = rng.standard_normal((classes, dim)) * sep
    y = np.repeat(np.arange(classes), n)
    X = centers[y] + rng.standard_normal((len(y), dim)) * 0.3
    return X, y


def test_grid_is_powers_of_ten():
    assert C_GRID == (1.0, 0.1, 0.01, 0.001, 0.0001)


@pytest.mark.parametrize("C", C_GRID)
def test_separable_fits_training_set(C):
    X, y = blobs(np.random.default_rng(0), sep=6.0)
    assert fit_fixed_c(X, y, C).score(X, y) == 1.0


def test_selection_and_determinism():
    rng = np.random.default_rng(1)
    X, y = blobs(rng, classes=3, sep=1.5)
    a = fit_linear_svm(X, y, seed=5)
    b = fit_linear_svm(X, y, seed=5)
    assert a.C == b.C and a.C in C_GRID
    assert np.array_equal(a.weights, b.weights) and np.array_equal(a.bias, b.bias)
    assert set(a.cv_scores) == set(C_GRID)
    best = max(a.cv_scores.values())
    assert a.C == max(c for c, s in a.cv_scores.items() if s == best)


def test_ties_go_to_larger_C():
    X, y = blobs(np.random.default_rng(2), sep=10.0)
    clf = fit_linear_svm(X, y)
    assert all(s == 1.0 for s in clf.cv_scores.values())
    assert clf.C == 1.0


def test_single_class_rejected():
    with pytest.raises(ValueError, match="two classes"):
        fit_linear_svm(np.ones((5, 2)), np.zeros(5))
    with pytest.raises(ValueError, match="two classes"):
        fit_fixed_c(np.ones((5, 2)), np.zeros(5), 1.0)


def test_binary_negation_matches_direct_fit():
    X, y = blobs(np.random.default_rng(3), sep=1.0)
    mu, sd = standardize_stats(X)
    Z = (X - mu) / sd
    clf = fit_fixed_c(X, y, 0.1)
    w0, b0 = fit_binary(Z, np.where(y == 0, 1.0, -1.0), 0.1, tol=1e-10)
    # both solutions are only converged to a 1e-6 duality gap
    assert np.allclose(clf.weights[0], w0, atol=1e-3) and abs(clf.bias[0] - b0) < 1e-3


def test_squared_hinge_optimality():
    # stationarity of 0.5|w|^2 + C sum max(0, 1 - y w.x)^2 at the solution
    rng = np.random.default_rng(4)
    X = rng.standard_normal((80, 4))
    y = np.where(X[:, 0] + 0.5 * rng.standard_normal(80) > 0, 1.0, -1.0)
    C = 0.5
    w, b = fit_binary(X, y, C, tol=1e-12)
    Xa = np.hstack([X, np.ones((80, 1))])
    wa = np.append(w, b)
    m = np.maximum(0, 1 - y * (Xa @ wa))
    grad = wa - 2 * C * (Xa.T @ (y * m))
    assert np.max(np.abs(grad)) < 1e-5


def test_standardization_floor():
    X = np.column_stack([np.ones(10), np.arange(10.0)])
    mu, sd = standardize_stats(X)
    assert sd[0] == 1e-8 and mu[0] == 1


def test_predict_ties_pick_smallest_class():
    clf = ClassifierModel(np.zeros((3, 2)), np.zeros(3), np.array([4, 7, 9]), 1.0,
                          np.zeros(2), np.ones(2))
    assert list(clf.predict(np.ones((2, 2)))) == [4, 4]


def test_stratified_folds():
    y = np.array([0] * 9 + [1] * 6)
    f = stratified_folds(y, 3, 0)
    for k in range(3):
        assert np.sum((f == k) & (y == 0)) == 3 and np.sum((f == k) & (y == 1)) == 2
    assert np.array_equal(f, stratified_folds(y, 3, 0))
