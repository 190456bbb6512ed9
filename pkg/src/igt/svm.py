"""One-vs-rest L2-regularized squared-hinge linear SVM.

Each binary problem is solved in the dual by coordinate descent, with a bias
feature appended to the inputs, until the relative duality gap drops below
``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

C_GRID = (1.0, 0.1, 0.01, 0.001, 0.0001)
SD_FLOOR = 1e-8


@numba.njit(cache=True)
def _dual_cd(X, y, C, tol, max_epochs, seed):
    n, p = X.shape
    alpha = np.zeros(n)
    w = np.zeros(p)
    diag = 0.5 / C
    qii = np.empty(n)
    for i in range(n):
        qii[i] = X[i] @ X[i] + diag
    order = np.arange(n)
    state = np.uint64(seed) * np.uint64(6364136223846793005) + np.uint64(1442695040888963407)
    gap = np.inf
    for epoch in range(max_epochs):
        for i in range(n - 1, 0, -1):
            state = state * np.uint64(6364136223846793005) + np.uint64(1442695040888963407)
            j = np.int64((state >> np.uint64(33)) % np.uint64(i + 1))
            order[i], order[j] = order[j], order[i]
        for t in range(n):
            i = order[t]
            g = y[i] * (X[i] @ w) - 1.0 + diag * alpha[i]
            new = max(alpha[i] - g / qii[i], 0.0)
            d = new - alpha[i]
            if d != 0.0:
                alpha[i] = new
                w += d * y[i] * X[i]
        primal = 0.5 * (w @ w)
        loss = 0.0
        for i in range(n):
            m = 1.0 - y[i] * (X[i] @ w)
            if m > 0.0:
                loss += m * m
        primal += C * loss
        dual = alpha.sum() - 0.5 * (w @ w) - (alpha @ alpha) * diag * 0.5
        gap = primal - dual
        if gap <= tol * max(1.0, abs(primal)):
            break
    return w, gap


def _augment(X):
    return np.hstack([X, np.ones((X.shape[0], 1))])


def fit_binary(X, y, C: float, tol: float = 1e-6, max_epochs: int = 5000, seed: int = 0):
    """Weights and bias of one squared-hinge problem, labels in {-1, +1}."""
    w, _ = _dual_cd(np.ascontiguousarray(_augment(X)), np.asarray(y, dtype=float),
                    float(C), tol, max_epochs, seed)
    return w[:-1], w[-1]


@dataclass(frozen=True, eq=False)
class ClassifierModel:
    weights: np.ndarray  # classes x features
    bias: np.ndarray
    classes: np.ndarray
    C: float
    train_means: np.ndarray
    train_sds: np.ndarray
    cv_scores: dict | None = None

    def decision_function(self, X):
        Z = (np.asarray(X, dtype=float) - self.train_means) / self.train_sds
        return Z @ self.weights.T + self.bias

    def predict(self, X):
        # argmax picks the smallest class index on ties
        return self.classes[np.argmax(self.decision_function(X), axis=1)]

    def score(self, X, y) -> float:
        return float(np.mean(self.predict(X) == np.asarray(y)))


def _fit_standardized(Z, y, classes, C, seed):
    W = np.zeros((len(classes), Z.shape[1]))
    b = np.zeros(len(classes))
    if len(classes) == 2:
        # the two one-vs-rest problems are mirror images: same optimum, negated
        W[1], b[1] = fit_binary(Z, np.where(y == classes[1], 1.0, -1.0), C, seed=seed)
        W[0], b[0] = -W[1], -b[1]
        return W, b
    for k, c in enumerate(classes):
        W[k], b[k] = fit_binary(Z, np.where(y == c, 1.0, -1.0), C, seed=seed + k)
    return W, b


def standardize_stats(X):
    mu = X.mean(axis=0)
    sd = np.maximum(X.std(axis=0), SD_FLOOR)
    return mu, sd


def stratified_folds(y, folds: int, seed: int):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 7])))
    assign = np.empty(len(y), dtype=np.int64)
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(len(idx))]
        assign[idx] = np.arange(len(idx)) % folds
    return assign


def fit_fixed_c(X, y, C: float, seed: int = 0) -> ClassifierModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("need at least two classes to train a classifier")
    mu, sd = standardize_stats(X)
    W, b = _fit_standardized((X - mu) / sd, y, classes, C, seed)
    return ClassifierModel(W, b, classes, C, mu, sd)


def fit_linear_svm(X, y, c_grid=C_GRID, folds: int = 3, seed: int = 0) -> ClassifierModel:
    """Select C by stratified cross-validation, then refit on all data.

    Ties in validation accuracy go to the larger C.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(np.unique(y)) < 2:
        raise ValueError("need at least two classes to train a classifier")
    assign = stratified_folds(y, folds, seed)
    scores = {}
    for C in c_grid:
        hits = 0
        for f in range(folds):
            tr, va = assign != f, assign == f
            if len(np.unique(y[tr])) < 2:
                continue
            model = fit_fixed_c(X[tr], y[tr], C, seed)
            hits += int(np.sum(model.predict(X[va]) == y[va]))
        scores[C] = hits / len(y)
    best = max(scores.items(), key=lambda kv: (kv[1], kv[0]))[0]
    final = fit_fixed_c(X, y, best, seed)
    return ClassifierModel(final.weights, final.bias, final.classes, best,
                           final.train_means, final.train_sds, scores)
