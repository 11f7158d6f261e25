"""Least-squares gradient-boosted regression trees, self-contained.

An ensemble is a constant base prediction (the training-target mean) plus
``n_estimators`` shallow trees fit sequentially to residuals, each scaled by
the learning rate. Split search is exact: candidate thresholds are the
midpoints between consecutive distinct sorted feature values, and the best
split minimizes the summed squared error of the two children (ties broken by
lowest feature index, then lowest threshold). Minimum one sample per leaf;
no regularization beyond the depth cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class HyperParams:
    n_estimators: int
    learning_rate: float
    max_depth: int

    def __post_init__(self):
        if self.n_estimators < 0:
            raise ValueError("n_estimators must be >= 0")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


@dataclass(frozen=True)
class TreeNode:
    """Internal node (feature/threshold/children) or leaf (value only)."""

    value: float
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass(frozen=True)
class RegressionTree:
    root: TreeNode

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0], dtype=float)

        def fill(node: TreeNode, idx: np.ndarray) -> None:
            if node.is_leaf:
                out[idx] = node.value
                return
            go_left = X[idx, node.feature] <= node.threshold
            fill(node.left, idx[go_left])
            fill(node.right, idx[~go_left])

        fill(self.root, np.arange(X.shape[0]))
        return out

    def depth(self) -> int:
        def walk(node: TreeNode) -> int:
            if node.is_leaf:
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)


def best_split(X: np.ndarray, r: np.ndarray) -> tuple[int, float, float] | None:
    """Exact argmin-SSE split: (feature, threshold, children SSE), or None.

    Returns None when no feature has two distinct values. SSE per side is
    computed from prefix sums; rows with value <= threshold go left.
    """
    n = r.shape[0]
    if n < 2:
        return None
    best: tuple[float, int, float] | None = None  # (sse, feature, threshold)
    total = float(r.sum())
    total_sq = float((r * r).sum())
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        rs = r[order]
        boundaries = np.nonzero(xs[1:] != xs[:-1])[0]  # split after index i
        if boundaries.size == 0:
            continue
        csum = np.cumsum(rs)
        csum_sq = np.cumsum(rs * rs)
        n_left = boundaries + 1
        n_right = n - n_left
        s_left = csum[boundaries]
        q_left = csum_sq[boundaries]
        sse = (q_left - s_left**2 / n_left) + (
            (total_sq - q_left) - (total - s_left) ** 2 / n_right
        )
        k = int(np.argmin(sse))  # first minimum -> lowest threshold
        candidate = float(sse[k])
        threshold = float((xs[boundaries[k]] + xs[boundaries[k] + 1]) / 2.0)
        if best is None or candidate < best[0]:
            best = (candidate, j, threshold)
    if best is None:
        return None
    return best[1], best[2], best[0]


def _node_sse(r: np.ndarray) -> float:
    return float(((r - r.mean()) ** 2).sum())


def _grow(X: np.ndarray, r: np.ndarray, depth_left: int) -> TreeNode:
    mean = float(r.mean())
    if depth_left == 0 or r.shape[0] < 2:
        return TreeNode(value=mean)
    split = best_split(X, r)
    if split is None:
        return TreeNode(value=mean)
    feature, threshold, sse = split
    if not sse < _node_sse(r):  # no strict improvement
        return TreeNode(value=mean)
    go_left = X[:, feature] <= threshold
    left = _grow(X[go_left], r[go_left], depth_left - 1)
    right = _grow(X[~go_left], r[~go_left], depth_left - 1)
    return TreeNode(value=mean, feature=feature, threshold=threshold, left=left, right=right)


@dataclass
class TrainedEnsemble:
    base_prediction: float
    trees: list[RegressionTree]
    learning_rate: float
    feature_ids: list[str] = field(default_factory=list)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """base_prediction + learning_rate * sum of tree outputs, exactly."""
        X = np.asarray(X, dtype=float)
        out = np.full(X.shape[0], self.base_prediction, dtype=float)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out


def fit_gbrt(
    X: np.ndarray,
    y: np.ndarray,
    hp: HyperParams,
    feature_ids: list[str] | None = None,
) -> TrainedEnsemble:
    """Fit the boosted ensemble; n_estimators=0 yields the mean-only model."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("training set is empty")
    base = float(y.mean())
    predictions = np.full(y.shape, base, dtype=float)
    trees: list[RegressionTree] = []
    for _ in range(hp.n_estimators):
        residuals = y - predictions
        tree = RegressionTree(_grow(X, residuals, hp.max_depth))
        predictions += hp.learning_rate * tree.predict(X)
        trees.append(tree)
    return TrainedEnsemble(base, trees, hp.learning_rate, list(feature_ids or []))
