"""Greedy binary regression trees (CART style), written against numpy only.

The learner is deliberately small and deterministic: axis-aligned splits
chosen by sum-of-squared-error reduction, midpoint thresholds between
distinct sorted feature values, ties resolved toward the lowest feature index
and then the lowest threshold.  Equal feature values never separate, and a
query exactly on a threshold goes left.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class _Node:
    feature: int  # -1 marks a leaf
    threshold: float
    left: int
    right: int
    value: float
    n_samples: int
    gain: float  # SSE reduction achieved by the split (0 for leaves)


class RegressionTree:
    def __init__(self, nodes, n_features, max_depth, min_leaf):
        self.nodes = nodes
        self.n_features = n_features
        self.max_depth = max_depth
        self.min_leaf = min_leaf

    # -- inference -------------------------------------------------------------

    def predict(self, x) -> float:
        node = self.nodes[0]
        while node.feature >= 0:
            node = self.nodes[node.left if x[node.feature] <= node.threshold else node.right]
        return node.value

    def predict_many(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.array([self.predict(row) for row in X], dtype=np.float64)

    # -- structure -------------------------------------------------------------

    @property
    def n_leaves(self):
        return sum(1 for nd in self.nodes if nd.feature < 0)

    @property
    def depth(self):
        depths = {0: 0}
        best = 0
        for i, nd in enumerate(self.nodes):
            if nd.feature >= 0:
                depths[nd.left] = depths[i] + 1
                depths[nd.right] = depths[i] + 1
                best = max(best, depths[i] + 1)
        return best

    def leaf_values(self):
        return sorted({nd.value for nd in self.nodes if nd.feature < 0})

    def feature_importances(self) -> np.ndarray:
        """Summed SSE reduction per feature, normalised to 1 (zeros if no split)."""
        imp = np.zeros(self.n_features, dtype=np.float64)
        for nd in self.nodes:
            if nd.feature >= 0:
                imp[nd.feature] += nd.gain
        total = imp.sum()
        return imp / total if total > 0 else imp

    def to_text(self) -> str:
        lines = [
            f"regression_tree n_features={self.n_features} "
            f"max_depth={self.max_depth} min_leaf={self.min_leaf} nodes={len(self.nodes)}"
        ]
        for i, nd in enumerate(self.nodes):
            if nd.feature < 0:
                lines.append(f"{i}: leaf value={nd.value!r} n={nd.n_samples}")
            else:
                lines.append(
                    f"{i}: if x[{nd.feature}] <= {nd.threshold!r} "
                    f"then {nd.left} else {nd.right} n={nd.n_samples}"
                )
        imp = self.feature_importances()
        for f in np.flatnonzero(imp):
            lines.append(f"# importance x[{f}] = {imp[f]:.6f}")
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return (
            f"RegressionTree(nodes={len(self.nodes)}, leaves={self.n_leaves}, "
            f"depth={self.depth})"
        )


def _best_split(X, y, idx, min_leaf):
    """Best (feature, threshold, gain, left_idx, right_idx) or None.

    Scans features in ascending index order and thresholds in ascending value
    order, keeping the first maximum, so ties resolve deterministically.
    """
    n = len(idx)
    ys = y[idx]
    sum_all = ys.sum()
    sse_parent = float((ys * ys).sum() - sum_all * sum_all / n)
    eps = 1e-12 * (abs(sse_parent) + 1.0)
    best = None
    best_gain = eps
    for f in range(X.shape[1]):
        order = idx[np.argsort(X[idx, f], kind="stable")]
        xs = X[order, f]
        yo = y[order]
        csum = np.cumsum(yo)
        csq = np.cumsum(yo * yo)
        for i in range(min_leaf - 1, n - min_leaf):
            if xs[i] == xs[i + 1]:
                continue
            nl = i + 1
            nr = n - nl
            sl, ql = csum[i], csq[i]
            sr, qr = sum_all - sl, csq[-1] - ql
            gain = sse_parent - (ql - sl * sl / nl) - (qr - sr * sr / nr)
            if gain > best_gain:
                best_gain = gain
                thr = (xs[i] + xs[i + 1]) / 2.0
                best = (f, float(thr), float(gain), order[: i + 1], order[i + 1 :])
    return best


def fit_regression_tree(X, y, max_depth: int = 12, min_leaf: int = 5) -> RegressionTree:
    """Fit a deterministic greedy regression tree."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
        raise ValueError(f"bad training shapes {X.shape} / {y.shape}")
    nodes: list[_Node] = []

    def grow(idx, depth):
        ys = y[idx]
        mean = float(ys.mean())
        me = len(nodes)
        nodes.append(_Node(-1, 0.0, -1, -1, mean, len(idx), 0.0))
        if depth >= max_depth or len(idx) < 2 * min_leaf:
            return me
        split = _best_split(X, y, idx, min_leaf)
        if split is None:
            return me
        f, thr, gain, left_idx, right_idx = split
        nodes[me].feature = f
        nodes[me].threshold = thr
        nodes[me].gain = gain
        nodes[me].left = grow(left_idx, depth + 1)
        nodes[me].right = grow(right_idx, depth + 1)
        return me

    grow(np.arange(len(y), dtype=np.int64), 0)
    return RegressionTree(nodes, X.shape[1], max_depth, min_leaf)


def training_mse(tree: RegressionTree, X, y) -> float:
    pred = tree.predict_many(X)
    return float(np.mean((pred - np.asarray(y, dtype=np.float64)) ** 2))


def validation_error(
    X, y, holdout_fraction: float = 0.25, seed: int = 0, max_depth: int = 12, min_leaf: int = 5
) -> float:
    """MSE on a seeded random holdout split."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    if n < 2:
        raise ValueError("need at least two samples to hold out")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_hold = min(max(1, int(round(holdout_fraction * n))), n - 1)
    hold, train = order[:n_hold], order[n_hold:]
    tree = fit_regression_tree(X[train], y[train], max_depth=max_depth, min_leaf=min_leaf)
    return training_mse(tree, X[hold], y[hold])


@dataclass
class TrainingSet:
    """Bounded first-in-first-out training buffer for the search learner."""

    cap: int = 50_000
    xs: list = field(default_factory=list)
    ys: list = field(default_factory=list)

    def extend(self, X, y):
        for row, target in zip(X, y):
            self.xs.append(np.asarray(row, dtype=np.float64))
            self.ys.append(float(target))
        excess = len(self.ys) - self.cap
        if excess > 0:
            del self.xs[:excess]
            del self.ys[:excess]

    def __len__(self):
        return len(self.ys)

    def arrays(self):
        return np.array(self.xs, dtype=np.float64), np.array(self.ys, dtype=np.float64)
