"""Decision tree and random forest over the shared tree kernels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from .base import LABEL_FAILED


@dataclass
class DecisionTreeModel:
    """CART tree minimizing weighted Gini impurity.

    Growth stops at pure nodes or when no split strictly improves the score.
    Equal-scoring splits resolve to the lowest feature index, then the lowest
    threshold, so refitting on the same data rebuilds the same tree.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_p: np.ndarray
    dim: int

    @classmethod
    def fit(cls, x: np.ndarray, y: np.ndarray, mtry: int = 0, seed: int = 0) -> "DecisionTreeModel":
        feature, threshold, left, right, leaf_p = kernels.build_tree(x, y, mtry, seed)
        return cls(feature, threshold, left, right, leaf_p, x.shape[1])

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return kernels.tree_apply(self.feature, self.threshold, self.left, self.right, self.leaf_p, x)

    def predict_matrix(self, x: np.ndarray) -> np.ndarray:
        # a node with exactly half failed votes completed
        return (self.predict_proba(x) > 0.5).astype(np.int64)

    def to_payload(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "leaf_p": self.leaf_p.tolist(),
            "dim": self.dim,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "DecisionTreeModel":
        return cls(
            np.asarray(payload["feature"], dtype=np.int32),
            np.asarray(payload["threshold"], dtype=np.float64),
            np.asarray(payload["left"], dtype=np.int32),
            np.asarray(payload["right"], dtype=np.int32),
            np.asarray(payload["leaf_p"], dtype=np.float64),
            int(payload["dim"]),
        )


@dataclass
class RandomForestModel:
    """Bagged CART trees over floor(sqrt(d))-feature subsets per split.

    Each tree trains on n rows drawn with replacement. The forest averages
    the trees' failed-class probabilities; a job is predicted failed only
    when that mean strictly exceeds one half, so an exact tie resolves to
    completed.
    """

    trees: list[DecisionTreeModel]
    dim: int

    @classmethod
    def fit(cls, x: np.ndarray, y: np.ndarray, n_trees: int = 100, seed: int = 0) -> "RandomForestModel":
        n, d = x.shape
        mtry = max(1, int(np.floor(np.sqrt(d))))
        root = np.random.SeedSequence(seed)
        trees = []
        for child in root.spawn(n_trees):
            rng = np.random.default_rng(child)
            rows = rng.integers(0, n, size=n)
            tree_seed = int(child.generate_state(1)[0])
            trees.append(DecisionTreeModel.fit(x[rows], y[rows], mtry=mtry, seed=tree_seed))
        return cls(trees, d)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        acc = np.zeros(x.shape[0], dtype=np.float64)
        for tree in self.trees:
            acc += tree.predict_proba(x)
        return acc / len(self.trees)

    def predict_matrix(self, x: np.ndarray) -> np.ndarray:
        return (self.predict_proba(x) > 0.5).astype(np.int64)

    def to_payload(self) -> dict:
        return {"trees": [t.to_payload() for t in self.trees], "dim": self.dim}

    @classmethod
    def from_payload(cls, payload: dict) -> "RandomForestModel":
        return cls([DecisionTreeModel.from_payload(t) for t in payload["trees"]], int(payload["dim"]))


__all__ = ["DecisionTreeModel", "RandomForestModel", "LABEL_FAILED"]
