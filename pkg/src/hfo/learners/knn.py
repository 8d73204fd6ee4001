"""k-nearest-neighbour prediction over an explicit reference set.

Distances tie-break by insertion order: candidates are ranked with a stable
argsort, so an earlier reference row wins an exact distance tie. A tied vote
(possible with an even k or a truncated neighbourhood) falls back to the
majority label of the eligible reference rows, and a tie there predicts
completed.

The reference set is a value: extend() returns a new model sharing no
mutable state, which keeps streaming evaluation free of aliasing bugs. For
windowed streaming, predict_one accepts a boolean activity mask; inactive
rows are pushed to infinite distance and drop out of both the vote and the
fallback majority.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .. import kernels
from ..errors import DimensionError, EmptyTraining
from .base import Distance, LABEL_COMPLETED, LABEL_FAILED


def knn_vote(failed_votes: int, kk: int, eligible_failed: int, n_eligible: int) -> int:
    """Resolve a k-vote: strict majority wins; a tie falls back to the
    majority label of the eligible reference rows, then to completed."""
    if 2 * failed_votes > kk:
        return LABEL_FAILED
    if 2 * failed_votes < kk:
        return LABEL_COMPLETED
    if 2 * eligible_failed > n_eligible:
        return LABEL_FAILED
    return LABEL_COMPLETED


@dataclass
class KnnModel:
    refs: np.ndarray
    labels: np.ndarray
    norms: np.ndarray
    k: int
    distance: Distance
    p: float
    dim: int

    @classmethod
    def fit(
        cls,
        x: np.ndarray,
        y: np.ndarray,
        k: int = 5,
        distance: Distance = Distance.MINKOWSKI,
        p: float = 2.0,
    ) -> "KnnModel":
        return cls(
            refs=x.copy(),
            labels=y.copy(),
            norms=np.asarray(kernels.row_norms(x)),
            k=int(k),
            distance=distance,
            p=float(p),
            dim=x.shape[1],
        )

    @property
    def n_refs(self) -> int:
        return self.refs.shape[0]

    def extend(self, x_new: np.ndarray, y_new: np.ndarray) -> "KnnModel":
        """New model whose reference set appends (x_new, y_new) after the
        current rows, preserving insertion order for tie-breaks."""
        x_new = np.ascontiguousarray(x_new, dtype=np.float64)
        y_new = np.ascontiguousarray(y_new, dtype=np.int64)
        if x_new.ndim != 2 or x_new.shape[1] != self.dim:
            raise DimensionError(f"extension matrix must be (n, {self.dim}), got {x_new.shape}")
        if x_new.shape[0] == 0:
            return KnnModel(self.refs, self.labels, self.norms, self.k, self.distance, self.p, self.dim)
        return KnnModel(
            refs=np.concatenate([self.refs, x_new], axis=0),
            labels=np.concatenate([self.labels, y_new]),
            norms=np.concatenate([self.norms, np.asarray(kernels.row_norms(x_new))]),
            k=self.k,
            distance=self.distance,
            p=self.p,
            dim=self.dim,
        )

    def distances(self, q: np.ndarray) -> np.ndarray:
        q = np.ascontiguousarray(q, dtype=np.float64)
        if self.distance is Distance.COSINE:
            return np.asarray(kernels.cosine_distances(self.refs, self.norms, q))
        return np.asarray(kernels.minkowski_distances(self.refs, q, self.p))

    def predict_one(self, q: np.ndarray, active: Optional[np.ndarray] = None) -> int:
        dist = self.distances(q)
        if active is None:
            eligible = self.labels
            n_active = self.n_refs
        else:
            dist = np.where(active, dist, np.inf)
            eligible = self.labels[active]
            n_active = int(eligible.shape[0])
        if n_active == 0:
            raise EmptyTraining("no eligible reference jobs for this query")
        kk = min(self.k, n_active)
        order = np.argsort(dist, kind="stable")[:kk]
        return knn_vote(int(np.sum(self.labels[order])), kk, int(np.sum(eligible)), n_active)

    def predict_matrix(self, x: np.ndarray) -> np.ndarray:
        return np.array([self.predict_one(x[i]) for i in range(x.shape[0])], dtype=np.int64)

    def to_payload(self) -> dict:
        return {
            "refs": self.refs.tolist(),
            "labels": self.labels.tolist(),
            "k": self.k,
            "distance": self.distance.value,
            "p": self.p,
            "dim": self.dim,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "KnnModel":
        refs = np.asarray(payload["refs"], dtype=np.float64).reshape(-1, int(payload["dim"]))
        return cls(
            refs=refs,
            labels=np.asarray(payload["labels"], dtype=np.int64),
            norms=np.asarray(kernels.row_norms(refs)),
            k=int(payload["k"]),
            distance=Distance(payload["distance"]),
            p=float(payload["p"]),
            dim=int(payload["dim"]),
        )


def extend_reference_set(model: KnnModel, newly_finished) -> KnnModel:
    """Append (FeatureVector, ExitOutcome) pairs to a model's reference set."""
    from .base import outcome_to_label

    if not newly_finished:
        return model.extend(np.empty((0, model.dim)), np.empty(0, dtype=np.int64))
    x = np.stack([np.asarray(fv.values, dtype=np.float64) for fv, _ in newly_finished])
    y = np.array([outcome_to_label(outcome) for _, outcome in newly_finished], dtype=np.int64)
    return model.extend(x, y)
