"""Majority and uniform-random reference predictors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import LABEL_COMPLETED, LABEL_FAILED


@dataclass
class MajorityModel:
    """Always predicts the most frequent training label; ties go completed."""

    label: int
    n_completed: int
    n_failed: int
    dim: int

    @classmethod
    def fit(cls, x: np.ndarray, y: np.ndarray) -> "MajorityModel":
        n_failed = int(np.sum(y))
        n_completed = int(y.shape[0]) - n_failed
        label = LABEL_FAILED if n_failed > n_completed else LABEL_COMPLETED
        return cls(label=label, n_completed=n_completed, n_failed=n_failed, dim=x.shape[1])

    def predict_matrix(self, x: np.ndarray) -> np.ndarray:
        return np.full(x.shape[0], self.label, dtype=np.int64)

    def to_payload(self) -> dict:
        return {
            "label": self.label,
            "n_completed": self.n_completed,
            "n_failed": self.n_failed,
            "dim": self.dim,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "MajorityModel":
        return cls(
            label=int(payload["label"]),
            n_completed=int(payload["n_completed"]),
            n_failed=int(payload["n_failed"]),
            dim=int(payload["dim"]),
        )


@dataclass
class RandomModel:
    """Uniform draw over the label values present in training.

    Draws come one per prediction from a counted PCG64 stream, so batching
    predictions or issuing them one by one yields the same label sequence,
    and serialization can resume the stream mid-way.
    """

    classes: np.ndarray
    seed: int
    dim: int
    n_draws: int = 0
    _rng: np.random.Generator = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._rng is None:
            self._rng = np.random.default_rng(self.seed)
            for _ in range(self.n_draws):
                self._rng.integers(0, self.classes.shape[0])

    @classmethod
    def fit(cls, x: np.ndarray, y: np.ndarray, seed: int = 0) -> "RandomModel":
        return cls(classes=np.unique(y), seed=seed, dim=x.shape[1])

    def predict_matrix(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(x.shape[0], dtype=np.int64)
        for i in range(x.shape[0]):
            out[i] = self.classes[int(self._rng.integers(0, self.classes.shape[0]))]
        self.n_draws += x.shape[0]
        return out

    def to_payload(self) -> dict:
        return {
            "classes": self.classes.tolist(),
            "seed": self.seed,
            "dim": self.dim,
            "n_draws": self.n_draws,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "RandomModel":
        return cls(
            classes=np.asarray(payload["classes"], dtype=np.int64),
            seed=int(payload["seed"]),
            dim=int(payload["dim"]),
            n_draws=int(payload["n_draws"]),
        )
