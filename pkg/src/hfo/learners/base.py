"""Shared learner plumbing: specs, label codes, dispatch, serialization.

Labels are int64 everywhere: 0 encodes a completed job, 1 a failed job.
Failed is the positive class throughout the package.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Union

import numpy as np

from ..errors import ConfigError, DimensionError, EmptyTraining
from ..trace import ExitOutcome

LABEL_COMPLETED = 0
LABEL_FAILED = 1

MODEL_FORMAT = "hfo-model-v1"

RF_N_TREES = 100
LR_L2 = 1.0
LR_MAX_ITER = 1000
LR_GRAD_TOL = 1e-6


class ModelKind(Enum):
    DT = "dt"
    RF = "rf"
    LR = "lr"
    KNN = "knn"
    MAJORITY = "majority"
    RANDOM = "random"


class Distance(Enum):
    COSINE = "cosine"
    MINKOWSKI = "minkowski"


@dataclass(frozen=True)
class ClassifierSpec:
    """Everything needed to train one predictor reproducibly."""

    kind: ModelKind
    k: int = 5
    distance: Distance = Distance.MINKOWSKI
    p: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.kind is ModelKind.KNN:
            if self.k < 1:
                raise ConfigError("k must be >= 1")
            if self.k % 2 == 0:
                warnings.warn(f"even k={self.k} makes tied votes common", stacklevel=3)
            if self.p <= 0:
                raise ConfigError("p must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")


def label_to_outcome(label: int) -> ExitOutcome:
    return ExitOutcome.FAILED if label == LABEL_FAILED else ExitOutcome.COMPLETED


def outcome_to_label(outcome: ExitOutcome) -> int:
    return LABEL_FAILED if outcome is ExitOutcome.FAILED else LABEL_COMPLETED


def check_training(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    if x.ndim != 2:
        raise DimensionError(f"training matrix must be 2-d, got {x.ndim}-d")
    if y.ndim != 1 or y.shape[0] != x.shape[0]:
        raise DimensionError(f"labels shape {y.shape} does not match {x.shape[0]} rows")
    if x.shape[0] == 0:
        raise EmptyTraining("cannot fit on an empty training set")
    if not np.all((y == LABEL_COMPLETED) | (y == LABEL_FAILED)):
        raise DimensionError("labels must be 0 (completed) or 1 (failed)")
    return x, y


def check_query(x: np.ndarray, dim: int) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != dim:
        raise DimensionError(f"query matrix must be (n, {dim}), got {x.shape}")
    return x


def fit_model(spec: ClassifierSpec, x: np.ndarray, y: np.ndarray):
    """Train the model described by spec on (x, y)."""
    from .baselines import MajorityModel, RandomModel
    from .knn import KnnModel
    from .linear import LogisticModel
    from .tree import DecisionTreeModel, RandomForestModel

    x, y = check_training(x, y)
    if spec.kind is ModelKind.DT:
        return DecisionTreeModel.fit(x, y)
    if spec.kind is ModelKind.RF:
        return RandomForestModel.fit(x, y, n_trees=RF_N_TREES, seed=spec.seed)
    if spec.kind is ModelKind.LR:
        return LogisticModel.fit(x, y)
    if spec.kind is ModelKind.KNN:
        return KnnModel.fit(x, y, k=spec.k, distance=spec.distance, p=spec.p)
    if spec.kind is ModelKind.MAJORITY:
        return MajorityModel.fit(x, y)
    if spec.kind is ModelKind.RANDOM:
        return RandomModel.fit(x, y, seed=spec.seed)
    raise ConfigError(f"unknown model kind {spec.kind}")


def predict_matrix(model, x: np.ndarray) -> np.ndarray:
    """Predict int64 labels for each row of x."""
    return model.predict_matrix(check_query(x, model.dim))


def predict(model, vector) -> ExitOutcome:
    """Predict the outcome for one encoded job."""
    values = np.asarray(vector.values if hasattr(vector, "values") else vector, dtype=np.float64)
    labels = model.predict_matrix(check_query(values.reshape(1, -1), model.dim))
    return label_to_outcome(int(labels[0]))


def save_model(model, path: Union[str, Path]) -> None:
    """Write a model as a tagged JSON blob."""
    from .baselines import MajorityModel, RandomModel
    from .knn import KnnModel
    from .linear import LogisticModel
    from .tree import DecisionTreeModel, RandomForestModel

    kinds = {
        DecisionTreeModel: ModelKind.DT,
        RandomForestModel: ModelKind.RF,
        LogisticModel: ModelKind.LR,
        KnnModel: ModelKind.KNN,
        MajorityModel: ModelKind.MAJORITY,
        RandomModel: ModelKind.RANDOM,
    }
    kind = kinds.get(type(model))
    if kind is None:
        raise ConfigError(f"cannot serialize {type(model).__name__}")
    blob = {"format": MODEL_FORMAT, "kind": kind.value, "payload": model.to_payload()}
    Path(path).write_text(json.dumps(blob), encoding="utf-8")


def load_model(path: Union[str, Path]):
    """Load a model written by save_model."""
    from .baselines import MajorityModel, RandomModel
    from .knn import KnnModel
    from .linear import LogisticModel
    from .tree import DecisionTreeModel, RandomForestModel

    blob = json.loads(Path(path).read_text(encoding="utf-8"))
    if blob.get("format") != MODEL_FORMAT:
        raise ConfigError(f"unsupported model format {blob.get('format')!r}, expected {MODEL_FORMAT!r}")
    classes = {
        ModelKind.DT.value: DecisionTreeModel,
        ModelKind.RF.value: RandomForestModel,
        ModelKind.LR.value: LogisticModel,
        ModelKind.KNN.value: KnnModel,
        ModelKind.MAJORITY.value: MajorityModel,
        ModelKind.RANDOM.value: RandomModel,
    }
    cls = classes.get(blob.get("kind"))
    if cls is None:
        raise ConfigError(f"unknown model kind {blob.get('kind')!r}")
    return cls.from_payload(blob["payload"])
