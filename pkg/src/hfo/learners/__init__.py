"""Failure predictors trained on encoded submit-time features."""

from .base import (
    ClassifierSpec,
    Distance,
    LABEL_COMPLETED,
    LABEL_FAILED,
    LR_GRAD_TOL,
    LR_L2,
    LR_MAX_ITER,
    MODEL_FORMAT,
    ModelKind,
    RF_N_TREES,
    fit_model,
    label_to_outcome,
    load_model,
    outcome_to_label,
    predict,
    predict_matrix,
    save_model,
)
from .baselines import MajorityModel, RandomModel
from .knn import KnnModel, extend_reference_set, knn_vote
from .linear import LogisticModel, logistic_gradient, logistic_objective
from .tree import DecisionTreeModel, RandomForestModel

__all__ = [
    "ClassifierSpec",
    "Distance",
    "ModelKind",
    "LABEL_COMPLETED",
    "LABEL_FAILED",
    "MODEL_FORMAT",
    "RF_N_TREES",
    "LR_L2",
    "LR_MAX_ITER",
    "LR_GRAD_TOL",
    "fit_model",
    "predict",
    "predict_matrix",
    "save_model",
    "load_model",
    "label_to_outcome",
    "outcome_to_label",
    "DecisionTreeModel",
    "RandomForestModel",
    "LogisticModel",
    "logistic_objective",
    "logistic_gradient",
    "KnnModel",
    "extend_reference_set",
    "knn_vote",
    "MajorityModel",
    "RandomModel",
]
