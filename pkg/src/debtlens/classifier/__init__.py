"""Classifier surface: baseline trainers, the ensemble rule, and the
exported-model adapter."""

from .baseline import (
    BaselineModel,
    MulticlassTextClassifier,
    PredictionRow,
    TextClassifier,
    compute_class_weights,
    predict_bundle,
    train_baseline_binary,
    train_baseline_multiclass,
)
from .ensemble import DebtEnsemble, EnsembleVerdict, ensemble_combine
from .export_adapter import ExportedClassifier, check_parity, load_exported_model
from .features import DEFAULT_DIM, HashedFeatures, featurize, token_index, tokenize
from .kernels import HAVE_NUMBA, resolve_backend

__all__ = [
    "BaselineModel",
    "DebtEnsemble",
    "DEFAULT_DIM",
    "EnsembleVerdict",
    "ExportedClassifier",
    "HashedFeatures",
    "HAVE_NUMBA",
    "MulticlassTextClassifier",
    "PredictionRow",
    "TextClassifier",
    "check_parity",
    "compute_class_weights",
    "ensemble_combine",
    "featurize",
    "load_exported_model",
    "predict_bundle",
    "resolve_backend",
    "token_index",
    "tokenize",
    "train_baseline_binary",
    "train_baseline_multiclass",
]
