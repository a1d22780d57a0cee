"""Backends that turn (configuration, budget) into an accuracy/fairness pair."""
from .base import EvaluationError, EvaluationRequest, EvaluationResult, MetricSpec
from .builtin import BuiltinEvaluator, evaluate_builtin
from .external import ExternalEvaluator, ProtocolError, evaluate_external
from .synthetic import Bump, SurfaceSpec, SyntheticEvaluator, evaluate_synthetic
from .trainers import logistic_loss_grad, train_logreg, train_tree

__all__ = [
    "Bump",
    "BuiltinEvaluator",
    "EvaluationError",
    "EvaluationRequest",
    "EvaluationResult",
    "ExternalEvaluator",
    "MetricSpec",
    "ProtocolError",
    "SurfaceSpec",
    "SyntheticEvaluator",
    "evaluate_builtin",
    "evaluate_external",
    "evaluate_synthetic",
    "logistic_loss_grad",
    "train_logreg",
    "train_tree",
]
