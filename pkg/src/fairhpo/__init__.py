"""Fairness-aware hyperparameter optimisation: RS, TPE and Hyperband with
accuracy/fairness scalarization, plus the data, metric and experiment tooling
around them."""

__version__ = "0.1.0"
