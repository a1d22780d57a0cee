import numpy as np
import pytest

from fairhpo.searchspace import parse_space

SPACE_DOC = {
    "params": {"undersampling": {"kind": "categorical", "values": ["0.20", "0.10", "0.05", "none"]}},
    "selector": {"name": "model", "values": ["logreg", "tree"]},
    "branches": {
        "logreg": {
            "learning_rate": {"kind": "log-uniform", "low": 1e-3, "high": 0.5},
            "l2_penalty": {"kind": "log-uniform", "low": 1e-4, "high": 1.0},
            "epochs": {"kind": "int", "low": 0, "high": 100},
            "class_weighting": {"kind": "categorical", "values": ["none", "balanced"]},
        },
        "tree": {
            "max_depth": {"kind": "int", "low": 0, "high": 6},
            "min_samples_leaf": {"kind": "int", "low": 1, "high": 30},
            "split_criterion": {"kind": "categorical", "values": ["gini", "entropy"]},
        },
    },
}

SYNTH_DOC = {
    "selector": {"name": "model", "values": ["a", "b"]},
    "branches": {
        "a": {"x": {"kind": "uniform", "low": 0.0, "high": 1.0}, "y": {"kind": "uniform", "low": 0.0, "high": 1.0}},
        "b": {"z": {"kind": "log-uniform", "low": 1e-3, "high": 1.0}, "k": {"kind": "int", "low": 1, "high": 9}},
    },
}


@pytest.fixture
def space():
    return parse_space(SPACE_DOC)


@pytest.fixture
def synth_space():
    return parse_space(SYNTH_DOC)


def toy_dataset(n=500, seed=0, prevalence=0.3):
    """Two informative features, one noise feature, two sensitive groups."""
    from fairhpo.datakit import from_arrays

    rng = np.random.default_rng(seed)
    y = (rng.random(n) < prevalence).astype(int)
    g = np.where(rng.random(n) < 0.5, "A", "B")
    shift = np.where(g == "A", 0.5, 0.0)
    X = np.column_stack([y + rng.normal(0, 1.0, n) + shift, y * 0.5 + rng.normal(0, 1.0, n), rng.normal(0, 1, n)])
    return from_arrays(X, y, g)
