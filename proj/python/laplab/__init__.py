"""Local and consensus estimators for discrete Markov random fields."""

from ._laplab import (
    CapExceeded,
    Model,
    NonFiniteError,
    ParseError,
    check,
    estimate,
    experiment_csv,
    generate_model,
    parse_estimator,
    run_experiment,
)

__all__ = [
    "CapExceeded",
    "Model",
    "NonFiniteError",
    "ParseError",
    "check",
    "estimate",
    "experiment_csv",
    "generate_model",
    "parse_estimator",
    "run_experiment",
]
