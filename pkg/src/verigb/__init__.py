"""Robustness verification for gradient-boosted tree ensembles via SMT."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    Classifier,
    DecisionTree,
    FeatureKind,
    FeatureSpec,
    Internal,
    Leaf,
    Model,
    NodeCondition,
    Regressor,
    eval_classifier,
    eval_regressor,
    eval_tree,
    validate,
)
from .modelio import load_model, save_model  # noqa: E402
from .query import Norm, RobustnessQuery  # noqa: E402
from .robustness import check_local, check_universal, validate_counterexample  # noqa: E402
from .solver import SolverConfig  # noqa: E402
from .verdict import CounterExample, Verdict, VerdictKind  # noqa: E402
