"""Elite bases regression: deterministic symbolic regression by exhaustive
parse-matrix basis enumeration, correlation ranking and a linear model over
the best-ranked bases."""

from .codec import MappingRules, decode, evaluate, to_infix
from .glm import FitOptions, RegressionModel, fit_model, format_formula, least_squares, nmse
from .pipeline import FitResult, regress
from .sampling import Dataset, grid, latin_hypercube, load_csv, make_dataset
from .scoring import correlation, near_duplicate
from .search import ElitePool, SearchConfig, enumerate_candidates, run_search

__version__ = "0.1.0"

__all__ = [
    "MappingRules",
    "decode",
    "evaluate",
    "to_infix",
    "FitOptions",
    "RegressionModel",
    "fit_model",
    "format_formula",
    "least_squares",
    "nmse",
    "FitResult",
    "regress",
    "Dataset",
    "grid",
    "latin_hypercube",
    "load_csv",
    "make_dataset",
    "correlation",
    "near_duplicate",
    "ElitePool",
    "SearchConfig",
    "enumerate_candidates",
    "run_search",
]
