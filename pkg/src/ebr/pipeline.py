"""End-to-end regression: search the basis space, then fit the GLM."""

from __future__ import annotations

from dataclasses import dataclass

from .glm import FitOptions, RegressionModel, fit_model
from .sampling import Dataset
from .search import SearchConfig, SearchReport, run_search


@dataclass
class FitResult:
    search: SearchReport
    model: RegressionModel


def regress(
    data: Dataset,
    *,
    n_presv: int = 35,
    row_count: int = 3,
    options: FitOptions = FitOptions(),
    workers: int = 1,
) -> FitResult:
    config = SearchConfig(n_presv, row_count, data.dimension)
    search = run_search(config, data, workers=workers)
    return FitResult(search, fit_model(search.pool, data, options))
