"""Built-in benchmark cases and the suite runner.

Cases 1-16 are exact-fit problems, 17-24 approximation problems and 25-28
the pool-size study. Published numbers (EBR and FFX) are carried as quoted
constants for side-by-side reporting; FFX itself is not implemented.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .glm import FitOptions, RegressionModel, fit_model, format_formula
from .sampling import DEFAULT_SEED, Dataset, grid, latin_hypercube
from .search import SearchConfig, SearchReport, run_search

__all__ = [
    "REPORT_SCHEMA",
    "BenchCase",
    "CASES",
    "get_case",
    "parse_case_ids",
    "run_case",
    "run_suite",
    "render_table",
]

REPORT_SCHEMA = "ebr-bench/1"

PM3 = (-3.0, 3.0)
ONE3 = (1.0, 3.0)


@dataclass(frozen=True)
class BenchCase:
    id: int
    dimension: int
    label: str
    target: Callable[..., np.ndarray] = field(repr=False)
    domain: tuple
    points_per_axis: int
    n_presv: int
    group: str
    published: Dict[str, object] = field(default_factory=dict)
    full_points_per_axis: Optional[int] = None


def _c(id, dim, label, fn, dom, n_presv=35, group="exact", points=30, full=None, **published):
    return BenchCase(id, dim, label, fn, tuple([dom] * dim), points, n_presv, group,
                     dict(published), full)


# published columns: total_bases / ebr_bases / ebr_error_pct / ffx_bases / ffx_error_pct
# / ebr_model, all quoted verbatim and never recomputed
CASES: Dict[int, BenchCase] = {c.id: c for c in [
    _c(1, 1, "sqrt(x)", lambda x: np.sqrt(x), ONE3,
       total_bases=7488, ebr_bases=1, ffx_bases=5, ffx_error_pct=0.869,
       ebr_model="0.7071*sqrt(x+x)"),
    _c(2, 1, "x^2-sin(x)", lambda x: x**2 - np.sin(x), ONE3,
       total_bases=7493, ebr_bases=2, ffx_bases=5, ffx_error_pct=0.988,
       ebr_model="(-1)*(sin(x)-x)+(x^2-x)"),
    _c(3, 1, "cos(x^2)-x", lambda x: np.cos(x**2) - x, PM3,
       total_bases=5510, ebr_bases=1, ffx_bases=8, ffx_error_pct=6.19,
       ebr_model="cos(x^2)-x"),
    _c(4, 1, "sin(x)+2x", lambda x: np.sin(x) + 2 * x, PM3,
       total_bases=5481, ebr_bases=1, ffx_bases=4, ffx_error_pct=0.672,
       ebr_model="sin(x)+x+x"),
    _c(5, 1, "x^4+x^3+x^2+x", lambda x: x**4 + x**3 + x**2 + x, PM3,
       total_bases=5512, ebr_bases=4, ffx_bases=8, ffx_error_pct=2.08,
       ebr_model="-0.5*(x*exp(x)-x)+0.5*(x^4+x)+0.5*(x^2+x*exp(x))+0.5*(x^2+x)^2"),
    _c(6, 1, "sin(x1^2)*cos(x1)-1", lambda x: np.sin(x**2) * np.cos(x) - 1, PM3,
       total_bases=5511, ebr_bases=2, ffx_bases=9, ffx_error_pct=16.9,
       ebr_model="(-1)+0.5*sin(x1^2+x1)+0.5*sin(x1^2-x1)"),
    _c(7, 2, "x1^x2", lambda a, b: a**b, ONE3,
       total_bases=7499, ebr_bases=1, ffx_bases=8, ffx_error_pct=0.991,
       ebr_model="exp(x2*log(x1))"),
    _c(8, 2, "log(x1+x2)", lambda a, b: np.log(a + b), ONE3,
       total_bases=7489, ebr_bases=1, ffx_bases=8, ffx_error_pct=0.851,
       ebr_model="0.5*log((x1+x2)^2)"),
    _c(9, 2, "x1^2+x1-x2", lambda a, b: a**2 + a - b, PM3,
       total_bases=5507, ebr_bases=4, ffx_bases=8, ffx_error_pct=0.986,
       ebr_model="0.5*(x1^2-x2)+0.5*(x1^2+x1)+0.5*(exp(x1)-2x2)-0.5*(exp(x1)-x2-x1)"),
    _c(10, 2, "x1+2x2", lambda a, b: a + 2 * b, PM3,
       total_bases=5505, ebr_bases=2, ffx_bases=2, ffx_error_pct=0.968,
       ebr_model="x1+x2+x2"),
    _c(11, 2, "sin(x1^2-x2)", lambda a, b: np.sin(a**2 - b), PM3,
       total_bases=5509, ebr_bases=1, ffx_bases=9, ffx_error_pct=28.0,
       ebr_model="sin(x1^2-x2)"),
    _c(12, 2, "x1-exp(x1+x2)", lambda a, b: a - np.exp(a + b), PM3,
       total_bases=5489, ebr_bases=1, ffx_bases=10, ffx_error_pct=1.00,
       ebr_model="(-1)*(exp(x1+x2)-x1)"),
    _c(13, 2, "(x1+x2)/x2", lambda a, b: (a + b) / b, PM3,
       total_bases=5493, ebr_bases=2, ffx_bases=2, ffx_error_pct=7.42,
       ebr_model="0.2*(2x1-x2)/x2+0.6*(2x2+x1)/x2"),
    _c(14, 2, "6*sin(x1)*cos(x2)", lambda a, b: 6 * np.sin(a) * np.cos(b), PM3,
       total_bases=5515, ebr_bases=2, ffx_bases=9, ffx_error_pct=25.6,
       ebr_model="3*sin(x1+x2)+3*sin(x1-x2)"),
    _c(15, 3, "x1+x2+x3", lambda a, b, c: a + b + c, PM3, n_presv=200, points=7, full=10,
       total_bases=17163, ebr_bases=3, ffx_bases=11, ffx_error_pct=0.987,
       ebr_model="0.5*(x1+x2)+0.25*(2x2+2x3)+0.25*(2x1+2x3)"),
    _c(16, 3, "x1*x2+x2*x3", lambda a, b, c: a * b + b * c, PM3, n_presv=200, points=7, full=10,
       total_bases=17139, ebr_bases=4, ffx_bases=2, ffx_error_pct=0.99,
       ebr_model="(-0.25)*(x1^2-2x1x2)+0.25*(x1^2+2x1x2)+0.25*(x2^2)+0.25*(x3^2+2x2x3)"),
    _c(17, 1, "0.3*x*sin(2*pi*x)", lambda x: 0.3 * x * np.sin(2 * math.pi * x), PM3,
       group="approx", ebr_bases=7, ebr_error_pct=4.37, ffx_bases=10, ffx_error_pct=21.09),
    _c(18, 1, "log(x+1)+log(x^2+1)", lambda x: np.log(x + 1) + np.log(x**2 + 1), ONE3,
       group="approx", ebr_bases=4, ebr_error_pct=6.58e-10, ffx_bases=5, ffx_error_pct=0.967),
    _c(19, 1, "x^5+x^4+x^3+x^2+x", lambda x: x**5 + x**4 + x**3 + x**2 + x, PM3,
       group="approx", ebr_bases=7, ebr_error_pct=1.45e-7, ffx_bases=6, ffx_error_pct=1.91),
    _c(20, 1, "x^6+x^5+x^4+x^3+x^2+x",
       lambda x: x**6 + x**5 + x**4 + x**3 + x**2 + x, PM3,
       group="approx", ebr_bases=11, ebr_error_pct=4.97e-4, ffx_bases=7, ffx_error_pct=2.08),
    _c(21, 2, "log(x1+x2)+sin(x1+x2)", lambda a, b: np.log(a + b) + np.sin(a + b), ONE3,
       group="approx", ebr_bases=10, ebr_error_pct=1.19e-2, ffx_bases=8, ffx_error_pct=16.25),
    _c(22, 2, "x1^4-x1^3+x2^2/2-x2", lambda a, b: a**4 - a**3 + b**2 / 2 - b, PM3,
       group="approx", ebr_bases=5, ebr_error_pct=5.87e-2, ffx_bases=16, ffx_error_pct=3.47),
    _c(23, 2, "x1^3/5+x2^3/2-x2-x1", lambda a, b: a**3 / 5 + b**3 / 2 - b - a, PM3,
       group="approx", ebr_bases=7, ebr_error_pct=0.26, ffx_bases=12, ffx_error_pct=0.991),
    _c(24, 2, "x1*x2+sin((x1-1)*(x2-1))",
       lambda a, b: a * b + np.sin((a - 1) * (b - 1)), PM3,
       group="approx", ebr_bases=4, ebr_error_pct=3.69, ffx_bases=14, ffx_error_pct=4.18),
    _c(25, 1, "0.3*x*sin(2*pi*x)", lambda x: 0.3 * x * np.sin(2 * math.pi * x), PM3,
       n_presv=200, group="control",
       ebr_bases=21, ebr_error_pct=1.70e-2, ffx_bases=8, ffx_error_pct=19.74),
    _c(26, 1, "sin(x^3+x)", lambda x: np.sin(x**3 + x), PM3, n_presv=200, group="control",
       ebr_bases=22, ebr_error_pct=2.93e-5, ffx_bases=10, ffx_error_pct=29.61),
    _c(27, 1, "sin(x)*sin(x+x^2)", lambda x: np.sin(x) * np.sin(x + x**2), PM3,
       n_presv=200, group="control",
       ebr_bases=28, ebr_error_pct=2.23e-20, ffx_bases=9, ffx_error_pct=13.29),
    _c(28, 2, "sin(x1)+sin(x2^2)", lambda a, b: np.sin(a) + np.sin(b**2), PM3,
       n_presv=200, group="control",
       ebr_bases=21, ebr_error_pct=4.68e-8, ffx_bases=16, ffx_error_pct=7.771),
]}


def get_case(case_id: int) -> BenchCase:
    try:
        return CASES[int(case_id)]
    except (KeyError, ValueError):
        raise KeyError(f"unknown case id {case_id!r} (valid: 1-{max(CASES)})") from None


def parse_case_ids(text: str) -> List[int]:
    """``"1-6,11"`` -> ``[1, 2, 3, 4, 5, 6, 11]``; ``"all"`` for every case."""
    if text.strip().lower() == "all":
        return sorted(CASES)
    ids = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = (int(v) for v in part.split("-", 1))
            ids.extend(range(lo, hi + 1))
        elif part:
            ids.append(int(part))
    for i in ids:
        get_case(i)
    return ids


def case_dataset(
    case: BenchCase,
    points_per_axis: Optional[int] = None,
    *,
    sampling: str = "grid",
    samples: Optional[int] = None,
    seed: int = DEFAULT_SEED,
    domain=None,
) -> Dataset:
    """Training data for ``case``: a full grid by default, or ``samples``
    Latin hypercube points with ``sampling="lhs"``."""
    box = tuple(domain) if domain is not None else case.domain
    if len(box) == 1 and case.dimension > 1:
        box = box * case.dimension
    if sampling == "grid":
        x = grid(points_per_axis or case.points_per_axis, box)
    elif sampling == "lhs":
        x = latin_hypercube(samples or case.points_per_axis ** case.dimension, box, seed)
    else:
        raise ValueError(f"unknown sampling scheme {sampling!r}")
    with np.errstate(all="ignore"):  # Dataset rejects non-finite responses
        y = case.target(*x.T)
    return Dataset(x, y, box, seed=seed if sampling == "lhs" else None)


@dataclass
class CaseResult:
    case: BenchCase
    data: Dataset
    search: SearchReport
    model: RegressionModel
    elapsed: float
    row: dict


def run_case(
    case_id: int,
    *,
    n_presv: Optional[int] = None,
    row_count: int = 3,
    points_per_axis: Optional[int] = None,
    full: bool = False,
    sampling: str = "grid",
    samples: Optional[int] = None,
    seed: int = DEFAULT_SEED,
    domain=None,
    fit_options: FitOptions = FitOptions(),
    workers: int = 1,
) -> CaseResult:
    """Sample, search and fit one benchmark case.

    ``full=True`` uses the published sample count for the 3-D cases
    instead of the reduced default grid.
    """
    case = get_case(case_id)
    if points_per_axis is None and full and case.full_points_per_axis:
        points_per_axis = case.full_points_per_axis
    data = case_dataset(case, points_per_axis, sampling=sampling, samples=samples,
                        seed=seed, domain=domain)
    config = SearchConfig(n_presv or case.n_presv, row_count, case.dimension)
    t0 = time.perf_counter()
    search = run_search(config, data, workers=workers)
    model = fit_model(search.pool, data, fit_options)
    elapsed = time.perf_counter() - t0
    row = {
        "schema": REPORT_SCHEMA,
        "id": case.id,
        "group": case.group,
        "target": case.label,
        "dimension": case.dimension,
        "samples": data.m,
        "sampling": sampling,
        "n_presv": config.n_presv,
        "rows": config.row_count,
        "model": format_formula(model),
        "model_short": format_formula(model, 6),
        "terms": len(model.terms),
        "nmse": model.nmse,
        "total_valid": search.total_valid,
        "total_enumerated": search.total_enumerated,
        "elapsed_ms": round(elapsed * 1000.0, 3),
        "published": dict(case.published),
        "error": None,
    }
    return CaseResult(case, data, search, model, elapsed, row)


def _case_row(args):
    case_id, kwargs = args
    try:
        return run_case(case_id, **kwargs).row
    except Exception as exc:  # reported per case, suite keeps going
        return {"schema": REPORT_SCHEMA, "id": case_id, "error": f"{type(exc).__name__}: {exc}"}


def run_suite(
    ids: Sequence[int],
    output_path=None,
    *,
    workers: int = 1,
    **case_kwargs,
) -> List[dict]:
    """Run several cases and optionally write one JSON object per line.

    With ``workers > 1`` cases run in separate processes; rows are always
    reported in the order of ``ids``.
    """
    ids = list(ids)
    if not ids:
        raise ValueError("no case ids given")
    jobs = [(i, case_kwargs) for i in ids]
    if workers > 1 and len(ids) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(ids))) as ex:
            rows = list(ex.map(_case_row, jobs))
    else:
        rows = [_case_row(j) for j in jobs]
    if output_path is not None:
        with open(output_path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    return rows


def strip_timing(row: dict) -> dict:
    return {k: v for k, v in row.items() if k != "elapsed_ms"}


def render_table(rows: Iterable[dict]) -> str:
    """Plain-text table in the layout of the published comparison tables."""
    head = (f"{'No.':>3}  {'Target':<26} {'Samples':>7} {'n_presv':>7} {'Valid':>6} "
            f"{'Terms':>5} {'NMSE(%)':>10} {'Publ.(%)':>9} {'FFX(%)':>7}  Model")
    lines = [head, "-" * len(head)]
    for r in rows:
        if r.get("error"):
            lines.append(f"{r['id']:>3}  ERROR {r['error']}")
            continue
        p = r["published"]
        published_ebr = p.get("ebr_error_pct")
        published_ebr = "exact" if published_ebr is None else f"{published_ebr:.3g}"
        lines.append(
            f"{r['id']:>3}  {r['target']:<26} {r['samples']:>7} {r['n_presv']:>7} "
            f"{r['total_valid']:>6} {r['terms']:>5} {100 * r['nmse']:>10.3g} "
            f"{published_ebr:>9} {p.get('ffx_error_pct', float('nan')):>7.4g}  {r['model_short']}"
        )
    return "\n".join(lines)
