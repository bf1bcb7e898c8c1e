"""Generalized linear model over elite bases.

The model is ``f*(x) = b0 + sum_i b_i * phi_i(x)``. Terms are chosen from
the elite pool by forward selection on training NMSE; coefficients come
from an orthogonal-triangular (QR) least-squares solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .codec import Const, Unary, Var, evaluate, to_infix
from .errors import DegenerateFitError
from .sampling import Dataset
from .scoring import ScoredBasis
from .search import ElitePool

__all__ = [
    "FitOptions",
    "Term",
    "RegressionModel",
    "least_squares",
    "nmse",
    "fit_model",
    "format_formula",
]

# A column whose distance from the span of earlier columns is below this
# fraction of its own norm is treated as dependent.
RANK_TOL = 1e-10


@dataclass(frozen=True)
class FitOptions:
    max_terms: Optional[int] = None
    nmse_target: float = 1e-10
    min_improvement: float = 1e-8
    coefficient_prune_threshold: float = 1e-8

    def __post_init__(self):
        if self.max_terms is not None and self.max_terms < 1:
            raise ValueError("max_terms must be positive")
        for name in ("nmse_target", "min_improvement", "coefficient_prune_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class Term:
    basis: ScoredBasis
    coefficient: float


@dataclass
class RegressionModel:
    intercept: float
    terms: List[Term]
    nmse: float
    fitted: np.ndarray = field(repr=False)

    @property
    def formula(self) -> str:
        return format_formula(self)

    def predict(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape[0] if x.ndim > 1 else x.size, self.intercept)
        for t in self.terms:
            out = out + t.coefficient * evaluate(t.basis.tree, x)[0]
        return out


def nmse(predicted, response) -> float:
    """``||response - predicted||^2 / ||response||^2``."""
    p = np.asarray(predicted, dtype=float)
    y = np.asarray(response, dtype=float)
    denom = float(np.dot(y, y))
    if denom == 0.0:
        raise ValueError("NMSE undefined for an all-zero response")
    r = y - p
    return float(np.dot(r, r)) / denom


def least_squares(bases: Sequence, response) -> Tuple[float, np.ndarray]:
    """Intercept plus coefficients minimising the squared residual.

    Columns are scaled to unit norm and factored with Householder QR in
    their given order (intercept first). A column that lies in the span of
    the columns before it gets a zero coefficient.
    """
    y = np.asarray(response, dtype=float)
    m = y.size
    if len(bases) + 1 > m:
        raise DegenerateFitError(f"{len(bases) + 1} columns but only {m} samples")
    cols = [np.ones(m)] + [np.asarray(b, dtype=float) for b in bases]
    a = np.column_stack(cols)
    peak = np.max(np.abs(a), axis=0)
    usable = peak > 0
    unit = a / np.where(usable, peak, 1.0)
    unorm = np.linalg.norm(unit, axis=0)
    scaled = np.where(usable, unit / np.where(usable, unorm, 1.0), 0.0)
    norms = peak * unorm
    r = np.linalg.qr(scaled, mode="r")
    diag = np.abs(np.diag(r))
    keep = usable & (diag > RANK_TOL)
    if not keep.any():
        raise DegenerateFitError("all columns are linearly dependent")
    q, rk = np.linalg.qr(scaled[:, keep])
    sol = scipy.linalg.solve_triangular(rk, q.T @ y)
    beta = np.zeros(a.shape[1])
    beta[keep] = sol / norms[keep]
    return float(beta[0]), beta[1:]


def fit_model(pool: ElitePool, data: Dataset, options: FitOptions = FitOptions()) -> RegressionModel:
    """Forward selection over the pool, then coefficient pruning.

    Each step adds the basis that minimises training NMSE with all
    coefficients refitted. Selection stops when NMSE reaches
    ``nmse_target``, when the best relative improvement falls below
    ``min_improvement``, or at ``max_terms`` (never more than ``m - 2``).
    Raises ``DegenerateFitError`` if no basis can be added at all.
    """
    entries = list(pool)
    if not entries:
        raise ValueError("cannot fit an empty pool")
    y = np.asarray(data.y, dtype=float)
    m = y.size
    ynorm2 = float(np.dot(y, y))
    if ynorm2 == 0.0:
        raise ValueError("NMSE undefined for an all-zero response")
    limit = len(entries) if options.max_terms is None else min(options.max_terms, len(entries))
    limit = min(limit, m - 2)

    # candidate columns at unit norm, deflated against the selected span
    cand = np.column_stack([e.values for e in entries]).astype(float)
    peak = np.max(np.abs(cand), axis=0)
    alive = peak > 0
    cand[:, alive] /= peak[alive]  # keeps the norms below from overflowing
    cand[:, alive] /= np.linalg.norm(cand[:, alive], axis=0)
    q0 = np.full(m, 1.0 / np.sqrt(m))
    basis = [q0]
    cand -= np.outer(q0, q0 @ cand)
    resid = y - q0 * (q0 @ y)
    err = float(resid @ resid) / ynorm2
    chosen: List[int] = []

    while len(chosen) < limit and err > options.nmse_target:
        perp = np.linalg.norm(cand, axis=0)
        ok = alive & (perp > RANK_TOL)
        ok[chosen] = False
        if not ok.any():
            break
        gain = np.zeros(len(entries))
        gain[ok] = (resid @ cand[:, ok]) ** 2 / perp[ok] ** 2
        j = int(np.argmax(gain))
        new_err = max(err - gain[j] / ynorm2, 0.0)
        if (err - new_err) <= options.min_improvement * err:
            break
        qj = cand[:, j] / perp[j]
        for qb in basis:  # second Gram-Schmidt pass
            qj = qj - qb * (qb @ qj)
        qj /= np.linalg.norm(qj)
        basis.append(qj)
        chosen.append(j)
        cand -= np.outer(qj, qj @ cand)
        resid = resid - qj * (qj @ resid)
        err = float(resid @ resid) / ynorm2

    if not chosen:
        # the response varies, so an intercept-only model is not a fit
        raise DegenerateFitError(
            f"no pool basis can enter the model ({m} samples, {len(entries)} bases)"
        )
    return _refit(entries, chosen, y, options)


def _refit(entries, chosen, y, options) -> RegressionModel:
    chosen = list(chosen)
    while True:
        b0, beta = least_squares([entries[j].values for j in chosen], y)
        if not chosen:
            break
        scale = np.max(np.abs(beta))
        small = np.abs(beta) < options.coefficient_prune_threshold * scale
        if scale == 0.0:
            small[:] = True
        if not small.any():
            break
        chosen = [j for j, s in zip(chosen, small) if not s]
    fitted = np.full(y.size, b0)
    for j, c in zip(chosen, beta):
        fitted = fitted + c * entries[j].values
    terms = [Term(entries[j], float(c)) for j, c in zip(chosen, beta)]
    return RegressionModel(b0, terms, nmse(fitted, y), fitted)


def _num(value: float, digits: Optional[int]) -> str:
    return repr(float(value)) if digits is None else f"{value:.{digits}g}"


def format_formula(model: RegressionModel, digits: Optional[int] = None) -> str:
    """Render the model as ``b0 + c1*phi1 + ...``.

    With ``digits=None`` every number is printed in shortest round-trip
    form, so the string reproduces the fitted values. With ``digits`` set,
    numbers are rounded and parts contributing less than ``10**-digits`` of
    the fitted range are left out.
    """
    scale = float(np.max(np.abs(model.fitted))) if model.fitted is not None else 0.0
    cutoff = 0.0 if digits is None else scale * 10.0 ** (-digits)
    pieces = []
    if model.intercept != 0.0 and abs(model.intercept) >= cutoff:
        pieces.append((model.intercept < 0, _num(abs(model.intercept), digits)))
    for t in model.terms:
        c = t.coefficient
        size = abs(c) * (np.max(np.abs(t.basis.values)) if t.basis.values is not None else 1.0)
        if size < cutoff:
            continue
        body = to_infix(t.basis.tree)
        mag = _num(abs(c), digits)
        bare = mag in ("1", "1.0")
        if _needs_parens(t.basis.tree) and (c < 0 or not bare):
            body = f"({body})"
        pieces.append((c < 0, body if bare else f"{mag}*{body}"))
    if not pieces:
        return "0"
    neg, first = pieces[0]
    text = f"-{first}" if neg else first
    for neg, piece in pieces[1:]:
        text += f" - {piece}" if neg else f" + {piece}"
    return text


def _needs_parens(tree) -> bool:
    if isinstance(tree, (Var, Const)):
        return False
    if isinstance(tree, Unary):
        return tree.op in ("square", "reciprocal")
    return True
