"""Correlation scoring of candidate bases."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import Expr, Matrix

__all__ = ["NEAR_DUPLICATE_TOL", "ScoredBasis", "correlation", "correlator", "is_constant",
           "near_duplicate"]

# Two bases whose |rho| differ by less than this are treated as duplicates.
NEAR_DUPLICATE_TOL = 1e-7
_CONSTANT_VAR = 1e-300
# relative spread below which a vector is rounding noise around a constant
_CONSTANT_REL = 1e-12


@dataclass(frozen=True, eq=False)
class ScoredBasis:
    matrix: Matrix
    tree: Expr
    abs_corr: float
    values: np.ndarray = None

    @property
    def canonical_key(self) -> str:
        return self.tree.key

    @property
    def rank(self):
        """Sort key: higher score first, then smaller matrix."""
        return (-self.abs_corr, self.matrix)


def _centered_unit(v: np.ndarray):
    # Rescale before centering so that very large basis values cannot
    # overflow the sums of squares.
    scale = np.max(np.abs(v))
    if not np.isfinite(scale) or scale == 0.0:
        return None, 0.0
    u = v / scale
    u = u - u.mean()
    if np.max(np.abs(u)) <= _CONSTANT_REL:
        return u, 0.0
    var = np.dot(u, u) / u.size
    return u, var


def is_constant(values) -> bool:
    """True for vectors scored as constant by :func:`correlation`."""
    u, var = _centered_unit(np.asarray(values, dtype=float))
    return u is None or var < _CONSTANT_VAR


def correlator(response):
    """Return ``f(values) -> rho`` with the response moments precomputed.

    ``correlator(y)(v)`` is bit-identical to ``correlation(v, y)``.
    """
    y = np.asarray(response, dtype=float)
    w, var_w = _centered_unit(y)
    if w is None or var_w < _CONSTANT_VAR:
        raise ValueError("response has zero variance")

    def rho(values) -> float:
        v = np.asarray(values, dtype=float)
        if v.shape != y.shape:
            raise ValueError(f"shape mismatch {v.shape} vs {y.shape}")
        u, var_u = _centered_unit(v)
        if u is None or var_u < _CONSTANT_VAR:
            return 0.0
        r = (np.dot(u, w) / u.size) / np.sqrt(var_u * var_w)
        return float(min(1.0, max(-1.0, r)))

    return rho


def correlation(values, response) -> float:
    """Pearson correlation of two equal-length vectors.

    Population moments are used throughout. A constant ``values`` vector,
    or one whose spread is within ``1e-12`` of its magnitude, scores 0.
    """
    return correlator(response)(values)


def near_duplicate(score_a: float, score_b: float) -> bool:
    return abs(abs(score_a) - abs(score_b)) < NEAR_DUPLICATE_TOL
