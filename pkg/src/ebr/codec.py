"""Parse-matrix encoding of basis functions.

A parse matrix is a sequence of integer rows ``(t, a2, a3)``. Rows are
executed top to bottom against an accumulator ``f``: the operand codes
``a2``/``a3`` pick either an input variable (codes ``1..d``) or the
current accumulator (code ``d + 1``), and the operator code ``t`` says how
the two picked operands update ``f``.

Operator codes, in mapping-table order::

    1 s1   2 s2   3 +   4 -   5 *   6 /
    7 sqrt 8 s1^2 9 1/s1 10 log 11 exp 12 sin 13 cos

Unary operators act on ``s1`` only. Before the first row assigns it, the
accumulator holds the constant 0.

Decoded trees are canonical: operands of ``+`` and ``*`` are stored in a
fixed order, so two matrices that differ only by an ignored operand or a
commutative swap decode to equal trees with equal keys.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from .errors import CodeRangeError

__all__ = [
    "OPERATORS",
    "UNARY_OPS",
    "BINARY_OPS",
    "MappingRules",
    "Expr",
    "Var",
    "Const",
    "Unary",
    "Binary",
    "as_matrix",
    "build",
    "decode",
    "canonical_key",
    "apply_op",
    "evaluate",
    "to_infix",
    "depth",
    "variables",
    "parse_matrix_literal",
]

OPERATORS = (
    "s1", "s2", "add", "sub", "mul", "div",
    "sqrt", "square", "reciprocal", "log", "exp", "sin", "cos",
)
BINARY_OPS = frozenset({"add", "sub", "mul", "div"})
UNARY_OPS = frozenset({"sqrt", "square", "reciprocal", "log", "exp", "sin", "cos"})
COMMUTATIVE_OPS = frozenset({"add", "mul"})

# |denominator| below this makes a sample invalid.
DIV_GUARD = 1e-12
# Results within this many ulps of an exact cancellation are snapped to 0.
_CANCEL_ULPS = 4 * np.finfo(float).eps

Row = Tuple[int, int, int]
Matrix = Tuple[Row, ...]


@dataclass(frozen=True)
class MappingRules:
    """Operator and operand code tables for a ``dimension``-variable problem."""

    dimension: int
    operator_codes: Tuple[str, ...] = OPERATORS

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be positive, got {self.dimension}")
        if len(self.operator_codes) != 13:
            raise ValueError("mapping table needs exactly 13 operator codes")

    @property
    def operand_code_count(self) -> int:
        return self.dimension + 1

    @property
    def accumulator_code(self) -> int:
        return self.dimension + 1

    def operator(self, code: int) -> str:
        return self.operator_codes[code - 1]

    def rows(self):
        """All valid rows in lexicographic order."""
        n_ops = len(self.operator_codes)
        n_opd = self.operand_code_count
        return [
            (t, a, b)
            for t in range(1, n_ops + 1)
            for a in range(1, n_opd + 1)
            for b in range(1, n_opd + 1)
        ]

    def references_accumulator(self, row: Row) -> bool:
        """True if executing ``row`` reads the current accumulator."""
        t, a2, a3 = row
        acc = self.accumulator_code
        op = self.operator(t)
        if op == "s2":
            return a3 == acc
        if op in BINARY_OPS:
            return a2 == acc or a3 == acc
        return a2 == acc

    def validate(self, matrix) -> Matrix:
        """Return ``matrix`` as a tuple of row tuples, checking code ranges."""
        rows = as_matrix(matrix)
        if not rows:
            raise ValueError("parse matrix needs at least one row")
        limits = [(1, len(self.operator_codes))] + [(1, self.operand_code_count)] * 2
        for i, row in enumerate(rows, start=1):
            if len(row) != 3:
                raise ValueError(f"row {i} has {len(row)} entries, expected 3")
            for j, (value, (lo, hi)) in enumerate(zip(row, limits), start=1):
                if not lo <= value <= hi:
                    raise CodeRangeError(i, j, value, (lo, hi))
        return rows


def as_matrix(matrix) -> Matrix:
    return tuple(tuple(int(v) for v in row) for row in matrix)


def parse_matrix_literal(text: str) -> Matrix:
    """Parse ``"1,1,2;3,3,2;12,3,1"`` into a matrix (rows by ``;``)."""
    rows = []
    for i, chunk in enumerate(text.strip().split(";"), start=1):
        chunk = chunk.strip()
        if not chunk:
            raise ValueError(f"empty row {i} in matrix literal")
        try:
            rows.append(tuple(int(v) for v in chunk.split(",")))
        except ValueError:
            raise ValueError(f"non-integer entry in row {i}: {chunk!r}") from None
    return tuple(rows)


# -- expression trees -------------------------------------------------------


class Expr:
    """Immutable expression node; equality and hashing go through ``key``."""

    __slots__ = ("key",)

    def __eq__(self, other):
        return isinstance(other, Expr) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"{type(self).__name__}<{self.key}>"

    def __str__(self):
        return to_infix(self)


class Var(Expr):
    __slots__ = ("index",)

    def __init__(self, index: int):
        self.index = index
        self.key = f"x{index}"


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: float):
        self.value = float(value)
        self.key = repr(self.value) if self.value else "0"


class Unary(Expr):
    __slots__ = ("op", "child")

    def __init__(self, op: str, child: Expr):
        self.op = op
        self.child = child
        self.key = f"{op}({child.key})"


class Binary(Expr):
    __slots__ = ("op", "left", "right")

    def __init__(self, op: str, left: Expr, right: Expr):
        if op in COMMUTATIVE_OPS and right.key < left.key:
            left, right = right, left
        self.op = op
        self.left = left
        self.right = right
        self.key = f"{op}({left.key},{right.key})"


ZERO = Const(0.0)


def combine_keys(op: str, k1: str, k2: str) -> str:
    """Key of ``build(op, s1, s2)`` computed from the operand keys alone."""
    if op == "s1":
        return k1
    if op == "s2":
        return k2
    if op in BINARY_OPS:
        if op in COMMUTATIVE_OPS and k2 < k1:
            k1, k2 = k2, k1
        return f"{op}({k1},{k2})"
    return f"{op}({k1})"


def build(op: str, s1: Expr, s2: Expr) -> Expr:
    """Apply one row's operator to already-resolved operands."""
    if op == "s1":
        return s1
    if op == "s2":
        return s2
    if op in BINARY_OPS:
        return Binary(op, s1, s2)
    return Unary(op, s1)


def decode(matrix, rules: MappingRules) -> Expr:
    rows = rules.validate(matrix)
    leaves = [None] + [Var(k) for k in range(1, rules.dimension + 1)]
    f: Expr = ZERO
    for t, a2, a3 in rows:
        operands = leaves + [f]
        f = build(rules.operator(t), operands[a2], operands[a3])
    return f


def canonical_key(matrix, rules: MappingRules) -> str:
    return decode(matrix, rules).key


def depth(tree: Expr) -> int:
    if isinstance(tree, Unary):
        return 1 + depth(tree.child)
    if isinstance(tree, Binary):
        return 1 + max(depth(tree.left), depth(tree.right))
    return 1


def variables(tree: Expr) -> set:
    if isinstance(tree, Var):
        return {tree.index}
    if isinstance(tree, Unary):
        return variables(tree.child)
    if isinstance(tree, Binary):
        return variables(tree.left) | variables(tree.right)
    return set()


# -- numeric evaluation -----------------------------------------------------


def apply_op(op: str, s1: np.ndarray, s2: np.ndarray = None) -> np.ndarray:
    """Evaluate one operator componentwise; invalid components become NaN.

    NaN marks a component as invalid and propagates through every later
    operator, so infinities are folded into NaN as well (``1/inf`` would
    otherwise silently hide an overflow). Sums, differences and logarithms
    that cancel to within a few ulps of their operands are exactly 0.
    """
    with np.errstate(all="ignore"):
        if op == "add":
            out = _snap(s1 + s2, np.abs(s1) + np.abs(s2))
        elif op == "sub":
            out = _snap(s1 - s2, np.abs(s1) + np.abs(s2))
        elif op == "mul":
            out = s1 * s2
        elif op == "div":
            out = np.where(np.abs(s2) < DIV_GUARD, np.nan, s1 / s2)
        elif op == "sqrt":
            out = np.where(s1 < 0, np.nan, np.sqrt(s1))
        elif op == "square":
            out = s1 * s1
        elif op == "reciprocal":
            out = np.where(np.abs(s1) < DIV_GUARD, np.nan, 1.0 / s1)
        elif op == "log":
            out = np.where(s1 <= 0, np.nan, _snap(np.log(s1), np.abs(s1)))
        elif op == "exp":
            out = np.exp(s1)
        elif op == "sin":
            out = np.sin(s1)
        elif op == "cos":
            out = np.cos(s1)
        else:
            raise ValueError(f"unknown operator {op!r}")
    out = np.asarray(out, dtype=float)
    bad = ~np.isfinite(out)
    if bad.any():
        out = out.copy()
        out[bad] = np.nan
    return out


def _snap(out, magnitude):
    """Zero out results that are pure rounding residue of a cancellation.

    Without this, e.g. ``x - 1/(1/x)`` evaluates to scattered ulp-level
    noise instead of 0, and noise correlates with anything.
    """
    noise = np.abs(out) <= _CANCEL_ULPS * magnitude
    return np.where(noise, 0.0, out) if np.any(noise) else out


def _columns(samples) -> np.ndarray:
    x = getattr(samples, "x", samples)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return x


def evaluate(tree: Expr, samples) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate ``tree`` on an ``(m, d)`` sample matrix (or a Dataset).

    Returns ``(values, valid)`` where ``valid`` is a boolean mask; invalid
    components of ``values`` are NaN.
    """
    x = _columns(samples)
    values = _eval(tree, x)
    values = np.broadcast_to(values, (x.shape[0],)).astype(float)
    return values, np.isfinite(values)


def _eval(tree: Expr, x: np.ndarray) -> np.ndarray:
    if isinstance(tree, Var):
        if tree.index > x.shape[1]:
            raise ValueError(
                f"variable x{tree.index} exceeds sample dimension {x.shape[1]}"
            )
        return x[:, tree.index - 1]
    if isinstance(tree, Const):
        return np.full(x.shape[0], tree.value)
    if isinstance(tree, Unary):
        return apply_op(tree.op, _eval(tree.child, x))
    if isinstance(tree, Binary):
        return apply_op(tree.op, _eval(tree.left, x), _eval(tree.right, x))
    raise TypeError(f"not an expression: {tree!r}")


# -- printing ---------------------------------------------------------------

_INFIX = {"add": "+", "sub": "-", "mul": "*", "div": "/"}
_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "reciprocal": 2, "square": 3}
_ATOM = 4


def _prec(tree: Expr) -> int:
    if isinstance(tree, Binary):
        return _PREC[tree.op]
    if isinstance(tree, Unary):
        return _PREC.get(tree.op, _ATOM)
    return _ATOM


def _wrap(tree: Expr, need: bool) -> str:
    s = to_infix(tree)
    return f"({s})" if need else s


def to_infix(tree: Expr) -> str:
    """Render ``tree`` as an infix string such as ``sin(x1+x2)``.

    ``^`` denotes powers and ``log`` the natural logarithm.
    """
    if isinstance(tree, Var):
        return tree.key
    if isinstance(tree, Const):
        return repr(tree.value) if tree.value else "0"
    if isinstance(tree, Unary):
        if tree.op == "square":
            return _wrap(tree.child, _prec(tree.child) < _ATOM) + "^2"
        if tree.op == "reciprocal":
            return "1/" + _wrap(tree.child, _prec(tree.child) <= 2)
        return f"{tree.op}({to_infix(tree.child)})"
    p = _PREC[tree.op]
    left = _wrap(tree.left, _prec(tree.left) < p)
    lp = _prec(tree.right)
    right = _wrap(tree.right, lp < p or (lp == p and tree.op in ("sub", "div")))
    return f"{left}{_INFIX[tree.op]}{right}"
