"""Exhaustive basis enumeration and the bounded elite pool.

Every parse matrix with ``row_count`` rows is a path through the row
table, and the decoded tree after ``k`` rows depends only on the tree after
``k - 1`` rows and the k-th row. Enumeration therefore runs level by level
over *distinct* trees: at each level the accumulator trees of the previous
level (kept in order of their smallest producing matrix) are extended by
every row that reads the accumulator, while rows that ignore it are only
applied once, after the smallest prefix. Visiting (prefix, row) pairs in
that order meets every tree for the first time through its
lexicographically smallest matrix, which becomes its representative.

Scoring follows the same recursion, so a candidate's values are computed
with one vector operation from its parent's values.
"""

from __future__ import annotations

import bisect
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np

from .codec import (
    ZERO,
    Expr,
    MappingRules,
    Matrix,
    Var,
    apply_op,
    build,
    combine_keys,
    decode,
    evaluate,
)
from .sampling import Dataset
from .scoring import (
    NEAR_DUPLICATE_TOL,
    ScoredBasis,
    correlation,
    correlator,
    is_constant,
    near_duplicate,
)

# |corr(a, b)| at or above 1 - AFFINE_TOL means b is an affine copy of a
AFFINE_TOL = 1e-10

__all__ = [
    "SearchConfig",
    "ElitePool",
    "redundant",
    "SearchReport",
    "iter_matrices",
    "raw_count",
    "enumerate_candidates",
    "run_search",
]


@dataclass(frozen=True)
class SearchConfig:
    n_presv: int = 35
    row_count: int = 3
    dimension: int = 1

    def __post_init__(self):
        if self.n_presv < 1:
            raise ValueError("n_presv must be at least 1")
        if self.row_count < 1:
            raise ValueError("row_count must be at least 1")
        if self.dimension < 1:
            raise ValueError("dimension must be at least 1")

    @property
    def rules(self) -> MappingRules:
        return MappingRules(self.dimension)


class ElitePool:
    """Top-``capacity`` bases by ``|rho|``, free of duplicate bases.

    Entries stay sorted by ``(-abs_corr, matrix)``. A candidate whose score
    is within ``NEAR_DUPLICATE_TOL`` of a member's and whose values are an
    affine copy of that member's is a duplicate and is rejected; the member
    already in the pool always wins. Entries without ``values`` are
    compared on score alone.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.capacity = capacity
        self.entries: List[ScoredBasis] = []
        self._ranks: list = []
        self._keys: set = set()

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def scores(self) -> List[float]:
        return [e.abs_corr for e in self.entries]

    def offer(self, candidate: ScoredBasis) -> bool:
        """Try to insert ``candidate``; return whether it was accepted."""
        rank = candidate.rank
        if len(self.entries) >= self.capacity and rank >= self._ranks[-1]:
            return False
        key = candidate.canonical_key
        if key in self._keys:
            return False
        s = candidate.abs_corr
        # ranks are sorted by -score: start at the first member below s + tol
        lo = bisect.bisect_right(self._ranks, (-(s + NEAR_DUPLICATE_TOL), ()))
        for i in range(lo, len(self.entries)):
            member = self.entries[i]
            if member.abs_corr <= s - NEAR_DUPLICATE_TOL:
                break
            if near_duplicate(member.abs_corr, s) and redundant(member, candidate):
                return False
        if len(self.entries) >= self.capacity:
            self._remove(len(self.entries) - 1)
        i = bisect.bisect_left(self._ranks, rank)
        self.entries.insert(i, candidate)
        self._ranks.insert(i, rank)
        self._keys.add(key)
        return True

    def _remove(self, i):
        gone = self.entries.pop(i)
        self._ranks.pop(i)
        self._keys.discard(gone.canonical_key)


def redundant(a, b) -> bool:
    """True if the values of ``a`` and ``b`` are affine copies of each other.

    Bases without values are assumed redundant, leaving the score test alone
    to decide.
    """
    va, vb = a.values, b.values
    if va is None or vb is None:
        return True
    flat_a, flat_b = is_constant(va), is_constant(vb)
    if flat_a or flat_b:
        return flat_a and flat_b
    return abs(correlation(va, vb)) >= 1.0 - AFFINE_TOL


@dataclass
class SearchReport:
    config: SearchConfig
    total_enumerated: int
    total_valid: int
    pool: ElitePool
    wall_time: float
    rejected: Optional[list] = field(default=None, repr=False)


def raw_count(config: SearchConfig) -> int:
    """Number of parse matrices before any deduplication."""
    per_row = 13 * (config.dimension + 1) ** 2
    return per_row ** config.row_count


def iter_matrices(rules: MappingRules, row_count: int) -> Iterator[Matrix]:
    """Every parse matrix in lexicographic order (no deduplication)."""
    return itertools.product(rules.rows(), repeat=row_count)


def _row_plan(rules: MappingRules):
    rows = rules.rows()
    plan = [(r, rules.operator(r[0])) for r in rows]
    reads_f = [p for p in plan if rules.references_accumulator(p[0])]
    return plan, reads_f


def enumerate_candidates(config: SearchConfig) -> Iterator[Tuple[Matrix, Expr]]:
    """Yield one ``(matrix, tree)`` per distinct decoded tree.

    ``matrix`` is the lexicographically smallest matrix decoding to
    ``tree``; results come in increasing ``matrix`` order.
    """
    rules = config.rules
    d = rules.dimension
    leaves = [None] + [Var(k) for k in range(1, d + 1)]
    plan, reads_f = _row_plan(rules)
    prev = [(ZERO, ())]
    for level in range(1, config.row_count + 1):
        seen = {}
        for i, (f, rep) in enumerate(prev):
            operands = leaves + [f]
            for row, op in plan if i == 0 else reads_f:
                tree = build(op, operands[row[1]], operands[row[2]])
                if tree.key not in seen:
                    seen[tree.key] = (tree, rep + (row,))
                    if level == config.row_count:
                        yield rep + (row,), tree
        prev = list(seen.values())


def _expand(x, d, prefixes, first, plan, reads_f, scorer=None):
    """Extend the given prefix trees by one row.

    ``prefixes`` is a list of ``(key, rep, values)`` in representative
    order. Returns ``[(key, rep, values)]`` for the new valid trees in
    first-seen order (``values`` replaced by ``scorer(values)`` when a
    scorer is given) and the number of distinct invalid trees met.
    """
    leaf_keys = [None] + [f"x{k}" for k in range(1, d + 1)]
    leaf_vals = [None] + [x[:, k] for k in range(d)]
    seen = set()
    out = []
    n_invalid = 0
    for i, (fkey, rep, fvals) in enumerate(prefixes):
        keys = leaf_keys + [fkey]
        vals = leaf_vals + [fvals]
        for row, op in plan if (first and i == 0) else reads_f:
            key = combine_keys(op, keys[row[1]], keys[row[2]])
            if key in seen:
                continue
            seen.add(key)
            if op == "s1":
                v = vals[row[1]]
            elif op == "s2":
                v = vals[row[2]]
            else:
                v = apply_op(op, vals[row[1]], vals[row[2]])
            if not np.isfinite(v).all():
                n_invalid += 1
                continue
            out.append((key, rep + (row,), v if scorer is None else scorer(v)))
    return out, n_invalid


def _score_chunk(args):
    x, y, d, reps, first, row_count = args
    rules = MappingRules(d)
    plan, reads_f = _row_plan(rules)
    prefixes = []
    for rep in reps:
        tree = decode(rep, rules) if rep else ZERO
        vals = evaluate(tree, x)[0] if rep else np.zeros(x.shape[0])
        prefixes.append((tree.key, rep, vals))
    rho = correlator(y)
    found, _ = _expand(x, d, prefixes, first, plan, reads_f, lambda v: abs(rho(v)))
    return found


def run_search(
    config: SearchConfig,
    data: Dataset,
    *,
    workers: int = 1,
    record_rejections: bool = False,
) -> SearchReport:
    """Enumerate, validate, score and pool every distinct basis.

    Candidates invalid on any sample are dropped. Valid candidates are
    offered to the pool in representative-matrix order, so the outcome does
    not depend on ``workers``.
    """
    if data.dimension != config.dimension:
        raise ValueError(
            f"dataset has dimension {data.dimension}, config expects {config.dimension}"
        )
    t0 = time.perf_counter()
    rules = config.rules
    d = config.dimension
    x, y = data.x, data.y
    plan, reads_f = _row_plan(rules)

    prefixes = [("0", (), np.zeros(data.m))]
    for _ in range(config.row_count - 1):
        prefixes, _ = _expand(x, d, prefixes, True, plan, reads_f)

    # last level: score instead of storing values
    if workers > 1 and len(prefixes) > 1:
        reps = [rep for _, rep, _ in prefixes]
        bounds = np.linspace(0, len(reps), min(workers, len(reps)) + 1).astype(int)
        jobs = [
            (x, y, d, reps[a:b], a == 0, config.row_count)
            for a, b in zip(bounds[:-1], bounds[1:])
            if b > a
        ]
        with ProcessPoolExecutor(max_workers=len(jobs)) as pool_exec:
            parts = list(pool_exec.map(_score_chunk, jobs))
    else:
        rho = correlator(y)
        found, _ = _expand(x, d, prefixes, True, plan, reads_f, lambda v: abs(rho(v)))
        parts = [found]

    merged = {}
    for part in parts:
        for key, rep, score in part:
            if key not in merged:
                merged[key] = (rep, score)

    def load(rep):
        return evaluate(decode(rep, rules), x)[0]

    pool = ElitePool(config.n_presv)
    rejected = [] if record_rejections else None
    for key, (rep, score) in merged.items():
        cand = _Candidate(rep, key, score, load)
        if not pool.offer(cand) and rejected is not None:
            rejected.append(cand)

    # materialise trees and values for the survivors only
    final = ElitePool(config.n_presv)
    for c in pool.entries:
        tree = decode(c.matrix, rules)
        vals = evaluate(tree, x)[0]
        vals.setflags(write=False)
        final.entries.append(ScoredBasis(c.matrix, tree, c.abs_corr, vals))
        final._ranks.append((-c.abs_corr, c.matrix))
        final._keys.add(tree.key)

    return SearchReport(
        config=config,
        total_enumerated=raw_count(config),
        total_valid=len(merged),
        pool=final,
        wall_time=time.perf_counter() - t0,
        rejected=rejected,
    )


class _Candidate:
    """Stand-in for ScoredBasis during the pool replay; values are only
    computed if a duplicate check needs them."""

    __slots__ = ("matrix", "canonical_key", "abs_corr", "_load", "_values")

    def __init__(self, matrix, key, abs_corr, load):
        self.matrix = matrix
        self.canonical_key = key
        self.abs_corr = abs_corr
        self._load = load
        self._values = None

    @property
    def values(self):
        if self._values is None:
            self._values = self._load(self.matrix)
        return self._values

    @property
    def rank(self):
        return (-self.abs_corr, self.matrix)
