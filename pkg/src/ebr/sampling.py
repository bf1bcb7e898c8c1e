"""Training data: Latin hypercube and grid designs, CSV import/export."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import CsvParseError, DatasetError, MissingColumnError, ZeroVarianceError

__all__ = [
    "DEFAULT_SEED",
    "Dataset",
    "make_dataset",
    "latin_hypercube",
    "grid",
    "parse_domain",
    "load_csv",
    "write_csv",
]

DEFAULT_SEED = 20170518

Box = Tuple[Tuple[float, float], ...]


def _check_box(domain) -> Box:
    box = tuple((float(a), float(b)) for a, b in domain)
    if not box:
        raise ValueError("domain needs at least one interval")
    for k, (a, b) in enumerate(box, start=1):
        if not (np.isfinite(a) and np.isfinite(b)) or a >= b:
            raise ValueError(f"degenerate interval [{a}, {b}] for x{k}")
    return box


@dataclass(frozen=True)
class Dataset:
    """Samples ``x`` (m x d), responses ``y`` (m,) and the sampled box."""

    x: np.ndarray
    y: np.ndarray
    domain: Box
    seed: Optional[int] = None
    names: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.array(self.y, dtype=float).ravel()
        if x.shape[0] != y.shape[0]:
            raise DatasetError(f"{x.shape[0]} sample rows but {y.shape[0]} responses")
        if x.shape[0] < 2:
            raise DatasetError("need at least 2 samples")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise DatasetError("samples and responses must be finite")
        if np.ptp(y) == 0:
            raise ZeroVarianceError("zero-variance response")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "domain", tuple(tuple(map(float, iv)) for iv in self.domain))
        if not self.names:
            names = tuple(f"x{k}" for k in range(1, x.shape[1] + 1))
            object.__setattr__(self, "names", names)

    @property
    def m(self) -> int:
        return self.x.shape[0]

    @property
    def dimension(self) -> int:
        return self.x.shape[1]


def latin_hypercube(m: int, domain, seed: int) -> np.ndarray:
    """Stratified random design: each axis is cut into ``m`` equal strata
    and every stratum holds exactly one point."""
    box = _check_box(domain)
    if m < 1:
        raise ValueError("m must be positive")
    rng = np.random.default_rng(seed)
    pts = np.empty((m, len(box)))
    for k, (a, b) in enumerate(box):
        u = (rng.permutation(m) + rng.random(m)) / m
        pts[:, k] = a + u * (b - a)
    return pts


def grid(points_per_axis: int, domain) -> np.ndarray:
    """Full tensor grid with both endpoints, rows in lexicographic order."""
    box = _check_box(domain)
    if points_per_axis < 2:
        raise ValueError("points_per_axis must be at least 2")
    axes = [np.linspace(a, b, points_per_axis) for a, b in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def make_dataset(
    target: Callable[..., np.ndarray],
    domain,
    *,
    sampling: str = "grid",
    samples: int = 30,
    seed: int = DEFAULT_SEED,
) -> Dataset:
    """Sample ``target(x1, ..., xd)`` over ``domain``.

    For ``sampling="grid"`` ``samples`` is the count per axis; for ``"lhs"``
    it is the total point count.
    """
    box = _check_box(domain)
    if sampling == "grid":
        x = grid(samples, box)
    elif sampling == "lhs":
        x = latin_hypercube(samples, box, seed)
    else:
        raise ValueError(f"unknown sampling scheme {sampling!r}")
    y = np.asarray(target(*x.T), dtype=float)
    return Dataset(x, np.broadcast_to(y, (x.shape[0],)), box, seed=seed)


def parse_domain(text: str, dimension: Optional[int] = None) -> Box:
    """Parse ``"a,b"`` or ``"a,b;c,d"``; a single interval is repeated
    across ``dimension`` axes."""
    box = []
    for part in text.split(";"):
        try:
            a, b = (float(v) for v in part.split(","))
        except ValueError:
            raise ValueError(f"bad interval {part!r}, expected 'a,b'") from None
        box.append((a, b))
    if dimension is not None and len(box) == 1:
        box = box * dimension
    if dimension is not None and len(box) != dimension:
        raise ValueError(f"domain has {len(box)} intervals, need {dimension}")
    return _check_box(box)


def load_csv(path, response_column: str = "y") -> Dataset:
    """Read a headed CSV; every column except ``response_column`` is an input."""
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such data file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        if response_column not in header:
            raise MissingColumnError(
                f"{path}: response column {response_column!r} not in header {header}"
            )
        rows = []
        # header is row 1
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise DatasetError(
                    f"{path}: row {lineno} has {len(record)} cells, expected {len(header)}"
                )
            values = []
            for name, cell in zip(header, record):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise CsvParseError(path, lineno, name, cell) from None
            rows.append(values)
    if len(rows) < 2:
        raise DatasetError(f"{path}: need at least 2 data rows, found {len(rows)}")
    data = np.array(rows)
    iy = header.index(response_column)
    ix = [j for j in range(len(header)) if j != iy]
    if not ix:
        raise DatasetError(f"{path}: no input columns besides {response_column!r}")
    x = data[:, ix]
    y = data[:, iy]
    if np.ptp(y) == 0:
        raise ZeroVarianceError(f"{path}: zero-variance response")
    domain = tuple((float(lo), float(hi)) for lo, hi in zip(x.min(0), x.max(0)))
    return Dataset(x, y, domain, names=tuple(header[j] for j in ix))


def write_csv(path, data: Dataset, response_column: str = "y") -> None:
    """Write ``data`` with shortest round-trip float formatting."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(data.names) + [response_column])
        for xi, yi in zip(data.x, data.y):
            w.writerow([repr(float(v)) for v in xi] + [repr(float(yi))])
