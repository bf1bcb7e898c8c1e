import json
import math

import numpy as np
import pytest

from ebr.bench import (
    CASES,
    REPORT_SCHEMA,
    case_dataset,
    get_case,
    parse_case_ids,
    render_table,
    run_case,
    run_suite,
    strip_timing,
)

# Scalar transcriptions written independently of the numpy targets.
SCALAR = {
    1: lambda x: math.sqrt(x),
    2: lambda x: x * x - math.sin(x),
    3: lambda x: math.cos(x * x) - x,
    4: lambda x: math.sin(x) + 2 * x,
    5: lambda x: x ** 4 + x ** 3 + x ** 2 + x,
    6: lambda x: math.sin(x * x) * math.cos(x) - 1,
    7: lambda a, b: math.pow(a, b),
    8: lambda a, b: math.log(a + b),
    9: lambda a, b: a * a + a - b,
    10: lambda a, b: a + 2 * b,
    11: lambda a, b: math.sin(a * a - b),
    12: lambda a, b: a - math.exp(a + b),
    13: lambda a, b: (a + b) / b,
    14: lambda a, b: 6 * math.sin(a) * math.cos(b),
    15: lambda a, b, c: a + b + c,
    16: lambda a, b, c: a * b + b * c,
    17: lambda x: 0.3 * x * math.sin(2 * math.pi * x),
    18: lambda x: math.log(x + 1) + math.log(x * x + 1),
    19: lambda x: sum(x ** k for k in range(1, 6)),
    20: lambda x: sum(x ** k for k in range(1, 7)),
    21: lambda a, b: math.log(a + b) + math.sin(a + b),
    22: lambda a, b: a ** 4 - a ** 3 + b * b / 2 - b,
    23: lambda a, b: a ** 3 / 5 + b ** 3 / 2 - b - a,
    24: lambda a, b: a * b + math.sin((a - 1) * (b - 1)),
    25: lambda x: 0.3 * x * math.sin(2 * math.pi * x),
    26: lambda x: math.sin(x ** 3 + x),
    27: lambda x: math.sin(x) * math.sin(x + x * x),
    28: lambda a, b: math.sin(a) + math.sin(b * b),
}


@pytest.mark.parametrize("case_id", sorted(CASES))
def test_target_transcription(case_id):
    case = CASES[case_id]
    rng = np.random.default_rng(case_id)
    lo = np.array([a for a, _ in case.domain])
    hi = np.array([b for _, b in case.domain])
    pts = lo + (hi - lo) * rng.random((5, case.dimension))
    # keep case 13's denominator away from zero
    pts[:, -1] = np.where(np.abs(pts[:, -1]) < 0.1, 0.5, pts[:, -1])
    got = case.target(*pts.T)
    for p, g in zip(pts, got):
        assert g == pytest.approx(SCALAR[case_id](*p), rel=1e-12, abs=1e-12)


def test_case_table():
    assert sorted(CASES) == list(range(1, 29))
    for c in CASES.values():
        assert c.n_presv == (200 if c.dimension == 3 or c.group == "control" else 35)
        assert c.domain[0] == ((1.0, 3.0) if c.id in (1, 2, 7, 8, 18, 21) else (-3.0, 3.0))
    assert CASES[15].points_per_axis == 7 and CASES[15].full_points_per_axis == 10
    assert CASES[17].published["ebr_error_pct"] == 4.37


def test_targets_finite_on_their_grids():
    for c in CASES.values():
        data = case_dataset(c)
        assert data.m == c.points_per_axis ** c.dimension
        assert np.isfinite(data.y).all()


def test_case_ids():
    assert parse_case_ids("1-6,11") == [1, 2, 3, 4, 5, 6, 11]
    assert parse_case_ids("all") == list(range(1, 29))
    with pytest.raises(KeyError):
        parse_case_ids("99")
    with pytest.raises(KeyError):
        get_case(0)


def test_lhs_and_domain_overrides():
    c = get_case(24)
    data = case_dataset(c, sampling="lhs", samples=50, seed=3, domain=[(-1.0, 1.0)])
    assert data.m == 50 and data.domain == ((-1.0, 1.0), (-1.0, 1.0))
    assert np.abs(data.x).max() <= 1.0


class TestRunCase:
    def test_exact_case(self):
        res = run_case(4)
        assert res.model.nmse <= 1e-8
        assert res.row["schema"] == REPORT_SCHEMA
        assert res.row["terms"] == 1
        assert res.row["total_valid"] == res.search.total_valid

    def test_single_term_recovery(self):
        res = run_case(11)
        assert len(res.model.terms) == 1
        assert res.model.nmse <= 1e-10

    def test_overrides(self):
        res = run_case(3, n_presv=5, row_count=2, points_per_axis=12)
        assert (res.row["n_presv"], res.row["rows"], res.row["samples"]) == (5, 2, 12)


class TestSuite:
    def test_one_row_report(self, tmp_path):
        out = tmp_path / "r.jsonl"
        rows = run_suite([1], out, row_count=2)
        lines = out.read_text().splitlines()
        assert len(rows) == len(lines) == 1
        assert json.loads(lines[0]) == rows[0]
        assert "sqrt" in render_table(rows)

    def test_errors_are_collected(self):
        rows = run_suite([3, 4], n_presv=5, row_count=2, sampling="bogus")
        assert all(r["error"] for r in rows)
        assert "ERROR" in render_table(rows)

    def test_repeatable(self):
        a = run_suite([3, 10], row_count=2)
        b = run_suite([3, 10], row_count=2, workers=2)
        assert [strip_timing(r) for r in a] == [strip_timing(r) for r in b]
        assert all("elapsed_ms" not in strip_timing(r) for r in a)

    def test_empty(self):
        with pytest.raises(ValueError):
            run_suite([])
