import json
import subprocess
import sys

import numpy as np
import pytest
import sympy

from ebr.cli import FIT_SCHEMA, main
from ebr.sampling import Dataset, grid, write_csv


@pytest.fixture
def linear_csv(tmp_path):
    x = grid(30, [(-3, 3)] * 2)
    path = tmp_path / "lin.csv"
    write_csv(path, Dataset(x, x[:, 0] + 2 * x[:, 1], [(-3, 3)] * 2))
    return path


def test_decode(capsys):
    assert main(["decode", "1,1,2;3,3,2;12,3,1", "--dimension", "2"]) == 0
    assert capsys.readouterr().out.strip() == "sin(x1+x2)"
    assert main(["decode", "1,1,1", "-d", "1"]) == 0
    assert capsys.readouterr().out.strip() == "x1"


def test_decode_range_error(capsys):
    assert main(["decode", "14,1,1", "-d", "1"]) == 2
    assert "row 1, column 1" in capsys.readouterr().err


def test_decode_malformed(capsys):
    assert main(["decode", "1,x,1"]) == 2


def test_fit_linear(linear_csv, capsys, tmp_path):
    out = tmp_path / "fit.json"
    assert main(["fit", "--data", str(linear_csv), "--output", str(out)]) == 0
    text = capsys.readouterr().out
    assert "NMSE" in text and "total valid bases" in text
    report = json.loads(out.read_text())
    assert report["schema"] == FIT_SCHEMA
    assert report["nmse"] <= 1e-10
    x1, x2 = sympy.symbols("x1 x2")
    expr = sympy.sympify(report["formula"].replace("^", "**"))
    residual = sympy.Poly(sympy.expand(expr - (x1 + 2 * x2)), x1, x2)
    assert max(abs(float(c)) for c in residual.coeffs()) < 1e-9


def test_fit_json_lines_and_grid(linear_csv, capsys, tmp_path):
    dump = tmp_path / "g.csv"
    args = ["fit", "--data", str(linear_csv), "--format", "json-lines", "--rows", "2",
            "--dump-grid", str(dump), "--samples", "4"]
    assert main(args) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["rows"] == 2
    rows = np.loadtxt(dump, delimiter=",", skiprows=1)
    assert rows.shape == (16, 3)
    np.testing.assert_allclose(rows[:, 2], rows[:, 0] + 2 * rows[:, 1], atol=1e-9)


def test_fit_missing_file(capsys, tmp_path):
    path = tmp_path / "absent.csv"
    assert main(["fit", "--data", str(path)]) == 2
    assert str(path) in capsys.readouterr().err


def test_fit_constant_response(tmp_path, capsys):
    path = tmp_path / "c.csv"
    path.write_text("x1,y\n1,1\n2,1\n3,1\n")
    assert main(["fit", "--data", str(path)]) == 2
    assert "zero-variance" in capsys.readouterr().err


def test_fit_degenerate(tmp_path, capsys):
    # two samples leave no room for a basis next to the intercept
    path = tmp_path / "two.csv"
    path.write_text("x1,y\n1,1\n2,3\n")
    assert main(["fit", "--data", str(path), "--rows", "1"]) == 3
    assert "degenerate" in capsys.readouterr().err


@pytest.mark.parametrize("flag", ["--n-presv", "--rows", "--workers", "--max-terms"])
def test_non_positive_flags(flag, linear_csv):
    with pytest.raises(SystemExit) as err:
        main(["fit", "--data", str(linear_csv), flag, "0"])
    assert err.value.code == 2


def test_bench_rows(capsys):
    assert main(["bench", "--cases", "1-3", "--rows", "2", "--format", "json-lines"]) == 0
    rows = [json.loads(s) for s in capsys.readouterr().out.splitlines()]
    assert [r["id"] for r in rows] == [1, 2, 3]


def test_bench_unknown_case(capsys):
    assert main(["bench", "--cases", "99"]) == 2
    assert "99" in capsys.readouterr().err


def test_bench_n_presv_override(tmp_path):
    out = tmp_path / "b.jsonl"
    assert main(["bench", "--cases", "26", "--rows", "2", "--n-presv", "7",
                 "--output", str(out)]) == 0
    assert json.loads(out.read_text())["n_presv"] == 7


def test_bench_case_error_sets_exit(capsys):
    # a domain that puts sqrt's input below zero makes every basis invalid
    assert main(["bench", "--cases", "1", "--rows", "1", "--domain=-3,-1"]) == 1


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "ebr", "decode", "1,1,2;3,3,2;12,3,1"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "sin(x1+x2)"
