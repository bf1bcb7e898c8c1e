import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from ebr.codec import MappingRules, decode, evaluate
from ebr.errors import DegenerateFitError
from ebr.glm import FitOptions, fit_model, format_formula, least_squares, nmse
from ebr.sampling import make_dataset
from ebr.scoring import ScoredBasis, correlation
from ebr.search import ElitePool
from oracles import pinv_fit


def sympy_values(formula, x):
    """Evaluate a formula string with sympy, independently of the engine."""
    names = sympy.symbols(f"x1:{x.shape[1] + 1}")
    expr = sympy.sympify(formula.replace("^", "**"), locals={str(s): s for s in names})
    fn = sympy.lambdify(names, expr, modules="math")
    return np.array([float(fn(*row)) for row in x])


def pool_of(data, matrices):
    rules = MappingRules(data.dimension)
    pool = ElitePool(len(matrices))
    for m in matrices:
        tree = decode(m, rules)
        v, _ = evaluate(tree, data.x)
        pool.offer(ScoredBasis(tuple(map(tuple, m)), tree, abs(correlation(v, data.y)), v))
    return pool


class TestNmse:
    def test_examples(self):
        y = np.array([1.0, -2.0, 3.0])
        assert nmse(y, y) == 0.0
        assert nmse(np.zeros(3), y) == 1.0
        assert nmse(1.1 * y, y) == pytest.approx(0.01, rel=1e-12)

    def test_zero_response(self):
        with pytest.raises(ValueError):
            nmse(np.ones(2), np.zeros(2))

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
    @settings(max_examples=1000, deadline=None)
    def test_identities(self, ys):
        y = np.array(ys)
        if not np.dot(y, y) > 0:
            return
        assert nmse(y, y) == 0.0
        assert nmse(np.zeros_like(y), y) == 1.0


class TestLeastSquares:
    def test_exact_combination(self):
        x = np.linspace(-1, 1, 12)
        p1, p2 = np.sin(3 * x), x ** 2
        b0, b = least_squares([p1, p2], 2 * p1 + 3 * p2)
        assert b0 == pytest.approx(0, abs=1e-10)
        np.testing.assert_allclose(b, [2, 3], atol=1e-10)

    def test_intercept_only(self):
        b0, b = least_squares([], np.full(4, 2.5))
        assert b0 == pytest.approx(2.5) and b.size == 0

    def test_collinear(self):
        x = np.array([-2.0, -1.0, 0.5, 1.0, 3.0])
        b0, b = least_squares([x, 2 * x], 4 * x)
        assert b[1] == 0.0
        fit = b0 + b[0] * x + b[1] * 2 * x
        np.testing.assert_allclose(fit, 4 * x, atol=1e-12)
        p0, pb = pinv_fit([x, 2 * x], 4 * x)
        np.testing.assert_allclose(fit, p0 + pb[0] * x + pb[1] * 2 * x, atol=1e-10)

    def test_constant_column_absorbed_by_intercept(self):
        x = np.arange(6.0)
        b0, b = least_squares([np.full(6, 3.0), x], x + 1)
        assert b[0] == 0.0
        assert (b0, b[1]) == pytest.approx((1.0, 1.0))

    def test_too_many_columns(self):
        with pytest.raises(DegenerateFitError):
            least_squares([np.arange(3.0)] * 3, np.arange(3.0))

    def test_large_columns(self):
        x = np.linspace(1, 2, 8)
        b0, b = least_squares([1e200 * x], x)
        assert b[0] * 1e200 == pytest.approx(1.0)


class TestFitModel:
    def test_single_exact_basis(self):
        data = make_dataset(lambda a, b: np.sin(a + b), [(-3, 3)] * 2, samples=30)
        pool = pool_of(data, [[[1, 1, 2], [3, 3, 2], [12, 3, 1]], [[5, 1, 2]], [[3, 1, 2]]])
        model = fit_model(pool, data)
        assert len(model.terms) == 1
        assert model.nmse <= 1e-10

    def test_sqrt_of_double(self):
        data = make_dataset(np.sqrt, [(1, 3)], samples=30)
        model = fit_model(pool_of(data, [[[3, 1, 1], [7, 2, 2]]]), data)
        assert model.terms[0].coefficient == pytest.approx(2 ** -0.5, abs=1e-4)
        assert model.nmse <= 1e-6
        assert format_formula(model, 4) == "0.7071*sqrt(x1+x1)"

    def test_response_itself(self):
        data = make_dataset(lambda x: np.exp(x), [(-1, 1)], samples=20)
        model = fit_model(pool_of(data, [[[11, 1, 1]]]), data)
        assert model.intercept == pytest.approx(0, abs=1e-9)
        assert model.terms[0].coefficient == pytest.approx(1, abs=1e-9)

    def test_empty_pool(self):
        data = make_dataset(lambda x: x, [(0, 1)], samples=5)
        with pytest.raises(ValueError):
            fit_model(ElitePool(3), data)

    def test_max_terms(self):
        data = make_dataset(lambda x: x ** 3 + np.sin(x) + np.cos(x), [(-3, 3)], samples=30)
        mats = [[[12, 1, 1]], [[13, 1, 1]], [[8, 1, 1], [5, 2, 1]], [[8, 1, 1]]]
        model = fit_model(pool_of(data, mats), data, FitOptions(max_terms=2))
        assert len(model.terms) <= 2
        full = fit_model(pool_of(data, mats), data)
        assert full.nmse <= 1e-20

    def test_no_usable_basis(self):
        data = make_dataset(lambda x: x, [(0, 1)], samples=2)
        with pytest.raises(DegenerateFitError):
            fit_model(pool_of(data, [[[1, 1, 1]]]), data)

    def test_options_validated(self):
        with pytest.raises(ValueError):
            FitOptions(max_terms=0)
        with pytest.raises(ValueError):
            FitOptions(nmse_target=0)

    @given(st.integers(0, 2**32 - 1), st.integers(2, 9))
    @settings(max_examples=40, deadline=None)
    def test_more_terms_never_hurt(self, seed, k):
        rng = np.random.default_rng(seed)
        data = make_dataset(lambda t: np.sin(3 * t) + t ** 2, [(-2, 2)], samples=40)
        rows = MappingRules(1).rows()
        mats = [[rows[i], rows[j]] for i, j in rng.integers(0, len(rows), size=(k, 2))]
        pool = pool_of(data, mats)
        if all(e.abs_corr == 0 for e in pool):
            return
        errs = [fit_model(pool, data, FitOptions(max_terms=t, min_improvement=1e-300,
                                                 nmse_target=1e-300)).nmse
                for t in range(1, len(pool) + 1)]
        assert all(b <= a * (1 + 1e-9) + 1e-15 for a, b in zip(errs, errs[1:]))

    def test_formula_reproduces_fitted(self):
        data = make_dataset(lambda a, b: 6 * np.sin(a) * np.cos(b), [(-3, 3)] * 2, samples=15)
        mats = [[[1, 1, 2], [3, 3, 2], [12, 3, 1]], [[1, 1, 2], [4, 3, 2], [12, 3, 1]]]
        model = fit_model(pool_of(data, mats), data)
        ref = sympy_values(format_formula(model), data.x)
        np.testing.assert_allclose(ref, model.fitted, rtol=1e-9, atol=1e-9 * np.abs(ref).max())
        np.testing.assert_allclose(model.predict(data.x), model.fitted, rtol=1e-12)


class TestFormatting:
    def test_signs_and_parens(self):
        data = make_dataset(lambda x: 3 - (x - np.sin(x)), [(-3, 3)], samples=30)
        model = fit_model(pool_of(data, [[[12, 1, 1], [4, 1, 2]]]), data)
        assert format_formula(model, 6) == "3 - (x1-sin(x1))"

    def test_round_trip_precision(self):
        data = make_dataset(lambda x: 0.1 * x + 1 / 3, [(-3, 3)], samples=30)
        model = fit_model(pool_of(data, [[[1, 1, 1]]]), data)
        text = format_formula(model)
        np.testing.assert_allclose(sympy_values(text, data.x), model.fitted, rtol=1e-15)
