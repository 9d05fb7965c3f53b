"""Error norms, observed and predicted rates, convergence reports."""

import csv
import io
import json
import math

import numpy as np
import pytest

from dgiga.analysis import (
    CSV_COLUMNS,
    ConvergenceReport,
    ErrorRecord,
    dg_norm_error,
    evaluate_solution,
    l2_error,
    observed_rates,
    predicted_rate,
)
from dgiga.assembly import DGConfig
from dgiga.config import SolverConfig
from dgiga.errors import ParametricDomainError
from dgiga.problems import get_problem
from dgiga.splines import quasi_interpolate


def zero(x):
    return np.zeros(len(x))


def zero_gradient(x):
    return np.zeros((len(x), 2))


class TestErrorNorms:
    def test_in_space_solution(self, split_square):
        domain = split_square.with_degree(2)
        problem = get_problem("polynomial", d=2)
        coeffs = []
        for patch, space in zip(domain.patches, domain.solution_spaces):
            # boxes are affine, so the pull-back of a quadratic is a quadratic
            coeffs.append(quasi_interpolate(space, lambda xh, p=patch: problem.exact(
                p.coefficients.evaluate(xh))).values)
        assert dg_norm_error(domain, None, coeffs, problem.exact, problem.gradient) <= 1e-10
        assert l2_error(domain, None, coeffs, problem.exact) <= 1e-10

    def test_constant_against_zero(self, unit_square):
        mu = SolverConfig.default_mu(1, 2)
        error = dg_norm_error(unit_square, None, np.ones(4), zero, zero_gradient)
        assert error ** 2 == pytest.approx(mu * 4.0, rel=1e-12)

    def test_explicit_penalty(self, unit_square):
        error = dg_norm_error(unit_square, None, np.ones(4), zero, zero_gradient, DGConfig(mu=2.0))
        assert error == pytest.approx(math.sqrt(8.0))

    def test_gradient_term_of_linear_field(self, two_unit_squares):
        u = np.array([-1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0])  # u = x

        def exact(x):
            return x[:, 0]

        def slope(x):
            return np.tile([1.0, 0.0], (len(x), 1))

        assert dg_norm_error(two_unit_squares, None, u, exact, slope) <= 1e-12
        # traces match, so only ∫|∇u_h|² over [-1,1]×[0,1] remains
        error = dg_norm_error(two_unit_squares, None, u, exact, zero_gradient)
        assert error ** 2 == pytest.approx(2.0, rel=1e-12)

    def test_l2_of_unit_gap(self, unit_square):
        assert l2_error(unit_square, None, np.zeros(4), lambda x: np.ones(len(x))) == pytest.approx(1.0)

    def test_wrong_coefficient_length(self, unit_square):
        with pytest.raises(ParametricDomainError):
            l2_error(unit_square, None, np.zeros(5), zero)

    def test_evaluate_solution(self, two_unit_squares):
        u = np.array([-1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0])
        x, values = evaluate_solution(two_unit_squares, None, u, 1, np.array([[0.25, 0.5]]))
        np.testing.assert_allclose(x, [[0.25, 0.5]])
        np.testing.assert_allclose(values, [0.25])


class TestObservedRates:
    def test_quartering(self):
        assert observed_rates([0.4, 0.1]) == pytest.approx([2.0])

    def test_halving(self):
        assert observed_rates([1.0, 0.5, 0.25]) == pytest.approx([1.0, 1.0])

    @pytest.mark.parametrize("errors", [[0.1], [0.1, 0.0], [-1.0, 0.5]])
    def test_undefined(self, errors):
        with pytest.raises(ParametricDomainError):
            observed_rates(errors)


class TestPredictedRate:
    def test_smooth(self):
        assert predicted_rate(2, 3, 2.0, 3) == pytest.approx(2.0)
        assert predicted_rate(3, math.inf, 2.0, 2) == pytest.approx(3.0)

    def test_low_regularity(self):
        assert predicted_rate(2, 2, 1.4, 3) == pytest.approx(0.35714285714, abs=1e-9)
        assert predicted_rate(3, 3, 1.4, 3) == pytest.approx(1.35714285714, abs=1e-9)

    def test_regularity_capped_by_degree(self):
        assert predicted_rate(2, 3, 1.4, 3) == pytest.approx(predicted_rate(3, 3, 1.4, 3))
        assert predicted_rate(1, 3, 1.4, 3) == pytest.approx(2 + 1.5 - 3 / 1.4 - 1)

    def test_monotone_in_regularity(self):
        rates = [predicted_rate(3, l, 1.4, 3) for l in (2.0, 2.5, 3.0, 3.5, 4.0, 5.0)]
        assert all(b >= a for a, b in zip(rates[:-1], rates[1:]))
        assert rates[0] < rates[-1]

    def test_monotone_in_integrability(self):
        rates = [predicted_rate(2, 3, p, 3) for p in (1.0, 1.2, 1.4, 1.7, 2.0)]
        assert all(b > a for a, b in zip(rates[:-1], rates[1:]))

    @pytest.mark.parametrize("p", [1.0, 1.2, 2.5])
    def test_inadmissible_p(self, p):
        with pytest.raises(ParametricDomainError):
            predicted_rate(2, 2, p, 3)


def _report(errors, predicted=2.0):
    records = [ErrorRecord(s, 0.5 / 2 ** s, 16 * 4 ** s, e, e / 4) for s, e in enumerate(errors)]
    return ConvergenceReport("smooth", 2, "sip", records, predicted)


class TestConvergenceReport:
    def test_csv_layout(self):
        text = _report([0.4, 0.1]).to_csv()
        rows = list(csv.reader(io.StringIO(text)))
        assert rows[0] == CSV_COLUMNS
        assert len(rows) == 3
        assert rows[1][CSV_COLUMNS.index("dg_rate")] == ""
        assert rows[1][CSV_COLUMNS.index("predicted_rate")] == ""
        assert float(rows[2][CSV_COLUMNS.index("dg_rate")]) == pytest.approx(2.0)
        assert float(rows[2][CSV_COLUMNS.index("dg_error")]) == 0.1

    def test_rates(self):
        report = _report([1.0, 0.25, 0.0625])
        assert report.dg_rates == pytest.approx([2.0, 2.0])
        assert report.final_dg_rate == pytest.approx(2.0)

    def test_vanishing_error_gives_nan(self):
        assert math.isnan(_report([1e-3, 0.0]).dg_rates[0])

    def test_json_preserves_records(self):
        report = _report([0.4, 0.1, 0.025])
        report.complete = False
        report.message = "solver failure at level 3"
        loaded = ConvergenceReport.from_json(report.to_json())
        assert loaded.records == report.records
        assert loaded.final_dg_rate == pytest.approx(2.0)
        assert not loaded.complete

    def test_json_floats_have_17_digits(self):
        text = _report([0.1, 0.025]).to_json()
        assert "0.10000000000000001" in text
        assert json.loads(text)["rows"][0]["dg_error"] == 0.1

    def test_json_writes_null_for_undefined_rate(self):
        text = _report([1e-3, 0.0]).to_json()
        assert "NaN" not in text
        data = json.loads(text)
        assert data["rows"][1]["dg_rate"] is None
        assert data["rows"][0]["dg_rate"] is None

    def test_table(self):
        table = _report([0.4, 0.1]).to_table()
        assert "| 1 |" in table
        assert "Predicted dG rate: 2.0000" in table
