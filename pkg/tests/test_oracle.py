import math

import numpy as np
import pytest

from conftest import build_corpus, proportional_triangle
from runoff.chainladder import estimate_development_factors
from runoff.impact import impact_reserve_total
from runoff.oracle import (
    FdScheme,
    VerificationReport,
    fd_derivative,
    relative_error,
    verify_mse_components,
    verify_quantile_impacts,
    verify_reserve_impacts,
)
from runoff.triangle import IncrementalTriangle, cumulate


class TestRelativeError:
    def test_zero_vs_zero(self):
        assert relative_error(0.0, 0.0) == 0.0

    def test_tiny_values_use_floor(self):
        assert relative_error(0.0, 1e-14) == pytest.approx(0.01)

    def test_symmetric(self):
        assert relative_error(2.0, 1.0) == relative_error(1.0, 2.0) == 0.5


class TestFdDerivative:
    def test_identity_statistic(self, belgian):
        got = fd_derivative(lambda t: t.cell(3, 2), belgian, 3, 2)
        assert abs(got - 1.0) <= 1e-10

    def test_constant_statistic(self, belgian):
        got = fd_derivative(lambda t: 42.0, belgian, 3, 2)
        assert abs(got) <= 1e-10

    def test_total_reserve_cornerpoint(self, belgian):
        def total(t):
            c = cumulate(t)
            from runoff.chainladder import reserves

            return reserves(c, estimate_development_factors(c))[1]

        assert abs(fd_derivative(total, belgian, 1, 1) - (-1.3875)) <= 5e-4

    def test_forward_fallback_near_zero(self):
        tri = IncrementalTriangle.from_rows(
            [[0.005, 1.0, 1.0], [1.0, 1.0], [1.0]]
        )
        # the default floor step would push 0.005 negative, so a forward
        # difference of a linear statistic must still be exact
        got = fd_derivative(lambda t: 3.0 * t.cell(1, 1), tri, 1, 1)
        assert math.isclose(got, 3.0, rel_tol=1e-9)

    def test_step_halving_converges_quadratically(self, belgian):
        def total(t):
            c = cumulate(t)
            from runoff.chainladder import reserves

            return reserves(c, estimate_development_factors(c))[1]

        cum = cumulate(belgian)
        exact = impact_reserve_total(cum, estimate_development_factors(cum)).cell(2, 3)
        errors = []
        for rel in (4e-3, 2e-3, 1e-3):
            got = fd_derivative(total, belgian, 2, 3, FdScheme(relative_step=rel))
            errors.append(abs(got - exact))
        assert errors[0] > errors[1] > errors[2]

    def test_does_not_mutate_input(self, belgian):
        before = np.array(belgian.values)
        fd_derivative(lambda t: t.cell(1, 1) ** 2, belgian, 1, 1)
        assert np.array_equal(
            np.nan_to_num(before), np.nan_to_num(belgian.values)
        )


class TestVerificationReport:
    def test_empty_report(self):
        report = VerificationReport(statistic="x", tolerance=1e-5)
        assert report.max_rel_error == 0.0
        assert report.worst_cell is None
        assert report.passed

    def test_to_dict_shape(self):
        report = VerificationReport(statistic="x", tolerance=1e-5)
        report.add(1, 1, 1.0, 1.0)
        doc = report.to_dict()
        assert doc["statistic"] == "x"
        assert doc["passed"] is True
        assert doc["cells"][0]["rel_error"] == 0.0


class TestVerifyReserveImpacts:
    def test_bundled_total(self, belgian):
        report = verify_reserve_impacts(belgian, "reserve-total")
        assert report.passed, report.worst_cell

    def test_bundled_year8_with_exact_zeros(self, belgian):
        report = verify_reserve_impacts(belgian, "reserve-ay", year=8)
        assert report.passed
        zero_cells = {(9, 1), (9, 2), (10, 1)}
        for cell in report.cells:
            if (cell["k"], cell["j"]) in zero_cells:
                assert cell["analytic"] == 0.0
                assert cell["numeric"] == 0.0

    def test_bf_variants(self, belgian):
        for stat, year in (("bf-total", None), ("bf-ay", 6)):
            report = verify_reserve_impacts(belgian, stat, year)
            assert report.passed, (stat, report.max_rel_error)

    def test_year_required_for_per_year(self, belgian):
        with pytest.raises(ValueError, match="needs an accident year"):
            verify_reserve_impacts(belgian, "reserve-ay")

    def test_proportional_triangle(self):
        report = verify_reserve_impacts(proportional_triangle(), "reserve-total")
        assert report.passed

    def test_purity(self, belgian):
        before = np.nan_to_num(np.array(belgian.values))
        verify_reserve_impacts(belgian, "reserve-ay", year=3)
        assert np.array_equal(before, np.nan_to_num(belgian.values))


class TestVerifyMseComponents:
    def test_bundled(self, belgian):
        report = verify_mse_components(belgian)
        assert report.passed, (report.max_rel_error, report.worst_cell)

    def test_building_block_notes(self):
        tri = build_corpus(count=1, seed=99)[0]
        report = verify_mse_components(tri)
        assert report.passed
        assert report.notes["d_ln_f_max_rel"] <= 1e-5
        assert report.notes["d_ultimate_max_rel"] <= 1e-5
        assert report.notes["d_colsum_fsq_max_rel"] <= 1e-5

    def test_direct_fd_documented_not_asserted(self, belgian):
        # the raw derivative of the plug-in estimator is a different object;
        # the report records how far it sits from the impact formula
        report = verify_mse_components(belgian)
        assert "direct_fd_max_rel" in report.notes
        assert report.notes["direct_fd_max_rel"] > report.tolerance

    def test_all_sigma_zero_assemblies_vanish(self):
        report = verify_mse_components(proportional_triangle())
        assert report.passed
        assert all(c["analytic"] == 0.0 and c["numeric"] == 0.0 for c in report.cells)


class TestVerifyQuantileImpacts:
    def test_bundled(self, belgian):
        report = verify_quantile_impacts(belgian, 0.995)
        assert report.passed, (report.max_rel_error, report.worst_cell)

    def test_q_sweep_on_random_triangle(self):
        tri = build_corpus(count=4, seed=5)[3]
        for q in (0.75, 0.9, 0.99):
            report = verify_quantile_impacts(tri, q)
            assert report.passed, (q, report.max_rel_error)

    def test_median_sigma_contribution_absent(self, belgian):
        report = verify_quantile_impacts(belgian, 0.5)
        assert report.passed
