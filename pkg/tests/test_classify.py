# This file is part of ts_cherry.
#
# Developed for the Vera C. Rubin Observatory Telescope and Site Systems.
# This product includes software developed by the LSST Project
# (https://www.lsst.org).
# See the COPYRIGHT file at the top-level directory of this distribution
# for details of code ownership.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.


import unittest

import mpmath
import pytest
from lsst.ts import cherry

PRECISION_BITS = 256


class EigenvalueTestCase(unittest.TestCase):
    def test_critical_point(self) -> None:
        lambda_s, lambda_u = cherry.biperiodic_eigen(1, 1, 2, 2)
        with mpmath.workprec(PRECISION_BITS):
            assert abs(lambda_s.value - mpmath.mpf("0.25")) < 1e-60
            assert abs(lambda_u.value - 1) < 1e-60

    def test_identities(self) -> None:
        ell1, ell2 = mpmath.mpf("1.2"), mpmath.mpf("2.5")
        lambda_s, lambda_u = cherry.biperiodic_eigen(2, 1, ell1, ell2)
        product = cherry.biperiodic_product(2, 1, ell1, ell2)
        with mpmath.workprec(PRECISION_BITS):
            determinant = ell1 ** (-1) * ell2 ** (-2)
            assert abs(lambda_s.value * lambda_u.value - determinant) < 1e-60
            assert abs(product.determinant - determinant) < 1e-60
            assert abs(lambda_s.value + lambda_u.value - product.trace) < 1e-60
            assert 0 < lambda_s.value < 1

    def test_known_values(self) -> None:
        for ell, expected in (("1.5", "1.4768"), ("3", "0.5892")):
            _, lambda_u = cherry.biperiodic_eigen(1, 1, ell, ell)
            assert abs(float(lambda_u) - float(expected)) < 1e-4

    def test_domain(self) -> None:
        with pytest.raises(cherry.DomainError):
            cherry.biperiodic_eigen(0, 1, 2, 2)
        with pytest.raises(cherry.DomainError):
            cherry.biperiodic_eigen(1, 1, 1, 2)
        with pytest.raises(cherry.DomainError):
            cherry.t_func(3, 1, 2, 2)

    def test_t_func(self) -> None:
        assert abs(float(cherry.t_func(1, 1, "1.5", 6)) - 2 / 3) < 1e-12
        assert abs(float(cherry.t_func(2, 2, 3, "2")) - 0.75) < 1e-12

    def test_transfer_matrix(self) -> None:
        even = cherry.transfer_matrix(2, 2, 1, 2, 3)
        odd = cherry.transfer_matrix(1, 1, 2, 2, 3)
        assert (even.parity, odd.parity) == ("even", "odd")
        with mpmath.workprec(PRECISION_BITS):
            for actual, expected in zip(
                even.entries + odd.entries,
                (mpmath.mpf(2) / 3, mpmath.mpf("0.5"), 1, 0)
                + (mpmath.mpf(1) / 3, mpmath.mpf(1) / 9, 1, 0),
            ):
                assert abs(actual - expected) < 1e-60
            assert abs(even.determinant + mpmath.mpf("0.5")) < 1e-60
            assert (even @ odd).parity == "product"
        with pytest.raises(cherry.DomainError):
            cherry.transfer_matrix(2, 0, 1, 2, 3)


class ClassifyTestCase(unittest.TestCase):
    def setUp(self) -> None:
        self.golden = cherry.ContinuedFraction.parse("golden")

    def classify(self, ell1: str, ell2: str, rho: str = "golden") -> tuple:
        verdict = cherry.classify_point(
            cherry.ContinuedFraction.parse(rho), ell1, ell2
        )
        return verdict.region, verdict.basis

    def test_regions(self) -> None:
        Region, Basis = cherry.Region, cherry.Basis
        assert self.classify("2", "2") == (Region.CRITICAL, Basis.THEOREM_REGION)
        assert self.classify("1.5", "1.5") == (
            Region.DEGENERATE,
            Basis.THEOREM_REGION,
        )
        assert self.classify("3", "3") == (Region.BOUNDED, Basis.THEOREM_REGION)
        assert self.classify("1", "3") == (Region.DEGENERATE, Basis.THEOREM_REGION)
        assert self.classify("1.5", "6") == (Region.BOUNDED, Basis.LAMBDA_CRITERION)
        assert self.classify("1.2", "2.5") == (
            Region.UNKNOWN,
            Basis.LAMBDA_CRITERION,
        )
        assert self.classify("1.5", "3", "[1,2,3]rep") == (
            Region.UNKNOWN,
            Basis.EMPIRICAL_ONLY,
        )

    def test_bounded_for_every_expansion(self) -> None:
        Region, Basis = cherry.Region, cherry.Basis
        for rho in ("[1,2,3]", "[3;1,2]rep", "[2;5]rep"):
            assert self.classify("3", "3", rho) == (
                Region.BOUNDED,
                Basis.THEOREM_REGION,
            )
            assert self.classify("2.5", "4", rho)[0] == Region.BOUNDED

    def test_verdict_dict(self) -> None:
        verdict = cherry.classify_point(self.golden, 2, 2)
        data = verdict.to_dict(PRECISION_BITS)
        assert data["region"] == "Critical"
        assert data["cf"] == "golden"
        assert abs(float(data["lambda_u"]) - 1) < 1e-12
        one_sided = cherry.classify_point(self.golden, 1, 3).to_dict()
        assert one_sided["lambda_u"] is None

    def test_bad_exponent(self) -> None:
        with pytest.raises(cherry.DomainError):
            cherry.classify_point(self.golden, "0.9", 2)


class CurveTestCase(unittest.TestCase):
    def test_critical_point_is_on_the_curve(self) -> None:
        point = cherry.curve_point(1, 1, 2)
        assert point.status == "ok"
        assert point.ell2 is not None
        assert abs(point.ell2 - 2) < 1e-20
        assert abs(point.residual) < 1e-20

    def test_curve_decreases(self) -> None:
        trace = cherry.curve_trace(1, 1, ["1.5", "2.0", "2.5"])
        assert len(trace.solved) == 3
        assert trace.monotone
        rows = trace.rows()
        assert rows[1][0] == "2.0"
        assert abs(float(rows[1][1]) - 2) < 1e-12

    def test_bad_exponent(self) -> None:
        with pytest.raises(cherry.DomainError):
            cherry.curve_point(1, 1, 1)


class ProductAuditTestCase(unittest.TestCase):
    def test_golden_product(self) -> None:
        golden = cherry.ContinuedFraction.parse("golden")
        report = cherry.matrix_product_audit(golden, 3, 3, 10)
        assert [record.n for record in report.records] == [4, 6, 8, 10]
        assert report.in_contraction_region
        # Every factor is the same bi-periodic product.
        _, lambda_u = cherry.biperiodic_eigen(1, 1, 3, 3)
        with mpmath.workprec(PRECISION_BITS):
            radius = report.records[-1].spectral_radius
            assert abs(radius / lambda_u.value**4 - 1) < 1e-30
        assert report.contraction_onset is not None
        with pytest.raises(cherry.DomainError):
            cherry.matrix_product_audit(golden, 3, 3, 3)


class WPrimeTestCase(unittest.TestCase):
    def test_values(self) -> None:
        value = cherry.wprime("0.55", "0.16", 2, 2)
        assert abs(float(value) - 0.7125) < 1e-3
        with pytest.raises(cherry.DomainError):
            cherry.wprime(1, "0.16", 2, 2)

    def test_constants(self) -> None:
        report = cherry.wprime_constants_check()
        assert len(report.records) == 3
        assert report.passed
        assert all(record.passed for record in report.records)

    def test_monotone_in_ell(self) -> None:
        report = cherry.wprime_monotonicity_check()
        assert len(report.records) == 25
        assert all(record.passed for record in report.records)
        with pytest.raises(cherry.DomainError):
            cherry.wprime_monotonicity_check(y_grid=["0.7"])
