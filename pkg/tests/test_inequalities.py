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


import typing
import unittest

import mpmath
import pytest
from lsst.ts import cherry

PRECISION_BITS = 256


def make_series(
    alphas: typing.Sequence[str], ell1: str = "2", ell2: str = "2", first: int = 3
) -> cherry.RatioSeries:
    """Golden mean series with the given alpha_n and flat filler ratios."""
    half = mpmath.mpf("0.5")
    with mpmath.workprec(PRECISION_BITS):
        levels = tuple(
            cherry.LevelRatios(
                n=first + i,
                alpha=mpmath.mpf(value),
                sigma=half,
                s=half,
                tau=half,
                kappa=half,
                nu=-mpmath.log(mpmath.mpf(value)),
                fsigma=half,
                beta=(half, half),
                gamma1=(half,),
                w=(half,),
            )
            for i, value in enumerate(alphas)
        )
    cf = cherry.ContinuedFraction.parse("golden")
    return cherry.RatioSeries(
        levels=levels,
        ell1=mpmath.mpf(ell1),
        ell2=mpmath.mpf(ell2),
        cf_spec=cf.spec,
        precision_bits=PRECISION_BITS,
        table=cherry.convergents(cf, first + len(alphas) + 1),
    )


class AprioriTestCase(unittest.TestCase):
    def setUp(self) -> None:
        # With ell = 2 the bounds apply to alpha_n itself.
        self.series = make_series(["0.5", "0.2", "0.4", "0.1", "0.6"])
        self.report = cherry.verify_apriori(self.series, n0=5)

    def test_records(self) -> None:
        bounds = self.report.select("apriori-bound")
        assert [record.level for record in bounds] == [3, 4, 5, 6, 7]
        assert [record.passed for record in bounds] == [True] * 4 + [False]
        assert len(self.report.select("apriori-alternate")) == 4
        assert all(record.passed for record in self.report.select("apriori-alternate"))

    def test_dichotomy(self) -> None:
        dichotomy = {r.level: r for r in self.report.select("apriori-dichotomy")}
        # alpha_3 = 0.5 exceeds 0.44 and alpha_4 = 0.2 exceeds 0.16.
        assert not dichotomy[3].passed
        assert abs(dichotomy[3].slack - mpmath.mpf("-0.04")) < 1e-12
        assert dichotomy[4].note == "not applicable"
        assert dichotomy[5].passed

    def test_hard_failures(self) -> None:
        assert len(self.report.failures) == 2
        assert [r.check for r in self.report.hard_failures] == ["apriori-bound"]
        assert not self.report.passed
        assert self.report.first_passing_level("apriori-dichotomy") == 4
        assert self.report.first_passing_level("apriori-bound") is None
        assert self.report.first_passing_level("recursion") is None
        assert self.report.counts()["apriori-bound"] == {
            "passed": 4,
            "failed": 1,
            "hard_failed": 1,
        }
        assert len(self.report.to_dicts()) == len(self.report.records)

    def test_domain(self) -> None:
        with pytest.raises(cherry.DomainError):
            cherry.verify_apriori(make_series(["0.5", "0.2"], "3", "3"))
        with pytest.raises(cherry.DomainError):
            cherry.verify_apriori(make_series(["0.5"]))


class RecursionTestCase(unittest.TestCase):
    def test_factor(self) -> None:
        half = mpmath.mpf("0.5")
        with mpmath.workprec(PRECISION_BITS):
            factor = cherry.recursion_factor(1, half, half, 1, 2)
            assert abs(factor - (4 - 2 * mpmath.sqrt(2))) < 1e-60
            # ell = 1 drops the square root term.
            assert cherry.recursion_factor(1, half, half, 1, 1) == 2
            assert cherry.recursion_factor(2, mpmath.mpf("0.9"), half, 1, 2) is None

    def test_quadratic_case(self) -> None:
        series = make_series(["0.5", "0.2", "0.4", "0.1"])
        report = cherry.verify_recursion(series, n0=5)
        records = report.select("recursion")
        assert [record.level for record in records] == [5, 6]
        level5 = records[0]
        assert abs(level5.lhs - mpmath.mpf("0.16")) < 1e-12
        assert not level5.hard
        assert records[1].hard

    def test_linear_case(self) -> None:
        series = make_series(["0.5", "0.2", "0.4", "0.1"], "1", "1")
        records = cherry.verify_recursion(series).select("recursion-linear")
        assert len(records) == 2
        # sigma is flat, so the implied constant is alpha_n / alpha_(n-2).
        assert abs(records[0].slack - mpmath.mpf("0.8")) < 1e-12
        assert not any(record.hard for record in records)

    def test_one_sided(self) -> None:
        with pytest.raises(cherry.DomainError):
            cherry.verify_recursion(make_series(["0.5", "0.2", "0.4"], "1", "2"))


class LemmaTestCase(unittest.TestCase):
    def test_lemma_and_quadratic(self) -> None:
        series = make_series(["0.5", "0.2", "0.4"])
        lemma = cherry.verify_lemma1(series, n0=3)
        # Golden mean levels carry a single k.
        assert [(r.level, r.index) for r in lemma.records] == [(4, 0), (5, 0)]
        assert [r.hard for r in lemma.records] == [True, True]
        quadratic = cherry.verify_quadratic(series)
        assert len(quadratic.select("quadratic")) == 2
        assert len(quadratic.select("min-bound")) == 2

    def test_lower_bounds(self) -> None:
        series = make_series(["0.5", "0.2", "0.4"], "3", "3")
        report = cherry.verify_lower_bounds(series)
        assert len(report.select("kappa-bound")) == 2
        assert len(report.select("alpha-bound")) == 1
        assert len(report.select("one-minus-beta")) == 6
        assert all(record.passed for record in report.records)
        assert report.infimum("one-minus-beta") == mpmath.mpf("0.5")
        assert report.passed


class VerificationSuiteTestCase(cherry.BaseMapTestCase):
    def test_bounded_map(self) -> None:
        result = self.run_map("3", "3")
        report = cherry.run_verification_suite(result.series, result.geometry)
        # (3, 3) lies outside [1, 2]^2.
        assert not report.select("apriori-dichotomy")
        chains = report.select("cross-ratio-chain")
        assert [record.level for record in chains] == [3, 4, 5, 6]
        assert all(record.passed for record in chains)
        assert len(report.select("nu-residual")) == 2
        counts = report.counts()
        assert sum(c["passed"] + c["failed"] for c in counts.values()) == len(
            report.records
        )
