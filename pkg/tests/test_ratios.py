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


import random

import mpmath
import pytest
from lsst.ts import cherry


class GeometryTestCase(cherry.BaseMapTestCase):
    def setUp(self) -> None:
        super().setUp()
        self.result = self.run_map("3", "3")
        self.geometry = self.result.geometry
        self.table = self.geometry.table

    def test_sides_alternate(self) -> None:
        # q_n rho - p_n is positive exactly for odd n.
        for n in range(2, 7):
            assert self.geometry.is_right_of(0, self.table.q[n]) == (n % 2 == 1)
        with pytest.raises(cherry.DomainError):
            self.geometry.is_right_of(3, 3)

    def test_decay(self) -> None:
        report = cherry.decay_check(self.geometry)
        assert report.levels == (3, 4, 5, 6)
        assert report.passed
        with pytest.raises(cherry.DepthError):
            cherry.decay_check(self.geometry, first=6)

    def test_lengths(self) -> None:
        assert self.geometry.length(5) == 0
        assert self.geometry.length(0) == self.result.circle_map.flat.length.value
        q = self.table.q[5]
        with mpmath.workprec(self.geometry.precision_bits):
            closed = self.geometry.interval(-q, 0, include_first=True)
            assert closed == self.geometry.gap(-q, 0) + self.geometry.length(-q)
        with pytest.raises(cherry.DepthError):
            self.geometry.left(-100)


class RatioSeriesTestCase(cherry.BaseMapTestCase):
    def setUp(self) -> None:
        super().setUp()
        self.result = self.run_map("3", "3")
        self.series = self.result.series

    def test_levels(self) -> None:
        assert (self.series.first, self.series.last) == (3, 6)
        assert 6 in self.series and 7 not in self.series
        with pytest.raises(cherry.DepthError):
            self.series[7]
        for level in self.series:
            assert 0 < level.alpha < 1
            assert 0 < level.sigma
            self.assert_close(level.nu, -mpmath.log(level.alpha), rel=1e-60)
            # Golden mean levels have a_(n-1) = 1, so k runs over 0 and 1.
            assert len(level.beta) == 2

    def test_beta_closes_on_alpha(self) -> None:
        for n in (5, 6):
            self.assert_close(
                self.series[n].beta[-1], self.series[n - 2].alpha, rel=1e-40
            )

    def test_rows(self) -> None:
        rows = self.series.rows()
        assert len(rows) == 4
        assert all(len(row) == len(cherry.SERIES_COLUMNS) for row in rows)
        assert [row[0] for row in rows] == ["3", "4", "5", "6"]
        assert len(rows[0][8].split(";")) == 2

    def test_nu_series(self) -> None:
        records = cherry.nu_series(self.series)
        assert [record.residual is None for record in records] == [
            True,
            True,
            False,
            False,
        ]
        report = cherry.decay_rate_report(self.series)
        assert report.levels == (3, 4, 5, 6)
        with pytest.raises(cherry.DepthError):
            cherry.decay_rate_report(self.series, first=5)

    def test_w_diagnostic(self) -> None:
        report = cherry.w_diagnostic(self.series, 5)
        low, high = report.band
        assert 0 < low <= high
        assert report.exponent == 3

    def test_level_functions(self) -> None:
        geometry = self.result.geometry
        level = self.series[5]
        assert cherry.alpha(geometry, 5) == level.alpha
        assert cherry.sigma(geometry, 5) == level.sigma
        assert cherry.s_ratio(geometry, 5) == level.s
        assert cherry.tau(geometry, 5) == level.tau
        assert cherry.kappa(geometry, 5) == level.kappa
        assert cherry.fsigma(geometry, 5) == level.fsigma
        assert cherry.beta(geometry, 5, 0) == level.beta[0]
        assert cherry.gamma1(geometry, 5, 0) == level.gamma1[0]
        assert cherry.w_ratio(geometry, 5, 0) == level.w[0]
        with pytest.raises(cherry.DomainError):
            cherry.beta(geometry, 5, 2)
        with pytest.raises(cherry.DomainError):
            cherry.w_ratio(geometry, 5, 1)

    def test_first_level(self) -> None:
        with pytest.raises(cherry.DomainError):
            cherry.compute_series(self.result.geometry, first=2, last=4)

    def test_lemma_chain(self) -> None:
        report = cherry.lemma_chain_audit(self.result.geometry, 5)
        chain = report.chains[0]
        # T = q_4 - 1 = 2 iterates.
        assert chain.steps == 2
        assert chain.cr_product > 0 and chain.po_product > 0
        assert report.max_multiplicity >= 1


class AffineCoefficientTestCase(cherry.BaseMapTestCase):
    def test_coefficients(self) -> None:
        table = cherry.convergents(cherry.ContinuedFraction.parse("golden"), 6)
        two, three = mpmath.mpf(2), mpmath.mpf(3)
        c1, c2 = cherry.affine_coefficients(table, 4, two, three)
        self.assert_close(c1, "0.5", abs_tol=1e-12)
        self.assert_close(c2, "0.5", abs_tol=1e-12)
        c1, c2 = cherry.affine_coefficients(table, 5, two, three)
        self.assert_close(c1, mpmath.mpf(1) / 3, abs_tol=1e-12)
        self.assert_close(c2, mpmath.mpf(1) / 3, abs_tol=1e-12)
        with pytest.raises(cherry.DepthError):
            cherry.affine_coefficients(table, 7, two, three)

    def test_parity(self) -> None:
        assert cherry.parity_exponent(4, 2, 3) == 2
        assert cherry.parity_exponent(5, 2, 3) == 3
        assert cherry.geometric_tail(mpmath.mpf(1), 4) == 4


class CrossRatioTestCase(cherry.BaseMapTestCase):
    def test_cr_plus_po(self) -> None:
        # Dyadic points keep every product exact; only the divisions round.
        rng = random.Random(6)
        scale = mpmath.mpf(2) ** -20
        with mpmath.workprec(256):
            for _ in range(10_000):
                points = [k * scale for k in sorted(rng.sample(range(1, 2**20), 4))]
                quadruple = cherry.Quadruple(*points)
                total = cherry.cross_cr(quadruple) + cherry.cross_po(quadruple)
                assert abs(total - 1) <= mpmath.eps

    def test_from_circle(self) -> None:
        points = [mpmath.mpf(x) for x in ("0.9", "0.95", "0.05", "0.1")]
        quadruple = cherry.Quadruple.from_circle(points, 256)
        self.assert_close(quadruple.d - quadruple.a, "0.2", abs_tol=1e-12)
        with pytest.raises(cherry.DomainError):
            cherry.Quadruple(*[mpmath.mpf(x) for x in ("0.1", "0.3", "0.2", "0.4")])

    def test_distortion_audit(self) -> None:
        flat = cherry.kernel.Arc.from_values("0.4", "0.1", 256)
        m = cherry.make_map("3", "3", flat, "0.5", 256)
        with mpmath.workprec(256):
            quadruple = cherry.Quadruple(
                *[mpmath.mpf(x) for x in ("0.6", "0.65", "0.7", "0.8")]
            )
            across = cherry.Quadruple(
                *[mpmath.mpf(x) for x in ("0.3", "0.35", "0.55", "0.6")]
            )
        report = cherry.distortion_audit(m, [quadruple], 1)
        chain = report.chains[0]
        assert chain.diffeomorphic_steps == 1
        # Negative Schwarzian: Po grows on diffeomorphic steps.
        assert chain.po_product > 1
        assert report.po_expansion_holds
        assert report.max_multiplicity == 1
        with pytest.raises(cherry.AuditError):
            cherry.distortion_audit(m, [across], 1)
        with pytest.raises(cherry.DomainError):
            cherry.distortion_audit(m, [], 1)

    def test_po_expands_on_random_quadruples(self) -> None:
        flat = cherry.kernel.Arc.from_values("0.4", "0.1", 256)
        m = cherry.make_map("2", "2", flat, "0.5", 256)
        rng = random.Random(11)
        quadruples = []
        with mpmath.workprec(256):
            for _ in range(1000):
                points = sorted(
                    mpmath.mpf("0.55") + mpmath.mpf(rng.random()) * mpmath.mpf("0.4")
                    for _ in range(4)
                )
                quadruples.append(cherry.Quadruple(*points))
        report = cherry.distortion_audit(m, quadruples, 1)
        assert all(chain.diffeomorphic_steps == 1 for chain in report.chains)
        assert report.po_expansion_holds
        assert report.min_po_product >= 1
