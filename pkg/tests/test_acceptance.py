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


import mpmath
from lsst.ts import cherry

DEPTH = 12


class AcceptanceTestCase(cherry.BaseMapTestCase):
    """Desk-scale runs; set CHERRY_RUN_SLOW to enable."""

    def setUp(self) -> None:
        super().setUp()
        self.require_slow()

    def dimension_run(self, ell: str) -> cherry.DimensionRun:
        result = self.run_map(ell, ell, depth=DEPTH, with_partitions=True)
        m = result.circle_map
        return cherry.dimension_run(
            result.partitions, m.rho_target, m.ell1.value, m.ell2.value
        )

    def test_closest_returns(self) -> None:
        for ell in ("1.5", "3"):
            m = self.run_map(ell, ell, depth=DEPTH, with_partitions=True).circle_map
            table = cherry.convergents(m.rho_target, DEPTH)
            assert cherry.closest_returns(m, DEPTH) == table.denominators(DEPTH)

    def test_classification(self) -> None:
        golden = cherry.ContinuedFraction.parse("golden")
        low = cherry.classify_point(golden, "1.5", "1.5")
        high = cherry.classify_point(golden, "3", "3")
        assert low.region == cherry.Region.DEGENERATE
        assert high.region == cherry.Region.BOUNDED

    def test_bounded_ratios(self) -> None:
        series = self.run_map("3", "3", depth=DEPTH, with_partitions=True).series
        alphas = [series[n].alpha for n in range(5, DEPTH + 1)]
        with mpmath.workprec(series.precision_bits):
            assert min(alphas) > mpmath.mpf("0.01") * max(alphas)
        # A decreasing tail, if any, must not shrink towards zero.
        tail = alphas[-4:]
        if all(later < earlier for earlier, later in zip(tail, tail[1:])):
            assert tail[-1] > tail[0] / 2

    def test_dimension_dichotomy(self) -> None:
        report = cherry.dichotomy_report(
            self.dimension_run("1.5"), self.dimension_run("3")
        )
        assert report.passed, report.notes

    def test_degenerate_ratios(self) -> None:
        series = self.run_map("1.5", "1.5", depth=DEPTH, with_partitions=True).series
        alphas = [series[n].alpha for n in range(5, DEPTH + 1)]
        assert all(later < earlier for earlier, later in zip(alphas, alphas[1:]))
        assert alphas[-1] < alphas[0] / 10

    def test_degenerate_nu_growth(self) -> None:
        series = self.run_map("1.5", "1.5", depth=DEPTH, with_partitions=True).series
        report = cherry.decay_rate_report(series, first=5)
        assert report.levels == tuple(range(5, DEPTH + 1))
        assert report.increasing
        assert report.convex_fraction >= 0.8
        assert report.log_slope > 0

    def test_bounded_lower_bounds(self) -> None:
        series = self.run_map("3", "3", depth=DEPTH, with_partitions=True).series
        report = cherry.verify_lower_bounds(series)
        for check in ("kappa-bound", "alpha-bound", "one-minus-beta"):
            records = [r for r in report.select(check) if r.level >= 4]
            assert records, check
            assert all(record.passed for record in records), check
            head = min(r.slack for r in records if r.level <= 8)
            tail = min(r.slack for r in records if r.level > 8)
            assert head > 0 and tail > 0, check
            assert tail > head / 100, check

    def test_rotation_targets(self) -> None:
        depth = 10
        for rho in ("golden", "[2]rep"):
            for ell in ("1.5", "3"):
                config = cherry.ExperimentConfig(
                    command=cherry.Command.TUNE,
                    l1=ell,
                    l2=ell,
                    rho=rho,
                    depth=depth,
                    prec=512,
                )
                config.validate()
                runner = cherry.ExperimentRunner(config, log=self.log)
                m = runner.run(with_series=False).circle_map
                table = cherry.convergents(m.rho_target, depth)
                returns = cherry.closest_returns(m, depth)
                assert returns == table.denominators(depth), (rho, ell)
                q = table.q[depth]
                estimate, _ = cherry.rotation_number_estimate(m, 4 * q, m.flat.right)
                target = cherry.cf_value(m.rho_target, depth, m.precision_bits)
                with mpmath.workprec(m.precision_bits):
                    assert abs(estimate.value - target.value) < mpmath.mpf(1) / q

    def test_degenerate_inequalities(self) -> None:
        series = self.run_map("1.5", "1.5", depth=DEPTH, with_partitions=True).series
        for report in (
            cherry.verify_apriori(series),
            cherry.verify_lemma1(series),
            cherry.verify_recursion(series),
        ):
            assert not report.hard_failures

    def test_precision_audit(self) -> None:
        coarse = self.run_map("3", "3", depth=DEPTH, with_partitions=True)
        fine = self.run_map(
            "3", "3", depth=DEPTH, precision_bits=2 * coarse.precision_bits
        )
        difference = cherry.series_difference(coarse.series, fine.series)
        assert difference < mpmath.ldexp(1, -(coarse.precision_bits // 2))
