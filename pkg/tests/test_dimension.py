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


def make_run(ell: str, values: typing.Sequence[str], rho: str = "golden"):
    with mpmath.workprec(PRECISION_BITS):
        levels = tuple((3 + i, mpmath.mpf(v)) for i, v in enumerate(values))
        estimate = cherry.DimensionEstimate(
            levels=levels,
            method="bowen-pressure",
            extrapolated=None,
            uncertainty=None,
        )
        return cherry.DimensionRun(
            cf=cherry.ContinuedFraction.parse(rho),
            ell1=mpmath.mpf(ell),
            ell2=mpmath.mpf(ell),
            estimate=estimate,
            gap_counts=tuple(range(5, 5 + len(values))),
            mean_gaps=tuple(mpmath.mpf("0.01") for _ in values),
            precision_bits=PRECISION_BITS,
        )


class BowenDimensionTestCase(unittest.TestCase):
    def test_middle_thirds(self) -> None:
        with mpmath.workprec(PRECISION_BITS):
            length = mpmath.mpf(1) / 27
            intervals = tuple((k * 2 * length, length) for k in range(8))
        cover = cherry.Cover(intervals, PRECISION_BITS)
        dimension = cherry.bowen_dim(cover)
        with mpmath.workprec(PRECISION_BITS):
            expected = mpmath.log(2) / mpmath.log(3)
            assert abs(dimension.value - expected) < 1e-30

    def test_empty_cover(self) -> None:
        with pytest.raises(cherry.PartitionError):
            cherry.bowen_dim(cherry.Cover((), PRECISION_BITS))


class BoxCountTestCase(unittest.TestCase):
    def setUp(self) -> None:
        self.cover = cherry.Cover(
            ((mpmath.mpf("0.25"), mpmath.mpf("0.5")),), PRECISION_BITS
        )

    def test_single_interval(self) -> None:
        boxes = cherry.box_count(self.cover, ["0.25", "0.125"])
        assert [count for _, count in boxes.counts] == [2, 4]
        assert abs(boxes.slope - 1) < 1e-12

    def test_wrapping_interval(self) -> None:
        cover = cherry.Cover(((mpmath.mpf("0.875"), mpmath.mpf("0.25")),), 64)
        boxes = cherry.box_count(cover, ["0.125"])
        assert [count for _, count in boxes.counts] == [2]

    def test_bad_grid(self) -> None:
        with pytest.raises(cherry.DomainError):
            cherry.box_count(self.cover, ["0.125", "0.25"])
        with pytest.raises(cherry.DomainError):
            cherry.box_count(self.cover, ["0", "0.25"])


class ExtrapolationTestCase(unittest.TestCase):
    def test_aitken(self) -> None:
        values = [mpmath.mpf(1), mpmath.mpf("0.5"), mpmath.mpf("0.25")]
        assert cherry.aitken(values) == 0
        assert cherry.aitken([mpmath.mpf(1)] * 3) == 1
        with pytest.raises(cherry.DepthError):
            cherry.aitken(values[:2])

    def test_estimate_slope(self) -> None:
        run = make_run("1.5", ["0.3", "0.2", "0.1"])
        assert abs(run.estimate.slope() + 0.1) < 1e-12
        assert run.estimate.final == mpmath.mpf("0.1")
        assert [row[0] for row in run.rows()] == ["3", "4", "5"]
        assert run.summary()["method"] == "bowen-pressure"


class DichotomyTestCase(unittest.TestCase):
    def test_passes(self) -> None:
        degenerate = make_run("1.5", ["0.3", "0.2", "0.1"])
        bounded = make_run("3", ["0.4", "0.41", "0.4"])
        report = cherry.dichotomy_report(degenerate, bounded)
        assert report.passed
        data = report.to_dict()
        assert data["passed"]
        assert len(data["degenerate_series"]) == 3

    def test_flat_degenerate_run_fails(self) -> None:
        degenerate = make_run("1.5", ["0.3", "0.3", "0.3"])
        bounded = make_run("3", ["0.4", "0.41", "0.4"])
        report = cherry.dichotomy_report(degenerate, bounded)
        assert not report.passed
        assert "degenerate run does not fall below the ceiling" in report.notes

    def test_wrong_inputs(self) -> None:
        degenerate = make_run("1.5", ["0.3", "0.2", "0.1"])
        bounded = make_run("3", ["0.4", "0.41", "0.4"])
        with pytest.raises(cherry.DomainError):
            cherry.dichotomy_report(bounded, degenerate)
        other = make_run("3", ["0.4", "0.41", "0.4"], rho="[1,2]rep")
        with pytest.raises(cherry.DomainError):
            cherry.dichotomy_report(degenerate, other)
        with pytest.raises(cherry.DepthError):
            cherry.dichotomy_report(degenerate, make_run("3", ["0.4", "0.4"]))


class DimensionRunTestCase(cherry.BaseMapTestCase):
    def test_tuned_map(self) -> None:
        result = self.run_map("3", "3", with_partitions=True)
        m = result.circle_map
        run = cherry.dimension_run(
            result.partitions, m.rho_target, m.ell1.value, m.ell2.value
        )
        table = result.geometry.table
        assert [n for n, _ in run.estimate.levels] == [3, 4, 5, 6]
        assert run.gap_counts == tuple(table.q[n + 1] + table.q[n] for n in range(3, 7))
        assert all(0 < value < 1 for value in run.estimate.values)
        assert run.estimate.extrapolated is not None
        assert 0 <= run.estimate.extrapolated <= 1
        boxes = cherry.box_count(result.partitions[-1], ["0.01", "0.001"])
        assert boxes.counts[1][1] >= boxes.counts[0][1]
        with pytest.raises(cherry.DepthError):
            cherry.dimension_run([], m.rho_target, m.ell1.value, m.ell2.value)
