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

__all__ = [
    "BoxCount",
    "DIMENSION_COLUMNS",
    "DichotomyReport",
    "DimensionEstimate",
    "DimensionRun",
    "aitken",
    "bowen_dim",
    "box_count",
    "dichotomy_report",
    "dimension_run",
]

import dataclasses
import typing

import mpmath
import numpy as np

from .classify import classify_point
from .constants import (
    BOUNDED_DIMENSION_FLOOR,
    BOUNDED_TAIL_SLOPE_FLOOR,
    DEGENERATE_DIMENSION_CEILING,
    Region,
)
from .continued_fraction import ContinuedFraction
from .errors import DepthError, DomainError, PartitionError
from .kernel import BigReal, bisect_root
from .partition import Cover, DynamicalPartition

DIMENSION_COLUMNS = ("n", "gap_count", "mean_gap", "D_n")


def _as_cover(data: DynamicalPartition | Cover) -> Cover:
    return data.cover() if isinstance(data, DynamicalPartition) else data


def bowen_dim(data: DynamicalPartition | Cover) -> BigReal:
    """Root s in [0, 1] of sum |I|^s = 1 over the gaps.

    Parameters
    ----------
    data : `DynamicalPartition` or `Cover`
        A partition, whose gaps are used, or an explicit cover.

    Raises
    ------
    PartitionError
        If there are no gaps.
    """
    cover = _as_cover(data)
    if not len(cover):
        raise PartitionError("A cover without intervals has no dimension.")
    precision_bits = cover.precision_bits
    lengths = cover.lengths

    def pressure(s: mpmath.mpf) -> mpmath.mpf:
        return mpmath.fsum(length**s for length in lengths) - 1

    with mpmath.workprec(precision_bits):
        tol = mpmath.ldexp(1, -(precision_bits // 2))
        root = bisect_root(
            pressure, BigReal(0, precision_bits), BigReal(1, precision_bits), tol
        )
    return root


@dataclasses.dataclass(frozen=True)
class BoxCount:
    """Box counts at each scale and the fitted slope."""

    counts: typing.Tuple[typing.Tuple[mpmath.mpf, int], ...]
    slope: float


def _box_ranges(
    left: mpmath.mpf, length: mpmath.mpf, epsilon: mpmath.mpf, boxes: int
) -> typing.List[typing.Tuple[int, int]]:
    # Boxes [j eps, (j+1) eps) meeting the open interval (left, left + length).
    right = left + length
    first = int(mpmath.floor(left / epsilon))
    last = int(mpmath.ceil(right / epsilon)) - 1
    if last - first + 1 >= boxes:
        return [(0, boxes - 1)]
    if last < boxes:
        return [(first, last)]
    return [(first, boxes - 1), (0, last - boxes)]


def box_count(
    data: DynamicalPartition | Cover, epsilon_grid: typing.Sequence[typing.Any]
) -> BoxCount:
    """Count the boxes of each size that meet the union of the gaps."""
    cover = _as_cover(data)
    counts = []
    with mpmath.workprec(cover.precision_bits):
        epsilons = [mpmath.mpf(epsilon) for epsilon in epsilon_grid]
        slack = mpmath.ldexp(1, -(cover.precision_bits // 2))
        if any(epsilon <= 0 for epsilon in epsilons):
            raise DomainError("Box sizes must be positive.")
        if any(later >= earlier for earlier, later in zip(epsilons, epsilons[1:])):
            raise DomainError("Box sizes must decrease.")
        for epsilon in epsilons:
            boxes = int(mpmath.ceil(1 / epsilon - slack))
            ranges = []
            for left, length in cover.intervals:
                ranges.extend(_box_ranges(left, length, epsilon, boxes))
            ranges.sort()
            total, end = 0, -1
            for first, last in ranges:
                if last <= end:
                    continue
                total += last - max(first, end + 1) + 1
                end = last
            counts.append((epsilon, total))
    if len(counts) > 1:
        x = [float(-mpmath.log(epsilon)) for epsilon, _ in counts]
        y = [float(np.log(count)) for _, count in counts]
        slope, _ = np.polyfit(x, y, 1)
    else:
        slope = float("nan")
    return BoxCount(counts=tuple(counts), slope=float(slope))


def aitken(values: typing.Sequence[mpmath.mpf]) -> mpmath.mpf:
    """Aitken delta squared extrapolation of the last three values."""
    if len(values) < 3:
        raise DepthError("Extrapolation needs three values.")
    x0, x1, x2 = values[-3:]
    denominator = (x2 - x1) - (x1 - x0)
    if denominator == 0:
        return x2
    return x2 - (x2 - x1) ** 2 / denominator


@dataclasses.dataclass(frozen=True)
class DimensionEstimate:
    """Per level dimension estimates D_n and their extrapolation.

    ``extrapolated`` is clipped to [0, 1]; ``uncertainty`` is its distance
    to the last raw value.
    """

    levels: typing.Tuple[typing.Tuple[int, mpmath.mpf], ...]
    method: str
    extrapolated: mpmath.mpf | None
    uncertainty: mpmath.mpf | None

    @property
    def values(self) -> typing.List[mpmath.mpf]:
        return [value for _, value in self.levels]

    @property
    def final(self) -> mpmath.mpf:
        return self.levels[-1][1]

    def slope(self, tail: int | None = None) -> float:
        """Fitted slope of D_n against n over the last ``tail`` levels."""
        levels = self.levels if tail is None else self.levels[-tail:]
        if len(levels) < 2:
            return 0.0
        slope, _ = np.polyfit(
            [n for n, _ in levels], [float(value) for _, value in levels], 1
        )
        return float(slope)


@dataclasses.dataclass(frozen=True)
class DimensionRun:
    """Dimension estimates of one tuned map over several levels."""

    cf: ContinuedFraction
    ell1: mpmath.mpf
    ell2: mpmath.mpf
    estimate: DimensionEstimate
    gap_counts: typing.Tuple[int, ...]
    mean_gaps: typing.Tuple[mpmath.mpf, ...]
    precision_bits: int

    def rows(self) -> typing.List[typing.List[str]]:
        """CSV rows in `DIMENSION_COLUMNS` order."""

        def dec(value: mpmath.mpf) -> str:
            return BigReal(value, self.precision_bits).to_decimal()

        return [
            [str(n), str(count), dec(mean), dec(value)]
            for (n, value), count, mean in zip(
                self.estimate.levels, self.gap_counts, self.mean_gaps
            )
        ]

    def summary(self) -> typing.Dict[str, typing.Any]:
        def dec(value: mpmath.mpf | None) -> str | None:
            if value is None:
                return None
            return BigReal(value, self.precision_bits).to_decimal()

        return {
            "cf": self.cf.spec,
            "ell1": dec(self.ell1),
            "ell2": dec(self.ell2),
            "method": self.estimate.method,
            "final": dec(self.estimate.final),
            "extrapolated": dec(self.estimate.extrapolated),
            "uncertainty": dec(self.estimate.uncertainty),
        }


def dimension_run(
    partitions: typing.Sequence[DynamicalPartition],
    cf: ContinuedFraction,
    ell1: mpmath.mpf,
    ell2: mpmath.mpf,
) -> DimensionRun:
    """Estimate D_n with `bowen_dim` for each partition."""
    if not partitions:
        raise DepthError("A dimension run needs at least one partition.")
    precision_bits = min(p.precision_bits for p in partitions)
    levels, counts, means = [], [], []
    with mpmath.workprec(precision_bits):
        for partition in partitions:
            levels.append((partition.level, bowen_dim(partition).value))
            gaps = partition.gaps
            counts.append(len(gaps))
            means.append(mpmath.fsum(g.arc.length.value for g in gaps) / len(gaps))
        values = [value for _, value in levels]
        extrapolated = uncertainty = None
        if len(values) >= 3:
            raw = aitken(values)
            extrapolated = min(max(raw, mpmath.mpf(0)), mpmath.mpf(1))
            uncertainty = abs(extrapolated - values[-1])
    estimate = DimensionEstimate(
        levels=tuple(levels),
        method="bowen-pressure",
        extrapolated=extrapolated,
        uncertainty=uncertainty,
    )
    return DimensionRun(
        cf=cf,
        ell1=ell1,
        ell2=ell2,
        estimate=estimate,
        gap_counts=tuple(counts),
        mean_gaps=tuple(means),
        precision_bits=precision_bits,
    )


@dataclasses.dataclass(frozen=True)
class DichotomyReport:
    degenerate: DimensionRun
    bounded: DimensionRun
    degenerate_final: mpmath.mpf
    degenerate_slope: float
    bounded_final: mpmath.mpf
    bounded_tail_slope: float
    passed: bool
    notes: typing.Tuple[str, ...]

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        return {
            "passed": self.passed,
            "degenerate": self.degenerate.summary(),
            "bounded": self.bounded.summary(),
            "degenerate_series": [r[3] for r in self.degenerate.rows()],
            "bounded_series": [r[3] for r in self.bounded.rows()],
            "degenerate_slope": self.degenerate_slope,
            "bounded_tail_slope": self.bounded_tail_slope,
            "notes": list(self.notes),
        }


def dichotomy_report(
    degenerate_run: DimensionRun, bounded_run: DimensionRun, tail: int = 3
) -> DichotomyReport:
    """Compare a run classified Degenerate with one classified Bounded.

    The thresholds are desk-scale conventions, not limits: the degenerate
    run must end below 0.15 with a falling trend, the bounded run above
    0.05 without a falling tail.

    Raises
    ------
    DomainError
        If the runs use different rotation numbers or are not classified
        Degenerate and Bounded respectively.
    DepthError
        If a run has fewer than three levels.
    """
    if degenerate_run.cf != bounded_run.cf:
        raise DomainError("Both runs must share the rotation number.")
    for run in (degenerate_run, bounded_run):
        if len(run.estimate.levels) < 3:
            raise DepthError("Each run needs at least three levels.")
    regions = tuple(
        classify_point(run.cf, run.ell1, run.ell2).region
        for run in (degenerate_run, bounded_run)
    )
    if regions != (Region.DEGENERATE, Region.BOUNDED):
        raise DomainError(
            f"Runs are classified {regions[0].value} and {regions[1].value}; "
            "expected Degenerate and Bounded."
        )
    degenerate, bounded = degenerate_run.estimate, bounded_run.estimate
    degenerate_slope = degenerate.slope()
    bounded_slope = bounded.slope(tail)
    notes = []
    degenerate_ok = (
        degenerate.final < DEGENERATE_DIMENSION_CEILING
        and degenerate_slope < 0
        and degenerate.final < degenerate.values[0]
    )
    if not degenerate_ok:
        notes.append("degenerate run does not fall below the ceiling")
    bounded_ok = (
        bounded.final > BOUNDED_DIMENSION_FLOOR
        and bounded_slope >= BOUNDED_TAIL_SLOPE_FLOOR
    )
    if not bounded_ok:
        notes.append("bounded run does not stay above the floor")
    notes.append(
        f"thresholds {DEGENERATE_DIMENSION_CEILING} and {BOUNDED_DIMENSION_FLOOR} "
        "are finite depth conventions"
    )
    return DichotomyReport(
        degenerate=degenerate_run,
        bounded=bounded_run,
        degenerate_final=degenerate.final,
        degenerate_slope=degenerate_slope,
        bounded_final=bounded.final,
        bounded_tail_slope=bounded_slope,
        passed=degenerate_ok and bounded_ok,
        notes=tuple(notes),
    )
