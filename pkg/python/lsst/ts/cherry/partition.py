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
    "BackwardOrbit",
    "ComparabilityRecord",
    "ComparabilityReport",
    "Cover",
    "DynamicalPartition",
    "ForwardOrbit",
    "GapPiece",
    "KoebeReport",
    "RefinementReport",
    "arc_overlaps",
    "backward_orbit",
    "build_partition",
    "comparability_audit",
    "cyclic_order_matches",
    "forward_orbit",
    "koebe_audit",
    "refinement_check",
]

import bisect
import dataclasses
import logging
import typing

import mpmath
import numpy as np

from .constants import PieceKind
from .continued_fraction import convergents
from .errors import AuditError, DepthError, DomainError, PartitionError, PrecisionError
from .flat_map import FlatCircleMap
from .kernel import Arc, BigReal, CirclePoint, circle_distance, reduce_mod1


@dataclasses.dataclass(frozen=True)
class Cover:
    """Finite family of circle intervals given as (left, length) pairs."""

    intervals: typing.Tuple[typing.Tuple[mpmath.mpf, mpmath.mpf], ...]
    precision_bits: int

    @classmethod
    def from_arcs(cls, arcs: typing.Iterable[Arc], precision_bits: int) -> "Cover":
        return cls(
            tuple((arc.left.value, arc.length.value) for arc in arcs), precision_bits
        )

    @property
    def lengths(self) -> typing.List[mpmath.mpf]:
        return [length for _, length in self.intervals]

    def __len__(self) -> int:
        return len(self.intervals)


@dataclasses.dataclass(frozen=True)
class BackwardOrbit:
    """Arcs f^-i(U), i = 0 ... count, with their endpoint residuals."""

    arcs: typing.Tuple[Arc, ...]
    residuals: typing.Tuple[mpmath.mpf, ...]
    precision_bits: int

    def __len__(self) -> int:
        return len(self.arcs)

    def __getitem__(self, index: int) -> Arc:
        return self.arcs[index]

    @property
    def max_residual(self) -> mpmath.mpf:
        return max(self.residuals)

    @property
    def smallest_length(self) -> mpmath.mpf:
        return min(arc.length.value for arc in self.arcs)

    def needs_escalation(self) -> bool:
        """True if an arc is shorter than 2^(-P/4)."""
        with mpmath.workprec(self.precision_bits):
            floor = mpmath.ldexp(1, -(self.precision_bits // 4))
            return bool(self.smallest_length < floor)


def arc_overlaps(
    arcs: typing.Sequence[Arc], tolerance: mpmath.mpf
) -> typing.List[typing.Tuple[int, int]]:
    """Return index pairs of arcs that overlap by more than ``tolerance``."""
    origin = arcs[0].left.value
    order = sorted(
        range(len(arcs)), key=lambda i: reduce_mod1(arcs[i].left.value - origin)
    )
    overlaps = []
    for position, index in enumerate(order):
        start = reduce_mod1(arcs[index].left.value - origin)
        end = start + arcs[index].length.value
        if position + 1 < len(order):
            following = order[position + 1]
            next_start = reduce_mod1(arcs[following].left.value - origin)
        else:
            following, next_start = order[0], mpmath.mpf(1)
        if end > next_start + tolerance:
            overlaps.append((index, following))
    return overlaps


def backward_orbit(
    m: FlatCircleMap, count: int, log: logging.Logger | None = None
) -> BackwardOrbit:
    """Pull U back ``count`` times.

    Parameters
    ----------
    m : `FlatCircleMap`
        A tuned map.
    count : `int`
        Number of pullbacks.
    log : `logging.Logger`, optional
        Logger for progress messages.

    Returns
    -------
    `BackwardOrbit`
        arcs[0] = U and arcs[i + 1] = f^-1(arcs[i]).

    Raises
    ------
    SplitPreimageError
        If c falls into an arc; the tuning did not reach this depth.
    PrecisionError
        If an endpoint residual exceeds 2^(-P + 16).
    """
    if count < 0:
        raise DomainError(f"count={count} must not be negative.")
    arcs = [m.flat]
    residuals = [mpmath.mpf(0)]
    with mpmath.workprec(m.precision_bits):
        tolerance = mpmath.ldexp(1, -m.precision_bits + 16)
        for i in range(1, count + 1):
            target = arcs[-1]
            try:
                arc = m.preimage_arc(target)
            except PrecisionError as e:
                raise PrecisionError(str(e), level=i) from e
            residual = max(
                circle_distance(m.value_at(arc.left.value), target.left.value),
                circle_distance(m.value_at(arc.right.value), target.right.value),
            )
            if residual > tolerance:
                raise PrecisionError(
                    f"Endpoint residual {mpmath.nstr(residual, 5)} of arc -{i} "
                    f"exceeds 2^{-m.precision_bits + 16}.",
                    level=i,
                )
            arcs.append(arc)
            residuals.append(residual)
    if log is not None:
        log.debug(f"Built {count} preimages of U at {m.precision_bits} bits.")
    return BackwardOrbit(tuple(arcs), tuple(residuals), m.precision_bits)


@dataclasses.dataclass(frozen=True)
class GapPiece:
    """Gap of a dynamical partition between two marked arcs.

    Parameters
    ----------
    kind : `PieceKind`
        LONG or SHORT.
    index : `int`
        Index i in the gap formula.
    after : `int`
        Orbit index of the marked arc at the left end of the gap.
    before : `int`
        Orbit index of the marked arc at the right end of the gap.
    arc : `Arc`
        The gap itself.
    """

    kind: PieceKind
    index: int
    after: int
    before: int
    arc: Arc


@dataclasses.dataclass(frozen=True)
class DynamicalPartition:
    """Level n partition by the arcs -i, 0 <= i < q_(n+1) + q_n, and the
    gaps between them.

    Long gaps are (-q_n - i, -i) for 0 <= i < q_(n+1); short gaps are
    (-i, -q_(n+1) - i) for 0 <= i < q_n.
    """

    level: int
    q_n: int
    q_next: int
    marked: typing.Tuple[Arc, ...]
    long_gaps: typing.Tuple[GapPiece, ...]
    short_gaps: typing.Tuple[GapPiece, ...]
    precision_bits: int

    @property
    def gaps(self) -> typing.Tuple[GapPiece, ...]:
        return self.long_gaps + self.short_gaps

    def pieces(self) -> typing.Iterator[typing.Tuple[PieceKind, int, Arc]]:
        for i, arc in enumerate(self.marked):
            yield PieceKind.MARKED, i, arc
        for gap in self.gaps:
            yield gap.kind, gap.index, gap.arc

    def total_length(self) -> mpmath.mpf:
        with mpmath.workprec(self.precision_bits):
            return mpmath.fsum(arc.length.value for _, _, arc in self.pieces())

    def cover(self) -> Cover:
        """The gaps, which cover the non-wandering set."""
        return Cover.from_arcs((gap.arc for gap in self.gaps), self.precision_bits)

    def rows(self) -> typing.List[typing.List[str]]:
        """CSV rows (kind, index, left, length) as decimal strings."""
        return [
            [kind.value, str(index), arc.left.rep.to_decimal(), arc.length.to_decimal()]
            for kind, index, arc in self.pieces()
        ]


def _gap_between(first: Arc, second: Arc, precision_bits: int) -> Arc:
    length = reduce_mod1(second.left.value - first.right.value)
    if length == 0:
        raise PartitionError(
            f"Marked arcs at {first.left} and {second.left} touch.", magnitude="0"
        )
    return Arc(first.right, BigReal(length, precision_bits))


def build_partition(
    m: FlatCircleMap, orbit: BackwardOrbit, n: int
) -> DynamicalPartition:
    """Assemble the level n partition from the backward orbit.

    Gap endpoints come from the index formulas; orientation follows the
    parity of n, since -q_n lies to the left of U for odd n and to the
    right for even n.

    Raises
    ------
    DepthError
        If the orbit or the target expansion is too short.
    PartitionError
        If the pieces do not tile the circle.
    """
    if m.rho_target is None:
        raise DepthError("The map carries no target rotation number.")
    if n < 1:
        raise DomainError(f"Partition level n={n} must be at least 1.")
    table = convergents(m.rho_target, n)
    q_n, q_next = table.q[n], table.q[n + 1]
    count = q_next + q_n
    if len(orbit) < count:
        raise DepthError(f"Level {n} needs {count} arcs, the orbit has {len(orbit)}.")
    arcs = orbit.arcs[:count]
    precision_bits = orbit.precision_bits
    odd = n % 2 == 1
    long_gaps, short_gaps = [], []
    with mpmath.workprec(precision_bits):
        for i in range(q_next):
            after, before = (q_n + i, i) if odd else (i, q_n + i)
            long_gaps.append(
                GapPiece(
                    PieceKind.LONG,
                    i,
                    after,
                    before,
                    _gap_between(arcs[after], arcs[before], precision_bits),
                )
            )
        for i in range(q_n):
            after, before = (i, q_next + i) if odd else (q_next + i, i)
            short_gaps.append(
                GapPiece(
                    PieceKind.SHORT,
                    i,
                    after,
                    before,
                    _gap_between(arcs[after], arcs[before], precision_bits),
                )
            )
    partition = DynamicalPartition(
        level=n,
        q_n=q_n,
        q_next=q_next,
        marked=tuple(arcs),
        long_gaps=tuple(long_gaps),
        short_gaps=tuple(short_gaps),
        precision_bits=precision_bits,
    )
    _check_tiling(partition)
    return partition


def _check_tiling(partition: DynamicalPartition) -> None:
    successor = {}
    for gap in partition.gaps:
        if gap.after in successor:
            raise PartitionError(f"Arc -{gap.after} starts two gaps.")
        successor[gap.after] = gap.before
    visited, current = 0, 0
    while True:
        current = successor[current]
        visited += 1
        if current == 0:
            break
    if visited != len(partition.marked):
        raise PartitionError(
            f"Level {partition.level} gaps form a cycle of {visited} arcs, "
            f"expected {len(partition.marked)}."
        )
    with mpmath.workprec(partition.precision_bits):
        excess = partition.total_length() - 1
        if abs(excess) > mpmath.ldexp(1, -(partition.precision_bits // 2)):
            raise PartitionError(
                f"Level {partition.level} pieces have total length 1 + {excess}.",
                magnitude=mpmath.nstr(excess, 10),
            )


@dataclasses.dataclass(frozen=True)
class RefinementReport:
    level: int
    violations: typing.Tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def refinement_check(
    p_n: DynamicalPartition, p_next: DynamicalPartition
) -> RefinementReport:
    """Check that every piece of the finer partition sits inside a single
    piece of the coarser one and that marked arcs persist."""
    if p_next.level != p_n.level + 1:
        raise DomainError(
            f"Levels {p_n.level} and {p_next.level} are not consecutive."
        )
    violations = []
    precision_bits = min(p_n.precision_bits, p_next.precision_bits)
    with mpmath.workprec(precision_bits):
        tolerance = mpmath.ldexp(1, -(precision_bits // 2))
        origin = p_n.marked[0].left.value
        coarse = sorted(
            (reduce_mod1(arc.left.value - origin), arc.length.value, kind.value, index)
            for kind, index, arc in p_n.pieces()
        )
        starts = [entry[0] for entry in coarse]
        for kind, index, arc in p_next.pieces():
            offset = reduce_mod1(arc.left.value - origin)
            if offset > 1 - tolerance:
                offset -= 1
            position = bisect.bisect_right(starts, offset + tolerance) - 1
            if position < 0:
                violations.append(f"{kind.value} {index} precedes every coarse piece")
                continue
            start, length, coarse_kind, coarse_index = coarse[position]
            if offset + arc.length.value > start + length + tolerance:
                violations.append(
                    f"{kind.value} {index} leaves {coarse_kind} {coarse_index}"
                )
        for i, arc in enumerate(p_n.marked):
            if i >= len(p_next.marked) or p_next.marked[i] != arc:
                violations.append(f"marked {i} is not marked at level {p_next.level}")
    return RefinementReport(level=p_n.level, violations=tuple(violations))


@dataclasses.dataclass(frozen=True)
class ForwardOrbit:
    """Images i = f^i(U); entry 0 is U itself, entry i >= 1 a point."""

    points: typing.Tuple[Arc | CirclePoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    def point(self, i: int) -> mpmath.mpf:
        if i < 1:
            raise DomainError(f"Forward index {i} must be at least 1.")
        entry = self.points[i]
        assert isinstance(entry, CirclePoint)
        return entry.value


def forward_orbit(m: FlatCircleMap, count: int) -> ForwardOrbit:
    """Iterated images of c = f(U), up to f^count(U)."""
    if count < 1:
        raise DomainError(f"count={count} must be at least 1.")
    points: typing.List[Arc | CirclePoint] = [m.flat, m.c]
    while len(points) <= count:
        previous = points[-1]
        assert isinstance(previous, CirclePoint)
        points.append(m.eval(previous))
    return ForwardOrbit(tuple(points))


def cyclic_order_matches(
    m: FlatCircleMap, orbit: ForwardOrbit, rho: BigReal, count: int
) -> bool:
    """Compare the order of points 1..count around U with the rigid
    rotation by ``rho``."""
    with mpmath.workprec(m.precision_bits):
        dynamic = sorted(range(1, count + 1), key=lambda i: m.offset(orbit.point(i)))
        rigid = sorted(range(1, count + 1), key=lambda i: reduce_mod1(i * rho.value))
    return dynamic == rigid


@dataclasses.dataclass(frozen=True)
class ComparabilityRecord:
    level: int
    min_ratio: mpmath.mpf
    max_ratio: mpmath.mpf
    pairs: int


@dataclasses.dataclass(frozen=True)
class ComparabilityReport:
    """Ratios of marked arcs to their adjacent gaps, per level."""

    records: typing.Tuple[ComparabilityRecord, ...]

    @property
    def all_positive(self) -> bool:
        return all(record.min_ratio > 0 for record in self.records)

    def trend_slope(self) -> float | None:
        """Fitted slope of log(min ratio) against the level."""
        if len(self.records) < 2:
            return None
        levels = [record.level for record in self.records]
        logs = [float(mpmath.log(record.min_ratio)) for record in self.records]
        slope, _ = np.polyfit(levels, logs, 1)
        return float(slope)


def comparability_audit(*partitions: DynamicalPartition) -> ComparabilityReport:
    """Record |A| / |B| for every marked arc A and adjacent gap B."""
    records = []
    for partition in partitions:
        with mpmath.workprec(partition.precision_bits):
            ratios = []
            for gap in partition.gaps:
                for index in (gap.after, gap.before):
                    ratios.append(
                        partition.marked[index].length.value / gap.arc.length.value
                    )
            records.append(
                ComparabilityRecord(
                    level=partition.level,
                    min_ratio=min(ratios),
                    max_ratio=max(ratios),
                    pairs=len(ratios),
                )
            )
    return ComparabilityReport(tuple(records))


@dataclasses.dataclass(frozen=True)
class KoebeReport:
    """Distortion of a diffeomorphic iterate on an interval with space.

    Attributes
    ----------
    iterations : `int`
        Number of iterates n.
    distortion : `mpmath.mpf`
        sup Df^n / inf Df^n over the sampled inner interval.
    space : `mpmath.mpf`
        Smallest ratio of a component of f^n(T) minus f^n(M) to |f^n(M)|.
    total_length : `mpmath.mpf`
        Sum of |f^i(T)| for 0 <= i < n.
    prefactor : `mpmath.mpf`
        (1 + space) / space.
    implied_constant : `mpmath.mpf`
        Smallest C with distortion <= prefactor * exp(C * total_length).
    """

    iterations: int
    distortion: mpmath.mpf
    space: mpmath.mpf
    total_length: mpmath.mpf
    prefactor: mpmath.mpf
    implied_constant: mpmath.mpf


def _meets(arc: Arc, other: Arc) -> bool:
    return (
        other.contains_interior(arc.left.value)
        or other.contains_interior(arc.right.value)
        or arc.contains_interior(other.left.value)
        or arc.contains_interior(other.right.value)
    )


def koebe_audit(
    m: FlatCircleMap, outer: Arc, inner: Arc, n_iter: int, samples: int = 9
) -> KoebeReport:
    """Measure the distortion of f^n on ``inner`` inside ``outer``.

    Raises
    ------
    DomainError
        If ``inner`` is not inside ``outer``.
    AuditError
        If some image f^i(outer), i < n, meets U, so f^n is not a
        diffeomorphism on ``outer``.
    """
    if n_iter < 1 or samples < 2:
        raise DomainError("n_iter must be at least 1 and samples at least 2.")
    with mpmath.workprec(m.precision_bits):
        start = outer.offset(inner.left.value)
        if start + inner.length.value > outer.length.value:
            raise DomainError("The inner interval is not inside the outer one.")
        outer_ends = [outer.left.value, outer.right.value]
        inner_ends = [inner.left.value, inner.right.value]
        points = [
            inner.left.value + inner.length.value * k / (samples - 1)
            for k in range(samples)
        ]
        derivatives = [mpmath.mpf(1)] * samples
        total = mpmath.mpf(0)
        current = outer
        for i in range(n_iter):
            if _meets(current, m.flat) or m.flat.contains(current.left.value):
                raise AuditError(f"f^{i}(T) meets the flat piece.")
            total += current.length.value
            for k, x in enumerate(points):
                derivatives[k] *= m.derivative(x).value
            points = [m.value_at(x) for x in points]
            outer_ends = [m.value_at(x) for x in outer_ends]
            inner_ends = [m.value_at(x) for x in inner_ends]
            current = Arc(
                CirclePoint(BigReal(outer_ends[0], m.precision_bits)),
                BigReal(reduce_mod1(outer_ends[1] - outer_ends[0]), m.precision_bits),
            )
        inner_length = reduce_mod1(inner_ends[1] - inner_ends[0])
        left_space = reduce_mod1(inner_ends[0] - outer_ends[0])
        right_space = reduce_mod1(outer_ends[1] - inner_ends[1])
        space = min(left_space, right_space) / inner_length
        distortion = max(derivatives) / min(derivatives)
        prefactor = (1 + space) / space
        implied = mpmath.mpf(0)
        if distortion > prefactor:
            implied = mpmath.log(distortion / prefactor) / total
        return KoebeReport(
            iterations=n_iter,
            distortion=distortion,
            space=space,
            total_length=total,
            prefactor=prefactor,
            implied_constant=implied,
        )
