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
    "Arc",
    "CirclePoint",
    "arc_between",
    "centered",
    "circle_distance",
    "mod1",
    "reduce_mod1",
]

import dataclasses

import mpmath

from ..constants import DEFAULT_PRECISION_BITS
from ..errors import DegenerateArcError, DomainError
from .big_real import BigReal, RealLike, as_mpf


def reduce_mod1(value: mpmath.mpf) -> mpmath.mpf:
    """Reduce a finite value into [0, 1) at the current working precision."""
    if not mpmath.isfinite(value):
        raise DomainError(f"Cannot reduce non-finite value {value} mod 1.")
    reduced = value - mpmath.floor(value)
    # Rounding of value - floor(value) can land on 1 for tiny negative input.
    if reduced >= 1:
        reduced = mpmath.mpf(0)
    return reduced


def centered(value: mpmath.mpf) -> mpmath.mpf:
    """Reduce a value into [-1/2, 1/2)."""
    return reduce_mod1(value + mpmath.mpf(0.5)) - mpmath.mpf(0.5)


def circle_distance(x: mpmath.mpf, y: mpmath.mpf) -> mpmath.mpf:
    """Length of the shorter arc between two circle coordinates."""
    return abs(centered(x - y))


@dataclasses.dataclass(frozen=True)
class CirclePoint:
    """Point of the circle R/Z, represented in [0, 1).

    Parameters
    ----------
    rep : `BigReal`
        Representative. Values outside [0, 1) are reduced on construction.
    """

    rep: BigReal

    def __post_init__(self) -> None:
        rep = self.rep
        if not isinstance(rep, BigReal):
            rep = BigReal(as_mpf(rep), DEFAULT_PRECISION_BITS)
        if not 0 <= rep.value < 1:
            with mpmath.workprec(rep.precision_bits):
                rep = BigReal(reduce_mod1(rep.value), rep.precision_bits)
        object.__setattr__(self, "rep", rep)

    @classmethod
    def from_value(cls, value: RealLike, precision_bits: int) -> "CirclePoint":
        """Build a point from any real-like value at the given precision."""
        if isinstance(value, str):
            return cls(BigReal.from_decimal(value, precision_bits))
        with mpmath.workprec(precision_bits):
            return cls(BigReal(as_mpf(value), precision_bits))

    @property
    def value(self) -> mpmath.mpf:
        return self.rep.value

    @property
    def precision_bits(self) -> int:
        return self.rep.precision_bits

    def __str__(self) -> str:
        return self.rep.to_decimal()


@dataclasses.dataclass(frozen=True)
class Arc:
    """Positively oriented arc of the circle.

    Parameters
    ----------
    left : `CirclePoint`
        Left endpoint.
    length : `BigReal`
        Length, in (0, 1).

    Raises
    ------
    DegenerateArcError
        If the length is not positive.
    DomainError
        If the length is 1 or more.
    """

    left: CirclePoint
    length: BigReal

    def __post_init__(self) -> None:
        if self.length.value <= 0:
            raise DegenerateArcError(f"Arc length {self.length} must be positive.")
        if self.length.value >= 1:
            raise DomainError(f"Arc length {self.length} must be less than 1.")

    @classmethod
    def from_values(
        cls, left: RealLike, length: RealLike, precision_bits: int
    ) -> "Arc":
        """Build an arc from its left endpoint and length."""
        left_point = CirclePoint.from_value(left, precision_bits)
        if isinstance(length, str):
            length_real = BigReal.from_decimal(length, precision_bits)
        else:
            with mpmath.workprec(precision_bits):
                length_real = BigReal(as_mpf(length), precision_bits)
        return cls(left_point, length_real)

    @property
    def precision_bits(self) -> int:
        return min(self.left.precision_bits, self.length.precision_bits)

    @property
    def right(self) -> CirclePoint:
        with mpmath.workprec(self.precision_bits):
            return CirclePoint(
                BigReal(
                    reduce_mod1(self.left.value + self.length.value),
                    self.precision_bits,
                )
            )

    def offset(self, point: mpmath.mpf) -> mpmath.mpf:
        """Positive distance from the left endpoint to ``point``."""
        with mpmath.workprec(self.precision_bits):
            return reduce_mod1(point - self.left.value)

    def contains(self, point: mpmath.mpf) -> bool:
        """True if ``point`` lies on the closed arc."""
        return bool(self.offset(point) <= self.length.value)

    def contains_interior(self, point: mpmath.mpf) -> bool:
        """True if ``point`` lies on the open arc."""
        offset = self.offset(point)
        return bool(0 < offset < self.length.value)


def mod1(x: BigReal) -> CirclePoint:
    """Project a real number onto the circle.

    Parameters
    ----------
    x : `BigReal`
        Finite real number.

    Returns
    -------
    `CirclePoint`
        The point x - floor(x).

    Raises
    ------
    DomainError
        If ``x`` is not finite.
    """
    with mpmath.workprec(x.precision_bits):
        return CirclePoint(BigReal(reduce_mod1(x.value), x.precision_bits))


def arc_between(p: CirclePoint, q: CirclePoint) -> Arc:
    """Return the positively oriented arc from ``p`` to ``q``.

    Raises
    ------
    DegenerateArcError
        If the two points coincide.
    """
    precision_bits = min(p.precision_bits, q.precision_bits)
    with mpmath.workprec(precision_bits):
        length = reduce_mod1(q.value - p.value)
        if length == 0:
            raise DegenerateArcError(f"Points {p} and {q} coincide.")
        return Arc(
            CirclePoint(BigReal(p.value, precision_bits)),
            BigReal(length, precision_bits),
        )
