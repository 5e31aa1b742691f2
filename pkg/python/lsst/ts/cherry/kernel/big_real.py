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

__all__ = ["BigReal", "RealLike", "as_mpf", "precision_of", "real"]

import dataclasses
import decimal
import typing

import mpmath
from mpmath import libmp

from ..constants import DEFAULT_PRECISION_BITS
from ..errors import DomainError

RealLike = typing.Union["BigReal", mpmath.mpf, int, float, str, decimal.Decimal]


def as_mpf(value: RealLike) -> mpmath.mpf:
    """Convert a real-like value to an `mpmath.mpf` at the current precision.

    Parameters
    ----------
    value : `BigReal`, `mpmath.mpf`, `int`, `float`, `str` or `Decimal`
        The value to convert.

    Returns
    -------
    `mpmath.mpf`
        The converted value.
    """
    if isinstance(value, BigReal):
        return mpmath.mpf(value.value)
    if isinstance(value, decimal.Decimal):
        return mpmath.mpf(str(value))
    return mpmath.mpf(value)


def precision_of(*values: typing.Any, default: int = DEFAULT_PRECISION_BITS) -> int:
    """Return the smallest precision carried by the `BigReal` arguments."""
    precisions = [v.precision_bits for v in values if isinstance(v, BigReal)]
    return min(precisions) if precisions else default


@dataclasses.dataclass(frozen=True)
class BigReal:
    """Real number with an explicit mantissa precision.

    Arithmetic between two values runs at, and carries, the smaller of the
    two precisions. Plain numbers take the precision of the `BigReal`
    operand.

    Parameters
    ----------
    value : `mpmath.mpf`
        The value. It is rounded to ``precision_bits`` on construction.
    precision_bits : `int`
        Number of mantissa bits.
    """

    value: mpmath.mpf
    precision_bits: int = DEFAULT_PRECISION_BITS

    def __post_init__(self) -> None:
        if self.precision_bits < 1:
            raise DomainError(f"precision_bits={self.precision_bits} must be positive.")
        with mpmath.workprec(self.precision_bits):
            object.__setattr__(self, "value", as_mpf(self.value))

    @classmethod
    def from_decimal(cls, text: str, precision_bits: int) -> "BigReal":
        """Parse a decimal string at the given precision."""
        with mpmath.workprec(precision_bits):
            try:
                value = mpmath.mpf(text.strip())
            except (ValueError, TypeError) as e:
                raise DomainError(f"Cannot parse {text!r} as a real number.") from e
        return cls(value, precision_bits)

    def to_decimal(self) -> str:
        """Return the shortest decimal string that reads back to this value
        at ``precision_bits``."""
        return libmp.to_str(self.value._mpf_, libmp.repr_dps(self.precision_bits))

    def is_finite(self) -> bool:
        return bool(mpmath.isfinite(self.value))

    def with_precision(self, precision_bits: int) -> "BigReal":
        return BigReal(self.value, precision_bits)

    def _binary(
        self,
        other: RealLike,
        op: typing.Callable[[mpmath.mpf, mpmath.mpf], mpmath.mpf],
    ) -> "BigReal":
        precision_bits = precision_of(self, other)
        with mpmath.workprec(precision_bits):
            return BigReal(op(self.value, as_mpf(other)), precision_bits)

    def __add__(self, other: RealLike) -> "BigReal":
        return self._binary(other, lambda x, y: x + y)

    def __radd__(self, other: RealLike) -> "BigReal":
        return self._binary(other, lambda x, y: y + x)

    def __sub__(self, other: RealLike) -> "BigReal":
        return self._binary(other, lambda x, y: x - y)

    def __rsub__(self, other: RealLike) -> "BigReal":
        return self._binary(other, lambda x, y: y - x)

    def __mul__(self, other: RealLike) -> "BigReal":
        return self._binary(other, lambda x, y: x * y)

    def __rmul__(self, other: RealLike) -> "BigReal":
        return self._binary(other, lambda x, y: y * x)

    def __truediv__(self, other: RealLike) -> "BigReal":
        return self._binary(other, lambda x, y: x / y)

    def __rtruediv__(self, other: RealLike) -> "BigReal":
        return self._binary(other, lambda x, y: y / x)

    def __pow__(self, other: RealLike) -> "BigReal":
        return self._binary(other, lambda x, y: x**y)

    def __neg__(self) -> "BigReal":
        return BigReal(-self.value, self.precision_bits)

    def __abs__(self) -> "BigReal":
        return BigReal(abs(self.value), self.precision_bits)

    def __lt__(self, other: RealLike) -> bool:
        return bool(self.value < _compare_value(other))

    def __le__(self, other: RealLike) -> bool:
        return bool(self.value <= _compare_value(other))

    def __gt__(self, other: RealLike) -> bool:
        return bool(self.value > _compare_value(other))

    def __ge__(self, other: RealLike) -> bool:
        return bool(self.value >= _compare_value(other))

    def __float__(self) -> float:
        return float(self.value)

    def __str__(self) -> str:
        return self.to_decimal()


def _compare_value(other: RealLike) -> mpmath.mpf:
    if isinstance(other, BigReal):
        return other.value
    return as_mpf(other)


def real(value: RealLike, precision_bits: int = DEFAULT_PRECISION_BITS) -> BigReal:
    """Build a `BigReal`; strings are parsed at ``precision_bits``."""
    if isinstance(value, str):
        return BigReal.from_decimal(value, precision_bits)
    with mpmath.workprec(precision_bits):
        return BigReal(as_mpf(value), precision_bits)
