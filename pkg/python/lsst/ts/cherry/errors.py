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
    "CherryError",
    "DomainError",
    "DegenerateArcError",
    "BracketError",
    "UndefinedDerivativeError",
    "AmbiguousPreimageError",
    "SplitPreimageError",
    "TuningError",
    "DepthError",
    "PrecisionError",
    "PartitionError",
    "CombinatoricsError",
    "AuditError",
    "UsageError",
]

import typing

from .constants import ExitCode


class CherryError(RuntimeError):
    """Base class of all errors raised by this package.

    Each subclass carries the exit code the command line tools report when
    the error ends a run.
    """

    exit_code = ExitCode.FAILURE


class DomainError(CherryError, ValueError):
    """An argument lies outside the domain of an operation."""

    exit_code = ExitCode.USAGE


class DegenerateArcError(CherryError):
    """Two coinciding points cannot span an arc."""


class BracketError(CherryError):
    """A root finder was handed a bracket without a sign change."""


class UndefinedDerivativeError(CherryError):
    """A derivative was requested on the closure of the flat piece."""


class AmbiguousPreimageError(CherryError):
    """The collapsed value of the flat piece has no unique preimage."""


class SplitPreimageError(CherryError):
    """The collapsed value lies inside an arc that is being pulled back."""

    exit_code = ExitCode.TUNING


class TuningError(CherryError):
    """Parameter tuning failed to reach the target combinatorics.

    Parameters
    ----------
    message : `str`
        Description of the failure.
    bracket : `tuple` [`str`, `str`]
        The last parameter bracket, as decimal strings.
    """

    exit_code = ExitCode.TUNING

    def __init__(self, message: str, bracket: typing.Tuple[str, str]) -> None:
        super().__init__(f"{message}; last bracket [{bracket[0]}, {bracket[1]}]")
        self.bracket = bracket


class DepthError(CherryError):
    """A computation needs more levels than are available."""

    exit_code = ExitCode.DEPTH


class PrecisionError(CherryError):
    """The working precision is too low for the requested computation.

    Parameters
    ----------
    message : `str`
        Description of the failure.
    level : `int` or `None`
        Orbit index or partition level where the problem showed up.
    escalate : `bool`
        True if rerunning at a higher precision is expected to help.
    """

    exit_code = ExitCode.PRECISION

    def __init__(
        self, message: str, level: int | None = None, escalate: bool = True
    ) -> None:
        super().__init__(message)
        self.level = level
        self.escalate = escalate


class PartitionError(CherryError):
    """The pieces of a dynamical partition do not tile the circle.

    Parameters
    ----------
    message : `str`
        Description of the failure.
    magnitude : `str`
        Size of the gap or overlap, as a decimal string.
    """

    def __init__(self, message: str, magnitude: str = "") -> None:
        super().__init__(message)
        self.magnitude = magnitude


class CombinatoricsError(CherryError):
    """Empirical closest returns disagree with the target rotation number."""

    exit_code = ExitCode.TUNING


class AuditError(CherryError):
    """The hypotheses of a distortion audit are violated."""


class UsageError(CherryError):
    """Invalid command line flags or configuration."""

    exit_code = ExitCode.USAGE
