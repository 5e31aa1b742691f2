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

__all__ = ["DecayReport", "OrbitGeometry", "decay_check"]

import dataclasses
import logging
import typing

import mpmath
import numpy as np

from .continued_fraction import ConvergentTable, cf_limit, convergents
from .errors import DepthError, DomainError
from .flat_map import FlatCircleMap
from .kernel import centered, reduce_mod1
from .partition import BackwardOrbit, ForwardOrbit, backward_orbit, forward_orbit


class OrbitGeometry:
    """Lengths of orbit objects and of the intervals between them.

    Object k is the arc f^k(U) for k <= 0 (k = 0 is U itself) and the
    point f^k(U) for k >= 1. The interval between objects i and j is the
    arc joining them on the side fixed by the rigid rotation: j lies to
    the right of i iff ((j - i) rho) mod 1, centred, is positive.

    Parameters
    ----------
    m : `FlatCircleMap`
        A tuned map.
    backward : `BackwardOrbit`
        Preimages of U.
    forward : `ForwardOrbit`
        Images of U.
    table : `ConvergentTable`
        Convergents of the target rotation number.
    log : `logging.Logger`, optional
        The logger to create a child logger for.
    """

    def __init__(
        self,
        m: FlatCircleMap,
        backward: BackwardOrbit,
        forward: ForwardOrbit,
        table: ConvergentTable,
        log: logging.Logger | None = None,
    ) -> None:
        if m.rho_target is None:
            raise DepthError("The map carries no target rotation number.")
        self.m = m
        self.backward = backward
        self.forward = forward
        self.table = table
        self.precision_bits = m.precision_bits
        self.rho = cf_limit(m.rho_target, m.precision_bits).value
        if log is None:
            self.log = logging.getLogger(type(self).__name__)
        else:
            self.log = log.getChild(type(self).__name__)

    @classmethod
    def build(
        cls, m: FlatCircleMap, depth: int, log: logging.Logger | None = None
    ) -> "OrbitGeometry":
        """Compute the orbits needed for every partition and ratio up to
        level ``depth``."""
        if m.rho_target is None or m.tuned_depth < depth:
            raise DepthError(
                f"Map is tuned to depth {m.tuned_depth}; depth {depth} was requested."
            )
        table = convergents(m.rho_target, depth)
        backward = backward_orbit(m, table.q[depth + 1] + table.q[depth] - 1, log=log)
        forward = forward_orbit(m, table.q[depth] + 1)
        return cls(m, backward, forward, table, log=log)

    @property
    def depth(self) -> int:
        return self.table.depth

    def _check(self, k: int) -> None:
        if k < 0 and -k >= len(self.backward):
            raise DepthError(f"Preimage -{-k} is beyond the backward orbit.")
        if k > 0 and k >= len(self.forward):
            raise DepthError(f"Image {k} is beyond the forward orbit.")

    def left(self, k: int) -> mpmath.mpf:
        self._check(k)
        if k > 0:
            return self.forward.point(k)
        return self.backward[-k].left.value

    def right(self, k: int) -> mpmath.mpf:
        self._check(k)
        if k > 0:
            return self.forward.point(k)
        with mpmath.workprec(self.precision_bits):
            return self.backward[-k].right.value

    def length(self, k: int) -> mpmath.mpf:
        self._check(k)
        if k > 0:
            return mpmath.mpf(0)
        return self.backward[-k].length.value

    def is_right_of(self, i: int, j: int) -> bool:
        """True if object j lies to the right of object i."""
        if i == j:
            raise DomainError(f"Objects {i} and {j} coincide.")
        with mpmath.workprec(self.precision_bits):
            return bool(centered((j - i) * self.rho) > 0)

    def gap(self, i: int, j: int) -> mpmath.mpf:
        """Length of the open interval (i, j)."""
        with mpmath.workprec(self.precision_bits):
            if self.is_right_of(i, j):
                return reduce_mod1(self.left(j) - self.right(i))
            return reduce_mod1(self.left(i) - self.right(j))

    def interval(
        self,
        i: int,
        j: int,
        include_first: bool = False,
        include_second: bool = False,
    ) -> mpmath.mpf:
        """Length of (i, j) with either end object optionally included,
        giving [i, j), (i, j] or [i, j]."""
        with mpmath.workprec(self.precision_bits):
            total = self.gap(i, j)
            if include_first:
                total += self.length(i)
            if include_second:
                total += self.length(j)
            return total


@dataclasses.dataclass(frozen=True)
class DecayReport:
    """Lengths |(0, q_n)| per level and their exponential fit."""

    levels: typing.Tuple[int, ...]
    lengths: typing.Tuple[mpmath.mpf, ...]
    strictly_decreasing: bool
    slope: float

    @property
    def passed(self) -> bool:
        return self.strictly_decreasing and self.slope < 0


def decay_check(geometry: OrbitGeometry, first: int = 3) -> DecayReport:
    """Check that |(0, q_n)| decreases at least exponentially in n.

    Parameters
    ----------
    geometry : `OrbitGeometry`
        Orbit data up to its depth.
    first : `int`, optional
        First level included.
    """
    levels = tuple(range(first, geometry.depth + 1))
    if len(levels) < 2:
        raise DepthError(f"Decay check needs two levels from {first}.")
    lengths = tuple(geometry.gap(0, geometry.table.q[n]) for n in levels)
    decreasing = all(later < earlier for earlier, later in zip(lengths, lengths[1:]))
    logs = [float(mpmath.log(length)) for length in lengths]
    slope, _ = np.polyfit(levels, logs, 1)
    return DecayReport(
        levels=levels,
        lengths=lengths,
        strictly_decreasing=decreasing,
        slope=float(slope),
    )
