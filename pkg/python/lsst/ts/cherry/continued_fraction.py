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
    "ContinuedFraction",
    "ConvergentTable",
    "cf_limit",
    "cf_value",
    "convergents",
]

import dataclasses
import math
import re
import typing

import mpmath

from .errors import DepthError, DomainError
from .kernel import BigReal

_PERIODIC_RE = re.compile(r"^\[(?:(?P<prefix>[\d,\s]*);)?(?P<tail>[\d,\s]+)\]rep$")
_EXPLICIT_RE = re.compile(r"^\[(?P<items>[\d,\s]+?)(?:,?\s*(?:\.\.\.|…))?\]$")


def _parse_items(text: str) -> typing.Tuple[int, ...]:
    return tuple(int(item) for item in text.split(",") if item.strip())


@dataclasses.dataclass(frozen=True)
class ContinuedFraction:
    """Continued fraction [0; a_1, a_2, ...] of a rotation number in [0, 1).

    Parameters
    ----------
    quotients : `tuple` [`int`]
        Leading partial quotients a_1, a_2, ...
    periodic_tail : `tuple` [`int`] or `None`
        Block repeated forever after ``quotients``. If `None` the expansion
        is finite.

    Raises
    ------
    DomainError
        If a quotient is smaller than 1 or the expansion is empty.
    """

    quotients: typing.Tuple[int, ...] = ()
    periodic_tail: typing.Tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "quotients", tuple(self.quotients))
        if self.periodic_tail is not None:
            object.__setattr__(self, "periodic_tail", tuple(self.periodic_tail))
            if not self.periodic_tail:
                raise DomainError("A periodic tail must not be empty.")
        if not self.quotients and self.periodic_tail is None:
            raise DomainError("A continued fraction needs at least one quotient.")
        for a in self.quotients + (self.periodic_tail or ()):
            if int(a) != a or a < 1:
                raise DomainError(f"Partial quotient {a} must be an integer >= 1.")

    @classmethod
    def parse(cls, text: str) -> "ContinuedFraction":
        """Parse the command line notation.

        Accepted forms are ``golden`` for [1 repeating], ``[a,b]rep`` for a
        repeating block, ``[p,q;a,b]rep`` for a prefix followed by a
        repeating block, and an explicit list ``[a1,a2,...]``.
        """
        stripped = text.strip().replace(" ", "")
        if stripped == "golden":
            return cls((), (1,))
        match = _PERIODIC_RE.match(stripped)
        if match is not None:
            prefix = _parse_items(match.group("prefix") or "")
            return cls(prefix, _parse_items(match.group("tail")))
        match = _EXPLICIT_RE.match(stripped)
        if match is not None:
            return cls(_parse_items(match.group("items")), None)
        raise DomainError(f"Cannot parse continued fraction {text!r}.")

    @property
    def spec(self) -> str:
        """Canonical text form, accepted by `parse`."""
        prefix = ",".join(str(a) for a in self.quotients)
        if self.periodic_tail is None:
            return f"[{prefix}]"
        if not self.quotients and self.periodic_tail == (1,):
            return "golden"
        tail = ",".join(str(a) for a in self.periodic_tail)
        return f"[{prefix};{tail}]rep" if prefix else f"[{tail}]rep"

    @property
    def is_infinite(self) -> bool:
        return self.periodic_tail is not None

    @property
    def available(self) -> int | None:
        """Number of available quotients, `None` if unlimited."""
        return None if self.is_infinite else len(self.quotients)

    def quotient(self, n: int) -> int:
        """Return a_n, counting from 1."""
        if n < 1:
            raise DomainError(f"Quotient index {n} must be at least 1.")
        if n <= len(self.quotients):
            return self.quotients[n - 1]
        if self.periodic_tail is None:
            raise DepthError(
                f"Quotient a_{n} requested but only {len(self.quotients)} are known."
            )
        tail_index = (n - 1 - len(self.quotients)) % len(self.periodic_tail)
        return self.periodic_tail[tail_index]

    def expand(self, count: int) -> typing.Tuple[int, ...]:
        """Return a_1 ... a_count."""
        return tuple(self.quotient(n) for n in range(1, count + 1))

    def max_quotient(self) -> int:
        return max(self.quotients + (self.periodic_tail or ()))

    def biperiodic_pair(self) -> typing.Tuple[int, int] | None:
        """Return (a, b) with a the even-index and b the odd-index quotient.

        Only pure period one or two expansions qualify; `None` otherwise.
        """
        if self.quotients or self.periodic_tail is None:
            return None
        if len(self.periodic_tail) not in (1, 2):
            return None
        return self.quotient(2), self.quotient(1)

    @classmethod
    def from_biperiodic(cls, a: int, b: int) -> "ContinuedFraction":
        """Build [b, a, b, a, ...]; a sits at even and b at odd indices."""
        if a == b:
            return cls((), (a,))
        return cls((), (b, a))

    def to_list(self, count: int) -> typing.List[int]:
        """Quotients for the map descriptor, capped by availability."""
        available = self.available
        if available is not None:
            count = min(count, available)
        return list(self.expand(count))


@dataclasses.dataclass(frozen=True)
class ConvergentTable:
    """Numerators and denominators of the convergents.

    Indexing follows q_0 = 0, q_1 = 1, q_(n+1) = a_n q_n + q_(n-1), and
    p_0 = 1, p_1 = 0 with the same recursion. The sign of q_n rho - p_n is
    then (-1)^(n+1).

    Parameters
    ----------
    quotients : `tuple` [`int`]
        a_1 ... a_depth.
    p : `tuple` [`int`]
        p_0 ... p_(depth+1).
    q : `tuple` [`int`]
        q_0 ... q_(depth+1).
    """

    quotients: typing.Tuple[int, ...]
    p: typing.Tuple[int, ...]
    q: typing.Tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.quotients)

    def a(self, n: int) -> int:
        return self.quotients[n - 1]

    @staticmethod
    def sign(n: int) -> int:
        """Sign of q_n rho - p_n."""
        return 1 if n % 2 == 1 else -1

    def denominators(self, depth: int) -> typing.List[int]:
        """Distinct q_1 ... q_depth in increasing order."""
        values: typing.List[int] = []
        for value in self.q[1 : depth + 1]:
            if not values or value != values[-1]:
                values.append(value)
        return values


def convergents(cf: ContinuedFraction, depth: int) -> ConvergentTable:
    """Build the convergent table up to q_(depth+1).

    Raises
    ------
    DepthError
        If a finite expansion has fewer than ``depth`` quotients.
    """
    if depth < 0:
        raise DomainError(f"depth={depth} must not be negative.")
    available = cf.available
    if available is not None and depth > available:
        raise DepthError(f"depth={depth} exceeds the {available} available quotients.")
    quotients = cf.expand(depth)
    p, q = [1, 0], [0, 1]
    for a in quotients:
        p.append(a * p[-1] + p[-2])
        q.append(a * q[-1] + q[-2])
    for pn, qn in zip(p, q):
        assert math.gcd(pn, qn) == 1
    return ConvergentTable(quotients=quotients, p=tuple(p), q=tuple(q))


def cf_value(cf: ContinuedFraction, depth: int, precision_bits: int = 256) -> BigReal:
    """Value of the fraction truncated after ``depth`` partial quotients.

    This is p_(depth+1) / q_(depth+1).
    """
    if depth < 1:
        raise DomainError(f"depth={depth} must be at least 1.")
    table = convergents(cf, depth)
    with mpmath.workprec(precision_bits):
        return BigReal(
            mpmath.mpf(table.p[depth + 1]) / table.q[depth + 1], precision_bits
        )


def cf_limit(cf: ContinuedFraction, precision_bits: int) -> BigReal:
    """Value of the full expansion to working precision.

    Infinite expansions are truncated once 1/q^2 drops below the precision.
    """
    available = cf.available
    if available is not None:
        return cf_value(cf, available, precision_bits)
    depth = 1
    while convergents(cf, depth).q[depth + 1] < 2 ** (precision_bits // 2 + 8):
        depth += 1
    return cf_value(cf, depth, precision_bits)
