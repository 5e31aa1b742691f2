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
    "ParameterTuner",
    "closest_returns",
    "rotation_interval",
    "rotation_number_estimate",
    "tune_parameter",
]

import collections
import logging
import typing

import mpmath

from .constants import TUNING_MARGIN
from .continued_fraction import ContinuedFraction, ConvergentTable, convergents
from .errors import (
    CombinatoricsError,
    DepthError,
    DomainError,
    PrecisionError,
    TuningError,
)
from .flat_map import FlatCircleMap, LiftState, make_map
from .kernel import Arc, BigReal, CirclePoint, RealLike, as_mpf


def rotation_number_estimate(
    m: FlatCircleMap, n_iters: int, x0: CirclePoint
) -> typing.Tuple[BigReal, BigReal]:
    """Estimate the rotation number from one lifted orbit.

    Parameters
    ----------
    m : `FlatCircleMap`
        The map.
    n_iters : `int`
        Number of iterations, at least 1.
    x0 : `CirclePoint`
        Starting point.

    Returns
    -------
    estimate : `BigReal`
        (F^n(x0) - x0) / n.
    bound : `BigReal`
        Error bound 1/n.
    """
    if n_iters < 1:
        raise DomainError(f"n_iters={n_iters} must be at least 1.")
    state = LiftState.start(x0)
    for _ in range(n_iters):
        state = m.lift_eval(state)
    with mpmath.workprec(m.precision_bits):
        estimate = (state.lift - x0.value) / n_iters
        bound = mpmath.mpf(1) / n_iters
    return BigReal(estimate, m.precision_bits), BigReal(bound, m.precision_bits)


def rotation_interval(
    m: FlatCircleMap, n_iters: int
) -> typing.Tuple[BigReal, BigReal]:
    """Rotation number estimates started from both endpoints of U.

    For a single rotation number the two agree within 2/n.
    """
    return (
        rotation_number_estimate(m, n_iters, m.flat.left)[0],
        rotation_number_estimate(m, n_iters, m.flat.right)[0],
    )


class ParameterTuner:
    """Find a parameter c whose orbit of r(U) has the closest-return
    combinatorics of a target rotation number.

    Parameters
    ----------
    target : `ContinuedFraction`
        Target rotation number.
    depth : `int`
        Requested depth, at least 2.
    margin : `int`, optional
        Extra convergent levels enforced beyond ``depth``.
    log : `logging.Logger`, optional
        The logger to create a child logger for.

    Notes
    -----
    For each level n the displacement F^(q_n)(b) - b - p_n must have the
    sign of q_n rho - p_n, which is (-1)^(n+1). Every such displacement is
    nondecreasing in the lift parameter, so the first violated level tells
    on which side of the bracket midpoint the target lies.
    """

    def __init__(
        self,
        target: ContinuedFraction,
        depth: int,
        margin: int = TUNING_MARGIN,
        log: logging.Logger | None = None,
    ) -> None:
        if depth < 2:
            raise DomainError(f"depth={depth} must be at least 2.")
        available = target.available
        if available is not None and depth > available:
            raise DepthError(
                f"depth={depth} exceeds the {available} quotients of {target.spec}."
            )
        levels = depth + margin
        if available is not None:
            # The last convergent of a finite expansion is the number itself.
            levels = min(levels, available)
        self.target = target
        self.depth = depth
        self.levels = levels
        self.table: ConvergentTable = convergents(target, levels)
        if log is None:
            self.log = logging.getLogger(type(self).__name__)
        else:
            self.log = log.getChild(type(self).__name__)

    def first_violation(self, m: FlatCircleMap) -> int | None:
        """Return the lowest level whose sign condition fails, or `None`."""
        q, p = self.table.q, self.table.p
        with mpmath.workprec(m.precision_bits):
            b = m.b
            y, wraps, k = b, 0, 0
            for n in range(1, self.levels + 1):
                while k < q[n]:
                    image = m.lift(y)
                    w = mpmath.floor(image)
                    y = image - w
                    wraps += int(w)
                    k += 1
                displacement = wraps + y - b - p[n]
                if self.table.sign(n) * displacement <= 0:
                    return n
        return None

    def tune(
        self,
        ell1: RealLike,
        ell2: RealLike,
        flat: Arc,
        precision_bits: int,
        initial_lift: RealLike | None = None,
    ) -> typing.Tuple[FlatCircleMap, int]:
        """Run the nested bisection.

        Parameters
        ----------
        ell1, ell2 : `BigReal` or number
            Exponents.
        flat : `Arc`
            The flat piece U.
        precision_bits : `int`
            Working precision.
        initial_lift : `BigReal` or number, optional
            Candidate lift parameter checked before bisecting.

        Returns
        -------
        m : `FlatCircleMap`
            The tuned map.
        steps : `int`
            Number of bisection steps taken.

        Raises
        ------
        TuningError
            If one level needs more than 4 * precision_bits steps.
        PrecisionError
            If the feasible window is narrower than the working precision.
        """
        base = make_map(
            ell1,
            ell2,
            flat,
            flat.right,
            precision_bits,
            rho_target=self.target,
            tuned_depth=self.depth,
        )
        with mpmath.workprec(precision_bits):
            if initial_lift is not None:
                candidate = base.with_lift_parameter(as_mpf(initial_lift))
                if self.first_violation(candidate) is None:
                    self.log.debug("Initial lift parameter satisfies the target.")
                    return candidate, 0
            lo = base.b
            hi = base.b + base.span
            violations: typing.Counter[int] = collections.Counter()
            steps = 0
            while True:
                mid = (lo + hi) / 2
                if mid <= lo or mid >= hi:
                    raise PrecisionError(
                        f"Parameter window for {self.target.spec} closed below "
                        f"{precision_bits} bits.",
                        level=max(violations, default=None),
                    )
                candidate = base.with_lift_parameter(mid)
                steps += 1
                level = self.first_violation(candidate)
                if level is None:
                    self.log.debug(f"Tuned after {steps} steps: F(b)={mid}")
                    return candidate, steps
                violations[level] += 1
                if violations[level] > 4 * precision_bits:
                    raise TuningError(
                        f"Level {level} did not settle within "
                        f"{4 * precision_bits} bisection steps",
                        bracket=(str(lo), str(hi)),
                    )
                if self.table.sign(level) > 0:
                    lo = mid
                else:
                    hi = mid
                self.log.debug(f"step {steps}: level {level} violated, [{lo}, {hi}]")


def tune_parameter(
    ell1: RealLike,
    ell2: RealLike,
    flat: Arc,
    target: ContinuedFraction,
    depth: int,
    precision_bits: int,
    margin: int = TUNING_MARGIN,
    initial_lift: RealLike | None = None,
    log: logging.Logger | None = None,
) -> FlatCircleMap:
    """Tune c so the map realizes ``target`` up to level ``depth``.

    See `ParameterTuner` for the procedure.
    """
    tuner = ParameterTuner(target=target, depth=depth, margin=margin, log=log)
    m, _ = tuner.tune(ell1, ell2, flat, precision_bits, initial_lift=initial_lift)
    return m


def closest_returns(m: FlatCircleMap, depth: int) -> typing.List[int]:
    """Closest return times of the orbit of r(U), up to q_depth.

    Returns are read off the cyclic order only: a time is a record if its
    point lands closer to U from the right or from the left than every
    earlier point, and each run of same-side records ends at a return.

    Raises
    ------
    DepthError
        If the map is untuned or tuned to a lower depth.
    CombinatoricsError
        If the returns differ from the convergent denominators.
    """
    if m.rho_target is None or m.tuned_depth < depth:
        raise DepthError(
            f"Map is tuned to depth {m.tuned_depth}; depth {depth} was requested."
        )
    table = convergents(m.rho_target, depth)
    expected = table.denominators(depth)
    horizon = table.q[depth]
    returns: typing.List[int] = []
    with mpmath.workprec(m.precision_bits):
        y = m.c.value
        lowest = highest = m.offset(y)
        returns.append(1)
        side = ""
        for j in range(2, horizon + 1):
            y = m.value_at(y)
            t = m.offset(y)
            if t < lowest:
                lowest, record = t, "right"
            elif t > highest:
                highest, record = t, "left"
            else:
                continue
            if record == side:
                returns[-1] = j
            else:
                returns.append(j)
                side = record
    if returns != expected:
        raise CombinatoricsError(
            f"Closest returns {returns} differ from the convergents {expected} "
            f"of {m.rho_target.spec}."
        )
    return returns
