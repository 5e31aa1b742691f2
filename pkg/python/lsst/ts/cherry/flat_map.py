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

__all__ = ["FlatCircleMap", "LiftState", "make_map"]

import dataclasses
import functools
import typing

import mpmath
import numpy as np

from .continued_fraction import ContinuedFraction
from .errors import (
    AmbiguousPreimageError,
    DomainError,
    PrecisionError,
    SplitPreimageError,
    UndefinedDerivativeError,
)
from .kernel import (
    Arc,
    BigReal,
    CirclePoint,
    RealLike,
    as_mpf,
    inverse_regularized_beta,
    reduce_mod1,
    regularized_beta,
    regularized_beta_complement,
)


@dataclasses.dataclass(frozen=True)
class LiftState:
    """Point of the lifted orbit, split into a circle part and wraps.

    Parameters
    ----------
    base : `BigReal`
        Circle coordinate in [0, 1).
    winding : `int`
        Number of times the orbit has wrapped around the circle.
    """

    base: BigReal
    winding: int = 0

    @classmethod
    def start(cls, point: CirclePoint) -> "LiftState":
        return cls(point.rep, 0)

    @property
    def lift(self) -> mpmath.mpf:
        """Lifted coordinate winding + base."""
        with mpmath.workprec(self.base.precision_bits):
            return self.winding + self.base.value


@dataclasses.dataclass(frozen=True)
class FlatCircleMap:
    """Degree one circle map that is constant on an arc.

    Off the flat piece U = [a, b] the map is f(x) = c + I_s(ell2, ell1)
    with s = ((x - b) mod 1) / (1 - |U|), so f behaves like (x - b)^ell2
    to the right of U and like (a - x)^ell1 to its left.

    Parameters
    ----------
    flat : `Arc`
        The flat piece U.
    ell1 : `BigReal`
        Exponent at the left endpoint a.
    ell2 : `BigReal`
        Exponent at the right endpoint b.
    c : `CirclePoint`
        The value f(U).
    precision_bits : `int`
        Working precision of every evaluation.
    lift_parameter : `BigReal`
        F(b) for the lift F; lies in [a, a + 1) with a lifted to b - |U|.
    rho_target : `ContinuedFraction` or `None`
        Rotation number the parameter was tuned to, if any.
    tuned_depth : `int`
        Number of convergent levels the tuning enforced.

    Raises
    ------
    DomainError
        If an exponent is below 1 or |U| is not in (0, 1).
    """

    flat: Arc
    ell1: BigReal
    ell2: BigReal
    c: CirclePoint
    precision_bits: int
    lift_parameter: BigReal
    rho_target: ContinuedFraction | None = None
    tuned_depth: int = 0

    def __post_init__(self) -> None:
        if self.ell1.value < 1 or self.ell2.value < 1:
            raise DomainError(
                f"Exponents ell1={self.ell1}, ell2={self.ell2} must be at least 1."
            )
        if not 0 < self.flat.length.value < 1:
            raise DomainError(f"|U|={self.flat.length} must lie in (0, 1).")
        if self.precision_bits < 1:
            raise DomainError(f"precision_bits={self.precision_bits} must be positive.")

    @functools.cached_property
    def b(self) -> mpmath.mpf:
        """Right endpoint r(U)."""
        return self.flat.right.value

    @functools.cached_property
    def a(self) -> mpmath.mpf:
        """Left endpoint l(U)."""
        return self.flat.left.value

    @functools.cached_property
    def span(self) -> mpmath.mpf:
        """Length 1 - |U| of the complement arc."""
        with mpmath.workprec(self.precision_bits):
            return 1 - self.flat.length.value

    @functools.cached_property
    def _beta(self) -> mpmath.mpf:
        with mpmath.workprec(self.precision_bits):
            return mpmath.beta(self.ell2.value, self.ell1.value)

    def with_lift_parameter(self, value: mpmath.mpf) -> "FlatCircleMap":
        """Return a copy with another lift parameter F(b)."""
        with mpmath.workprec(self.precision_bits):
            return dataclasses.replace(
                self,
                lift_parameter=BigReal(value, self.precision_bits),
                c=CirclePoint(BigReal(reduce_mod1(value), self.precision_bits)),
            )

    def offset(self, x: mpmath.mpf) -> mpmath.mpf:
        """(x - b) mod 1; the complement of U is (0, 1 - |U|)."""
        return reduce_mod1(x - self.b)

    def _on_flat(self, t: mpmath.mpf) -> bool:
        return bool(t == 0 or t >= self.span)

    def _profile(self, t: mpmath.mpf) -> mpmath.mpf:
        if t >= self.span:
            return mpmath.mpf(1)
        return regularized_beta(t / self.span, self.ell2.value, self.ell1.value)

    def value_at(self, x: mpmath.mpf) -> mpmath.mpf:
        """Circle value f(x) for a raw coordinate; exactly c on U."""
        with mpmath.workprec(self.precision_bits):
            t = self.offset(x)
            if self._on_flat(t):
                return self.c.value
            return reduce_mod1(self.c.value + self._profile(t))

    def eval(self, x: CirclePoint) -> CirclePoint:
        """Evaluate f at a circle point."""
        with mpmath.workprec(self.precision_bits):
            on_flat = self._on_flat(self.offset(x.value))
        if on_flat:
            return self.c
        return CirclePoint(BigReal(self.value_at(x.value), self.precision_bits))

    def lift(self, x: mpmath.mpf) -> mpmath.mpf:
        """Evaluate the lift F at a real coordinate."""
        with mpmath.workprec(self.precision_bits):
            shifted = x - self.b
            k0 = mpmath.floor(shifted)
            return k0 + self.lift_parameter.value + self._profile(shifted - k0)

    def lift_eval(self, state: LiftState) -> LiftState:
        """Apply the lift once, keeping the wraps as an integer."""
        with mpmath.workprec(self.precision_bits):
            image = self.lift(state.base.value)
            wraps = mpmath.floor(image)
            return LiftState(
                BigReal(image - wraps, self.precision_bits),
                state.winding + int(wraps),
            )

    def derivative(self, x: CirclePoint | mpmath.mpf) -> BigReal:
        """Df(x); zero on the closed flat piece."""
        value = x.value if isinstance(x, CirclePoint) else x
        with mpmath.workprec(self.precision_bits):
            t = self.offset(value)
            if self._on_flat(t):
                return BigReal(0, self.precision_bits)
            s = t / self.span
            density = s ** (self.ell2.value - 1) * (1 - s) ** (self.ell1.value - 1)
            return BigReal(density / (self._beta * self.span), self.precision_bits)

    def schwarzian(self, x: CirclePoint | mpmath.mpf) -> BigReal:
        """Schwarzian derivative Sf(x).

        Raises
        ------
        UndefinedDerivativeError
            If ``x`` lies on the closed flat piece.
        """
        value = x.value if isinstance(x, CirclePoint) else x
        with mpmath.workprec(self.precision_bits):
            t = self.offset(value)
            if self._on_flat(t):
                raise UndefinedDerivativeError(
                    f"The Schwarzian is undefined at {value} on the flat piece."
                )
            s = t / self.span
            left, right = self.ell2.value - 1, self.ell1.value - 1
            h = left / s - right / (1 - s)
            h_prime = -left / s**2 - right / (1 - s) ** 2
            return BigReal((h_prime - h**2 / 2) / self.span**2, self.precision_bits)

    def inverse_value(self, y: mpmath.mpf) -> mpmath.mpf:
        """Raw coordinate version of `inverse`."""
        with mpmath.workprec(self.precision_bits):
            u = reduce_mod1(y - self.c.value)
            if u == 0:
                raise AmbiguousPreimageError(
                    f"{y} is the value of the flat piece; its preimage is U."
                )
            s = inverse_regularized_beta(u, self.ell2.value, self.ell1.value)
            return reduce_mod1(self.b + s * self.span)

    def inverse(self, y: CirclePoint) -> CirclePoint:
        """Return the unique point off U that f maps to ``y``.

        Raises
        ------
        AmbiguousPreimageError
            If ``y`` equals c.
        """
        return CirclePoint(BigReal(self.inverse_value(y.value), self.precision_bits))

    def preimage_arc(self, arc: Arc) -> Arc:
        """Pull an arc back by one step.

        Parameters
        ----------
        arc : `Arc`
            Arc J that does not contain c in its interior.

        Returns
        -------
        `Arc`
            The arc of points off U mapped into J.

        Raises
        ------
        SplitPreimageError
            If c lies in the interior of J.
        PrecisionError
            If the pulled back arc is not resolved at the working precision.
        """
        with mpmath.workprec(self.precision_bits):
            t_left = reduce_mod1(arc.left.value - self.c.value)
            t_right = t_left + arc.length.value
            if t_left > 0 and t_right > 1:
                raise SplitPreimageError(
                    f"c={self.c} lies inside the arc starting at {arc.left} "
                    f"of length {arc.length}."
                )
            p, q = self.ell2.value, self.ell1.value
            s_left = inverse_regularized_beta(t_left, p, q)
            if t_right >= 1:
                s_right = mpmath.mpf(1)
            else:
                s_right = inverse_regularized_beta(t_right, p, q)
            length = (s_right - s_left) * self.span
            if length <= 0:
                raise PrecisionError(
                    f"Preimage of the arc starting at {arc.left} has length {length}."
                )
            left = reduce_mod1(self.b + s_left * self.span)
            return Arc(
                CirclePoint(BigReal(left, self.precision_bits)),
                BigReal(length, self.precision_bits),
            )

    def boundary_coefficients(self) -> typing.Tuple[BigReal, BigReal]:
        """Leading coefficients (k_left, k_right) of the power laws at a and b.

        Near b, f(y) - c ~ k_right (y - b)^ell2; near a,
        c - f(y) ~ k_left (a - y)^ell1.
        """
        with mpmath.workprec(self.precision_bits):
            ell1, ell2 = self.ell1.value, self.ell2.value
            k_right = 1 / (ell2 * self._beta * self.span**ell2)
            k_left = 1 / (ell1 * self._beta * self.span**ell1)
            return (
                BigReal(k_left, self.precision_bits),
                BigReal(k_right, self.precision_bits),
            )

    def boundary_exponent(self, side: str, orders: typing.Sequence[int]) -> float:
        """Fit the power law exponent at one endpoint of U.

        Parameters
        ----------
        side : `str`
            "left" for a, "right" for b.
        orders : `Sequence` [`int`]
            Offsets 10^-k from the endpoint are sampled for these k.

        Returns
        -------
        `float`
            Slope of log|f(y) - c| against log|y - endpoint|.
        """
        if side not in ("left", "right"):
            raise DomainError(f"side={side!r} must be 'left' or 'right'.")
        log_offsets, log_values = [], []
        with mpmath.workprec(self.precision_bits):
            for k in orders:
                delta = mpmath.mpf(10) ** (-k)
                if side == "right":
                    distance = regularized_beta(
                        delta / self.span, self.ell2.value, self.ell1.value
                    )
                else:
                    distance = regularized_beta_complement(
                        1 - delta / self.span, self.ell2.value, self.ell1.value
                    )
                log_offsets.append(float(mpmath.log(delta)))
                log_values.append(float(mpmath.log(distance)))
        slope, _ = np.polyfit(log_offsets, log_values, 1)
        return float(slope)


def make_map(
    ell1: RealLike,
    ell2: RealLike,
    flat: Arc,
    c: CirclePoint | RealLike,
    precision_bits: int,
    rho_target: ContinuedFraction | None = None,
    tuned_depth: int = 0,
) -> FlatCircleMap:
    """Construct a map of the flat family.

    Parameters
    ----------
    ell1, ell2 : `BigReal` or number
        Exponents at the left and right endpoint of U; both at least 1.
    flat : `Arc`
        The flat piece U.
    c : `CirclePoint` or number
        The value f(U).
    precision_bits : `int`
        Working precision.
    rho_target : `ContinuedFraction`, optional
        Target rotation number, if the parameter has been tuned.
    tuned_depth : `int`, optional
        Tuned depth.

    Returns
    -------
    `FlatCircleMap`
        The map.

    Raises
    ------
    DomainError
        If an exponent is below 1 or |U| is not in (0, 1).
    """
    with mpmath.workprec(precision_bits):
        ell1_real = BigReal(as_mpf(ell1), precision_bits)
        ell2_real = BigReal(as_mpf(ell2), precision_bits)
        if ell1_real.value < 1 or ell2_real.value < 1:
            raise DomainError(f"Exponents ell1={ell1}, ell2={ell2} must be at least 1.")
        flat = Arc(
            CirclePoint(flat.left.rep.with_precision(precision_bits)),
            flat.length.with_precision(precision_bits),
        )
        if isinstance(c, CirclePoint):
            point = CirclePoint(c.rep.with_precision(precision_bits))
        else:
            point = CirclePoint.from_value(c, precision_bits)
        a_lift = flat.right.value - flat.length.value
        lift_parameter = a_lift + reduce_mod1(point.value - a_lift)
        return FlatCircleMap(
            flat=flat,
            ell1=ell1_real,
            ell2=ell2_real,
            c=point,
            precision_bits=precision_bits,
            lift_parameter=BigReal(lift_parameter, precision_bits),
            rho_target=rho_target,
            tuned_depth=tuned_depth,
        )
