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


import unittest

import mpmath
import pytest
from lsst.ts import cherry
from lsst.ts.cherry import kernel

PRECISION_BITS = 256


def make_test_map(ell1: str = "2", ell2: str = "3") -> cherry.FlatCircleMap:
    flat = kernel.Arc.from_values("0.4", "0.1", PRECISION_BITS)
    return cherry.make_map(ell1, ell2, flat, "0.3", PRECISION_BITS)


class FlatCircleMapTestCase(unittest.TestCase):
    def setUp(self) -> None:
        self.m = make_test_map()
        self.tolerance = mpmath.mpf("1e-60")

    def test_constant_on_flat(self) -> None:
        for x in ("0.42", "0.45", "0.48"):
            assert self.m.value_at(mpmath.mpf(x)) == self.m.c.value
        assert self.m.value_at(self.m.b) == self.m.c.value
        assert self.m.derivative(mpmath.mpf("0.45")).value == 0
        with pytest.raises(cherry.UndefinedDerivativeError):
            self.m.schwarzian(mpmath.mpf("0.45"))

    def test_off_flat(self) -> None:
        x = kernel.CirclePoint.from_value("0.7", PRECISION_BITS)
        assert self.m.derivative(x).value > 0
        assert self.m.schwarzian(x).value < 0
        assert self.m.eval(x).value == self.m.value_at(x.value)

    def test_lift_eval(self) -> None:
        state = cherry.LiftState.start(
            kernel.CirclePoint.from_value("0.7", PRECISION_BITS)
        )
        for _ in range(5):
            following = self.m.lift_eval(state)
            with mpmath.workprec(PRECISION_BITS):
                expected = self.m.lift(state.base.value) + state.winding
                assert abs(following.lift - expected) < self.tolerance
                assert 0 <= following.base.value < 1
            state = following

    def test_lift_has_degree_one(self) -> None:
        with mpmath.workprec(PRECISION_BITS):
            x = mpmath.mpf("0.7")
            assert abs(self.m.lift(x + 1) - self.m.lift(x) - 1) < self.tolerance
            assert self.m.lift(self.m.b) == self.m.lift_parameter.value
            assert self.m.lift(x) > self.m.lift(mpmath.mpf("0.6"))

    def test_inverse(self) -> None:
        with mpmath.workprec(PRECISION_BITS):
            x = mpmath.mpf("0.7")
            back = self.m.inverse_value(self.m.value_at(x))
            assert kernel.circle_distance(back, x) < self.tolerance
        with pytest.raises(cherry.AmbiguousPreimageError):
            self.m.inverse(self.m.c)

    def test_preimage_arc(self) -> None:
        target = kernel.Arc.from_values("0.5", "0.1", PRECISION_BITS)
        preimage = self.m.preimage_arc(target)
        with mpmath.workprec(PRECISION_BITS):
            left = self.m.value_at(preimage.left.value)
            right = self.m.value_at(preimage.right.value)
            assert kernel.circle_distance(left, target.left.value) < self.tolerance
            assert kernel.circle_distance(right, target.right.value) < self.tolerance
        assert not self.m.flat.contains_interior(preimage.left.value)

    def test_split_preimage(self) -> None:
        around_c = kernel.Arc.from_values("0.25", "0.1", PRECISION_BITS)
        with pytest.raises(cherry.SplitPreimageError):
            self.m.preimage_arc(around_c)

    def test_boundary_exponents(self) -> None:
        orders = [4, 5, 6, 7]
        assert abs(self.m.boundary_exponent("right", orders) - 3) < 0.01
        assert abs(self.m.boundary_exponent("left", orders) - 2) < 0.01
        k_left, k_right = self.m.boundary_coefficients()
        assert k_left.value > 0 and k_right.value > 0
        with pytest.raises(cherry.DomainError):
            self.m.boundary_exponent("middle", orders)

    def test_with_lift_parameter(self) -> None:
        with mpmath.workprec(PRECISION_BITS):
            shifted = self.m.with_lift_parameter(self.m.lift_parameter.value + 1)
            drift = kernel.circle_distance(shifted.c.value, self.m.c.value)
            assert drift < self.tolerance
            x = mpmath.mpf("0.7")
            assert abs(shifted.lift(x) - self.m.lift(x) - 1) < self.tolerance

    def test_bad_exponent(self) -> None:
        with pytest.raises(cherry.DomainError):
            make_test_map(ell1="0.5")
