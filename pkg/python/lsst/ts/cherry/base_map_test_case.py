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

__all__ = ["BaseMapTestCase"]

import logging
import os
import typing
import unittest

import mpmath

from .constants import DEFAULT_PRECISION_BITS, RUN_SLOW_ENV, Command
from .experiment import ExperimentConfig, ExperimentResult, ExperimentRunner
from .kernel import BigReal

CacheKey = typing.Tuple[str, str, str, str, int, int, bool]


class BaseMapTestCase(unittest.TestCase):
    """Test case that tunes maps once per parameter set.

    Results are cached on the class, so tests in one process share every
    tuned map, orbit, series and partition list. Precision escalates the
    same way it does on the command line.

    Attributes
    ----------
    log : `logging.Logger`
        The logger.
    """

    _cache: typing.Dict[CacheKey, ExperimentResult] = {}

    def setUp(self) -> None:
        self.log = logging.getLogger(type(self).__name__)

    def run_map(
        self,
        ell1: str,
        ell2: str,
        rho: str = "golden",
        depth: int = 6,
        precision_bits: int = DEFAULT_PRECISION_BITS,
        flat: str = "0.4,0.1",
        with_partitions: bool = False,
    ) -> ExperimentResult:
        """Tune a map and compute its series, or return the cached result.

        Parameters
        ----------
        ell1, ell2 : `str`
            Exponents as decimal strings.
        rho : `str`, optional
            Rotation number in command line notation.
        depth : `int`, optional
            Number of convergent levels.
        precision_bits : `int`, optional
            Starting precision.
        flat : `str`, optional
            Flat piece as 'left,length'.
        with_partitions : `bool`, optional
            Also build the partitions from level 3.
        """
        key = (ell1, ell2, rho, flat, depth, precision_bits, with_partitions)
        if key not in self._cache:
            config = ExperimentConfig(
                command=Command.DIM if with_partitions else Command.RATIOS,
                l1=ell1,
                l2=ell2,
                rho=rho,
                flat=flat,
                depth=depth,
                prec=precision_bits,
            )
            config.validate()
            runner = ExperimentRunner(config, log=self.log)
            self._cache[key] = runner.run(
                with_series=True, with_partitions=with_partitions
            )
        return self._cache[key]

    def require_slow(self) -> None:
        """Skip unless ``CHERRY_RUN_SLOW`` is set."""
        if not os.environ.get(RUN_SLOW_ENV):
            self.skipTest(f"Set {RUN_SLOW_ENV} to run desk-scale acceptance runs.")

    def assert_close(
        self,
        actual: typing.Any,
        expected: typing.Any,
        rel: float = 0.0,
        abs_tol: float = 0.0,
        precision_bits: int = DEFAULT_PRECISION_BITS,
    ) -> None:
        """Assert |actual - expected| <= max(rel * |expected|, abs_tol).

        Both values may be `BigReal`, `mpmath.mpf`, numbers or decimal
        strings; the comparison runs at ``precision_bits``.
        """
        with mpmath.workprec(precision_bits):
            a = actual.value if isinstance(actual, BigReal) else mpmath.mpf(actual)
            e = (
                expected.value
                if isinstance(expected, BigReal)
                else mpmath.mpf(expected)
            )
            tolerance = max(rel * abs(e), mpmath.mpf(abs_tol))
            difference = abs(a - e)
        assert difference <= tolerance, (
            f"{mpmath.nstr(a, 20)} differs from {mpmath.nstr(e, 20)} "
            f"by {mpmath.nstr(difference, 5)} > {mpmath.nstr(tolerance, 5)}"
        )
