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
    "ExperimentConfig",
    "ExperimentResult",
    "ExperimentRunner",
    "parse_grid",
    "precision_cap_from_env",
    "read_config_file",
    "series_difference",
]

import dataclasses
import decimal
import logging
import os
import pathlib
import typing

import mpmath

from .constants import (
    DEFAULT_N0,
    DEFAULT_PRECISION_BITS,
    DEFAULT_PRECISION_CAP,
    MIN_PRECISION_BITS,
    PRECISION_CAP_ENV,
    Command,
)
from .continued_fraction import ContinuedFraction
from .errors import DepthError, DomainError, PrecisionError, UsageError
from .flat_map import FlatCircleMap
from .geometry import OrbitGeometry
from .kernel import Arc
from .partition import DynamicalPartition, build_partition
from .persistence import load_map
from .ratios import RatioSeries, compute_series
from .rotation import tune_parameter

# Keys accepted in a config file, with the type they are read as.
CONFIG_KEYS: typing.Dict[str, typing.Callable[[str], typing.Any]] = {
    "l1": str,
    "l2": str,
    "flat": str,
    "rho": str,
    "depth": int,
    "prec": int,
    "out": str,
    "map": str,
    "n0": int,
    "first": int,
    "a": int,
    "b": int,
    "epsilon": str,
    "workers": int,
    "escalate": lambda value: value.strip().lower() in ("1", "true", "yes", "on"),
}

DEFAULT_SUFFIXES = {
    Command.TUNE: "json",
    Command.RATIOS: "csv",
    Command.VERIFY: "json",
    Command.CLASSIFY: "json",
    Command.CURVE: "csv",
    Command.DIM: "csv",
}


def precision_cap_from_env() -> int:
    """Escalation ceiling [bits] from ``CHERRY_PREC_CAP``."""
    value = os.environ.get(PRECISION_CAP_ENV, "")
    if not value:
        return DEFAULT_PRECISION_CAP
    try:
        return int(value)
    except ValueError as e:
        raise UsageError(f"{PRECISION_CAP_ENV}={value!r} is not an integer.") from e


def read_config_file(path: str | os.PathLike) -> typing.Dict[str, typing.Any]:
    """Read ``key = value`` lines; ``#`` starts a comment.

    Raises
    ------
    UsageError
        If the file is missing, a line is malformed or a key is unknown.
    """
    path = pathlib.Path(path)
    if not path.is_file():
        raise UsageError(f"Config file {path} does not exist.")
    result: typing.Dict[str, typing.Any] = {}
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lstrip("-")
        if not sep or not key:
            raise UsageError(f"{path}:{number}: expected 'key = value', got {raw!r}.")
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{number}: unknown key {key!r}.")
        try:
            result[key] = CONFIG_KEYS[key](value.strip())
        except ValueError as e:
            raise UsageError(f"{path}:{number}: bad value for {key!r}: {e}") from e
    return result


def parse_grid(text: str) -> typing.List[str]:
    """Expand ``start:stop:step`` into decimal strings, stop included.

    Decimal arithmetic keeps grid points such as 2.0 exact.
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"Grid {text!r} must look like start:stop:step.")
    try:
        start, stop, step = (decimal.Decimal(part) for part in parts)
    except decimal.InvalidOperation as e:
        raise UsageError(f"Grid {text!r} holds a non-number.") from e
    if step <= 0 or stop < start:
        raise UsageError(f"Grid {text!r} must have start <= stop and step > 0.")
    count = int((stop - start) / step) + 1
    return [str(start + i * step) for i in range(count)]


@dataclasses.dataclass
class ExperimentConfig:
    """Validated configuration of one command.

    Numbers that reach the kernel are kept as decimal strings so they are
    read at the working precision.
    """

    command: Command
    l1: str = "2"
    l2: str = "2"
    flat: str = "0.4,0.1"
    rho: str = "golden"
    depth: int = 8
    prec: int = DEFAULT_PRECISION_BITS
    out: str | None = None
    map: str | None = None
    n0: int = DEFAULT_N0
    first: int = 3
    a: int = 1
    b: int = 1
    epsilon: str | None = None
    workers: int = 1
    escalate: bool = True
    precision_cap: int = DEFAULT_PRECISION_CAP

    @classmethod
    def from_sources(
        cls,
        command: Command | str,
        flags: typing.Mapping[str, typing.Any],
        config_path: str | os.PathLike | None = None,
    ) -> "ExperimentConfig":
        """Merge defaults, a config file and explicit flags, then validate.

        Flags set to `None` do not override the config file.
        """
        values: typing.Dict[str, typing.Any] = {}
        if config_path is not None:
            values.update(read_config_file(config_path))
        values.update({key: value for key, value in flags.items() if value is not None})
        unknown = set(values) - set(CONFIG_KEYS)
        if unknown:
            raise UsageError(f"Unknown settings {sorted(unknown)}.")
        try:
            config = cls(
                command=Command(command),
                precision_cap=precision_cap_from_env(),
                **values,
            )
        except ValueError as e:
            raise UsageError(str(e)) from e
        config.validate()
        return config

    def validate(self) -> None:
        """Raise `UsageError` if a setting is out of range."""
        if self.depth < 2:
            raise UsageError(f"depth={self.depth} must be at least 2.")
        if self.prec < MIN_PRECISION_BITS:
            raise UsageError(f"prec={self.prec} must be at least {MIN_PRECISION_BITS}.")
        if self.precision_cap < self.prec:
            raise UsageError(
                f"{PRECISION_CAP_ENV}={self.precision_cap} is below prec={self.prec}."
            )
        if self.workers < 1:
            raise UsageError(f"workers={self.workers} must be positive.")
        if self.command in (Command.RATIOS, Command.VERIFY, Command.DIM) and not (
            3 <= self.first <= self.depth
        ):
            raise UsageError(f"first={self.first} must lie in [3, depth={self.depth}].")
        if self.map is not None and not pathlib.Path(self.map).is_file():
            raise UsageError(f"Map file {self.map} does not exist.")
        try:
            self.cf()
        except DomainError as e:
            raise UsageError(str(e)) from e
        if self.command == Command.CURVE:
            if self.a < 1 or self.b < 1:
                raise UsageError("Curve quotients a and b must be positive.")
            for value in self.ell1_grid():
                self._check_exponent("l1", value)
            return
        self._check_exponent("l1", self.l1)
        self._check_exponent("l2", self.l2)
        _, length = self.flat_values()
        if not 0 < decimal.Decimal(length) < 1:
            raise UsageError(f"Flat length {length} must lie in (0, 1).")
        if self.epsilon is not None:
            self.epsilon_grid()

    @staticmethod
    def _check_exponent(name: str, value: str) -> None:
        try:
            number = decimal.Decimal(value)
        except decimal.InvalidOperation as e:
            raise UsageError(f"{name}={value!r} is not a number.") from e
        if not number >= 1:
            raise UsageError(f"{name}={value} must be at least 1.")

    def cf(self) -> ContinuedFraction:
        return ContinuedFraction.parse(self.rho)

    def flat_values(self) -> typing.Tuple[str, str]:
        parts = [part.strip() for part in self.flat.split(",")]
        if len(parts) != 2:
            raise UsageError(f"flat={self.flat!r} must be 'left,length'.")
        try:
            for part in parts:
                decimal.Decimal(part)
        except decimal.InvalidOperation as e:
            raise UsageError(f"flat={self.flat!r} holds a non-number.") from e
        return parts[0], parts[1]

    def flat_arc(self, precision_bits: int) -> Arc:
        left, length = self.flat_values()
        return Arc.from_values(left, length, precision_bits)

    def ell1_grid(self) -> typing.List[str]:
        if ":" in self.l1:
            return parse_grid(self.l1)
        return [self.l1]

    def epsilon_grid(self) -> typing.List[str]:
        if self.epsilon is None:
            return []
        grid = [part.strip() for part in self.epsilon.split(",") if part.strip()]
        try:
            values = [decimal.Decimal(part) for part in grid]
        except decimal.InvalidOperation as e:
            raise UsageError(f"epsilon={self.epsilon!r} holds a non-number.") from e
        if any(value <= 0 for value in values):
            raise UsageError("Box sizes must be positive.")
        return grid

    def output_path(self) -> pathlib.Path:
        """The ``out`` flag, or ``<command>.<ext>`` in the working directory."""
        if self.out is not None:
            return pathlib.Path(self.out)
        return pathlib.Path(f"{self.command.value}.{DEFAULT_SUFFIXES[self.command]}")

    def to_dict(self) -> typing.Dict[str, typing.Any]:
        result = dataclasses.asdict(self)
        result["command"] = self.command.value
        return result


@dataclasses.dataclass
class ExperimentResult:
    """Everything one command computed from a tuned map.

    Attributes
    ----------
    circle_map : `FlatCircleMap`
        The tuned map.
    geometry : `OrbitGeometry` or `None`
        Orbit data, if requested.
    series : `RatioSeries` or `None`
        Ratio series, if requested.
    partitions : `list` [`DynamicalPartition`]
        Dynamical partitions from ``first`` to ``depth``.
    precision_bits : `int`
        Precision the result was computed at.
    escalations : `list` [`dict`]
        One entry per rerun at higher precision.
    """

    circle_map: FlatCircleMap
    geometry: OrbitGeometry | None = None
    series: RatioSeries | None = None
    partitions: typing.List[DynamicalPartition] = dataclasses.field(
        default_factory=list
    )
    precision_bits: int = DEFAULT_PRECISION_BITS
    escalations: typing.List[typing.Dict[str, typing.Any]] = dataclasses.field(
        default_factory=list
    )

    def precision_audit(self, requested: int, cap: int) -> typing.Dict[str, typing.Any]:
        audit: typing.Dict[str, typing.Any] = {
            "requested_bits": requested,
            "used_bits": self.precision_bits,
            "cap_bits": cap,
            "tuned_depth": self.circle_map.tuned_depth,
            "escalations": self.escalations,
        }
        if self.geometry is not None:
            backward = self.geometry.backward
            audit["max_residual"] = mpmath.nstr(backward.max_residual, 5)
            audit["smallest_length"] = mpmath.nstr(backward.smallest_length, 5)
        return audit


class ExperimentRunner:
    """Build the objects a command needs, escalating precision on demand.

    Parameters
    ----------
    config : `ExperimentConfig`
        Validated configuration.
    log : `logging.Logger`, optional
        The logger to create a child logger for.

    Notes
    -----
    A run that raises an escalatable `PrecisionError`, or whose smallest
    preimage is shorter than 2^(-P/4), is repeated at twice the precision
    until ``config.precision_cap`` is reached. The last tuned lift
    parameter seeds the next tuning.
    """

    def __init__(
        self, config: ExperimentConfig, log: logging.Logger | None = None
    ) -> None:
        self.config = config
        if log is None:
            self.log = logging.getLogger(type(self).__name__)
        else:
            self.log = log.getChild(type(self).__name__)
        self.last_map: FlatCircleMap | None = None

    def tuned_map(
        self, precision_bits: int, seed: FlatCircleMap | None = None
    ) -> FlatCircleMap:
        """Load or tune the map at ``precision_bits``.

        A ``seed`` map is retuned at ``precision_bits``, starting from its
        lift parameter. A map file named by ``config.map`` is used as is.

        Raises
        ------
        DepthError
            If a loaded map is tuned to a lower depth than requested.
        PrecisionError
            If a loaded map carries fewer bits than requested. This error
            is not escalated.
        """
        config = self.config
        if seed is None and config.map is not None:
            seed = load_map(config.map)
            if seed.tuned_depth < config.depth:
                raise DepthError(
                    f"Map {config.map} is tuned to depth {seed.tuned_depth}; "
                    f"depth {config.depth} was requested."
                )
            if seed.precision_bits < precision_bits:
                raise PrecisionError(
                    f"Map {config.map} carries {seed.precision_bits} bits; "
                    f"{precision_bits} were requested.",
                    escalate=False,
                )
            return seed
        if seed is not None:
            if seed.rho_target is None:
                raise DepthError("The map carries no target rotation number.")
            return tune_parameter(
                seed.ell1,
                seed.ell2,
                seed.flat,
                seed.rho_target,
                seed.tuned_depth,
                precision_bits,
                initial_lift=seed.lift_parameter.value,
                log=self.log,
            )
        self.log.info(
            f"Tuning ({config.l1}, {config.l2}) to {config.rho} "
            f"at depth {config.depth}, {precision_bits} bits."
        )
        return tune_parameter(
            config.l1,
            config.l2,
            config.flat_arc(precision_bits),
            config.cf(),
            config.depth,
            precision_bits,
            log=self.log,
        )

    def _run_at(
        self,
        precision_bits: int,
        seed: FlatCircleMap | None,
        with_series: bool,
        with_partitions: bool,
    ) -> ExperimentResult:
        m = self.tuned_map(precision_bits, seed)
        self.last_map = m
        result = ExperimentResult(circle_map=m, precision_bits=m.precision_bits)
        if not (with_series or with_partitions):
            return result
        depth = self.config.depth
        geometry = OrbitGeometry.build(m, depth, log=self.log)
        if geometry.backward.needs_escalation():
            raise PrecisionError(
                f"Smallest preimage {mpmath.nstr(geometry.backward.smallest_length, 5)}"
                f" is below 2^-{m.precision_bits // 4}.",
                level=depth,
            )
        result.geometry = geometry
        if with_series:
            result.series = compute_series(
                geometry, first=self.config.first, last=depth, log=self.log
            )
        if with_partitions:
            result.partitions = [
                build_partition(m, geometry.backward, n)
                for n in range(self.config.first, depth + 1)
            ]
        return result

    def run(
        self, with_series: bool = True, with_partitions: bool = False
    ) -> ExperimentResult:
        """Compute the requested stages.

        Raises
        ------
        PrecisionError
            If the precision cap is reached or escalation is disabled.
        """
        precision_bits = self.config.prec
        seed: FlatCircleMap | None = None
        escalations: typing.List[typing.Dict[str, typing.Any]] = []
        while True:
            try:
                result = self._run_at(
                    precision_bits, seed, with_series, with_partitions
                )
            except PrecisionError as e:
                next_bits = 2 * precision_bits
                if (
                    not (self.config.escalate and e.escalate)
                    or next_bits > self.config.precision_cap
                ):
                    self.log.error(f"Giving up at {precision_bits} bits: {e}")
                    raise
                self.log.info(f"Escalating {precision_bits} -> {next_bits} bits: {e}")
                escalations.append(
                    {"from_bits": precision_bits, "level": e.level, "reason": str(e)}
                )
                precision_bits = next_bits
                seed = self.last_map
                continue
            result.escalations = escalations
            return result

    def audit_precision(self, result: ExperimentResult) -> typing.Dict[str, typing.Any]:
        """Recompute the ratio series at twice the precision of ``result``.

        The rerun starts from the tuned lift parameter of ``result``. The
        two series must agree to half the bits of ``result``.

        Parameters
        ----------
        result : `ExperimentResult`
            A run with a ratio series.

        Returns
        -------
        audit : `dict`
            ``bits``, ``doubled_bits``, ``difference``, ``tolerance`` and
            ``passed``.

        Raises
        ------
        PrecisionError
            If twice the precision is above ``config.precision_cap``, or if
            the rerun raises it.
        """
        if result.series is None:
            raise DepthError("The precision audit needs a ratio series.")
        bits = result.precision_bits
        doubled_bits = 2 * bits
        if doubled_bits > self.config.precision_cap:
            raise PrecisionError(
                f"Auditing {bits} bits needs {doubled_bits} bits, above the cap "
                f"of {self.config.precision_cap}.",
                escalate=False,
            )
        self.log.info(f"Auditing the {bits} bit series at {doubled_bits} bits.")
        rerun = self._run_at(
            doubled_bits, result.circle_map, with_series=True, with_partitions=False
        )
        assert rerun.series is not None
        difference = series_difference(result.series, rerun.series)
        tolerance = mpmath.ldexp(1, -(bits // 2))
        passed = bool(difference <= tolerance)
        if not passed:
            self.log.warning(
                f"alpha_n moved by {mpmath.nstr(difference, 5)} between {bits} "
                f"and {doubled_bits} bits; allowed {mpmath.nstr(tolerance, 5)}."
            )
        return {
            "bits": bits,
            "doubled_bits": doubled_bits,
            "difference": mpmath.nstr(difference, 5),
            "tolerance": mpmath.nstr(tolerance, 5),
            "passed": passed,
        }


def series_difference(first: RatioSeries, second: RatioSeries) -> mpmath.mpf:
    """Largest relative difference of alpha_n over the common levels.

    Used to audit a run against a rerun at higher precision.
    """
    levels = [level.n for level in first if level.n in second]
    if not levels:
        raise DepthError("The series share no level.")
    precision_bits = min(first.precision_bits, second.precision_bits)
    with mpmath.workprec(precision_bits):
        return max(
            abs(first[n].alpha - second[n].alpha) / abs(second[n].alpha)
            for n in levels
        )
