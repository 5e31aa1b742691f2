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

__all__ = ["CommandHandler", "build_parser", "run_cherry"]

import argparse
import asyncio
import concurrent.futures
import functools
import json
import logging
import sys
import time
import typing

import mpmath

from . import __version__
from .classify import CurveTrace, classify_point, curve_point
from .constants import Command, ExitCode, Key
from .continued_fraction import convergents
from .dimension import DIMENSION_COLUMNS, box_count, dimension_run
from .errors import CherryError, UsageError
from .experiment import ExperimentConfig, ExperimentResult, ExperimentRunner
from .geometry import decay_check
from .inequalities import run_verification_suite
from .kernel import BigReal
from .partition import refinement_check
from .persistence import RunManifest, map_to_dict, save_map, write_csv, write_json
from .ratios import SERIES_COLUMNS
from .rotation import closest_returns

ReplyCallback = typing.Callable[[typing.Dict[str, typing.Any]], typing.Awaitable[None]]
CommandOutcome = typing.Tuple[ExitCode, typing.Dict[str, typing.Any]]


class CommandHandler:
    """Run commands and send replies.

    Parameters
    ----------
    callback : `Callable`
        Coroutine that receives one reply per command. This can be a
        coroutine that prints the reply or a coroutine in a test class that
        verifies the command has been handled correctly.
    log : `logging.Logger`, optional
        The logger to create a child logger for.

    The commands that can be handled are:

        tune: Tune a map to a rotation number and write its descriptor.
        ratios: Write the scaling ratio series of a tuned map as CSV.
        verify: Run the inequality suite and write the report as JSON.
        classify: Classify the geometry of a (rotation number, exponents)
        point.
        curve: Trace the curve lambda_u = 1 for bi-periodic quotients.
        dim: Estimate the dimension of the non-wandering set per level.

    Each reply holds the command, the exit code and its name, the output
    path and a command specific payload. A manifest is written next to
    every output.
    """

    def __init__(
        self, callback: ReplyCallback, log: logging.Logger | None = None
    ) -> None:
        self._callback = callback
        if log is None:
            self.log = logging.getLogger(type(self).__name__)
        else:
            self.log = log.getChild(type(self).__name__)
        self.dispatch_dict: typing.Dict[
            Command,
            typing.Callable[[ExperimentConfig], typing.Awaitable[CommandOutcome]],
        ] = {
            Command.TUNE: self.cmd_tune,
            Command.RATIOS: self.cmd_ratios,
            Command.VERIFY: self.cmd_verify,
            Command.CLASSIFY: self.cmd_classify,
            Command.CURVE: self.cmd_curve,
            Command.DIM: self.cmd_dim,
        }

    async def handle_command(self, config: ExperimentConfig) -> ExitCode:
        """Run one command, write its manifest and send the reply.

        Parameters
        ----------
        config : `ExperimentConfig`
            Validated configuration.

        Returns
        -------
        `ExitCode`
            The exit code of the command.
        """
        start = time.monotonic()
        self.precision: typing.Dict[str, typing.Any] = {
            "requested_bits": config.prec,
            "cap_bits": config.precision_cap,
        }
        self.checks: typing.Dict[str, typing.Any] = {}
        output = config.output_path()
        message = ""
        payload: typing.Dict[str, typing.Any] = {}
        try:
            exit_code, payload = await self.dispatch_dict[config.command](config)
        except CherryError as e:
            self.log.exception(f"{config.command.value} failed.")
            exit_code, message = e.exit_code, str(e)
        except Exception as e:
            self.log.exception(f"{config.command.value} failed unexpectedly.")
            exit_code, message = ExitCode.FAILURE, str(e)
        manifest = RunManifest(
            tool_version=__version__,
            config=config.to_dict(),
            precision=self.precision,
            wall_time=time.monotonic() - start,
            checks=self.checks,
            exit_code=int(exit_code),
        )
        manifest.save(output)
        await self._callback(
            {
                Key.COMMAND: config.command.value,
                Key.RESPONSE: exit_code.name,
                Key.EXIT_CODE: int(exit_code),
                Key.OUTPUT: str(output),
                Key.MESSAGE: message,
                Key.PAYLOAD: payload,
            }
        )
        return exit_code

    async def _run_in_executor(
        self, func: typing.Callable[..., typing.Any], *args: typing.Any
    ) -> typing.Any:
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(None, func, *args)

    async def _experiment(
        self, config: ExperimentConfig, with_series: bool, with_partitions: bool
    ) -> ExperimentResult:
        runner = ExperimentRunner(config, log=self.log)
        result = await self._run_in_executor(
            functools.partial(
                runner.run, with_series=with_series, with_partitions=with_partitions
            )
        )
        self.precision = result.precision_audit(config.prec, config.precision_cap)
        return result

    @staticmethod
    def _with_provenance(
        rows: typing.Iterable[typing.List[str]], precision_bits: int, tuned_depth: int
    ) -> typing.List[typing.List[str]]:
        return [row + [str(precision_bits), str(tuned_depth)] for row in rows]

    async def cmd_tune(self, config: ExperimentConfig) -> CommandOutcome:
        """Tune a map and check its closest returns."""
        result = await self._experiment(
            config, with_series=False, with_partitions=False
        )
        m = result.circle_map
        returns = await self._run_in_executor(closest_returns, m, config.depth)
        assert m.rho_target is not None
        expected = convergents(m.rho_target, config.depth).denominators(config.depth)
        save_map(config.output_path(), m)
        k_left, k_right = m.boundary_coefficients()
        passed = int(returns == expected)
        self.checks = {"closest_returns": {"passed": passed, "failed": 1 - passed}}
        return ExitCode.OK if passed else ExitCode.FAILURE, {
            "closest_returns": returns,
            "expected": expected,
            "lift_parameter": m.lift_parameter.to_decimal(),
            "k_ratio": mpmath.nstr(k_left.value / k_right.value, 15),
        }

    async def cmd_ratios(self, config: ExperimentConfig) -> CommandOutcome:
        """Write the ratio series as CSV."""
        result = await self._experiment(config, with_series=True, with_partitions=False)
        assert result.series is not None
        write_csv(
            config.output_path(),
            SERIES_COLUMNS + ("precision_bits", "tuned_depth"),
            self._with_provenance(
                result.series.rows(),
                result.precision_bits,
                result.circle_map.tuned_depth,
            ),
        )
        return ExitCode.OK, {"levels": [result.series.first, result.series.last]}

    async def cmd_verify(self, config: ExperimentConfig) -> CommandOutcome:
        """Run the inequality suite and the precision audit.

        Exit 0 iff no check fails hard and the rerun at twice the precision
        agrees to half the bits; a failed audit exits with PRECISION.
        """
        result = await self._experiment(config, with_series=True, with_partitions=True)
        assert result.series is not None and result.geometry is not None
        report = await self._run_in_executor(
            functools.partial(
                run_verification_suite,
                result.series,
                result.geometry,
                config.n0,
                log=self.log,
            )
        )
        refinements = [
            refinement_check(coarse, fine)
            for coarse, fine in zip(result.partitions, result.partitions[1:])
        ]
        decay = decay_check(result.geometry, first=config.first)
        runner = ExperimentRunner(config, log=self.log)
        audit = await self._run_in_executor(runner.audit_precision, result)
        self.precision["audit"] = audit
        self.checks = report.counts()
        self.checks["refinement"] = {
            "passed": sum(r.passed for r in refinements),
            "failed": sum(not r.passed for r in refinements),
        }
        self.checks["precision_audit"] = {
            "passed": int(audit["passed"]),
            "failed": int(not audit["passed"]),
        }
        passed = (
            report.passed and all(r.passed for r in refinements) and audit["passed"]
        )
        write_json(
            config.output_path(),
            {
                "map": map_to_dict(result.circle_map),
                "precision_bits": result.precision_bits,
                "n0": config.n0,
                "records": report.to_dicts(),
                "counts": self.checks,
                "refinement": [
                    {"level": r.level, "violations": list(r.violations)}
                    for r in refinements
                ],
                "decay": {
                    "levels": list(decay.levels),
                    "slope": decay.slope,
                    "strictly_decreasing": decay.strictly_decreasing,
                },
                "precision_audit": audit,
                "passed": passed,
            },
        )
        for record in report.hard_failures:
            self.log.warning(
                f"{record.check} failed at level {record.level}: {record.note}"
            )
        if not audit["passed"]:
            exit_code = ExitCode.PRECISION
        else:
            exit_code = ExitCode.OK if passed else ExitCode.FAILURE
        return exit_code, {
            "passed": passed,
            "hard_failures": len(report.hard_failures),
            "precision_audit": audit["passed"],
        }

    async def cmd_classify(self, config: ExperimentConfig) -> CommandOutcome:
        """Classify from the flags, or from a map file with series evidence."""
        if config.map is None:
            verdict = await self._run_in_executor(
                functools.partial(
                    classify_point,
                    config.cf(),
                    config.l1,
                    config.l2,
                    precision_bits=config.prec,
                )
            )
            precision_bits = config.prec
        else:
            result = await self._experiment(
                config, with_series=True, with_partitions=False
            )
            m = result.circle_map
            assert m.rho_target is not None
            verdict = await self._run_in_executor(
                functools.partial(
                    classify_point,
                    m.rho_target,
                    m.ell1,
                    m.ell2,
                    series=result.series,
                    precision_bits=result.precision_bits,
                )
            )
            precision_bits = result.precision_bits
        data = verdict.to_dict(precision_bits)
        data["precision_bits"] = precision_bits
        write_json(config.output_path(), data)
        return ExitCode.OK, data

    async def cmd_curve(self, config: ExperimentConfig) -> CommandOutcome:
        """Trace lambda_u = 1 over the l1 grid.

        Points run in a process pool when ``workers`` > 1; in one process
        they run one at a time, since mpmath precision is global.
        """
        grid = config.ell1_grid()
        loop = asyncio.get_running_loop()
        if config.workers > 1:
            with concurrent.futures.ProcessPoolExecutor(config.workers) as pool:
                points = await asyncio.gather(
                    *[
                        loop.run_in_executor(
                            pool, curve_point, config.a, config.b, ell1, config.prec
                        )
                        for ell1 in grid
                    ]
                )
        else:
            points = []
            for ell1 in grid:
                points.append(
                    await self._run_in_executor(
                        curve_point, config.a, config.b, ell1, config.prec
                    )
                )
        trace = CurveTrace(
            a=config.a, b=config.b, points=tuple(points), precision_bits=config.prec
        )
        write_csv(
            config.output_path(),
            ("ell1", "ell2", "lambda_u_residual", "precision_bits"),
            [row + [str(config.prec)] for row in trace.rows()],
        )
        self.checks = {
            "curve_monotone": {
                "passed": int(trace.monotone),
                "failed": int(not trace.monotone),
            }
        }
        return ExitCode.OK, {
            "solved": len(trace.solved),
            "points": len(trace.points),
            "monotone": trace.monotone,
        }

    async def cmd_dim(self, config: ExperimentConfig) -> CommandOutcome:
        """Write per level dimension estimates and their summary."""
        result = await self._experiment(config, with_series=False, with_partitions=True)
        m = result.circle_map
        assert m.rho_target is not None
        run = await self._run_in_executor(
            dimension_run, result.partitions, m.rho_target, m.ell1.value, m.ell2.value
        )
        output = config.output_path()
        write_csv(
            output,
            DIMENSION_COLUMNS + ("precision_bits", "tuned_depth"),
            self._with_provenance(run.rows(), run.precision_bits, m.tuned_depth),
        )
        summary = run.summary()
        summary["precision_bits"] = run.precision_bits
        summary["tuned_depth"] = m.tuned_depth
        epsilons = config.epsilon_grid()
        if epsilons:
            boxes = await self._run_in_executor(
                box_count, result.partitions[-1], epsilons
            )
            summary["box_counting"] = {
                "level": result.partitions[-1].level,
                "slope": boxes.slope,
                "counts": [
                    [BigReal(epsilon, run.precision_bits).to_decimal(), count]
                    for epsilon, count in boxes.counts
                ],
            }
        write_json(output.with_name(output.name + ".summary.json"), summary)
        return ExitCode.OK, summary


class _ArgumentParser(argparse.ArgumentParser):
    """Argument parser that reports bad flags as a `UsageError`."""

    def error(self, message: str) -> typing.NoReturn:
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    """Command line parser of ``run_cherry``.

    Every flag defaults to `None` so a ``--config`` file can supply it.
    """
    parser = _ArgumentParser(
        prog="run_cherry",
        description="Numerical lab for circle maps with a flat interval.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in Command:
        sub = subparsers.add_parser(command.value)
        sub.add_argument("--config", help="File of 'key = value' settings.")
        sub.add_argument("--verbose", action="store_true", help="Log at DEBUG.")
        sub.add_argument("--out", help="Output path.")
        sub.add_argument("--prec", type=int, help="Working precision [bits].")
        sub.add_argument("--rho", help="Rotation number: golden, [a,b]rep, [a1,...].")
        sub.add_argument("--l1", help="Left exponent; start:stop:step for curve.")
        if command == Command.CURVE:
            sub.add_argument("--a", type=int, help="Even index quotient.")
            sub.add_argument("--b", type=int, help="Odd index quotient.")
            sub.add_argument("--workers", type=int, help="Worker processes.")
            continue
        sub.add_argument("--l2", help="Right exponent.")
        if command == Command.CLASSIFY:
            sub.add_argument("--map", help="Tuned map file for series evidence.")
            sub.add_argument("--depth", type=int, help="Depth of the evidence.")
            continue
        sub.add_argument("--flat", help="Flat piece as 'left,length'.")
        sub.add_argument("--depth", type=int, help="Number of convergent levels.")
        sub.add_argument(
            "--no-escalate",
            dest="escalate",
            action="store_const",
            const=False,
            help="Fail instead of doubling the precision.",
        )
        if command == Command.TUNE:
            continue
        sub.add_argument("--map", help="Tuned map file.")
        sub.add_argument("--first", type=int, help="First level.")
        if command == Command.VERIFY:
            sub.add_argument("--n0", type=int, help="First level checked hard.")
        if command == Command.DIM:
            sub.add_argument("--epsilon", help="Box sizes, comma separated.")
    return parser


def run_cherry() -> None:
    """Main method of the ``run_cherry`` command line tool."""
    sys.exit(int(asyncio.run(_run_cherry_impl(sys.argv[1:]))))


async def _print_reply(reply: typing.Dict[str, typing.Any]) -> None:
    print(json.dumps(reply[Key.PAYLOAD], indent=2, sort_keys=True))


async def _run_cherry_impl(argv: typing.Sequence[str]) -> ExitCode:
    """Async implementation of run_cherry."""
    log = logging.getLogger()
    try:
        args = vars(build_parser().parse_args(argv))
        verbose = args.pop("verbose", False)
        logging.basicConfig(
            format="%(asctime)s:%(levelname)s:%(name)s:%(message)s",
            level=logging.DEBUG if verbose else logging.INFO,
        )
        command = args.pop("command")
        config_path = args.pop("config", None)
        config = ExperimentConfig.from_sources(command, args, config_path)
    except UsageError as e:
        logging.basicConfig(
            format="%(asctime)s:%(levelname)s:%(name)s:%(message)s",
            level=logging.INFO,
        )
        log.error(f"Usage error: {e}")
        return ExitCode.USAGE
    log.info(f"Running {config.command.value}; output {config.output_path()}.")
    command_handler = CommandHandler(callback=_print_reply, log=log)
    exit_code = await command_handler.handle_command(config)
    log.info(f"Finished with exit code {int(exit_code)} ({exit_code.name}).")
    return exit_code
