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
    "RunManifest",
    "load_map",
    "map_from_dict",
    "map_to_dict",
    "manifest_path",
    "save_map",
    "write_csv",
    "write_json",
]

import csv
import dataclasses
import io
import json
import os
import pathlib
import tempfile
import typing

from .constants import TUNING_MARGIN
from .continued_fraction import ContinuedFraction
from .errors import DomainError, UsageError
from .flat_map import FlatCircleMap, make_map
from .kernel import Arc, BigReal

MAP_FORMAT = "ts_cherry.map/1"


def _atomic_write(path: pathlib.Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as stream:
            stream.write(text)
        os.replace(temp_name, path)
    except BaseException:
        pathlib.Path(temp_name).unlink(missing_ok=True)
        raise


def write_json(path: str | os.PathLike, data: typing.Any) -> None:
    """Write ``data`` as sorted, indented JSON through a temporary file."""
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    _atomic_write(pathlib.Path(path), text)


def write_csv(
    path: str | os.PathLike,
    header: typing.Sequence[str],
    rows: typing.Iterable[typing.Sequence[str]],
) -> None:
    """Write a CSV file through a temporary file."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    _atomic_write(pathlib.Path(path), buffer.getvalue())


def map_to_dict(m: FlatCircleMap) -> typing.Dict[str, typing.Any]:
    """Map descriptor; every number is a decimal string.

    ``rho_target`` lists enough partial quotients to retune the map at its
    tuned depth. ``rho_spec`` keeps the exact expansion in `parse` notation.
    """
    quotients: typing.List[int] = []
    if m.rho_target is not None:
        quotients = m.rho_target.to_list(m.tuned_depth + TUNING_MARGIN + 1)
    return {
        "format": MAP_FORMAT,
        "ell1": m.ell1.to_decimal(),
        "ell2": m.ell2.to_decimal(),
        "u_left": m.flat.left.rep.to_decimal(),
        "u_length": m.flat.length.to_decimal(),
        "c": m.c.rep.to_decimal(),
        "lift_parameter": m.lift_parameter.to_decimal(),
        "precision_bits": m.precision_bits,
        "tuned_depth": m.tuned_depth,
        "rho_target": quotients,
        "rho_spec": None if m.rho_target is None else m.rho_target.spec,
    }


def _rho_from_dict(data: typing.Mapping[str, typing.Any]) -> ContinuedFraction | None:
    spec = data.get("rho_spec")
    if spec is not None:
        return ContinuedFraction.parse(spec)
    quotients = data.get("rho_target")
    if not quotients:
        return None
    if isinstance(quotients, str):
        raise DomainError(f"rho_target {quotients!r} must be a list of integers.")
    return ContinuedFraction(tuple(int(a) for a in quotients), None)


def map_from_dict(data: typing.Mapping[str, typing.Any]) -> FlatCircleMap:
    """Rebuild a map from a descriptor.

    ``format``, ``rho_spec`` and ``lift_parameter`` are optional. Without
    ``rho_spec`` the target is the finite expansion in ``rho_target``.
    Without ``lift_parameter`` the lift is derived from ``c``.

    Raises
    ------
    DomainError
        If the descriptor has the wrong format or inconsistent fields.
    """
    if data.get("format", MAP_FORMAT) != MAP_FORMAT:
        raise DomainError(f"Unknown map format {data.get('format')!r}.")
    try:
        precision_bits = int(data["precision_bits"])
        flat = Arc.from_values(data["u_left"], data["u_length"], precision_bits)
        m = make_map(
            data["ell1"],
            data["ell2"],
            flat,
            data["c"],
            precision_bits,
            rho_target=_rho_from_dict(data),
            tuned_depth=int(data["tuned_depth"]),
        )
    except KeyError as e:
        raise DomainError(f"Map descriptor lacks field {e}.") from e
    except DomainError:
        raise
    except (TypeError, ValueError) as e:
        raise DomainError(f"Malformed map descriptor: {e}") from e
    lift_text = data.get("lift_parameter")
    if lift_text is None:
        return m
    lift = BigReal.from_decimal(lift_text, precision_bits)
    return m.with_lift_parameter(lift.value)


def save_map(path: str | os.PathLike, m: FlatCircleMap) -> None:
    write_json(path, map_to_dict(m))


def load_map(path: str | os.PathLike) -> FlatCircleMap:
    """Read a map descriptor.

    Raises
    ------
    UsageError
        If the file does not exist.
    """
    path = pathlib.Path(path)
    if not path.is_file():
        raise UsageError(f"Map file {path} does not exist.")
    return map_from_dict(json.loads(path.read_text(encoding="utf-8")))


def manifest_path(output: str | os.PathLike) -> pathlib.Path:
    """Manifest written next to a command output."""
    output = pathlib.Path(output)
    return output.with_name(output.name + ".manifest.json")


@dataclasses.dataclass
class RunManifest:
    """Record of one command run.

    Parameters
    ----------
    tool_version : `str`
        Package version.
    config : `dict`
        Echo of the validated configuration.
    precision : `dict`
        Precision audit summary: requested, used, escalations, cap.
    wall_time : `float`
        Elapsed time [s].
    checks : `dict`
        Pass and fail counts per check.
    exit_code : `int`
        Exit code of the run.
    """

    tool_version: str
    config: typing.Dict[str, typing.Any]
    precision: typing.Dict[str, typing.Any] = dataclasses.field(default_factory=dict)
    wall_time: float = 0.0
    checks: typing.Dict[str, typing.Any] = dataclasses.field(default_factory=dict)
    exit_code: int = 0

    def save(self, output: str | os.PathLike) -> pathlib.Path:
        path = manifest_path(output)
        write_json(path, dataclasses.asdict(self))
        return path
