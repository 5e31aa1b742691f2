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
    "DEFAULT_PRECISION_BITS",
    "MIN_PRECISION_BITS",
    "DEFAULT_PRECISION_CAP",
    "PRECISION_CAP_ENV",
    "RUN_SLOW_ENV",
    "TUNING_MARGIN",
    "CRITICAL_TOLERANCE",
    "DEFAULT_N0",
    "DEGENERATE_DIMENSION_CEILING",
    "BOUNDED_DIMENSION_FLOOR",
    "BOUNDED_TAIL_SLOPE_FLOOR",
    "Basis",
    "Command",
    "ExitCode",
    "Key",
    "PieceKind",
    "Region",
]

import enum

# Working precision [bits] used when nothing else is configured.
DEFAULT_PRECISION_BITS = 256
MIN_PRECISION_BITS = 64
# Ceiling [bits] for automatic precision escalation.
DEFAULT_PRECISION_CAP = 4096
PRECISION_CAP_ENV = "CHERRY_PREC_CAP"
RUN_SLOW_ENV = "CHERRY_RUN_SLOW"

# Extra convergent levels enforced by the tuner beyond the requested depth.
TUNING_MARGIN = 2

# Distance of lambda_u from 1 below which a point is reported as critical.
CRITICAL_TOLERANCE = 1e-9

# First level considered "large" by the inequality checkers.
DEFAULT_N0 = 5

# Desk-scale dimension thresholds. These are conventions for finite depth,
# not limits.
DEGENERATE_DIMENSION_CEILING = 0.15
BOUNDED_DIMENSION_FLOOR = 0.05
BOUNDED_TAIL_SLOPE_FLOOR = -0.02


class Command(str, enum.Enum):
    TUNE = "tune"
    RATIOS = "ratios"
    VERIFY = "verify"
    CLASSIFY = "classify"
    CURVE = "curve"
    DIM = "dim"


class Region(str, enum.Enum):
    DEGENERATE = "Degenerate"
    BOUNDED = "Bounded"
    CRITICAL = "Critical"
    UNKNOWN = "Unknown"


class Basis(str, enum.Enum):
    THEOREM_REGION = "theorem-region"
    LAMBDA_CRITERION = "lambda-criterion"
    EMPIRICAL_ONLY = "empirical-only"


class PieceKind(str, enum.Enum):
    MARKED = "marked"
    LONG = "long"
    SHORT = "short"


class Key(str, enum.Enum):
    """Keys of the replies sent by the command handler."""

    COMMAND = "command"
    RESPONSE = "response"
    EXIT_CODE = "exit_code"
    OUTPUT = "output"
    MESSAGE = "message"
    PAYLOAD = "payload"


class ExitCode(enum.IntEnum):
    """Process exit codes of the command line tools."""

    OK = 0
    FAILURE = 1
    TUNING = 2
    DEPTH = 3
    PRECISION = 4
    USAGE = 64
