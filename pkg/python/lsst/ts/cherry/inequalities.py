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
    "APRIORI_THRESHOLDS",
    "CheckRecord",
    "VerificationReport",
    "recursion_factor",
    "run_verification_suite",
    "verify_apriori",
    "verify_lemma1",
    "verify_lower_bounds",
    "verify_quadratic",
    "verify_recursion",
]

import dataclasses
import logging
import typing

import mpmath
import numpy as np

from .constants import DEFAULT_N0
from .errors import DomainError
from .geometry import OrbitGeometry
from .kernel import BigReal
from .ratios import (
    RatioSeries,
    affine_coefficients,
    lemma_chain_audit,
    nu_series,
)

# Bounds on alpha_n^(e/2): all large n, every other n, and the two sided
# alternative when the first one fails.
APRIORI_THRESHOLDS = (0.55, 0.3, 0.44, 0.16)


@dataclasses.dataclass(frozen=True)
class CheckRecord:
    """One evaluated inequality lhs <= rhs (or an implied constant).

    Attributes
    ----------
    check : `str`
        Name of the check.
    level : `int`
        Level n.
    lhs, rhs : `mpmath.mpf`
        Both sides.
    slack : `mpmath.mpf`
        rhs - lhs for inequalities; the implied constant for bounds with
        unknown constants.
    passed : `bool`
        Whether the record holds.
    hard : `bool`
        Whether a failure counts against the run (level above n0).
    index : `int` or `None`
        Inner index k or i, where the check has one.
    note : `str`
        Free form remark.
    """

    check: str
    level: int
    lhs: mpmath.mpf
    rhs: mpmath.mpf
    slack: mpmath.mpf
    passed: bool
    hard: bool
    index: int | None = None
    note: str = ""

    def to_dict(self, precision_bits: int) -> typing.Dict[str, typing.Any]:
        def dec(value: mpmath.mpf) -> str:
            return BigReal(value, precision_bits).to_decimal()

        return {
            "check": self.check,
            "level": self.level,
            "index": self.index,
            "lhs": dec(self.lhs),
            "rhs": dec(self.rhs),
            "slack": dec(self.slack),
            "pass": self.passed,
            "hard": self.hard,
            "note": self.note,
        }


@dataclasses.dataclass(frozen=True)
class VerificationReport:
    """Records of one or more checks over a series."""

    records: typing.Tuple[CheckRecord, ...]
    precision_bits: int

    def __add__(self, other: "VerificationReport") -> "VerificationReport":
        return VerificationReport(
            self.records + other.records,
            min(self.precision_bits, other.precision_bits),
        )

    def select(self, check: str) -> typing.List[CheckRecord]:
        return [record for record in self.records if record.check == check]

    @property
    def failures(self) -> typing.List[CheckRecord]:
        return [record for record in self.records if not record.passed]

    @property
    def hard_failures(self) -> typing.List[CheckRecord]:
        return [record for record in self.failures if record.hard]

    @property
    def passed(self) -> bool:
        return not self.hard_failures

    def first_passing_level(self, check: str) -> int | None:
        """Lowest level from which every record of ``check`` passes."""
        records = self.select(check)
        if not records:
            return None
        failing = [record.level for record in records if not record.passed]
        if not failing:
            return min(record.level for record in records)
        later = [record.level for record in records if record.level > max(failing)]
        return min(later) if later else None

    def infimum(self, check: str) -> mpmath.mpf | None:
        """Smallest slack of ``check``; the infimum of implied constants."""
        records = self.select(check)
        return min(record.slack for record in records) if records else None

    def trend(self, check: str) -> float | None:
        """Fitted slope of ln(slack) against the level for positive slacks."""
        records = [record for record in self.select(check) if record.slack > 0]
        if len({record.level for record in records}) < 2:
            return None
        levels = [record.level for record in records]
        logs = [float(mpmath.log(record.slack)) for record in records]
        slope, _ = np.polyfit(levels, logs, 1)
        return float(slope)

    def counts(self) -> typing.Dict[str, typing.Dict[str, int]]:
        """Pass and fail counts per check."""
        result: typing.Dict[str, typing.Dict[str, int]] = {}
        for record in self.records:
            entry = result.setdefault(
                record.check, {"passed": 0, "failed": 0, "hard_failed": 0}
            )
            if record.passed:
                entry["passed"] += 1
            else:
                entry["failed"] += 1
                if record.hard:
                    entry["hard_failed"] += 1
        return result

    def to_dicts(self) -> typing.List[typing.Dict[str, typing.Any]]:
        return [record.to_dict(self.precision_bits) for record in self.records]


def _inequality(
    check: str,
    level: int,
    lhs: mpmath.mpf,
    rhs: mpmath.mpf,
    n0: int,
    index: int | None = None,
    note: str = "",
) -> CheckRecord:
    return CheckRecord(
        check=check,
        level=level,
        lhs=lhs,
        rhs=rhs,
        slack=rhs - lhs,
        passed=bool(lhs <= rhs),
        hard=level > n0,
        index=index,
        note=note,
    )


def _implied(
    check: str,
    level: int,
    lhs: mpmath.mpf,
    rhs: mpmath.mpf,
    index: int | None = None,
    note: str = "",
) -> CheckRecord:
    constant = lhs / rhs
    return CheckRecord(
        check=check,
        level=level,
        lhs=lhs,
        rhs=rhs,
        slack=constant,
        passed=bool(mpmath.isfinite(constant) and constant > 0),
        hard=False,
        index=index,
        note=note,
    )


def verify_lemma1(series: RatioSeries, n0: int = DEFAULT_N0) -> VerificationReport:
    """Check, for k = 0 .. a_(n-1) - 1,

    (B + A g)(1 + g) / ((1 + A g)(B + g)) <= s_n beta_n(k+1)

    with B = beta_n(k)^e_n, A = alpha_(n-1)^e_(n-1) and
    g = gamma1_n(k)^e_n / gamma1_(n-1)(0)^e_(n-1).
    """
    records = []
    with mpmath.workprec(series.precision_bits):
        for level in series:
            n = level.n
            if n - 1 not in series:
                continue
            previous = series[n - 1]
            e_n, e_prev = series.exponent(n), series.exponent(n - 1)
            a_coef = previous.alpha**e_prev
            for k in range(len(level.beta) - 1):
                b_coef = level.beta[k] ** e_n
                g = level.gamma1[k] ** e_n / previous.gamma1[0] ** e_prev
                numerator = (b_coef + a_coef * g) * (1 + g)
                lhs = numerator / ((1 + a_coef * g) * (b_coef + g))
                rhs = level.s * level.beta[k + 1]
                records.append(_inequality("lemma1", n, lhs, rhs, n0, index=k))
    return VerificationReport(tuple(records), series.precision_bits)


def verify_quadratic(series: RatioSeries, n0: int = DEFAULT_N0) -> VerificationReport:
    """The lemma at its minimising gamma, and the bound it implies on
    min(beta_n(k)^(e/2), alpha_(n-1)^(e'/2))."""
    records = []
    with mpmath.workprec(series.precision_bits):
        for level in series:
            n = level.n
            if n - 1 not in series:
                continue
            e_n, e_prev = series.exponent(n), series.exponent(n - 1)
            y = series[n - 1].alpha ** (e_prev / 2)
            for k in range(len(level.beta) - 1):
                x = level.beta[k] ** (e_n / 2)
                lhs = ((x + y) / (1 + x * y)) ** 2
                rhs = level.s * level.beta[k + 1]
                records.append(_inequality("quadratic", n, lhs, rhs, n0, index=k))
                z = level.s * level.beta[k + 1] ** (e_n / 2)
                if z > 1:
                    records.append(
                        CheckRecord(
                            check="min-bound",
                            level=n,
                            lhs=min(x, y),
                            rhs=mpmath.mpf(0),
                            slack=1 - z,
                            passed=False,
                            hard=n > n0,
                            index=k,
                            note="radicand negative",
                        )
                    )
                    continue
                bound = mpmath.sqrt(z) / (1 + mpmath.sqrt(1 - z))
                records.append(
                    _inequality("min-bound", n, min(x, y), bound, n0, index=k)
                )
    return VerificationReport(tuple(records), series.precision_bits)


def recursion_factor(
    s_prev: mpmath.mpf,
    alpha_prev: mpmath.mpf,
    alpha_prev2: mpmath.mpf,
    sigma_ratio: mpmath.mpf,
    ell: mpmath.mpf,
) -> mpmath.mpf | None:
    """M_n(ell); `None` if the square root argument is negative.

    M_n = s_(n-1)^2 (2/ell) / (1 + sqrt(1 - (2(ell-1)/ell) s_(n-1) alpha_(n-1)))
    / (1 - alpha_(n-2)) * sigma_n / sigma_(n-2)
    """
    radicand = 1 - (2 * (ell - 1) / ell) * s_prev * alpha_prev
    if radicand < 0:
        return None
    return (
        s_prev**2
        * (2 / ell)
        / (1 + mpmath.sqrt(radicand))
        / (1 - alpha_prev2)
        * sigma_ratio
    )


def verify_recursion(series: RatioSeries, n0: int = DEFAULT_N0) -> VerificationReport:
    """alpha_n^ell <= M_n(ell) alpha_(n-2)^2 with ell the level exponent.

    For ell1 = ell2 = 1 the constant in alpha_n <= W (sigma_n/sigma_(n-2))
    alpha_(n-2) is unknown, so the implied W is reported instead.

    Raises
    ------
    DomainError
        If exactly one exponent equals 1.
    """
    linear = series.ell1 == 1 and series.ell2 == 1
    if not linear and (series.ell1 == 1 or series.ell2 == 1):
        raise DomainError("The recursion needs both exponents above 1 or both at 1.")
    records = []
    with mpmath.workprec(series.precision_bits):
        for level in series:
            n = level.n
            if n - 2 not in series:
                continue
            previous, earlier = series[n - 1], series[n - 2]
            sigma_ratio = level.sigma / earlier.sigma
            if linear:
                records.append(
                    _implied(
                        "recursion-linear",
                        n,
                        level.alpha,
                        sigma_ratio * earlier.alpha,
                    )
                )
                continue
            ell = series.exponent(n)
            factor = recursion_factor(
                previous.s, previous.alpha, earlier.alpha, sigma_ratio, ell
            )
            lhs = level.alpha**ell
            if factor is None:
                records.append(
                    CheckRecord(
                        check="recursion",
                        level=n,
                        lhs=lhs,
                        rhs=mpmath.mpf(0),
                        slack=-lhs,
                        passed=False,
                        hard=n > n0,
                        note="assumption breach: s_(n-1) alpha_(n-1) too large",
                    )
                )
                continue
            records.append(
                _inequality("recursion", n, lhs, factor * earlier.alpha**2, n0)
            )
    return VerificationReport(tuple(records), series.precision_bits)


def verify_apriori(
    series: RatioSeries,
    n0: int = DEFAULT_N0,
    log: logging.Logger | None = None,
) -> VerificationReport:
    """A priori bounds on x_n = alpha_n^(e_n/2) for exponents in [1, 2]^2.

    - x_n < 0.55;
    - min(x_n, x_(n+1)) < 0.3;
    - x_n > 0.3 implies x_n < 0.44 or x_(n+1) < 0.16.

    Raises
    ------
    DomainError
        If an exponent lies outside [1, 2].
    """
    if not (1 <= series.ell1 <= 2 and 1 <= series.ell2 <= 2):
        raise DomainError(
            f"A priori bounds hold for exponents in [1, 2]^2, "
            f"got ({series.ell1}, {series.ell2})."
        )
    if len(series.levels) < 2:
        raise DomainError("A priori bounds need at least two levels.")
    bound, alternate, upper, next_upper = (mpmath.mpf(t) for t in APRIORI_THRESHOLDS)
    records = []
    with mpmath.workprec(series.precision_bits):
        x = {
            level.n: level.alpha ** (series.exponent(level.n) / 2)
            for level in series
        }
        for n, value in x.items():
            records.append(_strict("apriori-bound", n, value, bound, n0))
            if n + 1 not in x:
                continue
            following = x[n + 1]
            records.append(
                _strict("apriori-alternate", n, min(value, following), alternate, n0)
            )
            if value <= alternate:
                records.append(
                    CheckRecord(
                        check="apriori-dichotomy",
                        level=n,
                        lhs=value,
                        rhs=alternate,
                        slack=alternate - value,
                        passed=True,
                        hard=n > n0,
                        note="not applicable",
                    )
                )
                continue
            slack = max(upper - value, next_upper - following)
            records.append(
                CheckRecord(
                    check="apriori-dichotomy",
                    level=n,
                    lhs=value,
                    rhs=upper,
                    slack=slack,
                    passed=bool(slack > 0),
                    hard=n > n0,
                    note=f"next={mpmath.nstr(following, 6)}",
                )
            )
    report = VerificationReport(tuple(records), series.precision_bits)
    if log is not None and report.hard_failures:
        log.warning(f"{len(report.hard_failures)} a priori bounds fail above n0={n0}")
    return report


def _strict(
    check: str, level: int, lhs: mpmath.mpf, rhs: mpmath.mpf, n0: int
) -> CheckRecord:
    return CheckRecord(
        check=check,
        level=level,
        lhs=lhs,
        rhs=rhs,
        slack=rhs - lhs,
        passed=bool(lhs < rhs),
        hard=level > n0,
    )


def _kappa_exponent(ell: mpmath.mpf, a: int) -> mpmath.mpf:
    if ell == 1:
        return mpmath.mpf(-(a + 1))
    return (1 - ell ** (a + 1)) / (ell - 1)


def verify_lower_bounds(
    series: RatioSeries,
    n0: int = DEFAULT_N0,
    log: logging.Logger | None = None,
) -> VerificationReport:
    """Implied constants of the lower bounds for bounded type rotation
    numbers.

    Records, per level:

    - ``kappa-bound``: kappa_n / alpha_(n-1)^E with
      E = (1 - l^(a_n + 1)) / (l - 1), l = ell2 for even n and ell1 for
      odd n;
    - ``alpha-bound``: alpha_n / (alpha_(n-1)^c1 alpha_(n-2)^c2) with the
      affine coefficients of the level;
    - ``beta-chain``: beta_n(i)^e / beta_n(i + 1);
    - ``one-minus-beta``: 1 - beta_n(i) itself.

    The slack of each record is the implied constant.
    """
    records = []
    with mpmath.workprec(series.precision_bits):
        explosive = mpmath.ldexp(1, series.precision_bits // 2)
        for level in series:
            n = level.n
            e_n = series.exponent(n)
            if n - 1 in series:
                other = series.ell2 if n % 2 == 0 else series.ell1
                exponent = _kappa_exponent(other, series.table.a(n))
                rhs = series[n - 1].alpha ** exponent
                note = ""
                if rhs > explosive:
                    note = "explosive right hand side"
                    if log is not None:
                        log.warning(f"kappa bound at level {n} is explosive")
                records.append(_implied("kappa-bound", n, level.kappa, rhs, note=note))
            if n - 2 in series:
                c1, c2 = affine_coefficients(series.table, n, series.ell1, series.ell2)
                rhs = series[n - 1].alpha ** c1 * series[n - 2].alpha ** c2
                records.append(_implied("alpha-bound", n, level.alpha, rhs))
            for i in range(len(level.beta) - 1):
                records.append(
                    _implied(
                        "beta-chain",
                        n,
                        level.beta[i] ** e_n,
                        level.beta[i + 1],
                        index=i,
                    )
                )
            for i, value in enumerate(level.beta):
                records.append(
                    _implied("one-minus-beta", n, 1 - value, mpmath.mpf(1), index=i)
                )
    return VerificationReport(tuple(records), series.precision_bits)


def run_verification_suite(
    series: RatioSeries,
    geometry: OrbitGeometry,
    n0: int = DEFAULT_N0,
    log: logging.Logger | None = None,
) -> VerificationReport:
    """Every check that applies to the exponents of the series.

    The a priori bounds are skipped outside [1, 2]^2; the recursion is
    skipped when exactly one exponent is 1.
    """
    report = verify_lemma1(series, n0) + verify_quadratic(series, n0)
    if 1 <= series.ell1 <= 2 and 1 <= series.ell2 <= 2:
        report = report + verify_apriori(series, n0, log=log)
    elif log is not None:
        log.info("Exponents outside [1, 2]^2; a priori bounds skipped.")
    try:
        report = report + verify_recursion(series, n0)
    except DomainError as e:
        if log is not None:
            log.info(f"Recursion skipped: {e}")
    report = report + verify_lower_bounds(series, n0, log=log)
    records = []
    with mpmath.workprec(series.precision_bits):
        for level in series:
            chain = lemma_chain_audit(geometry, level.n).chains[0]
            records.append(
                CheckRecord(
                    check="cross-ratio-chain",
                    level=level.n,
                    lhs=chain.cr_product,
                    rhs=chain.po_product,
                    slack=chain.po_product,
                    passed=chain.po_contractions == 0,
                    hard=level.n > n0,
                    note=f"{chain.steps} steps, multiplicity {chain.multiplicity}",
                )
            )
        for record in nu_series(series):
            if record.residual is None:
                continue
            records.append(
                CheckRecord(
                    check="nu-residual",
                    level=record.n,
                    lhs=record.nu,
                    rhs=record.nu - record.residual,
                    slack=record.residual,
                    passed=True,
                    hard=False,
                    note="implied additive constant",
                )
            )
    return report + VerificationReport(tuple(records), series.precision_bits)
