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
    "ChainRecord",
    "DecayRateReport",
    "DistortionReport",
    "LevelRatios",
    "NuRecord",
    "Quadruple",
    "RatioSeries",
    "SERIES_COLUMNS",
    "WReport",
    "affine_coefficients",
    "alpha",
    "beta",
    "compute_series",
    "cross_cr",
    "cross_po",
    "decay_rate_report",
    "distortion_audit",
    "fsigma",
    "gamma1",
    "geometric_tail",
    "kappa",
    "lemma_chain_audit",
    "nu_series",
    "parity_exponent",
    "s_ratio",
    "sigma",
    "tau",
    "w_diagnostic",
    "w_ratio",
]

import dataclasses
import logging
import typing

import mpmath
import numpy as np

from .continued_fraction import ConvergentTable
from .errors import AuditError, DepthError, DomainError
from .flat_map import FlatCircleMap
from .geometry import OrbitGeometry
from .kernel import BigReal, reduce_mod1

SERIES_COLUMNS = (
    "n",
    "alpha",
    "sigma",
    "s",
    "tau",
    "kappa",
    "nu",
    "fsigma",
    "beta",
    "gamma1",
    "w",
)


def parity_exponent(n: int, ell1: mpmath.mpf, ell2: mpmath.mpf) -> mpmath.mpf:
    """Exponent attached to level n: ell1 for even n, ell2 for odd n."""
    return ell1 if n % 2 == 0 else ell2


def geometric_tail(ell: mpmath.mpf, j: int) -> mpmath.mpf:
    """(1 - ell^-j) / (ell - 1), continued by its limit j at ell = 1."""
    if ell == 1:
        return mpmath.mpf(j)
    return (1 - ell ** (-j)) / (ell - 1)


def affine_coefficients(
    table: ConvergentTable, n: int, ell1: mpmath.mpf, ell2: mpmath.mpf
) -> typing.Tuple[mpmath.mpf, mpmath.mpf]:
    """Coefficients (c1, c2) of nu_n <= c1 nu_(n-1) + c2 nu_(n-2) + K.

    Even n: c1 = (ell2/ell1) t2(a_n), c2 = ell1^-a_(n-1).
    Odd n: c1 = (ell1/ell2) t1(a_n), c2 = ell2^-a_(n-1).
    """
    if n < 2 or n > table.depth:
        raise DepthError(f"Level {n} is outside the convergent table 2..{table.depth}.")
    a_this, a_prev = table.a(n), table.a(n - 1)
    if n % 2 == 0:
        return (ell2 / ell1) * geometric_tail(ell2, a_this), ell1 ** (-a_prev)
    return (ell1 / ell2) * geometric_tail(ell1, a_this), ell2 ** (-a_prev)


def alpha(geometry: OrbitGeometry, n: int) -> mpmath.mpf:
    """|(-q_n, 0)| / |[-q_n, 0)|."""
    q = geometry.table.q[n]
    with mpmath.workprec(geometry.precision_bits):
        return geometry.gap(-q, 0) / geometry.interval(-q, 0, include_first=True)


def sigma(geometry: OrbitGeometry, n: int) -> mpmath.mpf:
    """|(0, q_n)| / |(q_(n-1), 0)|."""
    q = geometry.table.q
    with mpmath.workprec(geometry.precision_bits):
        return geometry.gap(0, q[n]) / geometry.gap(q[n - 1], 0)


def s_ratio(geometry: OrbitGeometry, n: int) -> mpmath.mpf:
    """|[-q_(n-2), 0]| / |U|."""
    q = geometry.table.q[n - 2]
    with mpmath.workprec(geometry.precision_bits):
        closed = geometry.interval(-q, 0, include_first=True, include_second=True)
        return closed / geometry.length(0)


def tau(geometry: OrbitGeometry, n: int) -> mpmath.mpf:
    """|(0, q_n)| / |(0, q_(n-2))|."""
    q = geometry.table.q
    with mpmath.workprec(geometry.precision_bits):
        return geometry.gap(0, q[n]) / geometry.gap(0, q[n - 2])


def kappa(geometry: OrbitGeometry, n: int) -> mpmath.mpf:
    """|(0, q_n)| / |(0, -q_(n-1))|."""
    q = geometry.table.q
    with mpmath.workprec(geometry.precision_bits):
        return geometry.gap(0, q[n]) / geometry.gap(0, -q[n - 1])


def _beta_index(table: ConvergentTable, n: int, k: int) -> int:
    if not 0 <= k <= table.a(n - 1):
        raise DomainError(f"k={k} is outside 0..a_{n - 1}={table.a(n - 1)}.")
    return -table.q[n] + k * table.q[n - 1]


def gamma1(geometry: OrbitGeometry, n: int, k: int) -> mpmath.mpf:
    """|(-q_n + k q_(n-1), 0)|."""
    return geometry.gap(_beta_index(geometry.table, n, k), 0)


def beta(geometry: OrbitGeometry, n: int, k: int) -> mpmath.mpf:
    """|(-q_n + k q_(n-1), 0)| / |[-q_n + k q_(n-1), 0)|.

    beta(n, a_(n-1)) uses the arc -q_(n-2) and so equals alpha(n-2).
    """
    index = _beta_index(geometry.table, n, k)
    with mpmath.workprec(geometry.precision_bits):
        return geometry.gap(index, 0) / geometry.interval(index, 0, include_first=True)


def w_ratio(geometry: OrbitGeometry, n: int, i: int) -> mpmath.mpf:
    """|(-q_n + (i+1) q_(n-1), -q_n + i q_(n-1))| / |-q_n + i q_(n-1)|."""
    table = geometry.table
    if not 0 <= i < table.a(n - 1):
        raise DomainError(f"i={i} is outside 0..a_{n - 1}-1.")
    here = _beta_index(table, n, i)
    following = _beta_index(table, n, i + 1)
    with mpmath.workprec(geometry.precision_bits):
        return geometry.gap(following, here) / geometry.length(here)


def fsigma(geometry: OrbitGeometry, n: int) -> mpmath.mpf:
    """Forward image of sigma: |(1, q_n + 1)| / |(q_(n-1) + 1, 1)|."""
    q = geometry.table.q
    with mpmath.workprec(geometry.precision_bits):
        return geometry.gap(1, q[n] + 1) / geometry.gap(q[n - 1] + 1, 1)


@dataclasses.dataclass(frozen=True)
class LevelRatios:
    """All scaling ratios of one level n."""

    n: int
    alpha: mpmath.mpf
    sigma: mpmath.mpf
    s: mpmath.mpf
    tau: mpmath.mpf
    kappa: mpmath.mpf
    nu: mpmath.mpf
    fsigma: mpmath.mpf
    beta: typing.Tuple[mpmath.mpf, ...]
    gamma1: typing.Tuple[mpmath.mpf, ...]
    w: typing.Tuple[mpmath.mpf, ...]


@dataclasses.dataclass(frozen=True)
class RatioSeries:
    """Scaling ratio series of one tuned map.

    Parameters
    ----------
    levels : `tuple` [`LevelRatios`]
        Consecutive levels, in increasing order.
    ell1, ell2 : `mpmath.mpf`
        Exponents of the map.
    cf_spec : `str`
        Rotation number in command line notation.
    precision_bits : `int`
        Working precision.
    table : `ConvergentTable`
        Convergents used for the indices.
    """

    levels: typing.Tuple[LevelRatios, ...]
    ell1: mpmath.mpf
    ell2: mpmath.mpf
    cf_spec: str
    precision_bits: int
    table: ConvergentTable

    @property
    def first(self) -> int:
        return self.levels[0].n

    @property
    def last(self) -> int:
        return self.levels[-1].n

    def __contains__(self, n: int) -> bool:
        return bool(self.levels) and self.first <= n <= self.last

    def __getitem__(self, n: int) -> LevelRatios:
        if n not in self:
            raise DepthError(
                f"Level {n} is not in the series {self.first}..{self.last}."
            )
        return self.levels[n - self.first]

    def __iter__(self) -> typing.Iterator[LevelRatios]:
        return iter(self.levels)

    def exponent(self, n: int) -> mpmath.mpf:
        return parity_exponent(n, self.ell1, self.ell2)

    def alphas(self) -> typing.List[mpmath.mpf]:
        return [level.alpha for level in self.levels]

    def rows(self) -> typing.List[typing.List[str]]:
        """CSV rows in `SERIES_COLUMNS` order; tables joined with ';'."""

        def dec(value: mpmath.mpf) -> str:
            return BigReal(value, self.precision_bits).to_decimal()

        rows = []
        for level in self.levels:
            rows.append(
                [str(level.n)]
                + [
                    dec(value)
                    for value in (
                        level.alpha,
                        level.sigma,
                        level.s,
                        level.tau,
                        level.kappa,
                        level.nu,
                        level.fsigma,
                    )
                ]
                + [
                    ";".join(dec(value) for value in values)
                    for values in (level.beta, level.gamma1, level.w)
                ]
            )
        return rows


def compute_series(
    geometry: OrbitGeometry,
    first: int = 3,
    last: int | None = None,
    log: logging.Logger | None = None,
) -> RatioSeries:
    """Evaluate every ratio for levels ``first`` .. ``last``.

    Parameters
    ----------
    geometry : `OrbitGeometry`
        Orbit data; its depth bounds ``last``.
    first : `int`, optional
        First level; the ratios look back two levels, so at least 3.
    last : `int`, optional
        Last level; defaults to the geometry depth.
    log : `logging.Logger`, optional
        Logger for per-level messages.
    """
    last = geometry.depth if last is None else last
    if first < 3:
        raise DomainError(f"first={first} must be at least 3.")
    if last > geometry.depth:
        raise DepthError(f"Level {last} exceeds the orbit depth {geometry.depth}.")
    if last < first:
        raise DomainError(f"Empty level range {first}..{last}.")
    table = geometry.table
    levels = []
    with mpmath.workprec(geometry.precision_bits):
        for n in range(first, last + 1):
            a_prev = table.a(n - 1)
            alpha_n = alpha(geometry, n)
            levels.append(
                LevelRatios(
                    n=n,
                    alpha=alpha_n,
                    sigma=sigma(geometry, n),
                    s=s_ratio(geometry, n),
                    tau=tau(geometry, n),
                    kappa=kappa(geometry, n),
                    nu=-mpmath.log(alpha_n),
                    fsigma=fsigma(geometry, n),
                    beta=tuple(beta(geometry, n, k) for k in range(a_prev + 1)),
                    gamma1=tuple(gamma1(geometry, n, k) for k in range(a_prev + 1)),
                    w=tuple(w_ratio(geometry, n, i) for i in range(a_prev)),
                )
            )
            if log is not None:
                log.debug(f"level {n}: alpha={mpmath.nstr(alpha_n, 8)}")
    m = geometry.m
    return RatioSeries(
        levels=tuple(levels),
        ell1=m.ell1.value,
        ell2=m.ell2.value,
        cf_spec=m.rho_target.spec,
        precision_bits=geometry.precision_bits,
        table=table,
    )


@dataclasses.dataclass(frozen=True)
class Quadruple:
    """Four points a < b < c < d of one lifted arc shorter than 1."""

    a: mpmath.mpf
    b: mpmath.mpf
    c: mpmath.mpf
    d: mpmath.mpf

    def __post_init__(self) -> None:
        if not self.a < self.b < self.c < self.d:
            raise DomainError(
                f"Quadruple {self.a}, {self.b}, {self.c}, {self.d} is not increasing."
            )
        if self.d - self.a >= 1:
            raise DomainError("Quadruple spans the whole circle.")

    @classmethod
    def from_circle(
        cls, points: typing.Sequence[mpmath.mpf], precision_bits: int
    ) -> "Quadruple":
        """Lift four circle coordinates given in positive cyclic order."""
        if len(points) != 4:
            raise DomainError(f"A quadruple needs 4 points, got {len(points)}.")
        with mpmath.workprec(precision_bits):
            lifted = [reduce_mod1(points[0])]
            for previous, point in zip(points, points[1:]):
                lifted.append(lifted[-1] + reduce_mod1(point - previous))
        return cls(*lifted)


def _cross_cr(
    a: mpmath.mpf, b: mpmath.mpf, c: mpmath.mpf, d: mpmath.mpf
) -> mpmath.mpf:
    return (b - a) * (d - c) / ((c - a) * (d - b))


def _cross_po(
    a: mpmath.mpf, b: mpmath.mpf, c: mpmath.mpf, d: mpmath.mpf
) -> mpmath.mpf:
    return (d - a) * (c - b) / ((c - a) * (d - b))


def cross_cr(q: Quadruple) -> mpmath.mpf:
    """Cr = |b - a| |d - c| / (|c - a| |d - b|)."""
    return _cross_cr(q.a, q.b, q.c, q.d)


def cross_po(q: Quadruple) -> mpmath.mpf:
    """Po = |d - a| |b - c| / (|c - a| |d - b|); Cr + Po = 1."""
    return _cross_po(q.a, q.b, q.c, q.d)


@dataclasses.dataclass(frozen=True)
class ChainRecord:
    """Distortion of the cross-ratios along one chain of iterates.

    Attributes
    ----------
    steps : `int`
        Number of iterates.
    cr_product : `mpmath.mpf`
        Product of DCr over the chain.
    po_product : `mpmath.mpf`
        Product of DPo over the chain.
    multiplicity : `int`
        Largest number of chain intervals [a_i, d_i] sharing a point.
    diffeomorphic_steps : `int`
        Steps where f is a diffeomorphism on [a_i, d_i].
    po_contractions : `int`
        Diffeomorphic steps with DPo < 1.
    """

    steps: int
    cr_product: mpmath.mpf
    po_product: mpmath.mpf
    multiplicity: int
    diffeomorphic_steps: int
    po_contractions: int


@dataclasses.dataclass(frozen=True)
class DistortionReport:
    chains: typing.Tuple[ChainRecord, ...]

    @property
    def max_cr_product(self) -> mpmath.mpf:
        return max(chain.cr_product for chain in self.chains)

    @property
    def min_po_product(self) -> mpmath.mpf:
        return min(chain.po_product for chain in self.chains)

    @property
    def po_expansion_holds(self) -> bool:
        """True if no diffeomorphic step contracted Po."""
        return all(chain.po_contractions == 0 for chain in self.chains)

    @property
    def max_multiplicity(self) -> int:
        return max(chain.multiplicity for chain in self.chains)


def _meets_flat(m: FlatCircleMap, start: mpmath.mpf, length: mpmath.mpf) -> bool:
    # Open interval (start, start + length) against the open flat piece.
    return bool(
        reduce_mod1(m.flat.left.value - start) < length
        or m.flat.contains_interior(start)
    )


def _avoids_closed_flat(
    m: FlatCircleMap, start: mpmath.mpf, length: mpmath.mpf
) -> bool:
    offset = reduce_mod1(start - m.flat.left.value)
    return bool(offset > m.flat.length.value and offset + length < 1)


def _multiplicity(
    intervals: typing.Sequence[typing.Tuple[mpmath.mpf, mpmath.mpf]]
) -> int:
    best = 0
    for start, _ in intervals:
        count = sum(
            1 for other, length in intervals if reduce_mod1(start - other) < length
        )
        best = max(best, count)
    return best


def _chain(m: FlatCircleMap, quadruple: Quadruple, n_iter: int) -> ChainRecord:
    tolerance = mpmath.ldexp(1, -(m.precision_bits // 2))
    a, b, c, d = quadruple.a, quadruple.b, quadruple.c, quadruple.d
    cr_product = po_product = mpmath.mpf(1)
    diffeomorphic = contractions = 0
    hulls = []
    for step in range(n_iter):
        if _meets_flat(m, b, c - b):
            raise AuditError(f"Middle interval meets the flat piece at step {step}.")
        hulls.append((reduce_mod1(a), d - a))
        cr, po = _cross_cr(a, b, c, d), _cross_po(a, b, c, d)
        fa, fb, fc, fd = (m.value_at(x) for x in (a, b, c, d))
        a2 = fa
        b2 = a2 + reduce_mod1(fb - fa)
        c2 = b2 + reduce_mod1(fc - fb)
        d2 = c2 + reduce_mod1(fd - fc)
        cr2, po2 = _cross_cr(a2, b2, c2, d2), _cross_po(a2, b2, c2, d2)
        if cr != 0:
            cr_product *= cr2 / cr
        po_product *= po2 / po
        if _avoids_closed_flat(m, a, d - a):
            diffeomorphic += 1
            if po2 / po < 1 - tolerance:
                contractions += 1
        a, b, c, d = a2, b2, c2, d2
    return ChainRecord(
        steps=n_iter,
        cr_product=cr_product,
        po_product=po_product,
        multiplicity=_multiplicity(hulls),
        diffeomorphic_steps=diffeomorphic,
        po_contractions=contractions,
    )


def distortion_audit(
    m: FlatCircleMap, quadruples: typing.Sequence[Quadruple], n_iter: int
) -> DistortionReport:
    """Follow each quadruple for ``n_iter`` iterates and multiply the
    cross-ratio distortions DCr = Cr(f(q))/Cr(q) and DPo.

    Raises
    ------
    AuditError
        If a middle interval (b, c) meets U somewhere along a chain.
    """
    if not quadruples:
        raise DomainError("distortion_audit needs at least one quadruple.")
    if n_iter < 1:
        raise DomainError(f"n_iter={n_iter} must be at least 1.")
    with mpmath.workprec(m.precision_bits):
        return DistortionReport(tuple(_chain(m, q, n_iter) for q in quadruples))


def lemma_chain_audit(geometry: OrbitGeometry, n: int) -> DistortionReport:
    """Distortion along the q_(n-1) - 1 iterates that carry the arcs
    -q_n - T and -T onto -q_n and U, with T = q_(n-1) - 1."""
    table = geometry.table
    steps = table.q[n - 1] - 1
    first, second = -(table.q[n] + steps), -steps
    if not geometry.is_right_of(first, second):
        first, second = second, first
    quadruple = Quadruple.from_circle(
        [
            geometry.left(first),
            geometry.right(first),
            geometry.left(second),
            geometry.right(second),
        ],
        geometry.precision_bits,
    )
    if steps == 0:
        return DistortionReport(
            (ChainRecord(0, mpmath.mpf(1), mpmath.mpf(1), 1, 0, 0),)
        )
    return distortion_audit(geometry.m, [quadruple], steps)


@dataclasses.dataclass(frozen=True)
class NuRecord:
    """nu_n = -ln alpha_n and the additive constant implied at level n."""

    n: int
    nu: mpmath.mpf
    residual: mpmath.mpf | None


def nu_series(series: RatioSeries) -> typing.Tuple[NuRecord, ...]:
    """nu_n with residual nu_n - c1 nu_(n-1) - c2 nu_(n-2) where both
    earlier levels are available."""
    records = []
    with mpmath.workprec(series.precision_bits):
        for level in series:
            n = level.n
            residual = None
            if n - 2 in series:
                c1, c2 = affine_coefficients(series.table, n, series.ell1, series.ell2)
                residual = level.nu - c1 * series[n - 1].nu - c2 * series[n - 2].nu
            records.append(NuRecord(n=n, nu=level.nu, residual=residual))
    return tuple(records)


@dataclasses.dataclass(frozen=True)
class WReport:
    """w_n(i) compared with alpha_(n-1).

    ``ratios[0]`` is w_n(0)^e / alpha_(n-1) with e the level exponent,
    ``ratios[i]`` for i >= 1 is w_n(i) / alpha_(n-1).
    """

    n: int
    exponent: mpmath.mpf
    ratios: typing.Tuple[mpmath.mpf, ...]

    @property
    def band(self) -> typing.Tuple[mpmath.mpf, mpmath.mpf]:
        return min(self.ratios), max(self.ratios)


def w_diagnostic(series: RatioSeries, n: int) -> WReport:
    level = series[n]
    alpha_prev = series[n - 1].alpha
    exponent = series.exponent(n)
    with mpmath.workprec(series.precision_bits):
        ratios = [level.w[0] ** exponent / alpha_prev]
        ratios.extend(w / alpha_prev for w in level.w[1:])
    return WReport(n=n, exponent=exponent, ratios=tuple(ratios))


@dataclasses.dataclass(frozen=True)
class DecayRateReport:
    """Growth of nu_n.

    Attributes
    ----------
    levels : `tuple` [`int`]
        Levels used.
    nu : `tuple` [`float`]
        nu_n per level.
    increasing : `bool`
        True if nu_n strictly increases.
    convex_fraction : `float`
        Share of positive second differences of nu_n.
    log_slope : `float`
        Fitted slope of ln nu_n against n; positive for double
        exponential decay of alpha_n.
    linear_slope : `float`
        Fitted slope of nu_n against n; positive for exponential decay.
    """

    levels: typing.Tuple[int, ...]
    nu: typing.Tuple[float, ...]
    increasing: bool
    convex_fraction: float
    log_slope: float
    linear_slope: float


def decay_rate_report(series: RatioSeries, first: int | None = None) -> DecayRateReport:
    levels = [level for level in series if first is None or level.n >= first]
    if len(levels) < 3:
        raise DepthError("The decay rate needs at least three levels.")
    ns = np.array([level.n for level in levels], dtype=float)
    nu = np.array([float(level.nu) for level in levels])
    second = np.diff(nu, n=2)
    log_slope, _ = np.polyfit(ns, np.log(nu), 1)
    linear_slope, _ = np.polyfit(ns, nu, 1)
    return DecayRateReport(
        levels=tuple(int(n) for n in ns),
        nu=tuple(float(v) for v in nu),
        increasing=bool(np.all(np.diff(nu) > 0)),
        convex_fraction=float(np.mean(second > 0)),
        log_slope=float(log_slope),
        linear_slope=float(linear_slope),
    )
