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
    "CurvePoint",
    "CurveTrace",
    "GeometryVerdict",
    "ProductAuditReport",
    "ProductRecord",
    "TransferMatrix",
    "biperiodic_eigen",
    "biperiodic_product",
    "classify_point",
    "curve_point",
    "curve_trace",
    "matrix_product_audit",
    "series_evidence",
    "t_func",
    "transfer_matrix",
    "wprime",
    "wprime_constants_check",
    "wprime_monotonicity_check",
]

import dataclasses
import typing

import mpmath

from .constants import CRITICAL_TOLERANCE, DEFAULT_PRECISION_BITS, Basis, Region
from .continued_fraction import ContinuedFraction, convergents
from .errors import AuditError, BracketError, DomainError
from .inequalities import CheckRecord, VerificationReport
from .kernel import BigReal, RealLike, as_mpf, bisect_root
from .ratios import RatioSeries, geometric_tail

# Upper end of the ell2 bracket when tracing the transition curve.
CURVE_ELL2_CEILING = 10**6


def _exponent(value: RealLike, name: str) -> mpmath.mpf:
    ell = as_mpf(value)
    if not ell > 1:
        raise DomainError(f"{name}={ell} must be greater than 1.")
    return ell


def _t(ell: mpmath.mpf, j: int) -> mpmath.mpf:
    if j < 1:
        raise DomainError(f"j={j} must be at least 1.")
    return geometric_tail(ell, j)


def t_func(
    which: int,
    j: int,
    ell1: RealLike,
    ell2: RealLike,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> BigReal:
    """t_i(j) = (1 - ell_i^-j) / (ell_i - 1).

    Raises
    ------
    DomainError
        If ``which`` is not 1 or 2, j < 1, or the selected exponent is
        not above 1.
    """
    if which not in (1, 2):
        raise DomainError(f"which={which} must be 1 or 2.")
    with mpmath.workprec(precision_bits):
        ell = _exponent(ell1 if which == 1 else ell2, f"ell{which}")
        return BigReal(_t(ell, j), precision_bits)


@dataclasses.dataclass(frozen=True)
class TransferMatrix:
    """2x2 coefficient matrix of the affine recursion at one level.

    Parameters
    ----------
    parity : `str`
        "even" or "odd" for a single level, "product" for products.
    entries : `tuple` [`mpmath.mpf`]
        Row major entries (m11, m12, m21, m22).
    precision_bits : `int`
        Working precision.
    """

    parity: str
    entries: typing.Tuple[mpmath.mpf, mpmath.mpf, mpmath.mpf, mpmath.mpf]
    precision_bits: int

    @property
    def matrix(self) -> mpmath.matrix:
        with mpmath.workprec(self.precision_bits):
            return mpmath.matrix([list(self.entries[:2]), list(self.entries[2:])])

    @property
    def determinant(self) -> mpmath.mpf:
        m11, m12, m21, m22 = self.entries
        with mpmath.workprec(self.precision_bits):
            return m11 * m22 - m12 * m21

    @property
    def trace(self) -> mpmath.mpf:
        with mpmath.workprec(self.precision_bits):
            return self.entries[0] + self.entries[3]

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        precision_bits = min(self.precision_bits, other.precision_bits)
        a11, a12, a21, a22 = self.entries
        b11, b12, b21, b22 = other.entries
        with mpmath.workprec(precision_bits):
            entries = (
                a11 * b11 + a12 * b21,
                a11 * b12 + a12 * b22,
                a21 * b11 + a22 * b21,
                a21 * b12 + a22 * b22,
            )
        return TransferMatrix("product", entries, precision_bits)


def transfer_matrix(
    n: int,
    a_this: int,
    a_prev: int,
    ell1: RealLike,
    ell2: RealLike,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> TransferMatrix:
    """Matrix A(n) of the recursion on (nu_(n-1), nu_(n-2)).

    Even n: [[(ell2/ell1) t2(a_n), ell1^-a_(n-1)], [1, 0]].
    Odd n: [[(ell1/ell2) t1(a_n), ell2^-a_(n-1)], [1, 0]].
    """
    if a_this < 1 or a_prev < 1:
        raise DomainError(f"Quotients {a_this}, {a_prev} must be at least 1.")
    with mpmath.workprec(precision_bits):
        l1, l2 = _exponent(ell1, "ell1"), _exponent(ell2, "ell2")
        if n % 2 == 0:
            top = ((l2 / l1) * _t(l2, a_this), l1 ** (-a_prev))
            parity = "even"
        else:
            top = ((l1 / l2) * _t(l1, a_this), l2 ** (-a_prev))
            parity = "odd"
        entries = (top[0], top[1], mpmath.mpf(1), mpmath.mpf(0))
    return TransferMatrix(parity, entries, precision_bits)


def biperiodic_product(
    a: int,
    b: int,
    ell1: RealLike,
    ell2: RealLike,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> TransferMatrix:
    """A(2n) A(2n-1) for a = a_2n, b = a_(2n-1) repeating."""
    even = transfer_matrix(2, a, b, ell1, ell2, precision_bits)
    odd = transfer_matrix(1, b, a, ell1, ell2, precision_bits)
    return even @ odd


def biperiodic_eigen(
    a: int,
    b: int,
    ell1: RealLike,
    ell2: RealLike,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> typing.Tuple[BigReal, BigReal]:
    """Eigenvalues (lambda_s, lambda_u) of the bi-periodic product.

    With T = t1(b) t2(a), u = ell1^-b and v = ell2^-a,
    2 lambda = T + u + v -/+ sqrt((u - v)^2 + (T + 2(u + v)) T).

    Raises
    ------
    AuditError
        If lambda_s falls outside (0, 1).
    """
    if a < 1 or b < 1:
        raise DomainError(f"Quotients a={a}, b={b} must be at least 1.")
    with mpmath.workprec(precision_bits):
        l1, l2 = _exponent(ell1, "ell1"), _exponent(ell2, "ell2")
        big_t = _t(l1, b) * _t(l2, a)
        u, v = l1 ** (-b), l2 ** (-a)
        root = mpmath.sqrt((u - v) ** 2 + (big_t + 2 * (u + v)) * big_t)
        lambda_s = (big_t + u + v - root) / 2
        lambda_u = (big_t + u + v + root) / 2
        if not 0 < lambda_s < 1:
            raise AuditError(f"lambda_s={lambda_s} is outside (0, 1).")
    return BigReal(lambda_s, precision_bits), BigReal(lambda_u, precision_bits)


@dataclasses.dataclass(frozen=True)
class CurvePoint:
    """One point of the transition curve lambda_u = 1.

    ``ell2`` is `None` when the curve leaves the domain at this ell1.
    """

    ell1: mpmath.mpf
    ell2: mpmath.mpf | None
    residual: mpmath.mpf | None
    status: str


@dataclasses.dataclass(frozen=True)
class CurveTrace:
    a: int
    b: int
    points: typing.Tuple[CurvePoint, ...]
    precision_bits: int

    @property
    def solved(self) -> typing.List[CurvePoint]:
        return [point for point in self.points if point.ell2 is not None]

    def pairs(self) -> typing.List[typing.Tuple[mpmath.mpf, mpmath.mpf]]:
        return [(point.ell1, point.ell2) for point in self.solved]

    @property
    def monotone(self) -> bool:
        """True if ell2 strictly decreases along increasing ell1."""
        solved = sorted(self.solved, key=lambda point: point.ell1)
        return all(
            later.ell2 < earlier.ell2 for earlier, later in zip(solved, solved[1:])
        )

    def rows(self) -> typing.List[typing.List[str]]:
        """CSV rows (ell1, ell2, lambda_u_residual); empty fields when the
        curve exits the domain."""

        def dec(value: mpmath.mpf | None) -> str:
            if value is None:
                return ""
            return BigReal(value, self.precision_bits).to_decimal()

        return [
            [dec(point.ell1), dec(point.ell2), dec(point.residual)]
            for point in self.points
        ]


def curve_point(
    a: int, b: int, ell1: RealLike, precision_bits: int = DEFAULT_PRECISION_BITS
) -> CurvePoint:
    """Solve lambda_u(a, b; ell1, ell2) = 1 for ell2 by bisection."""
    with mpmath.workprec(precision_bits):
        l1 = _exponent(ell1, "ell1")

        def excess(ell2: mpmath.mpf) -> mpmath.mpf:
            return biperiodic_eigen(a, b, l1, ell2, precision_bits)[1].value - 1

        lo = BigReal(1 + mpmath.ldexp(1, -(precision_bits // 4)), precision_bits)
        hi = BigReal(CURVE_ELL2_CEILING, precision_bits)
        tol = mpmath.ldexp(1, -(precision_bits // 2))
        try:
            root = bisect_root(excess, lo, hi, tol)
        except BracketError:
            return CurvePoint(l1, None, None, "curve-exits-domain")
        return CurvePoint(l1, root.value, excess(root.value), "ok")


def curve_trace(
    a: int,
    b: int,
    ell1_grid: typing.Iterable[RealLike],
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> CurveTrace:
    """Trace the transition curve over a grid of ell1 values."""
    points = tuple(curve_point(a, b, ell1, precision_bits) for ell1 in ell1_grid)
    return CurveTrace(a=a, b=b, points=points, precision_bits=precision_bits)


@dataclasses.dataclass(frozen=True)
class ProductRecord:
    """Products of the paired matrices up to level n.

    Attributes
    ----------
    n : `int`
        Even level of the newest factor.
    factor_max : `mpmath.mpf`
        Largest entry of the newest factor A(n) A(n-1).
    product_max : `mpmath.mpf`
        Largest entry of the product.
    norm : `mpmath.mpf`
        Operator 2-norm of the product.
    spectral_radius : `mpmath.mpf`
        Largest eigenvalue modulus of the product.
    """

    n: int
    factor_max: mpmath.mpf
    product_max: mpmath.mpf
    norm: mpmath.mpf
    spectral_radius: mpmath.mpf


@dataclasses.dataclass(frozen=True)
class ProductAuditReport:
    records: typing.Tuple[ProductRecord, ...]
    bound: mpmath.mpf
    in_contraction_region: bool

    @property
    def factors_within_bound(self) -> bool:
        return all(record.factor_max <= self.bound for record in self.records)

    @property
    def products_within_bound(self) -> bool:
        return all(record.product_max <= self.bound for record in self.records)

    @property
    def contraction_onset(self) -> int | None:
        """First level from which every product norm stays below 1."""
        onset = None
        for record in self.records:
            if record.norm < 1:
                if onset is None:
                    onset = record.n
            else:
                onset = None
        return onset


def matrix_product_audit(
    cf: ContinuedFraction,
    ell1: RealLike,
    ell2: RealLike,
    n: int,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> ProductAuditReport:
    """Accumulate A(k) A(k-1) over even k = 4 .. n, newest factor on the
    left, and record entry sizes, norms and spectral radii."""
    if n < 4:
        raise DomainError(f"n={n} must be at least 4.")
    table = convergents(cf, n)
    records = []
    with mpmath.workprec(precision_bits):
        l1, l2 = _exponent(ell1, "ell1"), _exponent(ell2, "ell2")
        bound = max(l1 / l2, l2 / l1)
        product: TransferMatrix | None = None
        for k in range(4, n + 1, 2):
            factor = transfer_matrix(
                k, table.a(k), table.a(k - 1), l1, l2, precision_bits
            ) @ transfer_matrix(
                k - 1, table.a(k - 1), table.a(k - 2), l1, l2, precision_bits
            )
            product = factor if product is None else factor @ product
            matrix = product.matrix
            singular = mpmath.svd_r(matrix, compute_uv=False)
            eigenvalues, _ = mpmath.eig(matrix)
            records.append(
                ProductRecord(
                    n=k,
                    factor_max=max(factor.entries),
                    product_max=max(product.entries),
                    norm=max(singular[i] for i in range(singular.rows)),
                    spectral_radius=max(abs(value) for value in eigenvalues),
                )
            )
    region = bool(l1 >= 2 and l2 >= 2 and not (l1 == 2 and l2 == 2))
    return ProductAuditReport(tuple(records), bound, region)


def wprime(
    x: RealLike,
    y: RealLike,
    ell1: RealLike,
    ell2: RealLike,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> mpmath.mpf:
    """W'(x, y) = [l1/2 + (l1/2) sqrt(1 - (2(l1-1)/l1) x^(2/l2))]^-1
    * y^(4/l1 - 2) / (1 - y^(2/l1)).

    Raises
    ------
    DomainError
        If x or y is outside (0, 1) or the square root argument is negative.
    """
    with mpmath.workprec(precision_bits):
        xv, yv = as_mpf(x), as_mpf(y)
        l1, l2 = as_mpf(ell1), as_mpf(ell2)
        if not (0 < xv < 1 and 0 < yv < 1):
            raise DomainError(f"x={xv} and y={yv} must lie in (0, 1).")
        radicand = 1 - (2 * (l1 - 1) / l1) * xv ** (2 / l2)
        if radicand < 0:
            raise DomainError(f"W' square root argument {radicand} is negative.")
        head = 1 / (l1 / 2 + (l1 / 2) * mpmath.sqrt(radicand))
        return head * yv ** (4 / l1 - 2) / (1 - yv ** (2 / l1))


def wprime_constants_check(
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> VerificationReport:
    """The three numeric bounds on W' at ell1 = ell2 = 2."""
    with mpmath.workprec(precision_bits):
        first = wprime("0.55", "0.16", 2, 2, precision_bits)
        second = wprime("0.3", "0.44", 2, 2, precision_bits)
        swapped = wprime("0.16", "0.55", 2, 2, precision_bits)
        checks = [
            ("wprime-0.55-0.16", first, mpmath.mpf("0.9")),
            ("wprime-0.3-0.44", second, mpmath.mpf("0.98")),
            ("wprime-product", first * swapped, mpmath.mpf("0.85")),
        ]
        records = tuple(
            CheckRecord(
                check=name,
                level=0,
                lhs=value,
                rhs=bound,
                slack=bound - value,
                passed=bool(value < bound),
                hard=True,
            )
            for name, value, bound in checks
        )
    return VerificationReport(records, precision_bits)


def wprime_monotonicity_check(
    x_grid: typing.Sequence[RealLike] = ("0.1", "0.3", "0.5", "0.7", "0.9"),
    y_grid: typing.Sequence[RealLike] = ("0.05", "0.16", "0.3", "0.44", "0.6"),
    ell_grid: typing.Sequence[RealLike] | None = None,
    ell2: RealLike = 2,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> VerificationReport:
    """Scan W'(x, y, ell, ell2) for increase in ell over (1, 2].

    The default y grid stays below 1/sqrt(e). One record per (x, y) pair;
    ``lhs`` is the largest decrease found between neighbouring ell.
    """
    if ell_grid is None:
        ell_grid = [f"{1 + k / 20:.2f}" for k in range(1, 21)]
    records = []
    with mpmath.workprec(precision_bits):
        limit = 1 / mpmath.sqrt(mpmath.e)
        for i, x in enumerate(x_grid):
            for j, y in enumerate(y_grid):
                if as_mpf(y) >= limit:
                    raise DomainError(f"y={y} is not below 1/sqrt(e).")
                values = [wprime(x, y, ell, ell2, precision_bits) for ell in ell_grid]
                drop = max(
                    (earlier - later for earlier, later in zip(values, values[1:])),
                    default=mpmath.mpf(0),
                )
                records.append(
                    CheckRecord(
                        check="wprime-monotone",
                        level=0,
                        lhs=drop,
                        rhs=mpmath.mpf(0),
                        slack=-drop,
                        passed=bool(drop < 0),
                        hard=True,
                        index=i * len(y_grid) + j,
                        note=f"x={x}, y={y}",
                    )
                )
    return VerificationReport(tuple(records), precision_bits)


@dataclasses.dataclass(frozen=True)
class GeometryVerdict:
    """Classification of the geometry of one (rotation number, exponents)
    point.

    Attributes
    ----------
    region : `Region`
        Degenerate, Bounded, Critical or Unknown.
    basis : `Basis`
        What the verdict rests on.
    lambda_u, lambda_s : `BigReal` or `None`
        Eigenvalues, present for bi-periodic rotation numbers with both
        exponents above 1.
    cf : `str`
        Rotation number in command line notation.
    ell1, ell2 : `mpmath.mpf`
        Exponents.
    note : `str`
        Remarks about boundary cases.
    evidence : `dict`
        Summary of a computed ratio series, if one was supplied.
    """

    region: Region
    basis: Basis
    lambda_u: BigReal | None
    lambda_s: BigReal | None
    cf: str
    ell1: mpmath.mpf
    ell2: mpmath.mpf
    note: str = ""
    evidence: typing.Dict[str, typing.Any] = dataclasses.field(default_factory=dict)

    def to_dict(
        self, precision_bits: int = DEFAULT_PRECISION_BITS
    ) -> typing.Dict[str, typing.Any]:
        def dec(value: BigReal | None) -> str | None:
            return None if value is None else value.to_decimal()

        return {
            "region": self.region.value,
            "basis": self.basis.value,
            "lambda_u": dec(self.lambda_u),
            "lambda_s": dec(self.lambda_s),
            "cf": self.cf,
            "ell1": BigReal(self.ell1, precision_bits).to_decimal(),
            "ell2": BigReal(self.ell2, precision_bits).to_decimal(),
            "note": self.note,
            "evidence": self.evidence,
        }


def series_evidence(series: RatioSeries) -> typing.Dict[str, typing.Any]:
    """Compact summary of alpha_n for a verdict."""
    alphas = series.alphas()
    return {
        "levels": [series.first, series.last],
        "alpha_min": mpmath.nstr(min(alphas), 10),
        "alpha_max": mpmath.nstr(max(alphas), 10),
        "alpha_last": mpmath.nstr(alphas[-1], 10),
    }


def classify_point(
    cf: ContinuedFraction,
    ell1: RealLike,
    ell2: RealLike,
    tol: float = CRITICAL_TOLERANCE,
    series: RatioSeries | None = None,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> GeometryVerdict:
    """Classify the geometry from the exponents and the rotation number.

    Theorem regions are checked first, then the eigenvalue criterion for
    bi-periodic rotation numbers. Anything else is Unknown, with the
    series summary attached when one is given.
    """
    with mpmath.workprec(precision_bits):
        l1, l2 = as_mpf(ell1), as_mpf(ell2)
        if l1 < 1 or l2 < 1:
            raise DomainError(f"Exponents ({l1}, {l2}) must be at least 1.")
        lambda_s = lambda_u = None
        pair = cf.biperiodic_pair()
        if pair is not None and l1 > 1 and l2 > 1:
            lambda_s, lambda_u = biperiodic_eigen(
                pair[0], pair[1], l1, l2, precision_bits
            )
        evidence = series_evidence(series) if series is not None else {}

        def verdict(region: Region, basis: Basis, note: str = "") -> GeometryVerdict:
            return GeometryVerdict(
                region=region,
                basis=basis,
                lambda_u=lambda_u,
                lambda_s=lambda_s,
                cf=cf.spec,
                ell1=l1,
                ell2=l2,
                note=note,
                evidence=evidence,
            )

        if l1 == 2 and l2 == 2:
            return verdict(
                Region.CRITICAL,
                Basis.THEOREM_REGION,
                "(2, 2) closes the degenerate region and lies on lambda_u = 1",
            )
        if lambda_u is not None and abs(lambda_u.value - 1) <= tol:
            return verdict(Region.CRITICAL, Basis.LAMBDA_CRITERION)
        if l1 <= 2 and l2 <= 2:
            return verdict(
                Region.DEGENERATE,
                Basis.THEOREM_REGION,
                "assumes negative Schwarzian off U",
            )
        if l1 == 1 or l2 == 1:
            return verdict(
                Region.DEGENERATE, Basis.THEOREM_REGION, "one sided critical exponent"
            )
        # Finite and eventually periodic expansions have bounded quotients.
        if l1 >= 2 and l2 >= 2:
            return verdict(Region.BOUNDED, Basis.THEOREM_REGION)
        if lambda_u is not None and lambda_u.value < 1 - tol:
            return verdict(Region.BOUNDED, Basis.LAMBDA_CRITERION)
        if lambda_u is not None:
            return verdict(
                Region.UNKNOWN,
                Basis.LAMBDA_CRITERION,
                "lambda_u > 1 outside [1, 2]^2; degeneracy unproved",
            )
        return verdict(Region.UNKNOWN, Basis.EMPIRICAL_ONLY)
