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
    "bisect_root",
    "inv_reg_inc_beta",
    "inverse_regularized_beta",
    "reg_inc_beta",
    "regularized_beta",
    "regularized_beta_complement",
]

import typing

import mpmath

from ..errors import BracketError, DomainError
from .big_real import BigReal, RealLike, as_mpf, precision_of


def bisect_root(
    g: typing.Callable[[mpmath.mpf], mpmath.mpf],
    lo: BigReal,
    hi: BigReal,
    tol: RealLike,
) -> BigReal:
    """Find a sign change of a monotone function by plain bisection.

    Parameters
    ----------
    g : `Callable`
        Monotone function of one `mpmath.mpf` argument. It is called at the
        working precision of the bracket.
    lo, hi : `BigReal`
        Bracket ends.
    tol : `BigReal` or number
        Target width of the final bracket; must be positive.

    Returns
    -------
    `BigReal`
        A bracket end where ``g`` vanishes, or the midpoint of the final
        bracket.

    Raises
    ------
    BracketError
        If ``g`` has the same nonzero sign at both ends.
    """
    precision_bits = precision_of(lo, hi)
    with mpmath.workprec(precision_bits):
        tolerance = as_mpf(tol)
        if tolerance <= 0:
            raise DomainError(f"Tolerance {tolerance} must be positive.")
        a, b = lo.value, hi.value
        if a > b:
            a, b = b, a
        ga = g(a)
        if ga == 0:
            return BigReal(a, precision_bits)
        gb = g(b)
        if gb == 0:
            return BigReal(b, precision_bits)
        if mpmath.sign(ga) == mpmath.sign(gb):
            raise BracketError(f"No sign change of g on [{a}, {b}].")
        while b - a > tolerance:
            mid = (a + b) / 2
            if mid <= a or mid >= b:
                break
            gm = g(mid)
            if gm == 0:
                return BigReal(mid, precision_bits)
            if mpmath.sign(gm) == mpmath.sign(ga):
                a, ga = mid, gm
            else:
                b = mid
        return BigReal((a + b) / 2, precision_bits)


def regularized_beta(x: mpmath.mpf, p: mpmath.mpf, q: mpmath.mpf) -> mpmath.mpf:
    """I_x(p, q) at the current working precision.

    Values above the mean p/(p+q) go through I_x(p,q) = 1 - I_{1-x}(q,p),
    which keeps the series short near both endpoints.
    """
    if x <= 0:
        return mpmath.mpf(0)
    if x >= 1:
        return mpmath.mpf(1)
    if x > p / (p + q):
        return 1 - mpmath.betainc(q, p, 0, 1 - x, regularized=True)
    return mpmath.betainc(p, q, 0, x, regularized=True)


def regularized_beta_complement(
    x: mpmath.mpf, p: mpmath.mpf, q: mpmath.mpf
) -> mpmath.mpf:
    """1 - I_x(p, q), accurate when the result is tiny."""
    if x <= 0:
        return mpmath.mpf(1)
    if x >= 1:
        return mpmath.mpf(0)
    if x > p / (p + q):
        return mpmath.betainc(q, p, 0, 1 - x, regularized=True)
    return 1 - mpmath.betainc(p, q, 0, x, regularized=True)


def _inverse_lower_half(
    y: mpmath.mpf, p: mpmath.mpf, q: mpmath.mpf, rel_tol: mpmath.mpf
) -> mpmath.mpf:
    # Newton steps kept inside a shrinking bisection bracket.
    beta = mpmath.beta(p, q)
    lo, hi = mpmath.mpf(0), mpmath.mpf(1)
    x = (y * p * beta) ** (1 / p)
    if not 0 < x < 1:
        x = mpmath.mpf(0.5)
    for _ in range(4 * mpmath.mp.prec):
        residual = regularized_beta(x, p, q) - y
        if residual == 0:
            return x
        if residual > 0:
            hi = x
        else:
            lo = x
        slope = x ** (p - 1) * (1 - x) ** (q - 1) / beta
        candidate = x - residual / slope if slope > 0 else lo - 1
        if not lo < candidate < hi:
            candidate = (lo + hi) / 2
        if abs(candidate - x) <= rel_tol * candidate or hi - lo <= rel_tol * hi:
            return candidate
        x = candidate
    return (lo + hi) / 2


def inverse_regularized_beta(
    y: mpmath.mpf, p: mpmath.mpf, q: mpmath.mpf, rel_tol: mpmath.mpf | None = None
) -> mpmath.mpf:
    """Solve I_x(p, q) = y for x at the current working precision.

    Newton steps on I_x are taken inside a bisection bracket [lo, hi] that
    shrinks on every evaluation; a step leaving the bracket is replaced by
    the midpoint. Targets above 1/2 are solved on the mirrored side so
    that the small quantity 1 - x is resolved to relative accuracy.
    """
    if y <= 0:
        return mpmath.mpf(0)
    if y >= 1:
        return mpmath.mpf(1)
    if p == 1 and q == 1:
        return y
    if rel_tol is None:
        rel_tol = mpmath.ldexp(1, -mpmath.mp.prec + 16)
    if y > 0.5:
        return 1 - _inverse_lower_half(1 - y, q, p, rel_tol)
    return _inverse_lower_half(y, p, q, rel_tol)


def _check_shape(p: mpmath.mpf, q: mpmath.mpf) -> None:
    if p <= 0 or q <= 0:
        raise DomainError(f"Beta parameters p={p}, q={q} must be positive.")


def reg_inc_beta(x: BigReal, p: RealLike, q: RealLike) -> BigReal:
    """Regularized incomplete beta function I_x(p, q).

    Parameters
    ----------
    x : `BigReal`
        Argument in [0, 1]; its precision sets the working precision.
    p, q : `BigReal` or number
        Positive shape parameters.

    Returns
    -------
    `BigReal`
        The value of I_x(p, q).

    Raises
    ------
    DomainError
        If ``x`` is outside [0, 1] or a shape parameter is not positive.
    """
    precision_bits = x.precision_bits
    with mpmath.workprec(precision_bits):
        xv, pv, qv = x.value, as_mpf(p), as_mpf(q)
        if not 0 <= xv <= 1:
            raise DomainError(f"reg_inc_beta argument {xv} is outside [0, 1].")
        _check_shape(pv, qv)
        return BigReal(regularized_beta(xv, pv, qv), precision_bits)


def inv_reg_inc_beta(y: BigReal, p: RealLike, q: RealLike) -> BigReal:
    """Inverse of `reg_inc_beta` in its first argument.

    The result x satisfies I_x(p, q) = y to 2^(-precision_bits + 16). It
    is found by Newton steps safeguarded by a bisection bracket; see
    `inverse_regularized_beta`.

    Raises
    ------
    DomainError
        If ``y`` is outside [0, 1] or a shape parameter is not positive.
    """
    precision_bits = y.precision_bits
    with mpmath.workprec(precision_bits):
        yv, pv, qv = y.value, as_mpf(p), as_mpf(q)
        if not 0 <= yv <= 1:
            raise DomainError(f"inv_reg_inc_beta argument {yv} is outside [0, 1].")
        _check_shape(pv, qv)
        return BigReal(inverse_regularized_beta(yv, pv, qv), precision_bits)
