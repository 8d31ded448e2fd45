"""Kobayashi metric of ``{|z1|^2 + |z2|^(2m) < 1}`` for ``0 < m < 1/2``.

A query ``(p; w)`` is first moved by an ellipsoid automorphism to the base
point ``(0, b)`` with ``b >= 0`` and both tangent components rotated onto
the nonnegative reals.  The value then follows from closed forms in three
degenerate cases and from two branch formulas, ``kappa1`` and ``kappa2``,
in the generic case.
"""

from __future__ import annotations

import cmath
import math
import os
from dataclasses import dataclass
from typing import Optional

from .errors import DomainError, InternalError
from .scalar import EllipsoidParam, _pow, gauge, one_minus_pow, solve_x1, t_of_v

TIE_TOL_ENV = "KOBAYASHI_ELLIPSOID_TIE_TOL"
DEFAULT_TIE_TOL = 1e-12

BRANCHES = ("zero-vector", "origin-gauge", "X-zero", "Y-zero", "kappa1", "kappa2", "tie")


def default_tie_tol() -> float:
    raw = os.environ.get(TIE_TOL_ENV)
    if raw is None:
        return DEFAULT_TIE_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise DomainError(f"{TIE_TOL_ENV}={raw!r} is not a number") from None
    if not tol >= 0.0:
        raise DomainError(f"{TIE_TOL_ENV} must be nonnegative, got {raw!r}")
    return tol


@dataclass(frozen=True)
class Point:
    z1: complex
    z2: complex


@dataclass(frozen=True)
class TangentVector:
    X: complex
    Y: complex

    def scaled(self, c: complex) -> "TangentVector":
        return TangentVector(c * self.X, c * self.Y)

    def is_zero(self) -> bool:
        return self.X == 0 and self.Y == 0


@dataclass(frozen=True)
class NormalizedQuery:
    """Canonical query: base point ``(0, b)`` and tangent ``(xmag, ymag)``."""

    b: float
    xmag: float
    ymag: float
    v: Optional[float]


@dataclass(frozen=True)
class MetricValue:
    kappa: float
    branch: str
    b: Optional[float] = None
    v: Optional[float] = None
    t: Optional[float] = None
    x: Optional[float] = None
    v0: Optional[float] = None

    def scaled(self, c: float) -> "MetricValue":
        return MetricValue(c * self.kappa, self.branch, self.b, self.v, self.t, self.x, self.v0)


def defining_value(param: EllipsoidParam, p: Point) -> float:
    """``|z1|^2 + |z2|^(2m)``; the point is interior iff this is below 1."""
    r2 = abs(p.z2)
    return abs(p.z1) ** 2 + (_pow(r2, 2 * param.m) if r2 > 0 else 0.0)


def apply_automorphism(
    param: EllipsoidParam, a: complex, theta: float, p: Point, w: TangentVector
) -> tuple[Point, TangentVector]:
    """Push ``(p; w)`` forward by the automorphism with parameters ``a in E``, ``theta``.

    ``(z1, z2) -> ((z1 - a)/(1 - conj(a) z1), e^{i theta} (1-|a|^2)^{1/(2m)} z2 / (1 - conj(a) z1)^{1/m})``
    with the principal branch; ``1 - conj(a) z1`` has positive real part.
    """
    if abs(a) >= 1.0:
        raise DomainError(f"automorphism parameter must lie in the unit disc, got {a!r}")
    m = param.m
    ac = a.conjugate()
    d = 1.0 - ac * p.z1
    s = 1.0 - abs(a) ** 2
    rot = cmath.exp(1j * theta) * s ** (1.0 / (2 * m))
    d_pow = cmath.exp(-cmath.log(d) / m)  # d^(-1/m)
    z1n = (p.z1 - a) / d
    z2n = rot * p.z2 * d_pow
    Xn = s / d**2 * w.X
    Yn = rot * d_pow * (w.Y + p.z2 * (ac / m) / d * w.X)
    return Point(z1n, z2n), TangentVector(Xn, Yn)


def normalize(param: EllipsoidParam, p: Point, w: TangentVector) -> NormalizedQuery:
    """Reduce ``(p; w)`` to base point ``(0, b)`` with real nonnegative tangent components."""
    h = defining_value(param, p)
    if not h < 1.0:
        raise DomainError(
            f"base point is not interior: |z1|^2 + |z2|^(2m) = {h!r} >= 1"
        )
    m = param.m
    s = 1.0 - abs(p.z1) ** 2
    scale2 = s ** (-1.0 / (2 * m))
    b = abs(p.z2) * scale2
    X = w.X / s
    Y = scale2 * (w.Y + p.z2 * p.z1.conjugate() * w.X / (m * s))
    xmag, ymag = abs(X), abs(Y)
    v = None
    if ymag > 0 and b > 0:
        r = (b / m) * (xmag / ymag)
        v = r * r  # may be inf; the dispatcher never squares it again

    return NormalizedQuery(b, xmag, ymag, v)


def _kappa1_detail(param: EllipsoidParam, b: float, v: float) -> tuple[float, float, float]:
    m = param.m
    if not (0.0 <= v <= param.vmax * (1.0 + 1e-14)):
        raise DomainError(f"kappa1 needs 0 <= v <= vmax = {param.vmax!r}, got {v!r}")
    t = t_of_v(param, v)
    x = solve_x1(param, b, t)
    B = _pow(b, 2 * m)
    # numerator and denominator divided by x^(2m-2)
    denom = (1.0 - m) * x * x + m - B * _pow(x, 2.0 - 2 * m)
    if not denom > 0.0:
        raise InternalError(f"kappa1 denominator {denom!r} is not positive (b={b!r}, v={v!r})")
    return m * (x / b) / denom, t, x


def kappa1(param: EllipsoidParam, b: float, v: float) -> float:
    """Branch formula attained by the Blaschke-factor discs; valid for ``0 <= v <= vmax``."""
    return _kappa1_detail(param, b, v)[0]


def kappa2(param: EllipsoidParam, b: float, v: float) -> float:
    """Branch formula attained by the zero-free discs; defined for every ``v >= 0``."""
    if not (0.0 < b < 1.0):
        raise DomainError(f"b must lie in (0, 1), got {b!r}")
    if v < 0.0:
        raise DomainError(f"v must be nonnegative, got {v!r}")
    m = param.m
    B, C = _pow(b, 2 * m), one_minus_pow(b, 2 * m)
    return (m / b) * math.sqrt(C * v + B) / C


def kappa_reduced(
    param: EllipsoidParam, b: float, v: float, tie_tol: Optional[float] = None
) -> MetricValue:
    """Metric at ``(0, b)`` for the tangent ``(m sqrt(v)/b, 1)``."""
    if tie_tol is None:
        tie_tol = default_tie_tol()
    if not (0.0 < b < 1.0):
        raise DomainError(f"b must lie in (0, 1), got {b!r}")
    if not v >= 0.0:
        raise DomainError(f"v must be nonnegative, got {v!r}")
    if v <= 1.0:
        k1, t, x = _kappa1_detail(param, b, v)
        return MetricValue(k1, "kappa1", b=b, v=v, t=t, x=x)
    if v >= param.vmax:
        return MetricValue(kappa2(param, b, v), "kappa2", b=b, v=v)
    k1, t, x = _kappa1_detail(param, b, v)
    k2 = kappa2(param, b, v)
    if abs(k1 - k2) <= tie_tol * k2:
        return MetricValue(min(k1, k2), "tie", b=b, v=v, t=t, x=x)
    if k1 < k2:
        return MetricValue(k1, "kappa1", b=b, v=v, t=t, x=x)
    return MetricValue(k2, "kappa2", b=b, v=v, t=t, x=x)


def kappa_normalized(
    param: EllipsoidParam, q: NormalizedQuery, tie_tol: Optional[float] = None
) -> MetricValue:
    b, xmag, ymag = q.b, q.xmag, q.ymag
    if xmag == 0.0 and ymag == 0.0:
        return MetricValue(0.0, "zero-vector", b=b)
    if b == 0.0:
        return MetricValue(gauge(param, xmag, ymag), "origin-gauge", b=b)
    if xmag == 0.0:
        return MetricValue(ymag / (1.0 - b * b), "X-zero", b=b)
    if ymag == 0.0:
        return MetricValue(xmag / math.sqrt(one_minus_pow(b, 2 * param.m)), "Y-zero", b=b)
    if q.v >= param.vmax:
        # kappa2 times ymag, arranged so that huge v cannot overflow
        B, C = _pow(b, 2 * param.m), one_minus_pow(b, 2 * param.m)
        k = math.hypot(math.sqrt(C) * xmag, math.sqrt(B) * param.m * ymag / b) / C
        return MetricValue(k, "kappa2", b=b, v=q.v)
    return kappa_reduced(param, b, q.v, tie_tol).scaled(ymag)


def kappa(
    param: EllipsoidParam, p: Point, w: TangentVector, tie_tol: Optional[float] = None
) -> MetricValue:
    """Kobayashi metric ``kappa(p; w)``, tagged with the branch that produced it."""
    q = normalize(param, p, w)
    return kappa_normalized(param, q, tie_tol)
