"""Scalar building blocks: bracketed roots, the gauge, and the t/v/x reductions.

Everything here is a pure function of floats.  Fractional powers are taken
as ``exp(p * log(x))`` on strictly positive reals only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InternalError

# Discriminant band treated as exactly zero at v = vmax.
DISC_CLAMP = 1e-14
BISECT_WIDTH = 1e-13
X0_SCAN_POINTS = 1024


def _pow(x: float, p: float) -> float:
    return math.exp(p * math.log(x))


def one_minus_pow(x: float, p: float) -> float:
    """``1 - x^p`` without cancellation for ``x`` near 1."""
    return -math.expm1(p * math.log(x))


@dataclass(frozen=True)
class EllipsoidParam:
    """The exponent ``m`` of ``{|z1|^2 + |z2|^(2m) < 1}`` with its derived constants."""

    m: float

    def __post_init__(self):
        if not (0.0 < self.m < 0.5):
            raise DomainError(f"exponent m must satisfy 0 < m < 1/2, got {self.m!r}")

    @property
    def vmax(self) -> float:
        return 1.0 / (4.0 * self.m * (1.0 - self.m))

    @property
    def tmax(self) -> float:
        return self.m / (1.0 - self.m)

    @property
    def tmin(self) -> float:
        """Value of t at v = 1."""
        return (self.m / (1.0 - self.m)) ** 2


def bisect_newton(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    fprime: Optional[Callable[[float], float]] = None,
    *,
    xtol: float = BISECT_WIDTH,
    max_polish: int = 5,
) -> float:
    """Root of ``f`` on ``[lo, hi]`` given a sign change.

    Bisects until the bracket is narrower than ``xtol`` and then takes up to
    ``max_polish`` Newton steps, each accepted only if it stays in the final
    bracket and lowers ``|f|``.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0.0) == (fhi > 0.0) or math.isnan(flo) or math.isnan(fhi):
        raise InternalError(f"no sign change on [{lo!r}, {hi!r}]: f = ({flo!r}, {fhi!r})")
    lo_sign = flo > 0.0
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == lo_sign:
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    x, fx = (lo, flo) if abs(flo) <= abs(fhi) else (hi, fhi)
    if fprime is None:
        return x
    for _ in range(max_polish):
        d = fprime(x)
        if not math.isfinite(d) or abs(d) < 1e-300:
            break
        xn = x - fx / d
        if not (lo <= xn <= hi):
            break
        fn = f(xn)
        if abs(fn) >= abs(fx):
            break
        x, fx = xn, fn
        if fx == 0.0:
            break
    return x


def gauge(param: EllipsoidParam, xmag: float, ymag: float) -> float:
    """Minkowski function of the ellipsoid at ``(xmag, ymag)``.

    The unique ``s > 0`` with ``(xmag/s)^2 + (ymag/s)^(2m) = 1``.
    """
    xmag, ymag = abs(xmag), abs(ymag)
    if xmag == 0.0 and ymag == 0.0:
        raise DomainError("gauge of the zero vector is undefined")
    if ymag == 0.0:
        return xmag
    if xmag == 0.0:
        return ymag
    m = param.m
    scale = max(xmag, ymag)
    p, q = xmag / scale, ymag / scale

    def qterm(s):
        # q / s may underflow for subnormal q
        r = q / s
        return _pow(r, 2 * m) if r > 0.0 else 0.0

    def f(s):
        return (p / s) ** 2 + qterm(s) - 1.0

    def df(s):
        return -2.0 * p * p / s**3 - 2 * m * qterm(s) / s

    # f(1) >= 0, and each term is <= 1/2 at the upper end
    hi = max(math.sqrt(2.0) * p, q * 2.0 ** (1.0 / (2 * m)), 1.0)
    return scale * bisect_newton(f, 1.0, hi, df, xtol=1e-15 * hi)


def t_of_v(param: EllipsoidParam, v: float) -> float:
    """Reparametrise ``v in [0, vmax]`` onto ``t in [0, tmax]`` (increasing)."""
    m = param.m
    if v < 0.0:
        raise DomainError(f"v must be nonnegative, got {v!r}")
    disc = 1.0 - 4.0 * m * (1.0 - m) * v
    if disc < 0.0:
        if disc > -DISC_CLAMP:
            disc = 0.0
        else:
            raise DomainError(f"v = {v!r} exceeds vmax = {param.vmax!r}")
    return 2.0 * m * m * v / (1.0 + 2.0 * m * (m - 1.0) * v + math.sqrt(disc))


def v_of_t(param: EllipsoidParam, t: float) -> float:
    """Inverse of :func:`t_of_v`: ``t / (t(1-m) + m)^2``."""
    m = param.m
    if t < 0.0 or t > param.tmax * (1.0 + 1e-14):
        raise DomainError(f"t = {t!r} outside [0, {param.tmax!r}]")
    return t / (t * (1.0 - m) + m) ** 2


def _check_b(b: float) -> None:
    if not (0.0 < b < 1.0):
        raise DomainError(f"b must lie in (0, 1), got {b!r}")


def residual_x1(param: EllipsoidParam, b: float, t: float, x: float) -> float:
    m = param.m
    return _pow(x, 2 * m) - t * _pow(x, 2 * m - 2) - (1.0 - t) * _pow(b, 2 * m)


def solve_x1(param: EllipsoidParam, b: float, t: float) -> float:
    """The root ``x in [b, 1)`` of ``x^(2m) - t x^(2m-2) - (1-t) b^(2m) = 0``."""
    _check_b(b)
    if t < 0.0 or t > param.tmax * (1.0 + 1e-14):
        raise DomainError(f"t = {t!r} outside [0, {param.tmax!r}]")
    if t == 0.0:
        return b
    m = param.m
    B = _pow(b, 2 * m)

    # multiplied through by x^(2-2m): same sign, no overflow for tiny x, and
    # the first term vanishes exactly at x = b
    def f(x):
        q = _pow(x, 2.0 - 2 * m)
        return q * (_pow(x, 2 * m) - B) - t * (1.0 - B * q)

    def df(x):
        return 2.0 * x - (1.0 - t) * B * (2.0 - 2 * m) * _pow(x, 1.0 - 2 * m)

    x = bisect_newton(f, b, 1.0, df, xtol=BISECT_WIDTH * min(1.0, 16.0 * b))
    scale = x * x + t
    if abs(f(x)) > 1e-12 * scale:
        raise InternalError(f"x-equation residual {f(x)!r} too large at b={b!r}, t={t!r}")
    return x


def x2_of_t(param: EllipsoidParam, b: float, t: float) -> float:
    """Root in ``(b, 1]`` of ``(1-m)^2 t (x^(2m) - B) = m^2 (x^(2m-2) - B)``.

    This is the second factor of the attainment condition written in ``t``
    alone; it is equivalent to the ``v``-form whenever ``v = v_of_t(t)`` and
    stays well conditioned up to ``t = tmax``.
    """
    _check_b(b)
    m = param.m
    if t < param.tmin * (1.0 - 1e-14) or t > param.tmax * (1.0 + 1e-14):
        raise DomainError(f"t = {t!r} outside [{param.tmin!r}, {param.tmax!r}]")
    B = _pow(b, 2 * m)
    c = (1.0 - m) ** 2 * t

    def h(x):
        return c * (_pow(x, 2 * m) - B) - m * m * (_pow(x, 2 * m - 2) - B)

    def dh(x):
        return c * 2 * m * _pow(x, 2 * m - 1) - m * m * (2 * m - 2) * _pow(x, 2 * m - 3)

    # h(1) = (1-B)((1-m)^2 t - m^2) vanishes at v = 1
    if h(1.0) <= 0.0:
        return 1.0
    return bisect_newton(h, b, 1.0, dh)


def residual_x2(param: EllipsoidParam, b: float, v: float, t: float, x: float) -> float:
    m = param.m
    return (
        (m - 1.0) ** 2 * v * _pow(x, 2 * m)
        - (m * m * v / t) * _pow(x, 2 * m - 2)
        + ((1.0 - v) / (1.0 - t)) * _pow(b, 2 * m)
    )


def solve_x2(param: EllipsoidParam, b: float, v: float) -> float:
    """Second attainment root ``x2 in (0, 1]``; exists only for ``1 <= v <= vmax``."""
    if v < 1.0 - 1e-14:
        raise DomainError(f"the second root exists only for v >= 1, got v = {v!r}")
    v = max(v, 1.0)
    t = t_of_v(param, v)
    x = x2_of_t(param, b, t)
    scale = max(1.0, param.m**2 * v / t)
    r = residual_x2(param, b, v, t, x)
    if abs(r) > 1e-10 * scale:
        raise InternalError(f"second root residual {r!r} too large at b={b!r}, v={v!r}")
    return x


@dataclass(frozen=True)
class V0Threshold:
    x0: float
    t0: float
    v0: float


def _x0_polynomial(m: float, B: float):
    """The switch-point equation multiplied by ``x^(4-4m)`` (same roots in (0,1), no poles)."""
    terms = (
        (-1.0 - 2 * m + 2 * m * m + B, 2.0),
        (1.0 + (1.0 - 2 * m) * B, 4.0 - 2 * m),
        (1.0 + (2 * m - 1.0) * B, 2.0 - 2 * m),
        (-((1.0 - m) ** 2), 4.0),
        (-B, 4.0 - 4 * m),
    )
    const = -m * m

    def g(x):
        return const + sum(c * _pow(x, p) for c, p in terms)

    def dg(x):
        return sum(c * p * _pow(x, p - 1) for c, p in terms)

    def g_vec(x):
        x = np.asarray(x, dtype=float)
        return const + sum(c * x**p for c, p in terms)

    return g, dg, g_vec


@lru_cache(maxsize=4096)
def v0_threshold(param: EllipsoidParam, b: float) -> V0Threshold:
    """Locate the switch point ``v0`` where the two branch formulas cross."""
    from .metric import kappa1, kappa2

    _check_b(b)
    m = param.m
    B = _pow(b, 2 * m)
    g, dg, g_vec = _x0_polynomial(m, B)
    u = np.linspace(0.0, 1.0, X0_SCAN_POINTS + 2)[1:-1]
    xs = u ** (1.0 / (2 * m))
    vals = g_vec(xs)
    signs = np.sign(vals)
    idx = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    if len(idx) != 1:
        raise InternalError(
            f"expected exactly one switch-point root in (0,1) for m={m!r}, b={b!r}; "
            f"found {len(idx)} sign changes"
        )
    i = int(idx[0])
    x0 = bisect_newton(g, float(xs[i]), float(xs[i + 1]), dg)
    t0 = (_pow(x0, 2 * m) - B) / (_pow(x0, 2 * m - 2) - B)
    v0 = v_of_t(param, t0)
    if not (1.0 < v0 < param.vmax):
        raise InternalError(f"v0 = {v0!r} outside (1, vmax) for m={m!r}, b={b!r}")
    k1, k2 = kappa1(param, b, v0), kappa2(param, b, v0)
    if abs(k1 - k2) > 1e-8 * k2:
        raise InternalError(f"branches disagree at v0: {k1!r} vs {k2!r}")
    return V0Threshold(x0, t0, v0)
