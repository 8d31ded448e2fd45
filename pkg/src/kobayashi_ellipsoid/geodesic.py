"""Candidate extremal discs and their boundary behaviour.

Two disc shapes are used, both with a vanishing pole-free first component
at the origin::

    zero-free:  (c1 a1 lam / (1 - alpha0 lam),  c2 (a2 (1 - alpha2 lam) / (1 - alpha0 lam))^(1/m))
    Blaschke:   same, second component times (lam - alpha2) / (1 - alpha2 lam)

with real ``a1, a2 >= 0``, real ``alpha0, alpha2`` tied by

    alpha0 = a2^2 alpha2,      1 + alpha0^2 = a1^2 + a2^2 (1 + alpha2^2).

These force ``|phi1|^2 + |phi2|^(2m) = 1`` on the unit circle.  Signs are
chosen so that ``phi(0) = (0, b)`` and ``phi'(0)`` is a positive multiple of
the target tangent ``(xmag, 1)``; the Blaschke zero then sits at
``alpha2 = -x``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

import numpy as np

from .errors import DomainError, InfeasibleError, InternalError
from .metric import kappa1, kappa2
from .scalar import EllipsoidParam, _pow, one_minus_pow, solve_x1, t_of_v, x2_of_t

FORMS = ("zero-free", "blaschke")


@dataclass(frozen=True)
class GeodesicDisc:
    form: str
    m: float
    b: float
    v: Optional[float]
    a1: float
    a2: float
    alpha0: float
    alpha2: float
    x: Optional[float]
    tau: float
    c1: complex = 1.0 + 0.0j
    c2: complex = 1.0 + 0.0j

    def __post_init__(self):
        if self.form not in FORMS:
            raise DomainError(f"unknown disc form {self.form!r}")
        if not -1.0 < self.alpha0 < 1.0:
            raise DomainError(f"alpha0 must lie in (-1, 1), got {self.alpha0!r}")
        limit = 1.0 if self.form == "zero-free" else 1.0 - 1e-300
        if abs(self.alpha2) > limit:
            raise DomainError(f"alpha2 = {self.alpha2!r} outside the admissible range for {self.form}")

    def condition_residuals(self) -> tuple[float, float]:
        """Residuals of the two coefficient relations."""
        r5 = self.alpha0 - self.a2**2 * self.alpha2
        r6 = 1.0 + self.alpha0**2 - self.a1**2 - self.a2**2 * (1.0 + self.alpha2**2)
        return r5, r6

    def derivative_at_zero(self) -> tuple[complex, complex]:
        m = self.m
        base = _pow(self.a2, 1.0 / m)
        inner = (self.alpha0 - self.alpha2) / m
        if self.form == "zero-free":
            d2 = base * inner
        else:
            d2 = base * ((1.0 - self.alpha2**2) - self.alpha2 * inner)
        return self.c1 * self.a1, self.c2 * d2

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["c1"] = [self.c1.real, self.c1.imag]
        rec["c2"] = [self.c2.real, self.c2.imag]
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "GeodesicDisc":
        names = {f.name for f in fields(cls)}
        kw = {k: v for k, v in rec.items() if k in names}
        kw["c1"] = complex(*kw.get("c1", (1.0, 0.0)))
        kw["c2"] = complex(*kw.get("c2", (1.0, 0.0)))
        return cls(**kw)


def eval_disc(d: GeodesicDisc, lam):
    """Evaluate the disc at ``lam`` (scalar or array, ``|lam| <= 1``)."""
    lam = np.asarray(lam, dtype=complex)
    m = d.m
    den = 1.0 - d.alpha0 * lam
    num = 1.0 - d.alpha2 * lam
    phi1 = d.c1 * d.a1 * lam / den
    with np.errstate(divide="ignore", invalid="ignore"):
        # principal branch: numerator and denominator both have Re >= 0
        phi2 = np.exp((math.log(d.a2) + np.log(num) - np.log(den)) / m)
    phi2 = np.where(num == 0, 0.0, phi2)
    if d.form == "blaschke":
        phi2 = phi2 * (lam - d.alpha2) / num
    phi2 = d.c2 * phi2
    if phi1.ndim == 0:
        return complex(phi1), complex(phi2)
    return phi1, phi2


def defining_function(m: float, phi1, phi2):
    """``|z1|^2 + |z2|^(2m)`` elementwise."""
    return np.abs(phi1) ** 2 + np.abs(phi2) ** (2 * m)


def _finish(d: GeodesicDisc) -> GeodesicDisc:
    _, d2 = d.derivative_at_zero()
    return replace(d, tau=1.0 / abs(d2))


def construct_flat(param: EllipsoidParam, b: float, xmag: float = 1.0) -> GeodesicDisc:
    """The disc ``lam -> (sqrt(1 - b^(2m)) lam, b)`` extremal for tangents ``(X, 0)``."""
    if not (0.0 <= b < 1.0):
        raise DomainError(f"b must lie in [0, 1), got {b!r}")
    m = param.m
    a1 = math.sqrt(one_minus_pow(b, 2 * m)) if b > 0 else 1.0
    a2 = _pow(b, m) if b > 0 else 0.0
    if a2 == 0.0:
        raise DomainError("the flat disc through the origin has a vanishing second component")
    return GeodesicDisc("zero-free", m, b, None, a1, a2, 0.0, 0.0, None, xmag / a1)


def construct_zero_free(param: EllipsoidParam, b: float, v: float) -> GeodesicDisc:
    """Zero-free disc through ``(0, b)`` tangent to ``(m sqrt(v)/b, 1)``; exists iff ``v >= 1``."""
    if not (0.0 < b < 1.0):
        raise DomainError(f"b must lie in (0, 1), got {b!r}")
    if v < 1.0:
        raise DomainError(f"a zero-free disc of this form exists iff v >= 1; got v = {v!r}")
    m = param.m
    B = _pow(b, 2 * m)
    s = 1.0 / math.sqrt(v * one_minus_pow(b, 2 * m) + B)
    a2 = _pow(b, m)
    alpha2 = -s
    alpha0 = a2 * a2 * alpha2
    # second coefficient relation, factored using the first
    a1 = math.sqrt((1.0 - a2 * a2) * (1.0 - a2 * a2 * alpha2 * alpha2))
    d = _finish(GeodesicDisc("zero-free", m, b, v, a1, a2, alpha0, alpha2, None, 1.0))
    k2 = kappa2(param, b, v)
    if abs(d.tau - k2) > 1e-8 * k2:
        raise InternalError(f"zero-free disc tau {d.tau!r} disagrees with kappa2 {k2!r}")
    return d


def attainment_residual(param: EllipsoidParam, b: float, v: float, x: float) -> float:
    """Relative residual of the attainment condition for a Blaschke disc with zero ``x``."""
    m = param.m
    B = _pow(b, 2 * m)
    p2m, p2m2, p4m2 = _pow(x, 2 * m), _pow(x, 2 * m - 2), _pow(x, 4 * m - 2)
    lhs = v * ((m - 1.0) * p2m - m * p2m2 + B) ** 2
    rhs = p4m2 - B * p2m - B * p2m2 + B * B
    return (lhs - rhs) / max(1.0, abs(lhs), abs(rhs))


def _blaschke_from_x(param: EllipsoidParam, b: float, x: float, v: Optional[float]) -> GeodesicDisc:
    m = param.m
    a2 = _pow(b / x, m)
    alpha2 = -x
    alpha0 = a2 * a2 * alpha2
    a1sq = (1.0 - a2 * a2) * (1.0 - a2 * a2 * x * x)
    if a1sq < 0.0 or (a1sq == 0.0 and v):
        raise InfeasibleError(f"Blaschke disc infeasible: a1^2 = {a1sq!r} at x = {x!r}")
    return _finish(GeodesicDisc("blaschke", m, b, v, math.sqrt(a1sq), a2, alpha0, alpha2, x, 1.0))


def construct_blaschke(param: EllipsoidParam, b: float, v: float, root: str = "x1") -> GeodesicDisc:
    """Blaschke disc through ``(0, b)`` tangent to ``(m sqrt(v)/b, 1)``, ``0 <= v <= vmax``.

    ``root="x1"`` uses the zero solving the t-equation (the extremal one);
    ``root="x2"`` the competing zero, available for ``1 <= v <= vmax``.
    """
    if not (0.0 < b < 1.0):
        raise DomainError(f"b must lie in (0, 1), got {b!r}")
    if not (0.0 <= v <= param.vmax * (1.0 + 1e-14)):
        raise DomainError(f"a Blaschke disc exists only for 0 <= v <= vmax = {param.vmax!r}")
    t = t_of_v(param, v)
    if root == "x1":
        x = solve_x1(param, b, t)
    elif root == "x2":
        if v < 1.0:
            raise DomainError(f"the second Blaschke zero exists only for v >= 1; got v = {v!r}")
        x = x2_of_t(param, b, t)
        if x >= 1.0:
            raise InfeasibleError("at v = 1 the second zero reaches the unit circle")
    else:
        raise ValueError(f"root must be 'x1' or 'x2', got {root!r}")
    d = _blaschke_from_x(param, b, x, v)
    r18 = attainment_residual(param, b, v, x)
    if abs(r18) > 1e-10:
        raise InternalError(f"attainment residual {r18!r} at x = {x!r}, v = {v!r}")
    if root == "x1" and v > 0:
        k1 = kappa1(param, b, v)
        if abs(d.tau - k1) > 1e-8 * k1:
            raise InternalError(f"Blaschke disc tau {d.tau!r} disagrees with kappa1 {k1!r}")
    return d


@dataclass(frozen=True)
class BoundaryReport:
    samples: int
    max_defect: float
    interior_max: float

    @property
    def ok(self) -> bool:
        return self.interior_max < 1.0


def boundary_report(d: GeodesicDisc, n_samples: int = 256, n_radii: int = 64) -> BoundaryReport:
    """Defect of the boundary trace from the ellipsoid boundary, and the interior maximum."""
    if n_samples < 16:
        raise DomainError(f"need at least 16 boundary samples, got {n_samples}")
    theta = 2.0 * np.pi * np.arange(n_samples) / n_samples
    lam = np.exp(1j * theta)
    h = defining_function(d.m, *eval_disc(d, lam))
    max_defect = float(np.max(np.abs(h - 1.0)))
    radii = np.linspace(0.0, 1.0 - 1e-6, n_radii)
    grid = radii[:, None] * lam[None, :]
    interior = defining_function(d.m, *eval_disc(d, grid))
    return BoundaryReport(n_samples, max_defect, float(np.max(interior)))


def trace(d: GeodesicDisc, n: int):
    """Boundary samples ``(theta, phi1, phi2, defect)`` at ``n`` equally spaced angles."""
    theta = 2.0 * np.pi * np.arange(n) / n
    phi1, phi2 = eval_disc(d, np.exp(1j * theta))
    defect = defining_function(d.m, phi1, phi2) - 1.0
    return theta, phi1, phi2, defect
