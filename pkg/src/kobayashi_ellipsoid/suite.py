"""Property suite cross-validating the formulas, the discs and the search oracle.

Each check returns a :class:`CheckResult` with the worst observed value
next to its tolerance.  :func:`run_suite` runs them all for a
:class:`SuiteConfig`; the output is a pure function of the config, so two
runs with the same seed serialize identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geodesic import (
    GeodesicDisc,
    boundary_report,
    construct_flat,
    construct_zero_free,
    construct_blaschke,
    eval_disc,
)
from .metric import (
    Point,
    TangentVector,
    apply_automorphism,
    defining_value,
    kappa,
    kappa1,
    kappa2,
    kappa_reduced,
)
from .oracle import (
    root_order_margins,
    kink_report,
    one_sided_slopes,
    random_search,
    root_merge_gap,
)
from .errors import VerificationError
from .scalar import EllipsoidParam, gauge, one_minus_pow, v0_threshold

GRID_M = tuple(round(0.05 * k, 2) for k in range(1, 10))
GRID_B = tuple(round(0.1 * k, 1) for k in range(1, 10))
SEARCH_PAIRS = ((0.25, 0.5), (0.05, 0.1), (0.45, 0.9), (0.4, 0.2))
# perturbation injected by the self-test: relative error on the zero-free branch
PERTURB_REL = 1e-6


@dataclass(frozen=True)
class SuiteConfig:
    ms: tuple = GRID_M
    bs: tuple = GRID_B
    search_pairs: tuple = SEARCH_PAIRS
    budget: int = 10_000
    seed: int = 0
    samples: int = 256
    ineq_n: int = 100
    random_n: int = 200
    perturb: bool = False


@dataclass
class CheckResult:
    id: int
    name: str
    passed: bool
    worst: float
    tolerance: float
    checked: int
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = (
            f"[{status}] {self.id:2d} {self.name}: worst={self.worst:.3e} "
            f"tol={self.tolerance:.1e} n={self.checked}"
        )
        return text + (f" ({self.detail})" if self.detail else "")

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "passed": self.passed,
            "worst": self.worst if math.isfinite(self.worst) else None,
            "tolerance": self.tolerance,
            "checked": self.checked,
            "detail": self.detail,
        }


@dataclass
class _Worst:
    """Running maximum of a nonnegative error, remembering where it occurred."""

    value: float = 0.0
    where: str = ""
    count: int = 0
    failures: list = field(default_factory=list)

    def add(self, err: float, where: str, ok: Optional[bool] = None, tol: float = math.inf):
        self.count += 1
        if math.isnan(err):
            err = math.inf
        if err > self.value or not self.where:
            self.value, self.where = err, where
        if ok is None:
            ok = err <= tol
        if not ok:
            self.failures.append(where)

    def result(self, cid: int, name: str, tol: float) -> CheckResult:
        detail = f"worst at {self.where}" if self.where else ""
        if self.failures:
            detail = f"{len(self.failures)} failed, first at {self.failures[0]}"
        return CheckResult(cid, name, not self.failures, self.value, tol, self.count, detail)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


class _Formulas:
    """Formula evaluations used by the suite, optionally with an injected error."""

    def __init__(self, perturb: bool):
        self.scale2 = 1.0 + PERTURB_REL if perturb else 1.0

    def k1(self, param, b, v):
        return kappa1(param, b, v)

    def k2(self, param, b, v):
        return self.scale2 * kappa2(param, b, v)

    def kappa(self, param, b, v):
        rec = kappa_reduced(param, b, v, tie_tol=0.0)
        if rec.branch == "kappa2":
            return self.scale2 * rec.kappa
        return rec.kappa


def _pairs(cfg: SuiteConfig):
    for m in cfg.ms:
        param = EllipsoidParam(m)
        for b in cfg.bs:
            yield param, b


def check_continuity(cfg: SuiteConfig, fx: _Formulas) -> CheckResult:
    tol, delta = 1e-8, 1e-12
    w = _Worst()
    for param, b in _pairs(cfg):
        seams = {"1": 1.0, "v0": v0_threshold(param, b).v0, "vmax": param.vmax}
        for label, s in seams.items():
            mid = fx.kappa(param, b, s)
            for u in (s * (1.0 - delta), s * (1.0 + delta)):
                w.add(_rel(fx.kappa(param, b, u), mid), f"m={param.m}, b={b}, v={label}", tol=tol)
    return w.result(1, "branch continuity at v=1, v0, vmax", tol)


def _bisect_crossing(fx: _Formulas, param: EllipsoidParam, b: float) -> float:
    lo, hi = 1.0, param.vmax

    def g(v):
        return fx.k1(param, b, v) - fx.k2(param, b, v)

    glo = g(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        gm = g(mid)
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def check_crossing(cfg: SuiteConfig, fx: _Formulas) -> CheckResult:
    w = _Worst()
    for param, b in _pairs(cfg):
        v0 = v0_threshold(param, b).v0
        where = f"m={param.m}, b={b}"
        w.add(abs(_bisect_crossing(fx, param, b) - v0), where + " (location)", tol=1e-6)
        w.add(_rel(fx.k1(param, b, v0), fx.k2(param, b, v0)), where + " (equality)", tol=1e-8)
    return w.result(2, "switch point v0 against independent bisection", 1e-6)


def _disc_errors(d: GeodesicDisc, b: float, xmag: float, samples: int) -> tuple[float, float]:
    """Worst of the base point and tangent errors, and the boundary defect."""
    phi1, phi2 = eval_disc(d, 0.0)
    d1, d2 = d.derivative_at_zero()
    err = max(
        abs(phi1),
        abs(phi2 - b),
        abs(d.tau * d1 - xmag) / xmag,
        abs(d.tau * d2 - 1.0),
    )
    rep = boundary_report(d, n_samples=samples, n_radii=8)
    return err, rep.max_defect


def check_attainment(cfg: SuiteConfig, fx: _Formulas) -> CheckResult:
    w = _Worst()
    for param, b in _pairs(cfg):
        m, vmax = param.m, param.vmax
        v0 = v0_threshold(param, b).v0
        cases = [("blaschke", v, fx.k1) for v in (0.5, 1.0, 0.5 * (1.0 + v0), v0, 0.5 * (v0 + vmax))]
        cases += [("zero-free", v, fx.k2) for v in (v0, 0.5 * (v0 + vmax), vmax, 2.0 * vmax)]
        for form, v, branch in cases:
            d = construct_blaschke(param, b, v) if form == "blaschke" else construct_zero_free(param, b, v)
            xmag = m * math.sqrt(v) / b
            err, defect = _disc_errors(d, b, xmag, cfg.samples)
            where = f"{form}, m={m}, b={b}, v={v:.6g}"
            w.add(err / 1e-10, where + " (normalization)", tol=1.0)
            w.add(defect / 1e-8, where + " (boundary defect)", tol=1.0)
            w.add(_rel(d.tau, branch(param, b, v)) / 1e-8, where + " (tau)", tol=1.0)
    return w.result(3, "geodesic attainment (error / tolerance)", 1.0)


def check_search(cfg: SuiteConfig, fx: _Formulas) -> tuple[CheckResult, list]:
    w = _Worst()
    reports = []
    for m, b in cfg.search_pairs:
        param = EllipsoidParam(m)
        v0, vmax = v0_threshold(param, b).v0, param.vmax
        for v in (0.5, 0.5 * (1.0 + v0), v0, 0.5 * (v0 + vmax), 2.0 * vmax):
            rep = random_search(param, b, v, cfg.budget, cfg.seed)
            formula = fx.kappa(param, b, v)
            where = f"m={m}, b={b}, v={v:.6g}"
            # soundness: nothing certified below the formula beyond 1e-6
            w.add(max(0.0, (formula - rep.best_bound) / formula) / 1e-6, where + " (soundness)", tol=1.0)
            geo = rep.geodesic
            if geo is None:
                w.add(math.inf, where + " (geodesic not certified)", ok=False)
            else:
                # the disc attains the formula; certification only shrinks it by the margin
                w.add(_rel(geo["unshrunk"], formula) / 1e-8, where + " (geodesic attains)", tol=1.0)
                w.add(_rel(geo["bound"], formula) / 1e-6, where + " (geodesic certified)", tol=1.0)
            reports.append({"m": m, "b": b, "v": v, **rep.to_record()})
    return w.result(4, "search oracle soundness (error / tolerance)", 1.0), reports


def _seam_free_points(param: EllipsoidParam, v0: float) -> list[float]:
    vmax = param.vmax
    return [0.5, 0.5 * (1.0 + v0), 0.5 * (v0 + vmax), 2.0 * vmax]


def _step_near(v: float, seams: list[float]) -> float:
    gap = min(abs(v - s) for s in seams)
    return min(1e-4, gap / 20.0)


def check_kink(cfg: SuiteConfig, fx: _Formulas) -> tuple[CheckResult, list]:
    w = _Worst()
    reports = []
    for param, b in _pairs(cfg):
        v0 = v0_threshold(param, b).v0
        seams = [1.0, v0, param.vmax]
        where = f"m={param.m}, b={b}"
        step = min(1e-4, (param.vmax - v0) / 20.0, (v0 - 1.0) / 20.0)
        try:
            rep = kink_report(param, b, step)
        except VerificationError as exc:
            w.add(math.inf, where + f" (kink: {exc})", ok=False)
            continue
        reports.append({"m": param.m, "b": b, **rep.to_record()})
        # ratio of noise to gap; the kink needs it below 1/10
        w.add(10.0 * rep.noise / rep.gap, where + " (kink)", tol=1.0)
        for v in _seam_free_points(param, v0):
            left, lerr, right, rerr = one_sided_slopes(param, b, v, _step_near(v, seams))
            noise = lerr + rerr
            w.add(abs(left - right) / noise, where + f" (smooth at v={v:.6g})", tol=1.0)
    return w.result(5, "slope jump at v0, smoothness elsewhere (ratio)", 1.0), reports


def check_two_geodesics(cfg: SuiteConfig, fx: _Formulas) -> CheckResult:
    w = _Worst()
    lam = 0.5 * np.exp(2j * np.pi * np.arange(cfg.samples) / cfg.samples)
    for param, b in _pairs(cfg):
        v0 = v0_threshold(param, b).v0
        dbl, dzf = construct_blaschke(param, b, v0), construct_zero_free(param, b, v0)
        where = f"m={param.m}, b={b}"
        tbl = dbl.tau * fx.k1(param, b, v0) / kappa1(param, b, v0)
        tzf = dzf.tau * fx.k2(param, b, v0) / kappa2(param, b, v0)
        w.add(_rel(tbl, tzf) / 1e-8, where + " (tau)", tol=1.0)
        a1, a2 = eval_disc(dbl, lam)
        c1, c2 = eval_disc(dzf, lam)
        dist = float(np.max(np.hypot(np.abs(a1 - c1), np.abs(a2 - c2))))
        # reported as 1e-3 / distance so that larger is worse, like the others
        w.add(1e-3 / dist, where + " (distinct traces)", ok=dist > 1e-3)
    return w.result(6, "two geodesics at v0 (error / tolerance)", 1.0)


def check_unit_zero(cfg: SuiteConfig, fx: _Formulas) -> CheckResult:
    w = _Worst()
    for param, b in _pairs(cfg):
        d = construct_zero_free(param, b, 1.0)
        gap = (d.tau - fx.k1(param, b, 1.0)) / fx.k1(param, b, 1.0)
        # smallest relative excess, reported as its negative so larger is worse
        w.add(-gap, f"m={param.m}, b={b}", ok=gap > 0.0 and abs(d.alpha2) == 1.0)
    return w.result(7, "zero-free disc at v=1 is not extremal (-excess)", 0.0)


def check_inequality(cfg: SuiteConfig, fx: _Formulas) -> CheckResult:
    w = _Worst()
    for param, b in _pairs(cfg):
        where = f"m={param.m}, b={b}"
        margins = root_order_margins(param, b, cfg.ineq_n)
        lo, hi = param.tmin, param.tmax
        ts = lo + (hi - lo) * np.arange(1, cfg.ineq_n + 1) / (cfg.ineq_n + 1)
        sign_ok = bool(np.all(param.m + ts * (param.m - 1.0) > 0.0))
        w.add(-float(np.min(margins)), where + " (tau3 - tau1)", ok=bool(np.all(margins > 0)) and sign_ok)
        w.add(root_merge_gap(param, b), where + " (root merge)", tol=1e-8)
    return w.result(8, "first root beats second; roots merge at tmax", 1e-8)


def _random_unit_interior(rng: np.random.Generator, param: EllipsoidParam) -> Point:
    while True:
        z = rng.uniform(-1.0, 1.0, 4)
        p = Point(complex(z[0], z[1]), complex(z[2], z[3]))
        if defining_value(param, p) < 0.9:
            return p


def check_limits(cfg: SuiteConfig, fx: _Formulas) -> CheckResult:
    w = _Worst()
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    for param, b in _pairs(cfg):
        where = f"m={param.m}, b={b}"
        w.add(_rel(fx.k1(param, b, 1e-14), 1.0 / (1.0 - b * b)) / 1e-8, where + " (v->0)", tol=1.0)
    for m in cfg.ms:
        param = EllipsoidParam(m)
        for k in range(cfg.random_n):
            xy = rng.uniform(0.0, 2.0, 2)
            c = float(rng.uniform(0.1, 10.0))
            g = gauge(param, *xy)
            w.add(_rel(gauge(param, c * xy[0], c * xy[1]), c * g) / 1e-12, f"m={m} (gauge #{k})", tol=1.0)
            p = _random_unit_interior(rng, param)
            u = rng.normal(size=4)
            wv = TangentVector(complex(u[0], u[1]), complex(u[2], u[3]))
            cz = complex(*rng.normal(size=2))
            base = fx_kappa_point(fx, param, p, wv)
            w.add(
                _rel(fx_kappa_point(fx, param, p, wv.scaled(cz)), abs(cz) * base) / 1e-12,
                f"m={m} (homogeneity #{k})",
                tol=1.0,
            )
            a = _random_unit_interior(rng, param).z1 * 0.9
            theta = float(rng.uniform(0.0, 2.0 * math.pi))
            p2, w2 = apply_automorphism(param, a, theta, p, wv)
            w.add(
                _rel(fx_kappa_point(fx, param, p2, w2), base) / 1e-10,
                f"m={m} (automorphism #{k})",
                tol=1.0,
            )
    return w.result(9, "limits and invariances (error / tolerance)", 1.0)


def fx_kappa_point(fx: _Formulas, param: EllipsoidParam, p: Point, w: TangentVector) -> float:
    rec = kappa(param, p, w, tie_tol=0.0)
    return rec.kappa * (fx.scale2 if rec.branch == "kappa2" else 1.0)


def check_spot_values(cfg: SuiteConfig, fx: _Formulas) -> CheckResult:
    w = _Worst()
    value = kappa(EllipsoidParam(0.25), Point(0j, 0.5 + 0j), TangentVector(0j, 1 + 0j)).kappa
    w.add(abs(value - 4.0 / 3.0), "m=0.25, (0,0.5);(0,1)", ok=value == 4.0 / 3.0)
    for param, b in _pairs(cfg):
        for xr in (0.3, 1.0, 2.5):
            rec = kappa(param, Point(0j, complex(b)), TangentVector(complex(xr), 0j))
            closed = xr / math.sqrt(one_minus_pow(b, 2 * param.m))
            flat = construct_flat(param, b, xr).tau
            w.add(
                max(abs(rec.kappa - closed), abs(rec.kappa - flat)),
                f"m={param.m}, b={b}, X={xr}",
                ok=rec.kappa == closed == flat,
            )
    return w.result(10, "exact spot values", 0.0)


CHECKS: tuple[Callable, ...] = (
    check_continuity,
    check_crossing,
    check_attainment,
    check_search,
    check_kink,
    check_two_geodesics,
    check_unit_zero,
    check_inequality,
    check_limits,
    check_spot_values,
)


@dataclass
class SuiteReport:
    config: SuiteConfig
    results: list
    search: list
    kinks: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_record(self) -> dict:
        cfg = self.config
        return {
            "passed": self.passed,
            "config": {
                "ms": list(cfg.ms),
                "bs": list(cfg.bs),
                "search_pairs": [list(p) for p in cfg.search_pairs],
                "budget": cfg.budget,
                "seed": cfg.seed,
                "samples": cfg.samples,
                "perturb": cfg.perturb,
            },
            "criteria": [r.to_record() for r in self.results],
            "search": self.search,
            "kinks": self.kinks,
        }


def run_check(check: Callable, cfg: SuiteConfig) -> CheckResult:
    """Run a single check and return only its :class:`CheckResult`."""
    out = check(cfg, _Formulas(cfg.perturb))
    return out[0] if isinstance(out, tuple) else out


def run_suite(cfg: SuiteConfig, progress: Optional[Callable[[CheckResult], None]] = None) -> SuiteReport:
    fx = _Formulas(cfg.perturb)
    results, search, kinks = [], [], []
    for check in CHECKS:
        out = check(cfg, fx)
        if check is check_search:
            out, search = out
        elif check is check_kink:
            out, kinks = out
        results.append(out)
        if progress is not None:
            progress(out)
    return SuiteReport(cfg, results, search, kinks)
