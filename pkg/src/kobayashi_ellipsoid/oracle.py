"""Independent numerical checks on the metric formulas.

The upper-bound principle: any holomorphic disc ``psi`` from the unit disc
into the ellipsoid with ``psi(0) = (0, b)`` and ``psi'(0) = s (xmag, ymag)``
shows ``kappa <= 1/s``.  Containment is certified by sampling the defining
function on a circle (it is plurisubharmonic along the disc, so its maximum
over ``|lam| <= rho`` sits on ``|lam| = rho``) and shrinking the disc
radially until the sampled maximum stays below ``1 - CERT_MARGIN``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CertificationError, DomainError, VerificationError
from .geodesic import GeodesicDisc, construct_zero_free, construct_blaschke
from .metric import kappa_reduced
from .scalar import EllipsoidParam, _pow, solve_x1, v0_threshold, v_of_t, x2_of_t

CERT_SAMPLES = 4096
CERT_MARGIN = 1e-9
# (samples, bisection steps); each sample set is a subset of the next
SCREEN_STAGES = ((64, 24), (512, 48))
FINE_ITERS = 64
BLOCK = 128
PRUNE_RTOL = 1e-10
BISECT_RTOL = 1e-14
NEAR_OPTIMAL_KEEP = 8
NEAR_OPTIMAL_RTOL = 1e-6


class _DiscBatch:
    """Vectorised family of discs with ``psi1(0) = 0`` and ``|psi2(0)| = b``.

    ``kind`` selects the parametrisation:

    * ``"rational"``: ``psi1 = A1 lam/(1 - conj(al0) lam)``,
      ``psi2 = B(lam)^r (a2 (1 - conj(al2) lam)/(1 - conj(al0) lam))^(1/m)``
      with ``B`` the Blaschke factor vanishing at ``al2``;
    * ``"power"``: ``psi1 = lam P(lam)``, ``psi2 = (b^m + lam Q(lam))^(1/m)``;
    * ``"poly"``: ``psi1 = lam P(lam)``, ``psi2 = b + lam Q(lam)``.

    Only moduli matter for the bound, because coordinate rotations and disc
    rotations are automorphisms.
    """

    def __init__(self, kind: str, m: float, b: float, **arrays):
        self.kind, self.m, self.b = kind, m, b
        self.arrays = {k: np.asarray(v) for k, v in arrays.items()}

    def __len__(self):
        return len(next(iter(self.arrays.values())))

    def take(self, idx) -> "_DiscBatch":
        return _DiscBatch(self.kind, self.m, self.b, **{k: v[idx] for k, v in self.arrays.items()})

    def derivative_moduli(self) -> tuple[np.ndarray, np.ndarray]:
        a, m = self.arrays, self.m
        if self.kind == "rational":
            base = a["a2"] ** (1.0 / m)
            inner = np.conj(a["al0"] - a["al2"]) / m
            d2 = np.where(
                a["r"], base * ((1.0 - np.abs(a["al2"]) ** 2) - a["al2"] * inner), base * inner
            )
            return np.abs(a["A1"]), np.abs(d2)
        if self.kind == "power":
            return np.abs(a["P"][:, 0]), np.abs(a["Q"][:, 0]) * self.b ** (1.0 - m) / m
        return np.abs(a["P"][:, 0]), np.abs(a["Q"][:, 0])

    def defining_values(self, lam: np.ndarray) -> np.ndarray:
        """``|psi1|^2 + |psi2|^(2m)`` at ``lam`` of shape (n, k); ``inf`` where undefined."""
        a, m = self.arrays, self.m
        if self.kind == "rational":
            den2 = np.abs(1.0 - np.conj(a["al0"])[:, None] * lam) ** 2
            num = 1.0 - np.conj(a["al2"])[:, None] * lam
            h2 = a["a2"][:, None] ** 2 * np.abs(num) ** 2 / den2
            with np.errstate(divide="ignore", invalid="ignore"):
                blaschke = np.abs(lam - a["al2"][:, None]) / np.abs(num)
            h2 = np.where(a["r"][:, None], h2 * blaschke ** (2 * m), h2)
            return np.abs(a["A1"])[:, None] ** 2 * np.abs(lam) ** 2 / den2 + h2
        psi1 = lam * _horner(a["P"], lam)
        w = lam * _horner(a["Q"], lam)
        if self.kind == "power":
            bm = self.b**m
            h = np.abs(psi1) ** 2 + np.abs(bm + w) ** 2
            # a holomorphic 1/m-th root needs bm + w to avoid 0: |w| < bm suffices
            return np.where(np.abs(w) < bm * (1.0 - 1e-12), h, np.inf)
        return np.abs(psi1) ** 2 + np.abs(self.b + w) ** (2 * m)

    def record(self, i: int) -> dict:
        rec = {"kind": self.kind}
        for k, v in self.arrays.items():
            val = v[i]
            if np.iscomplexobj(val):
                val = np.asarray(val).ravel()
                rec[k] = [[float(z.real), float(z.imag)] for z in val] if val.size > 1 else [
                    float(val[0].real),
                    float(val[0].imag),
                ]
            elif np.ndim(val):
                rec[k] = [float(z) for z in np.ravel(val)]
            else:
                rec[k] = val.item()
        return rec


def _horner(coef: np.ndarray, lam: np.ndarray) -> np.ndarray:
    out = np.zeros_like(lam)
    for j in range(coef.shape[1] - 1, -1, -1):
        out = out * lam + coef[:, j][:, None]
    return out


def _max_on_circle(batch: _DiscBatch, rho: np.ndarray, unit: np.ndarray) -> np.ndarray:
    vals = batch.defining_values(rho[:, None] * unit[None, :])
    vals = np.where(np.isnan(vals), np.inf, vals)
    return vals.max(axis=1)


def _shrink(batch: _DiscBatch, samples: int, iters: int, lo=None, hi=None):
    """Bisect per disc for the largest radius whose sampled maximum stays below the target.

    A starting ``lo`` from a sparser stage is re-checked; where it fails the
    bracket is moved below it by geometrically growing steps.  A starting
    ``hi < 1`` is taken as already known to fail, which holds whenever it came
    from a sample set contained in this one.
    """
    n = len(batch)
    unit = np.exp(2j * np.pi * np.arange(samples) / samples)
    target = 1.0 - CERT_MARGIN
    lo = np.zeros(n) if lo is None else np.array(lo, dtype=float)
    hi = np.ones(n) if hi is None else np.array(hi, dtype=float)
    top = hi >= 1.0
    if top.any():
        full = np.zeros(n, dtype=bool)
        full[top] = _max_on_circle(batch.take(top), hi[top], unit) <= target
        lo = np.where(full, hi, lo)
    bad = lo > 0
    if bad.any():
        bad[bad] = ~(_max_on_circle(batch.take(bad), lo[bad], unit) <= target)
    step = 1e-12
    while bad.any():
        hi = np.where(bad, lo, hi)
        lo = np.where(bad, lo * (1.0 - step) if step < 0.5 else 0.0, lo)
        if step >= 0.5:
            break
        retry = bad & (lo > 0)
        bad = np.zeros(n, dtype=bool)
        if retry.any():
            bad[retry] = ~(_max_on_circle(batch.take(retry), lo[retry], unit) <= target)
        step *= 16.0
    for _ in range(iters):
        open_ = hi - lo > BISECT_RTOL * hi
        if not open_.any():
            break
        sub = batch.take(open_)
        mid = 0.5 * (lo[open_] + hi[open_])
        ok = _max_on_circle(sub, mid, unit) <= target
        lo[open_] = np.where(ok, mid, lo[open_])
        hi[open_] = np.where(ok, hi[open_], mid)
    return lo, hi


def _geodesic_batch(m: float, b: float, discs: list[GeodesicDisc]) -> _DiscBatch:
    return _DiscBatch(
        "rational",
        m,
        b,
        A1=np.array([d.c1 * d.a1 for d in discs], dtype=complex),
        a2=np.array([d.a2 for d in discs], dtype=float),
        al2=np.array([d.alpha2 for d in discs], dtype=complex),
        al0=np.array([d.alpha0 for d in discs], dtype=complex),
        r=np.array([d.form == "blaschke" for d in discs], dtype=bool),
    )


def bound_from_candidate(
    param: EllipsoidParam,
    b: float,
    xmag: float,
    disc: GeodesicDisc,
    ymag: float = 1.0,
    samples: int = CERT_SAMPLES,
) -> float:
    """Upper bound on the metric at ``(0, b)`` for ``(xmag, ymag)`` from one disc.

    Raises :class:`CertificationError` if the disc does not pass through
    ``(0, b)`` with a tangent parallel to ``(xmag, ymag)``, or cannot be
    certified to lie inside the ellipsoid.
    """
    p1, p2 = disc.derivative_at_zero()
    if abs(disc.b - b) > 1e-12:
        raise CertificationError(f"candidate passes through (0, {disc.b!r}), not (0, {b!r})")
    if abs(abs(p1) * ymag - abs(p2) * xmag) > 1e-10 * max(abs(p1) * ymag, abs(p2) * xmag, 1e-300):
        raise CertificationError("candidate tangent is not parallel to the target vector")
    batch = _geodesic_batch(param.m, b, [disc])
    lo, _ = _shrink(batch, samples, FINE_ITERS)
    rho = float(lo[0])
    if rho <= 0.0:
        raise CertificationError("containment could not be certified at any radius")
    return math.hypot(xmag, ymag) / (rho * math.hypot(abs(p1), abs(p2)))


@dataclass
class SearchReport:
    best_bound: float
    formula_value: float
    margin: float
    budget: int
    seed: int
    best_candidate: dict
    certified: int = 0
    near_optimal: list = field(default_factory=list)
    geodesic: Optional[dict] = None

    @property
    def sound(self) -> bool:
        return self.margin >= -NEAR_OPTIMAL_RTOL * self.formula_value

    def to_record(self) -> dict:
        return {
            "best_bound": self.best_bound,
            "formula_value": self.formula_value,
            "margin": self.margin,
            "budget": self.budget,
            "seed": self.seed,
            "certified": self.certified,
            "best_candidate": self.best_candidate,
            "near_optimal": self.near_optimal,
            "geodesic": self.geodesic,
        }


def _seed_discs(param: EllipsoidParam, b: float, v: float) -> list[GeodesicDisc]:
    """Exact candidates, the extremal one first."""
    best = kappa_reduced(param, b, v, tie_tol=0.0).branch
    discs = []
    if v <= param.vmax:
        discs.append(construct_blaschke(param, b, v))
    if v >= 1.0:
        dzf = construct_zero_free(param, b, v)
        if best == "kappa2":
            discs.insert(0, dzf)
        else:
            discs.append(dzf)
        if v < param.vmax:
            try:
                discs.append(construct_blaschke(param, b, v, root="x2"))
            except DomainError:
                pass
    return discs


def _random_batches(param: EllipsoidParam, b: float, v: float, seeds, count: int, seed: int):
    """Draw ``count`` random candidates; index ``i`` depends only on ``(seed, i)``."""
    m = param.m
    xmag = m * math.sqrt(v) / b
    gen = np.random.Generator(np.random.Philox(key=seed))
    U = gen.random((count, 4))
    Z = gen.standard_normal((count, 12))
    kinds = np.where(U[:, 0] < 0.5, 0, np.where(U[:, 0] < 0.75, 1, 2))
    out = []

    # perturbed coefficient discs, re-projected onto the coefficient relations
    idx = np.nonzero(kinds == 0)[0]
    if len(idx):
        bases = [(d.form == "blaschke", d.alpha2) for d in seeds] + [(False, -0.5), (True, -0.5 * (1 + b))]
        pick = np.minimum((U[idx, 2] * len(bases)).astype(int), len(bases) - 1)
        r = np.array([bases[k][0] for k in pick], dtype=bool)
        al2 = np.array([bases[k][1] for k in pick], dtype=complex)
        sigma = 10.0 ** (-4.0 + 4.0 * U[idx, 1])
        al2 = al2 + sigma * (Z[idx, 0] + 1j * Z[idx, 1])
        mod = np.abs(al2)
        lo_mod = np.where(r, b * (1.0 + 1e-9), 0.0)
        hi_mod = np.where(r, 1.0 - 1e-9, 1.0)
        new_mod = np.clip(mod, lo_mod, hi_mod)
        al2 = np.where(mod > 0, al2 * new_mod / np.where(mod > 0, mod, 1.0), new_mod)
        a2 = np.where(r, (b / np.maximum(np.abs(al2), 1e-300)) ** m, b**m)
        al0 = a2**2 * al2
        base = a2 ** (1.0 / m)
        inner = np.conj(al0 - al2) / m
        d2 = np.where(r, base * ((1.0 - np.abs(al2) ** 2) - al2 * inner), base * inner)
        A1 = xmag * np.abs(d2) * np.exp(1j * np.pi * U[idx, 3])
        out.append((idx, _DiscBatch("rational", m, b, A1=A1, a2=a2, al2=al2, al0=al0, r=r)))

    # (b^m + lam Q)^(1/m) and plain polynomial discs
    for kind_id, kind in ((1, "power"), (2, "poly")):
        idx = np.nonzero(kinds == kind_id)[0]
        if not len(idx):
            continue
        sigma = 10.0 ** (-2.0 + 2.0 * U[idx, 1])
        zc = Z[idx, 2:8:2] + 1j * Z[idx, 3:9:2]
        wc = Z[idx, 8:12:2] + 1j * Z[idx, 9:12:2]
        ref = b**m if kind == "power" else 1.0 - b
        q1 = ref * (0.05 + 0.95 * U[idx, 2])
        Q = np.empty((len(idx), 3), dtype=complex)
        Q[:, 0] = q1
        Q[:, 1:] = ref * sigma[:, None] * zc[:, :2]
        d2 = q1 * (b ** (1.0 - m) / m if kind == "power" else 1.0)
        p1 = xmag * d2
        P = np.empty((len(idx), 3), dtype=complex)
        P[:, 0] = p1 * np.exp(1j * np.pi * U[idx, 3])
        P[:, 1:] = p1[:, None] * sigma[:, None] * wc
        out.append((idx, _DiscBatch(kind, m, b, P=P, Q=Q)))
    return out


def _refine(batches, gid, jj, sel, lo, hi, samples, iters):
    """Run :func:`_shrink` on the candidates ``sel``, grouped by batch."""
    lo, hi = lo.copy(), hi.copy()
    chunk = max(1, (1 << 21) // samples)
    for g in np.unique(gid[sel]):
        s = sel[gid[sel] == g]
        for start in range(0, len(s), chunk):
            part = s[start : start + chunk]
            lo[part], hi[part] = _shrink(batches[g].take(jj[part]), samples, iters, lo[part], hi[part])
    return lo, hi


def random_search(
    param: EllipsoidParam, b: float, v: float, budget: int = 10_000, seed: int = 0
) -> SearchReport:
    """Search competitor discs for an upper bound below the formula value.

    The first candidates are the exact extremal discs; the rest are random
    perturbations of them and low-degree polynomial discs.  Candidates pass
    through circle samples of increasing density; each sparse stage yields a
    lower bound on the final certified bound, so only candidates that could
    still beat the incumbent (or join the near-optimal list) reach the full
    certification.  The result is deterministic given ``seed``.
    """
    if not (0.0 < b < 1.0):
        raise DomainError(f"b must lie in (0, 1), got {b!r}")
    if not v > 0.0:
        raise DomainError(f"v must be positive, got {v!r}")
    if budget < 1:
        raise DomainError(f"budget must be at least 1, got {budget!r}")
    m = param.m
    xmag = m * math.sqrt(v) / b
    formula = kappa_reduced(param, b, v).kappa
    norm_target = math.hypot(xmag, 1.0)

    seeds = _seed_discs(param, b, v)[:budget]
    n_seeds = len(seeds)
    batches = [_geodesic_batch(m, b, seeds)]
    gid_parts, jj_parts, index_parts = [np.zeros(n_seeds, int)], [np.arange(n_seeds)], [np.arange(n_seeds)]
    if budget > n_seeds:
        for idx, batch in _random_batches(param, b, v, seeds, budget - n_seeds, seed):
            gid_parts.append(np.full(len(idx), len(batches)))
            jj_parts.append(np.arange(len(idx)))
            index_parts.append(idx + n_seeds)
            batches.append(batch)
    gid, jj, index = (np.concatenate(p) for p in (gid_parts, jj_parts, index_parts))
    n = len(index)
    dnorm = np.empty(n)
    for g, batch in enumerate(batches):
        d1, d2 = batch.derivative_moduli()
        dnorm[gid == g] = np.hypot(d1, d2)[jj[gid == g]]

    lo, hi = _refine(batches, gid, jj, np.arange(n), np.zeros(n), np.ones(n), *SCREEN_STAGES[0])
    lower = norm_target / (hi * dnorm)

    state = {"best": math.inf, "rec": None, "certified": 0, "geodesic": None}
    near: list = []

    def threshold():
        # candidates within PRUNE_RTOL of the incumbent cannot change the verdict
        if len(near) >= NEAR_OPTIMAL_KEEP:
            return state["best"] * (1.0 - PRUNE_RTOL)
        return max(state["best"] * (1.0 - PRUNE_RTOL), formula * (1.0 + NEAR_OPTIMAL_RTOL))

    def certify(sel):
        nonlocal lo, hi
        for samples, iters in SCREEN_STAGES[1:]:
            if not len(sel):
                return
            lo, hi = _refine(batches, gid, jj, sel, lo, hi, samples, iters)
            sel = sel[norm_target / (hi[sel] * dnorm[sel]) <= threshold()]
        if not len(sel):
            return
        lo, hi = _refine(batches, gid, jj, sel, lo, hi, CERT_SAMPLES, FINE_ITERS)
        sel = sel[lo[sel] > 0.0]
        bounds = norm_target / (lo[sel] * dnorm[sel])
        for k in np.lexsort((index[sel], bounds)):
            i, bound = int(sel[k]), float(bounds[k])
            state["certified"] += 1
            rec = {
                "index": int(index[i]),
                "bound": bound,
                "rho": float(lo[i]),
                "unshrunk": float(norm_target / dnorm[i]),
            }
            rec.update(batches[gid[i]].record(int(jj[i])))
            if bound <= formula * (1.0 + NEAR_OPTIMAL_RTOL) and len(near) < NEAR_OPTIMAL_KEEP:
                near.append(rec)
            if bound < state["best"]:
                state["best"], state["rec"] = bound, rec
            if rec["index"] == 0:
                state["geodesic"] = rec

    certify(np.arange(n_seeds))
    order = np.lexsort((index, lower))
    order = order[index[order] >= n_seeds]
    for start in range(0, len(order), BLOCK):
        blk = order[start : start + BLOCK]
        if lower[blk[0]] > threshold():
            break
        certify(blk[lower[blk] <= threshold()])

    if state["rec"] is None:
        raise CertificationError(
            f"no candidate certified for m={m!r}, b={b!r}, v={v!r} with budget {budget}"
        )
    near.sort(key=lambda r: (r["bound"], r["index"]))
    best = state["best"]
    return SearchReport(
        best, formula, best - formula, budget, seed, state["rec"], state["certified"], near, state["geodesic"]
    )


@dataclass(frozen=True)
class KinkReport:
    v0: float
    left_slope: float
    right_slope: float
    step: float
    left_err: float
    right_err: float

    @property
    def gap(self) -> float:
        return abs(self.left_slope - self.right_slope)

    @property
    def noise(self) -> float:
        return self.left_err + self.right_err

    def to_record(self) -> dict:
        return {
            "v0": self.v0,
            "left_slope": self.left_slope,
            "right_slope": self.right_slope,
            "step": self.step,
            "left_err": self.left_err,
            "right_err": self.right_err,
        }


def one_sided_slopes(param: EllipsoidParam, b: float, v: float, step: float):
    """Richardson-extrapolated one-sided slopes of ``v -> kappa(v)`` with error estimates.

    Returns ``(left, left_err, right, right_err)``.
    """

    def f(u):
        return kappa_reduced(param, b, u, tie_tol=0.0).kappa

    f0 = f(v)
    left_h = (f0 - f(v - step)) / step
    left_h2 = (f0 - f(v - step / 2)) / (step / 2)
    right_h = (f(v + step) - f0) / step
    right_h2 = (f(v + step / 2) - f0) / (step / 2)
    # evaluation noise of roughly 1e-13 relative, amplified by 1/h
    floor = 4e-13 * abs(f0) / step
    left = 2.0 * left_h2 - left_h
    right = 2.0 * right_h2 - right_h
    return left, abs(left_h2 - left_h) + floor, right, abs(right_h2 - right_h) + floor


def kink_report(param: EllipsoidParam, b: float, step: float = 1e-4) -> KinkReport:
    """Measure the jump in slope of ``v -> kappa(v)`` at the switch point ``v0``."""
    if not (1e-6 < step < 1e-2):
        raise DomainError(f"step must lie in (1e-6, 1e-2), got {step!r}")
    v0 = v0_threshold(param, b).v0
    left, lerr, right, rerr = one_sided_slopes(param, b, v0, step)
    rep = KinkReport(v0, left, right, step, lerr, rerr)
    if not rep.gap > 10.0 * rep.noise:
        raise VerificationError(
            f"no slope jump at v0={v0!r}: left {left!r}, right {right!r}, noise {rep.noise!r}"
        )
    return rep


def tau1_t(param: EllipsoidParam, b: float, t: float) -> float:
    """Blaschke-disc value along the first root, as a function of ``t``."""
    m = param.m
    B = _pow(b, 2 * m)
    x1 = solve_x1(param, b, t)
    return (m / b) * _pow(x1, 2 * m - 1) / ((_pow(x1, 2 * m - 2) - B) * ((1.0 - m) * t + m))


def tau2_t(param: EllipsoidParam, b: float, t: float) -> float:
    m = param.m
    B = _pow(b, 2 * m)
    s = t * (1.0 - m) + m
    return (m / b) * math.sqrt((1.0 - B) * t + s * s * B) / ((1.0 - B) * s)


def tau3_t(param: EllipsoidParam, b: float, t: float) -> float:
    """Blaschke-disc value along the second root, as a function of ``t``."""
    m = param.m
    B = _pow(b, 2 * m)
    x2 = x2_of_t(param, b, t)
    return (
        (m / b)
        * _pow(x2, 2 * m - 1)
        / (_pow(x2, 2 * m - 2) - B)
        * (1.0 - m)
        * t
        / (m * (m + (1.0 - m) * t))
    )


def root_merge_gap(param: EllipsoidParam, b: float) -> float:
    """Distance between the two Blaschke zeros at ``t = tmax`` (expected 0)."""
    t = param.tmax
    return abs(solve_x1(param, b, t) - x2_of_t(param, b, t))


def root_order_scan(param: EllipsoidParam, b: float, n: int = 100) -> bool:
    """True iff the first Blaschke root beats the second at ``n`` interior ``t``.

    Also checks ``m + t(m - 1) > 0`` on the same grid.
    """
    if n < 10:
        raise DomainError(f"need at least 10 scan points, got {n}")
    m = param.m
    lo, hi = param.tmin, param.tmax
    for k in range(1, n + 1):
        t = lo + (hi - lo) * k / (n + 1)
        if not m + t * (m - 1.0) > 0.0:
            return False
        if not tau1_t(param, b, t) < tau3_t(param, b, t):
            return False
    return True


def root_order_margins(param: EllipsoidParam, b: float, n: int = 100) -> np.ndarray:
    """``tau3 - tau1`` on the scan grid, for reporting."""
    lo, hi = param.tmin, param.tmax
    ts = [lo + (hi - lo) * k / (n + 1) for k in range(1, n + 1)]
    return np.array([tau3_t(param, b, t) - tau1_t(param, b, t) for t in ts])


def v_of_x1(param: EllipsoidParam, b: float, x: float) -> float:
    """``v`` at which the first root equals ``x`` (inverse of the root map)."""
    m = param.m
    B = _pow(b, 2 * m)
    t = (_pow(x, 2 * m) - B) / (_pow(x, 2 * m - 2) - B)
    return v_of_t(param, t)
