import dataclasses
import json
import math

import numpy as np
import pytest

from kobayashi_ellipsoid import (
    EllipsoidParam,
    GeodesicDisc,
    boundary_report,
    construct_flat,
    construct_zero_free,
    construct_blaschke,
    eval_disc,
    kappa1,
    kappa2,
    v0_threshold,
)
from kobayashi_ellipsoid.errors import DomainError, InfeasibleError
from kobayashi_ellipsoid.geodesic import attainment_residual, trace

CASES = [(m, b) for m in (0.05, 0.25, 0.45) for b in (0.1, 0.5, 0.9)]


def _numeric_derivative(d, h=1e-6):
    # central difference along the real axis; the disc is holomorphic
    p1, p2 = eval_disc(d, h)
    q1, q2 = eval_disc(d, -h)
    return (p1 - q1) / (2 * h), (p2 - q2) / (2 * h)


def _check_disc(d, b, xmag):
    r5, r6 = d.condition_residuals()
    assert abs(r5) < 1e-12 and abs(r6) < 1e-12
    phi1, phi2 = eval_disc(d, 0.0)
    assert abs(phi1) < 1e-12 and abs(phi2 - b) < 1e-12
    d1, d2 = d.derivative_at_zero()
    assert d.tau * d1 == pytest.approx(xmag, rel=1e-10)
    assert d.tau * d2 == pytest.approx(1.0, rel=1e-10)
    n1, n2 = _numeric_derivative(d)
    assert n1 == pytest.approx(d1, rel=1e-6)
    assert n2 == pytest.approx(d2, rel=1e-6)
    rep = boundary_report(d)
    assert rep.max_defect <= 1e-8
    assert rep.ok


@pytest.mark.parametrize("m,b", CASES)
def test_blaschke_is_extremal_below_v0(m, b):
    p = EllipsoidParam(m)
    v0 = v0_threshold(p, b).v0
    for v in (0.01, 0.5, 1.0, 0.5 * (1 + v0), v0):
        d = construct_blaschke(p, b, v)
        assert d.form == "blaschke"
        assert d.alpha2 == -d.x
        assert abs(attainment_residual(p, b, v, d.x)) < 1e-10
        _check_disc(d, b, m * math.sqrt(v) / b)
        assert d.tau == pytest.approx(kappa1(p, b, v), rel=1e-8)


@pytest.mark.parametrize("m,b", CASES)
def test_zero_free_is_extremal_above_v0(m, b):
    p = EllipsoidParam(m)
    v0 = v0_threshold(p, b).v0
    for v in (1.0, v0, 0.5 * (v0 + p.vmax), p.vmax, 5 * p.vmax):
        d = construct_zero_free(p, b, v)
        _check_disc(d, b, m * math.sqrt(v) / b)
        assert d.tau == pytest.approx(kappa2(p, b, v), rel=1e-8)


@pytest.mark.parametrize("m,b", CASES)
def test_second_root_disc(m, b):
    p = EllipsoidParam(m)
    v = 0.5 * (1.0 + p.vmax)
    d = construct_blaschke(p, b, v, root="x2")
    first = construct_blaschke(p, b, v)
    assert d.x > first.x
    _check_disc(d, b, m * math.sqrt(v) / b)
    assert d.tau > first.tau


def test_feasibility_rules():
    p = EllipsoidParam(0.25)
    with pytest.raises(DomainError, match="iff v >= 1"):
        construct_zero_free(p, 0.5, 0.5)
    with pytest.raises(DomainError, match="vmax"):
        construct_blaschke(p, 0.5, 2.0)
    with pytest.raises(InfeasibleError):
        construct_blaschke(p, 0.5, 1.0, root="x2")
    with pytest.raises(DomainError):
        construct_blaschke(p, 0.5, 0.5, root="x2")
    with pytest.raises(ValueError):
        construct_blaschke(p, 0.5, 1.1, root="x3")
    with pytest.raises(DomainError):
        construct_zero_free(p, 1.0, 2.0)


def test_two_geodesics_at_v0_are_distinct():
    p = EllipsoidParam(0.25)
    v0 = v0_threshold(p, 0.5).v0
    dbl, dzf = construct_blaschke(p, 0.5, v0), construct_zero_free(p, 0.5, v0)
    assert dbl.tau == pytest.approx(dzf.tau, rel=1e-8)
    lam = 0.5 * np.exp(2j * np.pi * np.arange(256) / 256)
    a, c = eval_disc(dbl, lam), eval_disc(dzf, lam)
    assert np.max(np.hypot(np.abs(a[0] - c[0]), np.abs(a[1] - c[1]))) > 1e-3


def test_zero_free_at_v_one_has_unit_pole_and_is_not_extremal():
    p = EllipsoidParam(0.25)
    d = construct_zero_free(p, 0.5, 1.0)
    assert abs(d.alpha2) == 1.0
    assert d.tau > kappa1(p, 0.5, 1.0)


def test_perturbed_disc_leaves_the_ellipsoid():
    d = construct_blaschke(EllipsoidParam(0.25), 0.5, 0.5)
    bad = dataclasses.replace(d, a1=d.a1 * 1.01)
    rep = boundary_report(bad)
    assert rep.interior_max > 1.0
    assert not rep.ok


@pytest.mark.parametrize("m,b", CASES)
def test_flat_disc(m, b):
    p = EllipsoidParam(m)
    d = construct_flat(p, b, 2.0)
    theta, phi1, phi2, defect = trace(d, 64)
    assert np.max(np.abs(defect)) < 1e-15
    assert np.allclose(phi2, b)
    assert d.tau == pytest.approx(2.0 / math.sqrt(1.0 - b ** (2 * m)), rel=1e-15)


def test_record_round_trip():
    p = EllipsoidParam(0.25)
    for d in (construct_blaschke(p, 0.5, 0.7), construct_zero_free(p, 0.5, 2.0), construct_flat(p, 0.5)):
        text = json.dumps(d.to_record())
        back = GeodesicDisc.from_record(json.loads(text))
        assert back == d
    rec = construct_zero_free(p, 0.5, 2.0).to_record()
    rec["kappa"] = 1.0
    assert GeodesicDisc.from_record(rec).tau == rec["tau"]


def test_rotated_disc_still_normalized():
    d = construct_zero_free(EllipsoidParam(0.25), 0.5, 2.0)
    rot = dataclasses.replace(d, c1=1j, c2=-1.0 + 0j)
    phi1, phi2 = eval_disc(rot, 0.0)
    assert abs(phi1) < 1e-15 and abs(abs(phi2) - 0.5) < 1e-15
    assert boundary_report(rot).max_defect < 1e-12


def test_disc_validation():
    with pytest.raises(DomainError):
        GeodesicDisc("type15", 0.25, 0.5, 1.0, 0.1, 0.5, 0.1, 0.1, None, 1.0)
    with pytest.raises(DomainError):
        GeodesicDisc("zero-free", 0.25, 0.5, 1.0, 0.1, 0.5, 1.5, 0.1, None, 1.0)
    with pytest.raises(DomainError):
        boundary_report(construct_flat(EllipsoidParam(0.25), 0.5), n_samples=4)
