import csv
import io
import json
import subprocess
import sys

import pytest

from kobayashi_ellipsoid import EllipsoidParam, GeodesicDisc, kappa_reduced, v0_threshold
from kobayashi_ellipsoid.cli import main
from kobayashi_ellipsoid.metric import TIE_TOL_ENV

SMALL_VERIFY = ["verify", "--ms", "0.25", "--bs", "0.5", "--search-pairs", "0.25:0.5", "--budget", "200", "--quiet"]


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_eval_x_zero():
    code, text = run("eval", "--m", "0.25", "--b", "0.5", "--X", "0", "--Y", "1")
    assert code == 0
    rec = json.loads(text)
    assert rec["kappa"] == 4.0 / 3.0
    assert rec["branch"] == "X-zero"
    assert set(rec) == {"m", "b", "v", "kappa", "branch", "t", "x", "v0"}


def test_eval_origin():
    code, text = run("eval", "--m", "0.25", "--b", "0", "--X", "1", "--Y", "0")
    assert code == 0
    assert json.loads(text)["kappa"] == 1.0


def test_eval_generic_round_trips_exactly():
    code, text = run("eval", "--m", "0.25", "--b", "0.5", "--X", "1", "--Y", "1")
    rec = json.loads(text)
    assert rec["kappa"] == kappa_reduced(EllipsoidParam(0.25), 0.5, rec["v"]).kappa
    assert rec["v0"] == v0_threshold(EllipsoidParam(0.25), 0.5).v0


def test_eval_complex_point():
    code, text = run("eval", "--m", "0.3", "--z1", "0.2,0.1", "--z2", "0.1,-0.3", "--X", "1,1", "--Y", "0,2")
    assert code == 0
    assert json.loads(text)["kappa"] > 0


def test_eval_csv():
    code, text = run("eval", "--m", "0.25", "--b", "0.5", "--X", "0.3", "--Y", "1", "--format", "csv")
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["m", "b", "v", "kappa", "branch", "t", "x", "v0"]
    assert len(rows) == 2


def test_eval_exterior_point(capsys):
    code, _ = run("eval", "--m", "0.25", "--z1", "0.9", "--z2", "0.5", "--X", "1", "--Y", "1")
    assert code == 2
    assert "|z1|^2 + |z2|^(2m) = 1.5" in capsys.readouterr().err


@pytest.mark.parametrize("m", ["0.5", "0", "-0.1", "abc"])
def test_bad_m_rejected_at_parse_time(m, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["eval", "--m", m, "--b", "0.5"])
    assert exc.value.code == 2
    assert "m must" in capsys.readouterr().err


def test_point_forms_are_exclusive(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["eval", "--m", "0.25", "--b", "0.5", "--z1", "0.1"])
    assert exc.value.code == 2
    code, _ = run("eval", "--m", "0.25", "--z2", "0.1")
    assert code == 2


def test_tie_tol_from_env(monkeypatch):
    v0 = v0_threshold(EllipsoidParam(0.25), 0.5).v0
    x = 0.25 * (v0 * 1.0001) ** 0.5 / 0.5
    args = ["eval", "--m", "0.25", "--b", "0.5", "--X", repr(x), "--Y", "1"]
    monkeypatch.delenv(TIE_TOL_ENV, raising=False)
    assert json.loads(run(*args)[1])["branch"] != "tie"
    monkeypatch.setenv(TIE_TOL_ENV, "1e-3")
    assert json.loads(run(*args)[1])["branch"] == "tie"
    assert json.loads(run(*args, "--tie-tol", "0")[1])["branch"] != "tie"


def test_scan_header_and_rows():
    code, text = run("scan", "--m", "0.25", "--b", "0.5", "--v-lo", "0.5", "--v-hi", "3", "--n", "50")
    assert code == 0
    lines = text.splitlines()
    assert lines[0] == "v,kappa,branch,t,x"
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 50
    ks = [float(r["kappa"]) for r in rows]
    assert all(a < b for a, b in zip(ks, ks[1:]))
    branches = [r["branch"] for r in rows]
    v0 = v0_threshold(EllipsoidParam(0.25), 0.5).v0
    first2 = next(i for i, br in enumerate(branches) if br == "kappa2")
    assert float(rows[first2 - 1]["v"]) <= v0 <= float(rows[first2]["v"])
    assert set(branches[:first2]) == {"kappa1"}


def test_scan_endpoints_match_eval():
    _, text = run("scan", "--m", "0.25", "--b", "0.5", "--v-lo", "0.3", "--v-hi", "2.5", "--n", "2", "--log")
    rows = list(csv.DictReader(io.StringIO(text)))
    p = EllipsoidParam(0.25)
    assert float(rows[0]["kappa"]) == kappa_reduced(p, 0.5, 0.3).kappa
    assert float(rows[1]["kappa"]) == kappa_reduced(p, 0.5, 2.5).kappa


@pytest.mark.parametrize(
    "lo,hi,n", [("2", "1", "10"), ("0", "1", "10"), ("0.5", "1", "1"), ("-1", "1", "5")]
)
def test_scan_rejects_bad_range(lo, hi, n):
    code, _ = run("scan", "--m", "0.25", "--b", "0.5", "--v-lo", lo, "--v-hi", hi, "--n", n)
    assert code == 2


def test_scan_figure(tmp_path):
    path = tmp_path / "scan.png"
    code, _ = run("scan", "--m", "0.2", "--b", "0.4", "--v-lo", "0.1", "--v-hi", "10", "--n", "40", "--log", "--figure", str(path))
    assert code == 0
    assert path.stat().st_size > 1000


def test_geodesic_both_at_v0():
    v0 = v0_threshold(EllipsoidParam(0.25), 0.5).v0
    code, text = run("geodesic", "--m", "0.25", "--b", "0.5", "--v", repr(v0), "--both")
    assert code == 0
    recs = [json.loads(line) for line in text.splitlines()]
    assert [r["form"] for r in recs] == ["blaschke", "zero-free"]
    assert recs[0]["tau"] == pytest.approx(recs[1]["tau"], rel=1e-8)
    for rec in recs:
        assert GeodesicDisc.from_record(rec).tau == rec["tau"]


def test_geodesic_record_round_trip_reproduces_tau():
    code, text = run("geodesic", "--m", "0.3", "--b", "0.6", "--X", "0.4", "--Y", "1")
    rec = json.loads(text)
    d = GeodesicDisc.from_record(rec)
    _, d2 = d.derivative_at_zero()
    assert 1.0 / abs(d2) == pytest.approx(rec["tau"], rel=1e-14)


def test_geodesic_flat_disc_trace():
    code, text = run("geodesic", "--m", "0.25", "--b", "0.5", "--X", "1", "--Y", "0", "--trace", "16", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["theta", "re1", "im1", "re2", "im2", "defect"]
    assert len(rows) == 17
    assert all(abs(float(r[5])) < 1e-15 for r in rows[1:])


def test_geodesic_json_trace():
    code, text = run("geodesic", "--m", "0.25", "--b", "0.5", "--v", "2", "--trace", "8")
    rec = json.loads(text)
    assert len(rec["trace"]) == 8
    assert max(abs(row[5]) for row in rec["trace"]) < 1e-8


def test_geodesic_infeasible_form(capsys):
    code, _ = run("geodesic", "--m", "0.25", "--b", "0.5", "--v", "0.5", "--form", "zero-free")
    assert code == 2
    assert "iff v >= 1" in capsys.readouterr().err
    code, _ = run("geodesic", "--m", "0.25", "--b", "0.5", "--v", "0.5", "--both")
    assert code == 2


def test_geodesic_auto_picks_extremal_form():
    _, low = run("geodesic", "--m", "0.25", "--b", "0.5", "--v", "0.5")
    _, high = run("geodesic", "--m", "0.25", "--b", "0.5", "--v", "3")
    assert json.loads(low)["form"] == "blaschke"
    assert json.loads(high)["form"] == "zero-free"


def test_verify_small_grid_passes(tmp_path):
    code, text = run(*SMALL_VERIFY, "--figure-dir", str(tmp_path))
    assert code == 0
    rec = json.loads(text)
    assert rec["passed"] is True
    assert [c["id"] for c in rec["criteria"]] == list(range(1, 11))
    assert (tmp_path / "search_margins.png").exists()
    assert (tmp_path / "kink_gaps.png").exists()


def test_verify_perturb_is_detected():
    code, text = run(*SMALL_VERIFY, "--perturb")
    assert code == 1
    assert json.loads(text)["passed"] is False


def test_verify_is_byte_identical_for_a_seed():
    a = run(*SMALL_VERIFY, "--seed", "7")[1]
    b = run(*SMALL_VERIFY, "--seed", "7")[1]
    assert a == b


def test_verify_rejects_bad_grid():
    code, _ = run("verify", "--ms", "0.7", "--bs", "0.5", "--quiet")
    assert code == 2
    with pytest.raises(SystemExit):
        main(["verify", "--search-pairs", "0.25"])


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "kobayashi_ellipsoid", "eval", "--m", "0.25", "--b", "0.5", "--X", "0", "--Y", "1"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["kappa"] == 4.0 / 3.0
