import csv
import io
import json

import pytest
from click.testing import CliRunner

from artifact.cli import main
from artifact.constructors import Certificate, general_model


@pytest.fixture
def run():
    runner = CliRunner()

    def go(*args):
        return runner.invoke(main, [str(a) for a in args], catch_exceptions=False)

    return go


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_construct_omega(run):
    res = run("construct", "--alpha", "w^1", "--a", "1")
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert doc["certificate"]["expected_alpha0"] == "w"
    assert doc["certificate"]["expected_norm"] == "1"
    assert doc["verify"]["pass"]


def test_construct_finite_ladder(run):
    doc = json.loads(run("construct", "--alpha", "2", "--a", "1/2").output)
    assert doc["certificate"]["norm_ladder"] == [["1", "1/4"], ["2", "1/2"]]


def test_empty_class(run):
    res = run("construct", "--alpha", "0", "--a", "1")
    assert res.exit_code == 2
    assert json.loads(res.output)["error"]["type"] == "empty_class"


def test_parse_error_position(run):
    res = run("construct", "--alpha", "w^^2")
    assert res.exit_code == 2
    err = json.loads(res.output)["error"]
    assert err["type"] == "ordinal_parse" and err["position"] == 2


def test_bad_rational(run):
    res = run("construct", "--alpha", "w", "--a", "one")
    assert res.exit_code == 2
    assert json.loads(res.output)["error"]["type"] == "bad_value"


def test_other_kinds(run):
    for args in (["--kind", "base_finite", "--p", "3"],
                 ["--kind", "powers", "--p", "2", "--beta", "1"],
                 ["--kind", "irreducible", "--beta", "1", "--delta", "5", "--epsilon", "1/8"],
                 ["--kind", "s_zero", "--h", "2"]):
        res = run("construct", *args)
        assert res.exit_code == 0, res.output
    res = run("construct", "--kind", "irreducible", "--beta", "1")
    assert res.exit_code == 2


def test_roundtrip_and_verify(run, tmp_path):
    out = tmp_path / "m.json"
    assert run("construct", "--alpha", "w*2+1", "--a", "3/2", "-o", out).exit_code == 0
    doc = json.loads(out.read_text())
    _, cert = general_model("w*2+1", "3/2")
    assert Certificate.from_json(doc["certificate"]).to_json() == cert.to_json()
    res = run("verify", out)
    assert res.exit_code == 0 and json.loads(res.output)["pass"]


def test_verify_tampered(run, tmp_path):
    out = tmp_path / "m.json"
    run("construct", "--alpha", "2", "--a", "1", "-o", out)
    doc = json.loads(out.read_text())
    doc["certificate"]["norm_ladder"][0][1] = "1"
    out.write_text(json.dumps(doc))
    res = run("verify", out)
    assert res.exit_code == 1
    assert not json.loads(res.output)["pass"]


def test_missing_file(run, tmp_path):
    res = run("verify", tmp_path / "nope.json")
    assert res.exit_code == 2
    assert json.loads(res.output)["error"]["type"] == "missing_file"


def test_report_u_gamma(run, tmp_path):
    out = tmp_path / "m.json"
    run("construct", "--alpha", "w", "--a", "1", "-o", out)
    rep = json.loads(run("report", out, "--u-gamma", "w^1").output)
    assert rep["gamma"] == "w" and rep["norm"] == "1"
    both = json.loads(run("report", out, "--u-gamma", "1", "--u-gamma", "w").output)
    assert [r["norm"] for r in both] == ["1/2", "1"]


def test_report_h_sex_atom(run, tmp_path):
    out = tmp_path / "a.json"
    run("construct", "--kind", "s_zero", "--h", "3/2", "-o", out)
    table = rows(run("report", out, "--h-sex").output)
    assert table == [["address", "h", "u_0", "h_sex"], [".", "3/2", "0", "3/2"]]


def test_report_estimate(run, tmp_path):
    out = tmp_path / "a.json"
    run("construct", "--kind", "s_zero", "--h", "1", "-o", out)
    table = rows(run("report", out, "--estimate-entropy", "--samples", "4000").output)
    assert table[0] == ["eps", "n", "samples", "seed", "estimate", "target"]
    est, target = float(table[1][4]), float(table[1][5])
    assert target == pytest.approx(1.09861228867)
    assert abs(est - target) / target < 0.15


def test_report_needs_something(run, tmp_path):
    out = tmp_path / "a.json"
    run("construct", "--kind", "s_zero", "-o", out)
    assert run("report", out).exit_code == 2


def test_realize(run, tmp_path):
    out = tmp_path / "m.json"
    run("construct", "--kind", "base_finite", "--p", "1", "-o", out)
    res = run("realize", out, "--samples", "2000")
    assert res.exit_code == 0
    doc = json.loads(res.output)
    assert doc["checks"]["pass"]
    assert [t["period"] for t in doc["towers"]] == [2, 3, 4]


def test_estimate_outputs(run, tmp_path):
    counts, orbits = tmp_path / "c.csv", tmp_path / "o.csv"
    res = run("estimate", "--tent", 3, "--eps", "1e-3", "--eps", "1e-2", "--samples", 2000,
              "--counts", counts, "--orbits", orbits, "--orbit-count", 5)
    table = rows(res.output)
    assert [r[0] for r in table[1:]] == ["0.001", "0.01"]
    assert rows(counts.read_text())[0][:3] == ["eps", "n", "window"]
    orb = rows(orbits.read_text())
    assert len(orb) == 6 and len(orb[0]) == 13
    assert run("estimate").exit_code == 2
    assert run("estimate", "--tent", 3, "--identity").exit_code == 2


def test_deterministic_bytes(run, tmp_path):
    a = run("construct", "--alpha", "w^2+w*3+2", "--a", "1/2").output
    b = run("construct", "--alpha", "w^2+w*3+2", "--a", "1/2").output
    assert a == b
    e1 = run("estimate", "--tent", 5, "--samples", 2000, "--seed", 3).output
    e2 = run("estimate", "--tent", 5, "--samples", 2000, "--seed", 3).output
    assert e1 == e2
