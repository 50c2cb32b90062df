import json

import numpy as np
import pytest

from moebspace.cli import run


@pytest.fixture
def circle8(tmp_path):
    path = tmp_path / "c8.json"
    assert run(["gen", "circle", "--n", "8", "--out", str(path)]) == 0
    return path


def report(path):
    return json.loads(path.read_text())


def test_gen_and_validate(circle8, tmp_path):
    out = tmp_path / "r.json"
    assert run(["validate", str(circle8), "--out", str(out)]) == 0
    r = report(out)
    assert r["ok"] and r["results"]["ok"]
    assert r["config"]["tol_flow"] == 1e-8


def test_invalid_space_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"rho": [[0, 0.5], [0.5, 0]]}))
    out = tmp_path / "r.json"
    assert run(["validate", str(bad), "--out", str(out)]) == 2
    rules = {f["rule"] for f in report(out)["results"]["failures"]}
    assert "diameter_one" in rules


def test_malformed_json_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"rho": [[0, 1],\n [1, 0]')
    assert run(["info", str(bad)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_usage_errors(circle8):
    assert run(["info", str(circle8), "--bogus"]) == 1
    assert run(["nonexistent"]) == 1
    assert run(["antipodalize", str(circle8)]) == 1


def test_antipodalize_roundtrip(circle8, tmp_path):
    pt, out = tmp_path / "p.json", tmp_path / "r.json"
    assert run(["antipodalize", str(circle8), "--random", "--seed", "3", "--point-out", str(pt),
                "--out", str(out)]) == 0
    r = report(out)
    assert r["ok"] and r["results"]["residual"] <= 1e-8
    out2 = tmp_path / "d.json"
    assert run(["distance", str(circle8), "--a", str(pt), "--out", str(out2)]) == 0
    d = report(out2)["results"]
    assert np.isclose(d["distance"], np.max(np.abs(report(pt)["tau"])))


def test_point_of_other_space_rejected(circle8, tmp_path):
    pt = tmp_path / "p.json"
    assert run(["gen", "random-point", "--space", str(circle8), "--seed", "1", "--out", str(pt)]) == 0
    other = tmp_path / "c4.json"
    data = report(pt)
    run(["gen", "circle", "--n", "4", "--out", str(other)])
    assert run(["distance", str(other), "--a", str(pt)]) == 1
    assert data["space"].startswith("sha256:")


def test_uncertified_is_failed_check(circle8, tmp_path):
    out = tmp_path / "r.json"
    assert run(["antipodalize", str(circle8), "--random", "--max-time", "0.2", "--out", str(out)]) == 2
    assert not report(out)["ok"]


def test_byte_stable(circle8, tmp_path):
    outs = []
    for i in range(2):
        p = tmp_path / f"o{i}.json"
        assert run(["flow", str(circle8), "--random", "--seed", "5", "--no-timing", "--out", str(p)]) == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1]


@pytest.mark.parametrize("cmd", [
    ["info"], ["qm-constant"], ["frink"], ["tangent", "--basis"],
    ["ray", "--xi", "2", "--depth", "3"], ["gromov", "--xi", "0", "--eta", "3", "--depth", "4"],
    ["busemann", "--xi", "1", "--depth", "4"], ["delta", "--random", "6"],
])
def test_commands_succeed(circle8, tmp_path, cmd):
    out = tmp_path / "r.json"
    code = run([cmd[0], str(circle8), *cmd[1:], "--out", str(out)])
    assert code == 0, report(out)["checks"]


def test_hull_command(circle8, tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"rays": [[x, 4, 1.0] for x in range(8)], "random": [3, 1, 2.0]}))
    out = tmp_path / "r.json"
    assert run(["hull", str(circle8), "--sample", str(spec), "--out", str(out)]) == 0


def test_dendrogram_gen(tmp_path):
    spec = tmp_path / "d.json"
    spec.write_text(json.dumps({"height": 1, "children": [{"height": 0.5, "children": ["a", "b"]}, "c"]}))
    out = tmp_path / "sp.json"
    assert run(["gen", "dendrogram", "--spec", str(spec), "--out", str(out)]) == 0
    assert report(out)["labels"] == ["a", "b", "c"]


def test_selftest_suite(tmp_path):
    out = tmp_path / "r.json"
    assert run(["selftest", "--suite", "tangent", "--out", str(out)]) == 0
    r = report(out)
    assert r["results"]["tangent"]["failed"] == 0


def test_selftest_all_seed7(tmp_path):
    out = tmp_path / "r.json"
    assert run(["selftest", "--suite", "all", "--seed", "7", "--no-timing", "--out", str(out)]) == 0
    r = report(out)
    assert r["ok"] and all(v["failed"] == 0 for v in r["results"].values())
    assert set(r["results"]) == {"generators", "space", "flow", "geometry", "tangent", "hull"}
