import csv
import io
import json
import math
import pathlib

import jsonschema
import pytest

from qsentinel.cli import main
from qsentinel.model import load_snapshot, parse_snapshot

SCHEMAS = pathlib.Path(__file__).parent.parent / "docs" / "schemas"


def run(capsys, *argv):
    code = main(["--quiet" if a == "-q" else a for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def schema(name):
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


def test_rank_fixture_hubs_on_top(capsys):
    code, out, _ = run(capsys, "rank", "--gen", "fixture", "--sort", "nr", "--format", "csv", "-q")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and {r["id"] for r in rows[:3]} == {"hub1", "hub2", "hub3"}
    assert list(rows[0]) == ["id", "name", "pr", "nr", "in_degree", "out_degree"]


def test_rank_clique_table(capsys):
    code, out, _ = run(capsys, "rank", "--gen", "pbft:4", "-q")
    lines = out.splitlines()
    assert lines[0].split() == ["id", "name", "pr", "nr", "in_degree"]
    assert [l.split()[2] for l in lines[1:]] == ["0.25"] * 4


def test_rank_json(capsys):
    code, out, _ = run(capsys, "rank", "--gen", "fixture", "--format", "json", "-q")
    data = json.loads(out)
    jsonschema.validate(data, schema("rank"))
    assert data["pr"]["metric"] == "pr" and data["nr"]["metric"] == "nr"
    assert sum(data["nr"]["scores"].values()) == pytest.approx(1)


def test_cascade_collapse_exit_code(capsys):
    code, out, _ = run(capsys, "cascade", "--gen", "fixture", "--fail", "hub1,hub2", "-q")
    assert code == 3
    assert out.splitlines()[-1] == "failure_ratio=100.00% (12/12)"
    assert out.startswith("round 1: +2 (total 2): anchor-1, anchor-2")


def test_cascade_pbft_partial(capsys):
    code, out, _ = run(capsys, "cascade", "--gen", "pbft:10", "--fail", "v0,v1,v2",
                       "--format", "json", "-q")
    data = json.loads(out)
    jsonschema.validate(data, schema("cascade"))
    assert code == 0 and data["failure_ratio"] == 30.0


def test_cascade_no_failures_reports_offline_share(tmp_path, capsys):
    doc = {"validators": [{"id": "a"}, {"id": "b", "online": False}, {"id": "c"}, {"id": "d"}],
           "quorum_sets": {v: {"t": 1, "v": [v]} for v in "abcd"}}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "cascade", "--input", str(path), "-q")
    assert code == 0 and "failure_ratio=25.00%" in out


def test_cascade_unknown_id(capsys):
    code, _, err = run(capsys, "cascade", "--gen", "pbft:4", "--fail", "zz", "-q")
    assert code == 2 and "zz" in err


def test_scan(capsys):
    code, out, _ = run(capsys, "scan", "--gen", "fixture", "--k", "2", "--min-failure", "90", "-q")
    assert code == 0 and out.splitlines()[-1] == "rows: 3"
    code, out, _ = run(capsys, "scan", "--gen", "pbft:4", "--k", "1", "--min-failure", "90", "-q")
    assert out.splitlines()[-1] == "rows: 0"
    code, out, _ = run(capsys, "scan", "--gen", "fixture", "--k", "2", "--min-failure", "0",
                       "--format", "csv", "-q")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["subset", "failure_ratio", "rounds"] and len(rows) - 1 == math.comb(12, 2)
    assert rows[1][0] == "hub1+hub2"
    code, out, _ = run(capsys, "scan", "--gen", "fixture", "--format", "json", "-q")
    data = json.loads(out)
    jsonschema.validate(data, schema("scan"))
    assert data["count"] == 3


def test_scan_bad_k(capsys):
    code, _, err = run(capsys, "scan", "--gen", "pbft:4", "--k", "0", "-q")
    assert code == 2


def test_ft(capsys):
    code, out, _ = run(capsys, "ft", "--gen", "fixture", "-q")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "f=2 x=16.67% (N_active=12)"
    assert lines[1] == "(f, x) = (2, 50/3)"
    assert [l.strip() for l in lines[3:]] == ["hub1 + hub2", "hub1 + hub3", "hub2 + hub3"]
    _, out, _ = run(capsys, "ft", "--gen", "star:20", "-q")
    assert out.startswith("f=1 x=5.00%")
    _, out, _ = run(capsys, "ft", "--gen", "pbft:100", "--k-max", "4", "-q")
    assert out.startswith("no breaking set ≤ 4")


def test_ft_json(capsys):
    for spec in ("fixture", "pbft:100"):
        _, out, _ = run(capsys, "ft", "--gen", spec, "--k-max", "4", "--format", "json", "-q")
        jsonschema.validate(json.loads(out), schema("ft"))


def test_check_quorum(capsys):
    code, out, _ = run(capsys, "check-quorum", "--gen", "pbft:4", "-q")
    assert code == 0 and "intersection_ok=true" in out and "availability_ok=true" in out
    code, out, _ = run(capsys, "check-quorum", "--gen", "clique-pair:6", "-q")
    assert code == 4 and "intersection_ok=false" in out
    code, out, _ = run(capsys, "check-quorum", "--gen", "pbft:4", "--malicious", "v0,v1",
                       "--format", "json", "-q")
    data = json.loads(out)
    jsonschema.validate(data, schema("quorum"))
    assert code == 4 and data["violating_pair"] is not None


def test_check_quorum_limit(capsys, monkeypatch):
    code, _, err = run(capsys, "check-quorum", "--gen", "pbft:8", "--n-limit", "6", "-q")
    assert code == 2 and "limit" in err
    monkeypatch.setenv("QSENTINEL_N_LIMIT", "6")
    code, _, _ = run(capsys, "check-quorum", "--gen", "pbft:8", "-q")
    assert code == 2


def test_gen(capsys, tmp_path):
    out_path = tmp_path / "p.json"
    code, _, _ = run(capsys, "gen", "pbft", "10", "--output", str(out_path), "-q")
    s = load_snapshot(str(out_path))
    assert code == 0 and len(s) == 10
    assert {(q.threshold, q.size) for q in s.slices.values()} == {(7, 10)}
    jsonschema.validate(json.loads(out_path.read_text()), schema("snapshot"))
    _, out, _ = run(capsys, "gen", "--gen", "star:5", "-q")
    s = parse_snapshot(out)
    assert len(s) == 5 and len({q for q in s.slices.values()}) == 1
    assert parse_snapshot(s.dumps()) == s


def test_gen_errors(capsys):
    assert run(capsys, "gen", "pbft", "2", "-q")[0] == 2
    assert run(capsys, "gen", "blob", "5", "-q")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["gen", "pbft", "x"])
    assert exc.value.code == 2


def test_input_source_is_exclusive(capsys, tmp_path):
    assert run(capsys, "rank", "-q")[0] == 2
    assert run(capsys, "rank", "--gen", "pbft:4", "--input", "x.json", "-q")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    code, _, err = run(capsys, "rank", "--input", str(bad), "-q")
    assert code == 2 and "byte offset" in err


def test_header_goes_to_stderr(capsys):
    code, out, err = run(capsys, "ft", "--gen", "star:5")
    assert err.startswith("# qsentinel") and not out.startswith("#")


def test_fixture_file_validates():
    from qsentinel.generators import fixture_text
    jsonschema.validate(json.loads(fixture_text()), schema("snapshot"))


def test_reproduce_contains_sections(capsys):
    code, out, _ = run(capsys, "reproduce", "-q")
    assert code == 0
    assert "| hub1 + hub2 | 100.0 | 2 |" in out
    assert "| pbft | 1000 | 334 | 33.40 (167/5) | analytic |" in out
