import csv
import json

import pytest

from himm.bench import COLUMNS, BenchRecord, CostMismatch, check_costs, read_csv, study1, study2, write_csv
from himm.cli import main
from himm.plotting import plot_csv


def test_empty_suite_writes_header(tmp_path):
    path = tmp_path / "empty.csv"
    assert write_csv([], path) == 0
    assert path.read_text().strip() == ",".join(COLUMNS)


def test_cost_gate():
    row = dict(system_id="x", depth=1, num_machines=1, flat_states=1, phase="query", wall_ms=1.0, s_init="0", s_goal="1", seed=0)
    check_costs([BenchRecord(method="a", cost=1.0, **row), BenchRecord(method="b", cost=1.0, **row)])
    with pytest.raises(CostMismatch):
        check_costs([BenchRecord(method="a", cost=1.0, **row), BenchRecord(method="b", cost=2.0, **row)])


def test_study1_rows(tmp_path):
    records = list(study1([3, 4], repeats=1))
    methods = {(r.method, r.phase) for r in records}
    assert {("hier", "query"), ("hier_shared", "preprocess"), ("dijkstra", "query"), ("bidi", "query"), ("ch", "query")} <= methods
    assert len({r.cost for r in records if r.phase == "query" and r.depth == 4}) == 1
    path = tmp_path / "s1.csv"
    write_csv(records, path)
    rows = read_csv(path)
    assert list(rows[0]) == list(COLUMNS)
    png = plot_csv(path)
    assert png.exists() and png.suffix == ".png"


def test_study2_rows():
    records = list(study2(2, (2, 3), (1, 1), repeats=1))
    phases = {(r.system_id, r.method, r.phase) for r in records}
    assert ("warehouse-case2", "hier", "update") in phases
    assert ("warehouse-case3", "hier_shared", "update") in phases
    costs = {r.system_id: r.cost for r in records if r.phase == "query"}
    assert set(costs) == {"warehouse-case1", "warehouse-case2", "warehouse-case3"}


def test_cli_roundtrip(tmp_path, capsys):
    doc = tmp_path / "ex.json"
    assert main(["gen", "example", "-o", str(doc)]) == 0
    assert main(["validate", "-i", str(doc)]) == 0
    out = tmp_path / "plan.json"
    assert main(["plan", "-i", str(doc), "--init", "B/3", "--goal", "C/6", "--verify", "-o", str(out)]) == 0
    result = json.loads(out.read_text())
    assert result["cost"] == 2.0 and result["inputs"] == ["c", "b"]
    exits = tmp_path / "exits.json"
    assert main(["export-exits", "-i", str(doc), "-o", str(exits)]) == 0
    assert json.loads(exits.read_text())["A"]["exits"]["a"]["cost"] == 2.0
    flat = tmp_path / "flat.json"
    assert main(["flatten", "-i", str(doc), "-o", str(flat)]) == 0
    assert len(json.loads(flat.read_text())["leaves"]) == 6
    script = tmp_path / "mods.json"
    script.write_text(json.dumps([{"op": "subtract_state", "target": "A", "state": 2}]))
    changed = tmp_path / "changed.json"
    assert main(["modify", "-i", str(doc), "--script", str(script), "-o", str(changed)]) == 0
    assert "machine searches" in capsys.readouterr().err
    assert main(["plan", "-i", str(changed), "--init", "start", "--goal", "B/3"]) == 0


def test_cli_reports_bad_documents(tmp_path, capsys):
    doc = tmp_path / "bad.json"
    doc.write_text(json.dumps({"schema": 1}))
    assert main(["validate", "-i", str(doc)]) == 1
    assert "error" in capsys.readouterr().err


def test_cli_bench(tmp_path):
    out = tmp_path / "study.csv"
    assert main(["bench", "--study", "1", "--depths", "3", "--repeats", "1", "-o", str(out)]) == 0
    with open(out) as fh:
        assert len(list(csv.DictReader(fh))) > 0
    assert out.with_suffix(".png").exists()


def test_cli_gen_kinds(tmp_path):
    for kind, extra in [("recursive", ["--depth", "3", "--shared"]), ("warehouse", ["--houses", "2", "--grid", "2x2", "--rack", "1x1"]), ("random", ["--seed", "4"])]:
        path = tmp_path / f"{kind}.json"
        assert main(["gen", kind, "-o", str(path), *extra]) == 0
        assert main(["validate", "-i", str(path)]) == 0
