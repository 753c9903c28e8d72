from __future__ import annotations

import json

import jsonschema
import pytest

from stagekit import blocks, cli

SCHEMA = cli.load_schema()


def read_report(out, scenario):
    obj = json.loads((out / f"{scenario}.json").read_text(encoding="utf-8"))
    jsonschema.validate(obj, SCHEMA)
    return obj


def test_clean_run_exits_zero(tmp_path, capsys):
    assert cli.main(["lemmas", "--ids", "moore-x,collapse", "--out", str(tmp_path)]) == cli.EXIT_OK
    report = read_report(tmp_path, "lemmas")
    assert {r["id"].split("/")[0] for r in report["records"]} == {"moore-x", "collapse"}
    assert report["summary"]["failed"] == 0
    assert "checks passed" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["lemmas", "--ids", "moore-x,unknown"],
    ["groupoid", "--variant", "z0", "--stages", "0"],
    ["groupoid", "--variant", "jiang-su", "--stages", "1", "--corrupt"],
    ["elliott", "--instances", "-1"],
    ["groupoid", "--variant", "not-a-variant"],
    ["preset", "no-such-preset"],
    ["lemmas", "--dyadic-depth", "-1"],
])
def test_invalid_configuration_exits_two(tmp_path, argv, capsys):
    assert cli.main([*argv, "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert not (tmp_path / "lemmas.json").exists()
    capsys.readouterr()


def test_empty_selection_gives_empty_report(tmp_path):
    assert cli.main(["lemmas", "--ids", "", "--out", str(tmp_path)]) == cli.EXIT_OK
    report = read_report(tmp_path, "lemmas")
    assert report["records"] == []
    assert report["summary"] == {"total": 0, "passed": 0, "failed": 0}


def test_single_stage_has_no_connecting_maps(tmp_path):
    assert cli.main(["groupoid", "--variant", "razak", "--stages", "1", "--out", str(tmp_path)]) == 0
    ids = [r["id"] for r in read_report(tmp_path, "groupoid")["records"]]
    assert "stage-1/unit-space" in ids
    assert not any(i.startswith("map-") or i.startswith("stage-2") for i in ids)


def test_report_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.REPORT_DIR_ENV, str(tmp_path / "env"))
    assert cli.main(["lemmas", "--ids", "wedge"]) == 0
    assert (tmp_path / "env" / "lemmas.json").exists()


def test_dot_format_writes_graphs(tmp_path):
    assert cli.main(["groupoid", "--variant", "jiang-su", "--stages", "2", "--format", "dot",
                     "--out", str(tmp_path)]) == 0
    for n in (1, 2):
        text = (tmp_path / f"jiang-su-stage-{n}.dot").read_text(encoding="utf-8")
        assert text.lstrip().startswith(("graph", "digraph", "strict"))


def test_config_echo_has_no_paths(tmp_path):
    cli.main(["preset", "z0", "--out", str(tmp_path)])
    report = read_report(tmp_path, "z0")
    assert str(tmp_path) not in json.dumps(report)
    assert report["config"]["variant"] == "z0" and report["config"]["stages"] == 3


@pytest.mark.parametrize("variant", ["jiang-su", "razak", "z0"])
def test_corrupt_flag_fails_descent_only(tmp_path, variant, capsys):
    code = cli.main(["groupoid", "--variant", variant, "--stages", "2", "--corrupt", "--out", str(tmp_path)])
    assert code == cli.EXIT_FAILED
    failed = [r for r in read_report(tmp_path, "groupoid")["records"] if not r["passed"]]
    assert [r["id"] for r in failed] == ["map-2-1/descent"]
    assert "strand" in failed[0]["witness"]
    assert "FAIL map-2-1/descent" in capsys.readouterr().out


def test_every_failed_record_has_a_witness(tmp_path):
    cli.main(["preset", "negative-controls", "--out", str(tmp_path)])
    report = read_report(tmp_path, "negative-controls")
    assert report["summary"]["failed"] >= 1
    assert all(r["witness"] for r in report["records"] if not r["passed"])
    assert cli.Record("x", "y", False).witness == {"reason": "check failed"}


def test_block_file(tmp_path):
    path = tmp_path / "block.json"
    path.write_text(json.dumps(blocks.jiang_su_block(4, 9).to_json()), encoding="utf-8")
    out = tmp_path / "out"
    assert cli.main(["blocks", "--block", str(path), "--out", str(out)]) == 0
    report = read_report(out, "blocks")
    assert report["config"]["block_file"] == "block.json"
    assert len(report["records"]) >= 1 and report["summary"]["failed"] == 0


def test_bad_block_file_exits_two(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"E": [2]}), encoding="utf-8")
    assert cli.main(["blocks", "--block", str(path), "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_seed_changes_gluing_but_not_results(tmp_path):
    reports = []
    for seed in ("0", "5"):
        out = tmp_path / seed
        cli.main(["groupoid", "--variant", "razak", "--stages", "2", "--seed", seed, "--out", str(out)])
        reports.append(read_report(out, "groupoid"))
    assert [r["passed"] for r in reports[0]["records"]] == [r["passed"] for r in reports[1]["records"]]
    assert reports[0]["config"]["seed"] != reports[1]["config"]["seed"]


def test_records_are_sorted_and_summary_consistent(tmp_path):
    cli.main(["preset", "razak", "--out", str(tmp_path)])
    report = read_report(tmp_path, "razak")
    ids = [r["id"] for r in report["records"]]
    assert ids == sorted(ids)
    s = report["summary"]
    assert s["total"] == len(ids) == s["passed"] + s["failed"]
