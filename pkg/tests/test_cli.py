import json
import re
from pathlib import Path

import pytest

from ontoport.cli import main

from conftest import SPEC_DIR

MEDIUM = (SPEC_DIR / "medium.spec").read_text()


def medium_specs(tmp: Path, n=3):
    paths = []
    for k in range(n):
        text = re.sub(r"course_code = .*", f"course_code = MED{k}", MEDIUM)
        text = re.sub(r"seed = .*", f"seed = {50 + k}", text)
        text = re.sub(r"noise = .*", "noise = 0.3", text)
        text = re.sub(r"n_students = .*", "n_students = 60", text)
        p = tmp / f"med{k}.spec"
        p.write_text(text)
        paths.append(str(p))
    return paths


def snapshot(root: Path):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture
def ingested(tmp_path):
    raw, courses = tmp_path / "raw", tmp_path / "courses"
    assert main(["synth", *medium_specs(tmp_path), "--out", str(raw)]) == 0
    logs = sorted(str(p) for p in raw.glob("*.log.csv"))
    assert main(["ingest", *logs, "--out", str(courses)]) == 0
    return sorted(str(p) for p in courses.glob("*.course.json"))


def test_full_chain(tmp_path, ingested, capsys):
    assert len(ingested) == 3
    feats, report = tmp_path / "feats", tmp_path / "report"
    assert main(["featurize", *ingested, "--out", str(feats)]) == 0
    assert len(list(feats.glob("*.csv"))) == 6
    datasets = sorted(str(p) for p in feats.glob("*.csv"))
    assert main(["eval-transfer", *datasets, "--out", str(report)]) == 0
    group = report / "medium"
    for name in ("auc_numeric.csv", "auc_discretized.csv", "loss_numeric.csv",
                 "loss_discretized.csv"):
        lines = (group / name).read_text().splitlines()
        assert lines[0] == "model,MED0,MED1,MED2,avg" and len(lines) == 5
    assert len(list((group / "trees").glob("*.txt"))) == 6
    assert "Medium group (MED0, MED1, MED2)" in capsys.readouterr().out


def test_eval_from_course_files_matches_dataset_files(tmp_path, ingested):
    feats = tmp_path / "feats"
    assert main(["featurize", *ingested, "--out", str(feats)]) == 0
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["eval-transfer", *ingested, "--out", str(a)]) == 0
    assert main(["eval-transfer", *sorted(map(str, feats.glob("*.csv"))), "--out", str(b)]) == 0
    for name in ("auc_numeric.csv", "auc_discretized.csv"):
        assert (a / "medium" / name).read_text() == (b / "medium" / name).read_text()


def test_featurize_rerun_is_byte_identical(tmp_path, ingested):
    one, two = tmp_path / "one", tmp_path / "two"
    assert main(["featurize", *ingested, "--out", str(one)]) == 0
    assert main(["featurize", *ingested, "--out", str(two)]) == 0
    assert snapshot(one) == snapshot(two)
    sidecar = json.loads((one / "MED0.cutpoints.json").read_text())
    assert sidecar["usage_level"] == "Medium"
    assert list(sidecar["cutpoints"])[0] == "learning"


def test_discretized_only(tmp_path, ingested):
    feats, report = tmp_path / "feats", tmp_path / "report"
    assert main(["featurize", *ingested, "--out", str(feats), "--representation", "discretized"]) == 0
    assert not list(feats.glob("*.numeric.csv"))
    assert main(["eval-transfer", *ingested, "--out", str(report),
                 "--representation", "discretized"]) == 0
    names = set(snapshot(report / "medium"))
    assert not any("numeric" in n for n in names)
    assert len([n for n in names if n.endswith(".txt")]) == 3


def test_render_tree(tmp_path, ingested, capsys):
    report = tmp_path / "report"
    assert main(["eval-transfer", *ingested, "--out", str(report)]) == 0
    capsys.readouterr()
    tree = report / "medium" / "trees" / "MED0_discretized.json"
    assert main(["render-tree", str(tree)]) == 0
    out = capsys.readouterr().out
    assert out == (report / "medium" / "trees" / "MED0_discretized.txt").read_text()
    assert main(["render-tree", str(tree), "--counts"]) == 0
    assert re.search(r": (Pass|Fail) \(\d+", capsys.readouterr().out)


def test_missing_marks(tmp_path, capsys):
    raw = tmp_path / "raw"
    main(["synth", medium_specs(tmp_path, 1)[0], "--out", str(raw)])
    (raw / "MED0.marks.csv").unlink()
    code = main(["ingest", str(raw / "MED0.log.csv"), "--out", str(tmp_path / "c")])
    assert code != 0
    assert "missing marks" in capsys.readouterr().err


def test_one_malformed_course(tmp_path, capsys):
    raw, out = tmp_path / "raw", tmp_path / "courses"
    main(["synth", *medium_specs(tmp_path, 2), "--out", str(raw)])
    bad = raw / "MED1.log.csv"
    bad.write_text(bad.read_text() + "MED1,not-a-time,x,forum view forum,forum\n")
    capsys.readouterr()
    code = main(["ingest", str(raw / "MED0.log.csv"), str(bad), "--out", str(out)])
    captured = capsys.readouterr()
    assert code == 2
    assert (out / "MED0.course.json").is_file() and not (out / "MED1.course.json").exists()
    assert "1 failure(s)" in captured.out
    assert "MED1: FAILED" in captured.err


def test_config_file_and_explicit_flag(tmp_path, ingested):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"representation": "numeric", "seed": 3}))
    report = tmp_path / "report"
    assert main(["eval-transfer", *ingested, "--out", str(report), "--config", str(cfg)]) == 0
    meta = json.loads((report / "medium" / "metadata.json").read_text())
    assert meta["representations"] == ["numeric"] and meta["balance_seed"] == 3
    report2 = tmp_path / "report2"
    assert main(["eval-transfer", *ingested, "--out", str(report2), "--config", str(cfg),
                 "--seed", "4"]) == 0
    assert json.loads((report2 / "medium" / "metadata.json").read_text())["balance_seed"] == 4


def test_decimal_comma(tmp_path, ingested):
    report = tmp_path / "report"
    assert main(["eval-transfer", *ingested, "--out", str(report), "--decimal-comma",
                 "--formats", "csv"]) == 0
    text = (report / "medium" / "auc_discretized.csv").read_text()
    assert re.search(r'"\d,\d{3}"', text)
    assert not (report / "medium" / "report.md").exists()


def test_exit_codes(tmp_path, capsys):
    assert main([]) == 1
    assert main(["nonsense"]) == 1
    assert main(["ingest", str(tmp_path / "nope.log.csv")]) == 1
    bad = tmp_path / "x.course.json"
    bad.write_text("{}")
    assert main(["featurize", str(bad), "--out", str(tmp_path)]) == 2
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"no_such_option": 1}))
    assert main(["synth", str(tmp_path / "s.spec"), "--config", str(cfg)]) == 1
    spec = tmp_path / "bad.spec"
    spec.write_text("course_code = Z\n")
    assert main(["synth", str(spec), "--out", str(tmp_path)]) == 2


def test_module_help(capsys):
    assert main(["--help"]) == 0
    out = capsys.readouterr().out
    for command in ("ingest", "featurize", "eval-transfer", "synth", "render-tree"):
        assert command in out
