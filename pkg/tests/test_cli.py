import json
import os

import pytest

from procdisc.bpmn import Kind, export_bpmn, from_tree, import_bpmn
from procdisc.cli import EXIT_INPUT, EXIT_OK, EXIT_PIPELINE, EXIT_UNSOUND, main
from procdisc.log import read_log

from conftest import DATA
from test_verify import and_merged_by_xor

TWO_CASES = str(DATA / "two_cases.csv")
INCLUSIVE_LOG = str(DATA / "inclusive_choice.csv")


def split_after(model, label):
    (t,) = [n for n in model.tasks() if model.nodes[n].label == label]
    (g,) = model.out[t]
    return model.kind(g), sorted(model.nodes[x].label for x in model.out[g])


def test_two_cases_discovery(tmp_path):
    out = tmp_path / "m.bpmn"
    assert main(["-q", "discover", TWO_CASES, "--out", str(out)]) == EXIT_OK
    m = import_bpmn(out.read_bytes())
    assert sorted(m.nodes[t].label for t in m.tasks()) == ["a", "b", "c", "d"]
    kind, branches = split_after(m, "a")
    assert branches == ["b", "c"] and kind in (Kind.AND, Kind.OR)
    assert main(["-q", "discover", TWO_CASES, "--out", str(out), "--no-or-detection"]) == EXIT_OK
    assert split_after(import_bpmn(out.read_bytes()), "a") == (Kind.AND, ["b", "c"])


def test_inclusive_log_or_and_ablation(tmp_path):
    out = tmp_path / "m.bpmn"
    assert main(["-q", "discover", INCLUSIVE_LOG, "--out", str(out)]) == EXIT_OK
    assert split_after(import_bpmn(out.read_bytes()), "A") == (Kind.OR, ["B", "C", "D"])
    assert main(["-q", "discover", INCLUSIVE_LOG, "--out", str(out), "--no-or-detection"]) == EXIT_OK
    assert split_after(import_bpmn(out.read_bytes()), "A") == (Kind.AND, ["B", "C", "D"])


def test_all_artifacts(tmp_path):
    paths = {k: tmp_path / k for k in ("m.bpmn", "m.dot", "dfg.dot", "stats.json", "metrics.json")}
    code = main(["-q", "discover", INCLUSIVE_LOG, "--out", str(paths["m.bpmn"]),
                 "--dot", str(paths["m.dot"]), "--export-dfg", str(paths["dfg.dot"]),
                 "--export-stats", str(paths["stats.json"]),
                 "--metrics", str(paths["metrics.json"])])
    assert code == EXIT_OK
    metrics = json.loads(paths["metrics.json"].read_text())
    assert metrics["soundness"]["verdict"] == "sound"
    assert metrics["size"] == 9 and metrics["cfc"] == 7
    assert "digraph" in paths["m.dot"].read_text()
    assert '"A" -> "B"' in paths["dfg.dot"].read_text()
    assert json.loads(paths["stats.json"].read_text())


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a.bpmn", tmp_path / "b.bpmn"
    assert main(["-q", "discover", TWO_CASES, "--out", str(a)]) == EXIT_OK
    assert main(["-q", "discover", TWO_CASES, "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_stage_summary_on_stderr(tmp_path, capsys):
    assert main(["discover", INCLUSIVE_LOG, "--out", str(tmp_path / "m.bpmn")]) == EXIT_OK
    captured = capsys.readouterr()
    assert captured.out == ""
    for word in ("dfg_and_loops", "concurrent pairs", "converted to OR", "joins"):
        assert word in captured.err


@pytest.mark.parametrize("args", [
    ["discover", "does-not-exist.csv"],
    ["discover", TWO_CASES, "--epsilon", "0"],
    ["discover", TWO_CASES, "--eta", "1.5"],
])
def test_input_errors(args, tmp_path):
    assert main(["-q", *args, "--out", str(tmp_path / "m.bpmn")]) == EXIT_INPUT
    assert os.listdir(tmp_path) == []


def test_malformed_log_leaves_no_files(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("case,activity,lifecycle,timestamp\n1,a,start,2020-01-01\n")
    out, dot = tmp_path / "m.bpmn", tmp_path / "m.dot"
    assert main(["-q", "discover", str(bad), "--out", str(out), "--dot", str(dot)]) == EXIT_INPUT
    assert sorted(os.listdir(tmp_path)) == ["bad.csv"]


def test_pipeline_error_leaves_no_files(tmp_path, monkeypatch):
    from procdisc import cli
    from procdisc.verify import VerificationError

    def refuse(*_args, **_kw):
        raise VerificationError("unsupported OR-join context")

    # the model is already exported when the last stage fails
    monkeypatch.setattr(cli, "metrics_report", refuse)
    out = tmp_path / "m.bpmn"
    code = main(["-q", "discover", INCLUSIVE_LOG, "--out", str(out), "--metrics",
                 str(tmp_path / "x.json")])
    assert code == EXIT_PIPELINE
    assert os.listdir(tmp_path) == []


def test_fail_on_unsound(tmp_path):
    model = tmp_path / "bad.bpmn"
    model.write_bytes(export_bpmn(and_merged_by_xor()))
    assert main(["-q", "verify", str(model)]) == EXIT_OK
    assert main(["-q", "verify", str(model), "--fail-on-unsound"]) == EXIT_UNSOUND
    assert main(["-q", "metrics", str(model), "--fail-on-unsound"]) == EXIT_UNSOUND


def test_generate_then_discover(tmp_path, capsys):
    model = tmp_path / "m.bpmn"
    model.write_bytes(export_bpmn(from_tree(("seq", "a", ("and", "b", "c"), "d"))))
    log = tmp_path / "log.csv"
    assert main(["-q", "generate", "--model", str(model), "--traces", "20", "--seed", "3",
                 "--out", str(log)]) == EXIT_OK
    assert len(read_log(str(log))) == 20
    out = tmp_path / "again.bpmn"
    assert main(["-q", "discover", str(log), "--out", str(out)]) == EXIT_OK
    assert split_after(import_bpmn(out.read_bytes()), "a") == (Kind.AND, ["b", "c"])
    assert main(["-q", "verify", str(out)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["verdict"] == "sound"


def test_generate_refuses_unsound_model(tmp_path):
    model = tmp_path / "bad.bpmn"
    model.write_bytes(export_bpmn(and_merged_by_xor()))
    out = tmp_path / "log.csv"
    assert main(["-q", "generate", "--model", str(model), "--out", str(out)]) == EXIT_PIPELINE
    assert not out.exists()


def test_metrics_and_dfg_commands(tmp_path, capsys):
    model = tmp_path / "m.bpmn"
    model.write_bytes(export_bpmn(from_tree(("seq", "a", ("or", "b", "c", "d"), "e"))))
    assert main(["-q", "metrics", str(model)]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert (data["size"], data["cfc"]) == (9, 7)
    assert main(["-q", "dfg", INCLUSIVE_LOG, "--mode", "imlc"]) == EXIT_OK
    assert '"B" -> "C"' in capsys.readouterr().out
    assert main(["-q", "metrics", str(tmp_path / "missing.bpmn")]) == EXIT_INPUT
