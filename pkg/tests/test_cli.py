import hashlib
import json
from pathlib import Path

import pytest

from soundlaw.cli import main
from soundlaw.tasks import read_tasks

FIXTURES = Path(__file__).parent / "data" / "rp_li_fixtures.jsonl"


def run(*argv):
    return main([str(a) for a in argv])


def test_tokenize(capsys):
    assert run("tokenize", "tʰum", "tsar") == 0
    out = capsys.readouterr().out
    assert out == "tʰ u m\nts a r\n"


def test_tokenize_preprocessed(capsys):
    assert run("tokenize", "--preprocessed", "am") == 0
    assert capsys.readouterr().out == "# @ a @ m @ #\n"


def test_apply_inline_rule(capsys):
    assert run("apply", "-r", "t > d / _ #", "sunt", "tapere") == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["s u n t\ts u n d", "t a p e r e\tt a p e r e"]


def test_apply_malformed_rule_exit_2(capsys):
    assert run("apply", "-r", "t d / _", "sunt") == 2


def test_apply_unsegmentable_word_exit_2(capsys):
    assert run("apply", "-r", "t > d / _ #", "sunt9") == 2


def test_apply_empty_lexicon(tmp_path, capsys):
    lex = tmp_path / "empty.txt"
    lex.write_text("")
    assert run("apply", "-r", "t > d / _ #", "--lexicon", lex) == 0
    assert capsys.readouterr().out == ""


def test_derive_trace(tmp_path, capsys):
    cascade = tmp_path / "c.rules"
    cascade.write_text("a > e / _ #\ne > i / _ #\n")
    assert run("derive", "--cascade", cascade, "--trace", "ta", "ko") == 0
    out = capsys.readouterr().out
    assert "t a\tt i" in out
    assert "== a > e / _ #" in out


def test_parse_law_roundtrip(capsys):
    assert run("parse-law", "-r", "a > e / _ j") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["change_pos"] == [0]


def test_parse_law_constructor(capsys):
    text = "BasicAction(predicates=[lambda x: x == 'a'], change_pos=[0], mapping_fn=[lambda x: 'e'])"
    assert run("parse-law", "-r", text) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["predicates"] == [{"kind": "is", "args": ["a"]}]


def test_datagen_rp_ri_deterministic(tmp_path):
    out1 = tmp_path / "a.jsonl"
    out2 = tmp_path / "b.jsonl"
    for out in (out1, out2):
        assert run("datagen", "--condition", "rp-ri", "--count", "5", "--seed", "7", "--out", out) == 0
    assert out1.read_bytes() == out2.read_bytes()
    tasks = read_tasks(out1)
    assert len(tasks) == 5 and all(t.n_examples == 50 for t in tasks)
    manifest = json.loads((tmp_path / "a.jsonl.manifest.json").read_text())
    assert manifest["command"] == "datagen"
    assert str(out1) in manifest["outputs"]


def test_datagen_rp_li_requires_transcript_source(tmp_path):
    out = tmp_path / "x.jsonl"
    code = run(
        "datagen", "--condition", "rp-li", "--cache-only", "--count", "1",
        "--seed", "11", "--out", out,
    )
    assert code == 4  # cache-only with no fixtures and no cache
    assert not out.exists()


def test_datagen_rp_li_fixture_replay(tmp_path):
    out = tmp_path / "replay.jsonl"
    code = run(
        "datagen", "--condition", "rp-li", "--cache-only", "--fixtures", FIXTURES,
        "--count", "5", "--seed", "11", "--out", out,
    )
    assert code == 0
    tasks = read_tasks(out)
    assert len(tasks) == 5


def test_datagen_idp_pi_bundled(tmp_path):
    out = tmp_path / "idp.jsonl"
    assert run("datagen", "--condition", "idp-pi", "--count", "3", "--seed", "2", "--out", out) == 0
    tasks = read_tasks(out)
    assert len(tasks) == 3 and all(t.condition == "idp-pi" for t in tasks)


def test_bench_and_eval_roundtrip(tmp_path, capsys):
    bench_out = tmp_path / "bench.jsonl"
    assert run("bench", "--pair", "demo", "--seed", "0", "--out", bench_out) == 0
    tasks = read_tasks(bench_out)
    stats = json.loads((tmp_path / "bench.jsonl.stats.json").read_text())
    assert stats["task_count"] == len(tasks) == 10

    samples = tmp_path / "samples.jsonl"
    with open(samples, "w", encoding="utf-8") as fh:
        for task in tasks:
            from soundlaw.dsl import law_to_doc

            fh.write(json.dumps({"task_id": task.id, "sample_index": 0, "program": law_to_doc(task.gold_law)}) + "\n")
    prefix = tmp_path / "report"
    assert run("eval", "--tasks", bench_out, "--samples", samples, "--out", prefix) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["aggregates"]["pass_rate"] == 1.0
    md = (tmp_path / "report.md").read_text()
    assert "pass_rate" in md and "Avg" in md
    # report subcommand renders from the saved json
    assert run("report", "--eval", tmp_path / "report.json", "--format", "md") == 0
    assert "Avg" in capsys.readouterr().out


def test_eval_schema_error_exit_6(tmp_path):
    tasks = tmp_path / "t.jsonl"
    tasks.write_text('{"id": "x", "condition": "rp-ri", "inputs": ["a"], "outputs": ["a", "b"]}\n')
    samples = tmp_path / "s.jsonl"
    samples.write_text('{"task_id": "x", "sample_index": 0, "program": null}\n')
    assert run("eval", "--tasks", tasks, "--samples", samples, "--out", tmp_path / "r") == 6


def test_stats_alpha_only(capsys):
    assert run("stats", "--test", "wilcoxon", "--alpha", "0.05", "--m", "7") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["alpha_adjusted"] == pytest.approx(0.05 / 7)


def test_stats_comparison(tmp_path, capsys):
    x = tmp_path / "x.json"
    y = tmp_path / "y.json"
    x.write_text(json.dumps([1.0, 2.0, 3.5, 4.0, 6.0, 8.0, 1.5, 9.0]))
    y.write_text(json.dumps([2.0, 3.0, 3.0, 5.0, 7.0, 9.5, 2.5, 10.0]))
    assert run("stats", "-x", x, "-y", y, "--alternative", "less", "--alpha", "0.05", "--m", "2") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["n"] == 8 and 0 < doc["p"] <= 1
    assert doc["alpha_adjusted"] == 0.025
    assert doc["significant"] == (doc["p"] < 0.025)


def test_stats_property_extraction(tmp_path, capsys):
    report = {
        "per_task": [
            {"task_id": "a", "passed": True, "rewards": [1.0, 0.5]},
            {"task_id": "b", "passed": False, "rewards": [0.0, -1.0]},
        ]
    }
    x = tmp_path / "r1.json"
    x.write_text(json.dumps(report))
    y = tmp_path / "r2.json"
    report2 = {
        "per_task": [
            {"task_id": "a", "passed": False, "rewards": [0.5, 0.25]},
            {"task_id": "b", "passed": False, "rewards": [-0.5, -1.0]},
        ]
    }
    y.write_text(json.dumps(report2))
    assert run("stats", "-x", x, "-y", y, "--property", "reward_per_program") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["n"] == 3  # the one zero difference was dropped


def test_manifest_reproducibility(tmp_path):
    out = tmp_path / "m.jsonl"
    assert run("datagen", "--condition", "rp-ri", "--count", "3", "--seed", "5", "--out", out) == 0
    manifest = json.loads((tmp_path / "m.jsonl.manifest.json").read_text())
    recorded = manifest["outputs"][str(out)]
    assert hashlib.sha256(out.read_bytes()).hexdigest() == recorded
