import json
import sys

import yaml

from textregen.cli import main
from textregen.corpus import save_corpus, load_toy_corpus, toy_lexicon_path

def run(*argv):
    return main(list(argv))


def small_corpus(tmp_path, n=20):
    corpus = load_toy_corpus("medical")
    from textregen.corpus import Corpus

    path = tmp_path / "corpus.jsonl"
    save_corpus(Corpus(tuple(corpus[:n]), name="small"), path)
    return path


def test_ingest_summary(tmp_path, capsys):
    path = small_corpus(tmp_path)
    assert run("ingest", str(path)) == 0
    out = capsys.readouterr().out
    assert "documents: 20" in out


def test_ingest_bad_file_exit_1(tmp_path, capsys):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "a"}\n', encoding="utf-8")
    assert run("ingest", str(path)) == 1
    assert "error:" in capsys.readouterr().err


def test_full_pipeline_through_cli(tmp_path, capsys):
    corpus = small_corpus(tmp_path)
    model = tmp_path / "model.json"
    masked = tmp_path / "masked.jsonl"
    gens = tmp_path / "gens.jsonl"
    report = tmp_path / "report.json"

    assert run("train-predictor", "--corpus", str(corpus), "--mode", "mlm",
               "--order", "3", "--out", str(model)) == 0
    assert run("corrupt", "--corpus", str(corpus), "--strategy", "random:0.5",
               "--seed", "3", "--out", str(masked)) == 0
    with open(masked) as fh:
        first = json.loads(fh.readline())
    assert "[MASK]" in first["prompt"]

    assert run("generate", "--masked", str(masked), "--mode", "mlm",
               "--model", str(model), "--out", str(gens)) == 0
    with open(gens) as fh:
        record = json.loads(fh.readline())
    assert record["regime"] == "mlm"
    assert "[MASK]" not in record["output_surfaces"]

    assert run("evaluate", "--corpus", str(corpus), "--generations", str(gens),
               "--embeddings-corpus", str(corpus), "--out", str(report)) == 0
    data = json.loads(report.read_text())
    assert set(data["corpus"]) == {"bleu", "rouge1", "meteor", "semscore"}
    assert data["n_docs"] == 20


def test_clm_generate_through_cli(tmp_path):
    corpus = small_corpus(tmp_path)
    model = tmp_path / "clm.json"
    masked = tmp_path / "masked.jsonl"
    gens = tmp_path / "gens.jsonl"
    assert run("train-predictor", "--corpus", str(corpus), "--mode", "clm",
               "--out", str(model)) == 0
    assert run("corrupt", "--corpus", str(corpus), "--strategy", "stopwords",
               "--out", str(masked)) == 0
    assert run("generate", "--masked", str(masked), "--mode", "clm",
               "--model", str(model), "--out", str(gens)) == 0
    with open(gens) as fh:
        record = json.loads(fh.readline())
    assert record["regime"] == "clm"


def test_generate_remote_stub(tmp_path):
    from pathlib import Path

    corpus = small_corpus(tmp_path, n=4)
    masked = tmp_path / "masked.jsonl"
    gens = tmp_path / "gens.jsonl"
    stub = Path(__file__).parent / "stubserver.py"
    assert run("corrupt", "--corpus", str(corpus), "--strategy", "random:0.4",
               "--out", str(masked)) == 0
    assert run("generate", "--masked", str(masked), "--mode", "mlm",
               "--remote", f"stdio:{sys.executable} {stub}", "--out", str(gens)) == 0
    assert sum(1 for _ in open(gens)) == 4


def test_downstream_ner_cli(tmp_path, capsys):
    corpus = small_corpus(tmp_path, n=40)
    model = tmp_path / "model.json"
    masked = tmp_path / "masked.jsonl"
    gens = tmp_path / "gens.jsonl"
    run("train-predictor", "--corpus", str(corpus), "--mode", "mlm", "--out", str(model))
    run("corrupt", "--corpus", str(corpus), "--strategy", "random:0.5", "--out", str(masked))
    run("generate", "--masked", str(masked), "--mode", "mlm", "--model", str(model),
        "--out", str(gens))
    assert run("downstream", "--task", "ner", "--corpus", str(corpus),
               "--generations", str(gens), "--lexicon", str(toy_lexicon_path())) == 0
    result = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert result["task"] == "ner"
    assert 0.0 <= result["score"] <= 1.0
    assert result["strategy"] == "random" and result["ratio"] == 0.5


def test_experiment_run_and_report_cli(tmp_path, capsys):
    config = {
        "version": 1,
        "base_seed": 5,
        "sample_cap": 6,
        "output_dir": str(tmp_path / "out"),
        "corpora": [{"name": "medical", "path": "toy:medical"}],
        "predictors": [{"mode": "mlm", "order": 2}],
        "strategies": ["random"],
        "ratios": [0.4],
    }
    cfg = tmp_path / "config.yaml"
    cfg.write_text(yaml.safe_dump(config), encoding="utf-8")
    assert run("experiment", "run", str(cfg)) == 0
    out = capsys.readouterr().out
    assert "result rows" in out
    results = tmp_path / "out" / "results.csv"
    assert results.exists()
    assert run("report", str(results), "--outdir", str(tmp_path / "rep")) == 0
    assert (tmp_path / "rep" / "results.csv").read_bytes() == results.read_bytes()


def test_unknown_strategy_exit_1(tmp_path, capsys):
    corpus = small_corpus(tmp_path, n=4)
    assert run("corrupt", "--corpus", str(corpus), "--strategy", "bogus",
               "--out", str(tmp_path / "m.jsonl")) == 1
