import pytest
import yaml

from textregen.corpus import SplitSpec
from textregen.errors import ValidationError
from textregen.experiment import (
    CorpusSpec,
    ExperimentConfig,
    PredictorSpec,
    ResultsTable,
    Row,
    emit_report,
    run_experiment,
)
from textregen.seeding import derive_seed


def small_config(tmp_path, **overrides):
    base = dict(
        corpora=(CorpusSpec(name="medical", path="toy:medical", lexicon="toy:medical"),),
        predictors=(
            PredictorSpec(mode="mlm", order=3),
            PredictorSpec(mode="clm", order=3),
        ),
        strategies=("random", "stopwords"),
        ratios=(0.5,),
        sample_cap=8,
        base_seed=7,
        output_dir=str(tmp_path / "out"),
        split=SplitSpec(train_fraction=0.8, seed=11),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_grid_row_arithmetic(tmp_path):
    config = small_config(
        tmp_path,
        predictors=(PredictorSpec(mode="mlm", order=3),),
        strategies=("random",),
        ratios=(0.5,),
    )
    table = run_experiment(config)
    # 1 regime x 1 predictor x 1 cell -> one row per quality metric
    assert len(table) == 4
    assert {r.metric_name for r in table.rows} == {"bleu", "rouge1", "meteor", "semscore"}
    for r in table.rows:
        assert r.n_docs == 8
        assert r.strategy == "random" and r.ratio == 0.5


def test_clm_excludes_full_ratio_by_default(tmp_path):
    config = small_config(tmp_path, strategies=("random",), ratios=(0.5, 1.0))
    table = run_experiment(config)
    clm_ratios = {r.ratio for r in table.rows if r.regime == "clm"}
    mlm_ratios = {r.ratio for r in table.rows if r.regime == "mlm"}
    assert clm_ratios == {0.5}
    assert mlm_ratios == {0.5, 1.0}


def test_rerun_identical_and_cached(tmp_path):
    config = small_config(tmp_path)
    table1 = run_experiment(config)
    assert table1.meta["cache_misses"] > 0
    csv1 = table1.to_csv(tmp_path / "a.csv").read_bytes()
    table2 = run_experiment(config)
    assert table2.meta["cache_hits"] > 0
    assert table2.meta["cache_misses"] == 0
    csv2 = table2.to_csv(tmp_path / "b.csv").read_bytes()
    assert csv1 == csv2


def test_cache_dir_env_override(tmp_path, monkeypatch):
    cache = tmp_path / "elsewhere"
    monkeypatch.setenv("TEXTREGEN_CACHE_DIR", str(cache))
    run_experiment(small_config(tmp_path, strategies=("random",), ratios=(0.3,)))
    assert any(cache.glob("gen-*.jsonl"))


def test_sample_cap_honored(tmp_path):
    config = small_config(tmp_path, sample_cap=3, strategies=("random",))
    table = run_experiment(config)
    assert all(r.n_docs == 3 for r in table.rows if r.metric_name == "bleu")


def test_cell_seed_independence(tmp_path):
    # adding a second strategy must not change the first strategy's rows
    t_one = run_experiment(small_config(tmp_path, strategies=("random",)))
    t_two = run_experiment(
        small_config(tmp_path, strategies=("random", "punctuation"),
                     output_dir=str(tmp_path / "out2"))
    )
    first = {r.key: r.value for r in t_one.rows}
    second = {r.key: r.value for r in t_two.rows if r.strategy == "random"}
    assert first == second


def test_downstream_rows_emitted(tmp_path):
    config = small_config(
        tmp_path,
        predictors=(PredictorSpec(mode="mlm", order=3),),
        strategies=("random",),
        ratios=(0.5,),
        downstream={"ner": True},
    )
    table = run_experiment(config)
    ner_rows = [r for r in table.rows if r.metric_name == "ner_f1"]
    assert any(r.regime == "real" for r in ner_rows)  # train-on-real baseline
    assert any(r.regime == "mlm" for r in ner_rows)
    assert (tmp_path / "out" / "downstream.jsonl").exists()


def test_downstream_classification_and_authorship(tmp_path):
    config = ExperimentConfig(
        corpora=(CorpusSpec(name="movies", path="toy:movies"),
                 CorpusSpec(name="authors", path="toy:authors")),
        predictors=(PredictorSpec(mode="mlm", order=3),),
        strategies=("random",),
        ratios=(0.5,),
        sample_cap=30,
        base_seed=4,
        output_dir=str(tmp_path / "out"),
        split=SplitSpec(train_fraction=0.8, seed=11),
        downstream={"classification": True, "authorship": True},
    )
    table = run_experiment(config)
    clf = [r for r in table.rows if r.metric_name == "classification_f1"]
    assert {r.regime for r in clf} == {"real", "mlm"}
    assert all(0.0 <= r.value <= 1.0 for r in clf)
    consistency = [r for r in table.rows if r.metric_name == "author_consistency"]
    assert len(consistency) == 1
    assert 0.0 <= consistency[0].value <= 1.0


def test_results_table_uniqueness():
    row = Row("e", "mlm", "p", "random", 0.5, "bleu", 0.5, 10, 1)
    table = ResultsTable([row])
    with pytest.raises(ValidationError):
        table.add(row)


def test_results_csv_round_trip(tmp_path):
    table = run_experiment(small_config(tmp_path))
    path = table.to_csv(tmp_path / "results.csv")
    again = ResultsTable.from_csv(path)
    assert again == table


def test_emit_report_files(tmp_path):
    config = small_config(tmp_path, strategies=("random", "stopwords"), ratios=(0.2, 0.8))
    table = run_experiment(config)
    files = emit_report(table, tmp_path / "report")
    names = {f.name for f in files}
    assert "results.csv" in names
    for metric in ("bleu", "rouge1", "meteor", "semscore"):
        assert f"medical_{metric}.svg" in names
    svg = (tmp_path / "report" / "medical_bleu.svg").read_text()
    assert "<svg" in svg and "masking ratio" in svg
    # flat line for the ratio-free strategy (dashed), curves for random
    assert "stroke-dasharray" in svg


def test_config_yaml_round_trip(tmp_path):
    raw = {
        "version": 1,
        "base_seed": 3,
        "sample_cap": 5,
        "output_dir": str(tmp_path / "out"),
        "corpora": [{"name": "medical", "path": "toy:medical", "lexicon": "toy:medical"}],
        "predictors": [
            {"mode": "mlm", "order": 2},
            {"mode": "clm", "order": 2, "context_bonus": 1.5},
        ],
        "strategies": ["random", "punctuation"],
        "ratios": [0.25, 0.75],
        "split": {"train_fraction": 0.8, "seed": 4},
        "downstream": {"ner": False},
    }
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(raw), encoding="utf-8")
    config = ExperimentConfig.from_yaml(path)
    assert config.base_seed == 3
    assert config.predictors[1].context_bonus == 1.5
    assert config.ratios == (0.25, 0.75)


def test_config_validation(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("version: 1\ncorpora: []\npredictors: []\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        ExperimentConfig.from_yaml(path)
    path.write_text("version: 99\ncorpora: []\npredictors: []\n", encoding="utf-8")
    with pytest.raises(ValidationError, match="version"):
        ExperimentConfig.from_yaml(path)


def test_derive_seed_stability():
    a = derive_seed(7, "doc-1", "mlm", "p", "random", "0.5")
    b = derive_seed(7, "doc-1", "mlm", "p", "random", "0.5")
    c = derive_seed(7, "doc-1", "mlm", "p", "random", "0.6")
    assert a == b != c
    assert 0 <= a < 2**64
