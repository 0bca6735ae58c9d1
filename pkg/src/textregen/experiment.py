"""Grid experiment driver.

Runs the full comparison grid (corpus x predictor x strategy x ratio),
caches generations on disk so reruns are free, aggregates the four
quality metrics plus optional downstream scores into a keyed results
table, and emits a pinned-order CSV plus one SVG chart per
(corpus, metric) with ratio sweeps as curves and ratio-free strategies
as flat horizontal lines.

Determinism: per-document randomness derives from a stable 64-bit hash
of (base_seed, doc_id, regime, predictor_id, strategy, ratio), so no
cell's generations perturb another's and identical configs produce
byte-identical results.csv. Cells run sequentially; rows are keyed and
sorted before serialization, so a worker pool could fill the table in
any order without changing the output.

The config file is YAML (key/value with nested sections), schema
version 1; see ExperimentConfig.from_yaml.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .corpus import SplitSpec, load_corpus, split_corpus, top_k_labels, toy_corpus_path, toy_lexicon_path
from .corruption import RANDOM, MaskingStrategy, corrupt, extract_context
from .decoder import DecodePolicy, generate_causal, infill, record_from_json_obj
from .downstream.author import CharNgramVerifier, consistency_rate
from .downstream.classify import TfidfLinearClassifier, eval_classifier, make_labeled_docs
from .downstream.ner import PerceptronTagger, eval_tagger, reference_tag, tag_token_sequences
from .errors import TextregenError, ValidationError
from .metrics import bleu, meteor, rouge1, semscore, train_embeddings
from .plots import Series, line_plot_svg
from .predictor import BidirectionalNgram, CausalNgram
from .remote import RemotePredictor
from .seeding import derive_seed
from .tokenizer import EntityLexicon, tokenize

CACHE_DIR_ENV = "TEXTREGEN_CACHE_DIR"
CONFIG_VERSION = 1
QUALITY_METRICS = ("bleu", "rouge1", "meteor", "semscore")
DEFAULT_RATIOS = tuple(round(0.1 * i, 1) for i in range(1, 11))


@dataclass(frozen=True)
class CorpusSpec:
    name: str
    path: str  # filesystem path or "toy:<name>"
    format: str = "jsonl"
    lexicon: str | None = None  # TSV path or "toy:medical"


@dataclass(frozen=True)
class PredictorSpec:
    mode: str  # mlm | clm
    kind: str = "builtin"  # builtin | remote
    order: int = 3
    smoothing: float = 0.1
    context_bonus: float = 2.0
    min_count: int = 1
    endpoint: str | None = None
    id: str | None = None

    def __post_init__(self):
        if self.mode not in ("mlm", "clm"):
            raise ValidationError(f"predictor mode must be mlm or clm, not {self.mode!r}")
        if self.kind not in ("builtin", "remote"):
            raise ValidationError(f"predictor kind must be builtin or remote, not {self.kind!r}")
        if self.kind == "remote" and not self.endpoint:
            raise ValidationError("remote predictor needs an endpoint")


@dataclass
class ExperimentConfig:
    corpora: tuple
    predictors: tuple
    strategies: tuple = ("random",)
    ratios: tuple = DEFAULT_RATIOS
    sample_cap: int = 200
    base_seed: int = 0
    output_dir: str = "out"
    split: SplitSpec = field(default_factory=SplitSpec)
    downstream: dict = field(default_factory=dict)
    decode: dict = field(default_factory=dict)
    embeddings: dict = field(default_factory=lambda: {"dim": 64, "window": 3})
    clm_include_full_ratio: bool = False  # the 100% ratio is unfair to clm

    def __post_init__(self):
        if self.sample_cap < 1:
            raise ValidationError("sample_cap must be >= 1")
        if not self.corpora:
            raise ValidationError("config needs at least one corpus")
        if not self.predictors:
            raise ValidationError("config needs at least one predictor")
        for r in self.ratios:
            if not 0.0 <= r <= 1.0:
                raise ValidationError(f"ratio {r} outside [0, 1]")
        for s in self.strategies:
            if s != "random":
                MaskingStrategy.parse(s)  # validates the grammar

    @classmethod
    def from_yaml(cls, path):
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
        if not isinstance(raw, dict):
            raise ValidationError(f"{path}: config must be a mapping")
        version = raw.get("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ValidationError(f"{path}: unsupported config version {version}")
        try:
            corpora = tuple(CorpusSpec(**c) for c in raw["corpora"])
            predictors = tuple(PredictorSpec(**p) for p in raw["predictors"])
        except KeyError as exc:
            raise ValidationError(f"{path}: missing config section {exc}") from exc
        except TypeError as exc:
            raise ValidationError(f"{path}: bad config entry: {exc}") from exc
        split = raw.get("split", {})
        return cls(
            corpora=corpora,
            predictors=predictors,
            strategies=tuple(raw.get("strategies", ("random",))),
            ratios=tuple(raw.get("ratios", DEFAULT_RATIOS)),
            sample_cap=raw.get("sample_cap", 200),
            base_seed=raw.get("base_seed", 0),
            output_dir=raw.get("output_dir", "out"),
            split=SplitSpec(
                train_fraction=split.get("train_fraction", 0.8),
                seed=split.get("seed", 0),
            ),
            downstream=raw.get("downstream", {}),
            decode=raw.get("decode", {}),
            embeddings=raw.get("embeddings", {"dim": 64, "window": 3}),
            clm_include_full_ratio=raw.get("clm_include_full_ratio", False),
        )


def resolve_corpus(spec):
    if spec.path.startswith("toy:"):
        return load_corpus(toy_corpus_path(spec.path[4:]), name=spec.name)
    return load_corpus(spec.path, format=spec.format, name=spec.name)


def resolve_lexicon(spec):
    if spec.lexicon is None:
        return None
    if spec.lexicon == "toy:medical":
        return EntityLexicon.from_tsv(toy_lexicon_path())
    return EntityLexicon.from_tsv(spec.lexicon)


@dataclass(frozen=True)
class Row:
    experiment_id: str
    regime: str
    predictor_id: str
    strategy: str
    ratio: float | None
    metric_name: str
    value: float
    n_docs: int
    seed: int

    @property
    def key(self):
        return (
            self.experiment_id,
            self.regime,
            self.predictor_id,
            self.strategy,
            self.ratio,
            self.metric_name,
        )


CSV_COLUMNS = (
    "experiment_id", "regime", "predictor_id", "strategy", "ratio",
    "metric_name", "value", "n_docs", "seed",
)


class ResultsTable:
    """Keyed result rows; (experiment_id, regime, predictor_id, strategy,
    ratio, metric_name) is unique."""

    def __init__(self, rows=()):
        self._rows = {}
        self.meta = {"cache_hits": 0, "cache_misses": 0}
        for row in rows:
            self.add(row)

    def add(self, row):
        if row.key in self._rows:
            raise ValidationError(f"duplicate results row {row.key}")
        self._rows[row.key] = row

    @property
    def rows(self):
        return sorted(
            self._rows.values(),
            key=lambda r: (
                r.experiment_id, r.regime, r.predictor_id, r.strategy,
                -1.0 if r.ratio is None else r.ratio, r.metric_name,
            ),
        )

    def __len__(self):
        return len(self._rows)

    def __eq__(self, other):
        return isinstance(other, ResultsTable) and self._rows == other._rows

    def to_csv(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for r in self.rows:
                writer.writerow(
                    [
                        r.experiment_id, r.regime, r.predictor_id, r.strategy,
                        "" if r.ratio is None else repr(float(r.ratio)),
                        r.metric_name, repr(float(r.value)), r.n_docs, r.seed,
                    ]
                )
        return path

    @classmethod
    def from_csv(cls, path):
        table = cls()
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
                raise ValidationError(f"{path}: unexpected CSV columns {reader.fieldnames}")
            for rec in reader:
                table.add(
                    Row(
                        experiment_id=rec["experiment_id"],
                        regime=rec["regime"],
                        predictor_id=rec["predictor_id"],
                        strategy=rec["strategy"],
                        ratio=None if rec["ratio"] == "" else float(rec["ratio"]),
                        metric_name=rec["metric_name"],
                        value=float(rec["value"]),
                        n_docs=int(rec["n_docs"]),
                        seed=int(rec["seed"]),
                    )
                )
        return table


def _build_predictor(spec, train_corpus):
    if spec.kind == "remote":
        handle = RemotePredictor(spec.endpoint, mode=spec.mode)
    elif spec.mode == "mlm":
        handle = BidirectionalNgram(
            order=spec.order, smoothing=spec.smoothing, min_count=spec.min_count
        ).fit(train_corpus)
    else:
        handle = CausalNgram(
            order=spec.order, smoothing=spec.smoothing,
            context_bonus=spec.context_bonus, min_count=spec.min_count,
        ).fit(train_corpus)
    predictor_id = spec.id or handle.predictor_id
    return handle, predictor_id


def _corpus_fingerprint(corpus):
    h = hashlib.blake2b(digest_size=8)
    for doc in corpus:
        h.update(doc.id.encode())
        h.update(b"\x1f")
        h.update(doc.text.encode())
        h.update(b"\x1e")
    return h.hexdigest()


def _strategy_cells(config, regime, has_lexicon):
    """(MaskingStrategy, ratio-or-None) cells for one regime."""
    cells = []
    for name in config.strategies:
        if name == "random":
            for ratio in config.ratios:
                if regime == "clm" and ratio >= 1.0 and not config.clm_include_full_ratio:
                    continue
                cells.append(MaskingStrategy(RANDOM, ratio))
        else:
            strategy = MaskingStrategy.parse(name)
            if strategy.kind == "keep_entities" and not has_lexicon:
                continue
            cells.append(strategy)
    return cells


class _CellRunner:
    """Generation (with disk cache) for one corpus + predictor pair."""

    def __init__(self, config, corpus_name, fingerprint, handle, predictor_id, policy_base):
        self.config = config
        self.corpus_name = corpus_name
        self.fingerprint = fingerprint
        self.handle = handle
        self.predictor_id = predictor_id
        self.policy_base = policy_base
        cache_root = os.environ.get(CACHE_DIR_ENV) or str(Path(config.output_dir) / "cache")
        self.cache_dir = Path(cache_root)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.cache_hits = 0
        self.cache_misses = 0

    def _cache_path(self, strategy, subset_tag, n_docs):
        h = hashlib.blake2b(digest_size=12)
        parts = (
            self.fingerprint, self.corpus_name, subset_tag, self.handle.mode,
            self.predictor_id, str(strategy), str(self.config.base_seed),
            str(sorted(self.config.decode.items())), str(n_docs),
        )
        h.update("\x1f".join(parts).encode())
        return self.cache_dir / f"gen-{h.hexdigest()}.jsonl"

    def generate(self, sequences, strategy, subset_tag):
        """GenerationRecords for the given sequences under one strategy,
        reusing the per-cell cache when present."""
        path = self._cache_path(strategy, subset_tag, len(sequences))
        if path.exists():
            records = []
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    records.append(record_from_json_obj(json.loads(line)))
            if len(records) == len(sequences):
                self.cache_hits += 1
                return records
        records = []
        regime = self.handle.mode
        for seq in sequences:
            doc_seed = derive_seed(
                self.config.base_seed, seq.doc_id, regime, self.predictor_id,
                strategy.kind, "" if strategy.ratio is None else repr(strategy.ratio),
            )
            masked = corrupt(seq, strategy, seed=doc_seed)
            policy = DecodePolicy(seed=doc_seed, **self.policy_base)
            if regime == "mlm":
                records.append(infill(masked, self.handle, policy))
            else:
                context = extract_context(masked)
                records.append(generate_causal(context, len(seq), self.handle, policy))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for record in records:
                fh.write(json.dumps(record.to_json_obj(), ensure_ascii=False) + "\n")
        self.cache_misses += 1
        return records


def _author_pairs(docs):
    by_author = {}
    for doc in sorted(docs, key=lambda d: d.id):
        if doc.author_id:
            by_author.setdefault(doc.author_id, []).append(doc)
    pairs = []
    for author in sorted(by_author):
        group = by_author[author]
        for i in range(0, len(group) - 1, 2):
            pairs.append((group[i], group[i + 1]))
    return pairs


def _author_calibration(train_docs):
    by_author = {}
    for doc in sorted(train_docs, key=lambda d: d.id):
        if doc.author_id:
            by_author.setdefault(doc.author_id, []).append(doc)
    authors = sorted(by_author)
    pairs, labels = [], []
    for author in authors:
        group = by_author[author]
        for i in range(0, len(group) - 1, 2):
            pairs.append((group[i].text, group[i + 1].text))
            labels.append(True)
    for i, author in enumerate(authors):
        other = authors[(i + 1) % len(authors)]
        if by_author[author] and by_author[other]:
            pairs.append((by_author[author][0].text, by_author[other][-1].text))
            labels.append(False)
    return pairs, labels


def run_experiment(config):
    """Run the full grid; returns the keyed ResultsTable.

    Failures inside one cell are recorded as an ``error`` row (value
    NaN) and the run continues, so partial results are still valid.
    """
    table = ResultsTable()
    policy_base = dict(config.decode)
    policy_base.pop("seed", None)  # decode seeds always derive per document
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    downstream_log = []

    for corpus_spec in config.corpora:
        corpus = resolve_corpus(corpus_spec)
        lexicon = resolve_lexicon(corpus_spec)
        train, test = split_corpus(corpus, config.split)
        test_docs = list(test)[: config.sample_cap]
        train_docs = list(train)[: config.sample_cap]
        test_seqs = [tokenize(d.text, lexicon=lexicon, doc_id=d.id) for d in test_docs]
        train_seqs = [tokenize(d.text, lexicon=lexicon, doc_id=d.id) for d in train_docs]
        emb = train_embeddings(
            train,
            dim=config.embeddings.get("dim", 64),
            window=config.embeddings.get("window", 3),
            seed=derive_seed(config.base_seed, corpus_spec.name, "embeddings"),
        )
        fingerprint = _corpus_fingerprint(corpus)
        downstream_ctx = _DownstreamContext(config, corpus_spec, corpus, lexicon,
                                            train_docs, test_docs, table, downstream_log)
        downstream_ctx.baseline_rows()

        for pred_spec in config.predictors:
            handle, predictor_id = _build_predictor(pred_spec, train)
            runner = _CellRunner(
                config, corpus_spec.name, fingerprint, handle, predictor_id, policy_base
            )
            for strategy in _strategy_cells(config, handle.mode, lexicon is not None):
                try:
                    records = runner.generate(test_seqs, strategy, "test")
                    _quality_rows(
                        table, config, corpus_spec.name, handle.mode, predictor_id,
                        strategy, records, test_seqs, emb,
                    )
                    downstream_ctx.cell_rows(
                        runner, handle.mode, predictor_id, strategy, train_seqs, records
                    )
                except TextregenError as exc:
                    print(
                        f"warning: cell ({corpus_spec.name}, {predictor_id}, {strategy}) "
                        f"failed: {exc}",
                        file=sys.stderr,
                    )
                    table.add(
                        Row(
                            experiment_id=corpus_spec.name, regime=handle.mode,
                            predictor_id=predictor_id, strategy=strategy.kind,
                            ratio=strategy.ratio, metric_name="error",
                            value=float("nan"), n_docs=len(test_seqs),
                            seed=config.base_seed,
                        )
                    )
            table.meta["cache_hits"] += runner.cache_hits
            table.meta["cache_misses"] += runner.cache_misses
            if hasattr(handle, "close"):
                handle.close()

    if downstream_log:
        with open(outdir / "downstream.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            for entry in downstream_log:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
    return table


def _quality_rows(table, config, experiment_id, regime, predictor_id, strategy,
                  records, references, emb):
    outputs = [r.output_tokens for r in records]
    values = {
        "bleu": bleu(outputs, references),
        "rouge1": sum(rouge1(o, r) for o, r in zip(outputs, references)) / len(outputs),
        "meteor": sum(meteor(o, r) for o, r in zip(outputs, references)) / len(outputs),
        "semscore": sum(semscore(o, r, emb) for o, r in zip(outputs, references)) / len(outputs),
    }
    for name in QUALITY_METRICS:
        table.add(
            Row(
                experiment_id=experiment_id, regime=regime, predictor_id=predictor_id,
                strategy=strategy.kind, ratio=strategy.ratio, metric_name=name,
                value=values[name], n_docs=len(outputs), seed=config.base_seed,
            )
        )


class _DownstreamContext:
    """Per-corpus downstream state: reference tags, labels, author pairs."""

    def __init__(self, config, corpus_spec, corpus, lexicon, train_docs, test_docs,
                 table, log):
        self.config = config
        self.spec = corpus_spec
        self.table = table
        self.log = log
        toggles = config.downstream or {}
        self.ner_on = bool(toggles.get("ner")) and lexicon is not None
        self.lexicon = lexicon
        self.train_docs = train_docs
        self.test_docs = test_docs
        has_labels = any(d.labels for d in corpus)
        self.clf_on = bool(toggles.get("classification")) and has_labels
        has_authors = any(d.author_id for d in corpus)
        self.author_on = bool(toggles.get("authorship")) and has_authors
        if self.ner_on:
            self.gold_train = reference_tag(_as_corpus(train_docs), lexicon)
            self.gold_test = reference_tag(_as_corpus(test_docs), lexicon)
        if self.clf_on:
            self.labels = top_k_labels(corpus, min(6, _distinct_labels(corpus)))
            self.clf_train = make_labeled_docs(_as_corpus(train_docs), self.labels)
            self.clf_test = make_labeled_docs(_as_corpus(test_docs), self.labels)
        if self.author_on:
            pairs, labels = _author_calibration(train_docs)
            self.verifier = CharNgramVerifier().fit(pairs, labels)
            self.eval_pairs = [
                (a, b, self.verifier.verify(a.text, b.text))
                for a, b in _author_pairs(test_docs)
            ]
            self.eval_pairs = [
                (a, b, pair) for a, b, pair in self.eval_pairs if pair.predicted_same
            ]

    def _emit(self, task, regime, predictor_id, strategy, score, n_train, n_test):
        self.table.add(
            Row(
                experiment_id=self.spec.name, regime=regime, predictor_id=predictor_id,
                strategy=strategy.kind if strategy else "real",
                ratio=strategy.ratio if strategy else None,
                metric_name=task, value=score, n_docs=n_test,
                seed=self.config.base_seed,
            )
        )
        self.log.append(
            {
                "task": task, "model_id": predictor_id,
                "strategy": strategy.kind if strategy else "real",
                "ratio": strategy.ratio if strategy else None,
                "score": score, "n_train": n_train, "n_test": n_test,
            }
        )

    def baseline_rows(self):
        """Train-on-real reference scores, mirroring the figures' real-data line."""
        if self.ner_on:
            tagger = PerceptronTagger(epochs=5, seed=self.config.base_seed).fit(self.gold_train)
            score = eval_tagger(tagger, self.gold_test)
            self._emit("ner_f1", "real", "real-data", None, score,
                       len(self.gold_train), len(self.gold_test))
        if self.clf_on:
            clf = TfidfLinearClassifier(labels=self.labels, seed=self.config.base_seed)
            clf.fit(self.clf_train)
            score = eval_classifier(clf, self.clf_test)
            self._emit("classification_f1", "real", "real-data", None, score,
                       len(self.clf_train), len(self.clf_test))

    def cell_rows(self, runner, regime, predictor_id, strategy, train_seqs, test_records):
        synth_records = None
        if self.ner_on or self.clf_on:
            synth_records = runner.generate(train_seqs, strategy, "train")
        if self.ner_on:
            synth_tagged = tag_token_sequences(
                [r.output_tokens for r in synth_records], self.lexicon
            )
            tagger = PerceptronTagger(epochs=5, seed=self.config.base_seed).fit(synth_tagged)
            score = eval_tagger(tagger, self.gold_test)
            self._emit("ner_f1", regime, predictor_id, strategy, score,
                       len(synth_tagged), len(self.gold_test))
        if self.clf_on:
            synth_docs = [
                _relabel(doc, record) for doc, record in zip(self.clf_train, synth_records)
            ]
            try:
                clf = TfidfLinearClassifier(
                    labels=self.labels, seed=self.config.base_seed
                ).fit(synth_docs)
                score = eval_classifier(clf, self.clf_test)
            except ValidationError:
                score = float("nan")
            self._emit("classification_f1", regime, predictor_id, strategy, score,
                       len(synth_docs), len(self.clf_test))
        if self.author_on and self.eval_pairs:
            by_id = {r.doc_id: r for r in test_records}
            pairs = []
            regenerated = {}
            for _, doc_b, pair in self.eval_pairs:
                record = by_id.get(doc_b.id)
                if record is None:
                    continue
                pairs.append(pair)
                regenerated[pair] = record.output_text
            if pairs:
                score = consistency_rate(pairs, regenerated, self.verifier)
                self._emit("author_consistency", regime, predictor_id, strategy,
                           score, 0, len(pairs))


def _as_corpus(docs):
    from .corpus import Corpus

    return Corpus(tuple(docs), name="subset")


def _distinct_labels(corpus):
    labels = set()
    for doc in corpus:
        labels.update(doc.labels or ())
    return len(labels)


def _relabel(labeled_doc, record):
    from .downstream.classify import LabeledDoc

    return LabeledDoc(
        doc_id=labeled_doc.doc_id,
        text=record.output_text,
        label_set=labeled_doc.label_set,
    )


def emit_report(table, outdir):
    """results.csv plus one SVG per (experiment_id, metric)."""
    if len(table) == 0:
        raise ValidationError("cannot report an empty results table")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = [table.to_csv(outdir / "results.csv")]
    groups = {}
    for row in table.rows:
        if row.metric_name == "error":
            continue
        groups.setdefault((row.experiment_id, row.metric_name), []).append(row)
    for (experiment_id, metric), rows in sorted(groups.items()):
        series = []
        by_line = {}
        for row in rows:
            by_line.setdefault((row.regime, row.predictor_id, row.strategy), []).append(row)
        for (regime, predictor_id, strategy), line_rows in sorted(by_line.items()):
            if strategy == RANDOM:
                points = [(r.ratio, r.value) for r in line_rows if not math.isnan(r.value)]
                if points:
                    series.append(Series(f"{regime}/{predictor_id}", points=points))
            else:
                for r in line_rows:
                    if not math.isnan(r.value):
                        series.append(
                            Series(
                                f"{regime}/{predictor_id} {strategy}",
                                level=r.value,
                                dashed=True,
                            )
                        )
        if not series:
            continue
        values = []
        for s in series:
            if s.points:
                values.extend(y for _, y in s.points)
            else:
                values.append(s.level)
        y_max = max(1.0, max(values))
        y_min = min(0.0, min(values))
        svg = line_plot_svg(
            title=f"{experiment_id}: {metric}",
            xlabel="masking ratio",
            ylabel=metric,
            series=series,
            x_range=(0.0, 1.0),
            y_range=(y_min, y_max),
        )
        path = outdir / f"{experiment_id}_{metric}.svg"
        path.write_text(svg, encoding="utf-8")
        files.append(path)
    return files
