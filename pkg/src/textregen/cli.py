"""Command-line interface.

Subcommands: ingest, train-predictor, corrupt, generate, evaluate,
downstream, experiment run <config>, report <results.csv>.

Exit codes: 0 success, 1 validation/parse error, 2 runtime failure.
The generation cache directory can be overridden with the
TEXTREGEN_CACHE_DIR environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from pathlib import Path

from .corpus import SplitSpec, load_corpus, save_corpus, split_corpus, top_k_labels
from .corruption import MaskedSequence, MaskingStrategy, Slot, corrupt, extract_context
from .decoder import DecodePolicy, generate_causal, infill
from .downstream.author import CharNgramVerifier, consistency_rate
from .downstream.classify import TfidfLinearClassifier, eval_classifier, make_labeled_docs
from .downstream.ner import PerceptronTagger, eval_tagger, reference_tag, tag_token_sequences
from .errors import ParseError, TextregenError, ValidationError
from .experiment import ExperimentConfig, ResultsTable, emit_report, run_experiment, _author_calibration, _author_pairs
from .metrics import score_generations, train_embeddings
from .predictor import BidirectionalNgram, CausalNgram, load_model, save_model
from .remote import RemotePredictor
from .seeding import derive_seed
from .tokenizer import EntityLexicon, MASK_TOKEN, make_token, tokenize


def _cmd_ingest(args):
    corpus = load_corpus(args.path, format=args.format)
    labels = Counter()
    authors = set()
    for doc in corpus:
        if doc.labels:
            labels.update(doc.labels)
        if doc.author_id:
            authors.add(doc.author_id)
    print(f"corpus: {corpus.name}")
    print(f"documents: {len(corpus)}")
    print(f"distinct labels: {len(labels)}")
    if labels:
        top = ", ".join(f"{l}({c})" for l, c in labels.most_common(6))
        print(f"top labels: {top}")
    print(f"distinct authors: {len(authors)}")
    if args.out:
        save_corpus(corpus, args.out)
        print(f"wrote normalized corpus to {args.out}")
    return 0


def _cmd_train_predictor(args):
    corpus = load_corpus(args.corpus)
    if args.mode == "mlm":
        model = BidirectionalNgram(
            order=args.order, smoothing=args.smoothing, min_count=args.min_count
        ).fit(corpus)
    else:
        model = CausalNgram(
            order=args.order, smoothing=args.smoothing,
            context_bonus=args.context_bonus, min_count=args.min_count,
        ).fit(corpus)
    save_model(model, args.out)
    print(f"trained {model.predictor_id} on {len(corpus)} docs -> {args.out}")
    return 0


def _load_lexicon(path):
    return EntityLexicon.from_tsv(path) if path else None


def _cmd_corrupt(args):
    corpus = load_corpus(args.corpus)
    strategy = MaskingStrategy.parse(args.strategy)
    lexicon = _load_lexicon(args.lexicon)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for doc in corpus:
            seq = tokenize(doc.text, lexicon=lexicon, doc_id=doc.id)
            doc_seed = derive_seed(args.seed, doc.id, str(strategy))
            masked = corrupt(seq, strategy, seed=doc_seed)
            fh.write(
                json.dumps(
                    {
                        "doc_id": doc.id,
                        "strategy": strategy.kind,
                        "ratio": strategy.ratio,
                        "seed": doc_seed,
                        "prompt": masked.prompt_surfaces(),
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    print(f"corrupted {len(corpus)} docs with {strategy} -> {args.out}")
    return 0


def _masked_from_prompt(obj):
    """Rebuild a MaskedSequence from a corrupt-file line. Masked slots
    hold mask-marker placeholders: originals never travel with prompts."""
    strategy = MaskingStrategy(obj["strategy"], obj.get("ratio"))
    slots = tuple(
        Slot(token=make_token(s), masked=(s == MASK_TOKEN)) for s in obj["prompt"]
    )
    return MaskedSequence(
        slots=slots, doc_id=obj["doc_id"], strategy=strategy, seed=obj.get("seed", 0)
    )


def _open_predictor(args, mode):
    if args.remote:
        return RemotePredictor(args.remote, mode=mode)
    if not args.model:
        raise ValidationError("generate needs --model or --remote")
    model = load_model(args.model)
    if model.mode != mode:
        raise ValidationError(f"model is {model.mode}-mode, requested {mode}")
    return model


def _cmd_generate(args):
    policy = DecodePolicy(
        mode=args.policy, temperature=args.temperature, top_k=args.top_k,
        length_cap_factor=args.length_cap_factor, seed=args.seed,
    )
    model = _open_predictor(args, args.mode)
    n = 0
    with open(args.masked, encoding="utf-8") as inp, open(
        args.out, "w", encoding="utf-8", newline="\n"
    ) as out:
        for lineno, line in enumerate(inp, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{args.masked}:{lineno}: {exc}") from exc
            masked = _masked_from_prompt(obj)
            if args.mode == "mlm":
                record = infill(masked, model, policy)
            else:
                context = extract_context(masked)
                record = generate_causal(context, len(masked), model, policy)
            out.write(json.dumps(record.to_json_obj(), ensure_ascii=False) + "\n")
            n += 1
    if hasattr(model, "close"):
        model.close()
    print(f"generated {n} documents -> {args.out}")
    return 0


def _read_generations(path):
    from .decoder import record_from_json_obj

    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(record_from_json_obj(json.loads(line)))
    return records


def _cmd_evaluate(args):
    corpus = load_corpus(args.corpus)
    originals = {d.id: tokenize(d.text, doc_id=d.id) for d in corpus}
    records = _read_generations(args.generations)
    missing = [r.doc_id for r in records if r.doc_id not in originals]
    if missing:
        raise ValidationError(f"generations reference unknown doc ids: {missing[:5]}")
    emb = None
    if args.embeddings_corpus:
        emb = train_embeddings(load_corpus(args.embeddings_corpus), seed=args.seed)
    cands = [r.output_tokens for r in records]
    refs = [originals[r.doc_id] for r in records]
    report = score_generations(cands, refs, emb)
    out = json.dumps(report.to_json_obj(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(out + "\n", encoding="utf-8")
        print(f"wrote metric report -> {args.out}")
    else:
        print(out)
    return 0


def _cmd_downstream(args):
    corpus = load_corpus(args.corpus)
    train, test = split_corpus(
        corpus, SplitSpec(train_fraction=args.train_fraction, seed=args.split_seed)
    )
    records = {r.doc_id: r for r in _read_generations(args.generations)}
    result = {"task": args.task, "model_id": args.model_id}
    if args.task == "ner":
        lexicon = _load_lexicon(args.lexicon)
        if lexicon is None:
            raise ValidationError("ner task needs --lexicon")
        synth = [records[d.id].output_tokens for d in train if d.id in records]
        if not synth:
            raise ValidationError("no generations cover the train split")
        tagged = tag_token_sequences(synth, lexicon)
        tagger = PerceptronTagger(epochs=5, seed=args.split_seed).fit(tagged)
        gold_test = reference_tag(test, lexicon)
        result.update(score=eval_tagger(tagger, gold_test),
                      n_train=len(tagged), n_test=len(gold_test))
    elif args.task == "classification":
        from .downstream.classify import LabeledDoc

        labels = top_k_labels(corpus, args.top_labels)
        clf_train = make_labeled_docs(train, labels)
        synth_train = []
        for doc in clf_train:
            record = records.get(doc.doc_id)
            if record is not None:
                synth_train.append(
                    LabeledDoc(doc_id=doc.doc_id, text=record.output_text,
                               label_set=doc.label_set)
                )
        if not synth_train:
            raise ValidationError("no generations cover the train split")
        clf = TfidfLinearClassifier(labels=labels, seed=args.split_seed).fit(synth_train)
        result.update(score=eval_classifier(clf, make_labeled_docs(test, labels)),
                      n_train=len(synth_train), n_test=len(test))
    else:  # authorship
        pairs, labels = _author_calibration(list(train))
        verifier = CharNgramVerifier().fit(pairs, labels)
        eval_pairs = []
        regenerated = {}
        for a, b in _author_pairs(list(test)):
            verdict = verifier.verify(a.text, b.text)
            if verdict.predicted_same and b.id in records:
                eval_pairs.append(verdict)
                regenerated[verdict] = records[b.id].output_text
        if not eval_pairs:
            raise ValidationError("no same-author pairs covered by the generations")
        result.update(score=consistency_rate(eval_pairs, regenerated, verifier),
                      n_train=len(pairs), n_test=len(eval_pairs))
    strategies = {r.strategy for r in records.values()}
    ratios = {r.strategy.ratio for r in records.values()}
    result["strategy"] = strategies.pop().kind if len(strategies) == 1 else "mixed"
    result["ratio"] = ratios.pop() if len(ratios) == 1 else None
    print(json.dumps(result, sort_keys=True))
    return 0


def _cmd_experiment_run(args):
    config = ExperimentConfig.from_yaml(args.config)
    table = run_experiment(config)
    files = emit_report(table, config.output_dir)
    print(
        f"{len(table)} result rows; cache hits={table.meta['cache_hits']} "
        f"misses={table.meta['cache_misses']}"
    )
    for f in files:
        print(f"wrote {f}")
    return 0


def _cmd_report(args):
    table = ResultsTable.from_csv(args.results)
    files = emit_report(table, args.outdir)
    for f in files:
        print(f"wrote {f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="textregen",
        description="Corrupt, regenerate, and score texts with infilling or "
        "left-to-right predictors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load, validate, and summarize a corpus")
    p.add_argument("path")
    p.add_argument("--format", choices=("jsonl", "plain_dir"), default="jsonl")
    p.add_argument("--out", help="write the normalized JSONL here")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("train-predictor", help="train a builtin n-gram predictor")
    p.add_argument("--corpus", required=True)
    p.add_argument("--mode", choices=("mlm", "clm"), required=True)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--smoothing", type=float, default=0.1)
    p.add_argument("--context-bonus", type=float, default=2.0)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train_predictor)

    p = sub.add_parser("corrupt", help="mask a corpus under a strategy")
    p.add_argument("--corpus", required=True)
    p.add_argument("--strategy", required=True,
                   help="random:<ratio> | stopwords | punctuation | "
                        "stopwords_punctuation | ner")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lexicon", help="entity lexicon TSV (needed for ner)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_corrupt)

    p = sub.add_parser("generate", help="regenerate corrupted documents")
    p.add_argument("--masked", required=True, help="output of `corrupt`")
    p.add_argument("--mode", choices=("mlm", "clm"), required=True)
    p.add_argument("--model", help="builtin model file from train-predictor")
    p.add_argument("--remote", help="wire-protocol endpoint (tcp://... or stdio:...)")
    p.add_argument("--policy", choices=("greedy", "sample"), default="greedy")
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--length-cap-factor", type=float, default=1.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("evaluate", help="score generations against originals")
    p.add_argument("--corpus", required=True)
    p.add_argument("--generations", required=True)
    p.add_argument("--embeddings-corpus",
                   help="corpus for the semantic-score embeddings (omit to skip)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write JSON report here instead of stdout")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("downstream", help="train-on-synthetic task harnesses")
    p.add_argument("--task", choices=("ner", "classification", "authorship"), required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--generations", required=True,
                   help="generations covering the train split (test split for authorship)")
    p.add_argument("--lexicon")
    p.add_argument("--model-id", default="unknown")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--top-labels", type=int, default=6)
    p.set_defaults(func=_cmd_downstream)

    p = sub.add_parser("experiment", help="grid experiment driver")
    esub = p.add_subparsers(dest="experiment_command", required=True)
    pr = esub.add_parser("run", help="run the grid from a YAML config")
    pr.add_argument("config")
    pr.set_defaults(func=_cmd_experiment_run)

    p = sub.add_parser("report", help="re-emit CSV + plots from a results.csv")
    p.add_argument("results")
    p.add_argument("--outdir", default="report")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TextregenError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
