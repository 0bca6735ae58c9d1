"""Entity tagging harness: lexicon reference tagger, averaged-perceptron
tagger, entity-level micro F1."""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass

from ..base import BaseEstimator, check_is_fitted
from ..errors import ValidationError
from ..tokenizer import TokenSequence, find_entity_spans, tokenize

OUTSIDE = "O"


@dataclass(frozen=True)
class TaggedSequence:
    """Token sequence with per-token BIO tags."""

    sequence: TokenSequence
    tags: tuple

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(self.tags) != len(self.sequence):
            raise ValidationError("one tag per token required")
        prev = OUTSIDE
        for tag in self.tags:
            if tag.startswith("I-"):
                etype = tag[2:]
                if prev == OUTSIDE or prev[2:] != etype:
                    raise ValidationError(f"I-{etype} cannot follow {prev}")
            elif tag != OUTSIDE and not tag.startswith("B-"):
                raise ValidationError(f"bad tag {tag!r}")
            prev = tag

    def __len__(self):
        return len(self.tags)


def reference_tag(corpus, lexicon):
    """BIO tags from longest-match lexicon spans (the reference labeller
    standing in for a pretrained entity model)."""
    if lexicon is None or len(lexicon) == 0:
        raise ValidationError("reference tagging requires a non-empty lexicon")
    tagged = []
    for doc in corpus:
        seq = tokenize(doc.text, lexicon=lexicon, doc_id=doc.id)
        tags = [OUTSIDE] * len(seq)
        for start, end, etype in find_entity_spans(seq.surfaces, lexicon):
            tags[start] = f"B-{etype}"
            for i in range(start + 1, end):
                tags[i] = f"I-{etype}"
        tagged.append(TaggedSequence(sequence=seq, tags=tuple(tags)))
    return tagged


def tag_token_sequences(sequences, lexicon):
    """As reference_tag but over already-tokenized sequences."""
    tagged = []
    for seq in sequences:
        tags = [OUTSIDE] * len(seq)
        for start, end, etype in find_entity_spans(seq.surfaces, lexicon):
            tags[start] = f"B-{etype}"
            for i in range(start + 1, end):
                tags[i] = f"I-{etype}"
        tagged.append(TaggedSequence(sequence=seq, tags=tuple(tags)))
    return tagged


def spans_from_tags(tags):
    """Entity spans (start, end_exclusive, type) from a BIO tag list."""
    spans = []
    start = None
    etype = None
    for i, tag in enumerate(tags):
        if tag.startswith("B-"):
            if start is not None:
                spans.append((start, i, etype))
            start, etype = i, tag[2:]
        elif tag.startswith("I-") and start is not None and tag[2:] == etype:
            continue
        else:
            if start is not None:
                spans.append((start, i, etype))
                start, etype = None, None
    if start is not None:
        spans.append((start, len(tags), etype))
    return spans


def _features(seq, i, prev_tag):
    tokens = seq.tokens
    n = len(tokens)

    def surf(j):
        return tokens[j].surface if 0 <= j < n else "<pad>"

    tok = tokens[i]
    return (
        "bias",
        f"w0={surf(i)}",
        f"w-1={surf(i - 1)}",
        f"w+1={surf(i + 1)}",
        f"w-2={surf(i - 2)}",
        f"w+2={surf(i + 2)}",
        f"punct={tok.is_punctuation}",
        f"stop={tok.is_stopword}",
        f"prev={prev_tag}",
        f"prev+w0={prev_tag}|{surf(i)}",
    )


class PerceptronTagger(BaseEstimator):
    """Averaged structured perceptron over window features, decoded
    greedily left to right with the previous predicted tag as a feature.

    Deterministic for a fixed seed: training order is a seeded shuffle
    per epoch and ties in scoring break by tag name.
    """

    def __init__(self, epochs=5, seed=0):
        if epochs < 1:
            raise ValidationError("epochs must be >= 1")
        self.epochs = epochs
        self.seed = seed
        self.weights_ = None

    def fit(self, tagged):
        tagged = list(tagged)
        if not tagged:
            raise ValidationError("cannot train a tagger on an empty set")
        self.tags_ = sorted({t for ts in tagged for t in ts.tags} | {OUTSIDE})
        weights = defaultdict(float)
        totals = defaultdict(float)
        stamps = defaultdict(int)
        clock = 0
        rng = random.Random(int(self.seed))
        order = list(range(len(tagged)))
        for _ in range(self.epochs):
            rng.shuffle(order)
            for idx in order:
                example = tagged[idx]
                prev = OUTSIDE
                for i, gold in enumerate(example.tags):
                    feats = _features(example.sequence, i, prev)
                    guess = self._score_argmax(weights, feats)
                    if guess != gold:
                        clock += 1
                        for f in feats:
                            for tag, delta in ((gold, 1.0), (guess, -1.0)):
                                key = (f, tag)
                                totals[key] += (clock - stamps[key]) * weights[key]
                                stamps[key] = clock
                                weights[key] += delta
                    prev = gold  # teacher forcing during training
        clock += 1
        averaged = {}
        for key, w in weights.items():
            total = totals[key] + (clock - stamps[key]) * w
            value = total / clock
            if value != 0.0:
                averaged[key] = value
        self.weights_ = averaged
        return self

    def _score_argmax(self, weights, feats):
        best_tag = None
        best = None
        for tag in self.tags_:
            score = 0.0
            for f in feats:
                w = weights.get((f, tag))
                if w:
                    score += w
            if best is None or score > best:
                best, best_tag = score, tag
        return best_tag

    def predict(self, seq):
        """BIO tags for one token sequence; invalid I- continuations are
        repaired to B- so outputs always satisfy the tag invariants."""
        check_is_fitted(self, "weights_")
        tags = []
        prev = OUTSIDE
        for i in range(len(seq)):
            tag = self._score_argmax(self.weights_, _features(seq, i, prev))
            if tag.startswith("I-") and (prev == OUTSIDE or prev[2:] != tag[2:]):
                tag = "B-" + tag[2:]
            tags.append(tag)
            prev = tag
        return TaggedSequence(sequence=seq, tags=tuple(tags))


def eval_tagger(tagger, test):
    """Entity-level micro F1: a predicted span counts as a true positive
    only on exact (start, end, type) match."""
    test = list(test)
    if not test:
        raise ValidationError("cannot evaluate on an empty test set")
    tp = fp = fn = 0
    for example in test:
        gold = set(spans_from_tags(example.tags))
        pred = set(spans_from_tags(tagger.predict(example.sequence).tags))
        tp += len(gold & pred)
        fp += len(pred - gold)
        fn += len(gold - pred)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)
