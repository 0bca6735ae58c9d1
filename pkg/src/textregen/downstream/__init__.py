"""Downstream usefulness harnesses.

Three tasks measure whether regenerated text can stand in for the real
corpus: train-on-synthetic entity tagging, train-on-synthetic
multi-label classification, and authorship-verification consistency.
Each uses a small deterministic stand-in model honoring the same harness
contract as a full-size counterpart; absolute scores are stand-in
scores, not comparable to published neural results.

Harness isolation rule: labels and tags attached to synthetic text
always come from the reference tagger or the original documents, never
from the generator.
"""

from .author import (
    AuthorPair,
    CharNgramVerifier,
    calibrate_threshold,
    consistency_rate,
    trigram_profile,
    verify_pair,
)
from .classify import LabeledDoc, TfidfLinearClassifier, eval_classifier, make_labeled_docs
from .ner import (
    PerceptronTagger,
    TaggedSequence,
    eval_tagger,
    reference_tag,
    spans_from_tags,
)

__all__ = [
    "AuthorPair",
    "CharNgramVerifier",
    "LabeledDoc",
    "PerceptronTagger",
    "TaggedSequence",
    "TfidfLinearClassifier",
    "calibrate_threshold",
    "consistency_rate",
    "eval_classifier",
    "eval_tagger",
    "make_labeled_docs",
    "reference_tag",
    "spans_from_tags",
    "trigram_profile",
    "verify_pair",
]
