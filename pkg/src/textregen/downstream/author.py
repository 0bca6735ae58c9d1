"""Authorship verification harness: character-3-gram stylometry.

The verifier scores a pair of texts by the cosine of their character
trigram frequency profiles and predicts same-author when the score
reaches a threshold (>= rule). The threshold is calibrated on held-out
same/different pairs to maximize accuracy, ties toward the lower
threshold. The consistency rate measures how often pairs judged
same-author keep that judgement after one side is regenerated.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from ..base import BaseEstimator, check_is_fitted
from ..errors import ValidationError

MIN_TEXT_CHARS = 20


@dataclass(frozen=True)
class AuthorPair:
    text_a: str
    text_b: str
    predicted_same: bool
    score: float


def trigram_profile(text, n=3):
    """Character n-gram counts over the lowercased text."""
    text = text.lower()
    return Counter(text[i : i + n] for i in range(len(text) - n + 1))


def _cosine(p, q):
    num = sum(c * q[g] for g, c in p.items() if g in q)
    if num == 0:
        return 0.0
    return num / (
        math.sqrt(sum(c * c for c in p.values()))
        * math.sqrt(sum(c * c for c in q.values()))
    )


def verify_pair(text_a, text_b, threshold, n=3):
    """Score two texts and predict same-author by the >= rule."""
    for text in (text_a, text_b):
        if len(text) < MIN_TEXT_CHARS:
            raise ValidationError(
                f"texts must be at least {MIN_TEXT_CHARS} characters, got {len(text)}"
            )
    score = _cosine(trigram_profile(text_a, n), trigram_profile(text_b, n))
    return AuthorPair(
        text_a=text_a, text_b=text_b, predicted_same=score >= threshold, score=score
    )


def calibrate_threshold(same_scores, diff_scores):
    """The threshold maximizing accuracy on calibration scores; ties
    resolve toward the lower threshold."""
    same_scores = list(same_scores)
    diff_scores = list(diff_scores)
    if not same_scores or not diff_scores:
        raise ValidationError("calibration needs both same and different pairs")
    candidates = sorted(set(same_scores) | set(diff_scores) | {0.0})
    total = len(same_scores) + len(diff_scores)
    best_threshold = None
    best_accuracy = -1.0
    for t in candidates:
        correct = sum(1 for s in same_scores if s >= t) + sum(
            1 for s in diff_scores if s < t
        )
        accuracy = correct / total
        if accuracy > best_accuracy:
            best_accuracy, best_threshold = accuracy, t
    return best_threshold, best_accuracy


class CharNgramVerifier(BaseEstimator):
    """Estimator wrapper: fit calibrates the decision threshold on
    labelled pairs, verify/predict applies it."""

    def __init__(self, n=3, threshold=None):
        self.n = n
        self.threshold = threshold
        self.threshold_ = threshold

    def fit(self, pairs, labels):
        """pairs: (text_a, text_b) tuples; labels: True for same author."""
        same, diff = [], []
        for (a, b), label in zip(pairs, labels):
            score = verify_pair(a, b, threshold=0.0, n=self.n).score
            (same if label else diff).append(score)
        self.threshold_, self.accuracy_ = calibrate_threshold(same, diff)
        return self

    def verify(self, text_a, text_b):
        check_is_fitted(self, "threshold_")
        return verify_pair(text_a, text_b, self.threshold_, n=self.n)

    def predict(self, pairs):
        return [self.verify(a, b).predicted_same for a, b in pairs]


def consistency_rate(pairs, regenerated, verifier):
    """Fraction of originally same-author pairs still judged same after
    substituting the regenerated second text.

    ``regenerated`` maps each AuthorPair to its replacement text_b.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValidationError("consistency rate needs at least one pair")
    for pair in pairs:
        if not pair.predicted_same:
            raise ValidationError("all input pairs must be predicted same-author")
    kept = 0
    for pair in pairs:
        replacement = regenerated[pair]
        if verifier.verify(pair.text_a, replacement).predicted_same:
            kept += 1
    return kept / len(pairs)
