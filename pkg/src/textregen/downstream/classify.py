"""Multi-label classification harness: one-vs-rest logistic models over
L2-normalized tf-idf bags of words, movie-level (micro) F1."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from math import log

import numpy as np

from ..base import BaseEstimator, check_is_fitted
from ..errors import ValidationError
from ..tokenizer import tokenize


@dataclass(frozen=True)
class LabeledDoc:
    doc_id: str
    text: str
    label_set: frozenset

    def __post_init__(self):
        object.__setattr__(self, "label_set", frozenset(self.label_set))


def make_labeled_docs(corpus, labels):
    """Project corpus documents onto a chosen label set; labels outside
    it are dropped (a document may end up empty-labelled)."""
    chosen = frozenset(labels)
    return [
        LabeledDoc(doc_id=d.id, text=d.text, label_set=frozenset(d.labels or ()) & chosen)
        for d in corpus
    ]


class TfidfLinearClassifier(BaseEstimator):
    """One binary logistic model per label, trained by full-batch
    gradient descent; threshold 0.5. Deterministic: zero initialization
    and a fixed iteration count."""

    def __init__(self, labels=(), lr=0.5, epochs=200, l2=1e-4, seed=0):
        self.labels = tuple(labels)
        self.lr = lr
        self.epochs = epochs
        self.l2 = l2
        self.seed = seed
        self.weights_ = None

    def _vectorize(self, docs, fit):
        tokenized = [tokenize(d.text, doc_id=d.doc_id).surfaces for d in docs]
        if fit:
            df = Counter()
            for surfaces in tokenized:
                df.update(set(surfaces))
            self.vocab_ = {s: i for i, s in enumerate(sorted(df))}
            n = len(docs)
            self.idf_ = np.zeros(len(self.vocab_))
            for s, i in self.vocab_.items():
                self.idf_[i] = log((1 + n) / (1 + df[s]))
        mat = np.zeros((len(docs), len(self.vocab_) + 1))
        for row, surfaces in enumerate(tokenized):
            counts = Counter(surfaces)
            total = len(surfaces)
            for s, c in counts.items():
                col = self.vocab_.get(s)
                if col is not None:
                    mat[row, col] = (c / total) * self.idf_[col]
            norm = np.linalg.norm(mat[row, :-1])
            if norm > 0:
                mat[row, :-1] /= norm
            mat[row, -1] = 1.0  # bias
        return mat

    def fit(self, docs):
        docs = list(docs)
        if not docs:
            raise ValidationError("cannot train a classifier on an empty set")
        if not self.labels:
            raise ValidationError("classifier needs a non-empty label set")
        for label in self.labels:
            if not any(label in d.label_set for d in docs):
                raise ValidationError(f"label {label!r} has no positive examples")
        x = self._vectorize(docs, fit=True)
        self.weights_ = {}
        for label in self.labels:
            y = np.array([1.0 if label in d.label_set else 0.0 for d in docs])
            w = np.zeros(x.shape[1])
            for _ in range(self.epochs):
                p = 1.0 / (1.0 + np.exp(-(x @ w)))
                grad = x.T @ (p - y) / len(docs) + self.l2 * w
                w -= self.lr * grad
            self.weights_[label] = w
        return self

    def predict(self, docs):
        check_is_fitted(self, "weights_")
        x = self._vectorize(list(docs), fit=False)
        out = []
        for row in x:
            assigned = {
                label
                for label, w in self.weights_.items()
                if 1.0 / (1.0 + np.exp(-float(row @ w))) >= 0.5
            }
            out.append(frozenset(assigned))
        return out


def eval_classifier(clf, test):
    """Micro F1 with TP/FP/FN pooled across all labels and documents."""
    test = list(test)
    if not test:
        raise ValidationError("cannot evaluate on an empty test set")
    predictions = clf.predict(test)
    tp = fp = fn = 0
    for doc, predicted in zip(test, predictions):
        tp += len(doc.label_set & predicted)
        fp += len(predicted - doc.label_set)
        fn += len(doc.label_set - predicted)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)
