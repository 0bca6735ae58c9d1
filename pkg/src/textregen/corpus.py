"""Corpus loading, validation, splitting, and label statistics.

The canonical on-disk format is JSONL, one document per line:

    {"id": str, "text": str, "labels": [str] (optional), "author": str (optional)}

UTF-8, LF line endings. A directory of ``.txt`` files (filename stem as
document id) is accepted for convenience. Three small synthetic corpora
ship inside the package so the whole pipeline runs offline.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    labels: frozenset[str] | None = None
    author_id: str | None = None

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ValidationError("document id must be a non-empty string")
        if not isinstance(self.text, str) or not self.text.strip():
            raise ValidationError(f"document {self.id!r} has empty text")
        if self.labels is not None:
            object.__setattr__(self, "labels", frozenset(self.labels))


@dataclass(frozen=True)
class Corpus:
    """An ordered, immutable collection of documents with unique ids."""

    documents: tuple[Document, ...]
    name: str = "corpus"

    def __post_init__(self):
        object.__setattr__(self, "documents", tuple(self.documents))
        seen = set()
        for doc in self.documents:
            if doc.id in seen:
                raise ValidationError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)

    def __len__(self):
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    def __getitem__(self, i):
        return self.documents[i]


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValidationError("train_fraction must lie strictly inside (0, 1)")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")


def _doc_from_obj(obj, where):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected a JSON object")
    if "id" not in obj:
        raise ParseError(f"{where}: missing required field 'id'")
    if "text" not in obj:
        raise ParseError(f"{where}: missing required field 'text'")
    labels = obj.get("labels")
    if labels is not None and (
        not isinstance(labels, list) or not all(isinstance(x, str) for x in labels)
    ):
        raise ParseError(f"{where}: 'labels' must be a list of strings")
    author = obj.get("author")
    if author is not None and not isinstance(author, str):
        raise ParseError(f"{where}: 'author' must be a string")
    try:
        return Document(
            id=obj["id"],
            text=obj["text"],
            labels=frozenset(labels) if labels is not None else None,
            author_id=author,
        )
    except ValidationError as exc:
        raise ParseError(f"{where}: {exc}") from exc


def load_corpus(path, format="jsonl", name=None):
    """Load a corpus from ``path``, preserving file order.

    ``format`` is "jsonl" (one object per line) or "plain_dir" (one .txt
    file per document, filename stem used as the id, files in sorted
    order). Malformed lines raise ParseError naming the line number;
    duplicate ids raise ValidationError.
    """
    path = Path(path)
    if name is None:
        name = path.stem if path.suffix else path.name
    if format == "jsonl":
        docs = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
                docs.append(_doc_from_obj(obj, f"{path}:{lineno}"))
        return Corpus(tuple(docs), name=name)
    if format == "plain_dir":
        if not path.is_dir():
            raise ValidationError(f"{path} is not a directory")
        docs = []
        for txt in sorted(path.glob("*.txt")):
            text = txt.read_text(encoding="utf-8")
            docs.append(Document(id=txt.stem, text=text))
        return Corpus(tuple(docs), name=name)
    raise ValidationError(f"unknown corpus format {format!r}")


def save_corpus(corpus, path):
    """Write a corpus back to canonical JSONL (round-trips with load_corpus)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in corpus:
            obj = {"id": doc.id, "text": doc.text}
            if doc.labels is not None:
                obj["labels"] = sorted(doc.labels)
            if doc.author_id is not None:
                obj["author"] = doc.author_id
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n")
    return path


def _round_half_up(x):
    import math

    return int(math.floor(x + 0.5))


def split_corpus(corpus, spec):
    """Deterministic disjoint train/test partition.

    |train| = round_half_up(train_fraction * N). Document order within
    each side follows the original corpus order.
    """
    n = len(corpus)
    if n < 2:
        raise ValidationError("split requires at least 2 documents")
    n_train = _round_half_up(spec.train_fraction * n)
    if n_train == 0 or n_train == n:
        raise ValidationError(
            f"train_fraction {spec.train_fraction} leaves an empty side for {n} documents"
        )
    rng = np.random.default_rng(int(spec.seed))
    order = rng.permutation(n)
    train_idx = sorted(order[:n_train].tolist())
    test_idx = sorted(order[n_train:].tolist())
    train = Corpus(tuple(corpus[i] for i in train_idx), name=f"{corpus.name}-train")
    test = Corpus(tuple(corpus[i] for i in test_idx), name=f"{corpus.name}-test")
    return train, test


def top_k_labels(corpus, k):
    """The k most frequent labels by document frequency, ties lexicographic."""
    if k < 1:
        raise ValidationError("k must be positive")
    freq = Counter()
    for doc in corpus:
        if doc.labels:
            freq.update(set(doc.labels))
    if len(freq) < k:
        raise ValidationError(f"corpus has {len(freq)} distinct labels, fewer than k={k}")
    ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    return [label for label, _ in ranked[:k]]


_TOY_FILES = {
    "medical": "toy_medical.jsonl",
    "movies": "toy_movies.jsonl",
    "authors": "toy_authors.jsonl",
}


def toy_corpus_path(which):
    """Filesystem path of a bundled toy corpus ("medical", "movies", "authors")."""
    if which not in _TOY_FILES:
        raise ValidationError(f"unknown toy corpus {which!r}; options: {sorted(_TOY_FILES)}")
    return resources.files("textregen.data") / _TOY_FILES[which]


def load_toy_corpus(which):
    return load_corpus(toy_corpus_path(which), format="jsonl", name=f"toy-{which}")


def toy_lexicon_path():
    """Filesystem path of the bundled medical entity lexicon (TSV)."""
    return resources.files("textregen.data") / "medical_entities.tsv"
