"""Deterministic word-level tokenization and vocabulary construction.

Tokenization rule: split on Unicode whitespace, peel leading/trailing
punctuation characters (Unicode general category P*) into their own
tokens, lowercase everything. Internal punctuation (``don't``, ``x-ray``)
stays inside the word. Sequences are truncated to MAX_LEN tokens.

Token classes (stopword / punctuation / entity) drive the corruption
strategies, so they are pinned here: the stopword list is a fixed file
shipped with the package, punctuation is "all characters in category P*",
and entity tagging is longest-match against a user-supplied lexicon.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ParseError, ValidationError

MAX_LEN = 512

MASK_TOKEN = "[MASK]"
UNK_TOKEN = "[UNK]"
BOS_TOKEN = "[BOS]"
EOS_TOKEN = "[EOS]"
SPECIAL_TOKENS = (MASK_TOKEN, UNK_TOKEN, BOS_TOKEN, EOS_TOKEN)

MASK_ID, UNK_ID, BOS_ID, EOS_ID = 0, 1, 2, 3


@dataclass(frozen=True)
class Token:
    surface: str
    is_punctuation: bool = False
    is_stopword: bool = False
    entity_type: str | None = None

    def __post_init__(self):
        if not self.surface:
            raise ValidationError("token surface must be non-empty")
        if self.is_punctuation and self.is_stopword:
            raise ValidationError(
                f"token {self.surface!r} cannot be both punctuation and stopword"
            )


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[Token, ...]
    doc_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not 1 <= len(self.tokens) <= MAX_LEN:
            raise ValidationError(
                f"token sequence for {self.doc_id!r} has {len(self.tokens)} tokens; "
                f"must be between 1 and {MAX_LEN}"
            )

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    @property
    def surfaces(self):
        return [t.surface for t in self.tokens]


def _is_punct_char(ch):
    return unicodedata.category(ch).startswith("P")


def _is_punct_surface(s):
    return all(_is_punct_char(ch) for ch in s)


_DEFAULT_STOPWORDS = None


def load_stopwords(path=None):
    """Stopword set: one token per line, UTF-8. Defaults to the bundled list."""
    global _DEFAULT_STOPWORDS
    if path is None:
        if _DEFAULT_STOPWORDS is None:
            text = (resources.files("textregen.data") / "stopwords.txt").read_text(
                encoding="utf-8"
            )
            _DEFAULT_STOPWORDS = frozenset(
                line.strip() for line in text.splitlines() if line.strip()
            )
        return _DEFAULT_STOPWORDS
    text = Path(path).read_text(encoding="utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


@dataclass(frozen=True)
class EntityLexicon:
    """Surface-form to entity-type map; multi-word entries allowed.

    Surfaces are stored lowercased as word tuples (tokenizer word split),
    so lookups match tokenized text exactly.
    """

    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        normalized = {}
        for surface, etype in self.entries.items():
            words = tuple(surface.lower().split())
            if not words:
                raise ValidationError("lexicon surface form must be non-empty")
            if words in normalized and normalized[words] != etype:
                raise ValidationError(f"lexicon surface {surface!r} listed twice")
            normalized[words] = etype
        object.__setattr__(self, "entries", normalized)

    def __len__(self):
        return len(self.entries)

    @property
    def max_words(self):
        return max((len(w) for w in self.entries), default=0)

    @classmethod
    def from_tsv(cls, path):
        """Load ``surface<TAB>type`` rows."""
        entries = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                    raise ParseError(
                        f"{path}:{lineno}: expected 'surface<TAB>type', got {line!r}"
                    )
                entries[parts[0].strip()] = parts[1].strip()
        return cls(entries)


def find_entity_spans(surfaces, lexicon):
    """Non-overlapping entity spans as (start, end_exclusive, type).

    All lexicon matches are collected, then accepted greedily by longer
    span first, ties broken by earlier start.
    """
    if lexicon is None or len(lexicon) == 0:
        return []
    candidates = []
    n = len(surfaces)
    max_words = lexicon.max_words
    for start in range(n):
        for width in range(1, min(max_words, n - start) + 1):
            phrase = tuple(surfaces[start : start + width])
            etype = lexicon.entries.get(phrase)
            if etype is not None:
                candidates.append((start, start + width, etype))
    candidates.sort(key=lambda c: (-(c[1] - c[0]), c[0]))
    taken = [False] * n
    spans = []
    for start, end, etype in candidates:
        if any(taken[start:end]):
            continue
        for i in range(start, end):
            taken[i] = True
        spans.append((start, end, etype))
    spans.sort()
    return spans


def _split_word(word):
    """Peel leading/trailing punctuation characters into separate surfaces."""
    leading = []
    while word and _is_punct_char(word[0]):
        leading.append(word[0])
        word = word[1:]
    trailing = []
    while word and _is_punct_char(word[-1]):
        trailing.append(word[-1])
        word = word[:-1]
    parts = leading
    if word:
        parts.append(word)
    parts.extend(reversed(trailing))
    return parts


def tokenize(text, lexicon=None, doc_id="", stopwords=None):
    """Tokenize ``text`` into a TokenSequence (lowercased, max 512 tokens)."""
    if not text or not text.strip():
        raise ValidationError(f"cannot tokenize empty text (doc {doc_id!r})")
    if stopwords is None:
        stopwords = load_stopwords()
    surfaces = []
    for word in text.split():
        surfaces.extend(p.lower() for p in _split_word(word))
    if not surfaces:
        raise ValidationError(f"text for {doc_id!r} is empty after tokenization")
    surfaces = surfaces[:MAX_LEN]
    entity_of = {}
    for start, end, etype in find_entity_spans(surfaces, lexicon):
        for i in range(start, end):
            entity_of[i] = etype
    tokens = []
    for i, s in enumerate(surfaces):
        punct = _is_punct_surface(s)
        tokens.append(
            Token(
                surface=s,
                is_punctuation=punct,
                is_stopword=(not punct) and s in stopwords,
                entity_type=entity_of.get(i),
            )
        )
    return TokenSequence(tuple(tokens), doc_id=doc_id)


def make_token(surface, stopwords=None):
    """A Token whose punctuation/stopword flags are derived from the surface.

    Used for tokens committed by a decoder, which arrive as bare surfaces.
    """
    if stopwords is None:
        stopwords = load_stopwords()
    punct = _is_punct_surface(surface)
    return Token(
        surface=surface,
        is_punctuation=punct,
        is_stopword=(not punct) and surface in stopwords,
    )


def detokenize(seq):
    """Join surfaces with single spaces; punctuation attaches to the
    preceding word without a space."""
    out = []
    for tok in seq:
        if tok.is_punctuation and out:
            out[-1] = out[-1] + tok.surface
        else:
            out.append(tok.surface)
    return " ".join(out)


@dataclass(frozen=True)
class Vocab:
    """Dense token-to-id map with reserved special ids 0..3."""

    token_to_id: dict
    id_to_token: tuple

    def __len__(self):
        return len(self.id_to_token)

    def id_of(self, surface):
        return self.token_to_id.get(surface, UNK_ID)

    def surface_of(self, token_id):
        return self.id_to_token[token_id]

    def __contains__(self, surface):
        return surface in self.token_to_id

    @classmethod
    def from_surfaces(cls, ordered_surfaces):
        id_to_token = list(SPECIAL_TOKENS)
        for s in ordered_surfaces:
            if s in SPECIAL_TOKENS:
                raise ValidationError(f"surface {s!r} collides with a special token")
            id_to_token.append(s)
        token_to_id = {s: i for i, s in enumerate(id_to_token)}
        if len(token_to_id) != len(id_to_token):
            raise ValidationError("duplicate surfaces in vocabulary")
        return cls(token_to_id=token_to_id, id_to_token=tuple(id_to_token))


def build_vocab(corpus, min_count=1, stopwords=None):
    """Vocabulary over all corpus tokens with frequency >= min_count.

    Id assignment is deterministic: frequency descending, then
    lexicographic. Tokens below the threshold map to UNK at lookup time.
    """
    if len(corpus) == 0:
        raise ValidationError("cannot build a vocabulary from an empty corpus")
    freq = Counter()
    for doc in corpus:
        freq.update(tokenize(doc.text, doc_id=doc.id, stopwords=stopwords).surfaces)
    kept = [(s, c) for s, c in freq.items() if c >= min_count]
    kept.sort(key=lambda kv: (-kv[1], kv[0]))
    return Vocab.from_surfaces([s for s, _ in kept])
