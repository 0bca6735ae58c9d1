"""Masking strategies and context extraction.

Five corruption strategies hide tokens of a source sequence before
regeneration: a seeded random strategy that masks an exact fraction of
slots, and four ratio-free class strategies that keep stopwords,
punctuation, both, or lexicon-tagged entities, masking everything else.
A masked sequence keeps the original token in each masked slot (for
scoring only); predictors see surfaces of kept slots plus mask markers.

Strategy string grammar (CLI/config): ``random:<ratio>``, ``stopwords``,
``punctuation``, ``stopwords_punctuation``, ``ner``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import BaseEstimator
from .errors import ValidationError
from .tokenizer import Token

RANDOM = "random"
KEEP_STOPWORDS = "keep_stopwords"
KEEP_PUNCTUATION = "keep_punctuation"
KEEP_STOPWORDS_PUNCTUATION = "keep_stopwords_punctuation"
KEEP_ENTITIES = "keep_entities"

CLASS_KINDS = (
    KEEP_STOPWORDS,
    KEEP_PUNCTUATION,
    KEEP_STOPWORDS_PUNCTUATION,
    KEEP_ENTITIES,
)

_KIND_TO_STRING = {
    KEEP_STOPWORDS: "stopwords",
    KEEP_PUNCTUATION: "punctuation",
    KEEP_STOPWORDS_PUNCTUATION: "stopwords_punctuation",
    KEEP_ENTITIES: "ner",
}
_STRING_TO_KIND = {v: k for k, v in _KIND_TO_STRING.items()}


@dataclass(frozen=True)
class MaskingStrategy:
    kind: str
    ratio: float | None = None

    def __post_init__(self):
        if self.kind == RANDOM:
            if self.ratio is None:
                raise ValidationError("random strategy requires a ratio")
            if not 0.0 <= self.ratio <= 1.0:
                raise ValidationError(f"ratio {self.ratio} outside [0, 1]")
        elif self.kind in CLASS_KINDS:
            if self.ratio is not None:
                raise ValidationError(f"{self.kind} strategy takes no ratio")
        else:
            raise ValidationError(f"unknown masking strategy kind {self.kind!r}")

    def __str__(self):
        if self.kind == RANDOM:
            return f"random:{self.ratio:g}"
        return _KIND_TO_STRING[self.kind]

    @classmethod
    def parse(cls, text):
        """Parse the CLI/config strategy grammar."""
        text = text.strip()
        if text.startswith("random:"):
            try:
                ratio = float(text.split(":", 1)[1])
            except ValueError as exc:
                raise ValidationError(f"bad random strategy {text!r}") from exc
            return cls(RANDOM, ratio)
        if text in _STRING_TO_KIND:
            return cls(_STRING_TO_KIND[text])
        raise ValidationError(
            f"unknown strategy {text!r}; expected random:<ratio>, "
            "stopwords, punctuation, stopwords_punctuation, or ner"
        )


@dataclass(frozen=True)
class Slot:
    """One position of a masked sequence.

    The original token is retained in masked slots for scoring only;
    nothing downstream of a predictor boundary may read it.
    """

    token: Token
    masked: bool

    @property
    def kept(self):
        return not self.masked


@dataclass(frozen=True)
class MaskedSequence:
    slots: tuple[Slot, ...]
    doc_id: str
    strategy: MaskingStrategy
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))

    def __len__(self):
        return len(self.slots)

    def __iter__(self):
        return iter(self.slots)

    def __getitem__(self, i):
        return self.slots[i]

    @property
    def masked_positions(self):
        return [i for i, s in enumerate(self.slots) if s.masked]

    @property
    def mask_count(self):
        return sum(1 for s in self.slots if s.masked)

    def prompt_surfaces(self, mask_marker="[MASK]"):
        """What a predictor is allowed to see: kept surfaces plus markers."""
        return [mask_marker if s.masked else s.token.surface for s in self.slots]

    def with_committed(self, position, token):
        """A copy with one masked slot replaced by a committed token."""
        if not self.slots[position].masked:
            raise ValidationError(f"slot {position} is not masked")
        slots = list(self.slots)
        slots[position] = Slot(token=token, masked=False)
        return MaskedSequence(
            slots=tuple(slots), doc_id=self.doc_id, strategy=self.strategy, seed=self.seed
        )


@dataclass(frozen=True)
class ContextSequence:
    """Kept tokens only, in original order (the left-to-right model's input)."""

    tokens: tuple[Token, ...]
    doc_id: str
    strategy: MaskingStrategy

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    @property
    def surfaces(self):
        return [t.surface for t in self.tokens]


def round_half_up(x):
    return int(math.floor(x + 0.5))


def mask_random(seq, ratio, seed):
    """Mask exactly round_half_up(ratio * n) slots, chosen by a seeded
    uniform shuffle without replacement."""
    if not 0.0 <= ratio <= 1.0:
        raise ValidationError(f"ratio {ratio} outside [0, 1]")
    n = len(seq)
    n_masked = round_half_up(ratio * n)
    rng = np.random.default_rng(int(seed))
    chosen = set(rng.permutation(n)[:n_masked].tolist())
    slots = tuple(
        Slot(token=tok, masked=(i in chosen)) for i, tok in enumerate(seq.tokens)
    )
    return MaskedSequence(
        slots=slots,
        doc_id=seq.doc_id,
        strategy=MaskingStrategy(RANDOM, ratio),
        seed=int(seed),
    )


def _keeps(token, kind):
    if kind == KEEP_STOPWORDS:
        return token.is_stopword
    if kind == KEEP_PUNCTUATION:
        return token.is_punctuation
    if kind == KEEP_STOPWORDS_PUNCTUATION:
        return token.is_stopword or token.is_punctuation
    if kind == KEEP_ENTITIES:
        return token.entity_type is not None
    raise ValidationError(f"not a class strategy: {kind!r}")


def mask_keep_class(seq, strategy):
    """Keep exactly the tokens matching the strategy's class; mask the rest.

    Ratio-free and idempotent: the mask set depends only on token flags.
    """
    if strategy.kind == RANDOM:
        raise ValidationError("mask_keep_class does not accept the random strategy")
    slots = tuple(
        Slot(token=tok, masked=not _keeps(tok, strategy.kind)) for tok in seq.tokens
    )
    return MaskedSequence(slots=slots, doc_id=seq.doc_id, strategy=strategy, seed=0)


def corrupt(seq, strategy, seed=0):
    """Dispatch on strategy kind."""
    if strategy.kind == RANDOM:
        return mask_random(seq, strategy.ratio, seed)
    return mask_keep_class(seq, strategy)


def extract_context(masked):
    """Drop masked slots; kept tokens stay in original relative order."""
    return ContextSequence(
        tokens=tuple(s.token for s in masked.slots if s.kept),
        doc_id=masked.doc_id,
        strategy=masked.strategy,
    )


class Corruptor(BaseEstimator):
    """Transformer-style wrapper: TokenSequences in, MaskedSequences out.

    ``seed`` is the base seed; each document gets a per-document seed
    derived from (seed, doc_id) so corruption is order-independent.
    """

    def __init__(self, strategy="random:0.5", seed=0):
        self.strategy = strategy
        self.seed = seed

    def _strategy(self):
        if isinstance(self.strategy, MaskingStrategy):
            return self.strategy
        return MaskingStrategy.parse(self.strategy)

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        from .seeding import derive_seed

        strategy = self._strategy()
        out = []
        for seq in X:
            doc_seed = derive_seed(self.seed, seq.doc_id, str(strategy))
            out.append(corrupt(seq, strategy, seed=doc_seed))
        return out
