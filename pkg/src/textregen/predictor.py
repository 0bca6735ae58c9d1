"""Pluggable conditional token predictors.

Two contracts: a bidirectional predictor scores a masked slot from the
kept/committed tokens on both sides (infilling regime), and a causal
predictor scores the next token from the emitted prefix plus a soft
conditioning set (left-to-right regime). Each has a built-in n-gram
implementation here; ``remote.py`` provides implementations that speak
the wire protocol to an external model server.

The n-gram probability model, pinned for reproducibility:

* Count tables are gathered per window level. The bidirectional chain is
  (k,k) -> (k,k-1) -> (k-1,k-1) -> ... -> (1,1) -> (1,0) -> (0,0); the
  causal chain is k -> k-1 -> ... -> 0. Windows are padded with BOS/EOS
  at sequence edges.
* A query walks its chain top-down and stops at the first level whose
  window is usable (no still-masked slot inside) and whose context was
  observed in training. Probabilities at that level are add-lambda
  smoothed relative frequencies, multiplied by a fixed 0.4 discount per
  level descended ("stupid backoff" style), so deeper backoff means
  lower confidence. The unigram level is always observed, so every
  query returns a distribution.
* Candidate tokens: every vocabulary surface plus UNK; the causal model
  additionally includes EOS. MASK and BOS are never candidates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .base import BaseEstimator, check_is_fitted
from .errors import ContractError, ParseError, ValidationError
from .tokenizer import BOS_ID, EOS_ID, UNK_ID, Vocab, build_vocab, tokenize

BACKOFF_DISCOUNT = 0.4


@dataclass(frozen=True)
class Distribution:
    """Ranked token probabilities at one position.

    Entries are (token_id, probability) in strictly descending
    probability, ties broken by ascending token_id. Probabilities are
    non-negative and sum to at most 1 (plus 1e-9 slack).
    """

    entries: tuple
    position: int = 0

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise ValidationError("distribution must be non-empty")
        total = 0.0
        prev_id, prev_p = None, None
        for token_id, prob in self.entries:
            if prob < 0:
                raise ValidationError(f"negative probability {prob} for token {token_id}")
            total += prob
            if prev_p is not None and (
                prob > prev_p or (prob == prev_p and token_id <= prev_id)
            ):
                raise ValidationError(
                    "entries must be sorted by descending probability, "
                    "ties by ascending token id"
                )
            prev_id, prev_p = token_id, prob
        if total > 1.0 + 1e-9:
            raise ValidationError(f"probabilities sum to {total} > 1")

    @classmethod
    def from_scores(cls, pairs, position=0):
        ordered = sorted(pairs, key=lambda e: (-e[1], e[0]))
        return cls(entries=tuple(ordered), position=position)

    @property
    def argmax(self):
        return self.entries[0][0]

    @property
    def confidence(self):
        """Probability of the top-ranked token."""
        return self.entries[0][1]


def _bidir_chain(order):
    chain = []
    left = order
    while left >= 1:
        chain.append((left, left))
        chain.append((left, left - 1))
        left -= 1
    chain.append((0, 0))
    return chain


class _NgramTable:
    """context -> (total count, centers sorted by (-count, ascending id))."""

    def __init__(self):
        self._raw = {}
        self.frozen = None

    def add(self, context, center):
        centers = self._raw.setdefault(context, {})
        centers[center] = centers.get(center, 0) + 1

    def freeze(self):
        self.frozen = {
            ctx: (sum(c.values()), sorted(c.items(), key=lambda kv: (-kv[1], kv[0])))
            for ctx, c in self._raw.items()
        }
        self._raw = None
        return self

    def get(self, context):
        return self.frozen.get(context)


def _smoothed_top_k(total, sorted_centers, disc, lam, candidates, top_k):
    """Top-k of the add-lambda smoothed level distribution, discounted.

    Observed centers always outrank the smoothing floor, so the ranking
    is the observed list (already sorted) followed by unobserved
    candidate ids ascending at the floor probability.
    """
    denom = total + lam * len(candidates)
    k = min(top_k, len(candidates))
    entries = [(tok, disc * (cnt + lam) / denom) for tok, cnt in sorted_centers[:k]]
    if len(entries) < k:
        floor = disc * lam / denom
        observed = {tok for tok, _ in sorted_centers}
        for tok in candidates:
            if len(entries) >= k:
                break
            if tok not in observed:
                entries.append((tok, floor))
    return entries


def _doc_token_ids(doc, vocab, stopwords):
    return [
        vocab.id_of(s)
        for s in tokenize(doc.text, doc_id=doc.id, stopwords=stopwords).surfaces
    ]


class BidirectionalNgram(BaseEstimator):
    """Infilling predictor: add-lambda smoothed counts over
    (left window, right window, center) triples with backoff.

    Immutable after fit; safe to share read-only across workers.
    """

    mode = "mlm"

    def __init__(self, order=3, smoothing=0.1, min_count=1):
        if order < 1:
            raise ValidationError("order must be >= 1")
        if smoothing <= 0:
            raise ValidationError("smoothing must be > 0")
        self.order = order
        self.smoothing = smoothing
        self.min_count = min_count
        self.vocab_ = None

    @property
    def predictor_id(self):
        return f"mlm-ngram-k{self.order}"

    def fit(self, corpus, vocab=None, stopwords=None):
        if len(corpus) == 0:
            raise ValidationError("cannot train on an empty corpus")
        if vocab is None:
            vocab = build_vocab(corpus, min_count=self.min_count, stopwords=stopwords)
        self.vocab_ = vocab
        k = self.order
        chain = _bidir_chain(k)
        tables = {level: _NgramTable() for level in chain}
        for doc in corpus:
            ids = _doc_token_ids(doc, vocab, stopwords)
            padded = [BOS_ID] * k + ids + [EOS_ID] * k
            for i in range(len(ids)):
                pos = i + k
                center = padded[pos]
                for l, r in chain:
                    left = tuple(padded[pos - l : pos])
                    right = tuple(padded[pos + 1 : pos + 1 + r])
                    tables[(l, r)].add((left, right), center)
        self.tables_ = {level: t.freeze() for level, t in tables.items()}
        self.chain_ = chain
        self.candidates_ = [UNK_ID] + list(range(4, len(vocab)))
        return self

    def token_surface(self, token_id):
        check_is_fitted(self, "vocab_")
        return self.vocab_.surface_of(token_id)

    def predict_masked(self, masked, position, top_k=10):
        """Distribution over the masked slot at ``position``.

        Windows contain only kept/committed neighbours; a window that
        would cross a still-masked slot forces backoff to the next
        level. Originals stored in masked slots are never read.
        """
        check_is_fitted(self, "tables_")
        slots = masked.slots
        if not slots[position].masked:
            raise ContractError(f"slot {position} of {masked.doc_id!r} is not masked")
        k = self.order
        n = len(slots)

        left_real = []  # nearest first when reversed below
        i = position - 1
        while i >= 0 and len(left_real) < k:
            left_real.append(None if slots[i].masked else self.vocab_.id_of(slots[i].token.surface))
            i -= 1
        left_full = [BOS_ID] * (k - len(left_real)) + list(reversed(left_real))
        l_avail = 0
        while l_avail < len(left_real) and left_real[l_avail] is not None:
            l_avail += 1
        l_open = position <= k and l_avail == position  # run reaches sequence start

        right_real = []
        j = position + 1
        while j < n and len(right_real) < k:
            right_real.append(None if slots[j].masked else self.vocab_.id_of(slots[j].token.surface))
            j += 1
        right_full = right_real + [EOS_ID] * (k - len(right_real))
        r_avail = 0
        while r_avail < len(right_real) and right_real[r_avail] is not None:
            r_avail += 1
        r_open = (n - 1 - position) <= k and r_avail == n - 1 - position

        lam = self.smoothing
        disc = 1.0
        for l, r in self.chain_:
            if (l <= l_avail or l_open) and (r <= r_avail or r_open):
                left = tuple(left_full[k - l :]) if l else ()
                right = tuple(right_full[:r])
                hit = self.tables_[(l, r)].get((left, right))
                if hit is not None:
                    total, centers = hit
                    entries = _smoothed_top_k(total, centers, disc, lam, self.candidates_, top_k)
                    return Distribution(entries=tuple(entries), position=position)
            disc *= BACKOFF_DISCOUNT
        raise AssertionError("unigram level is always observed after fit")

    def predict_masked_many(self, masked, positions, top_k=10):
        return {p: self.predict_masked(masked, p, top_k=top_k) for p in positions}


class CausalNgram(BaseEstimator):
    """Left-to-right predictor: prefix n-gram counts with backoff, plus a
    multiplicative bonus for conditioning-context tokens not yet emitted."""

    mode = "clm"

    def __init__(self, order=3, smoothing=0.1, context_bonus=2.0, min_count=1):
        if order < 1:
            raise ValidationError("order must be >= 1")
        if smoothing <= 0:
            raise ValidationError("smoothing must be > 0")
        if context_bonus < 1.0:
            raise ValidationError("context_bonus must be >= 1")
        self.order = order
        self.smoothing = smoothing
        self.context_bonus = context_bonus
        self.min_count = min_count
        self.vocab_ = None

    @property
    def predictor_id(self):
        return f"clm-ngram-k{self.order}"

    def fit(self, corpus, vocab=None, stopwords=None):
        if len(corpus) == 0:
            raise ValidationError("cannot train on an empty corpus")
        if vocab is None:
            vocab = build_vocab(corpus, min_count=self.min_count, stopwords=stopwords)
        self.vocab_ = vocab
        k = self.order
        tables = {l: _NgramTable() for l in range(k + 1)}
        for doc in corpus:
            ids = _doc_token_ids(doc, vocab, stopwords)
            padded = [BOS_ID] * k + ids + [EOS_ID]
            for i in range(len(ids) + 1):  # EOS is the final predictable center
                pos = i + k
                center = padded[pos]
                for l in range(k + 1):
                    tables[l].add(tuple(padded[pos - l : pos]), center)
        self.tables_ = {l: t.freeze() for l, t in tables.items()}
        self.candidates_ = [UNK_ID, EOS_ID] + list(range(4, len(vocab)))
        return self

    def token_surface(self, token_id):
        check_is_fitted(self, "vocab_")
        return self.vocab_.surface_of(token_id)

    def predict_next(self, prefix, context=None, top_k=10):
        """Distribution over the next token given emitted ``prefix``
        surfaces and an optional conditioning iterable of surfaces.

        Context tokens still carrying unemitted multiplicity get their
        probability multiplied by ``context_bonus``; the distribution is
        then renormalized to sum 1 over the full candidate set (soft
        conditioning), so truncated entries sum to at most 1.
        """
        check_is_fitted(self, "tables_")
        k = self.order
        prefix_ids = [self.vocab_.id_of(s) for s in prefix]
        padded = [BOS_ID] * k + prefix_ids
        lam = self.smoothing
        disc = 1.0
        hit = None
        for l in range(k, -1, -1):
            window = tuple(padded[len(padded) - l :]) if l else ()
            hit = self.tables_[l].get(window)
            if hit is not None:
                break
            disc *= BACKOFF_DISCOUNT
        total, centers = hit
        boosted = self._remaining_context_ids(prefix_ids, context)
        position = len(prefix_ids)
        if not boosted:
            entries = _smoothed_top_k(total, centers, disc, lam, self.candidates_, top_k)
            return Distribution(entries=tuple(entries), position=position)

        bonus = self.context_bonus
        denom = total + lam * len(self.candidates_)
        count_of = dict(centers)
        base = lambda tid: disc * (count_of.get(tid, 0) + lam) / denom
        # mass before boost is exactly `disc`; renormalize the boosted total
        norm = disc + (bonus - 1.0) * sum(base(tid) for tid in boosted)
        kk = min(top_k, len(self.candidates_))
        scored = {tid: base(tid) for tid, _ in centers[: kk + len(boosted)]}
        for tid in boosted:
            scored[tid] = base(tid) * bonus
        entries = sorted(scored.items(), key=lambda kv: (-kv[1], kv[0]))[:kk]
        if len(entries) < kk:
            floor = disc * lam / denom  # all scored entries are >= floor
            for tid in self.candidates_:
                if len(entries) >= kk:
                    break
                if tid not in scored:
                    entries.append((tid, floor))
        entries = [(tid, p / norm) for tid, p in entries]
        return Distribution.from_scores(entries, position=position)

    def _remaining_context_ids(self, prefix_ids, context):
        if context is None:
            return {}
        surfaces = context.surfaces if hasattr(context, "surfaces") else list(context)
        remaining = {}
        for s in surfaces:
            tid = self.vocab_.id_of(s)
            remaining[tid] = remaining.get(tid, 0) + 1
        for tid in prefix_ids:
            if tid in remaining:
                remaining[tid] -= 1
                if remaining[tid] == 0:
                    del remaining[tid]
        return remaining


MODEL_FORMAT = "textregen-ngram"
MODEL_VERSION = 1


def save_model(model, path):
    """JSON dump of the count tables; versioned, reloadable with load_model."""
    check_is_fitted(model, "tables_")
    if model.mode == "mlm":
        tables = [
            [list(level), [[list(ctx[0]), list(ctx[1]), [list(kv) for kv in centers]]
                           for ctx, (_, centers) in table.frozen.items()]]
            for level, table in model.tables_.items()
        ]
        params = {"order": model.order, "smoothing": model.smoothing,
                  "min_count": model.min_count}
    else:
        tables = [
            [level, [[list(ctx), [list(kv) for kv in centers]]
                     for ctx, (_, centers) in table.frozen.items()]]
            for level, table in model.tables_.items()
        ]
        params = {"order": model.order, "smoothing": model.smoothing,
                  "context_bonus": model.context_bonus, "min_count": model.min_count}
    obj = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "mode": model.mode,
        "params": params,
        "surfaces": list(model.vocab_.id_to_token[4:]),
        "tables": tables,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False)
    return path


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("format") != MODEL_FORMAT:
        raise ParseError(f"{path}: not a {MODEL_FORMAT} file")
    if obj.get("version") != MODEL_VERSION:
        raise ParseError(f"{path}: unsupported model version {obj.get('version')}")
    vocab = Vocab.from_surfaces(obj["surfaces"])
    mode = obj["mode"]
    if mode == "mlm":
        model = BidirectionalNgram(**obj["params"])
        model.vocab_ = vocab
        model.chain_ = _bidir_chain(model.order)
        model.candidates_ = [UNK_ID] + list(range(4, len(vocab)))
        model.tables_ = {}
        for level, rows in obj["tables"]:
            table = _NgramTable()
            table.frozen = {
                (tuple(left), tuple(right)): (
                    sum(c for _, c in centers),
                    [tuple(kv) for kv in centers],
                )
                for left, right, centers in rows
            }
            model.tables_[tuple(level)] = table
        return model
    if mode == "clm":
        model = CausalNgram(**obj["params"])
        model.vocab_ = vocab
        model.candidates_ = [UNK_ID, EOS_ID] + list(range(4, len(vocab)))
        model.tables_ = {}
        for level, rows in obj["tables"]:
            table = _NgramTable()
            table.frozen = {
                tuple(ctx): (sum(c for _, c in centers), [tuple(kv) for kv in centers])
                for ctx, centers in rows
            }
            model.tables_[int(level)] = table
        return model
    raise ParseError(f"{path}: unknown model mode {mode!r}")
