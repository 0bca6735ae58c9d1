"""Generation quality scores: BLEU, ROUGE-1, METEOR, and SemScore.

All metrics compare generated token sequences against the original
sequences before corruption. Pinned conventions:

* BLEU is corpus-level: modified n-gram precisions (n=1..4) pooled over
  documents, geometric mean with uniform weights over buckets whose
  denominator is non-zero, times the brevity penalty
  exp(min(0, 1 - ref_len/cand_len)). A bucket with n >= 2 and zero
  matches gets precision 1/(2 * denominator) so tiny corpora are not
  zeroed out; a zero-match unigram bucket zeroes the score.
* ROUGE-1 is recall: clipped unigram matches / reference length.
* METEOR uses exact matching only (no stemming or synonyms): the
  alignment maximizes matches, then minimizes chunks; F = 10PR/(R+9P);
  penalty = 0.5 * (chunks/m)^3. Chunk minimization is exact (memoized
  search over common blocks) up to the size gate below; past it the
  greedy longest-block-first alignment stands in, which is minimal or
  near-minimal on the near-aligned texts this pipeline produces.
* SemScore stands in for a contextual-embedding score: PPMI
  co-occurrence vectors compressed by a seeded random projection, greedy
  per-reference-token max cosine, idf-weighted mean (recall form).

Corpus aggregation: BLEU pools counts; the other three average per-doc
scores.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .base import BaseEstimator, check_is_fitted
from .errors import ValidationError
from .tokenizer import tokenize

BLEU_MAX_N = 4

# combined token count up to which METEOR chunk minimization is exact
METEOR_EXACT_GATE = 32


def _surfaces(seq):
    return seq.surfaces if hasattr(seq, "surfaces") else list(seq)


def _pooled_precision_parts(cands, refs, n):
    matched = 0
    total = 0
    for cand, ref in zip(cands, refs):
        cand_grams = Counter(zip(*(cand[i:] for i in range(n)))) if len(cand) >= n else Counter()
        ref_grams = Counter(zip(*(ref[i:] for i in range(n)))) if len(ref) >= n else Counter()
        matched += sum((cand_grams & ref_grams).values())
        total += max(0, len(cand) - n + 1)
    return matched, total


def bleu(candidates, references, max_n=BLEU_MAX_N):
    """Corpus-level BLEU over parallel candidate/reference lists."""
    if len(candidates) != len(references):
        raise ValidationError(
            f"{len(candidates)} candidates vs {len(references)} references"
        )
    if not candidates:
        raise ValidationError("bleu requires at least one pair")
    cands = [_surfaces(c) for c in candidates]
    refs = [_surfaces(r) for r in references]
    cand_len = sum(len(c) for c in cands)
    ref_len = sum(len(r) for r in refs)
    if cand_len == 0:
        return 0.0
    log_sum = 0.0
    buckets = 0
    for n in range(1, max_n + 1):
        matched, total = _pooled_precision_parts(cands, refs, n)
        if total == 0:
            continue
        if matched == 0:
            if n == 1:
                return 0.0
            p = 1.0 / (2.0 * total)
        else:
            p = matched / total
        log_sum += math.log(p)
        buckets += 1
    if buckets == 0:
        return 0.0
    bp = math.exp(min(0.0, 1.0 - ref_len / cand_len))
    return bp * math.exp(log_sum / buckets)


def rouge1(candidate, reference):
    """Clipped unigram matches over reference length (recall-oriented)."""
    cand = _surfaces(candidate)
    ref = _surfaces(reference)
    if not ref:
        raise ValidationError("rouge1 requires a non-empty reference")
    overlap = Counter(cand) & Counter(ref)
    return sum(overlap.values()) / len(ref)


def meteor(candidate, reference):
    """Exact-match METEOR with fragmentation penalty."""
    cand = _surfaces(candidate)
    ref = _surfaces(reference)
    if not cand or not ref:
        raise ValidationError("meteor requires non-empty candidate and reference")
    quota = Counter(cand) & Counter(ref)
    m = sum(quota.values())
    if m == 0:
        return 0.0
    chunks = _min_chunks(cand, ref, quota, m)
    p = m / len(cand)
    r = m / len(ref)
    fmean = 10.0 * p * r / (r + 9.0 * p)
    penalty = 0.5 * (chunks / m) ** 3
    return fmean * (1.0 - penalty)


def _greedy_chunks(cand, ref):
    """Upper bound: repeatedly take the longest common block over free
    positions (ties: leftmost candidate start, then leftmost reference
    start). Reaches the maximum match count because single matches stay
    available until per-surface availability is exhausted."""
    ref_pos = {}
    for j, s in enumerate(ref):
        ref_pos.setdefault(s, []).append(j)
    cand_free = [True] * len(cand)
    ref_free = [True] * len(ref)
    blocks = []
    while True:
        best = None  # (-L, ci, rj)
        for ci, s in enumerate(cand):
            if not cand_free[ci]:
                continue
            for rj in ref_pos.get(s, ()):
                if not ref_free[rj]:
                    continue
                length = 0
                while (
                    ci + length < len(cand)
                    and rj + length < len(ref)
                    and cand_free[ci + length]
                    and ref_free[rj + length]
                    and cand[ci + length] == ref[rj + length]
                ):
                    length += 1
                key = (-length, ci, rj)
                if best is None or key < best:
                    best = key
        if best is None:
            return blocks
        length, ci, rj = -best[0], best[1], best[2]
        for off in range(length):
            cand_free[ci + off] = False
            ref_free[rj + off] = False
        blocks.append((ci, rj, length))


def _min_chunks(cand, ref, quota, m):
    greedy_blocks = _greedy_chunks(cand, ref)
    upper = len(greedy_blocks)
    longest = max(L for _, _, L in greedy_blocks)
    lower = math.ceil(m / longest)
    if upper == lower or len(cand) + len(ref) > METEOR_EXACT_GATE:
        return upper
    return min(upper, _exact_chunks(cand, ref, quota, m))


def _exact_chunks(cand, ref, quota, m):
    """Exact minimum chunk count by memoized search over common blocks.

    State: (next undecided candidate position, bitmask of used reference
    positions). A candidate position is either covered by a block that
    starts there or skipped, and skipping is allowed only while the
    surface retains spare occurrences beyond its match quota, which keeps
    every completed search at the maximum match count m.
    """
    n_c, n_r = len(cand), len(ref)
    ref_pos = {}
    surface_mask = {}
    for j, s in enumerate(ref):
        ref_pos.setdefault(s, []).append(j)
        surface_mask[s] = surface_mask.get(s, 0) | (1 << j)
    prefix_counts = [{}]
    for s in cand:
        nxt = dict(prefix_counts[-1])
        nxt[s] = nxt.get(s, 0) + 1
        prefix_counts.append(nxt)
    allowance = {s: c - quota.get(s, 0) for s, c in Counter(cand).items()}
    memo = {}
    INF = float("inf")

    def solve(i, used):
        done = bin(used).count("1")
        if done == m:
            return 0
        if i >= n_c or m - done > n_c - i:
            return INF
        key = (i, used)
        hit = memo.get(key)
        if hit is not None:
            return hit
        s = cand[i]
        best = INF
        for rj in ref_pos.get(s, ()):
            if used & (1 << rj):
                continue
            length = 0
            while (
                i + length < n_c
                and rj + length < n_r
                and not used & (1 << (rj + length))
                and cand[i + length] == ref[rj + length]
            ):
                length += 1
            bits = 0
            for off in range(length):
                bits |= 1 << (rj + off)
                sub = solve(i + off + 1, used | bits)
                if 1 + sub < best:
                    best = 1 + sub
        matched_s = bin(used & surface_mask.get(s, 0)).count("1")
        if prefix_counts[i + 1][s] - matched_s <= allowance[s]:
            sub = solve(i + 1, used)
            if sub < best:
                best = sub
        memo[key] = best
        return best

    return solve(0, 0)


@dataclass(frozen=True)
class EmbeddingTable:
    """Static token vectors plus idf weights for SemScore."""

    vectors: dict
    idf: dict
    unk_vector: np.ndarray
    default_idf: float
    dim: int

    def vector_of(self, surface):
        return self.vectors.get(surface, self.unk_vector)

    def idf_of(self, surface):
        return self.idf.get(surface, self.default_idf)


class CooccurrenceEmbedder(BaseEstimator):
    """Positive-PMI co-occurrence vectors compressed by a seeded random
    projection; idf(t) = ln((1+N)/(1+df(t)))."""

    def __init__(self, dim=64, window=3, seed=0):
        if dim < 1 or window < 1:
            raise ValidationError("dim and window must be >= 1")
        self.dim = dim
        self.window = window
        self.seed = seed
        self.table_ = None

    def fit(self, corpus, stopwords=None):
        if len(corpus) == 0:
            raise ValidationError("cannot train embeddings on an empty corpus")
        pair_counts = Counter()
        df = Counter()
        n_docs = len(corpus)
        for doc in corpus:
            surfaces = tokenize(doc.text, doc_id=doc.id, stopwords=stopwords).surfaces
            df.update(set(surfaces))
            for i, s in enumerate(surfaces):
                pair_counts[(s, s)] += 1  # distance-0 self pair: no zero rows
                for j in range(i + 1, min(i + 1 + self.window, len(surfaces))):
                    pair_counts[(s, surfaces[j])] += 1
                    pair_counts[(surfaces[j], s)] += 1
        total = sum(pair_counts.values())
        row_totals = Counter()
        for (a, _), c in pair_counts.items():
            row_totals[a] += c
        surfaces = sorted(row_totals)
        index = {s: i for i, s in enumerate(surfaces)}
        rng = np.random.default_rng(int(self.seed))
        projection = rng.normal(size=(len(surfaces), self.dim)) / math.sqrt(self.dim)
        unk_vector = rng.normal(size=self.dim) / math.sqrt(self.dim)
        vectors = {s: np.zeros(self.dim) for s in surfaces}
        for (a, b), c in pair_counts.items():
            pmi = math.log(c * total / (row_totals[a] * row_totals[b]))
            if pmi > 0.0:
                vectors[a] = vectors[a] + pmi * projection[index[b]]
        idf = {s: math.log((1 + n_docs) / (1 + df[s])) for s in df}
        self.table_ = EmbeddingTable(
            vectors=vectors,
            idf=idf,
            unk_vector=unk_vector,
            default_idf=math.log(1 + n_docs),
            dim=self.dim,
        )
        return self

    def transform(self, corpus=None):
        check_is_fitted(self, "table_")
        return self.table_


def train_embeddings(corpus, dim=64, window=3, seed=0, stopwords=None):
    return CooccurrenceEmbedder(dim=dim, window=window, seed=seed).fit(
        corpus, stopwords=stopwords
    ).table_


def semscore(candidate, reference, emb):
    """Greedy matching score: for each reference token, the best cosine
    against any candidate token; idf-weighted mean. Falls back to the
    unweighted mean if every reference token has zero idf."""
    cand = _surfaces(candidate)
    ref = _surfaces(reference)
    if not cand or not ref:
        raise ValidationError("semscore requires non-empty candidate and reference")
    cand_mat = np.stack([emb.vector_of(s) for s in cand])
    norms = np.linalg.norm(cand_mat, axis=1)
    norms[norms == 0.0] = 1.0
    cand_unit = cand_mat / norms[:, None]
    num = 0.0
    den = 0.0
    best_values = []
    for s in ref:
        v = emb.vector_of(s)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            best = 0.0
        else:
            best = float(np.max(cand_unit @ (v / nv)))
        w = emb.idf_of(s)
        num += w * best
        den += w
        best_values.append(best)
    if den == 0.0:
        return float(sum(best_values) / len(best_values))
    return float(num / den)


@dataclass(frozen=True)
class MetricReport:
    """Per-document and corpus-level scores for the four metrics."""

    per_doc: dict
    corpus: dict
    n_docs: int

    def to_json_obj(self):
        return {"per_doc": self.per_doc, "corpus": self.corpus, "n_docs": self.n_docs}


def score_generations(candidates, references, emb=None):
    """MetricReport over parallel candidate/reference sequence lists.

    Corpus BLEU pools counts across documents; ROUGE-1, METEOR and
    SemScore are unweighted means of per-document scores. SemScore is
    omitted when no embedding table is given.
    """
    if len(candidates) != len(references) or not candidates:
        raise ValidationError("need equal non-empty candidate/reference lists")
    per_doc = {}
    for cand, ref in zip(candidates, references):
        doc_id = getattr(ref, "doc_id", None) or getattr(cand, "doc_id", "") or str(len(per_doc))
        scores = {
            "bleu": bleu([cand], [ref]),
            "rouge1": rouge1(cand, ref),
            "meteor": meteor(cand, ref),
        }
        if emb is not None:
            scores["semscore"] = semscore(cand, ref, emb)
        per_doc[doc_id] = scores
    corpus_scores = {"bleu": bleu(candidates, references)}
    for name in ("rouge1", "meteor", "semscore"):
        values = [d[name] for d in per_doc.values() if name in d]
        if values:
            corpus_scores[name] = sum(values) / len(values)
    return MetricReport(per_doc=per_doc, corpus=corpus_scores, n_docs=len(candidates))
