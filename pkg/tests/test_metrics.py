import random

import numpy as np
import pytest

from textregen.corpus import Corpus, Document
from textregen.errors import ValidationError
from textregen.metrics import (
    CooccurrenceEmbedder,
    bleu,
    meteor,
    rouge1,
    score_generations,
    semscore,
    train_embeddings,
)

from oracles import bleu_oracle, meteor_oracle, rouge1_oracle, semscore_oracle


def random_pairs(n_pairs, seed, max_len=12, vocab=8):
    rng = random.Random(seed)
    words = [f"t{i}" for i in range(vocab)]
    pairs = []
    for _ in range(n_pairs):
        cand = [rng.choice(words) for _ in range(rng.randint(1, max_len))]
        ref = [rng.choice(words) for _ in range(rng.randint(1, max_len))]
        pairs.append((cand, ref))
    return pairs


class TestBleu:
    def test_identical_is_one(self):
        docs = [["a", "b", "c", "d", "e"], ["x", "y", "z", "w"]]
        assert bleu(docs, docs) == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_vocabulary_near_zero(self):
        assert bleu([["a", "b", "c", "d"]], [["x", "y", "z", "w"]]) < 0.01

    def test_hand_worked_example(self):
        # frozen from the brute-force oracle; equals exp(-1) because the
        # 1..3-gram precisions are perfect, the 4-gram bucket is empty,
        # and BP = exp(1 - 6/3)
        value = bleu([["the", "cat", "sat"]], [["the", "cat", "sat", "on", "the", "mat"]])
        assert value == pytest.approx(0.36787944117144233, abs=1e-12)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            bleu([["a"]], [["a"], ["b"]])

    def test_oracle_equivalence_single_docs(self):
        for cand, ref in random_pairs(100, seed=101):
            assert bleu([cand], [ref]) == pytest.approx(
                bleu_oracle([cand], [ref]), abs=1e-9
            )

    def test_oracle_equivalence_pooled_corpus(self):
        rng = random.Random(7)
        pairs = random_pairs(40, seed=202)
        for _ in range(10):
            k = rng.randint(2, 8)
            batch = rng.sample(pairs, k)
            cands = [c for c, _ in batch]
            refs = [r for _, r in batch]
            assert bleu(cands, refs) == pytest.approx(
                bleu_oracle(cands, refs), abs=1e-9
            )


class TestRouge1:
    def test_identical_is_one(self):
        assert rouge1(["a", "b"], ["a", "b"]) == 1.0

    def test_half_matched(self):
        assert rouge1(["a"], ["a", "b"]) == 0.5

    def test_empty_reference_rejected(self):
        with pytest.raises(ValidationError):
            rouge1(["a"], [])

    def test_oracle_equivalence(self):
        for cand, ref in random_pairs(100, seed=303):
            assert rouge1(cand, ref) == pytest.approx(
                rouge1_oracle(cand, ref), abs=1e-12
            )

    def test_adding_matched_token_never_decreases(self):
        for cand, ref in random_pairs(50, seed=404):
            base = rouge1(cand, ref)
            assert rouge1(cand + [ref[0]], ref) >= base - 1e-12


class TestMeteor:
    def test_identical_six_tokens(self):
        seq = ["a", "b", "c", "d", "e", "f"]
        assert meteor(seq, seq) == pytest.approx(1 - 0.5 * (1 / 6) ** 3, abs=1e-12)
        assert meteor(seq, seq) == pytest.approx(0.9976851851851852, abs=1e-12)

    def test_zero_matches_is_zero(self):
        assert meteor(["a", "b"], ["x", "y"]) == 0.0

    def test_swapped_halves_two_chunks(self):
        # m=4, chunks=2: F=1, penalty=0.5*(2/4)^3; frozen via the
        # brute-force alignment enumeration
        assert meteor(["c", "d", "a", "b"], ["a", "b", "c", "d"]) == pytest.approx(
            0.9375, abs=1e-12
        )

    def test_empty_inputs_rejected(self):
        with pytest.raises(ValidationError):
            meteor([], ["a"])
        with pytest.raises(ValidationError):
            meteor(["a"], [])

    def test_oracle_equivalence(self):
        for cand, ref in random_pairs(100, seed=505):
            assert meteor(cand, ref) == pytest.approx(
                meteor_oracle(cand, ref), abs=1e-9
            )

    def test_oracle_equivalence_repetitive(self):
        # heavy duplication stresses the chunk minimization
        for cand, ref in random_pairs(40, seed=606, vocab=3):
            assert meteor(cand, ref) == pytest.approx(
                meteor_oracle(cand, ref), abs=1e-9
            )


def _embedding_corpus():
    docs = []
    for i in range(10):
        docs.append(Document(id=f"a{i}", text="alpha beta gamma alpha beta"))
        docs.append(Document(id=f"b{i}", text="delta epsilon zeta delta epsilon"))
    docs.append(Document(id="solo", text="solo solo solo"))
    return Corpus(tuple(docs))


class TestEmbeddings:
    def test_self_cooccurring_token_orthogonalish(self):
        emb = train_embeddings(_embedding_corpus(), dim=32, window=2, seed=5)
        solo = emb.vector_of("solo")
        for other in ("alpha", "delta"):
            v = emb.vector_of(other)
            cos = float(
                np.dot(solo, v) / (np.linalg.norm(solo) * np.linalg.norm(v))
            )
            assert abs(cos) < 0.3

    def test_idf_of_ubiquitous_token_is_zero(self):
        docs = tuple(Document(id=f"d{i}", text="common filler") for i in range(5))
        emb = train_embeddings(Corpus(docs), dim=8, window=2, seed=1)
        assert emb.idf_of("common") == pytest.approx(0.0, abs=1e-12)

    def test_deterministic_given_seed(self):
        a = train_embeddings(_embedding_corpus(), dim=16, window=2, seed=9)
        b = train_embeddings(_embedding_corpus(), dim=16, window=2, seed=9)
        assert a.idf == b.idf
        for s in a.vectors:
            assert np.array_equal(a.vectors[s], b.vectors[s])

    def test_estimator_interface(self):
        est = CooccurrenceEmbedder(dim=8, window=2, seed=3)
        assert est.get_params()["dim"] == 8
        table = est.fit(_embedding_corpus()).transform()
        assert table.dim == 8


@pytest.fixture(scope="module")
def emb():
    return train_embeddings(_embedding_corpus(), dim=32, window=2, seed=5)


class TestSemscore:

    def test_identical_is_one(self, emb):
        seq = ["alpha", "beta", "gamma"]
        assert semscore(seq, seq, emb) == pytest.approx(1.0, abs=1e-9)

    def test_oov_candidate_reproducible(self, emb):
        a = semscore(["unseen1", "unseen2"], ["alpha", "beta"], emb)
        b = semscore(["unseen1", "unseen2"], ["alpha", "beta"], emb)
        assert a == b
        assert -1.0 - 1e-9 <= a <= 1.0 + 1e-9

    def test_oracle_equivalence(self, emb):
        vocab = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "solo", "oov"]
        rng = random.Random(808)
        for _ in range(100):
            cand = [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
            ref = [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
            expected = semscore_oracle(
                cand, ref, lambda s: list(emb.vector_of(s)), emb.idf_of
            )
            assert semscore(cand, ref, emb) == pytest.approx(expected, abs=1e-9)

    def test_empty_rejected(self, emb):
        with pytest.raises(ValidationError):
            semscore([], ["alpha"], emb)


class TestReport:
    def test_score_generations_aggregates(self):
        emb = train_embeddings(_embedding_corpus(), dim=16, window=2, seed=2)
        cands = [["alpha", "beta", "gamma", "alpha"], ["delta", "epsilon", "zeta", "delta"]]
        refs = [["alpha", "beta", "gamma", "beta"], ["delta", "epsilon", "zeta", "delta"]]
        report = score_generations(cands, refs, emb)
        assert report.n_docs == 2
        assert set(report.corpus) == {"bleu", "rouge1", "meteor", "semscore"}
        for scores in report.per_doc.values():
            for name in ("bleu", "rouge1", "meteor"):
                assert 0.0 <= scores[name] <= 1.0
            assert -1.0 <= scores["semscore"] <= 1.0 + 1e-9
        # corpus BLEU pools counts; the others are per-doc means
        assert report.corpus["rouge1"] == pytest.approx(
            sum(d["rouge1"] for d in report.per_doc.values()) / 2
        )
        assert report.corpus["bleu"] == pytest.approx(bleu(cands, refs))
