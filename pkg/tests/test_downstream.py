import random

import pytest

from textregen.corpus import Corpus, Document
from textregen.downstream import (
    AuthorPair,
    CharNgramVerifier,
    LabeledDoc,
    PerceptronTagger,
    TaggedSequence,
    TfidfLinearClassifier,
    calibrate_threshold,
    consistency_rate,
    eval_classifier,
    eval_tagger,
    reference_tag,
    spans_from_tags,
    verify_pair,
)
from textregen.errors import ValidationError
from textregen.tokenizer import EntityLexicon, tokenize

from oracles import f1_oracle


class TestReferenceTag:
    def test_longest_match_bio(self, disease_lexicon):
        corpus = Corpus((Document(id="d", text="severe septic shock"),))
        [tagged] = reference_tag(corpus, disease_lexicon)
        assert tagged.tags == ("O", "B-DISEASE", "I-DISEASE")

    def test_no_hits_all_outside(self, disease_lexicon):
        corpus = Corpus((Document(id="d", text="all quiet here"),))
        [tagged] = reference_tag(corpus, disease_lexicon)
        assert set(tagged.tags) == {"O"}

    def test_overlap_longer_span_wins(self):
        lexicon = EntityLexicon({"a b": "X", "b c d": "Y"})
        corpus = Corpus((Document(id="d", text="a b c d"),))
        [tagged] = reference_tag(corpus, lexicon)
        assert tagged.tags == ("O", "B-Y", "I-Y", "I-Y")

    def test_tagged_sequence_invariant(self):
        seq = tokenize("a b")
        with pytest.raises(ValidationError):
            TaggedSequence(sequence=seq, tags=("O", "I-X"))
        with pytest.raises(ValidationError):
            TaggedSequence(sequence=seq, tags=("B-X", "I-Y"))

    def test_spans_round_trip(self):
        tags = ["O", "B-X", "I-X", "O", "B-Y", "B-X"]
        assert spans_from_tags(tags) == [(1, 3, "X"), (4, 5, "Y"), (5, 6, "X")]


def _tagged_fixture(n=20, seed=3):
    lexicon = EntityLexicon(
        {"septic shock": "DISEASE", "aspirin": "DRUG", "renal failure": "DISEASE"}
    )
    rng = random.Random(seed)
    entities = ["septic shock", "aspirin", "renal failure"]
    fillers = ["patient", "stable", "admitted", "treated", "with", "severe", "today"]
    docs = []
    for i in range(n):
        words = [rng.choice(fillers) for _ in range(rng.randint(3, 6))]
        words.insert(rng.randrange(len(words) + 1), rng.choice(entities))
        docs.append(Document(id=f"d{i}", text=" ".join(words)))
    return reference_tag(Corpus(tuple(docs)), lexicon)


class TestTagger:
    def test_memorizes_training_set(self):
        tagged = _tagged_fixture(20)
        tagger = PerceptronTagger(epochs=5, seed=1).fit(tagged)
        correct = total = 0
        for example in tagged:
            predicted = tagger.predict(example.sequence)
            for a, b in zip(predicted.tags, example.tags):
                correct += a == b
                total += 1
        assert correct / total >= 0.95

    def test_single_sentence_exact(self):
        tagged = _tagged_fixture(1)
        tagger = PerceptronTagger(epochs=5, seed=1).fit(tagged)
        assert tagger.predict(tagged[0].sequence).tags == tagged[0].tags

    def test_deterministic_weights(self):
        tagged = _tagged_fixture(10)
        a = PerceptronTagger(epochs=3, seed=9).fit(tagged)
        b = PerceptronTagger(epochs=3, seed=9).fit(tagged)
        assert a.weights_ == b.weights_

    def test_empty_training_set_rejected(self):
        with pytest.raises(ValidationError):
            PerceptronTagger().fit([])

    def test_predictions_satisfy_bio_invariant(self):
        tagged = _tagged_fixture(10)
        tagger = PerceptronTagger(epochs=1, seed=0).fit(tagged)
        for example in _tagged_fixture(10, seed=77):
            tagger.predict(example.sequence)  # constructor validates BIO


class _StubTagger:
    def __init__(self, outputs):
        self.outputs = {id(seq): tags for seq, tags in outputs}

    def predict(self, seq):
        return TaggedSequence(sequence=seq, tags=self.outputs[id(seq)])


class TestEvalTagger:
    def test_perfect_is_one(self):
        tagged = _tagged_fixture(5)
        stub = _StubTagger([(t.sequence, t.tags) for t in tagged])
        assert eval_tagger(stub, tagged) == 1.0

    def test_no_predictions_is_zero(self):
        tagged = _tagged_fixture(5)
        stub = _StubTagger(
            [(t.sequence, tuple("O" for _ in t.tags)) for t in tagged]
        )
        assert eval_tagger(stub, tagged) == 0.0

    def test_pooled_counts_match_formula(self):
        # TP=2, FP=1, FN=1 -> P=R=2/3, F1=2/3
        seq = tokenize("aspirin x septic shock x renal failure")
        gold = TaggedSequence(
            sequence=seq,
            tags=("B-DRUG", "O", "B-DISEASE", "I-DISEASE", "O", "B-DISEASE", "I-DISEASE"),
        )
        predicted = ("B-DRUG", "O", "B-DISEASE", "I-DISEASE", "O", "O", "B-DISEASE")
        stub = _StubTagger([(seq, predicted)])
        f1 = eval_tagger(stub, [gold])
        assert f1 == pytest.approx(2 / 3, abs=1e-12)
        assert f1 == pytest.approx(f1_oracle(tp=2, fp=1, fn=1), abs=1e-12)


def _separable_docs():
    docs = []
    for i in range(6):
        docs.append(
            LabeledDoc(doc_id=f"x{i}", text=f"xxx marker common {i}", label_set={"x"})
        )
        docs.append(
            LabeledDoc(doc_id=f"y{i}", text=f"yyy marker common {i}", label_set={"y"})
        )
    return docs


class TestClassifier:
    def test_separable_training_f1_is_one(self):
        docs = _separable_docs()
        clf = TfidfLinearClassifier(labels=("x", "y")).fit(docs)
        assert eval_classifier(clf, docs) == 1.0

    def test_label_without_positives_rejected(self):
        docs = _separable_docs()
        with pytest.raises(ValidationError, match="no positive"):
            TfidfLinearClassifier(labels=("x", "y", "ghost")).fit(docs)

    def test_deterministic(self):
        docs = _separable_docs()
        a = TfidfLinearClassifier(labels=("x", "y")).fit(docs)
        b = TfidfLinearClassifier(labels=("x", "y")).fit(docs)
        assert a.predict(docs) == b.predict(docs)

    def test_eval_all_correct_and_complement(self):
        docs = _separable_docs()[:4]

        class Fixed:
            def __init__(self, outs):
                self.outs = outs

            def predict(self, test):
                return self.outs

        right = Fixed([d.label_set for d in docs])
        assert eval_classifier(right, docs) == 1.0
        wrong = Fixed([frozenset({"x", "y"}) - d.label_set for d in docs])
        assert eval_classifier(wrong, docs) == 0.0

    def test_pooled_micro_f1_formula(self):
        # TP=3, FP=3, FN=1 -> P=0.5, R=0.75, F1=0.6
        docs = [
            LabeledDoc(doc_id="a", text="t", label_set={"p", "q"}),
            LabeledDoc(doc_id="b", text="t", label_set={"p", "q"}),
        ]

        class Fixed:
            def predict(self, test):
                return [frozenset({"p", "q", "r"}), frozenset({"p", "r", "s"})]

        f1 = eval_classifier(Fixed(), docs)
        assert f1 == pytest.approx(0.6, abs=1e-12)
        assert f1 == pytest.approx(f1_oracle(tp=3, fp=3, fn=1), abs=1e-12)


SAME_A = "the weather was lovely today and we walked along the river for hours."
SAME_B = "the weather seemed lovely and we walked slowly along the river today."
DIFF_B = "QUARTERLY REVENUE: +12.4%; EBITDA margin compressed ~80bps QoQ!!"


class TestVerifier:
    def test_identical_texts_score_one(self):
        pair = verify_pair(SAME_A, SAME_A, threshold=0.5)
        assert pair.score == pytest.approx(1.0, abs=1e-12)
        assert pair.predicted_same

    def test_disjoint_alphabets_score_zero(self):
        pair = verify_pair("aaaa bbbb cccc dddd eeee", "11111 22222 33333 44444", threshold=0.5)
        assert pair.score == 0.0
        assert not pair.predicted_same

    def test_threshold_boundary_geq_rule(self):
        score = verify_pair(SAME_A, SAME_B, threshold=0.0).score
        at = verify_pair(SAME_A, SAME_B, threshold=score)
        assert at.predicted_same  # exactly at threshold counts as same
        above = verify_pair(SAME_A, SAME_B, threshold=score + 1e-9)
        assert not above.predicted_same

    def test_too_short_text_rejected(self):
        with pytest.raises(ValidationError):
            verify_pair("short", SAME_A, threshold=0.5)

    def test_calibration_maximizes_accuracy_ties_low(self):
        threshold, accuracy = calibrate_threshold([0.8, 0.9], [0.1, 0.2])
        assert accuracy == 1.0
        assert threshold <= 0.8
        # separating anywhere in (0.2, 0.8] is perfect; ties go low, and
        # candidates are the observed scores, so the pick is 0.8
        assert threshold == pytest.approx(0.8)


def _calibrated_verifier():
    pairs = [(SAME_A, SAME_B), (SAME_A, SAME_A)]
    labels = [True, True]
    pairs += [(SAME_A, DIFF_B), (SAME_B, DIFF_B)]
    labels += [False, False]
    return CharNgramVerifier().fit(pairs, labels)


class TestConsistency:
    def test_unchanged_regenerations_keep_rate_one(self):
        verifier = _calibrated_verifier()
        pair = verifier.verify(SAME_A, SAME_B)
        assert pair.predicted_same
        assert consistency_rate([pair], {pair: SAME_B}, verifier) == 1.0

    def test_unrelated_replacement_drops_rate(self):
        verifier = _calibrated_verifier()
        pair = verifier.verify(SAME_A, SAME_B)
        rate = consistency_rate([pair], {pair: "0101 #### 9999 $$$$ @@@@"}, verifier)
        assert rate == 0.0

    def test_half_preserved(self):
        verifier = _calibrated_verifier()
        p1 = verifier.verify(SAME_A, SAME_B)
        p2 = verifier.verify(SAME_A, SAME_A)
        regenerated = {p1: SAME_B, p2: "0101 #### 9999 $$$$ @@@@"}
        assert consistency_rate([p1, p2], regenerated, verifier) == 0.5

    def test_monotonicity(self):
        verifier = _calibrated_verifier()
        kept = verifier.verify(SAME_A, SAME_B)
        flipped = verifier.verify(SAME_A, SAME_A)
        regen = {kept: SAME_B, flipped: "0101 #### 9999 $$$$ @@@@"}
        base = consistency_rate([kept], {kept: SAME_B}, verifier)
        with_flip = consistency_rate([kept, flipped], regen, verifier)
        assert with_flip <= base

    def test_requires_same_author_inputs(self):
        verifier = _calibrated_verifier()
        bad = AuthorPair(text_a=SAME_A, text_b=DIFF_B, predicted_same=False, score=0.1)
        with pytest.raises(ValidationError):
            consistency_rate([bad], {bad: SAME_B}, verifier)

    def test_empty_pairs_rejected(self):
        verifier = _calibrated_verifier()
        with pytest.raises(ValidationError):
            consistency_rate([], {}, verifier)
