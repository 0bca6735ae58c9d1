import pytest

from textregen.corpus import (
    Corpus,
    Document,
    SplitSpec,
    load_corpus,
    save_corpus,
    split_corpus,
    top_k_labels,
)
from textregen.errors import ParseError, ValidationError

from conftest import write_jsonl


def test_load_jsonl_preserves_order(tmp_path):
    path = write_jsonl(tmp_path / "c.jsonl", [{"id": "a", "text": "hi"}, {"id": "b", "text": "yo"}])
    corpus = load_corpus(path)
    assert len(corpus) == 2
    assert [d.id for d in corpus] == ["a", "b"]
    assert [d.text for d in corpus] == ["hi", "yo"]


def test_load_captures_labels_and_author(tmp_path):
    path = write_jsonl(
        tmp_path / "c.jsonl",
        [{"id": "a", "text": "hi", "labels": ["x", "y"], "author": "auth1"}],
    )
    doc = load_corpus(path)[0]
    assert doc.labels == frozenset({"x", "y"})
    assert doc.author_id == "auth1"


def test_load_missing_text_names_line(tmp_path):
    path = write_jsonl(tmp_path / "c.jsonl", [{"id": "a", "text": "hi"}, {"id": "b"}])
    with pytest.raises(ParseError, match=":2"):
        load_corpus(path)


def test_load_bad_json_names_line(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"id": "a", "text": "hi"}\nnot json\n', encoding="utf-8")
    with pytest.raises(ParseError, match=":2"):
        load_corpus(path)


def test_duplicate_id_rejected(tmp_path):
    path = write_jsonl(
        tmp_path / "c.jsonl", [{"id": "a", "text": "hi"}, {"id": "a", "text": "yo"}]
    )
    with pytest.raises(ValidationError, match="duplicate"):
        load_corpus(path)


def test_plain_dir_loading(tmp_path):
    (tmp_path / "b.txt").write_text("second", encoding="utf-8")
    (tmp_path / "a.txt").write_text("first", encoding="utf-8")
    corpus = load_corpus(tmp_path, format="plain_dir")
    assert [d.id for d in corpus] == ["a", "b"]


def test_round_trip(tmp_path):
    original = Corpus(
        (
            Document(id="a", text="hello there", labels=frozenset({"x"})),
            Document(id="b", text="unicode éè", author_id="w"),
        ),
        name="c",
    )
    path = save_corpus(original, tmp_path / "c.jsonl")
    reloaded = load_corpus(path, name="c")
    assert reloaded == original
    # a second round trip is byte-identical
    path2 = save_corpus(reloaded, tmp_path / "c2.jsonl")
    assert path.read_bytes() == path2.read_bytes()


def _docs(n):
    return Corpus(tuple(Document(id=f"d{i}", text=f"text {i}") for i in range(n)))


def test_split_cardinality_and_disjointness():
    train, test = split_corpus(_docs(10), SplitSpec(train_fraction=0.8, seed=7))
    assert len(train) == 8 and len(test) == 2
    train_ids = {d.id for d in train}
    test_ids = {d.id for d in test}
    assert train_ids.isdisjoint(test_ids)
    assert train_ids | test_ids == {f"d{i}" for i in range(10)}


def test_split_deterministic():
    a = split_corpus(_docs(10), SplitSpec(train_fraction=0.8, seed=7))
    b = split_corpus(_docs(10), SplitSpec(train_fraction=0.8, seed=7))
    assert [d.id for d in a[0]] == [d.id for d in b[0]]
    assert [d.id for d in a[1]] == [d.id for d in b[1]]


def test_split_two_docs_boundary():
    train, test = split_corpus(_docs(2), SplitSpec(train_fraction=0.5, seed=0))
    assert len(train) == 1 and len(test) == 1


def test_split_empty_side_rejected():
    with pytest.raises(ValidationError):
        split_corpus(_docs(3), SplitSpec(train_fraction=0.01, seed=0))


def _labeled(label_counts):
    docs = []
    i = 0
    for label, count in label_counts.items():
        for _ in range(count):
            docs.append(Document(id=f"d{i}", text="t", labels=frozenset({label})))
            i += 1
    return Corpus(tuple(docs))


def test_top_k_labels_frequency_order():
    corpus = _labeled({"x": 5, "y": 3, "z": 1})
    assert top_k_labels(corpus, 2) == ["x", "y"]


def test_top_k_labels_lexicographic_tiebreak():
    corpus = _labeled({"y": 3, "x": 3})
    assert top_k_labels(corpus, 1) == ["x"]


def test_top_k_labels_prefix_property():
    corpus = _labeled({"x": 5, "y": 3, "z": 1})
    full = top_k_labels(corpus, 3)
    assert top_k_labels(corpus, 2) == full[:2]
    assert top_k_labels(corpus, 1) == full[:1]


def test_top_k_too_few_labels():
    corpus = _labeled({"x": 1})
    with pytest.raises(ValidationError):
        top_k_labels(corpus, 2)


def test_bundled_medical_corpus_has_200_docs(toy_medical):
    assert len(toy_medical) == 200


def test_bundled_movies_top_6_labels(toy_movies):
    # frozen from counting label frequencies in the bundled fixture
    labels = top_k_labels(toy_movies, 6)
    assert len(labels) == 6
    freq = {}
    for doc in toy_movies:
        for label in doc.labels or ():
            freq[label] = freq.get(label, 0) + 1
    expected = sorted(freq, key=lambda l: (-freq[l], l))[:6]
    assert labels == expected
