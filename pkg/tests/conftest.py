import json

import pytest

from textregen.corpus import Corpus, Document, load_toy_corpus
from textregen.tokenizer import EntityLexicon, tokenize


@pytest.fixture(scope="session")
def fox_sequence():
    return tokenize("The quick brown fox jumps over the lazy dog", doc_id="fox")


@pytest.fixture(scope="session")
def fox_corpus():
    return Corpus(
        (Document(id="fox", text="the quick brown fox jumps over the lazy dog"),),
        name="fox",
    )


@pytest.fixture(scope="session")
def disease_lexicon():
    return EntityLexicon({"septic shock": "DISEASE"})


@pytest.fixture(scope="session")
def toy_medical():
    return load_toy_corpus("medical")


@pytest.fixture(scope="session")
def toy_movies():
    return load_toy_corpus("movies")


@pytest.fixture(scope="session")
def toy_authors():
    return load_toy_corpus("authors")


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return path
