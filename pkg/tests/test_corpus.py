import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from ldaselect.corpus import (
    SPARSE_TRIPLETS,
    TOKEN_LISTS,
    Corpus,
    Vocabulary,
    co_document_frequencies,
    load_corpus,
    save_corpus,
)
from ldaselect.errors import ParseError, ValidationError


def test_token_lists_two_docs(tmp_path):
    path = tmp_path / "docs.txt"
    path.write_text("a b a\nb c\n", encoding="utf-8")
    corpus = load_corpus(path, TOKEN_LISTS)
    assert corpus.n_docs == 2
    assert corpus.n_words == 3
    assert corpus.vocab.tokens == ("a", "b", "c")
    assert corpus.doc_lengths.tolist() == [3, 2]
    assert corpus.counts[0, 0] == 2
    assert corpus.total_words == 5


def test_empty_file_is_rejected(tmp_path):
    path = tmp_path / "empty.txt"
    path.write_text("", encoding="utf-8")
    with pytest.raises(ValidationError, match="no documents"):
        load_corpus(path, TOKEN_LISTS)


def test_blank_document_reports_line(tmp_path):
    path = tmp_path / "docs.txt"
    path.write_text("a b\n\nc\n", encoding="utf-8")
    with pytest.raises(ParseError, match="line 2"):
        load_corpus(path, TOKEN_LISTS)


def test_triplets(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("doc,word,count\n0,0,5\n1,2,1\n")
    (tmp_path / "x.csv.vocab").write_text("a\nb\nc\n")
    corpus = load_corpus(path, SPARSE_TRIPLETS)
    # independent re-parse of the file
    lines = path.read_text().splitlines()[1:]
    rows = [tuple(int(v) for v in line.split(",")) for line in lines]
    assert corpus.counts.nnz == len(rows) == 2
    assert corpus.total_words == sum(r[2] for r in rows) == 6
    for d, w, c in rows:
        assert corpus.counts[d, w] == c


@pytest.mark.parametrize(
    "body, message",
    [
        ("doc,word,count\n0,0,-1\n", "negative count"),
        ("doc,word,count\n0,3,1\n", "outside vocabulary"),
        ("doc,word,count\n0,x,1\n", "line 2"),
        ("doc,word,count\n0,1\n", "line 2"),
        ("d,w,c\n0,1,1\n", "header"),
    ],
)
def test_triplet_errors(tmp_path, body, message):
    path = tmp_path / "x.csv"
    path.write_text(body)
    (tmp_path / "x.csv.vocab").write_text("a\nb\nc\n")
    with pytest.raises(ValidationError, match=message):
        load_corpus(path, SPARSE_TRIPLETS)


def test_triplet_gap_document_rejected(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("doc,word,count\n0,0,1\n2,1,1\n")
    (tmp_path / "x.csv.vocab").write_text("a\nb\n")
    with pytest.raises(ValidationError, match="zero tokens"):
        load_corpus(path, SPARSE_TRIPLETS)


def test_vocabulary_invariants():
    with pytest.raises(ValidationError):
        Vocabulary(("a", "a"))
    with pytest.raises(ValidationError):
        Vocabulary(())
    v = Vocabulary(("x", "y"))
    assert v.index == {"x": 0, "y": 1}


def test_corpus_is_read_only(toy_corpus):
    with pytest.raises(ValueError):
        toy_corpus.counts.data[0] = 7
    with pytest.raises(ValueError):
        toy_corpus.doc_lengths[0] = 7


def test_compact_drops_unused_words():
    corpus = Corpus.from_dense([[1, 0, 2], [0, 0, 1]], vocab=["a", "b", "c"])
    small, kept = corpus.compact()
    assert kept.tolist() == [0, 2]
    assert small.vocab.tokens == ("a", "c")
    assert small.counts.toarray().tolist() == [[1, 2], [0, 1]]


docs_strategy = st.lists(
    st.lists(st.sampled_from(["alpha", "beta", "gamma", "delta", "eps", "zeta"]), min_size=1, max_size=12),
    min_size=1,
    max_size=8,
)


@given(docs_strategy)
@settings(max_examples=50, deadline=None)
def test_round_trip_token_lists(tmp_path_factory, docs):
    d = tmp_path_factory.mktemp("rt")
    src = d / "in.txt"
    src.write_text("".join(" ".join(doc) + "\n" for doc in docs), encoding="utf-8")
    corpus = load_corpus(src, TOKEN_LISTS)
    save_corpus(corpus, d / "out.txt", TOKEN_LISTS)
    assert load_corpus(d / "out.txt", TOKEN_LISTS).equals(corpus)
    save_corpus(corpus, d / "out.csv", SPARSE_TRIPLETS)
    assert load_corpus(d / "out.csv", SPARSE_TRIPLETS).equals(corpus)


@given(docs_strategy)
@settings(max_examples=50, deadline=None)
def test_length_invariants(docs):
    corpus = Corpus.from_documents(docs)
    X = corpus.counts.toarray()
    assert corpus.doc_lengths.tolist() == [len(d) for d in docs]
    assert np.array_equal(X.sum(axis=1), corpus.doc_lengths)
    assert corpus.total_words == sum(len(d) for d in docs)
    assert (X >= 0).all()


class TestCoDocumentFrequencies:
    def test_absent_word(self):
        corpus = Corpus.from_dense([[1, 0, 1], [2, 0, 0]])
        f, f2 = co_document_frequencies(corpus, [0, 1, 2])
        assert f[1] == 0
        assert f2[1].tolist() == [0, 0, 0]
        assert f2[:, 1].tolist() == [0, 0, 0]

    def test_half_overlap_against_doc_scan(self):
        X = np.array([[3, 1, 0], [1, 0, 2], [1, 2, 0], [4, 0, 1]])
        corpus = Corpus.from_dense(X)
        f, f2 = co_document_frequencies(corpus, [0, 1])
        # brute-force scan of the four documents
        scan_f = [sum(1 for row in X if row[i] > 0) for i in (0, 1)]
        scan_f2 = sum(1 for row in X if row[0] > 0 and row[1] > 0)
        assert f.tolist() == scan_f == [4, 2]
        assert f2[0, 1] == f2[1, 0] == scan_f2 == 2

    def test_single_document(self):
        corpus = Corpus.from_dense([[1, 5]])
        f, f2 = co_document_frequencies(corpus, [0, 1])
        assert f.tolist() == [1, 1]
        assert f2[0, 1] == 1

    def test_invalid_id(self):
        corpus = Corpus.from_dense([[1, 5]])
        with pytest.raises(ValidationError):
            co_document_frequencies(corpus, [0, 2])

    @given(st.integers(min_value=0, max_value=2**31))
    @settings(max_examples=30, deadline=None)
    def test_properties(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.poisson(0.7, size=(15, 8))
        X[:, 0] += 1
        corpus = Corpus.from_dense(X)
        words = list(range(8))
        f, f2 = co_document_frequencies(corpus, words)
        assert np.array_equal(np.diag(f2), f)
        assert np.array_equal(f2, f2.T)
        assert (f2 <= np.minimum.outer(f, f)).all()
