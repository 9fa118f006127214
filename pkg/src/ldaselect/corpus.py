"""Vocabulary and document-term data structures.

Documents are stored doc-major in a ``scipy.sparse.csr_matrix`` of word-type
counts. Two on-disk formats are supported:

* ``token-lists``: UTF-8 text, one document per line, whitespace-separated tokens.
* ``sparse-triplets``: CSV with header ``doc,word,count`` plus a vocabulary
  sidecar holding one token per line (line number = word id).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from ldaselect.errors import ParseError, ValidationError

TOKEN_LISTS = "token-lists"
SPARSE_TRIPLETS = "sparse-triplets"
FORMATS = (TOKEN_LISTS, SPARSE_TRIPLETS)


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tokens = tuple(self.tokens)
        if not tokens:
            raise ValidationError("vocabulary is empty")
        index = {tok: i for i, tok in enumerate(tokens)}
        if len(index) != len(tokens):
            raise ValidationError("vocabulary tokens are not unique")
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "index", index)

    def __len__(self):
        return len(self.tokens)

    @classmethod
    def synthetic(cls, size: int) -> "Vocabulary":
        """Placeholder vocabulary ``w0000 ... w{size-1}`` for generated data."""
        width = max(4, len(str(size - 1)))
        return cls(tuple(f"w{i:0{width}d}" for i in range(size)))


@dataclass(frozen=True, eq=False)
class Corpus:
    """J x I document-word count matrix with its vocabulary."""

    vocab: Vocabulary
    counts: sp.csr_matrix

    def __post_init__(self):
        counts = sp.csr_matrix(self.counts, dtype=np.int64)
        counts.sum_duplicates()
        counts.eliminate_zeros()
        counts.sort_indices()
        if counts.shape[0] < 1:
            raise ValidationError("no documents")
        if counts.shape[1] != len(self.vocab):
            raise ValidationError(
                f"count matrix has {counts.shape[1]} columns but vocabulary has {len(self.vocab)} tokens"
            )
        if counts.nnz and counts.data.min() < 0:
            raise ValidationError("negative word count")
        lengths = np.asarray(counts.sum(axis=1)).ravel()
        empty = np.flatnonzero(lengths == 0)
        if empty.size:
            raise ValidationError(f"documents with zero tokens: {empty[:10].tolist()}")
        counts.data.flags.writeable = False
        lengths.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "_lengths", lengths)

    @property
    def n_docs(self) -> int:
        return self.counts.shape[0]

    @property
    def n_words(self) -> int:
        """Vocabulary size I."""
        return self.counts.shape[1]

    @property
    def doc_lengths(self) -> np.ndarray:
        return self._lengths

    @property
    def total_words(self) -> int:
        return int(self._lengths.sum())

    def dense_row(self, j: int) -> np.ndarray:
        return self.counts.getrow(j).toarray().ravel()

    def relative_frequencies(self) -> sp.csr_matrix:
        """Rows of X divided by document length."""
        return sp.csr_matrix(sp.diags(1.0 / self._lengths) @ self.counts)

    def token_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened (doc_id, word_id) arrays, one entry per token, doc-major."""
        X = self.counts
        reps = X.data
        words = np.repeat(X.indices, reps).astype(np.int64)
        docs = np.repeat(np.repeat(np.arange(X.shape[0]), np.diff(X.indptr)), reps).astype(np.int64)
        return docs, words

    def compact(self) -> tuple["Corpus", np.ndarray]:
        """Restrict to word types that occur at least once.

        Returns the reduced corpus and the original ids of the kept columns.
        """
        present = np.flatnonzero(np.asarray((self.counts > 0).sum(axis=0)).ravel())
        vocab = Vocabulary(tuple(self.vocab.tokens[i] for i in present))
        return Corpus(vocab, self.counts[:, present]), present

    def equals(self, other: "Corpus") -> bool:
        return (
            self.vocab.tokens == other.vocab.tokens
            and self.counts.shape == other.counts.shape
            and (self.counts != other.counts).nnz == 0
        )

    @classmethod
    def from_dense(cls, counts, vocab: Vocabulary | Sequence[str] | None = None) -> "Corpus":
        counts = np.asarray(counts)
        if counts.ndim != 2:
            raise ValidationError("count matrix must be two-dimensional")
        if np.any(counts < 0):
            raise ValidationError("negative word count")
        if vocab is None:
            vocab = Vocabulary.synthetic(counts.shape[1])
        elif not isinstance(vocab, Vocabulary):
            vocab = Vocabulary(tuple(vocab))
        return cls(vocab, sp.csr_matrix(counts.astype(np.int64)))

    @classmethod
    def from_documents(cls, documents: Sequence[Sequence[str]]) -> "Corpus":
        """Build from tokenized documents; vocabulary in first-appearance order."""
        index: dict[str, int] = {}
        rows, cols = [], []
        for j, doc in enumerate(documents):
            for tok in doc:
                i = index.setdefault(tok, len(index))
                rows.append(j)
                cols.append(i)
        if not documents:
            raise ValidationError("no documents")
        if not index:
            raise ValidationError("documents with zero tokens")
        data = np.ones(len(rows), dtype=np.int64)
        X = sp.coo_matrix((data, (rows, cols)), shape=(len(documents), len(index)))
        return cls(Vocabulary(tuple(index)), X.tocsr())


def load_corpus(path, format: str = TOKEN_LISTS, vocab_path=None) -> Corpus:
    """Read a corpus file.

    For ``sparse-triplets`` the vocabulary sidecar defaults to ``<path>.vocab``.
    """
    path = Path(path)
    if format == TOKEN_LISTS:
        return _load_token_lists(path)
    if format == SPARSE_TRIPLETS:
        vocab_path = Path(vocab_path) if vocab_path is not None else default_vocab_path(path)
        return _load_triplets(path, vocab_path)
    raise ValidationError(f"unknown corpus format {format!r}; expected one of {FORMATS}")


def default_vocab_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".vocab")


def _load_token_lists(path: Path) -> Corpus:
    docs = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                raise ParseError("document with zero tokens", line=lineno)
            docs.append(tokens)
    if not docs:
        raise ValidationError("no documents")
    return Corpus.from_documents(docs)


def _load_triplets(path: Path, vocab_path: Path) -> Corpus:
    with vocab_path.open(encoding="utf-8") as fh:
        tokens = [line.rstrip("\n").rstrip("\r") for line in fh]
    while tokens and tokens[-1] == "":
        tokens.pop()
    vocab = Vocabulary(tuple(tokens))
    rows, cols, vals = [], [], []
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValidationError("no documents")
        if [h.strip() for h in header] != ["doc", "word", "count"]:
            raise ParseError(f"expected header 'doc,word,count', got {','.join(header)!r}", line=1)
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 3:
                raise ParseError(f"expected 3 fields, got {len(rec)}", line=lineno)
            try:
                d, w, c = (int(x) for x in rec)
            except ValueError as exc:
                raise ParseError(f"non-integer field ({exc})", line=lineno) from None
            if c < 0:
                raise ValidationError(f"line {lineno}: negative count {c}")
            if w < 0 or w >= len(vocab):
                raise ValidationError(f"line {lineno}: word id {w} outside vocabulary of size {len(vocab)}")
            if d < 0:
                raise ValidationError(f"line {lineno}: negative document id {d}")
            rows.append(d)
            cols.append(w)
            vals.append(c)
    if not rows:
        raise ValidationError("no documents")
    X = sp.coo_matrix((vals, (rows, cols)), shape=(max(rows) + 1, len(vocab)), dtype=np.int64)
    return Corpus(vocab, X.tocsr())


def save_corpus(corpus: Corpus, path, format: str = SPARSE_TRIPLETS, vocab_path=None) -> None:
    path = Path(path)
    if format == TOKEN_LISTS:
        tokens = corpus.vocab.tokens
        X = corpus.counts
        with path.open("w", encoding="utf-8") as fh:
            for j in range(X.shape[0]):
                lo, hi = X.indptr[j], X.indptr[j + 1]
                words = []
                for i, c in zip(X.indices[lo:hi], X.data[lo:hi]):
                    words.extend([tokens[i]] * int(c))
                fh.write(" ".join(words) + "\n")
    elif format == SPARSE_TRIPLETS:
        vocab_path = Path(vocab_path) if vocab_path is not None else default_vocab_path(path)
        coo = corpus.counts.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["doc", "word", "count"])
            for k in order:
                writer.writerow([int(coo.row[k]), int(coo.col[k]), int(coo.data[k])])
        vocab_path.write_text("".join(t + "\n" for t in corpus.vocab.tokens), encoding="utf-8")
    else:
        raise ValidationError(f"unknown corpus format {format!r}; expected one of {FORMATS}")


def co_document_frequencies(corpus: Corpus, words: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Document and co-document frequencies for a list of word ids.

    Returns ``(f, f2)`` indexed by position in ``words``: ``f[a]`` is the number
    of documents containing ``words[a]`` and ``f2[a, b]`` the number containing
    both ``words[a]`` and ``words[b]`` (so ``f2[a, a] == f[a]``).
    """
    words = np.asarray(words, dtype=np.int64)
    if words.ndim != 1:
        raise ValidationError("words must be a flat list of ids")
    bad = words[(words < 0) | (words >= corpus.n_words)]
    if bad.size:
        raise ValidationError(f"invalid word id(s) {bad.tolist()} for vocabulary of size {corpus.n_words}")
    present = corpus.counts[:, words]
    present = (present > 0).astype(np.int64)
    f2 = np.asarray((present.T @ present).todense(), dtype=np.int64)
    f = np.diag(f2).copy()
    return f, f2
