import numpy as np
import pytest

from ldaselect.corpus import Corpus
from ldaselect.generator import Dgp


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def toy_corpus():
    return Corpus.from_documents([["a", "b", "a"], ["b", "c"]])


def separable_dgp(n_docs=60, doc_len=40, words_per_topic=10):
    """Two topics uniform on disjoint halves of the vocabulary."""
    I = 2 * words_per_topic
    beta = np.zeros((2, I))
    beta[0, :words_per_topic] = 1.0 / words_per_topic
    beta[1, words_per_topic:] = 1.0 / words_per_topic
    theta = np.zeros((n_docs, 2))
    theta[: n_docs // 2, 0] = 1.0
    theta[n_docs // 2:, 1] = 1.0
    return Dgp(beta, theta, np.full(n_docs, doc_len), {"cutoff": 0.5})
