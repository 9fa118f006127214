"""Selection criteria for the number of topics in LDA models, with a Monte Carlo harness."""

from ldaselect.corpus import Corpus, Vocabulary, co_document_frequencies, load_corpus
from ldaselect.criteria import (
    CriteriaConfig,
    CriterionScore,
    cao_juan,
    mimno_coherence,
    optop,
    select_optimal_k,
)
from ldaselect.errors import LdaSelectError, NumericalError, ParseError, ValidationError
from ldaselect.evaluation import EvalScores, MatchResult, best_match, classification_scores
from ldaselect.generator import Dgp, generate_corpus, reduce_topics
from ldaselect.lda import FitConfig, LdaModel, corpus_log_likelihood, fit_lda
from ldaselect.sbic import LearningCoefficient, SbicInput, compute_sbic, learning_coefficient

__version__ = "0.1.0"
