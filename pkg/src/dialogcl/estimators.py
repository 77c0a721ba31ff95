"""Estimator-style front doors for the scoring and training pipelines.

These wrap the functional core in the fit/transform idiom so the
package composes with common tooling: ``AttributeScorer`` learns corpus
statistics in ``fit`` and emits a score matrix in ``transform``;
``CurriculumTrainer`` runs a full scheduling session in ``fit``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .attributes import (AttributeScores, BigramConfidenceProvider,
                         FileConfidenceProvider, load_confidence_file,
                         score_corpus, score_sample)
from .corpus import Corpus, DialogueSample, corpus_from_rows, tokenize
from .curriculum import ATTRIBUTES, build_all_curricula
from .embeddings import EmbeddingTable, hashed_table, load_embeddings
from .learner import SimulatedLearner, easiness_matrix
from .metrics import MetricVector
from .scheduler import TrainConfig, train_loop


def _as_rows(X) -> list[tuple[str, str, str | None]]:
    rows = []
    for item in X:
        if isinstance(item, DialogueSample):
            rows.append((item.raw_query, item.raw_response,
                         " ".join(item.next_utterance) if item.next_utterance else None))
        elif isinstance(item, (tuple, list)) and len(item) in (2, 3):
            query, response = item[0], item[1]
            nxt = item[2] if len(item) == 3 else None
            rows.append((str(query), str(response), None if nxt is None else str(nxt)))
        else:
            raise ValueError(
                "X items must be DialogueSample or (query, response[, next]) tuples")
    return rows


class AttributeScorer(BaseEstimator, TransformerMixin):
    """Score dialogue samples along the five complexity attributes.

    Parameters
    ----------
    embeddings : str or None
        Path to a word-vector text file. When None, deterministic hashed
        vectors of dimension ``hashed_dim`` are used instead.
    hashed_dim, hashed_seed : int
        Shape and seed of the hashed fallback vectors.
    confidence : str
        "builtin" for the bigram proxy model, or a path to an external
        ``id,loss`` file.
    unigram_source : str
        "both" or "responses"; text feeding the frequency weights.
    threads : int
        Worker threads for scoring.

    Attributes
    ----------
    corpus_ : Corpus
        Statistics learned from the fitted samples.
    table_ : EmbeddingTable
    scores_ : list of AttributeScores for the fitted samples.
    """

    def __init__(self, embeddings=None, hashed_dim: int = 64, hashed_seed: int = 0,
                 confidence: str = "builtin", unigram_source: str = "both",
                 threads: int = 1):
        self.embeddings = embeddings
        self.hashed_dim = hashed_dim
        self.hashed_seed = hashed_seed
        self.confidence = confidence
        self.unigram_source = unigram_source
        self.threads = threads

    def fit(self, X, y=None):
        """Learn corpus statistics from samples or a prebuilt Corpus."""
        if isinstance(X, Corpus):
            self.corpus_ = X
        else:
            self.corpus_ = corpus_from_rows(_as_rows(X), self.unigram_source)
        if self.embeddings is None:
            self.table_ = hashed_table(self.hashed_dim, self.hashed_seed)
        else:
            self.table_ = load_embeddings(self.embeddings)
        if self.confidence == "builtin":
            self.provider_ = BigramConfidenceProvider(self.corpus_)
        else:
            self.provider_ = load_confidence_file(self.confidence)
        self.scores_ = score_corpus(self.corpus_, self.table_, self.provider_,
                                    self.threads)
        return self

    def score_records(self, X=None) -> list[AttributeScores]:
        """AttributeScores for new samples, or the fitted ones when X is None."""
        check_is_fitted(self, "corpus_")
        if X is None:
            return self.scores_
        records = []
        for i, (q, r, nxt) in enumerate(_as_rows(X)):
            sample = DialogueSample(
                id=i, query=tokenize(q), response=tokenize(r),
                next_utterance=tokenize(nxt) if nxt else None,
                raw_query=q, raw_response=r)
            records.append(score_sample(self.corpus_, self.table_,
                                        self.provider_, sample))
        return records

    def transform(self, X=None) -> np.ndarray:
        """(n, 5) score matrix in attribute order; missing continuity is NaN."""
        records = self.score_records(X)
        out = np.empty((len(records), len(ATTRIBUTES)))
        for i, rec in enumerate(records):
            for j, name in enumerate(ATTRIBUTES):
                value = getattr(rec, name)
                out[i, j] = np.nan if value is None else value
        return out


class CurriculumTrainer(BaseEstimator):
    """Run one adaptive multi-curricula training session over scored samples.

    ``fit`` accepts the per-sample attribute scores. When no learner is
    passed it trains a seeded simulated learner, which is enough for
    scheduling experiments; external learners bring their own validator.
    """

    def __init__(self, steps: int = 2000, validate_every: int = 50,
                 duration: int = 1000, initial_fraction: float = 0.01,
                 batch_size: int = 32, mode: str = "adaptive", seed: int = 0,
                 policy_lr: float = 0.1, patience: int | None = 5,
                 use_baseline: bool = False):
        self.steps = steps
        self.validate_every = validate_every
        self.duration = duration
        self.initial_fraction = initial_fraction
        self.batch_size = batch_size
        self.mode = mode
        self.seed = seed
        self.policy_lr = policy_lr
        self.patience = patience
        self.use_baseline = use_baseline

    def _config(self) -> TrainConfig:
        return TrainConfig(
            steps=self.steps, validate_every=self.validate_every,
            duration=self.duration, initial_fraction=self.initial_fraction,
            batch_size=self.batch_size, mode=self.mode, seed=self.seed,
            policy_lr=self.policy_lr, patience=self.patience,
            use_baseline=self.use_baseline)

    def fit(self, scores: list[AttributeScores], learner=None, validator=None,
            samples=None):
        direction = "anti" if self.mode == "anti" else "easy_first"
        curricula = None
        if self.mode != "none":
            curricula = build_all_curricula(scores, direction)
        if learner is None:
            learner = SimulatedLearner(easiness_matrix(scores),
                                       noise_seed=self.seed)
            validator = lambda l: l.validate()
        elif validator is None:
            raise ValueError("an external learner needs an explicit validator")
        if self.mode == "none" and samples is None:
            samples = [s.sample_id for s in scores]
        self.report_ = train_loop(learner, curricula, self._config(), validator,
                                  samples)
        self.learner_ = learner
        return self
