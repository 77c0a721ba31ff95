"""Corpus complexity scoring and adaptive multi-curricula training for dialogue data."""

__version__ = "0.1.0"

from .analysis import (DistributionSummary, TauEntry, correlation_table,
                       kendall_tau, summarize)
from .attributes import (AttributeScores, BigramConfidenceProvider,
                         FileConfidenceProvider, load_confidence_file,
                         score_corpus, score_sample)
from .corpus import Corpus, DialogueSample, corpus_from_rows, load_corpus, tokenize
from .curriculum import (ATTRIBUTES, Curriculum, PacingConfig, build_all_curricula,
                         build_curriculum, prefix_length, progressing_function,
                         sample_batch)
from .embeddings import (EmbeddingTable, cosine, hashed_table, load_embeddings,
                         sif_sentence_embedding)
from .errors import (DegenerateDataError, DialogclError, InputFormatError,
                     LearnerExitError, LearnerTimeoutError, MalformedReplyError,
                     ProtocolError)
from .estimators import AttributeScorer, CurriculumTrainer
from .learner import (CorpusValidator, ExternalLearner, SimulatedLearner,
                      TrainResult, easiness_matrix)
from .metrics import (METRIC_NAMES, MetricVector, NormalizationState, bleu,
                      deviation, distinct_n, entropy_n, evaluate_responses,
                      intra_distinct_n)
from .scheduler import (FEATURE_DIM, N_ACTIONS, PolicyParams, SchedulerState,
                        TrainConfig, Trajectory, TrajectoryStep, featurize,
                        policy_forward, reinforce_update, reward, sample_action,
                        train_loop)

__all__ = [
    "__version__",
    "ATTRIBUTES",
    "AttributeScorer",
    "AttributeScores",
    "BigramConfidenceProvider",
    "Corpus",
    "CorpusValidator",
    "Curriculum",
    "CurriculumTrainer",
    "DegenerateDataError",
    "DialogclError",
    "DialogueSample",
    "DistributionSummary",
    "EmbeddingTable",
    "ExternalLearner",
    "FEATURE_DIM",
    "FileConfidenceProvider",
    "InputFormatError",
    "LearnerExitError",
    "LearnerTimeoutError",
    "METRIC_NAMES",
    "MalformedReplyError",
    "MetricVector",
    "N_ACTIONS",
    "NormalizationState",
    "PacingConfig",
    "PolicyParams",
    "ProtocolError",
    "SchedulerState",
    "SimulatedLearner",
    "TauEntry",
    "TrainConfig",
    "TrainResult",
    "Trajectory",
    "TrajectoryStep",
    "bleu",
    "build_all_curricula",
    "build_curriculum",
    "correlation_table",
    "corpus_from_rows",
    "cosine",
    "deviation",
    "distinct_n",
    "easiness_matrix",
    "entropy_n",
    "evaluate_responses",
    "featurize",
    "hashed_table",
    "intra_distinct_n",
    "kendall_tau",
    "load_confidence_file",
    "load_corpus",
    "load_embeddings",
    "policy_forward",
    "prefix_length",
    "progressing_function",
    "reinforce_update",
    "reward",
    "sample_action",
    "sample_batch",
    "score_corpus",
    "score_sample",
    "sif_sentence_embedding",
    "summarize",
    "tokenize",
    "train_loop",
]
