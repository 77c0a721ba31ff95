"""Response quality metrics and the validation deviation signal.

Thirteen corpus-level metrics: BLEU, three distinct-n ratios, three
intra-response distinct-n ratios, three embedding similarities, query
coherence, and two n-gram entropies. The training loop tracks running
per-metric bounds so successive validations can be compared on a common
[0, 1] scale.
"""

import math
from collections import Counter
from dataclasses import dataclass, fields

import numpy as np

from .corpus import Corpus
from .embeddings import EmbeddingTable, cosine, sif_sentence_embedding
from .errors import DegenerateDataError

BLEU_EPSILON = 1e-9
BLEU_MAX_ORDER = 4

METRIC_NAMES = (
    "bleu",
    "distinct_1", "distinct_2", "distinct_3",
    "intra_distinct_1", "intra_distinct_2", "intra_distinct_3",
    "embedding_average", "embedding_extrema", "embedding_greedy",
    "coherence",
    "entropy_1", "entropy_2",
)


@dataclass(frozen=True)
class MetricVector:
    bleu: float
    distinct_1: float
    distinct_2: float
    distinct_3: float
    intra_distinct_1: float
    intra_distinct_2: float
    intra_distinct_3: float
    embedding_average: float
    embedding_extrema: float
    embedding_greedy: float
    coherence: float
    entropy_1: float
    entropy_2: float

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in METRIC_NAMES], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "MetricVector":
        values = list(values)
        if len(values) != len(METRIC_NAMES):
            raise ValueError(f"expected {len(METRIC_NAMES)} values, got {len(values)}")
        return cls(**{n: float(v) for n, v in zip(METRIC_NAMES, values)})


def _ngrams(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def bleu(hypotheses: list[list[str]], references: list[list[str]]) -> float:
    """Corpus-level BLEU-4 with brevity penalty.

    Precision is pooled over the corpus per n-gram order. Orders with no
    hypothesis n-grams at all are left out of the geometric mean; an
    order with zero matches contributes 1e-9 instead of zero.
    """
    if len(hypotheses) != len(references):
        raise ValueError("hypothesis/reference count mismatch")
    if not hypotheses:
        raise ValueError("empty evaluation set")
    hyp_len = sum(len(h) for h in hypotheses)
    ref_len = sum(len(r) for r in references)
    if hyp_len == 0:
        return 0.0

    log_sum = 0.0
    orders = 0
    for n in range(1, BLEU_MAX_ORDER + 1):
        matches = 0
        total = 0
        for hyp, ref in zip(hypotheses, references):
            hyp_counts = Counter(_ngrams(hyp, n))
            ref_counts = Counter(_ngrams(ref, n))
            total += sum(hyp_counts.values())
            matches += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
        if total == 0:
            continue
        precision = matches / total if matches > 0 else BLEU_EPSILON
        log_sum += math.log(precision)
        orders += 1
    if orders == 0:
        return 0.0
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return brevity * math.exp(log_sum / orders)


def distinct_n(responses: list[list[str]], n: int) -> float:
    """Unique n-grams across all responses over total n-grams."""
    total = 0
    unique: set[tuple[str, ...]] = set()
    for resp in responses:
        grams = _ngrams(resp, n)
        total += len(grams)
        unique.update(grams)
    if total == 0:
        raise DegenerateDataError(f"no response has {n} tokens; distinct_{n} undefined")
    return len(unique) / total


def intra_distinct_n(responses: list[list[str]], n: int) -> float:
    """Mean within-response unique/total n-gram ratio.

    Responses shorter than ``n`` tokens are skipped; raises when all are.
    """
    ratios = []
    for resp in responses:
        grams = _ngrams(resp, n)
        if not grams:
            continue
        ratios.append(len(set(grams)) / len(grams))
    if not ratios:
        raise DegenerateDataError(f"every response is shorter than {n} tokens")
    return sum(ratios) / len(ratios)


def _vectors(table: EmbeddingTable, tokens: list[str]) -> np.ndarray:
    # one row per token; tokens without a vector become zero rows
    out = np.zeros((len(tokens), table.dim), dtype=np.float64)
    for i, tok in enumerate(tokens):
        vec = table.lookup(tok)
        if vec is not None:
            out[i] = vec
    return out


def _extrema_vector(mat: np.ndarray) -> np.ndarray:
    # per dimension, the value of largest magnitude; earliest row wins ties
    idx = np.argmax(np.abs(mat), axis=0)
    return mat[idx, np.arange(mat.shape[1])]


def embedding_metric(kind: str, table: EmbeddingTable,
                     hypothesis: list[str], reference: list[str]) -> float:
    """Sentence similarity by word vectors: average, extrema, or greedy."""
    if not hypothesis or not reference:
        raise DegenerateDataError("embedding metrics need non-empty token lists")
    hyp = _vectors(table, hypothesis)
    ref = _vectors(table, reference)
    if kind == "average":
        return cosine(hyp.sum(axis=0), ref.sum(axis=0))
    if kind == "extrema":
        return cosine(_extrema_vector(hyp), _extrema_vector(ref))
    if kind == "greedy":
        # tokens without vectors are dropped; empty side scores 0
        hyp = hyp[np.linalg.norm(hyp, axis=1) > 0.0]
        ref = ref[np.linalg.norm(ref, axis=1) > 0.0]
        if hyp.shape[0] == 0 or ref.shape[0] == 0:
            return 0.0
        hyp_unit = hyp / np.linalg.norm(hyp, axis=1, keepdims=True)
        ref_unit = ref / np.linalg.norm(ref, axis=1, keepdims=True)
        sims = hyp_unit @ ref_unit.T
        forward = float(sims.max(axis=1).mean())
        backward = float(sims.max(axis=0).mean())
        return 0.5 * (forward + backward)
    raise ValueError(f"unknown embedding metric kind {kind!r}")


def coherence(table: EmbeddingTable, corpus: Corpus,
              query: list[str], hypothesis: list[str]) -> float:
    """Cosine between query and hypothesis sentence embeddings."""
    return cosine(sif_sentence_embedding(table, corpus, query),
                  sif_sentence_embedding(table, corpus, hypothesis))


def entropy_n(responses: list[list[str]], n: int) -> float:
    """Shannon entropy, in nats, of the pooled empirical n-gram distribution."""
    counts: Counter[tuple[str, ...]] = Counter()
    for resp in responses:
        counts.update(_ngrams(resp, n))
    total = sum(counts.values())
    if total == 0:
        raise DegenerateDataError(f"no response has {n} tokens; entropy_{n} undefined")
    return -sum((c / total) * math.log(c / total) for c in counts.values())


def evaluate_responses(table: EmbeddingTable, corpus: Corpus,
                       queries: list[list[str]], hypotheses: list[list[str]],
                       references: list[list[str]]) -> MetricVector:
    """All thirteen metrics for one batch of generated responses."""
    if not (len(queries) == len(hypotheses) == len(references)):
        raise ValueError("queries, hypotheses, and references must align")
    pair_means = {}
    for kind in ("average", "extrema", "greedy"):
        vals = [embedding_metric(kind, table, h, r)
                for h, r in zip(hypotheses, references)]
        pair_means[kind] = sum(vals) / len(vals)
    coh = [coherence(table, corpus, q, h) for q, h in zip(queries, hypotheses)]
    return MetricVector(
        bleu=bleu(hypotheses, references),
        distinct_1=distinct_n(hypotheses, 1),
        distinct_2=distinct_n(hypotheses, 2),
        distinct_3=distinct_n(hypotheses, 3),
        intra_distinct_1=intra_distinct_n(hypotheses, 1),
        intra_distinct_2=intra_distinct_n(hypotheses, 2),
        intra_distinct_3=intra_distinct_n(hypotheses, 3),
        embedding_average=pair_means["average"],
        embedding_extrema=pair_means["extrema"],
        embedding_greedy=pair_means["greedy"],
        coherence=sum(coh) / len(coh),
        entropy_1=entropy_n(hypotheses, 1),
        entropy_2=entropy_n(hypotheses, 2),
    )


class NormalizationState:
    """Running per-metric min and max over every vector seen so far."""

    def __init__(self):
        self._min: np.ndarray | None = None
        self._max: np.ndarray | None = None

    def update(self, vector: MetricVector) -> None:
        arr = vector.as_array()
        if self._min is None:
            self._min = arr.copy()
            self._max = arr.copy()
        else:
            self._min = np.minimum(self._min, arr)
            self._max = np.maximum(self._max, arr)

    def normalize(self, vector: MetricVector) -> np.ndarray:
        """Each metric rescaled by the running bounds; 0.5 where min == max."""
        if self._min is None:
            raise DegenerateDataError("normalize called before any update")
        arr = vector.as_array()
        span = self._max - self._min
        out = np.full(len(METRIC_NAMES), 0.5)
        nonzero = span > 0.0
        out[nonzero] = (arr[nonzero] - self._min[nonzero]) / span[nonzero]
        return out


def deviation(current: MetricVector, previous: MetricVector,
              norm: NormalizationState) -> float:
    """Sum over metrics of (normalized current - normalized previous).

    Both vectors must already be folded into ``norm``.
    """
    return float(np.sum(norm.normalize(current) - norm.normalize(previous)))
