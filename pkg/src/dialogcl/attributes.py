"""The five per-sample dialogue complexity attributes.

specificity        mean normalized inverse document frequency of response tokens
repetitiveness     share of response tokens already seen earlier in the response
query_relatedness  cosine between query and response sentence embeddings
continuity         cosine between response and next-utterance embeddings
model_confidence   negative per-token loss under a reference model
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .corpus import Corpus, DialogueSample
from .embeddings import EmbeddingTable, cosine, sif_sentence_embedding
from .errors import InputFormatError


@dataclass(frozen=True)
class AttributeScores:
    """Scores for one sample; continuity is None when there is no follow-up."""

    sample_id: int
    specificity: float
    repetitiveness: float
    query_relatedness: float
    continuity: float | None
    model_confidence: float


def nidf(corpus: Corpus, token: str) -> float:
    """Inverse document frequency of ``token`` over responses, rescaled to [0, 1].

    Raises KeyError for tokens that never occur in a response. Returns
    0.0 when every response-vocabulary token has the same document
    frequency (degenerate normalization span).
    """
    doc_freq = corpus.response_doc_freq.get(token)
    if doc_freq is None:
        raise KeyError(f"token never seen in a response: {token!r}")
    span = corpus.idf_max - corpus.idf_min
    if span == 0.0:
        return 0.0
    idf = math.log(corpus.n_responses / doc_freq)
    return (idf - corpus.idf_min) / span


def specificity(corpus: Corpus, response: list[str]) -> float:
    """Mean NIDF over the response's tokens; unseen tokens count as 1.0."""
    if not response:
        raise ValueError("specificity of an empty response is undefined")
    total = 0.0
    for token in response:
        try:
            total += nidf(corpus, token)
        except KeyError:
            total += 1.0
    return total / len(response)


def repetitiveness(response: list[str]) -> float:
    """Fraction of tokens that already occurred earlier in the same response."""
    if not response:
        raise ValueError("repetitiveness of an empty response is undefined")
    seen: set[str] = set()
    repeats = 0
    for token in response:
        if token in seen:
            repeats += 1
        seen.add(token)
    return repeats / len(response)


def query_relatedness(table: EmbeddingTable, corpus: Corpus,
                      query: list[str], response: list[str]) -> float:
    """Cosine between the sentence embeddings of query and response."""
    return cosine(sif_sentence_embedding(table, corpus, query),
                  sif_sentence_embedding(table, corpus, response))


def continuity(table: EmbeddingTable, corpus: Corpus,
               response: list[str], next_utterance: list[str]) -> float:
    """Cosine between the embeddings of a response and the follow-up turn."""
    return cosine(sif_sentence_embedding(table, corpus, response),
                  sif_sentence_embedding(table, corpus, next_utterance))


class ConfidenceProvider(Protocol):
    def confidence(self, sample: DialogueSample) -> float: ...


class BigramConfidenceProvider:
    """Built-in reference model: add-one-smoothed bigram LM over responses.

    Confidence is the negative mean per-token negative log-likelihood,
    so responses the corpus itself makes predictable score highest.
    """

    BOS = "<s>"

    def __init__(self, corpus: Corpus):
        self._bigram: dict[tuple[str, str], int] = {}
        self._context: dict[str, int] = {}
        vocab: set[str] = set()
        for sample in corpus.samples:
            prev = self.BOS
            for token in sample.response:
                key = (prev, token)
                self._bigram[key] = self._bigram.get(key, 0) + 1
                self._context[prev] = self._context.get(prev, 0) + 1
                vocab.add(token)
                prev = token
        # +1 reserves an unknown-word slot in the smoothing denominator
        self._v = len(vocab) + 1

    def mean_nll(self, tokens: list[str]) -> float:
        if not tokens:
            raise ValueError("cannot score an empty token list")
        prev = self.BOS
        total = 0.0
        for token in tokens:
            num = self._bigram.get((prev, token), 0) + 1
            den = self._context.get(prev, 0) + self._v
            total -= math.log(num / den)
            prev = token
        return total / len(tokens)

    def confidence(self, sample: DialogueSample) -> float:
        return -self.mean_nll(sample.response)


class FileConfidenceProvider:
    """Confidence from an external per-sample loss file (``id,loss`` lines)."""

    def __init__(self, losses: dict[int, float]):
        self._losses = losses

    def confidence(self, sample: DialogueSample) -> float:
        if sample.id not in self._losses:
            raise KeyError(f"sample id {sample.id} missing from external loss file")
        return -self._losses[sample.id]


def load_confidence_file(path: str | Path) -> FileConfidenceProvider:
    """Parse ``id,loss`` records, one per line; whitespace also separates."""
    path = Path(path)
    losses: dict[int, float] = {}
    try:
        fh = path.open(encoding="utf-8")
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise InputFormatError(f"{path}:{lineno}: expected 'id,loss'")
            try:
                losses[int(parts[0])] = float(parts[1])
            except ValueError as exc:
                raise InputFormatError(f"{path}:{lineno}: {exc}") from exc
    if not losses:
        raise InputFormatError(f"{path}: empty loss file")
    return FileConfidenceProvider(losses)


def score_sample(corpus: Corpus, table: EmbeddingTable,
                 provider: ConfidenceProvider, sample: DialogueSample) -> AttributeScores:
    if sample.query:
        relatedness = query_relatedness(table, corpus, sample.query, sample.response)
    else:
        relatedness = 0.0
    cont = None
    if sample.next_utterance:
        cont = continuity(table, corpus, sample.response, sample.next_utterance)
    return AttributeScores(
        sample_id=sample.id,
        specificity=specificity(corpus, sample.response),
        repetitiveness=repetitiveness(sample.response),
        query_relatedness=relatedness,
        continuity=cont,
        model_confidence=provider.confidence(sample),
    )


def score_corpus(corpus: Corpus, table: EmbeddingTable,
                 provider: ConfidenceProvider, threads: int = 1) -> list[AttributeScores]:
    """Score every sample; output order follows sample ids regardless of threads."""
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if threads == 1:
        return [score_sample(corpus, table, provider, s) for s in corpus.samples]
    # hashed tables mutate their cache; prefill so worker threads only read
    if table.source == "hashed":
        for sample in corpus.samples:
            for tok in sample.query + sample.response + (sample.next_utterance or []):
                table.lookup(tok)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda s: score_sample(corpus, table, provider, s),
                             corpus.samples))
