"""Dialogue corpus loading, tokenization, and word statistics.

A corpus is a flat list of (query, response, optional next utterance)
samples plus the aggregate statistics the complexity attributes need:
response document frequencies, IDF bounds, and a unigram distribution.
"""

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import DegenerateDataError, InputFormatError

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)

UNIGRAM_SOURCES = ("both", "responses")


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split it into word and punctuation tokens.

    Runs of word characters become one token each; every other
    non-space character becomes its own token.

    >>> tokenize("Hello, world!")
    ['hello', ',', 'world', '!']
    """
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class DialogueSample:
    """One exchange: the query, its response, and the follow-up if known."""

    id: int
    query: list[str]
    response: list[str]
    next_utterance: list[str] | None
    raw_query: str
    raw_response: str


@dataclass
class Corpus:
    """Samples plus the corpus-level statistics derived from them.

    Attributes:
        samples: dense-id list, ``samples[i].id == i``.
        vocab: token to integer id, assigned in first-seen order.
        response_doc_freq: for each token seen in at least one response,
            the number of responses containing it.
        n_responses: total number of responses.
        unigram_prob: maximum-likelihood token distribution over the
            configured source text; sums to 1.
        unigram_source: "both" (queries and responses) or "responses".
        n_dropped: rows rejected at load time for an empty response.
        idf_min, idf_max: bounds of log(n_responses / doc_freq) over the
            response vocabulary, cached for NIDF normalization.
    """

    samples: list[DialogueSample]
    vocab: dict[str, int]
    response_doc_freq: dict[str, int]
    n_responses: int
    unigram_prob: dict[str, float]
    unigram_source: str = "both"
    n_dropped: int = 0
    idf_min: float = 0.0
    idf_max: float = 0.0

    def unigram_probability(self, token: str) -> float:
        """MLE probability of ``token``, 0.0 for tokens never counted."""
        return self.unigram_prob.get(token, 0.0)

    def __len__(self) -> int:
        return len(self.samples)


def _build(rows: list[tuple[str, str, str | None]], unigram_source: str,
           n_dropped_pre: int = 0) -> Corpus:
    # rows hold raw text; empty responses are dropped here so ids stay dense
    if unigram_source not in UNIGRAM_SOURCES:
        raise ValueError(f"unigram_source must be one of {UNIGRAM_SOURCES}")

    samples: list[DialogueSample] = []
    n_dropped = n_dropped_pre
    for raw_query, raw_response, raw_next in rows:
        response = tokenize(raw_response)
        if not response:
            n_dropped += 1
            continue
        nxt = tokenize(raw_next) if raw_next is not None else None
        if nxt == []:
            nxt = None
        samples.append(DialogueSample(
            id=len(samples),
            query=tokenize(raw_query),
            response=response,
            next_utterance=nxt,
            raw_query=raw_query,
            raw_response=raw_response,
        ))
    if not samples:
        raise DegenerateDataError("no usable samples: every row was empty or dropped")

    vocab: dict[str, int] = {}
    doc_freq: Counter[str] = Counter()
    unigram_counts: Counter[str] = Counter()
    for s in samples:
        for tok in s.query:
            if tok not in vocab:
                vocab[tok] = len(vocab)
        for tok in s.response:
            if tok not in vocab:
                vocab[tok] = len(vocab)
        doc_freq.update(set(s.response))
        unigram_counts.update(s.response)
        if unigram_source == "both":
            unigram_counts.update(s.query)

    total = sum(unigram_counts.values())
    unigram_prob = {tok: c / total for tok, c in unigram_counts.items()}

    n_responses = len(samples)
    idfs = [math.log(n_responses / nw) for nw in doc_freq.values()]
    return Corpus(
        samples=samples,
        vocab=vocab,
        response_doc_freq=dict(doc_freq),
        n_responses=n_responses,
        unigram_prob=unigram_prob,
        unigram_source=unigram_source,
        n_dropped=n_dropped,
        idf_min=min(idfs),
        idf_max=max(idfs),
    )


def corpus_from_rows(rows: Iterable[tuple[str, str, str | None]],
                     unigram_source: str = "both") -> Corpus:
    """Build a corpus from in-memory (query, response, next or None) triples."""
    return _build(list(rows), unigram_source)


def _parse_tsv(path: Path) -> list[tuple[str, str, str | None]]:
    rows = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) < 2:
                raise InputFormatError(
                    f"{path}:{lineno}: expected at least 2 tab-separated columns, got {len(cols)}")
            nxt = cols[2] if len(cols) > 2 and cols[2] != "" else None
            rows.append((cols[0], cols[1], nxt))
    return rows


def _parse_jsonl(path: Path) -> list[tuple[str, str, str | None]]:
    # next_utterance falls back to the next record's response when both
    # records carry the same conv_id and are adjacent in the file
    records = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InputFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise InputFormatError(f"{path}:{lineno}: record is not an object")
            for key in ("query", "response"):
                if key not in obj or not isinstance(obj[key], str):
                    raise InputFormatError(
                        f"{path}:{lineno}: missing or non-string field {key!r}")
            nxt = obj.get("next_utterance")
            if nxt is not None and not isinstance(nxt, str):
                raise InputFormatError(
                    f"{path}:{lineno}: next_utterance must be a string when present")
            records.append((obj["query"], obj["response"], nxt, obj.get("conv_id")))

    rows: list[tuple[str, str, str | None]] = []
    for i, (q, r, nxt, conv) in enumerate(records):
        if nxt is None and conv is not None and i + 1 < len(records):
            if records[i + 1][3] == conv:
                nxt = records[i + 1][1]
        rows.append((q, r, nxt))
    return rows


def load_corpus(path: str | Path, format: str | None = None,
                unigram_source: str = "both") -> Corpus:
    """Load a corpus file.

    Args:
        path: TSV (query, response, optional next) or JSONL file.
        format: "tsv" or "jsonl"; inferred from the suffix when omitted.
        unigram_source: which text feeds the unigram distribution.

    Raises:
        InputFormatError: unreadable file or malformed record.
        DegenerateDataError: no usable samples after dropping empty responses.
    """
    path = Path(path)
    if format is None:
        suffix = path.suffix.lower()
        format = {"": "tsv", ".tsv": "tsv", ".txt": "tsv", ".jsonl": "jsonl"}.get(suffix)
        if format is None:
            raise InputFormatError(f"cannot infer format from suffix {suffix!r}; pass format=")
    if format not in ("tsv", "jsonl"):
        raise ValueError(f"unknown corpus format {format!r}")
    try:
        rows = _parse_tsv(path) if format == "tsv" else _parse_jsonl(path)
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from exc
    return _build(rows, unigram_source)
