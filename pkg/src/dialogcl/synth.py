"""Synthetic corpora with independently controlled attribute knobs.

Used by diagnostics and the test suite. Each sample draws five
independent uniforms that steer, respectively: the rarity band its
content words come from (specificity), how many stopword tokens are
duplicates (repetitiveness), how many query words the response copies
(query-relatedness), how many response words the follow-up copies
(continuity), and an external per-sample loss (model confidence).

Two details keep the knobs from leaking into each other. Content words
of one sample's query, response, and follow-up all come from the same
rarity band, so frequency-dependent embedding weights cancel inside
the cosine attributes. And every response carries the same number of
stopword tokens; repetitiveness only changes how many of them repeat
one type instead of being distinct. Stopwords are frequent, so their
embedding weight is negligible and duplication moves neither cosine,
and the duplicated type rotates uniformly, so stopword document
frequencies stay symmetric and specificity sees a constant offset.
"""

import math
from dataclasses import dataclass

import numpy as np

from .attributes import AttributeScores

POOL_SIZE = 2500
_WARP_GAMMA = 2.5
_BAND_HALFWIDTH = 0.08
_STOP_TYPES = ("the", "a", "and", "of", "to", "in", "it", "is")
_RESPONSE_STOP_SLOTS = 7
_QUERY_STOP_SLOTS = 4


def _band_word(rng: np.random.Generator, z: float, halfwidth: float) -> str:
    v = min(1.0, max(0.0, z + rng.uniform(-halfwidth, halfwidth)))
    # exponential warp: low bands reuse few common words, high bands
    # spread over many rare ones, giving a zipf-like frequency profile
    k = int(POOL_SIZE * math.expm1(_WARP_GAMMA * v) / math.expm1(_WARP_GAMMA))
    return f"w{min(k, POOL_SIZE - 1):04d}"


def _draw_band(rng: np.random.Generator, count: int, z: float,
               exclude: set[str]) -> list[str]:
    out: list[str] = []
    seen = set(exclude)
    halfwidth = _BAND_HALFWIDTH
    attempts = 0
    while len(out) < count:
        word = _band_word(rng, z, halfwidth)
        attempts += 1
        if attempts % 50 == 0:
            halfwidth *= 1.5  # narrow bands near z=0 can run out of words
        if word in seen:
            continue
        seen.add(word)
        out.append(word)
    return out


def _stop_slots(rng: np.random.Generator, slots: int, n_rep: int) -> list[str]:
    """``slots`` stopword tokens of which exactly ``n_rep`` repeat a prior one."""
    distinct = slots - n_rep
    types = rng.choice(len(_STOP_TYPES), size=distinct, replace=False)
    duplicated = _STOP_TYPES[types[int(rng.integers(0, distinct))]]
    return [_STOP_TYPES[t] for t in types] + [duplicated] * n_rep


@dataclass(frozen=True)
class SyntheticSample:
    query: str
    response: str
    next_utterance: str


def synthetic_corpus(n: int, seed: int) -> tuple[list[SyntheticSample], dict[int, float]]:
    """Generate ``n`` samples plus an external loss table keyed by id."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    samples: list[SyntheticSample] = []
    losses: dict[int, float] = {}
    for i in range(n):
        z_spec = rng.random()
        z_rept = rng.random()
        z_rel = rng.random()
        z_cont = rng.random()
        z_conf = rng.random()

        query_len = int(rng.integers(7, 11))
        length = int(rng.integers(15, 19))
        n_base = length - _RESPONSE_STOP_SLOTS
        n_shared = min(int(z_rel * 4.0 + 0.5), query_len)
        n_rep = min(int(z_rept * 0.35 * length + 0.5), _RESPONSE_STOP_SLOTS - 1)
        n_cont = int(z_cont * 4.0 + 0.5)

        query_band = _draw_band(rng, query_len, z_spec, exclude=set())
        query_stops = [_STOP_TYPES[t] for t in
                       rng.choice(len(_STOP_TYPES), size=_QUERY_STOP_SLOTS,
                                  replace=False)]
        query = [str(w) for w in
                 rng.permutation(query_band + query_stops)]

        shared = [query_band[j] for j in
                  rng.choice(query_len, size=n_shared, replace=False)]
        fillers = _draw_band(rng, n_base - n_shared, z_spec,
                             exclude=set(query_band))
        stops = _stop_slots(rng, _RESPONSE_STOP_SLOTS, n_rep)
        response = [str(w) for w in rng.permutation(shared + fillers + stops)]

        cont_words = [fillers[j] for j in
                      rng.choice(len(fillers), size=min(n_cont, len(fillers)),
                                 replace=False)]
        next_len = int(rng.integers(12, 16))
        next_fill = _draw_band(rng, max(0, next_len - len(cont_words)), z_spec,
                               exclude=set(query_band) | set(fillers) | set(shared))
        next_utterance = [str(w) for w in rng.permutation(cont_words + next_fill)]

        samples.append(SyntheticSample(
            query=" ".join(query),
            response=" ".join(response),
            next_utterance=" ".join(next_utterance),
        ))
        losses[i] = 0.5 + 4.5 * (1.0 - z_conf)
    return samples, losses


def write_corpus_tsv(samples: list[SyntheticSample], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(f"{s.query}\t{s.response}\t{s.next_utterance}\n")


def write_loss_file(losses: dict[int, float], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sample_id in sorted(losses):
            fh.write(f"{sample_id},{losses[sample_id]}\n")


def synthetic_scores(n: int, seed: int) -> list[AttributeScores]:
    """Independent uniform attribute scores, every sample with continuity."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        out.append(AttributeScores(
            sample_id=i,
            specificity=float(rng.uniform(0.0, 1.0)),
            repetitiveness=float(rng.uniform(0.0, 0.5)),
            query_relatedness=float(rng.uniform(-0.2, 0.9)),
            continuity=float(rng.uniform(-0.2, 0.9)),
            model_confidence=float(rng.uniform(-6.0, -0.5)),
        ))
    return out
