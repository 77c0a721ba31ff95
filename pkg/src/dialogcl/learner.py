"""Learner integrations: the wire protocol client and a simulated learner.

External learners are child processes speaking newline-delimited JSON on
stdin/stdout. Each request carries ``seq`` and ``kind``; the reply must
echo the same ``seq``. One request is in flight at a time.
"""

import json
import queue
import subprocess
import threading
from dataclasses import dataclass

import numpy as np

from .attributes import AttributeScores
from .corpus import Corpus, DialogueSample
from .curriculum import ATTRIBUTES, EASY_ASCENDING
from .embeddings import EmbeddingTable
from .errors import (DegenerateDataError, LearnerExitError, LearnerTimeoutError,
                     MalformedReplyError)
from .metrics import METRIC_NAMES, MetricVector, evaluate_responses


@dataclass(frozen=True)
class TrainResult:
    loss: float
    margin: float


class ExternalLearner:
    """Synchronous client for a learner child process.

    The command is launched once; requests are written as single JSON
    lines and the next stdout line is taken as the reply. A reader
    thread feeds a queue so replies can time out without blocking.
    """

    def __init__(self, command: list[str], timeout: float = 30.0):
        self._timeout = timeout
        self._seq = -1
        self._proc = subprocess.Popen(
            command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, encoding="utf-8", bufsize=1)
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        try:
            for line in self._proc.stdout:
                self._lines.put(line)
        finally:
            self._lines.put(None)  # EOF marker

    def roundtrip(self, kind: str, payload: dict) -> dict:
        """Send one request and return the parsed reply.

        Raises LearnerExitError, LearnerTimeoutError, or
        MalformedReplyError; each carries the pending sequence number.
        """
        self._seq += 1
        seq = self._seq
        message = {"seq": seq, "kind": kind, **payload}
        try:
            self._proc.stdin.write(json.dumps(message) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise LearnerExitError(
                f"learner process closed its pipe before request seq={seq}: {exc}",
                seq=seq) from exc
        try:
            line = self._lines.get(timeout=self._timeout)
        except queue.Empty:
            raise LearnerTimeoutError(
                f"no reply within {self._timeout}s for seq={seq}", seq=seq)
        if line is None:
            code = self._proc.poll()
            raise LearnerExitError(
                f"learner process exited (code={code}) while seq={seq} was pending",
                seq=seq)
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedReplyError(
                f"unparsable reply for seq={seq}: {line!r}", seq=seq) from exc
        if not isinstance(reply, dict) or reply.get("seq") != seq:
            raise MalformedReplyError(
                f"reply does not echo seq={seq}: {reply!r}", seq=seq)
        if "error" in reply:
            raise MalformedReplyError(
                f"learner reported an error for seq={seq}: {reply['error']}", seq=seq)
        return reply

    def init(self, config: dict) -> None:
        self.roundtrip("init", {"config": config})

    def train_batch(self, batch: list[DialogueSample]) -> TrainResult:
        payload = {"samples": [
            {"id": s.id, "query": s.query, "response": s.response} for s in batch]}
        reply = self.roundtrip("train_batch", payload)
        try:
            return TrainResult(loss=float(reply["loss"]), margin=float(reply["margin"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedReplyError(
                f"train_batch reply missing loss/margin: {reply!r}",
                seq=self._seq) from exc

    def generate(self, queries: list[list[str]]) -> list[list[str]]:
        reply = self.roundtrip("generate", {"queries": queries})
        responses = reply.get("responses")
        ok = isinstance(responses, list) and all(
            isinstance(r, list) and all(isinstance(t, str) for t in r)
            for r in responses)
        if not ok or len(responses) != len(queries):
            raise MalformedReplyError(
                f"generate reply malformed: {reply!r}", seq=self._seq)
        return responses

    def shutdown(self) -> int:
        try:
            self.roundtrip("shutdown", {})
        except (LearnerExitError, LearnerTimeoutError):
            pass  # a learner that exits instead of replying still counts as down
        self._proc.stdin.close()
        return self._proc.wait(timeout=self._timeout)

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def easiness_matrix(scores: list[AttributeScores]) -> np.ndarray:
    """Per-sample, per-attribute easiness in [0,1].

    Scores are min-max rescaled over the corpus and flipped where lower
    raw scores mean easier. Missing continuity and constant columns
    fall back to a neutral 0.5.
    """
    n = len(scores)
    out = np.full((n, len(ATTRIBUTES)), 0.5)
    for j, attribute in enumerate(ATTRIBUTES):
        values = [getattr(s, attribute) for s in scores]
        present = [v for v in values if v is not None]
        if len(set(present)) < 2:
            continue
        lo, hi = min(present), max(present)
        for i, v in enumerate(values):
            if v is None:
                continue
            scaled = (v - lo) / (hi - lo)
            out[i, j] = 1.0 - scaled if EASY_ASCENDING[attribute] else scaled
    return out


# fixed affine maps from skill to each synthetic metric: (floor, ceiling,
# skill weights). Ranges loosely mimic plausible magnitudes per metric.
# Weight columns are deliberately uneven (confidence and specificity carry
# most of the mass) so that where training effort goes actually matters.
_SIM_METRIC_ROWS: dict[str, tuple[float, float, tuple[float, ...]]] = {
    "bleu":              (0.00, 0.40, (0.30, 0.05, 0.10, 0.05, 0.50)),
    "distinct_1":        (0.02, 0.60, (0.35, 0.10, 0.05, 0.10, 0.40)),
    "distinct_2":        (0.05, 0.80, (0.30, 0.12, 0.08, 0.05, 0.45)),
    "distinct_3":        (0.08, 0.90, (0.25, 0.15, 0.10, 0.05, 0.45)),
    "intra_distinct_1":  (0.50, 0.98, (0.20, 0.20, 0.05, 0.05, 0.50)),
    "intra_distinct_2":  (0.60, 0.99, (0.25, 0.10, 0.10, 0.10, 0.45)),
    "intra_distinct_3":  (0.70, 1.00, (0.30, 0.05, 0.05, 0.10, 0.50)),
    "embedding_average": (0.30, 0.90, (0.35, 0.05, 0.10, 0.10, 0.40)),
    "embedding_extrema": (0.20, 0.80, (0.30, 0.05, 0.12, 0.08, 0.45)),
    "embedding_greedy":  (0.25, 0.85, (0.28, 0.07, 0.10, 0.05, 0.50)),
    "coherence":         (0.10, 0.90, (0.35, 0.05, 0.15, 0.05, 0.40)),
    "entropy_1":         (1.00, 6.00, (0.30, 0.08, 0.04, 0.13, 0.45)),
    "entropy_2":         (2.00, 9.00, (0.37, 0.05, 0.04, 0.09, 0.45)),
}


class SimulatedLearner:
    """Deterministic learner stand-in with an explicit 5-dim skill vector.

    Training on a batch raises each skill toward 1 in proportion to the
    batch's mean easiness along the matching attribute, with shrinking
    gains as the skill saturates. Validation synthesizes the 13 metrics
    as fixed affine functions of skill plus seeded noise.
    """

    def __init__(self, easiness: np.ndarray,
                 learning_rates: tuple[float, ...] = (0.0018, 0.0007, 0.0006,
                                                      0.0008, 0.0022),
                 noise_seed: int = 0, noise_scale: float = 0.01,
                 metric_noise_scale: float = 0.001):
        easiness = np.asarray(easiness, dtype=np.float64)
        if easiness.ndim != 2 or easiness.shape[1] != len(ATTRIBUTES):
            raise ValueError(f"easiness must be (n, {len(ATTRIBUTES)})")
        if len(learning_rates) != len(ATTRIBUTES):
            raise ValueError("one learning rate per attribute")
        self._easiness = easiness
        self.learning_rates = np.asarray(learning_rates, dtype=np.float64)
        self.skill = np.zeros(len(ATTRIBUTES))
        self.noise_scale = noise_scale
        self.metric_noise_scale = metric_noise_scale
        self._rng = np.random.default_rng(noise_seed)
        floors, ceilings, weights = [], [], []
        for name in METRIC_NAMES:
            lo, hi, w = _SIM_METRIC_ROWS[name]
            floors.append(lo)
            ceilings.append(hi)
            weights.append(w)
        self._floors = np.array(floors)
        self._ceilings = np.array(ceilings)
        self._weights = np.array(weights)  # (13, 5) rows sum to 1

    def _batch_ids(self, batch: list) -> list[int]:
        return [s.id if isinstance(s, DialogueSample) else int(s) for s in batch]

    def train_batch(self, batch: list) -> TrainResult:
        ids = self._batch_ids(batch)
        ease = self._easiness[ids].mean(axis=0)
        self.skill = self.skill + self.learning_rates * ease * (1.0 - self.skill)
        np.clip(self.skill, 0.0, 1.0, out=self.skill)
        noise = self._rng.normal(0.0, self.noise_scale) if self.noise_scale else 0.0
        loss = max(0.0, 1.0 - float(self.skill.mean()) + noise)
        return TrainResult(loss=loss, margin=float(self.skill.mean()))

    def expected_metrics(self, skill: np.ndarray | None = None) -> np.ndarray:
        """Noise-free metric values for a skill vector (defaults to current)."""
        s = self.skill if skill is None else np.asarray(skill, dtype=np.float64)
        level = self._weights @ s
        return self._floors + (self._ceilings - self._floors) * level

    def validate(self) -> MetricVector:
        values = self.expected_metrics()
        if self.metric_noise_scale:
            spans = self._ceilings - self._floors
            values = values + self._rng.normal(
                0.0, self.metric_noise_scale, size=len(values)) * spans
        return MetricVector.from_array(values)


class CorpusValidator:
    """Validation for real learners: generate on held-out queries, score."""

    def __init__(self, table: EmbeddingTable, corpus: Corpus,
                 samples: list[DialogueSample]):
        if not samples:
            raise DegenerateDataError("validation set is empty")
        self.table = table
        self.corpus = corpus
        self.queries = [s.query for s in samples]
        self.references = [s.response for s in samples]

    def __call__(self, learner) -> MetricVector:
        hypotheses = learner.generate(self.queries)
        return evaluate_responses(self.table, self.corpus, self.queries,
                                  hypotheses, self.references)
