"""Word vectors and frequency-weighted sentence embeddings."""

import hashlib
import math
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .errors import DegenerateDataError, InputFormatError

SIF_WEIGHT = 1e-3


def _hashed_vector(token: str, dim: int, seed: int) -> np.ndarray:
    # pure function of (token, dim, seed): stdlib hash of the token seeds
    # a generator, never Python's randomized hash()
    digest = hashlib.blake2b(f"{seed}\x00{token}".encode("utf-8"), digest_size=8).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    vec = rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


class EmbeddingTable:
    """Token to vector lookup, backed by a file or by hashed fallback vectors.

    In file mode, tokens absent from the file have no vector and
    ``lookup`` returns None. In hashed mode every token resolves to a
    deterministic unit vector derived from (token, dim, seed).
    """

    def __init__(self, dim: int, vectors: dict[str, np.ndarray] | None = None,
                 source: str = "file", seed: int = 0):
        if source not in ("file", "hashed"):
            raise ValueError(f"unknown embedding source {source!r}")
        if dim < 1:
            raise ValueError("embedding dim must be >= 1")
        self.dim = dim
        self.source = source
        self.seed = seed
        self._vectors: dict[str, np.ndarray] = vectors if vectors is not None else {}

    def lookup(self, token: str) -> np.ndarray | None:
        vec = self._vectors.get(token)
        if vec is None and self.source == "hashed":
            vec = _hashed_vector(token, self.dim, self.seed)
            self._vectors[token] = vec
        return vec

    def __contains__(self, token: str) -> bool:
        return self.source == "hashed" or token in self._vectors


def hashed_table(dim: int = 64, seed: int = 0) -> EmbeddingTable:
    """Fallback table assigning every token a seeded pseudo-random unit vector."""
    return EmbeddingTable(dim=dim, source="hashed", seed=seed)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Parse a text file of ``token v1 .. vd`` lines into a table.

    Raises InputFormatError on inconsistent dimensions, unparsable
    numbers, or an empty file; messages carry the line number.
    """
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    try:
        fh = path.open(encoding="utf-8")
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 2:
                raise InputFormatError(f"{path}:{lineno}: token without vector values")
            token, values = parts[0], parts[1:]
            try:
                vec = np.array([float(v) for v in values], dtype=np.float64)
            except ValueError as exc:
                raise InputFormatError(f"{path}:{lineno}: unparsable number: {exc}") from exc
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise InputFormatError(
                    f"{path}:{lineno}: dimension {len(values)} != first line's {dim}")
            vectors[token] = vec
    if dim is None:
        raise InputFormatError(f"{path}: empty embedding file")
    return EmbeddingTable(dim=dim, vectors=vectors, source="file")


def sif_sentence_embedding(table: EmbeddingTable, corpus: Corpus,
                           sentence: list[str]) -> np.ndarray:
    """Frequency-weighted mean of the sentence's word vectors.

    Each token contributes ``w/(w + p(token)) * vec`` with w = 1e-3 and
    p the corpus unigram probability; the sum is divided by the full
    token count. Tokens without a vector contribute a zero vector but
    still count toward the length.
    """
    if not sentence:
        raise DegenerateDataError("cannot embed an empty sentence")
    acc = np.zeros(table.dim, dtype=np.float64)
    for token in sentence:
        vec = table.lookup(token)
        if vec is None:
            continue
        weight = SIF_WEIGHT / (SIF_WEIGHT + corpus.unigram_probability(token))
        acc += weight * vec
    return acc / len(sentence)


def cosine(x: np.ndarray, y: np.ndarray) -> float:
    """Cosine similarity; 0.0 when either vector has zero norm."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    nx = math.sqrt(float(x @ x))
    ny = math.sqrt(float(y @ y))
    if nx == 0.0 or ny == 0.0:
        return 0.0
    return float(x @ y) / (nx * ny)
