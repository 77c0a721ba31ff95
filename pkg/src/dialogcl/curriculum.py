"""Easy-first sample orderings and prefix-gated batch sampling."""

import math
from dataclasses import dataclass, field

import numpy as np

from .attributes import AttributeScores
from .errors import DegenerateDataError

# attribute order doubles as the scheduler's action indexing
ATTRIBUTES = ("specificity", "repetitiveness", "query_relatedness",
              "continuity", "model_confidence")

# True: lower scores are easier and come first. A plain response is easy
# to produce (low specificity), while an on-topic, predictable one is
# easy to learn from (high relatedness, continuity, and confidence).
EASY_ASCENDING = {
    "specificity": True,
    "repetitiveness": False,
    "query_relatedness": False,
    "continuity": False,
    "model_confidence": False,
}

DIRECTIONS = ("easy_first", "anti")


@dataclass
class PacingConfig:
    """Controls how fast the usable prefix of a curriculum grows.

    The usable fraction after t draws is
    ``min(1, sqrt(t * (1 - f0^2) / duration + f0^2))``: it starts at
    ``initial_fraction`` and reaches 1 after ``duration`` draws.
    """

    duration: int
    initial_fraction: float = 0.01

    def __post_init__(self):
        if self.duration < 1:
            raise ValueError("duration must be >= 1")
        if not 0.0 < self.initial_fraction <= 1.0:
            raise ValueError("initial_fraction must be in (0, 1]")


def progressing_function(config: PacingConfig, t: int) -> float:
    """Usable-prefix fraction after ``t`` draws, monotone from f0 up to 1."""
    if t < 0:
        raise ValueError("t must be >= 0")
    f0 = config.initial_fraction
    if t == 0:
        return f0
    if t >= config.duration:
        return 1.0
    return min(1.0, math.sqrt(t * (1.0 - f0 * f0) / config.duration + f0 * f0))


@dataclass
class Curriculum:
    """One attribute's sample ordering plus its draw counter."""

    attribute: str
    direction: str
    order: list[int]
    progress: int = 0
    _order_array: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._order_array = np.asarray(self.order, dtype=np.int64)


def build_curriculum(scores: list[AttributeScores], attribute: str,
                     direction: str = "easy_first") -> Curriculum:
    """Order sample ids easiest first along one attribute.

    Samples without a value (continuity on final turns) are excluded.
    Ties keep ascending id order; ``anti`` reverses the easy-first order.
    """
    if attribute not in ATTRIBUTES:
        raise ValueError(f"unknown attribute {attribute!r}")
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown direction {direction!r}")
    pairs = [(getattr(s, attribute), s.sample_id) for s in scores
             if getattr(s, attribute) is not None]
    if not pairs:
        raise DegenerateDataError(f"no samples carry a value for {attribute}")
    if EASY_ASCENDING[attribute]:
        pairs.sort(key=lambda p: (p[0], p[1]))
    else:
        pairs.sort(key=lambda p: (-p[0], p[1]))
    order = [sid for _, sid in pairs]
    if direction == "anti":
        order.reverse()
    return Curriculum(attribute=attribute, direction=direction, order=order)


def build_all_curricula(scores: list[AttributeScores],
                        direction: str = "easy_first") -> list[Curriculum]:
    return [build_curriculum(scores, a, direction) for a in ATTRIBUTES]


def prefix_length(curriculum: Curriculum, config: PacingConfig) -> int:
    """Usable prefix size at the curriculum's current progress, at least 1."""
    fraction = progressing_function(config, curriculum.progress)
    return max(1, math.ceil(fraction * len(curriculum.order)))


def sample_batch(curriculum: Curriculum, config: PacingConfig, batch_size: int,
                 rng: int | np.random.Generator) -> list[int]:
    """Draw ``batch_size`` ids uniformly, with replacement, from the
    currently usable prefix, then advance the curriculum's counter."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    limit = prefix_length(curriculum, config)
    picks = rng.integers(0, limit, size=batch_size)
    curriculum.progress += 1
    return [int(i) for i in curriculum._order_array[picks]]
