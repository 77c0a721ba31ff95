"""Adaptive multi-curricula scheduling.

A linear-softmax policy picks which curriculum feeds the next batch.
Every ``validate_every`` steps the learner is validated, the summed
normalized metric change (deviation) is turned into a ratio reward, and
the policy takes one REINFORCE step with that reward as the return for
every action in the episode.
"""

import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Protocol, Sequence

import numpy as np

from .curriculum import (ATTRIBUTES, Curriculum, PacingConfig, progressing_function,
                         sample_batch)
from .errors import DegenerateDataError
from .metrics import METRIC_NAMES, MetricVector, NormalizationState, deviation

N_ACTIONS = len(ATTRIBUTES)
# scalar features: batch count, historical loss, current loss, margin
FEATURE_DIM = 4 + len(METRIC_NAMES) + N_ACTIONS

MODES = ("adaptive", "random_policy", "anti", "none")

REWARD_EPSILON = 1e-6
REWARD_CLIP = 5.0


@dataclass
class SchedulerState:
    """Everything the policy is allowed to see, before featurization."""

    batch_count: int = 0
    avg_hist_loss: float = 0.0
    current_loss: float = 0.0
    margin: float = 0.0
    last_metrics: np.ndarray = field(
        default_factory=lambda: np.full(len(METRIC_NAMES), 0.5))
    rho: np.ndarray = field(default_factory=lambda: np.zeros(N_ACTIONS, dtype=np.int64))


def _squash(x: float) -> float:
    x = max(0.0, x)
    return x / (1.0 + x)


def featurize(state: SchedulerState, duration: int) -> np.ndarray:
    """Map the state into [0,1]^22.

    Layout: normalized batch count, squashed average and current loss,
    margin, the 13 normalized metrics, then the five progress counters
    scaled by the pacing duration and clamped at 1.
    """
    out = np.empty(FEATURE_DIM, dtype=np.float64)
    out[0] = min(1.0, math.log1p(state.batch_count) / math.log1p(duration))
    out[1] = _squash(state.avg_hist_loss)
    out[2] = _squash(state.current_loss)
    out[3] = min(1.0, max(0.0, state.margin))
    out[4:4 + len(METRIC_NAMES)] = np.clip(state.last_metrics, 0.0, 1.0)
    out[4 + len(METRIC_NAMES):] = np.minimum(1.0, state.rho / duration)
    return out


@dataclass
class PolicyParams:
    weights: np.ndarray  # (N_ACTIONS, FEATURE_DIM)
    bias: np.ndarray     # (N_ACTIONS,)

    @classmethod
    def zeros(cls, dim: int = FEATURE_DIM) -> "PolicyParams":
        return cls(weights=np.zeros((N_ACTIONS, dim)), bias=np.zeros(N_ACTIONS))


def policy_forward(params: PolicyParams, features: np.ndarray) -> np.ndarray:
    """Softmax over the linear action scores."""
    if features.shape[0] != params.weights.shape[1]:
        raise ValueError(
            f"feature dim {features.shape[0]} != policy dim {params.weights.shape[1]}")
    logits = params.weights @ features + params.bias
    logits -= logits.max()
    exp = np.exp(logits)
    return exp / exp.sum()


def sample_action(probabilities: Sequence[float],
                  rng: int | np.random.Generator) -> int:
    """Seeded categorical draw by inverse CDF."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    r = rng.random()
    acc = 0.0
    for i, p in enumerate(probabilities):
        acc += p
        if r < acc:
            return i
    return len(probabilities) - 1


def reward(delta_curr: float, delta_prev: float,
           epsilon: float = REWARD_EPSILON, clip: float = REWARD_CLIP) -> float:
    """Ratio of consecutive deviations minus one, guarded and clipped.

    Equals delta_curr/delta_prev - 1 whenever |delta_prev| >= epsilon.
    A vanishing previous deviation is floored at epsilon with the sign
    convention sign(0) = +1, so the reward's sign follows delta_curr.
    """
    sign = 1.0 if delta_prev >= 0.0 else -1.0
    value = delta_curr / max(abs(delta_prev), epsilon) * sign - 1.0
    return min(clip, max(-clip, value))


@dataclass(frozen=True)
class TrajectoryStep:
    features: np.ndarray
    action: int
    log_prob: float


@dataclass
class Trajectory:
    steps: list[TrajectoryStep] = field(default_factory=list)
    terminal_reward: float | None = None


def trajectory_objective(params: PolicyParams, trajectory: Trajectory) -> float:
    """Sum of log action probabilities weighted by the terminal reward.

    This is the scalar whose gradient the REINFORCE update ascends;
    kept separate so the analytic gradient can be checked numerically.
    """
    v = trajectory.terminal_reward
    total = 0.0
    for step in trajectory.steps:
        probs = policy_forward(params, step.features)
        total += math.log(probs[step.action]) * v
    return total


def reinforce_gradient(params: PolicyParams,
                       trajectory: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of :func:`trajectory_objective` for linear-softmax."""
    v = trajectory.terminal_reward
    grad_w = np.zeros_like(params.weights)
    grad_b = np.zeros_like(params.bias)
    for step in trajectory.steps:
        probs = policy_forward(params, step.features)
        coeff = -probs
        coeff[step.action] += 1.0
        coeff *= v
        grad_w += np.outer(coeff, step.features)
        grad_b += coeff
    return grad_w, grad_b


def reinforce_update(params: PolicyParams, trajectory: Trajectory,
                     learning_rate: float) -> PolicyParams:
    """One gradient-ascent step; returns new params, inputs untouched."""
    if not trajectory.steps:
        raise DegenerateDataError("cannot update the policy from an empty trajectory")
    if trajectory.terminal_reward is None:
        raise ValueError("trajectory has no terminal reward")
    grad_w, grad_b = reinforce_gradient(params, trajectory)
    return PolicyParams(weights=params.weights + learning_rate * grad_w,
                        bias=params.bias + learning_rate * grad_b)


class Learner(Protocol):
    def train_batch(self, batch: list) -> "object": ...


@dataclass
class TrainConfig:
    """Everything that shapes one training run.

    ``mode`` is one of adaptive, random_policy, anti, none, or
    ``single:<attribute>``. ``patience`` stops the run after that many
    consecutive validations with negative deviation; None disables it.
    """

    steps: int
    validate_every: int = 50
    duration: int = 1000
    initial_fraction: float = 0.01
    batch_size: int = 32
    mode: str = "adaptive"
    seed: int = 0
    policy_lr: float = 0.1
    patience: int | None = 5
    use_baseline: bool = False
    reward_epsilon: float = REWARD_EPSILON
    reward_clip: float = REWARD_CLIP


def parse_mode(mode: str) -> tuple[str, int | None]:
    """Split a mode string into (kind, fixed action index or None)."""
    if mode in MODES:
        return mode, None
    if mode.startswith("single:"):
        attribute = mode.split(":", 1)[1]
        if attribute in ATTRIBUTES:
            return "single", ATTRIBUTES.index(attribute)
    raise ValueError(
        f"unknown mode {mode!r}; expected one of {MODES} or single:<attribute>")


def _uses_policy(kind: str) -> bool:
    return kind in ("adaptive", "anti")


def train_loop(learner: Learner, curricula: list[Curriculum] | None,
               config: TrainConfig,
               validator: Callable[[Learner], MetricVector],
               samples: list | None = None) -> dict:
    """Run one training session and return its full report.

    ``curricula`` must hold one curriculum per attribute, in
    :data:`~dialogcl.curriculum.ATTRIBUTES` order, already built with
    the direction the mode calls for (reversed orders for ``anti``).
    Mode ``none`` ignores them and draws uniform batches over
    ``samples``. When ``samples`` is given, batches are lists of
    samples; otherwise the learner receives raw id lists.
    """
    kind, single_action = parse_mode(config.mode)
    if kind != "none":
        if curricula is None or len(curricula) != N_ACTIONS:
            raise ValueError(f"mode {config.mode!r} needs {N_ACTIONS} curricula")
    elif samples is None:
        raise ValueError("mode none draws from the full sample list; pass samples")

    pacing = PacingConfig(duration=config.duration,
                          initial_fraction=config.initial_fraction)
    seq = np.random.SeedSequence(config.seed)
    action_rng, batch_rng = (np.random.default_rng(c) for c in seq.spawn(2))

    params = PolicyParams.zeros()
    state = SchedulerState()
    norm = NormalizationState()
    trajectory = Trajectory()
    baseline = 0.0
    prev_vector: MetricVector | None = None
    prev_delta: float | None = None
    total_loss = 0.0
    negative_streak = 0
    converged = False
    steps_run = 0
    step_records: list[dict] = []
    validation_records: list[dict] = []

    for t in range(1, config.steps + 1):
        features = featurize(state, config.duration)
        if _uses_policy(kind):
            probs = policy_forward(params, features)
            action = sample_action(probs, action_rng)
            trajectory.steps.append(TrajectoryStep(
                features=features, action=action,
                log_prob=math.log(probs[action])))
        elif kind == "random_policy":
            action = int(action_rng.integers(0, N_ACTIONS))
        elif kind == "single":
            action = single_action
        else:
            action = None

        if action is None:
            ids = [int(i) for i in batch_rng.integers(0, len(samples),
                                                      size=config.batch_size)]
            f_rho = 1.0
        else:
            chosen = curricula[action]
            f_rho = progressing_function(pacing, chosen.progress)
            ids = sample_batch(chosen, pacing, config.batch_size, batch_rng)

        batch = [samples[i] for i in ids] if samples is not None else ids
        result = learner.train_batch(batch)
        loss = float(result.loss)
        margin = float(result.margin)

        state.batch_count = t
        total_loss += loss
        state.avg_hist_loss = total_loss / t
        state.current_loss = loss
        state.margin = margin
        if curricula is not None:
            state.rho = np.array([c.progress for c in curricula], dtype=np.int64)
        steps_run = t
        step_records.append(
            {"step": t, "action": action, "f_rho": f_rho, "loss": loss})

        if t % config.validate_every != 0:
            continue

        vector = validator(learner)
        norm.update(vector)
        delta = (deviation(vector, prev_vector, norm)
                 if prev_vector is not None else None)
        if delta is not None and prev_delta is not None:
            turn_reward = reward(delta, prev_delta,
                                 config.reward_epsilon, config.reward_clip)
        else:
            turn_reward = 0.0

        if _uses_policy(kind):
            if config.use_baseline:
                trajectory.terminal_reward = turn_reward - baseline
                baseline = 0.9 * baseline + 0.1 * turn_reward
            else:
                trajectory.terminal_reward = turn_reward
            params = reinforce_update(params, trajectory, config.policy_lr)
            trajectory = Trajectory()

        state.last_metrics = norm.normalize(vector)
        if _uses_policy(kind):
            dist = [float(p) for p in
                    policy_forward(params, featurize(state, config.duration))]
        elif kind == "random_policy":
            dist = [1.0 / N_ACTIONS] * N_ACTIONS
        elif kind == "single":
            dist = [1.0 if a == single_action else 0.0 for a in range(N_ACTIONS)]
        else:
            dist = None
        validation_records.append({
            "step": t,
            "metrics": vector.as_dict(),
            "delta": delta,
            "reward": turn_reward,
            "action_probs": dist,
        })

        if delta is not None and delta < 0.0:
            negative_streak += 1
        else:
            negative_streak = 0
        prev_vector = vector
        prev_delta = delta
        if config.patience is not None and negative_streak >= config.patience:
            converged = True
            break

    return {
        "config": asdict(config),
        "steps": step_records,
        "validations": validation_records,
        "final": {
            "steps_run": steps_run,
            "converged": converged,
            "rho": ([int(c.progress) for c in curricula]
                    if curricula is not None else [0] * N_ACTIONS),
            "policy_weights": [[float(w) for w in row] for row in params.weights],
            "policy_bias": [float(b) for b in params.bias],
        },
    }
