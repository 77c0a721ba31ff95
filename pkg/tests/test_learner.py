"""Wire protocol client, easiness mapping, and the simulated learner."""

import json
import sys

import numpy as np
import pytest

from dialogcl.attributes import AttributeScores
from dialogcl.corpus import DialogueSample, corpus_from_rows
from dialogcl.curriculum import ATTRIBUTES
from dialogcl.embeddings import hashed_table
from dialogcl.errors import (DegenerateDataError, LearnerExitError,
                             LearnerTimeoutError, MalformedReplyError,
                             ProtocolError)
from dialogcl.learner import (CorpusValidator, ExternalLearner,
                              SimulatedLearner, TrainResult, easiness_matrix)
from dialogcl.metrics import METRIC_NAMES


def _scores(**columns):
    n = len(next(iter(columns.values())))
    rows = []
    for i in range(n):
        kw = {a: None for a in ATTRIBUTES}
        for name, vals in columns.items():
            kw[name] = vals[i]
        rows.append(AttributeScores(sample_id=i, **kw))
    return rows


class TestEasinessMatrix:
    def test_ascending_attribute_flipped(self):
        # low specificity is easy: 0.0 maps to easiness 1.0
        rows = _scores(specificity=[0.0, 1.0, 0.5])
        out = easiness_matrix(rows)
        j = ATTRIBUTES.index("specificity")
        assert out[:, j].tolist() == [1.0, 0.0, 0.5]

    def test_descending_attribute_kept(self):
        rows = _scores(model_confidence=[-6.0, -1.0])
        out = easiness_matrix(rows)
        j = ATTRIBUTES.index("model_confidence")
        assert out[:, j].tolist() == [0.0, 1.0]

    def test_missing_values_stay_neutral(self):
        rows = _scores(continuity=[0.9, None, 0.1])
        out = easiness_matrix(rows)
        j = ATTRIBUTES.index("continuity")
        assert out[:, j].tolist() == [1.0, 0.5, 0.0]

    def test_constant_column_stays_neutral(self):
        rows = _scores(repetitiveness=[0.3, 0.3, 0.3])
        out = easiness_matrix(rows)
        j = ATTRIBUTES.index("repetitiveness")
        assert out[:, j].tolist() == [0.5, 0.5, 0.5]

    def test_absent_attribute_stays_neutral(self):
        rows = _scores(specificity=[0.1, 0.9])
        out = easiness_matrix(rows)
        for j, attribute in enumerate(ATTRIBUTES):
            if attribute != "specificity":
                assert out[:, j].tolist() == [0.5, 0.5]

    def test_shape_and_bounds(self):
        from dialogcl.synth import synthetic_scores
        out = easiness_matrix(synthetic_scores(300, seed=3))
        assert out.shape == (300, 5)
        assert np.all(out >= 0.0) and np.all(out <= 1.0)


class TestSimulatedLearner:
    def _learner(self, n=50, seed=0, **kw):
        rng = np.random.default_rng(7)
        ease = rng.uniform(0, 1, size=(n, 5))
        return SimulatedLearner(ease, noise_seed=seed, **kw), ease

    def test_zero_rates_freeze_skill(self):
        learner, _ = self._learner(learning_rates=(0.0,) * 5,
                                    noise_scale=0.0)
        before = learner.skill.copy()
        learner.train_batch([0, 1, 2])
        assert np.array_equal(learner.skill, before)

    def test_skill_update_is_exactly_affine(self):
        learner, ease = self._learner(noise_scale=0.0)
        learner.train_batch([3, 4])
        expect = learner.learning_rates * ease[[3, 4]].mean(axis=0)
        assert learner.skill == pytest.approx(expect.tolist(), abs=1e-15)

    def test_loss_tracks_mean_skill(self):
        learner, _ = self._learner(noise_scale=0.0)
        result = learner.train_batch([0])
        assert isinstance(result, TrainResult)
        assert result.loss == pytest.approx(1.0 - learner.skill.mean())
        assert result.margin == pytest.approx(learner.skill.mean())

    def test_same_seed_reproduces_everything(self):
        outs = []
        for _ in range(2):
            learner, _ = self._learner(seed=11)
            losses = [learner.train_batch([i % 50]).loss for i in range(30)]
            outs.append((losses, learner.validate().as_array().tolist()))
        assert outs[0] == outs[1]

    def test_metrics_hit_floors_at_zero_skill(self):
        learner, _ = self._learner()
        assert learner.expected_metrics(np.zeros(5)).tolist() == \
            pytest.approx(learner._floors.tolist())

    def test_metrics_hit_ceilings_at_full_skill(self):
        learner, _ = self._learner()
        assert learner.expected_metrics(np.ones(5)).tolist() == \
            pytest.approx(learner._ceilings.tolist())

    def test_metrics_monotone_in_skill(self):
        learner, _ = self._learner()
        rng = np.random.default_rng(2)
        for _ in range(100):
            s = rng.uniform(0, 1, size=5)
            bumped = np.minimum(1.0, s + rng.uniform(0, 0.2, size=5))
            low = learner.expected_metrics(s)
            high = learner.expected_metrics(bumped)
            assert np.all(high >= low - 1e-12)

    def test_easier_batches_raise_skill_faster(self):
        # two single-sample corpora, one uniformly easy, one uniformly hard
        easy = SimulatedLearner(np.full((1, 5), 0.95), noise_scale=0.0,
                                metric_noise_scale=0.0)
        hard = SimulatedLearner(np.full((1, 5), 0.05), noise_scale=0.0,
                                metric_noise_scale=0.0)
        for _ in range(200):
            easy.train_batch([0])
            hard.train_batch([0])
        assert easy.skill.mean() > hard.skill.mean() * 2
        assert np.all(easy.validate().as_array() >=
                      hard.validate().as_array())

    def test_accepts_samples_or_ids(self):
        learner, _ = self._learner(noise_scale=0.0)
        twin, _ = self._learner(noise_scale=0.0)
        sample = DialogueSample(id=3, query=["q"], response=["r"],
                                next_utterance=None, raw_query="q",
                                raw_response="r")
        learner.train_batch([sample])
        twin.train_batch([3])
        assert np.array_equal(learner.skill, twin.skill)

    def test_bad_shapes_rejected(self):
        with pytest.raises(ValueError):
            SimulatedLearner(np.zeros((4, 3)))
        with pytest.raises(ValueError):
            SimulatedLearner(np.zeros((4, 5)), learning_rates=(0.1, 0.2))


# --- external learner protocol ----------------------------------------------

# inline child processes keep the protocol tests self-contained
ECHO_CHILD = r"""
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    kind = req["kind"]
    out = {"seq": req["seq"]}
    if kind == "init":
        out["ok"] = True
    elif kind == "train_batch":
        n = len(req["samples"])
        out["loss"] = 1.0 / n
        out["margin"] = 0.25
    elif kind == "generate":
        out["responses"] = [["echo"] + q for q in req["queries"]]
    elif kind == "shutdown":
        print(json.dumps(out), flush=True)
        break
    print(json.dumps(out), flush=True)
"""


def _spawn(body, timeout=10.0):
    return ExternalLearner([sys.executable, "-c", body], timeout=timeout)


class TestExternalLearner:
    def test_full_conversation(self):
        learner = _spawn(ECHO_CHILD)
        try:
            learner.init({"seed": 5})
            result = learner.train_batch([
                DialogueSample(id=i, query=["a"], response=["b"],
                               next_utterance=None, raw_query="a",
                               raw_response="b")
                for i in range(4)])
            assert result == TrainResult(loss=0.25, margin=0.25)
            out = learner.generate([["hi"], ["there", "you"]])
            assert out == [["echo", "hi"], ["echo", "there", "you"]]
            assert learner.shutdown() == 0
        finally:
            learner.close()

    def test_sequence_numbers_increase_from_zero(self):
        learner = _spawn(ECHO_CHILD)
        try:
            assert learner.roundtrip("init", {"config": {}})["seq"] == 0
            assert learner.roundtrip("generate", {"queries": []})["seq"] == 1
            assert learner.roundtrip("generate", {"queries": []})["seq"] == 2
        finally:
            learner.close()

    def test_dead_child_raises_exit_error(self):
        learner = _spawn("import sys; sys.exit(3)")
        try:
            with pytest.raises(LearnerExitError) as info:
                for _ in range(50):  # the pipe may take one write to break
                    learner.roundtrip("init", {"config": {}})
            assert info.value.seq is not None
            assert isinstance(info.value, ProtocolError)
        finally:
            learner.close()

    def test_silent_child_raises_timeout(self):
        learner = _spawn("import time\nwhile True: time.sleep(0.1)",
                         timeout=0.3)
        try:
            with pytest.raises(LearnerTimeoutError) as info:
                learner.roundtrip("init", {"config": {}})
            assert info.value.seq == 0
        finally:
            learner.close()

    def test_garbage_reply_raises_malformed(self):
        learner = _spawn(
            "import sys\nfor line in sys.stdin: print('not json', flush=True)")
        try:
            with pytest.raises(MalformedReplyError):
                learner.roundtrip("init", {"config": {}})
        finally:
            learner.close()

    def test_wrong_seq_echo_raises_malformed(self):
        learner = _spawn("import sys, json\n"
                         "for line in sys.stdin: "
                         "print(json.dumps({'seq': 999}), flush=True)")
        try:
            with pytest.raises(MalformedReplyError) as info:
                learner.roundtrip("init", {"config": {}})
            assert info.value.seq == 0
        finally:
            learner.close()

    def test_error_reply_raises_malformed(self):
        learner = _spawn(
            "import sys, json\n"
            "for line in sys.stdin:\n"
            "    req = json.loads(line)\n"
            "    print(json.dumps({'seq': req['seq'], 'error': 'nope'}), flush=True)")
        try:
            with pytest.raises(MalformedReplyError, match="nope"):
                learner.roundtrip("train_batch", {"samples": []})
        finally:
            learner.close()

    def test_missing_loss_raises_malformed(self):
        learner = _spawn(
            "import sys, json\n"
            "for line in sys.stdin:\n"
            "    req = json.loads(line)\n"
            "    print(json.dumps({'seq': req['seq'], 'loss': 0.5}), flush=True)")
        try:
            with pytest.raises(MalformedReplyError, match="loss/margin"):
                learner.train_batch([])
        finally:
            learner.close()

    def test_bad_generate_shape_raises_malformed(self):
        learner = _spawn(
            "import sys, json\n"
            "for line in sys.stdin:\n"
            "    req = json.loads(line)\n"
            "    print(json.dumps({'seq': req['seq'], 'responses': ['flat']}),"
            " flush=True)")
        try:
            with pytest.raises(MalformedReplyError):
                learner.generate([["hello"]])
        finally:
            learner.close()

    def test_context_manager_kills_process(self):
        with _spawn(ECHO_CHILD) as learner:
            learner.init({})
            proc = learner._proc
        assert proc.poll() is not None


class TestCorpusValidator:
    def test_empty_validation_set_rejected(self, toy_corpus):
        with pytest.raises(DegenerateDataError):
            CorpusValidator(hashed_table(dim=16, seed=0), toy_corpus, [])

    def test_scores_generated_responses(self, toy_corpus):
        class Parrot:
            def __init__(self, corpus):
                self.answers = {tuple(s.query): s.response for s in corpus.samples}

            def generate(self, queries):
                return [self.answers[tuple(q)] for q in queries]

        table = hashed_table(dim=16, seed=0)
        validator = CorpusValidator(table, toy_corpus, toy_corpus.samples)
        vec = validator(Parrot(toy_corpus))
        # perfect reproduction: overlap metrics saturate
        assert vec.bleu == pytest.approx(1.0)
        assert vec.embedding_average == pytest.approx(1.0)
        assert vec.coherence <= 1.0
        assert set(vec.as_dict()) == set(METRIC_NAMES)
