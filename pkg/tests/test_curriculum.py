"""Pacing function, curriculum ordering, and prefix sampling."""

import math

import numpy as np
import pytest

from dialogcl.attributes import AttributeScores
from dialogcl.curriculum import (ATTRIBUTES, EASY_ASCENDING, PacingConfig,
                                 build_all_curricula, build_curriculum,
                                 prefix_length, progressing_function,
                                 sample_batch)
from dialogcl.errors import DegenerateDataError


def _scores(**columns):
    n = len(next(iter(columns.values())))
    rows = []
    for i in range(n):
        kw = {a: None for a in ATTRIBUTES}
        for name, vals in columns.items():
            kw[name] = vals[i]
        rows.append(AttributeScores(sample_id=i, **kw))
    return rows


class TestProgressingFunction:
    def test_start_equals_initial_fraction(self):
        cfg = PacingConfig(duration=1000, initial_fraction=0.01)
        assert progressing_function(cfg, 0) == pytest.approx(0.01)

    def test_end_reaches_one(self):
        cfg = PacingConfig(duration=1000)
        assert progressing_function(cfg, 1000) == 1.0
        assert progressing_function(cfg, 5000) == 1.0

    def test_midpoint_frozen_value(self):
        cfg = PacingConfig(duration=1000, initial_fraction=0.01)
        assert progressing_function(cfg, 500) == pytest.approx(
            0.7071421356417675, abs=1e-15)

    def test_monotone_nondecreasing(self):
        cfg = PacingConfig(duration=777, initial_fraction=0.05)
        values = [progressing_function(cfg, t) for t in range(0, 800, 7)]
        for a, b in zip(values, values[1:]):
            assert b >= a
        assert all(0.0 < v <= 1.0 for v in values)

    def test_negative_step_rejected(self):
        with pytest.raises(ValueError):
            progressing_function(PacingConfig(duration=10), -1)

    def test_bad_config_rejected(self):
        with pytest.raises(ValueError):
            PacingConfig(duration=0)
        with pytest.raises(ValueError):
            PacingConfig(duration=10, initial_fraction=0.0)
        with pytest.raises(ValueError):
            PacingConfig(duration=10, initial_fraction=1.5)


class TestBuildCurriculum:
    def test_ascending_attribute_sorts_low_first(self):
        # specificity: low values are easy, so 0.1 leads
        rows = _scores(specificity=[0.9, 0.1, 0.5])
        cur = build_curriculum(rows, "specificity")
        assert cur.order == [1, 2, 0]
        assert cur.direction == "easy_first"

    def test_descending_attribute_sorts_high_first(self):
        # model_confidence: high confidence is easy
        rows = _scores(model_confidence=[0.9, 0.1, 0.5])
        cur = build_curriculum(rows, "model_confidence")
        assert cur.order == [0, 2, 1]

    def test_ties_break_by_sample_id(self):
        rows = _scores(specificity=[0.5, 0.5, 0.5, 0.5])
        assert build_curriculum(rows, "specificity").order == [0, 1, 2, 3]
        rows = _scores(model_confidence=[0.5, 0.5, 0.5])
        assert build_curriculum(rows, "model_confidence").order == [0, 1, 2]

    def test_anti_reverses_order(self):
        rows = _scores(specificity=[0.9, 0.1, 0.5])
        cur = build_curriculum(rows, "specificity", direction="anti")
        assert cur.order == [0, 2, 1]
        assert cur.direction == "anti"

    def test_missing_values_excluded(self):
        rows = _scores(continuity=[0.3, None, 0.1, None])
        cur = build_curriculum(rows, "continuity")
        # continuity is descending-easy; ids 1 and 3 dropped
        assert cur.order == [0, 2]

    def test_no_usable_values_rejected(self):
        rows = _scores(continuity=[None, None])
        with pytest.raises(DegenerateDataError):
            build_curriculum(rows, "continuity")

    def test_unknown_attribute_rejected(self):
        rows = _scores(specificity=[0.1])
        with pytest.raises(ValueError):
            build_curriculum(rows, "fluency")

    def test_unknown_direction_rejected(self):
        rows = _scores(specificity=[0.1])
        with pytest.raises(ValueError):
            build_curriculum(rows, "specificity", direction="sideways")

    def test_every_attribute_has_a_direction(self):
        assert set(EASY_ASCENDING) == set(ATTRIBUTES)

    def test_build_all_covers_attributes_in_order(self):
        rows = _scores(specificity=[0.1, 0.2],
                       repetitiveness=[0.0, 0.1],
                       query_relatedness=[0.5, 0.4],
                       continuity=[0.3, 0.2],
                       model_confidence=[-1.0, -2.0])
        curricula = build_all_curricula(rows)
        assert [c.attribute for c in curricula] == list(ATTRIBUTES)


class TestSampling:
    def test_prefix_never_empty(self):
        cfg = PacingConfig(duration=100, initial_fraction=0.01)
        cur = build_curriculum(_scores(specificity=[0.1, 0.2, 0.3]),
                               "specificity")
        assert prefix_length(cur, cfg) == 1

    def test_prefix_full_after_duration(self):
        cfg = PacingConfig(duration=100)
        cur = build_curriculum(_scores(specificity=[0.1, 0.2, 0.3]),
                               "specificity")
        cur.progress = 100
        assert prefix_length(cur, cfg) == 3

    def test_prefix_rounds_up(self):
        # f(25; T=100, f0=0.01) ~= 0.5, so 5 samples -> ceil(2.5) = 3
        cfg = PacingConfig(duration=100, initial_fraction=0.01)
        cur = build_curriculum(
            _scores(specificity=[0.1, 0.2, 0.3, 0.4, 0.5]), "specificity")
        cur.progress = 25
        f = progressing_function(cfg, 25)
        assert prefix_length(cur, cfg) == max(1, math.ceil(f * 5))

    def test_fresh_curriculum_draws_only_easiest(self):
        rows = _scores(specificity=list(np.linspace(0.0, 1.0, 100)))
        cur = build_curriculum(rows, "specificity")
        cfg = PacingConfig(duration=10_000, initial_fraction=0.001)
        batch = sample_batch(cur, cfg, 16, np.random.default_rng(0))
        assert batch == [cur.order[0]] * 16

    def test_exhausted_curriculum_covers_range(self):
        rows = _scores(specificity=list(np.linspace(0.0, 1.0, 40)))
        cur = build_curriculum(rows, "specificity")
        cur.progress = 10_000
        cfg = PacingConfig(duration=100)
        rng = np.random.default_rng(1)
        seen = set()
        for _ in range(60):
            seen.update(sample_batch(cur, cfg, 32, rng))
        assert seen == set(range(40))

    def test_batches_stay_inside_pacing_prefix(self):
        rows = _scores(specificity=list(np.linspace(0.0, 1.0, 50)))
        cfg = PacingConfig(duration=200, initial_fraction=0.02)
        cur = build_curriculum(rows, "specificity")
        rng = np.random.default_rng(7)
        for _ in range(200):
            allowed = set(cur.order[:prefix_length(cur, cfg)])
            batch = sample_batch(cur, cfg, 8, rng)
            assert set(batch) <= allowed

    def test_progress_counts_draws_not_samples(self):
        rows = _scores(specificity=[0.1, 0.2])
        cur = build_curriculum(rows, "specificity")
        cfg = PacingConfig(duration=10)
        rng = np.random.default_rng(3)
        for expect in range(5):
            assert cur.progress == expect
            sample_batch(cur, cfg, 4, rng)

    def test_seeded_draws_reproduce(self):
        rows = _scores(specificity=list(np.linspace(0, 1, 30)))
        cfg = PacingConfig(duration=50)
        out = []
        for _ in range(2):
            cur = build_curriculum(rows, "specificity")
            rng = np.random.default_rng(11)
            out.append([tuple(sample_batch(cur, cfg, 6, rng))
                        for _ in range(20)])
        assert out[0] == out[1]

    def test_bad_batch_size_rejected(self):
        cur = build_curriculum(_scores(specificity=[0.1]), "specificity")
        with pytest.raises(ValueError):
            sample_batch(cur, PacingConfig(duration=10), 0, 0)
