"""Model-guided distances, threshold schedules, and candidate screening."""

import math

import numpy as np
import pytest

from alquest.exploration import (
    ThresholdSchedule,
    build_schedule,
    candidate_set,
    distances_to_touched,
    model_distance,
)
from alquest.models import LinearSoftmaxModel
from alquest.questions import KnowledgeBase, QuestionKind, QuestionPoint


def _two_class_model(w, b=(0.0, 0.0)):
    model = LinearSoftmaxModel(2, 1)
    model.parameters = np.array([w[0], w[1], b[0], b[1]])
    return model


class TestModelDistance:
    def test_identical_points_have_zero_distance(self):
        model = _two_class_model((1.0, -1.0))
        assert model_distance(model, [3.3], [3.3]) == 0.0

    def test_symmetry(self):
        model = _two_class_model((0.7, -0.2))
        a, b = [1.0], [-2.5]
        assert model_distance(model, a, b) == model_distance(model, b, a)

    def test_hand_evaluated_affine_map(self):
        # scores: x=0 -> (0,0); x=1 -> (1,-1); distance sqrt(2)
        model = _two_class_model((1.0, -1.0))
        assert model_distance(model, [0.0], [1.0]) == pytest.approx(math.sqrt(2), abs=1e-12)


class TestThresholdSchedule:
    def test_arithmetic_sequence_to_zero(self):
        sched = ThresholdSchedule(thresholds=(2.5, 2.0, 1.5, 1.0, 0.5, 0.0), rho=0.5)
        assert sched.levels == 6

    def test_last_threshold_must_be_zero(self):
        with pytest.raises(ValueError):
            ThresholdSchedule(thresholds=(2.0, 1.0), rho=0.5)

    def test_thresholds_must_decrease(self):
        with pytest.raises(ValueError):
            ThresholdSchedule(thresholds=(1.0, 1.5, 0.0), rho=0.5)

    def test_all_zero_is_allowed_for_degenerate_pools(self):
        ThresholdSchedule(thresholds=(0.0, 0.0, 0.0), rho=0.5)

    def test_built_schedule_matches_the_arithmetic_rule(self):
        # two points -> the single pairwise distance is every quantile
        model = _two_class_model((1.0, -1.0))
        X = np.array([[0.0], [1.0]])
        sched = build_schedule(model, X, levels=6, rho=0.5)
        d1 = math.sqrt(2)
        expected = tuple(d1 * (6 - s) / 5 for s in range(1, 7))
        np.testing.assert_allclose(sched.thresholds, expected, atol=1e-12)
        assert sched.thresholds[-1] == 0.0

    def test_constant_pairwise_distances_set_d1_exactly(self):
        # equidistant score pairs: x in {0,1} maps to distance sqrt(2) only
        model = _two_class_model((1.0, -1.0))
        X = np.array([[0.0], [1.0]])
        sched = build_schedule(model, X, levels=4, rho=0.3)
        assert sched.thresholds[0] == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_degenerate_pool_gives_all_zero_schedule(self):
        model = LinearSoftmaxModel(2, 1)  # zero weights: all scores equal
        X = np.array([[0.0], [1.0], [2.0]])
        sched = build_schedule(model, X, levels=6, rho=0.5)
        assert all(t == 0.0 for t in sched.thresholds)


def brute_force_candidates(model, X, touched, thresholds, rho):
    """Independent full-pairwise scan mirroring the candidate-set contract."""
    n = len(X)
    dist = []
    for i in range(n):
        if touched:
            dist.append(min(model_distance(model, X[i], X[j]) for j in touched))
        else:
            dist.append(float("inf"))
    for s, d_s in enumerate(thresholds, start=1):
        cand = {i for i in range(n) if dist[i] > d_s}
        if len(cand) > rho * n:
            return cand, s
    cand = {i for i in range(n) if dist[i] > 0.0}
    if not cand:
        cand = set(range(n)) - set(touched)
    return cand, len(thresholds)


class TestCandidateSet:
    def _setup(self, seed=0, n=40):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, 2)) * np.array([3.0, 1.0])
        model = LinearSoftmaxModel(3, 2)
        model.parameters = rng.normal(size=model.parameters.shape)
        kb = KnowledgeBase(X, 3)
        return rng, X, model, kb

    def test_empty_knowledge_base_admits_the_whole_pool_at_level_one(self):
        _, X, model, kb = self._setup()
        sched = build_schedule(model, X)
        cands, level = candidate_set(model, X, kb, sched)
        assert level == 1
        assert set(cands.tolist()) == set(range(len(X)))

    def test_single_far_touched_point_only_excludes_itself(self):
        _, X, model, kb = self._setup(seed=3)
        # mark the point farthest from the crowd as touched
        emb = model.scores(X)
        center = emb.mean(axis=0)
        far = int(np.argmax(np.linalg.norm(emb - center, axis=1)))
        kb.add(0, QuestionPoint(QuestionKind("class"), (far,)), 1)
        sched = build_schedule(model, X)
        cands, level = candidate_set(model, X, kb, sched)
        if level == 1:
            assert far not in set(cands.tolist())

    def test_matches_brute_force_scan_on_random_instances(self):
        for seed in range(12):
            rng, X, model, kb = self._setup(seed=seed, n=30)
            touched = sorted(rng.choice(30, size=int(rng.integers(1, 10)), replace=False).tolist())
            for i in touched:
                kb.add(0, QuestionPoint(QuestionKind("class"), (int(i),)), 1)
            sched = build_schedule(model, X, levels=6, rho=0.5)
            cands, level = candidate_set(model, X, kb, sched)
            expected, expected_level = brute_force_candidates(
                model, X, touched, sched.thresholds, sched.rho
            )
            assert set(cands.tolist()) == expected
            assert level == expected_level

    def test_levels_are_nested_and_minimal(self):
        rng, X, model, kb = self._setup(seed=7, n=30)
        for i in range(10):
            kb.add(0, QuestionPoint(QuestionKind("class"), (i,)), 1)
        sched = build_schedule(model, X, levels=6, rho=0.5)
        dist = distances_to_touched(model, X, np.arange(10))
        sets = [set(np.flatnonzero(dist > d).tolist()) for d in sched.thresholds]
        for smaller, larger in zip(sets, sets[1:]):
            assert smaller <= larger
        cands, level = candidate_set(model, X, kb, sched)
        assert len(sets[level - 1]) > 0.5 * len(X) or level == sched.levels
        if level > 1:
            assert len(sets[level - 2]) <= 0.5 * len(X)

    def test_every_candidate_clears_the_returned_threshold(self):
        rng, X, model, kb = self._setup(seed=11, n=25)
        for i in range(8):
            kb.add(0, QuestionPoint(QuestionKind("class"), (i,)), 1)
        sched = build_schedule(model, X)
        cands, level = candidate_set(model, X, kb, sched)
        d_s = sched.thresholds[level - 1]
        for i in cands:
            d = min(model_distance(model, X[i], X[j]) for j in range(8))
            assert d > d_s

    def test_degenerate_model_falls_back_to_untouched_points(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        model = LinearSoftmaxModel(2, 1)  # all scores identical -> distances 0
        kb = KnowledgeBase(X, 2)
        kb.add(0, QuestionPoint(QuestionKind("class"), (0,)), 1)
        sched = build_schedule(model, X)
        cands, level = candidate_set(model, X, kb, sched)
        assert set(cands.tolist()) == {1, 2, 3}
        assert level == sched.levels

    def test_touched_points_never_reenter(self):
        rng, X, model, kb = self._setup(seed=13, n=20)
        touched = [0, 5, 9]
        for i in touched:
            kb.add(0, QuestionPoint(QuestionKind("class"), (i,)), 1)
        sched = build_schedule(model, X)
        cands, _ = candidate_set(model, X, kb, sched)
        assert not (set(cands.tolist()) & set(touched))


class TestMetricVariants:
    def test_euclidean_metric_ignores_the_model(self):
        X = np.array([[0.0, 0.0], [3.0, 4.0]])
        model = LinearSoftmaxModel(2, 2)
        kb = KnowledgeBase(X, 2)
        kb.add(0, QuestionPoint(QuestionKind("class"), (0,)), 1)
        sched = ThresholdSchedule(thresholds=(4.9, 0.0), rho=0.4)
        cands, level = candidate_set(model, X, kb, sched, metric="euclidean")
        assert set(cands.tolist()) == {1}
        assert level == 1

    def test_mahalanobis_metric_whitens_anisotropic_features(self):
        rng = np.random.default_rng(21)
        X = rng.normal(size=(60, 2)) * np.array([100.0, 0.1])
        model = LinearSoftmaxModel(2, 2)
        sched_m = build_schedule(model, X, metric="mahalanobis")
        sched_e = build_schedule(model, X, metric="euclidean")
        # euclidean thresholds follow the dominant axis scale; whitened ones do not
        assert sched_e.thresholds[0] > 10 * sched_m.thresholds[0]
        kb = KnowledgeBase(X, 2)
        kb.add(0, QuestionPoint(QuestionKind("class"), (0,)), 1)
        cands, level = candidate_set(model, X, kb, sched_m, metric="mahalanobis")
        assert 0 not in set(cands.tolist())
        assert 1 <= level <= sched_m.levels

    def test_unknown_metric_rejected(self):
        X = np.array([[0.0], [1.0]])
        model = LinearSoftmaxModel(2, 1)
        with pytest.raises(ValueError):
            build_schedule(model, X, metric="cosine")
