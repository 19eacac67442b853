"""Per-kind question optimization and cost-normalized kind selection."""

import itertools
import math

import numpy as np
import pytest

from alquest.acquisition import (
    AcquisitionConfig,
    InfeasibleKindError,
    NoFeasibleQuestionError,
    cost_scale,
    optimize_question_point,
    select_question,
)
from alquest.questions import QuestionKind, QuestionPoint, answer_entropy

from conftest import TableModel


def exhaustive_best_group_question(model, X, kind, candidates):
    """Brute-force oracle: try every (member subset, class) combination."""
    best = (-1.0, None)
    n_classes = model.predict_proba(X[:1]).shape[1]
    for members in itertools.combinations(sorted(candidates), kind.m):
        for c in range(1, n_classes + 1):
            q = QuestionPoint(kind, members, c)
            en = answer_entropy(model, X, q)
            if en > best[0]:
                best = (en, q)
    return best


class TestCostScale:
    def test_unit_cost(self):
        assert cost_scale(1.0) == 1.0

    def test_frozen_value(self):
        assert cost_scale(0.25, 2.0 / 3.0) == pytest.approx(0.39685, abs=1e-4)

    def test_monotone_increasing(self):
        costs = [0.01, 0.1, 0.18, 0.5, 1.0, 2.0, 10.0]
        scaled = [cost_scale(c) for c in costs]
        assert all(a < b for a, b in zip(scaled, scaled[1:]))

    def test_nonpositive_cost_rejected(self):
        with pytest.raises(ValueError):
            cost_scale(0.0)


class TestOptimizeQuestionPoint:
    def test_class_kind_is_an_exact_scan(self):
        # entropies: h(0.95) ~ 0.198, h(0.5) = 0.693, h(0.8) ~ 0.500
        model = TableModel([[0.95, 0.05], [0.5, 0.5], [0.8, 0.2]])
        q, en = optimize_question_point(
            model, model.pool, QuestionKind("class"), np.array([0, 1, 2])
        )
        assert q.members == (1,)
        assert en == pytest.approx(math.log(2), abs=1e-12)

    def test_exchange_reaches_the_exhaustive_optimum_on_small_pools(self):
        """Smoke version of the optimizer-quality regression bar."""
        rng = np.random.default_rng(0)
        cfg = AcquisitionConfig(exchange_iters=200, restarts=5)
        hits = 0
        for trial in range(20):
            n = int(rng.integers(8, 20))
            model = TableModel(rng.dirichlet(np.ones(3), size=n))
            kind = QuestionKind("all" if trial % 2 else "any", m=2, cost=0.2)
            candidates = np.arange(n)
            q, en = optimize_question_point(
                model, model.pool, kind, candidates, cfg, rng=np.random.default_rng(trial)
            )
            best_en, _ = exhaustive_best_group_question(model, model.pool, kind, candidates)
            assert en >= 0.95 * best_en
            if en >= best_en - 1e-9:
                hits += 1
        assert hits >= 17

    def test_identical_probability_rows_make_every_choice_equivalent(self):
        model = TableModel([[0.6, 0.4]] * 6)
        kind = QuestionKind("all", m=2, cost=0.2)
        q, en = optimize_question_point(model, model.pool, kind, np.arange(6))
        p = 0.6 * 0.6
        closed_form = -(p * math.log(p) + (1 - p) * math.log(1 - p))
        # class 2 gives 0.4*0.4 = 0.16, h(0.16) < h(0.36); optimizer picks class 1
        assert en == pytest.approx(closed_form, abs=1e-12)

    def test_too_few_candidates_is_infeasible(self):
        model = TableModel([[0.5, 0.5]])
        with pytest.raises(InfeasibleKindError):
            optimize_question_point(
                model, model.pool, QuestionKind("all", m=2, cost=0.2), np.array([0])
            )

    def test_group_members_stay_inside_the_candidate_set(self):
        rng = np.random.default_rng(4)
        model = TableModel(rng.dirichlet(np.ones(3), size=12))
        candidates = np.array([1, 3, 5, 7, 9])
        kind = QuestionKind("any", m=3, cost=0.2)
        for seed in range(10):
            q, _ = optimize_question_point(
                model, model.pool, kind, candidates, rng=np.random.default_rng(seed)
            )
            assert set(q.members) <= set(candidates.tolist())


class TestSelectQuestion:
    KINDS = [QuestionKind("class"), QuestionKind("all", m=1, cost=0.25)]

    def test_frozen_index_comparison(self):
        """(En=1.2, cost=1) loses to (En=0.65, cost=0.25): 1.2 < 1.6379."""
        # class entropy ln(2)*...: build rows giving class entropy 1.2 is fiddly;
        # instead check the arithmetic through cost_scale directly, then the
        # argmax through a table where the cheap kind must win.
        assert 0.65 / cost_scale(0.25) == pytest.approx(1.6379, abs=1e-4)
        model = TableModel([[0.5, 0.5], [0.98, 0.02]])
        cfg = AcquisitionConfig(jitter_scale=0.0)
        result = select_question(
            model, model.pool, self.KINDS, np.array([0, 1]), remaining_budget=10.0, config=cfg
        )
        # class best entropy ln2 = 0.693 at unit cost; all-m1 best is the same
        # 0.693 but at cost_scale(0.25) = 0.397, so the cheap kind wins
        assert result.kind_index == 1
        assert result.index_value == pytest.approx(math.log(2) / cost_scale(0.25), abs=1e-9)

    def test_single_affordable_kind_is_chosen_despite_jitter(self):
        model = TableModel([[0.5, 0.5], [0.9, 0.1]])
        cfg = AcquisitionConfig(jitter_scale=5.0)
        result = select_question(
            model, model.pool, self.KINDS, np.array([0, 1]), remaining_budget=0.3, config=cfg
        )
        assert result.kind_index == 1  # class (cost 1) unaffordable at 0.3

    def test_unit_costs_and_zero_jitter_reduce_to_max_entropy(self):
        model = TableModel([[0.55, 0.45], [0.7, 0.3], [0.9, 0.1]])
        kinds = [QuestionKind("class")]
        cfg = AcquisitionConfig(jitter_scale=0.0)
        result = select_question(model, model.pool, kinds, np.arange(3), 10.0, cfg)
        assert result.kind_index == 0
        assert result.question.members == (0,)
        assert result.index_value == pytest.approx(result.entropy, abs=1e-15)

    def test_zero_jitter_selection_is_deterministic(self):
        rng_rows = np.random.default_rng(5).dirichlet(np.ones(3), size=10)
        model = TableModel(rng_rows)
        kinds = [QuestionKind("class"), QuestionKind("all", m=2, cost=0.2)]
        cfg = AcquisitionConfig(jitter_scale=0.0)
        picks = {
            select_question(
                model, model.pool, kinds, np.arange(10), 10.0, cfg,
                rng=np.random.default_rng(42),
            ).question
            for _ in range(5)
        }
        assert len(picks) == 1

    def test_common_cost_scaling_preserves_the_argmax(self):
        rng_rows = np.random.default_rng(6).dirichlet(np.ones(3), size=10)
        model = TableModel(rng_rows)
        cfg = AcquisitionConfig(jitter_scale=0.0)
        for rho in (0.5, 2.0, 7.5):
            kinds_a = [QuestionKind("class"), QuestionKind("any", m=2, cost=0.2)]
            kinds_b = [QuestionKind("class"), QuestionKind("any", m=2, cost=0.2 * rho)]
            res_a = select_question(
                model, model.pool, kinds_a[1:], np.arange(10), 10.0, cfg,
                rng=np.random.default_rng(3),
            )
            res_b = select_question(
                model, model.pool, kinds_b[1:], np.arange(10), 100.0, cfg,
                rng=np.random.default_rng(3),
            )
            assert res_a.question.members == res_b.question.members
            assert res_a.question.target_class == res_b.question.target_class
            ratio = res_b.index_value / res_a.index_value
            assert ratio == pytest.approx(rho ** (-2.0 / 3.0), rel=1e-9)

    def test_nothing_affordable_raises(self):
        model = TableModel([[0.5, 0.5]])
        with pytest.raises(NoFeasibleQuestionError):
            select_question(
                model, model.pool, [QuestionKind("class")], np.array([0]), remaining_budget=0.5
            )

    def test_infeasible_kinds_are_skipped_not_chosen(self):
        model = TableModel([[0.5, 0.5], [0.6, 0.4]])
        kinds = [QuestionKind("class"), QuestionKind("all", m=5, cost=0.1)]
        result = select_question(model, model.pool, kinds, np.array([0, 1]), 10.0)
        assert result.kind_index == 0
        assert [k.kind_index for k in result.per_kind] == [0]
