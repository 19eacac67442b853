"""Shared fixtures: an exactly-controllable probability model and random
knowledge-base factories used across the test modules."""

from __future__ import annotations

import numpy as np
import pytest

from alquest.questions import KnowledgeBase, QuestionKind, QuestionPoint


class TableModel:
    """A model whose probabilities are looked up by point index.

    The pool is the index column [[0], [1], ...]; ``predict_proba`` returns
    the preset row for each index, so tests control every probability
    exactly. Scores are the log-probabilities (softmax of scores gives the
    table back).
    """

    def __init__(self, table):
        self.table = np.atleast_2d(np.asarray(table, dtype=float))
        self.n_classes = self.table.shape[1]

    @property
    def pool(self) -> np.ndarray:
        return np.arange(len(self.table), dtype=float)[:, None]

    def predict_proba(self, X):
        idx = np.atleast_2d(np.asarray(X, dtype=float))[:, 0].astype(int)
        return self.table[idx]

    def scores(self, X):
        return np.log(np.clip(self.predict_proba(X), 1e-300, None))


@pytest.fixture
def table_model_factory():
    return TableModel


MIXED_KINDS = (
    QuestionKind("class"),
    QuestionKind("all", m=2, cost=0.2),
    QuestionKind("any", m=2, cost=0.2),
    QuestionKind("all", m=1, cost=0.25),
    QuestionKind("any", m=3, cost=0.3),
)


def make_random_kb(rng, n_points=12, n_features=3, n_classes=3, n_records=8):
    """A pool plus a knowledge base mixing all three question families.

    Answers are drawn at random (not from any ground truth); losses and
    gradients must be well defined regardless of answer consistency.
    """
    X = rng.normal(size=(n_points, n_features))
    kb = KnowledgeBase(X, n_classes, n_kinds=len(MIXED_KINDS))
    for _ in range(n_records):
        k = int(rng.integers(len(MIXED_KINDS)))
        kind = MIXED_KINDS[k]
        members = tuple(sorted(rng.choice(n_points, size=kind.m, replace=False).tolist()))
        if kind.family == "class":
            kb.add(0, QuestionPoint(kind, members), int(rng.integers(1, n_classes + 1)))
        else:
            q = QuestionPoint(kind, members, int(rng.integers(1, n_classes + 1)))
            kb.add(k, q, int(rng.integers(2)))
    return X, kb


@pytest.fixture
def random_kb_factory():
    return make_random_kb
