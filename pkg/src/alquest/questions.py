"""Question algebra for pool-based labeling.

Three question families are supported:

* ``class`` -- "what is the class of x?", answered with a class index,
* ``all``   -- "are all of x1..xm from class c?", answered yes/no,
* ``any``   -- "is any of x1..xm from class c?", answered yes/no.

The module defines the question data types, the model-predicted answer
distribution of each family, the per-question cross-entropy loss, the
aggregated loss over a knowledge base of answered questions, answer
entropy, and the expected cross-entropy criterion used by the ideal
baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

# Families. Yes/no answers are encoded as 1/0; class answers as 1..L.
CLASS = "class"
ALL = "all"
ANY = "any"
FAMILIES = (CLASS, ALL, ANY)

# Predicted probabilities are clipped to this open interval before any log:
# trained models can saturate numerically even though the math assumes
# interior probabilities.
PROB_FLOOR = 1e-12


def clamp_probability(p: float) -> float:
    """Clip a probability into [PROB_FLOOR, 1 - PROB_FLOOR] before a log."""
    if p < PROB_FLOOR:
        return PROB_FLOOR
    if p > 1.0 - PROB_FLOOR:
        return 1.0 - PROB_FLOOR
    return p


@dataclass(frozen=True)
class QuestionKind:
    """One configured question family with its group size and unit cost.

    ``class`` questions are the cost unit: they always have m=1 and cost=1.
    Group questions (``all``/``any``) may touch m >= 1 points at once and
    usually cost a fraction of a class query.
    """

    family: str
    m: int = 1
    cost: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown question family: {self.family!r}")
        if self.family == CLASS:
            if self.m != 1:
                raise ValueError("class questions address exactly one point (m=1)")
            if self.cost != 1.0:
                raise ValueError("class questions are the cost unit (cost=1)")
        else:
            if self.m < 1:
                raise ValueError("group questions need m >= 1")
            if not self.cost > 0:
                raise ValueError("question cost must be positive")

    @property
    def binary(self) -> bool:
        return self.family != CLASS

    def answer_set(self, n_classes: int) -> Tuple[int, ...]:
        """All legal answers: (0, 1) for groups, 1..L for class questions."""
        if self.binary:
            return (0, 1)
        return tuple(range(1, n_classes + 1))


@dataclass(frozen=True)
class QuestionPoint:
    """A concrete question: the kind plus its member points and target class.

    ``target_class`` is ignored for ``class`` questions and required
    (1-based) for group questions.
    """

    kind: QuestionKind
    members: Tuple[int, ...]
    target_class: Optional[int] = None

    def __post_init__(self) -> None:
        members = tuple(int(i) for i in self.members)
        object.__setattr__(self, "members", members)
        if len(members) != self.kind.m:
            raise ValueError(
                f"{self.kind.family} question expects {self.kind.m} members, got {len(members)}"
            )
        if len(set(members)) != len(members):
            raise ValueError("question members must be distinct")
        if any(i < 0 for i in members):
            raise ValueError("member indices must be non-negative")
        if self.kind.binary:
            if self.target_class is None:
                raise ValueError("group questions need a target class")
            if int(self.target_class) < 1:
                raise ValueError("target class is a 1-based class index")
            object.__setattr__(self, "target_class", int(self.target_class))

    def validate_against(self, n_points: int, n_classes: int) -> None:
        if any(i >= n_points for i in self.members):
            raise ValueError("question references a point outside the pool")
        if self.kind.binary and not (1 <= self.target_class <= n_classes):
            raise ValueError(
                f"target class {self.target_class} outside 1..{n_classes}"
            )

    def answer_set(self, n_classes: int) -> Tuple[int, ...]:
        return self.kind.answer_set(n_classes)


@dataclass(frozen=True)
class AnswerRecord:
    """An answered question; the unit stored in the knowledge base.

    ``step`` is a logical clock (not wall time) so that serialized run
    logs are bit-identical across reruns of the same seed.
    """

    question: QuestionPoint
    answer: int
    step: int = 0
    budget_spent: float = 0.0


class KnowledgeBase:
    """All answered questions, grouped by configured kind.

    Holds a reference to the pool feature matrix so losses and answer
    distributions can resolve member indices. Mutation (``add``) belongs
    to a single engine; reads are safe to share.
    """

    def __init__(self, pool: np.ndarray, n_classes: int, n_kinds: int = 1):
        pool = np.asarray(pool, dtype=float)
        if pool.ndim != 2:
            raise ValueError("pool must be a 2-D feature matrix")
        if not np.isfinite(pool).all():
            raise ValueError("pool features must be finite")
        if n_classes < 2:
            raise ValueError("need at least two classes")
        if n_kinds < 1:
            raise ValueError("need at least one question kind")
        self.pool = pool
        self.n_classes = int(n_classes)
        self.per_kind: List[List[AnswerRecord]] = [[] for _ in range(n_kinds)]
        self._touched: set[int] = set()

    @property
    def n_kinds(self) -> int:
        return len(self.per_kind)

    @property
    def touched_points(self) -> frozenset:
        """Indices of every pool point appearing in any answered question."""
        return frozenset(self._touched)

    @property
    def counts(self) -> Tuple[int, ...]:
        return tuple(len(d) for d in self.per_kind)

    def __len__(self) -> int:
        return sum(len(d) for d in self.per_kind)

    def records(self) -> Iterator[Tuple[int, AnswerRecord]]:
        for k, bucket in enumerate(self.per_kind):
            for rec in bucket:
                yield k, rec

    def add(
        self,
        kind_index: int,
        question: QuestionPoint,
        answer: int,
        step: int = 0,
        budget_spent: float = 0.0,
    ) -> AnswerRecord:
        if not (0 <= kind_index < self.n_kinds):
            raise ValueError(f"kind index {kind_index} outside 0..{self.n_kinds - 1}")
        question.validate_against(len(self.pool), self.n_classes)
        answer = int(answer)
        if answer not in question.answer_set(self.n_classes):
            raise ValueError(
                f"answer {answer} not in the answer set of a {question.kind.family} question"
            )
        rec = AnswerRecord(question, answer, step=step, budget_spent=budget_spent)
        self.per_kind[kind_index].append(rec)
        self._touched.update(question.members)
        return rec


def answer_distribution(model, X: np.ndarray, q: QuestionPoint) -> Dict[int, float]:
    """Model-predicted probability of each possible answer to ``q``.

    class: the softmax vector itself, keyed by 1-based class.
    all:   Pr(yes) = prod_j p_c(x_j).
    any:   Pr(no)  = prod_j (1 - p_c(x_j)).
    """
    X = np.asarray(X, dtype=float)
    members = np.asarray(q.members, dtype=int)
    if members.max(initial=0) >= len(X):
        raise ValueError("question references a point outside the pool")
    probs = model.predict_proba(X[members])
    n_classes = probs.shape[1]
    if q.kind.family == CLASS:
        row = probs[0]
        return {c + 1: float(row[c]) for c in range(n_classes)}
    c0 = q.target_class - 1
    if not (0 <= c0 < n_classes):
        raise ValueError(f"target class {q.target_class} outside 1..{n_classes}")
    pc = probs[:, c0]
    if q.kind.family == ALL:
        yes = float(np.prod(pc))
        return {1: yes, 0: 1.0 - yes}
    no = float(np.prod(1.0 - pc))
    return {0: no, 1: 1.0 - no}


def question_loss(predicted: Dict[int, float], observed: int) -> float:
    """Cross-entropy of one answered question: -log Pr(ans = observed)."""
    if observed not in predicted:
        raise ValueError(f"observed answer {observed} not in the predicted answer set")
    return -math.log(clamp_probability(predicted[observed]))


def aggregate_loss(model, kb: KnowledgeBase) -> float:
    """Mean cross-entropy over every answered question in the knowledge base.

    Each answered question counts once, whatever its group size; an empty
    knowledge base has loss 0. The regularization used during training is
    not part of this quantity.
    """
    total = 0.0
    count = 0
    for _, rec in kb.records():
        dist = answer_distribution(model, kb.pool, rec.question)
        total += question_loss(dist, rec.answer)
        count += 1
    if count == 0:
        return 0.0
    return total / count


def distribution_entropy(dist: Dict[int, float]) -> float:
    """Shannon entropy (nats) of an answer distribution, with 0 log 0 = 0."""
    acc = 0.0
    for p in dist.values():
        if p > 0.0:
            acc -= p * math.log(p)
    return acc


def answer_entropy(model, X: np.ndarray, q: QuestionPoint) -> float:
    """Entropy (nats) of the model's predicted answer distribution for ``q``."""
    return distribution_entropy(answer_distribution(model, X, q))


def answer_cross_entropy(true_model, model, X: np.ndarray, q: QuestionPoint) -> float:
    """Expected loss of ``model``'s answer prediction under ``true_model``.

    This is the cross-entropy -sum_a Pr_true(a) log Pr_model(a); it equals
    the answer entropy when the two models coincide and is otherwise
    larger (Gibbs' inequality).
    """
    true_dist = answer_distribution(true_model, X, q)
    pred_dist = answer_distribution(model, X, q)
    acc = 0.0
    for a, p_true in true_dist.items():
        if p_true > 0.0:
            acc -= p_true * math.log(clamp_probability(pred_dist[a]))
    return acc
