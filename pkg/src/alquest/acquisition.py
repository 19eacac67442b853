"""Question acquisition.

For each configured kind the best concrete question is the entropy
maximizer over the candidate set: an exact scan for class questions, and
strict-improvement random-exchange hill climbing (with restarts) for
group questions, where each proposed member set is scored at its best
target class. The kind to actually ask is the argmax of the
cost-normalized index  entropy / cost**exponent + jitter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import xlogy

from .questions import (
    ALL,
    CLASS,
    QuestionKind,
    QuestionPoint,
    answer_cross_entropy,
)


class InfeasibleKindError(ValueError):
    """The candidate set is too small to build a question of this kind."""


class NoFeasibleQuestionError(RuntimeError):
    """No configured kind is both affordable and feasible."""


@dataclass
class AcquisitionConfig:
    """Knobs for the per-kind optimizer and the kind-selection index."""

    exchange_iters: int = 60
    restarts: int = 3
    jitter_scale: float = 0.02
    cost_exponent: float = 2.0 / 3.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.exchange_iters < 1:
            raise ValueError("exchange_iters must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.jitter_scale < 0:
            raise ValueError("jitter_scale must be >= 0")


@dataclass
class KindBest:
    """Audit record of one kind's optimized question."""

    kind_index: int
    question: QuestionPoint
    entropy: float
    index_value: float


@dataclass
class AcquisitionResult:
    kind_index: int
    question: QuestionPoint
    entropy: float
    index_value: float
    per_kind: List[KindBest] = field(default_factory=list)


def cost_scale(cost: float, exponent: float = 2.0 / 3.0) -> float:
    """The increasing cost normalizer cost**exponent (1 at unit cost)."""
    if not cost > 0:
        raise ValueError("cost must be positive")
    return float(cost) ** exponent


def _binary_entropy(p: float) -> float:
    q = 1.0 - p
    return float(-(xlogy(p, p) + xlogy(q, q)))


def _best_class_entropy(probs: np.ndarray, positions, family: str) -> Tuple[float, int]:
    """Entropy of an all/any member set at its best target class.

    Returns (entropy, 0-based class). Treating the class as the exact
    argmax for each proposed member set removes the coupled local maxima
    that plain (members, class) hill climbing falls into.
    """
    sub = probs[positions]
    if family == ALL:
        prods = sub.prod(axis=0)
    else:
        prods = (1.0 - sub).prod(axis=0)
    entropies = -(xlogy(prods, prods) + xlogy(1.0 - prods, 1.0 - prods))
    class0 = int(np.argmax(entropies))
    return float(entropies[class0]), class0


def optimize_question_point(
    model,
    X: np.ndarray,
    kind: QuestionKind,
    candidates: np.ndarray,
    config: Optional[AcquisitionConfig] = None,
    rng: Optional[np.random.Generator] = None,
    probs: Optional[np.ndarray] = None,
) -> Tuple[QuestionPoint, float]:
    """Best question of one kind over the candidate point set.

    Class questions are an exact linear scan. Group questions run
    ``restarts`` hill climbs of ``exchange_iters`` proposals each; a
    proposal swaps one member for a random non-member candidate, is
    scored at its best target class, and is accepted only on a strict
    entropy increase. The best configuration across restarts wins.
    """
    cfg = config if config is not None else AcquisitionConfig()
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    candidates = np.asarray(candidates, dtype=int)
    if candidates.size < kind.m:
        raise InfeasibleKindError(
            f"{kind.family} question needs {kind.m} candidates, have {candidates.size}"
        )
    if probs is None:
        probs = model.predict_proba(np.asarray(X, dtype=float)[candidates])
    n_cand, n_classes = probs.shape

    if kind.family == CLASS:
        entropies = -np.sum(xlogy(probs, probs), axis=1)
        best_pos = int(np.argmax(entropies))
        q = QuestionPoint(kind, (int(candidates[best_pos]),))
        return q, float(entropies[best_pos])

    m = kind.m
    best_ent = -1.0
    best_positions: Optional[np.ndarray] = None
    best_class0 = 0
    for _ in range(cfg.restarts):
        positions = rng.choice(n_cand, size=m, replace=False)
        ent, class0 = _best_class_entropy(probs, positions, kind.family)
        if n_cand > m:
            for _ in range(cfg.exchange_iters):
                # swap one member for a random non-member candidate
                slot = int(rng.integers(m))
                replacement = int(rng.integers(n_cand - m))
                for taken in sorted(int(p) for p in positions):
                    if replacement >= taken:
                        replacement += 1
                new_positions = positions.copy()
                new_positions[slot] = replacement
                new_ent, new_class0 = _best_class_entropy(probs, new_positions, kind.family)
                if new_ent > ent:
                    positions, ent, class0 = new_positions, new_ent, new_class0
        if ent > best_ent:
            best_ent = ent
            best_positions = positions.copy()
            best_class0 = class0
    members = tuple(sorted(int(candidates[p]) for p in best_positions))
    q = QuestionPoint(kind, members, best_class0 + 1)
    return q, float(best_ent)


def select_question(
    model,
    X: np.ndarray,
    kinds: List[QuestionKind],
    candidates: np.ndarray,
    remaining_budget: float,
    config: Optional[AcquisitionConfig] = None,
    rng: Optional[np.random.Generator] = None,
    true_model=None,
) -> AcquisitionResult:
    """Pick the kind (and its optimized question) with the best index.

    The index of kind k is numerator_k / cost_k**exponent + jitter, where
    the numerator is the optimized question's answer entropy, or its
    expected cross-entropy under ``true_model`` when one is supplied (the
    ideal baseline). Kinds that are unaffordable at the remaining budget
    or infeasible on the candidate set are skipped; ties break toward the
    lowest kind index.
    """
    cfg = config if config is not None else AcquisitionConfig()
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    candidates = np.asarray(candidates, dtype=int)
    X = np.asarray(X, dtype=float)
    probs = model.predict_proba(X[candidates]) if candidates.size else None

    evaluated: List[KindBest] = []
    best: Optional[KindBest] = None
    for k, kind in enumerate(kinds):
        if kind.cost > remaining_budget + 1e-12:
            continue
        if candidates.size < kind.m:
            continue
        q, entropy = optimize_question_point(
            model, X, kind, candidates, cfg, rng=rng, probs=probs
        )
        numerator = entropy
        if true_model is not None:
            numerator = answer_cross_entropy(true_model, model, X, q)
        index_value = numerator / cost_scale(kind.cost, cfg.cost_exponent)
        if cfg.jitter_scale > 0:
            index_value += float(rng.uniform(-cfg.jitter_scale, cfg.jitter_scale))
        entry = KindBest(k, q, entropy, index_value)
        evaluated.append(entry)
        if best is None or entry.index_value > best.index_value:
            best = entry
    if best is None:
        raise NoFeasibleQuestionError(
            "no question kind is affordable and feasible on this candidate set"
        )
    return AcquisitionResult(
        kind_index=best.kind_index,
        question=best.question,
        entropy=best.entropy,
        index_value=best.index_value,
        per_kind=evaluated,
    )
