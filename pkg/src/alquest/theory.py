"""Executable theory checks behind the acquisition design.

The pieces here make the supporting mathematics testable at desk scale:
the inverse of binary entropy, the entropy range implied by the true
class's predicted probability, upper/lower entropy bounds as functions of
the top-two score gap, the confidence-region partition of a pool, and
the low-risk group-question sampler built on that partition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import xlogy

from .questions import ALL, ANY, QuestionKind, QuestionPoint

LN2 = math.log(2.0)


class NoSafeQuestionError(RuntimeError):
    """Both confidence regions are too small to build a group question."""


def binary_entropy(x: float) -> float:
    """-x ln x - (1-x) ln(1-x), with 0 ln 0 = 0."""
    return float(-(xlogy(x, x) + xlogy(1.0 - x, 1.0 - x)))


def binary_entropy_inverse(en: float, tol: float = 1e-12) -> float:
    """The unique x in [0, 1/2] whose binary entropy equals ``en`` (bisection)."""
    if not -1e-12 <= en <= LN2 + 1e-12:
        raise ValueError(f"entropy {en} outside [0, ln 2]")
    en = min(max(en, 0.0), LN2)
    if en == 0.0:
        return 0.0
    if en == LN2:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < en:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def entropy_bounds_at_true_prob(p_true: float, n_classes: int) -> Tuple[float, float]:
    """Entropy range of any softmax vector whose true-class probability is p_true.

    Lower bound: the binary entropy of p_true (the rest lumped together).
    Upper bound: the rest spread uniformly over the other L-1 classes.
    """
    if not 0.0 < p_true < 1.0:
        raise ValueError("p_true must lie in (0, 1)")
    if n_classes < 2:
        raise ValueError("need at least two classes")
    lower = binary_entropy(p_true)
    upper = float(-(xlogy(p_true, p_true)) - (1.0 - p_true) * math.log((1.0 - p_true) / (n_classes - 1)))
    return lower, upper


def entropy_upper_for_gap(gap: float, n_classes: int) -> float:
    """Entropy of the score vector (gap, 0, ..., 0) after softmax.

    This is the largest entropy attainable at a given top-two score gap
    (all runners-up tied), hence an upper bound for admissible vectors.
    """
    if gap < 0:
        raise ValueError("gap must be >= 0")
    if n_classes < 2:
        raise ValueError("need at least two classes")
    # stable softmax of (gap, 0, ..., 0): p1 = 1 / (1 + (L-1) e^-gap)
    e = math.exp(-gap)
    denom = 1.0 + (n_classes - 1) * e
    p1 = 1.0 / denom
    pj = e / denom
    return float(-(xlogy(p1, p1)) - (n_classes - 1) * xlogy(pj, pj))


def entropy_lower_for_gap(gap: float) -> float:
    """Binary entropy of sigmoid(gap): the two-class entropy at that score gap."""
    if gap < 0:
        raise ValueError("gap must be >= 0")
    return entropy_upper_for_gap(gap, 2)


def gap_condition(gap: float, n_classes: int) -> bool:
    """Admissibility condition gap * e**gap >= (L - 3) / e for the gap bounds."""
    return gap * math.exp(gap) >= (n_classes - 3) / math.e


@dataclass
class RegionPartition:
    """Pool split by prediction confidence: high / low / uncertain.

    ``high_by_class[c-1]`` holds the indices predicted class c with
    max-probability >= 1 - delta_m; ``low_by_class`` the mid-confidence
    band [max(1/L, 1 - 0.5**(1/m)), 1 - delta_m); ``uncertain`` the rest.
    """

    high_by_class: List[np.ndarray]
    low_by_class: List[np.ndarray]
    uncertain: np.ndarray
    delta_m: float
    m: int

    @property
    def high(self) -> np.ndarray:
        return np.concatenate(self.high_by_class) if self.high_by_class else np.array([], dtype=int)

    @property
    def low(self) -> np.ndarray:
        return np.concatenate(self.low_by_class) if self.low_by_class else np.array([], dtype=int)


def low_band_floor(m: int, n_classes: int) -> float:
    """Lower edge of the low-confidence band: max(1/L, 1 - 0.5**(1/m))."""
    return max(1.0 / n_classes, 1.0 - 0.5 ** (1.0 / m))


def partition_confidence_regions(model, X: np.ndarray, m: int, delta_m: float) -> RegionPartition:
    """Assign every pool point to exactly one confidence region."""
    if m < 1:
        raise ValueError("m must be >= 1")
    cap = 1.0 - 0.5 ** (1.0 / m)
    if not 0.0 < delta_m <= cap:
        raise ValueError(f"delta_m must lie in (0, {cap:.6f}] for m={m}")
    X = np.asarray(X, dtype=float)
    probs = np.atleast_2d(model.predict_proba(X))
    n_classes = probs.shape[1]
    max_prob = probs.max(axis=1)
    arg = probs.argmax(axis=1)
    floor = low_band_floor(m, n_classes)
    high_mask = max_prob >= 1.0 - delta_m
    low_mask = (~high_mask) & (max_prob >= floor)
    uncertain = np.flatnonzero(~(high_mask | low_mask))
    high_by_class = [np.flatnonzero(high_mask & (arg == c)) for c in range(n_classes)]
    low_by_class = [np.flatnonzero(low_mask & (arg == c)) for c in range(n_classes)]
    return RegionPartition(high_by_class, low_by_class, uncertain, float(delta_m), int(m))


@dataclass
class SafeSamplerConfig:
    """Mixture weights and shape of the low-risk question sampler."""

    pi_all: float = 0.5
    pi_any: float = 0.5
    m: int = 2
    delta_m: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.pi_all < 0 or self.pi_any < 0:
            raise ValueError("mixture weights must be >= 0")
        if abs(self.pi_all + self.pi_any - 1.0) > 1e-9:
            raise ValueError("mixture weights must sum to 1")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        cap = 1.0 - 0.5 ** (1.0 / self.m)
        if not 0.0 < self.delta_m <= cap:
            raise ValueError(f"delta_m must lie in (0, {cap:.6f}] for m={self.m}")


def sample_safe_question(
    partition: RegionPartition,
    config: SafeSamplerConfig,
    rng: Optional[np.random.Generator] = None,
) -> QuestionPoint:
    """Draw a group question expected to receive its predicted answer.

    With probability pi_all: an ``all`` question whose members come from
    one class's high-confidence region (class drawn proportional to
    region size); otherwise an ``any`` question from a low-confidence
    region. Members are drawn without replacement, so a region must hold
    at least m points to be eligible; if the drawn branch has no eligible
    class the other branch is tried before giving up.
    """
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    m = config.m
    first_all = bool(rng.random() < config.pi_all)
    order = (ALL, ANY) if first_all else (ANY, ALL)
    for family in order:
        regions = partition.high_by_class if family == ALL else partition.low_by_class
        sizes = np.array([len(r) for r in regions], dtype=float)
        sizes[sizes < m] = 0.0
        total = sizes.sum()
        if total == 0:
            continue
        class0 = int(rng.choice(len(regions), p=sizes / total))
        members = rng.choice(regions[class0], size=m, replace=False)
        kind = QuestionKind(family, m=m, cost=1.0)
        return QuestionPoint(kind, tuple(sorted(int(i) for i in members)), class0 + 1)
    raise NoSafeQuestionError(
        "neither confidence region holds enough points for a group question"
    )
