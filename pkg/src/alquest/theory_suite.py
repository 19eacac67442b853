"""Runnable property suites for the theory module.

Each suite returns (name, passed, detail); the CLI ``theory-check``
subcommand prints one line per suite and exits nonzero on any failure.
The acceptance tests reuse these functions so the command line and the
test suite agree by construction.
"""

from __future__ import annotations

import math
from typing import List, Tuple

import numpy as np
from scipy.special import xlogy

from .data import make_blobs, train_holdout_split
from .engine import SimulatedOracle, evaluate
from .models import LinearSoftmaxModel
from .questions import answer_distribution
from .theory import (
    SafeSamplerConfig,
    binary_entropy,
    binary_entropy_inverse,
    entropy_bounds_at_true_prob,
    entropy_lower_for_gap,
    entropy_upper_for_gap,
    gap_condition,
    partition_confidence_regions,
    sample_safe_question,
)

LN2 = math.log(2.0)


def _entropy_of_scores(h: np.ndarray) -> float:
    z = h - h.max()
    p = np.exp(z)
    p /= p.sum()
    return float(-xlogy(p, p).sum())


def check_inverse_binary_entropy(grid: int = 100) -> Tuple[str, bool, str]:
    """Round trip: binary entropy of the inverse returns the input."""
    worst = 0.0
    for en in np.linspace(0.0, LN2, grid):
        x = binary_entropy_inverse(float(en))
        worst = max(worst, abs(binary_entropy(x) - en))
    ok = worst < 1e-9 and binary_entropy_inverse(LN2) == 0.5 and binary_entropy_inverse(0.0) < 1e-10
    return "inverse-binary-entropy round trip", ok, f"max round-trip error {worst:.2e}"


def check_entropy_range(trials: int = 10_000, seed: int = 0) -> Tuple[str, bool, str]:
    """Softmax entropy always lies in the band implied by the true-class prob."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n_classes = int(rng.integers(2, 9))
        h = rng.normal(scale=3.0, size=n_classes)
        p = np.exp(h - h.max())
        p /= p.sum()
        label = int(rng.integers(n_classes))
        en = float(-xlogy(p, p).sum())
        lower, upper = entropy_bounds_at_true_prob(float(p[label]), n_classes)
        worst = max(worst, lower - en, en - upper)
    ok = worst <= 1e-12
    return "true-class entropy range", ok, f"max bound violation {worst:.2e} over {trials} draws"


def check_gap_bounds(trials: int = 1000, seed: int = 1) -> Tuple[str, bool, str]:
    """Score-gap entropy bounds, their perturbed shifts, and attainment.

    Perturbations move a single score coordinate by d <= gap; along these
    directions the gap moves by at most d, which is the regime the
    shifted bounds describe.
    """
    rng = np.random.default_rng(seed)
    checked = perturbed = 0
    worst = 0.0
    attain_worst = 0.0
    while checked < trials:
        n_classes = int(rng.integers(2, 9))
        h = rng.normal(scale=2.0, size=n_classes)
        top = np.sort(h)[::-1]
        gap = float(top[0] - top[1])
        if n_classes > 3 and not gap_condition(gap, n_classes):
            continue
        checked += 1
        en = _entropy_of_scores(h)
        lo, up = entropy_lower_for_gap(gap), entropy_upper_for_gap(gap, n_classes)
        worst = max(worst, lo - en, en - up)

        # attainment: the vector (gap, 0, ..., 0) has entropy equal to the bound
        peaked = np.zeros(n_classes)
        peaked[0] = gap
        attain_worst = max(attain_worst, abs(_entropy_of_scores(peaked) - up))

        # perturb one coordinate by d <= gap, keeping the shifted condition
        d = float(rng.uniform(0.0, gap)) if gap > 0 else 0.0
        if d <= 0:
            continue
        if n_classes > 3 and not gap_condition(gap - d, n_classes):
            continue
        coord = int(rng.integers(n_classes))
        sign = 1.0 if rng.random() < 0.5 else -1.0
        h2 = h.copy()
        h2[coord] += sign * d
        en2 = _entropy_of_scores(h2)
        lo2 = entropy_lower_for_gap(gap + d)
        up2 = entropy_upper_for_gap(gap - d, n_classes)
        worst = max(worst, lo2 - en2, en2 - up2)
        perturbed += 1
    ok = worst <= 1e-9 and attain_worst <= 1e-12
    return (
        "score-gap entropy bounds",
        ok,
        f"{checked} base + {perturbed} perturbed draws, max violation {worst:.2e}, "
        f"attainment error {attain_worst:.2e}",
    )


def check_safe_sampler(
    draws: int = 200,
    delta_m: float = 0.05,
    m: int = 2,
    min_expected_rate: float = 0.85,
    seed: int = 2,
) -> Tuple[str, bool, str]:
    """An accurate model's sampled group questions get their predicted answers."""
    ds = make_blobs(4, 1000, n_features=2, separation=8.0, seed=seed)
    ds = train_holdout_split(ds, 0.4, seed=seed)
    px, py = ds.pool()
    hx, hy = ds.holdout()
    model = LinearSoftmaxModel(ds.n_classes, ds.n_features, seed=seed)
    model.fit(px, py)
    accuracy, _ = evaluate(model, hx, hy)
    if accuracy < 0.95:
        return "safe-sampler expected answers", False, f"reference model too weak ({accuracy:.3f})"
    partition = partition_confidence_regions(model, px, m=m, delta_m=delta_m)
    cfg = SafeSamplerConfig(pi_all=0.5, pi_any=0.5, m=m, delta_m=delta_m, seed=seed)
    rng = np.random.default_rng(seed)
    oracle = SimulatedOracle(py)
    hits = 0
    for _ in range(draws):
        q = sample_safe_question(partition, cfg, rng=rng)
        dist = answer_distribution(model, px, q)
        predicted = max(dist, key=dist.get)
        if oracle.answer(q) == predicted:
            hits += 1
    rate = hits / draws
    return (
        "safe-sampler expected answers",
        rate >= min_expected_rate,
        f"expected-answer rate {rate:.3f} over {draws} draws (model accuracy {accuracy:.3f})",
    )


def run_theory_suites(trials: int = 1000) -> List[Tuple[str, bool, str]]:
    return [
        check_inverse_binary_entropy(),
        check_entropy_range(trials=max(trials, 10_000)),
        check_gap_bounds(trials=trials),
        check_safe_sampler(),
    ]
