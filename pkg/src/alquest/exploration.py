"""Distance-guided exploration/exploitation screening.

Before each acquisition the pool is screened against the already-touched
points: only points farther than a threshold d_s (in a model-guided score
metric by default) stay candidates. The thresholds shrink along an
arithmetic schedule ending at exactly 0, and the engine uses the first
level that keeps more than a ``rho`` fraction of the pool available, so
the loop drifts from exploration toward exploitation as knowledge
accumulates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist, pdist

METRICS = ("model", "euclidean", "mahalanobis")

# Pairwise-distance quantiles are estimated from at most this many points;
# beyond it the exact O(N^2) scan buys nothing for a 5th-percentile estimate.
QUANTILE_SAMPLE_LIMIT = 2000


def model_distance(model, x, x2) -> float:
    """Euclidean distance between the two points' pre-softmax score vectors."""
    h1 = np.atleast_1d(model.scores(x))
    h2 = np.atleast_1d(model.scores(x2))
    return float(np.linalg.norm(h1 - h2))


def _embed(model, X: np.ndarray, metric: str) -> np.ndarray:
    """Map points into the space where the chosen metric is Euclidean."""
    X = np.asarray(X, dtype=float)
    if metric == "model":
        return np.atleast_2d(model.scores(X))
    if metric == "euclidean":
        return X
    if metric == "mahalanobis":
        cov = np.cov(X, rowvar=False)
        cov = np.atleast_2d(cov) + 1e-9 * np.eye(X.shape[1])
        # whitening via Cholesky of the inverse covariance
        chol = np.linalg.cholesky(np.linalg.inv(cov))
        return X @ chol
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")


@dataclass(frozen=True)
class ThresholdSchedule:
    """Decreasing distance thresholds d_1 > ... > d_S = 0 plus the floor rho.

    A degenerate pool (all points at identical scores) yields an all-zero
    schedule, which is pure exploitation.
    """

    thresholds: Tuple[float, ...]
    rho: float

    def __post_init__(self) -> None:
        t = tuple(float(v) for v in self.thresholds)
        object.__setattr__(self, "thresholds", t)
        if len(t) < 1:
            raise ValueError("schedule needs at least one level")
        if t[-1] != 0.0:
            raise ValueError("the last threshold must be exactly 0")
        if any(b >= a for a, b in zip(t, t[1:])) and any(v != 0.0 for v in t):
            raise ValueError("thresholds must be strictly decreasing (or all zero)")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")

    @property
    def levels(self) -> int:
        return len(self.thresholds)


def build_schedule(
    model,
    X: np.ndarray,
    levels: int = 6,
    rho: float = 0.5,
    metric: str = "model",
    rng: Optional[np.random.Generator] = None,
) -> ThresholdSchedule:
    """Data-driven schedule: d_1 is the 5th-percentile pairwise distance.

    The remaining levels interpolate arithmetically down to d_S = 0. When
    the pool exceeds ``QUANTILE_SAMPLE_LIMIT`` points the quantile is
    estimated from a uniform subsample.
    """
    X = np.asarray(X, dtype=float)
    if len(X) < 2:
        raise ValueError("need at least two pool points to build a schedule")
    if levels < 2:
        raise ValueError("need at least two schedule levels")
    emb = _embed(model, X, metric)
    if len(emb) > QUANTILE_SAMPLE_LIMIT:
        rng = rng if rng is not None else np.random.default_rng(0)
        pick = rng.choice(len(emb), size=QUANTILE_SAMPLE_LIMIT, replace=False)
        emb = emb[pick]
    d1 = float(np.percentile(pdist(emb), 5.0))
    thresholds = tuple(d1 * (levels - s) / (levels - 1) for s in range(1, levels + 1))
    return ThresholdSchedule(thresholds=thresholds, rho=rho)


def distances_to_touched(
    model,
    X: np.ndarray,
    touched: np.ndarray,
    metric: str = "model",
) -> np.ndarray:
    """min-distance of every pool point to the touched set (inf when empty)."""
    X = np.asarray(X, dtype=float)
    touched = np.asarray(sorted(touched), dtype=int)
    if touched.size == 0:
        return np.full(len(X), np.inf)
    emb = _embed(model, X, metric)
    return cdist(emb, emb[touched]).min(axis=1)


def candidate_set(
    model,
    X: np.ndarray,
    kb,
    schedule: ThresholdSchedule,
    metric: str = "model",
) -> Tuple[np.ndarray, int]:
    """Candidates at the minimum level keeping more than rho*N points.

    Returns (sorted candidate indices, level s in 1..S). Touched points
    sit at distance 0 from themselves so the strict ``> d_s`` rule keeps
    them out at every level; if even the final level is empty (a
    degenerate metric collapsing untouched onto touched points), the
    untouched pool is returned as a last resort.
    """
    touched = kb.touched_points if hasattr(kb, "touched_points") else frozenset(kb)
    X = np.asarray(X, dtype=float)
    dist = distances_to_touched(model, X, np.fromiter(touched, dtype=int, count=len(touched)), metric)
    n = len(X)
    floor = schedule.rho * n
    last = None
    for s, d_s in enumerate(schedule.thresholds, start=1):
        mask = dist > d_s
        last = (np.flatnonzero(mask), s)
        if mask.sum() > floor:
            return last
    cands, s = last
    if cands.size == 0:
        untouched = np.setdiff1d(np.arange(n), np.fromiter(touched, dtype=int, count=len(touched)))
        return untouched, schedule.levels
    return cands, s
