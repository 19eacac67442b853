"""Dataset ingestion and synthesis.

CSV files with a header row are the only ingestion format; labels are
remapped to 1..L in first-occurrence order and every feature cell must
parse as a finite number (errors name the offending row and column).
``make_blobs`` generates the well-separated Gaussian pools used by the
benchmark harness and tests.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np


class DatasetError(ValueError):
    """A dataset failed validation or parsing."""


@dataclass
class Dataset:
    """Features plus hidden labels, with an optional pool/holdout split."""

    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    holdout_mask: Optional[np.ndarray] = None
    label_names: Tuple[str, ...] = ()
    display: Optional[List[str]] = None

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.ndim != 2:
            raise DatasetError("features must be a 2-D matrix")
        if not np.isfinite(self.features).all():
            raise DatasetError("features must be finite")
        if self.labels.shape != (len(self.features),):
            raise DatasetError("need exactly one label per row")
        if len(self.labels) and (self.labels.min() < 1 or self.labels.max() > self.n_classes):
            raise DatasetError(f"labels must lie in 1..{self.n_classes}")
        if self.holdout_mask is not None:
            self.holdout_mask = np.asarray(self.holdout_mask, dtype=bool)
            if self.holdout_mask.shape != (len(self.features),):
                raise DatasetError("holdout mask must cover every row")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def pool(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.holdout_mask is None:
            return self.features, self.labels
        keep = ~self.holdout_mask
        return self.features[keep], self.labels[keep]

    def holdout(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        if self.holdout_mask is None:
            return None
        return self.features[self.holdout_mask], self.labels[self.holdout_mask]

    def pool_display(self) -> Optional[List[str]]:
        if self.display is None:
            return None
        if self.holdout_mask is None:
            return self.display
        return [d for d, h in zip(self.display, self.holdout_mask) if not h]


def load_csv(path, label_column: str, display_column: Optional[str] = None) -> Dataset:
    """Load a header-CSV: one label column, optional display column, numeric rest."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file, expected a header row")
        if label_column not in header:
            raise DatasetError(f"{path}: no column named {label_column!r} in header")
        label_pos = header.index(label_column)
        display_pos = None
        if display_column is not None:
            if display_column not in header:
                raise DatasetError(f"{path}: no column named {display_column!r} in header")
            display_pos = header.index(display_column)
        feature_pos = [
            i for i in range(len(header)) if i != label_pos and i != display_pos
        ]
        feature_names = [header[i] for i in feature_pos]
        rows: List[List[float]] = []
        raw_labels: List[str] = []
        display: List[str] = []
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DatasetError(
                    f"{path}: row {row_no} has {len(row)} cells, header has {len(header)}"
                )
            values = []
            for i in feature_pos:
                cell = row[i].strip()
                if cell == "":
                    raise DatasetError(
                        f"{path}: missing value at row {row_no}, column {header[i]!r}"
                    )
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"{path}: non-numeric cell {cell!r} at row {row_no}, column {header[i]!r}"
                    )
                if not math.isfinite(v):
                    raise DatasetError(
                        f"{path}: non-finite value at row {row_no}, column {header[i]!r}"
                    )
                values.append(v)
            label_cell = row[label_pos].strip()
            if label_cell == "":
                raise DatasetError(
                    f"{path}: missing label at row {row_no}, column {label_column!r}"
                )
            rows.append(values)
            raw_labels.append(label_cell)
            if display_pos is not None:
                display.append(row[display_pos])
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    seen: dict = {}
    labels = []
    for name in raw_labels:
        if name not in seen:
            seen[name] = len(seen) + 1
        labels.append(seen[name])
    return Dataset(
        features=np.asarray(rows, dtype=float),
        labels=np.asarray(labels, dtype=int),
        n_classes=len(seen),
        label_names=tuple(seen.keys()),
        display=display if display_pos is not None else None,
    )


def save_csv(dataset: Dataset, path, label_column: str = "label") -> None:
    """Write features + labels with a header row (``load_csv``'s inverse)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        names = [f"x{i}" for i in range(dataset.n_features)]
        writer.writerow(names + [label_column])
        for row, label in zip(dataset.features, dataset.labels):
            if dataset.label_names:
                label_out = dataset.label_names[label - 1]
            else:
                label_out = label
            writer.writerow([repr(float(v)) for v in row] + [label_out])


def make_blobs(
    n_classes: int,
    size: int,
    n_features: int = 2,
    separation: float = 8.0,
    seed: int = 0,
) -> Dataset:
    """Balanced unit-covariance Gaussian clusters with a minimum mean gap.

    Cluster means are drawn at random and rescaled so the closest pair
    sits exactly ``separation`` apart; class sizes differ by at most one
    and rows arrive shuffled. Deterministic per seed.
    """
    if n_classes < 2:
        raise DatasetError("need at least two classes")
    if size < n_classes:
        raise DatasetError("need at least one point per class")
    rng = np.random.default_rng(seed)
    while True:
        centers = rng.normal(size=(n_classes, n_features))
        gaps = [
            np.linalg.norm(centers[i] - centers[j])
            for i in range(n_classes)
            for j in range(i + 1, n_classes)
        ]
        min_gap = min(gaps)
        if min_gap > 1e-9:
            break
    centers *= separation / min_gap
    base, extra = divmod(size, n_classes)
    sizes = [base + (1 if c < extra else 0) for c in range(n_classes)]
    features = []
    labels = []
    for c, count in enumerate(sizes):
        features.append(centers[c] + rng.standard_normal(size=(count, n_features)))
        labels.extend([c + 1] * count)
    X = np.vstack(features)
    y = np.asarray(labels, dtype=int)
    order = rng.permutation(size)
    return Dataset(features=X[order], labels=y[order], n_classes=n_classes)


def train_holdout_split(dataset: Dataset, holdout_fraction: float, seed: int = 0) -> Dataset:
    """Mark a random disjoint holdout; every holdout class must appear in the pool."""
    if not 0.0 < holdout_fraction < 1.0:
        raise DatasetError("holdout_fraction must lie in (0, 1)")
    n = len(dataset)
    n_hold = int(round(holdout_fraction * n))
    if n_hold < 1 or n_hold >= n:
        raise DatasetError("holdout split leaves an empty side")
    rng = np.random.default_rng(seed)
    mask = np.zeros(n, dtype=bool)
    mask[rng.choice(n, size=n_hold, replace=False)] = True
    pool_classes = set(dataset.labels[~mask].tolist())
    hold_classes = set(dataset.labels[mask].tolist())
    missing = hold_classes - pool_classes
    if missing:
        raise DatasetError(
            f"holdout contains classes absent from the pool: {sorted(missing)}"
        )
    return Dataset(
        features=dataset.features,
        labels=dataset.labels,
        n_classes=dataset.n_classes,
        holdout_mask=mask,
        label_names=dataset.label_names,
        display=dataset.display,
    )
