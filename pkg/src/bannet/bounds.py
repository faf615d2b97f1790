"""Region partitions induced by hidden layers and the training-loss floors
they imply.

Each hidden layer splits the input space into the cells of a hyperplane
arrangement; grouping dataset rows by their activation pattern at depth k
yields a partition. No network sharing those layers can do better on the
training set than predicting the per-region label mean (squared error) or the
per-region majority label (0-1 error), which gives computable lower bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .model import BannModel, Dataset, hidden_pattern


@dataclass(frozen=True)
class RegionPartition:
    """Rows grouped by their exact activation pattern after hidden layer k."""

    layer_depth: int
    patterns: tuple[tuple[float, ...], ...]
    indices: tuple[np.ndarray, ...]

    @property
    def n_regions(self) -> int:
        return len(self.indices)

    @property
    def n_rows(self) -> int:
        return sum(len(idx) for idx in self.indices)


def partition_regions(model: BannModel, dataset: Dataset, k: int) -> RegionPartition:
    """Group dataset rows by equality of their layer-k activation pattern.

    Exact equality is safe: activation outputs are drawn from a two-element
    set, so patterns are discrete.
    """
    patterns = hidden_pattern(model, dataset.features, k)
    groups: dict[bytes, list[int]] = {}
    for i in range(patterns.shape[0]):
        groups.setdefault(patterns[i].tobytes(), []).append(i)
    keys = list(groups)  # first-occurrence order; deterministic
    width = patterns.shape[1]
    return RegionPartition(
        layer_depth=k,
        patterns=tuple(
            tuple(np.frombuffer(key, dtype=float, count=width)) for key in keys
        ),
        indices=tuple(np.array(groups[key], dtype=int) for key in keys),
    )


def regression_lower_bound(partition: RegionPartition, labels: np.ndarray) -> float:
    """Weighted sum over output coordinates and regions of the population
    variance of labels within the region (weights: region size / m). No
    squared-error training loss of a network inducing this partition can be
    lower."""
    labels = np.asarray(labels, dtype=float)
    if labels.ndim == 1:
        labels = labels[:, None]
    m = labels.shape[0]
    if partition.n_rows != m:
        raise DataError(
            f"partition covers {partition.n_rows} rows, labels have {m}"
        )
    bound = 0.0
    for idx in partition.indices:
        region = labels[idx]
        bound += len(idx) / m * float(np.var(region, axis=0).sum())
    return bound


def classification_lower_bound(partition: RegionPartition, labels: np.ndarray) -> float:
    """0-1-loss floor for binary labels in {-1, +1}: (1 - sum of weighted
    absolute per-region label means) / 2. Zero when every region is
    label-pure; at most 0.5."""
    labels = np.asarray(labels, dtype=float).reshape(-1)
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise DataError("classification bound requires labels exactly in {-1, +1}")
    m = labels.shape[0]
    if partition.n_rows != m:
        raise DataError(
            f"partition covers {partition.n_rows} rows, labels have {m}"
        )
    weighted = sum(
        len(idx) / m * abs(float(labels[idx].mean())) for idx in partition.indices
    )
    return (1.0 - weighted) / 2.0


def bound_chain(model: BannModel, dataset: Dataset) -> list[tuple[int, int, float]]:
    """(depth, region count, squared-error floor) for every hidden depth."""
    rows = []
    for k in range(1, model.depth):
        part = partition_regions(model, dataset, k)
        rows.append((k, part.n_regions, regression_lower_bound(part, dataset.labels)))
    return rows
