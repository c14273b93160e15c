"""Minority oversampling by synthetic interpolation (SMOTE).

A synthetic sample is a point on the segment between a minority row x and
one of its k nearest minority neighbours x_r:

    values = x + k_draw * (x_r - x),   k_draw uniform in [0, 1]

Because the feature domain is ordinal codes, the interpolated vector is
rounded back to the nearest valid code (half-way rounds down) so the
output dataset stays closed under the schema.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data_model import Dataset, minority_label


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    target_ratio: float = 1.0  # 1.0 = minority matches the majority count
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be at least 1")
        if not 0.0 < self.target_ratio <= 1.0:
            raise ValueError("target_ratio must be in (0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class SyntheticSample:
    """One synthesis record: the pre-rounding vector and its rounded codes,
    plus the parent/neighbour rows and interpolation draw that produced it."""

    values: np.ndarray
    rounded: np.ndarray
    parent_index: int
    neighbor_index: int
    k_draw: float


def minority_neighbors(d: Dataset, i: int, k: int) -> list[int]:
    """Indices of the up-to-k nearest minority rows to minority row i.

    Distance is Euclidean over ordinal codes; ties break toward the lower
    row index. Row i itself is excluded.
    """
    label = minority_label(d)
    if d.y[i] != label:
        raise ValueError(f"row {i} is not a minority-class row")
    candidates = np.flatnonzero(d.y == label)
    if len(candidates) < 2:
        raise ValueError("insufficient minority samples: need at least 2 rows")
    candidates = candidates[candidates != i]
    # squared distances stay integral, so tie comparison is exact
    diffs = d.X[candidates] - d.X[i]
    sq_dist = np.einsum("ij,ij->i", diffs, diffs)
    order = np.lexsort((candidates, sq_dist))
    return [int(candidates[j]) for j in order[: min(k, len(candidates))]]


def synthesize(x: np.ndarray, x_r: np.ndarray, k_draw: float, schema) -> SyntheticSample:
    """Interpolate between two code vectors and round to valid codes."""
    x = np.asarray(x, dtype=np.float64)
    x_r = np.asarray(x_r, dtype=np.float64)
    if x.shape != x_r.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {x_r.shape}")
    if not 0.0 <= k_draw <= 1.0:
        raise ValueError(f"k_draw must be in [0, 1], got {k_draw}")
    values = x + k_draw * (x_r - x)
    # nearest code, half-way rounding down: ceil(v - 0.5)
    rounded = np.ceil(values - 0.5).astype(np.int64)
    limits = np.array([len(f.levels) - 1 for f in schema], dtype=np.int64)
    rounded = np.clip(rounded, 0, limits)
    return SyntheticSample(values=values, rounded=rounded, parent_index=-1,
                           neighbor_index=-1, k_draw=k_draw)


def smote_details(d: Dataset, cfg: SmoteConfig) -> tuple[Dataset, list[SyntheticSample]]:
    """Oversample and also return the per-sample synthesis records."""
    label = minority_label(d)
    n_minority = int((d.y == label).sum())
    n_majority = d.n_rows - n_minority
    needed = round(cfg.target_ratio * n_majority) - n_minority
    if needed <= 0:
        return d, []

    minority_rows = np.flatnonzero(d.y == label)
    if len(minority_rows) < 2:
        raise ValueError("insufficient minority samples: need at least 2 rows")
    neighbors = {int(i): minority_neighbors(d, int(i), cfg.k_neighbors)
                 for i in minority_rows}

    rng = np.random.default_rng(cfg.seed)
    records: list[SyntheticSample] = []
    new_X = np.empty((needed, d.n_features), dtype=np.int64)
    for s in range(needed):
        parent = int(minority_rows[s % len(minority_rows)])
        options = neighbors[parent]
        neighbor = options[int(rng.integers(len(options)))]
        k_draw = float(rng.random())
        sample = synthesize(d.X[parent], d.X[neighbor], k_draw, d.schema)
        sample = replace(sample, parent_index=parent, neighbor_index=neighbor)
        records.append(sample)
        new_X[s] = sample.rounded

    X = np.vstack([d.X, new_X])
    y = np.concatenate([d.y, np.full(needed, label, dtype=np.int64)])
    synthetic = np.concatenate([d.synthetic, np.ones(needed, dtype=bool)])
    return replace(d, X=X, y=y, synthetic=synthetic), records


def smote_oversample(d: Dataset, cfg: SmoteConfig) -> Dataset:
    """Append synthetic minority rows until the class ratio hits the target.

    Parents cycle round-robin over the minority rows in ascending row
    order; the neighbour pick and interpolation draw come from a seeded
    RNG, so the output is a pure function of (dataset, config). Original
    rows are kept unchanged as a prefix of the result.
    """
    balanced, _ = smote_details(d, cfg)
    return balanced
