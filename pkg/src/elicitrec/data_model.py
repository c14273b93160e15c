"""Categorical dataset representation: CSV ingestion, ordinal encoding,
preprocessing, splitting, and a seeded synthetic generator.

Feature values are category strings encoded as ordinal codes (the index of
the string in the feature's level list). Codes are assigned by first
appearance when a schema is inferred from a file, or looked up when an
existing schema is supplied (the train/evaluate round trip).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

ROLE_CONTEXT = "context"
ROLE_TECHNIQUE = "technique"
_ROLES = (ROLE_CONTEXT, ROLE_TECHNIQUE)

#: Reserved CSV column carrying row provenance ("1" = synthetic).
PROVENANCE_COLUMN = "_synthetic"


def derive_seed(master: int, stream: int) -> int:
    """Independent child seed for one named stream of a master seed."""
    if master < 0 or stream < 0:
        raise ValueError("seeds and stream indices must be non-negative")
    return int(np.random.SeedSequence([master, stream]).generate_state(1)[0])


@dataclass(frozen=True)
class FeatureSchema:
    """One categorical feature: its name, role, and ordered level list."""

    name: str
    role: str
    levels: tuple[str, ...]

    def __post_init__(self):
        if self.role not in _ROLES:
            raise ValueError(f"unknown role {self.role!r} for feature {self.name!r}")
        if not self.levels:
            raise ValueError(f"feature {self.name!r} has no levels")
        if len(set(self.levels)) != len(self.levels):
            raise ValueError(f"feature {self.name!r} has duplicate levels")

    def decode(self, code: int) -> str:
        return self.levels[code]

    def encode(self, value: str) -> int:
        try:
            return self.levels.index(value)
        except ValueError:
            raise ValueError(
                f"unknown level {value!r} for feature {self.name!r}"
            ) from None


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Dataset:
    """Immutable ordinal-encoded table with a binary target.

    X holds one code column per schema entry; y is 0/1 with 1 the positive
    (technique used) class. `synthetic` flags rows appended by oversampling
    so they can be traced through the pipeline.
    """

    schema: tuple[FeatureSchema, ...]
    target_name: str
    X: np.ndarray
    y: np.ndarray
    synthetic: np.ndarray = field(default=None)  # type: ignore[assignment]
    target_levels: tuple[str, str] = ("0", "1")  # (negative, positive) labels

    def __post_init__(self):
        X = _frozen_array(self.X, np.int64)
        y = _frozen_array(self.y, np.int64)
        syn = self.synthetic
        syn = _frozen_array(
            np.zeros(len(y), dtype=bool) if syn is None else syn, bool
        )
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "synthetic", syn)
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise ValueError("dataset must have at least one row and one feature")
        if X.shape[1] != len(self.schema):
            raise ValueError("schema length does not match feature count")
        if y.shape != (X.shape[0],) or syn.shape != (X.shape[0],):
            raise ValueError("row count mismatch between X, y and provenance")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("target must be 0/1")
        if any(f.name == self.target_name for f in self.schema):
            raise ValueError(f"target {self.target_name!r} also appears as a feature")
        if X.min() < 0:
            raise ValueError("ordinal codes must be non-negative")
        limits = np.array([len(f.levels) for f in self.schema])
        if (X >= limits).any():
            bad = int(np.argmax((X >= limits).any(axis=0)))
            raise ValueError(f"code out of range for feature {self.schema[bad].name!r}")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.schema)

    def decode_row(self, i: int) -> list[str]:
        return [f.decode(int(c)) for f, c in zip(self.schema, self.X[i])]


@dataclass(frozen=True)
class DatasetSummary:
    n_majority: int
    n_minority: int
    imbalance_ratio: float
    task: str = "binary classification"


def load_csv(
    path: str | Path,
    target_name: str,
    role_map: Mapping[str, str] | None = None,
    positive_label: str | None = None,
    schema: Sequence[FeatureSchema] | None = None,
) -> Dataset:
    """Read a header-first CSV into a Dataset.

    Levels are coded by first appearance unless `schema` is given, in which
    case values are looked up in the stored levels (unknown values are an
    error). A `_synthetic` column, if present, is read as row provenance
    rather than a feature. Missing (empty) cells are rejected.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    if target_name not in header:
        raise ValueError(f"{path}: target column {target_name!r} not found")
    if len(set(header)) != len(header):
        raise ValueError(f"{path}: duplicate column names")
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise ValueError(f"{path}: row {r + 2} has {len(row)} cells, expected {len(header)}")
        if any(cell == "" for cell in row):
            raise ValueError(f"{path}: missing value in row {r + 2}")

    target_idx = header.index(target_name)
    prov_idx = header.index(PROVENANCE_COLUMN) if PROVENANCE_COLUMN in header else None
    feature_cols = [
        (j, name)
        for j, name in enumerate(header)
        if j != target_idx and j != prov_idx
    ]
    if not feature_cols:
        raise ValueError(f"{path}: no feature columns")

    target_values = [row[target_idx] for row in rows]
    distinct_targets = sorted(set(target_values))
    if len(distinct_targets) != 2:
        raise ValueError(
            f"{path}: non-binary target ({len(distinct_targets)} distinct values)"
        )
    if positive_label is None:
        if distinct_targets == ["0", "1"]:
            positive_label = "1"
        else:
            raise ValueError(
                f"{path}: target values {distinct_targets} need an explicit positive label"
            )
    if positive_label not in distinct_targets:
        raise ValueError(
            f"{path}: positive label {positive_label!r} not among target values {distinct_targets}"
        )
    negative_label = next(v for v in distinct_targets if v != positive_label)
    y = np.fromiter((1 if v == positive_label else 0 for v in target_values), dtype=np.int64)

    if schema is not None:
        col_of = {name: j for j, name in feature_cols}
        missing = [f.name for f in schema if f.name not in col_of]
        if missing:
            raise ValueError(f"{path}: missing feature columns {missing}")
        X = np.empty((len(rows), len(schema)), dtype=np.int64)
        for k, feat in enumerate(schema):
            j = col_of[feat.name]
            for i, row in enumerate(rows):
                X[i, k] = feat.encode(row[j])
        out_schema = tuple(schema)
    else:
        role_map = role_map or {}
        feats = []
        X = np.empty((len(rows), len(feature_cols)), dtype=np.int64)
        for k, (j, name) in enumerate(feature_cols):
            levels: list[str] = []
            seen: dict[str, int] = {}
            for i, row in enumerate(rows):
                v = row[j]
                code = seen.get(v)
                if code is None:
                    code = seen[v] = len(levels)
                    levels.append(v)
                X[i, k] = code
            role = role_map.get(name, ROLE_CONTEXT)
            feats.append(FeatureSchema(name, role, tuple(levels)))
        out_schema = tuple(feats)

    if prov_idx is not None:
        flags = [row[prov_idx] for row in rows]
        bad = sorted(set(flags) - {"0", "1"})
        if bad:
            raise ValueError(f"{path}: bad {PROVENANCE_COLUMN} values {bad}")
        synthetic = np.array([f == "1" for f in flags], dtype=bool)
    else:
        synthetic = np.zeros(len(rows), dtype=bool)

    return Dataset(
        schema=out_schema,
        target_name=target_name,
        X=X,
        y=y,
        synthetic=synthetic,
        target_levels=(negative_label, positive_label),
    )


def write_csv(d: Dataset, path: str | Path, include_provenance: bool = False) -> None:
    """Emit the dataset as CSV: features in schema order, target last,
    then the provenance column when requested."""
    path = Path(path)
    header = list(d.feature_names) + [d.target_name]
    if include_provenance:
        header.append(PROVENANCE_COLUMN)
    with path.open("w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(d.n_rows):
            row = d.decode_row(i)
            row.append(d.target_levels[int(d.y[i])])
            if include_provenance:
                row.append("1" if d.synthetic[i] else "0")
            writer.writerow(row)


def drop_constant_features(d: Dataset) -> Dataset:
    """Remove every feature with a single distinct observed value."""
    keep = [j for j in range(d.n_features) if len(np.unique(d.X[:, j])) > 1]
    if not keep:
        raise ValueError("no informative features: every column is constant")
    if len(keep) == d.n_features:
        return d
    return replace(
        d,
        schema=tuple(d.schema[j] for j in keep),
        X=d.X[:, keep],
    )


def select_features(d: Dataset, names: Iterable[str]) -> Dataset:
    """Restrict the dataset to the named features (given order kept)."""
    index = {f.name: j for j, f in enumerate(d.schema)}
    cols = []
    for n in names:
        if n not in index:
            raise ValueError(f"unknown feature {n!r}")
        cols.append(index[n])
    if not cols:
        raise ValueError("empty feature selection")
    return replace(
        d,
        schema=tuple(d.schema[j] for j in cols),
        X=d.X[:, cols],
    )


def _subset(d: Dataset, rows: np.ndarray) -> Dataset:
    return replace(d, X=d.X[rows], y=d.y[rows], synthetic=d.synthetic[rows])


def split_train_test(d: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Uniform random partition without replacement; |test| = round(n * fraction)."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = d.n_rows
    n_test = round(n * test_fraction)
    if n_test < 1 or n_test >= n:
        raise ValueError(
            f"degenerate split: {n} rows at fraction {test_fraction} leaves "
            f"{n_test} test rows"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    test_rows = np.sort(perm[:n_test])
    train_rows = np.sort(perm[n_test:])
    return _subset(d, train_rows), _subset(d, test_rows)


def summarize(d: Dataset) -> DatasetSummary:
    n_pos = int(d.y.sum())
    n_neg = d.n_rows - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("single-class dataset")
    n_maj, n_min = max(n_pos, n_neg), min(n_pos, n_neg)
    return DatasetSummary(n_maj, n_min, n_maj / n_min)


def minority_label(d: Dataset) -> int:
    """Label of the less frequent class (0 wins a tie: the positive class
    is the majority in the motivating use case)."""
    n_pos = int(d.y.sum())
    n_neg = d.n_rows - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("single-class dataset")
    return 0 if n_neg <= n_pos else 1


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of a generated dataset: class counts, feature count, how many
    features carry class signal, levels per feature, and the RNG seed.

    `informative_skew` sets how much probability mass each informative
    feature concentrates on its class-specific anchor level; the rest is
    spread uniformly. Non-informative features are class-independent.
    """

    n_majority: int
    n_minority: int
    p: int
    n_informative: int
    levels_per_feature: int = 4
    seed: int = 0
    informative_skew: float = 0.5

    def __post_init__(self):
        if self.n_majority < 1 or self.n_minority < 1:
            raise ValueError("class counts must be positive")
        if self.n_minority > self.n_majority:
            raise ValueError("n_minority must not exceed n_majority")
        if not 0 <= self.n_informative <= self.p:
            raise ValueError("n_informative must be between 0 and p")
        if self.levels_per_feature < 2:
            raise ValueError("levels_per_feature must be at least 2")
        if not 1.0 / self.levels_per_feature <= self.informative_skew < 1.0:
            raise ValueError("informative_skew must be in [1/levels, 1)")


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Deterministic synthetic dataset: majority class is positive (label 1).

    The first `n_informative` features draw their level from a
    class-conditional distribution whose anchor level differs per class;
    remaining features are uniform noise. First half of the features get
    the context role, the rest the technique role.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_majority + spec.n_minority
    L = spec.levels_per_feature
    y = np.concatenate([np.ones(spec.n_majority, np.int64), np.zeros(spec.n_minority, np.int64)])

    X = np.empty((n, spec.p), dtype=np.int64)
    base = (1.0 - spec.informative_skew) / (L - 1)
    for j in range(spec.p):
        if j < spec.n_informative:
            anchor1 = j % L
            anchor0 = (j + 1) % L
            probs1 = np.full(L, base)
            probs1[anchor1] = spec.informative_skew
            probs0 = np.full(L, base)
            probs0[anchor0] = spec.informative_skew
            col = np.where(
                y == 1,
                rng.choice(L, size=n, p=probs1),
                rng.choice(L, size=n, p=probs0),
            )
        else:
            col = rng.integers(0, L, size=n)
        X[:, j] = col

    n_context = (spec.p + 1) // 2
    schema = tuple(
        FeatureSchema(
            name=f"ctx{j:02d}" if j < n_context else f"tech{j - n_context:02d}",
            role=ROLE_CONTEXT if j < n_context else ROLE_TECHNIQUE,
            levels=tuple(f"v{k}" for k in range(L)),
        )
        for j in range(spec.p)
    )
    return Dataset(schema=schema, target_name="target", X=X, y=y)
