"""Binary decision trees by impurity minimization and a bagged forest.

Splits are threshold tests on ordinal codes: rows with code <= threshold go
left. A candidate's quality is the child-size-weighted sum of child
impurities (gini or entropy); the grower picks the candidate minimizing it,
breaking ties toward the lower feature index, then the lower threshold.

Every internal node also records the entropy-measured quality of its chosen
split (regardless of the training criterion) so the forest's mean split
entropy can be compared between imbalanced and balanced training sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .data_model import Dataset

CRITERIA = ("gini", "entropy")


def gini(counts: tuple[int, int]) -> float:
    """Gini impurity 1 - p0^2 - p1^2 of a two-class count pair."""
    n0, n1 = counts
    total = n0 + n1
    if total < 1:
        raise ValueError("empty counts")
    p0 = n0 / total
    p1 = n1 / total
    return 1.0 - p0 * p0 - p1 * p1


def entropy(counts: tuple[int, int]) -> float:
    """Shannon entropy in bits, with 0*log(0) taken as 0."""
    n0, n1 = counts
    total = n0 + n1
    if total < 1:
        raise ValueError("empty counts")
    h = 0.0
    for c in (n0, n1):
        if c > 0:
            p = c / total
            h -= p * float(np.log2(p))
    return h


def _impurity_fn(criterion: str):
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}, got {criterion!r}")
    return gini if criterion == "gini" else entropy


@dataclass(frozen=True)
class SplitCandidate:
    feature_index: int
    threshold: float
    n_left: int
    n_right: int
    quality: float

    def __post_init__(self):
        if self.n_left < 1 or self.n_right < 1:
            raise ValueError("split produces an empty child")


@dataclass(frozen=True)
class Leaf:
    class_counts: tuple[int, int]


@dataclass(frozen=True)
class Internal:
    split: SplitCandidate
    split_entropy: float  # entropy-measured quality of the split, in bits
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Internal]


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    mtry: Optional[int] = None  # None = floor(sqrt(p))
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1
    criterion: str = "gini"
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be at least 1")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError("mtry must be at least 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be non-negative")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be at least 1")
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def resolve_mtry(self, p: int) -> int:
        mtry = self.mtry if self.mtry is not None else max(1, int(math.sqrt(p)))
        if mtry > p:
            raise ValueError(f"mtry {mtry} exceeds feature count {p}")
        return mtry


@dataclass(frozen=True)
class RandomForestModel:
    trees: tuple[TreeNode, ...]
    n_trees: int
    mtry: int
    criterion: str
    seed: int


def split_quality(
    X: np.ndarray, y: np.ndarray, feature: int, threshold: float, criterion: str
) -> float:
    """Weighted child impurity of one candidate over the given rows."""
    h = _impurity_fn(criterion)
    left = X[:, feature] <= threshold
    n_left = int(left.sum())
    n_right = len(y) - n_left
    if n_left == 0 or n_right == 0:
        raise ValueError("empty child")
    n1_left = int(y[left].sum())
    n1_right = int(y.sum()) - n1_left
    h_left = h((n_left - n1_left, n1_left))
    h_right = h((n_right - n1_right, n1_right))
    n = len(y)
    return (n_left / n) * h_left + (n_right / n) * h_right


def _scan_features(
    Xsub: np.ndarray,
    y: np.ndarray,
    features: Sequence[int],
    criterion: str,
    min_child: int,
) -> Optional[SplitCandidate]:
    """Evaluate all thresholds of all given feature columns at once.

    Xsub holds only the candidate columns, ordered like `features` (which
    must be ascending so first-minimum selection honours the tie rule).
    """
    m = len(y)
    k = Xsub.shape[1]
    n1_total = int(y.sum())
    n0_total = m - n1_total
    l_max = int(Xsub.max()) + 1

    flat = (np.arange(k) * l_max)[None, :] * 2 + Xsub * 2 + y[:, None]
    counts = np.bincount(flat.ravel(), minlength=k * l_max * 2).reshape(k, l_max, 2)
    cum = counts.cumsum(axis=1)
    cum_tot = cum[:, :, 0] + cum[:, :, 1]
    present = (counts[:, :, 0] + counts[:, :, 1]) > 0

    # midpoint partner: smallest present code strictly above each code
    big = l_max + 1
    masked = np.where(present, np.arange(l_max)[None, :], big)
    suffix_min = np.minimum.accumulate(masked[:, ::-1], axis=1)[:, ::-1]
    next_present = np.concatenate([suffix_min[:, 1:], np.full((k, 1), big)], axis=1)

    valid = (
        present
        & (next_present < big)
        & (cum_tot >= min_child)
        & (m - cum_tot >= min_child)
    )
    if not valid.any():
        return None

    n0_left = cum[:, :, 0].astype(np.float64)
    n1_left = cum[:, :, 1].astype(np.float64)
    n_left = cum_tot.astype(np.float64)
    n_right = m - n_left
    n0_right = n0_total - n0_left
    n1_right = n1_total - n1_left

    safe_left = np.where(n_left > 0, n_left, 1.0)
    safe_right = np.where(n_right > 0, n_right, 1.0)
    if criterion == "gini":
        p0l, p1l = n0_left / safe_left, n1_left / safe_left
        p0r, p1r = n0_right / safe_right, n1_right / safe_right
        h_left = 1.0 - p0l * p0l - p1l * p1l
        h_right = 1.0 - p0r * p0r - p1r * p1r
    else:
        h_left = _entropy_grid(n0_left, n1_left, safe_left)
        h_right = _entropy_grid(n0_right, n1_right, safe_right)

    quality = (n_left / m) * h_left + (n_right / m) * h_right
    quality = np.where(valid, quality, np.inf)
    best = int(np.argmin(quality))  # first minimum: lowest feature, then code
    fi, code = divmod(best, l_max)
    q = float(quality.ravel()[best])
    if not np.isfinite(q):
        return None
    return SplitCandidate(
        feature_index=int(features[fi]),
        threshold=(code + int(next_present[fi, code])) / 2.0,
        n_left=int(cum_tot[fi, code]),
        n_right=int(m - cum_tot[fi, code]),
        quality=q,
    )


def _entropy_grid(n0: np.ndarray, n1: np.ndarray, safe_total: np.ndarray) -> np.ndarray:
    h = np.zeros_like(n0)
    for part in (n0, n1):
        p = part / safe_total
        h -= np.where(part > 0, p * np.log2(np.where(part > 0, p, 1.0)), 0.0)
    return h


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    feature_subset: Sequence[int],
    criterion: str,
    min_child: int = 1,
) -> Optional[SplitCandidate]:
    """Best candidate over the subset's features, or None if nothing splits.

    Thresholds sit at midpoints between consecutive distinct codes present
    in the rows; quality is minimized with ties broken by (feature index,
    threshold), both ascending.
    """
    _impurity_fn(criterion)
    if len(y) < 2:
        return None
    feats = sorted(set(int(f) for f in feature_subset))
    if not feats:
        return None
    X = np.asarray(X)
    y = np.asarray(y)
    return _scan_features(X[:, feats], y, feats, criterion, min_child)


def grow_tree(
    X: np.ndarray, y: np.ndarray, params: ForestParams, rng: np.random.Generator
) -> TreeNode:
    """Recursively grow one tree on the given rows.

    Each node draws a fresh uniform feature subset of size mtry; growth
    stops at purity, the depth limit, the leaf-size limit, or when no
    candidate separates the rows.
    """
    X = np.asarray(X, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    p = X.shape[1]
    mtry = params.resolve_mtry(p)

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        ys = y[idx]
        n1 = int(ys.sum())
        counts = (len(idx) - n1, n1)
        if (
            n1 == 0
            or n1 == len(idx)
            or len(idx) < 2 * params.min_samples_leaf
            or len(idx) < 2
            or (params.max_depth is not None and depth >= params.max_depth)
        ):
            return Leaf(counts)
        feats = np.sort(rng.choice(p, size=mtry, replace=False))
        cand = _scan_features(
            X[np.ix_(idx, feats)], ys, feats, params.criterion, params.min_samples_leaf
        )
        if cand is None:
            return Leaf(counts)
        left_mask = X[idx, cand.feature_index] <= cand.threshold
        idx_left = idx[left_mask]
        idx_right = idx[~left_mask]
        n1_left = int(y[idx_left].sum())
        n1_right = n1 - n1_left
        c_left = (len(idx_left) - n1_left, n1_left)
        c_right = (len(idx_right) - n1_right, n1_right)
        split_ent = (len(idx_left) / len(idx)) * entropy(c_left) + (
            len(idx_right) / len(idx)
        ) * entropy(c_right)
        return Internal(
            split=cand,
            split_entropy=split_ent,
            left=build(idx_left, depth + 1),
            right=build(idx_right, depth + 1),
        )

    return build(np.arange(len(y)), 0)


def train_forest(d: Dataset, params: ForestParams) -> RandomForestModel:
    """Bag `n_trees` trees, each on a bootstrap sample drawn from a per-tree
    RNG seeded by (params.seed, tree index), so the model is a pure function
    of (dataset, params) no matter how training is scheduled."""
    if len(np.unique(d.y)) < 2:
        raise ValueError("single-class dataset")
    n = d.n_rows
    mtry = params.resolve_mtry(d.n_features)
    trees = []
    for t in range(params.n_trees):
        tree_rng = np.random.default_rng([params.seed, t])
        boot = tree_rng.integers(0, n, size=n)
        trees.append(grow_tree(d.X[boot], d.y[boot], params, tree_rng))
    return RandomForestModel(
        trees=tuple(trees),
        n_trees=params.n_trees,
        mtry=mtry,
        criterion=params.criterion,
        seed=params.seed,
    )


def _route(node: TreeNode, X: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
    if isinstance(node, Leaf):
        n0, n1 = node.class_counts
        out[idx] = n1 / (n0 + n1)
        return
    mask = X[idx, node.split.feature_index] <= node.split.threshold
    _route(node.left, X, idx[mask], out)
    _route(node.right, X, idx[~mask], out)


def predict_proba_many(m: RandomForestModel, X: np.ndarray) -> np.ndarray:
    """Positive-class probability per row: mean leaf positive fraction."""
    X = np.asarray(X, dtype=np.int64)
    acc = np.zeros(X.shape[0])
    buf = np.empty(X.shape[0])
    all_rows = np.arange(X.shape[0])
    for tree in m.trees:
        _route(tree, X, all_rows, buf)
        acc += buf
    return acc / m.n_trees


def predict_proba(m: RandomForestModel, row: np.ndarray) -> float:
    return float(predict_proba_many(m, np.asarray(row)[None, :])[0])


def predict(m: RandomForestModel, row: np.ndarray, threshold: float = 0.5) -> int:
    return 1 if predict_proba(m, row) >= threshold else 0


def _iter_internal(node: TreeNode):
    if isinstance(node, Internal):
        yield node
        yield from _iter_internal(node.left)
        yield from _iter_internal(node.right)


def mean_split_entropy(m: RandomForestModel) -> float:
    """Mean recorded split entropy over every internal node of every tree."""
    values = [node.split_entropy for tree in m.trees for node in _iter_internal(tree)]
    if not values:
        raise ValueError("all-leaf forest has no splits")
    return float(np.mean(values))


MODEL_FORMAT_VERSION = 1


def tree_to_dict(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"leaf": list(node.class_counts)}
    return {
        "feature": node.split.feature_index,
        "threshold": node.split.threshold,
        "n_left": node.split.n_left,
        "n_right": node.split.n_right,
        "quality": node.split.quality,
        "split_entropy": node.split_entropy,
        "left": tree_to_dict(node.left),
        "right": tree_to_dict(node.right),
    }


def tree_from_dict(doc: dict) -> TreeNode:
    if "leaf" in doc:
        n0, n1 = doc["leaf"]
        return Leaf((int(n0), int(n1)))
    return Internal(
        split=SplitCandidate(
            feature_index=int(doc["feature"]),
            threshold=float(doc["threshold"]),
            n_left=int(doc["n_left"]),
            n_right=int(doc["n_right"]),
            quality=float(doc["quality"]),
        ),
        split_entropy=float(doc["split_entropy"]),
        left=tree_from_dict(doc["left"]),
        right=tree_from_dict(doc["right"]),
    )


def model_to_dict(m: RandomForestModel) -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "n_trees": m.n_trees,
        "mtry": m.mtry,
        "criterion": m.criterion,
        "seed": m.seed,
        "trees": [tree_to_dict(t) for t in m.trees],
    }


def model_from_dict(doc: dict) -> RandomForestModel:
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version {version!r}")
    trees = tuple(tree_from_dict(t) for t in doc["trees"])
    return RandomForestModel(
        trees=trees,
        n_trees=int(doc["n_trees"]),
        mtry=int(doc["mtry"]),
        criterion=str(doc["criterion"]),
        seed=int(doc["seed"]),
    )
