"""Classifier evaluation: confusion metrics, ROC analysis, and paired t-tests.

The ROC curve places one point per distinct score threshold in descending
order plus a (0,0) anchor; tied scores collapse into a single step so the
trapezoidal area equals the Mann-Whitney rank statistic with ties counted
as one half. The upper convex hull of the curve gives AUCH, and two hulls
can be compared for dominance (one curve at least as high everywhere and
strictly higher somewhere).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class RocPoint:
    fpr: float
    tpr: float
    threshold: float

    def __post_init__(self):
        if not (0.0 <= self.fpr <= 1.0 and 0.0 <= self.tpr <= 1.0):
            raise ValueError("fpr and tpr must lie in [0, 1]")


@dataclass(frozen=True)
class RocAnalysis:
    points: tuple[RocPoint, ...]
    hull: tuple[RocPoint, ...]
    auc: float
    auch: float

    def __post_init__(self):
        for prev, cur in zip(self.points, self.points[1:]):
            if cur.fpr < prev.fpr or (cur.fpr == prev.fpr and cur.tpr < prev.tpr):
                raise ValueError("points must be sorted by (fpr, tpr)")
        if self.hull:
            first, last = self.hull[0], self.hull[-1]
            if (first.fpr, first.tpr) != (0.0, 0.0) or (last.fpr, last.tpr) != (1.0, 1.0):
                raise ValueError("hull must run from (0,0) to (1,1)")
        if self.auch < self.auc - 1e-9:
            raise ValueError("area under the hull cannot fall below the curve's")


def confusion(y_true: Sequence[int], y_pred: Sequence[int]) -> tuple[int, int, int, int]:
    """Count (tp, fp, tn, fn) with class 1 treated as positive."""
    yt = np.asarray(y_true)
    yp = np.asarray(y_pred)
    if yt.shape != yp.shape:
        raise ValueError("length mismatch between labels and predictions")
    if yt.size == 0:
        raise ValueError("empty label sequence")
    for arr, what in ((yt, "labels"), (yp, "predictions")):
        if not np.isin(arr, (0, 1)).all():
            raise ValueError(f"{what} must be 0 or 1")
    tp = int(np.sum((yt == 1) & (yp == 1)))
    fp = int(np.sum((yt == 0) & (yp == 1)))
    tn = int(np.sum((yt == 0) & (yp == 0)))
    fn = int(np.sum((yt == 1) & (yp == 0)))
    return tp, fp, tn, fn


def accuracy(conf: tuple[int, int, int, int]) -> float:
    tp, fp, tn, fn = conf
    total = tp + fp + tn + fn
    if total == 0:
        raise ValueError("empty confusion counts")
    return (tp + tn) / total


def precision(conf: tuple[int, int, int, int]) -> Optional[float]:
    """tp/(tp+fp), or None when no positive predictions exist (undefined,
    deliberately never coerced to 0)."""
    tp, fp, _, _ = conf
    if tp + fp == 0:
        return None
    return tp / (tp + fp)


def recall(conf: tuple[int, int, int, int]) -> Optional[float]:
    """tp/(tp+fn), or None when no positive labels exist."""
    tp, _, _, fn = conf
    if tp + fn == 0:
        return None
    return tp / (tp + fn)


def roc_curve(scores: Sequence[float], y_true: Sequence[int]) -> list[RocPoint]:
    """One point per distinct descending score threshold, plus a (0,0) anchor.

    A point's rates count rows with score >= threshold as predicted
    positive, so tied scores form a single step.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y_true)
    if s.shape != y.shape:
        raise ValueError("length mismatch between scores and labels")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("single-class labels")
    order = np.argsort(-s, kind="stable")
    s_desc = s[order]
    y_desc = y[order]
    tps = np.cumsum(y_desc == 1)
    fps = np.cumsum(y_desc == 0)
    last_of_block = np.r_[s_desc[1:] != s_desc[:-1], True]
    points = [RocPoint(0.0, 0.0, math.inf)]
    for i in np.flatnonzero(last_of_block):
        points.append(RocPoint(fps[i] / n_neg, tps[i] / n_pos, float(s_desc[i])))
    return points


def auc(points: Sequence[RocPoint]) -> float:
    """Trapezoidal area under a curve sorted by ascending fpr."""
    if len(points) < 2:
        raise ValueError("need at least two points")
    area = 0.0
    for a, b in zip(points, points[1:]):
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0
    return area


def _cross(o: tuple[float, float], a: tuple[float, float], b: tuple[float, float]) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def roc_convex_hull(points: Sequence[RocPoint]) -> tuple[list[RocPoint], float]:
    """Upper convex hull (monotone chain) and its trapezoidal area.

    The anchors (0,0) and (1,1) are added if absent so the hull always
    spans the unit square's diagonal corners.
    """
    threshold_of: dict[tuple[float, float], float] = {}
    for p in points:
        threshold_of.setdefault((p.fpr, p.tpr), p.threshold)
    threshold_of.setdefault((0.0, 0.0), math.inf)
    threshold_of.setdefault((1.0, 1.0), -math.inf)
    coords = sorted(threshold_of.keys())
    stack: list[tuple[float, float]] = []
    for c in coords:
        while len(stack) >= 2 and _cross(stack[-2], stack[-1], c) >= 0:
            stack.pop()
        stack.append(c)
    hull = [RocPoint(x, y, threshold_of[(x, y)]) for x, y in stack]
    return hull, auc(hull)


def analyze_scores(scores: Sequence[float], y_true: Sequence[int]) -> RocAnalysis:
    points = roc_curve(scores, y_true)
    hull, auch = roc_convex_hull(points)
    return RocAnalysis(points=tuple(points), hull=tuple(hull), auc=auc(points), auch=auch)


def _hull_heights(hull: Sequence[RocPoint], xs: np.ndarray) -> np.ndarray:
    # keep the max tpr per distinct fpr so vertical segments read as their top
    best: dict[float, float] = {}
    for p in hull:
        best[p.fpr] = max(best.get(p.fpr, 0.0), p.tpr)
    hx = sorted(best)
    hy = [best[x] for x in hx]
    return np.interp(xs, hx, hy)


def dominates(hull_a: Sequence[RocPoint], hull_b: Sequence[RocPoint]) -> str:
    """'A' if hull_a is at least as high everywhere and strictly higher
    somewhere, 'B' for the symmetric case, else 'neither'."""
    xs = np.asarray(sorted({p.fpr for p in hull_a} | {p.fpr for p in hull_b}))
    ha = _hull_heights(hull_a, xs)
    hb = _hull_heights(hull_b, xs)
    eps = 1e-12
    a_above = bool(np.any(ha > hb + eps))
    b_above = bool(np.any(hb > ha + eps))
    if a_above and not b_above:
        return "A"
    if b_above and not a_above:
        return "B"
    return "neither"


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p_two_tailed: float
    mean_diff: float


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    max_iter = 300
    eps = 3e-16
    fpmin = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            break
    return h


def _reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_p_two_tailed(t: float, df: int) -> float:
    """Two-tailed tail mass of Student's t via the incomplete beta."""
    if df < 1:
        raise ValueError("df must be at least 1")
    if math.isinf(t):
        return 0.0
    p = _reg_inc_beta(df / 2.0, 0.5, df / (df + t * t))
    return min(1.0, max(0.0, p))


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Paired two-tailed t-test of matched samples.

    t = mean(d) / (sd(d)/sqrt(n)) with the n-1 sample deviation and
    df = n - 1. A zero deviation yields p = 1 when the means agree and
    p = 0 otherwise.
    """
    xa = np.asarray(a, dtype=np.float64)
    xb = np.asarray(b, dtype=np.float64)
    if xa.shape != xb.shape:
        raise ValueError("length mismatch between paired samples")
    n = xa.size
    if n < 2:
        raise ValueError("need at least 2 paired values")
    d = xa - xb
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    df = n - 1
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(t=0.0, df=df, p_two_tailed=1.0, mean_diff=mean)
        t = math.copysign(math.inf, mean)
        return TTestResult(t=t, df=df, p_two_tailed=0.0, mean_diff=mean)
    t = mean / (sd / math.sqrt(n))
    return TTestResult(t=t, df=df, p_two_tailed=student_t_p_two_tailed(t, df), mean_diff=mean)


@dataclass(frozen=True)
class ArmMetrics:
    """Test-set metrics of one pipeline arm (with or without balancing)."""

    accuracy: float
    precision: Optional[float]
    recall: Optional[float]
    roc: RocAnalysis
    mean_split_entropy: float
    n_train: int
    n_test: int

    @property
    def auc(self) -> float:
        return self.roc.auc

    @property
    def auch(self) -> float:
        return self.roc.auch


@dataclass(frozen=True)
class ReportRow:
    label: str
    imbalanced: ArmMetrics
    balanced: ArmMetrics
    accuracy_improvement_pct: Optional[float]
    auc_improvement_pct: Optional[float]


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple[ReportRow, ...]
    t_tests: dict[str, Optional[TTestResult]]


def relative_improvement_pct(before: float, after: float) -> Optional[float]:
    """Relative change in percent, or None when the baseline is zero."""
    if before == 0:
        return None
    return (after - before) / before * 100.0


def t_test_to_dict(r: Optional[TTestResult]) -> Optional[dict]:
    if r is None:
        return None
    t = None if math.isinf(r.t) else r.t
    return {"t": t, "df": r.df, "p_two_tailed": r.p_two_tailed, "mean_diff": r.mean_diff}


def _arm_to_dict(m: ArmMetrics) -> dict:
    return {
        "accuracy": m.accuracy,
        "auc": m.roc.auc,
        "auch": m.roc.auch,
        "precision": m.precision,
        "recall": m.recall,
        "mean_split_entropy": m.mean_split_entropy,
        "n_train": m.n_train,
        "n_test": m.n_test,
        "hull": [[p.fpr, p.tpr] for p in m.roc.hull],
    }


def report_to_dict(report: EvaluationReport) -> dict:
    """JSON-ready structure: per-label metric rows for both arms, rounded
    whole-percent improvement columns, and the two t-test blocks."""
    rows = []
    for row in report.rows:
        rows.append(
            {
                "label": row.label,
                "imbalanced": _arm_to_dict(row.imbalanced),
                "balanced": _arm_to_dict(row.balanced),
                "accuracy_improvement_pct": _round_pct(row.accuracy_improvement_pct),
                "auc_improvement_pct": _round_pct(row.auc_improvement_pct),
            }
        )
    return {
        "rows": rows,
        "t_tests": {name: t_test_to_dict(r) for name, r in sorted(report.t_tests.items())},
    }


def _round_pct(value: Optional[float]) -> Optional[dict]:
    if value is None:
        return None
    return {"value": value, "display": f"{round(value)}%"}


def roc_analysis_to_csv(analysis: RocAnalysis) -> str:
    """CSV text with one row per curve point: fpr,tpr,threshold,on_hull."""
    on_hull = {(p.fpr, p.tpr) for p in analysis.hull}
    lines = ["fpr,tpr,threshold,on_hull"]
    for p in analysis.points:
        flag = "true" if (p.fpr, p.tpr) in on_hull else "false"
        lines.append(f"{p.fpr!r},{p.tpr!r},{p.threshold!r},{flag}")
    return "\n".join(lines) + "\n"
