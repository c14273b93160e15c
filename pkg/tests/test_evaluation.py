import math

import numpy as np
import pytest

from elicitrec.evaluation import (
    RocPoint,
    accuracy,
    analyze_scores,
    auc,
    confusion,
    dominates,
    paired_t_test,
    precision,
    recall,
    relative_improvement_pct,
    roc_analysis_to_csv,
    roc_convex_hull,
    roc_curve,
    student_t_p_two_tailed,
)


def mann_whitney_auc(scores, y):
    """Oracle: pairwise rank statistic with ties counted as one half."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y)
    pos = s[y == 1][:, None]
    neg = s[y == 0][None, :]
    wins = (pos > neg).sum() + 0.5 * (pos == neg).sum()
    return wins / (pos.size * neg.size)


def t_pdf(x, df):
    c = math.gamma((df + 1) / 2) / (math.sqrt(df * math.pi) * math.gamma(df / 2))
    return c * (1 + x * x / df) ** (-(df + 1) / 2)


def simpson_two_tailed(t, df, steps=20000):
    """Oracle: complement of the t density integrated over [-|t|, |t|]."""
    a = abs(t)
    xs = np.linspace(0.0, a, 2 * steps + 1)
    ys = np.array([t_pdf(x, df) for x in xs])
    h = a / (len(xs) - 1)
    center = h / 3 * (ys[0] + ys[-1] + 4 * ys[1::2].sum() + 2 * ys[2:-1:2].sum())
    return 1 - 2 * center


class TestConfusion:
    def test_counts(self):
        assert confusion([1, 0], [1, 0]) == (1, 0, 1, 0)
        assert confusion([1, 0], [0, 1]) == (0, 1, 0, 1)
        assert confusion([1, 1, 0, 0], [1, 0, 0, 1]) == (1, 1, 1, 1)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            confusion([1, 0], [1])

    def test_non_binary(self):
        with pytest.raises(ValueError):
            confusion([1, 2], [1, 0])


class TestRates:
    def test_perfect(self):
        conf = (1, 0, 1, 0)
        assert accuracy(conf) == 1.0
        assert precision(conf) == 1.0
        assert recall(conf) == 1.0

    def test_mixed_counts(self):
        conf = (3, 1, 4, 2)
        assert accuracy(conf) == 0.7
        assert precision(conf) == 0.75
        assert recall(conf) == 0.6

    def test_undefined_is_none(self):
        assert precision((0, 0, 5, 2)) is None
        assert recall((0, 3, 5, 0)) is None

    def test_improvement_pct(self):
        assert relative_improvement_pct(0.5, 0.6) == pytest.approx(20.0)
        assert relative_improvement_pct(0.0, 0.6) is None


class TestRocCurve:
    def test_perfect_ranker(self):
        pts = roc_curve([0.9, 0.1], [1, 0])
        assert [(p.fpr, p.tpr) for p in pts] == [(0, 0), (0, 1), (1, 1)]
        assert auc(pts) == 1.0

    def test_all_tied(self):
        pts = roc_curve([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0])
        assert [(p.fpr, p.tpr) for p in pts] == [(0, 0), (1, 1)]
        assert auc(pts) == 0.5

    def test_five_points(self):
        pts = roc_curve([0.8, 0.6, 0.4, 0.2], [1, 0, 1, 0])
        assert len(pts) == 5
        assert auc(pts) == 0.75

    def test_pair_ordering_auc(self):
        pts = roc_curve([0.8, 0.4, 0.6, 0.2], [1, 1, 0, 0])
        assert auc(pts) == 0.75

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="single-class"):
            roc_curve([0.1, 0.9], [1, 1])

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            n = int(rng.integers(4, 40))
            y = rng.integers(0, 2, n)
            if y.min() == y.max():
                continue
            s = np.round(rng.random(n), 1)  # coarse grid forces ties
            base = [(p.fpr, p.tpr) for p in roc_curve(s, y)]
            warped = [(p.fpr, p.tpr) for p in roc_curve(np.exp(3 * s), y)]
            assert base == warped

    def test_matches_rank_statistic(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            n = int(rng.integers(4, 50))
            y = rng.integers(0, 2, n)
            if y.min() == y.max():
                continue
            s = np.round(rng.random(n), 2)
            assert auc(roc_curve(s, y)) == pytest.approx(
                mann_whitney_auc(s, y), abs=1e-9
            )


class TestHull:
    def test_strictly_concave_is_fixed_point(self):
        pts = [
            RocPoint(0.0, 0.0, math.inf),
            RocPoint(0.2, 0.6, 0.8),
            RocPoint(0.5, 0.9, 0.5),
            RocPoint(1.0, 1.0, 0.1),
        ]
        hull, auch = roc_convex_hull(pts)
        assert [(p.fpr, p.tpr) for p in hull] == [(p.fpr, p.tpr) for p in pts]
        assert auch == auc(pts)

    def test_dented_point_removed(self):
        pts = [
            RocPoint(0.0, 0.0, math.inf),
            RocPoint(0.2, 0.4, 0.9),
            RocPoint(0.4, 0.3, 0.5),
            RocPoint(1.0, 1.0, 0.1),
        ]
        hull, auch = roc_convex_hull(pts)
        assert [(p.fpr, p.tpr) for p in hull] == [(0.0, 0.0), (0.2, 0.4), (1.0, 1.0)]
        assert auch > auc(pts)

    def test_perfect_curve(self):
        pts = roc_curve([0.9, 0.1], [1, 0])
        hull, auch = roc_convex_hull(pts)
        assert auch == 1.0

    def test_anchors_added(self):
        hull, _ = roc_convex_hull([RocPoint(0.5, 0.8, 0.5)])
        assert (hull[0].fpr, hull[0].tpr) == (0.0, 0.0)
        assert (hull[-1].fpr, hull[-1].tpr) == (1.0, 1.0)

    def test_properties_random(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            n = int(rng.integers(4, 60))
            y = rng.integers(0, 2, n)
            if y.min() == y.max():
                continue
            s = np.round(rng.random(n), 1)
            a = analyze_scores(s, y)
            assert a.auch >= a.auc - 1e-12
            slopes = []
            for q, r in zip(a.hull, a.hull[1:]):
                dx = r.fpr - q.fpr
                slopes.append(math.inf if dx == 0 else (r.tpr - q.tpr) / dx)
            assert all(s1 >= s2 - 1e-9 for s1, s2 in zip(slopes, slopes[1:]))


class TestDominance:
    def diag(self):
        return [RocPoint(0.0, 0.0, 1.0), RocPoint(1.0, 1.0, 0.0)]

    def perfect(self):
        return [RocPoint(0.0, 0.0, 1.0), RocPoint(0.0, 1.0, 0.5), RocPoint(1.0, 1.0, 0.0)]

    def test_identical_is_neither(self):
        assert dominates(self.diag(), self.diag()) == "neither"
        assert dominates(self.perfect(), self.perfect()) == "neither"

    def test_perfect_dominates_diagonal(self):
        assert dominates(self.perfect(), self.diag()) == "A"
        assert dominates(self.diag(), self.perfect()) == "B"

    def test_crossing_hulls(self):
        a = [RocPoint(0.0, 0.0, 1.0), RocPoint(0.1, 0.7, 0.6), RocPoint(1.0, 1.0, 0.0)]
        b = [RocPoint(0.0, 0.0, 1.0), RocPoint(0.6, 0.95, 0.4), RocPoint(1.0, 1.0, 0.0)]
        assert dominates(a, b) == "neither"
        assert dominates(b, a) == "neither"


class TestPairedTTest:
    def test_reference_precision_rows(self):
        r = paired_t_test([0.89, 0.88, 0.81, 0.78], [0.936, 0.899, 0.831, 0.818])
        assert r.df == 3
        assert r.t == pytest.approx(-4.718320, abs=1e-5)
        assert r.p_two_tailed == pytest.approx(0.018, abs=1e-3)

    def test_reference_recall_rows(self):
        r = paired_t_test([1, 0.96, 0.9, 0.88], [1, 1, 0.922, 0.9])
        assert r.t == pytest.approx(-2.506033, abs=1e-5)
        assert r.p_two_tailed == pytest.approx(0.087, abs=2e-3)

    def test_equal_samples(self):
        r = paired_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert r.t == 0.0 and r.p_two_tailed == 1.0

    def test_zero_sd_nonzero_mean(self):
        r = paired_t_test([2.0, 3.0], [1.0, 2.0])
        assert math.isinf(r.t) and r.t > 0
        assert r.p_two_tailed == 0.0

    def test_antisymmetry(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            n = int(rng.integers(2, 12))
            a, b = rng.random(n), rng.random(n)
            r1, r2 = paired_t_test(a, b), paired_t_test(b, a)
            assert r1.t == pytest.approx(-r2.t, abs=1e-12)
            assert r1.p_two_tailed == pytest.approx(r2.p_two_tailed, abs=1e-12)
            assert 0.0 <= r1.p_two_tailed <= 1.0

    def test_errors(self):
        with pytest.raises(ValueError, match="at least 2"):
            paired_t_test([1.0], [2.0])
        with pytest.raises(ValueError, match="mismatch"):
            paired_t_test([1.0, 2.0], [1.0])

    def test_cdf_against_integration_oracle(self):
        for t, df in [(-4.71832, 3), (-2.506033, 3), (1.0, 1), (2.5, 7), (0.3, 30)]:
            assert student_t_p_two_tailed(t, df) == pytest.approx(
                simpson_two_tailed(t, df), abs=1e-6
            )


class TestCsv:
    def test_roc_csv_layout(self):
        a = analyze_scores([0.8, 0.6, 0.4, 0.2], [1, 0, 1, 0])
        text = roc_analysis_to_csv(a)
        lines = text.strip().split("\n")
        assert lines[0] == "fpr,tpr,threshold,on_hull"
        assert len(lines) == len(a.points) + 1
        assert lines[1].endswith("true")  # (0,0) anchor is always on the hull
        flags = [ln.split(",")[3] for ln in lines[1:]]
        assert flags.count("true") == len(a.hull)
