import numpy as np
import pytest

from graphood.errors import DegenerateLabels, EmptyIdTestSet
from graphood.metrics import (
    EvalReport,
    aggregate,
    auroc,
    aupr,
    format_percent,
    fpr_at_95_tpr,
    id_accuracy,
    report_markdown,
)


def auroc_pair_oracle(scores, is_ood):
    """Quadratic pair-count oracle with half credit for ties."""
    pos = scores[is_ood]
    neg = scores[~is_ood]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def aupr_sweep_oracle(scores, is_ood):
    """Threshold sweep at distinct scores, ties as one block."""
    total_pos = is_ood.sum()
    ap = 0.0
    prev_tp = 0
    for t in sorted(set(scores), reverse=True):
        flag = scores >= t
        tp = int((flag & is_ood).sum())
        fp = int((flag & ~is_ood).sum())
        ap += ((tp - prev_tp) / total_pos) * (tp / (tp + fp))
        prev_tp = tp
    return ap


def fpr95_sweep_oracle(scores, is_ood, target=0.95):
    total_pos = int(is_ood.sum())
    total_neg = int((~is_ood).sum())
    best = None
    for t in sorted(set(scores), reverse=True):
        flag = scores >= t
        tpr = (flag & is_ood).sum() / total_pos
        fpr = (flag & ~is_ood).sum() / total_neg
        if tpr >= target and (best is None or fpr < best):
            best = fpr
    return best


def random_instance(rng, n):
    # quantized scores inject ties, including cross-class ties
    scores = rng.integers(0, max(3, n // 4), size=n) / 4.0
    is_ood = rng.random(n) < 0.4
    if not is_ood.any():
        is_ood[0] = True
    if is_ood.all():
        is_ood[0] = False
    return scores.astype(float), is_ood


class TestIdAccuracy:
    def test_all_correct(self):
        pred = np.array([0, 1, 2, 1])
        assert id_accuracy(pred, pred, [0, 1, 2]) == 1.0

    def test_constant_prediction_balanced(self):
        true = np.array([0, 1, 2, 3])
        pred = np.zeros(4, dtype=int)
        assert id_accuracy(pred, true, [0, 1, 2, 3]) == 0.25

    def test_counts_only_id_test_nodes(self):
        true = np.array([0, 1, 0, 1])
        pred = np.array([0, 0, 0, 0])
        assert id_accuracy(pred, true, [0, 2]) == 1.0

    def test_matches_counting_oracle(self):
        rng = np.random.default_rng(0)
        true = rng.integers(0, 4, 50)
        pred = rng.integers(0, 4, 50)
        nodes = rng.choice(50, 20, replace=False)
        expected = sum(int(pred[i] == true[i]) for i in nodes) / 20
        assert id_accuracy(pred, true, nodes) == pytest.approx(expected)

    def test_empty_raises(self):
        with pytest.raises(EmptyIdTestSet):
            id_accuracy(np.array([0]), np.array([0]), [])


class TestAuroc:
    def test_perfect_separation(self):
        scores = np.array([0.1, 0.2, 0.8, 0.9])
        labels = np.array([False, False, True, True])
        assert auroc(scores, labels) == 1.0

    def test_all_ties_half(self):
        scores = np.ones(10)
        labels = np.arange(10) < 4
        assert auroc(scores, labels) == 0.5

    def test_matches_pair_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            scores, labels = random_instance(rng, int(rng.integers(5, 200)))
            assert auroc(scores, labels) == pytest.approx(
                auroc_pair_oracle(scores, labels), abs=1e-9)

    def test_complement_symmetry(self):
        rng = np.random.default_rng(2)
        scores, labels = random_instance(rng, 80)
        assert auroc(scores, labels) + auroc(-scores, labels) == \
            pytest.approx(1.0, abs=1e-12)

    def test_monotone_transform_invariant(self):
        rng = np.random.default_rng(3)
        scores, labels = random_instance(rng, 60)
        assert auroc(np.exp(scores * 2), labels) == \
            pytest.approx(auroc(scores, labels), abs=1e-12)

    def test_degenerate_raises(self):
        with pytest.raises(DegenerateLabels):
            auroc(np.array([1.0, 2.0]), np.array([True, True]))


class TestAupr:
    def test_positives_first(self):
        scores = np.array([0.9, 0.8, 0.2, 0.1])
        labels = np.array([True, True, False, False])
        assert aupr(scores, labels) == 1.0

    def test_single_positive_last(self):
        n = 8
        scores = np.arange(n, dtype=float)
        labels = np.zeros(n, dtype=bool)
        labels[0] = True  # lowest score
        assert aupr(scores, labels) == pytest.approx(1.0 / n, abs=1e-12)

    def test_matches_sweep_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            scores, labels = random_instance(rng, int(rng.integers(5, 200)))
            assert aupr(scores, labels) == pytest.approx(
                aupr_sweep_oracle(scores, labels), abs=1e-9)


class TestFpr95:
    def test_perfect_separation(self):
        scores = np.array([0.1, 0.2, 0.8, 0.9] * 10)
        labels = np.array([False, False, True, True] * 10)
        assert fpr_at_95_tpr(scores, labels) == 0.0

    def test_identical_scores(self):
        scores = np.ones(20)
        labels = np.arange(20) < 8
        assert fpr_at_95_tpr(scores, labels) == 1.0

    def test_matches_sweep_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            scores, labels = random_instance(rng, int(rng.integers(5, 200)))
            assert fpr_at_95_tpr(scores, labels) == pytest.approx(
                fpr95_sweep_oracle(scores, labels), abs=0)


def make_report(**kwargs):
    base = dict(id_acc=0.5, auroc=0.5, aupr=0.5, fpr_at_95=0.5,
                id_proportion=None, seed=0)
    base.update(kwargs)
    return EvalReport(**base)


class TestAggregate:
    def test_single_report(self):
        agg = aggregate([make_report(id_acc=0.8)])
        assert agg.means["id_acc"] == 0.8
        assert agg.stds["id_acc"] == 0.0

    def test_two_point_sample_std(self):
        agg = aggregate([make_report(id_acc=0.8, seed=0),
                         make_report(id_acc=0.9, seed=1)])
        assert agg.means["id_acc"] == pytest.approx(0.85)
        # sample std of [0.8, 0.9] = 0.1 / sqrt(2)
        assert agg.stds["id_acc"] == pytest.approx(0.07071067811865474, abs=1e-12)

    def test_none_metric_propagates(self):
        agg = aggregate([make_report(id_proportion=None)])
        assert agg.means["id_proportion"] is None

    def test_formatting(self):
        assert format_percent(0.8520, 0.0268) == "85.20±2.68"

    def test_markdown_table(self):
        agg = aggregate([make_report(id_acc=0.852, auroc=0.8806,
                                     aupr=0.8785, fpr_at_95=0.4804)])
        md = report_markdown(agg)
        assert "| ID ACC | AUROC | AUPR | FPR@95 |" in md
        assert "85.20±0.00" in md
