import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dynten.graphs import align_snapshots
from dynten.linkpred import (EdgeSample, auc_roc, average_precision,
                             cross_validated_scores, fit_logistic_l1,
                             hadamard_separation, l2_separation, loss_value,
                             predict_scores, sample_training_set,
                             separation_values)
from dynten.synth import dynamic_sbm


def make_sample(x, y):
    m = len(y)
    pairs = np.column_stack([np.arange(m), np.arange(m) + m])
    return EdgeSample(pairs=pairs, labels=np.asarray(y), separations=np.asarray(x, float))


class TestSeparations:
    def test_equal_vectors(self):
        emb = np.array([[1.0, 2.0], [1.0, 2.0]])
        assert hadamard_separation(emb, 0, 1) == pytest.approx(5.0)
        assert l2_separation(emb, 0, 1) == 0.0

    def test_orthogonal_unit_vectors(self):
        emb = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert hadamard_separation(emb, 0, 1) == 0.0
        assert l2_separation(emb, 0, 1) == pytest.approx(np.sqrt(2))

    def test_unit_vectors_chord_formula(self):
        for theta in (0.3, 1.1, 2.5):
            emb = np.array([[1.0, 0.0], [np.cos(theta), np.sin(theta)]])
            assert l2_separation(emb, 0, 1) == pytest.approx(2 * np.sin(theta / 2))

    @given(st.integers(0, 10 ** 6))
    def test_polarization_identity(self, seed):
        rng = np.random.default_rng(seed)
        emb = rng.standard_normal((6, 4))
        for i in range(6):
            for j in range(6):
                d = l2_separation(emb, i, j)
                s = hadamard_separation(emb, i, j)
                ni = emb[i] @ emb[i]
                nj = emb[j] @ emb[j]
                assert abs(d ** 2 - (ni + nj - 2 * s)) < 1e-12


def toy_network():
    # 5 nodes; final slice has edges (0,1), (1,2), (3,4)
    return align_snapshots([
        [("a", "b"), ("c", "d")],
        [("a", "b"), ("b", "c"), ("d", "e")],
    ])


class TestSampler:
    def test_balanced_and_verified(self):
        net = toy_network()
        emb = np.random.default_rng(0).standard_normal((5, 3))
        s = sample_training_set(net, 1, emb, "l2", 3, seed=5)
        assert len(s) == 6
        assert (s.labels == 1).sum() == 3 and (s.labels == -1).sum() == 3
        edges = {(0, 1), (1, 2), (3, 4)}
        for (i, j), y in zip(s.pairs, s.labels):
            key = (min(i, j), max(i, j))
            assert (key in edges) == (y == 1)

    def test_deterministic_given_seed(self):
        net = toy_network()
        emb = np.random.default_rng(1).standard_normal((5, 2))
        a = sample_training_set(net, 1, emb, "l2", 2, seed=9)
        b = sample_training_set(net, 1, emb, "l2", 2, seed=9)
        assert np.array_equal(a.pairs, b.pairs)
        assert np.array_equal(a.labels, b.labels)

    def test_saturated_graph_rejected(self):
        net = align_snapshots([[("a", "b"), ("b", "c"), ("a", "c")]])
        emb = np.zeros((3, 2))
        with pytest.raises(ValueError, match="non-links"):
            sample_training_set(net, 0, emb, "l2", 3, seed=0)

    def test_too_few_edges_rejected(self):
        net = toy_network()
        with pytest.raises(ValueError, match="links"):
            sample_training_set(net, 0, np.zeros((5, 2)), "l2", 4, seed=0)

    def test_single_positive_enumeration(self):
        net = align_snapshots([[("a", "b")]], snapshot_labels=[["a", "b", "c"]])
        emb = np.random.default_rng(2).standard_normal((3, 2))
        s = sample_training_set(net, 0, emb, "l2", 1, seed=3)
        pos = s.pairs[s.labels == 1][0]
        neg = s.pairs[s.labels == -1][0]
        assert tuple(sorted(pos)) == (0, 1)
        assert tuple(sorted(neg)) in {(0, 2), (1, 2)}


class TestLogistic:
    def test_separable_sample_perfect_cv(self):
        x = np.array([0.1, 0.2, 0.15, 0.9, 1.0, 0.8, 0.12, 0.95] * 3)
        y = np.array([1, 1, 1, -1, -1, -1, 1, -1] * 3)
        model = fit_logistic_l1(make_sample(x, y))
        assert model.cv_auc == pytest.approx(1.0)
        probs = predict_scores(model, np.array([0.1, 1.0]))
        assert probs[0] > probs[1]

    def test_random_labels_near_chance(self):
        rng = np.random.default_rng(4)
        aucs = []
        for _ in range(30):
            x = rng.standard_normal(40)
            y = np.repeat([1, -1], 20)
            rng.shuffle(y)
            aucs.append(fit_logistic_l1(make_sample(x, y)).cv_auc)
        assert abs(np.mean(aucs) - 0.5) < 0.1

    def test_constant_feature_majority_logit(self):
        x = np.zeros(12)
        y = np.array([1] * 9 + [-1] * 3)
        model = fit_logistic_l1(make_sample(x, y), folds=3)
        assert abs(model.slope) < 1e-6
        assert model.intercept == pytest.approx(np.log(3.0), abs=1e-4)

    def test_never_worse_than_trivial(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            x = rng.standard_normal(30)
            y = np.where(rng.random(30) < 0.5, 1, -1)
            if len(np.unique(y)) < 2:
                continue
            model = fit_logistic_l1(make_sample(x, y))
            assert loss_value(model.slope, model.intercept, x, y) \
                <= loss_value(0.0, 0.0, x, y) + 1e-9

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="class"):
            fit_logistic_l1(make_sample(np.ones(4), np.ones(4, dtype=int)))


def brute_auc(scores, labels):
    pos = np.flatnonzero(np.asarray(labels) > 0)
    neg = np.flatnonzero(np.asarray(labels) <= 0)
    total = 0.0
    for i in pos:
        for j in neg:
            if scores[i] > scores[j]:
                total += 1.0
            elif scores[i] == scores[j]:
                total += 0.5
    return total / (len(pos) * len(neg))


def brute_ap(scores, labels):
    scores = np.asarray(scores, float)
    labels = np.asarray(labels)
    thresholds = sorted(set(scores), reverse=True)
    p_total = int((labels > 0).sum())
    ap, prev_recall = 0.0, 0.0
    for th in thresholds:
        kept = scores >= th
        tp = int(((labels > 0) & kept).sum())
        precision = tp / int(kept.sum())
        recall = tp / p_total
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


class TestMetrics:
    def test_perfect_and_reversed(self):
        labels = np.array([1, -1, 1, -1])
        assert auc_roc(np.array([0.9, 0.1, 0.8, 0.2]), labels) == 1.0
        assert average_precision(np.array([0.9, 0.1, 0.8, 0.2]), labels) == 1.0
        assert auc_roc(np.array([0.1, 0.9, 0.2, 0.8]), labels) == 0.0

    def test_worked_example(self):
        scores = np.array([0.9, 0.8, 0.3])
        labels = np.array([1, -1, 1])
        assert auc_roc(scores, labels) == pytest.approx(0.5)
        assert average_precision(scores, labels) == pytest.approx(5 / 6)

    def test_oracle_equivalence_random(self):
        rng = np.random.default_rng(6)
        for _ in range(60):
            m = int(rng.integers(4, 60))
            scores = rng.choice(np.round(rng.standard_normal(8), 2), size=m)
            labels = np.where(rng.random(m) < 0.5, 1, -1)
            if len(np.unique(labels)) < 2:
                continue
            assert auc_roc(scores, labels) == brute_auc(scores, labels)
            assert abs(average_precision(scores, labels) - brute_ap(scores, labels)) < 1e-12

    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=25)
    def test_auc_monotone_invariance(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(4, 40))
        scores = rng.standard_normal(m)
        labels = np.where(rng.random(m) < 0.5, 1, -1)
        if len(np.unique(labels)) < 2:
            return
        base = auc_roc(scores, labels)
        assert auc_roc(np.exp(scores), labels) == pytest.approx(base, abs=1e-12)
        assert auc_roc(3 * scores - 7, labels) == pytest.approx(base, abs=1e-12)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            auc_roc(np.array([0.1, 0.2]), np.array([1, 1]))


def test_cross_validated_scores_align_with_sample():
    net, _ = dynamic_sbm(40, 4, seed=20)
    emb = np.random.default_rng(7).standard_normal((40, 4))
    s = sample_training_set(net, 3, emb, "l2", 20, seed=1)
    model, pooled = cross_validated_scores(s, folds=5)
    assert pooled.shape == (40,)
    assert np.all((pooled >= 0) & (pooled <= 1))
    assert np.isfinite(model.cv_auc)


def test_separation_values_matches_scalar_functions():
    emb = np.random.default_rng(8).standard_normal((7, 3))
    pairs = [(0, 1), (2, 5), (6, 3)]
    l2 = separation_values(emb, pairs, "l2")
    had = separation_values(emb, pairs, "hadamard")
    for k, (i, j) in enumerate(pairs):
        assert l2[k] == pytest.approx(l2_separation(emb, i, j))
        assert had[k] == pytest.approx(hadamard_separation(emb, i, j))
