"""Tests for cosine similarity, the contrastive loss and the combined objective."""

import math

import numpy as np
import pytest

from lib.ner.contrastive import (
    ContrastiveBatch,
    combined_loss,
    cosine,
    scl_loss,
    scl_loss_and_grad,
    scl_pair_term,
)
from lib.ner.diagnostics import NumericCounters
from lib.ner.validation import ValidationError


def oracle_scl(R, labels, tau):
    """Double loop over anchors, positives and negatives with plain floats."""
    def cos(a, b):
        na = math.sqrt(sum(x * x for x in a))
        nb = math.sqrt(sum(x * x for x in b))
        if na < 1e-12 or nb < 1e-12:
            return 0.0
        return sum(x * y for x, y in zip(a, b)) / (na * nb)

    rows = [list(map(float, r)) for r in R]
    labels = [int(l) for l in labels]
    total = 0.0
    for label in sorted(set(labels)):
        members = [k for k, l in enumerate(labels) if l == label]
        others = [k for k, l in enumerate(labels) if l != label]
        if len(members) < 2 or not others:
            continue
        for a in members:
            exps = [cos(rows[a], rows[m]) / tau for m in others]
            top = max(exps)
            lse = top + math.log(sum(math.exp(e - top) for e in exps))
            for p in members:
                if p == a:
                    continue
                total -= (cos(rows[a], rows[p]) / tau - lse) / (len(members) - 1)
    return total


class TestCosine:

    def test_same_vector(self):
        assert cosine(np.array([3.0, 4.0]), np.array([3.0, 4.0])) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == 0.0

    def test_opposite(self):
        assert cosine(np.array([1.0, 1.0]), np.array([-2.0, -2.0])) == pytest.approx(-1.0)

    def test_zero_vector_is_counted(self):
        counters = NumericCounters()
        assert cosine(np.zeros(3), np.ones(3), counters) == 0.0
        assert counters.degenerate_vectors == 1


class TestPairTerm:

    def test_hand_oracle(self):
        F = scl_pair_term(np.array([1.0, 0.0]), np.array([2.0, 0.0]), np.array([[0.0, 1.0]]), tau=1.0)
        assert F == pytest.approx(1.0, abs=1e-12)

    def test_equal_distances(self):
        anchor = np.array([1.0, 0.0])
        positive = np.array([1.0, 1.0])
        negatives = np.array([[1.0, 1.0], [2.0, 2.0], [0.5, 0.5]])
        F = scl_pair_term(anchor, positive, negatives, tau=1.0)
        assert F == pytest.approx(-math.log(3), abs=1e-12)

    def test_empty_negatives_skipped(self):
        counters = NumericCounters()
        assert scl_pair_term(np.ones(2), np.ones(2), np.zeros((0, 2)), 0.1, counters) == 0.0
        assert counters.skipped_contrastive_terms == 1

    def test_temperature_scaling(self, rng):
        anchor, positive = rng.normal(size=4), rng.normal(size=4)
        negatives = rng.normal(size=(5, 4))
        d_pos = cosine(anchor, positive)
        d_neg = np.array([cosine(anchor, m) for m in negatives])
        for tau in (0.05, 0.1, 1.0, 3.0):
            expected = d_pos / tau - math.log(sum(math.exp(d / tau) for d in d_neg))
            assert scl_pair_term(anchor, positive, negatives, tau) == pytest.approx(expected, abs=1e-9)


class TestSclLoss:

    def test_brute_force_oracle(self, rng):
        for _ in range(200):
            m = int(rng.integers(1, 9))
            labels = rng.integers(0, int(rng.integers(1, 5)), size=m)
            R = rng.normal(size=(m, 4))
            for tau in (0.1, 1.0):
                expected = oracle_scl(R, labels, tau)
                assert scl_loss(ContrastiveBatch(R, labels), tau) == pytest.approx(expected, abs=1e-9)

    def test_documented_batch(self, rng):
        R = rng.normal(size=(6, 4))
        labels = np.array([0, 1, 2, 0, 1, 2])
        assert scl_loss(ContrastiveBatch(R, labels), 0.1) == pytest.approx(oracle_scl(R, labels, 0.1), abs=1e-9)

    def test_scale_invariance(self, rng):
        R = rng.normal(size=(8, 5))
        labels = np.array([0, 0, 1, 1, 1, 2, 2, 0])
        base = scl_loss(ContrastiveBatch(R, labels), 0.1)
        for c in (0.01, 1.0, 100.0):
            assert scl_loss(ContrastiveBatch(R * c, labels), 0.1) == pytest.approx(base, abs=1e-9)

    def test_permutation_invariance(self, rng):
        R = rng.normal(size=(7, 3))
        labels = np.array([0, 1, 1, 2, 0, 2, 1])
        order = rng.permutation(7)
        assert scl_loss(ContrastiveBatch(R[order], labels[order]), 0.1) == pytest.approx(
            scl_loss(ContrastiveBatch(R, labels), 0.1), abs=1e-9)

    def test_single_label(self, rng):
        counters = NumericCounters()
        assert scl_loss(ContrastiveBatch(rng.normal(size=(5, 3)), np.zeros(5)), 0.1, counters) == 0.0
        assert counters.skipped_contrastive_terms == 1

    def test_singletons(self, rng):
        assert scl_loss(ContrastiveBatch(rng.normal(size=(4, 3)), np.arange(4)), 0.1) == 0.0

    def test_small_batch(self, rng):
        assert scl_loss(ContrastiveBatch(rng.normal(size=(1, 3)), np.zeros(1)), 0.1) == 0.0

    def test_gradient_against_finite_differences(self, rng):
        R = rng.normal(size=(6, 4))
        labels = np.array([0, 0, 1, 1, 2, 2])
        _, dR = scl_loss_and_grad(R, labels, 0.5)
        numeric = np.zeros_like(R)
        h = 1e-6
        for idx in np.ndindex(R.shape):
            up, down = R.copy(), R.copy()
            up[idx] += h
            down[idx] -= h
            numeric[idx] = (scl_loss_and_grad(up, labels, 0.5, with_grad=False)[0]
                            - scl_loss_and_grad(down, labels, 0.5, with_grad=False)[0]) / (2 * h)
        np.testing.assert_allclose(dR, numeric, atol=1e-6)

    def test_tau_must_be_positive(self, rng):
        with pytest.raises(ValidationError):
            scl_loss(ContrastiveBatch(rng.normal(size=(2, 2)), np.array([0, 1])), 0.0)

    @staticmethod
    def _pair_rotation(rng, m, theta):
        """Rows whose only angle-dependent cosine is between rows 0 and 1."""
        R = np.zeros((m, m + 3))
        R[:, :m] = rng.normal(size=(m, m))
        R[0, m], R[0, m + 2] = math.cos(theta), math.sin(theta)
        R[1, m + 1], R[1, m + 2] = math.cos(theta), math.sin(theta)
        return R

    def test_separating_different_labels_never_increases_loss(self, rng):
        for _ in range(100):
            m = int(rng.integers(3, 9))
            labels = rng.integers(0, 3, size=m)
            labels[1] = (labels[0] + 1) % 3
            seed = int(rng.integers(2 ** 31))
            thetas = sorted(rng.uniform(0.0, math.pi / 2, size=2))
            low, high = (self._pair_rotation(np.random.default_rng(seed), m, t) for t in thetas)
            assert cosine(low[0], low[1]) <= cosine(high[0], high[1]) + 1e-12
            closer = scl_loss(ContrastiveBatch(high, labels), 0.1)
            assert scl_loss(ContrastiveBatch(low, labels), 0.1) <= closer + 1e-12


class TestCombinedLoss:

    def test_reference_values(self):
        assert combined_loss(2.0, -1.0, 0.1) == pytest.approx(1.7)

    def test_endpoints(self):
        assert combined_loss(2.0, -1.0, 0.0) == 2.0
        assert combined_loss(2.0, -1.0, 1.0) == -1.0

    def test_weight_range(self):
        with pytest.raises(ValidationError):
            combined_loss(1.0, 1.0, 1.5)
