"""Tests for centroid tables, the retrieval distribution and interpolation."""

import math

import numpy as np
import pytest

from lib.ner.corpus import LabelSet
from lib.ner.encoder import Vocabulary
from lib.ner.rai import (
    CentroidTable,
    build_centroid_table,
    centroid_instances,
    centroid_table_from_reps,
    final_distributions,
    interpolate,
    load_centroid_table,
    ra_distribution,
    ra_distributions,
    save_centroid_table,
)
from lib.ner.span_model import init_model_params, span_distributions
from lib.ner.validation import BinaryFormatError, ValidationError


@pytest.fixture
def labels():
    return LabelSet.from_entity_types(["A", "B"])  # A, B, O


@pytest.fixture
def basis_table(labels):
    return CentroidTable(labels, np.eye(3), np.array([1, 1, 1]))


class TestCentroidTable:

    def test_single_instance_per_label(self, labels, rng):
        R = rng.normal(size=(3, 4))
        table = centroid_table_from_reps(R, np.array([0, 1, 2]), labels)
        np.testing.assert_array_equal(table.centroids, R)
        assert table.counts.tolist() == [1, 1, 1]

    def test_opposite_instances_cancel(self, labels, rng):
        r = rng.normal(size=4)
        table = centroid_table_from_reps(np.stack([r, -r, r]), np.array([0, 0, 1]), labels)
        np.testing.assert_array_equal(table.centroids[0], np.zeros(4))

    def test_brute_force_mean(self, labels, rng):
        R = rng.normal(size=(50, 6))
        ids = rng.integers(0, 3, size=50)
        table = centroid_table_from_reps(R, ids, labels)
        for k in range(3):
            rows = [R[n] for n in range(50) if ids[n] == k]
            expected = [sum(row[d] for row in rows) / len(rows) for d in range(6)]
            np.testing.assert_allclose(table.centroids[k], expected, rtol=0, atol=1e-12)

    def test_missing_label_has_no_entry(self, labels, rng):
        table = centroid_table_from_reps(rng.normal(size=(2, 3)), np.array([0, 2]), labels)
        assert table.missing_labels == ["B"]
        assert table.centroid("B") is None
        assert table.centroid("A") is not None

    def test_file_round_trip(self, labels, tmp_path):
        centroids = np.array([[0.5, -0.25], [0.0, 0.0], [1.0, 0.125]])
        table = CentroidTable(labels, centroids, np.array([3, 0, 7]))
        path = tmp_path / "centroids.bin"
        save_centroid_table(path, table)
        loaded = load_centroid_table(path)
        assert loaded.label_set == labels
        assert loaded.counts.tolist() == [3, 0, 7]
        np.testing.assert_array_equal(loaded.centroids, centroids)

    def test_truncated_file(self, labels, tmp_path):
        path = tmp_path / "centroids.bin"
        save_centroid_table(path, CentroidTable(labels, np.ones((3, 2)), np.array([1, 1, 1])))
        path.write_bytes(path.read_bytes()[:-1])
        with pytest.raises(BinaryFormatError):
            load_centroid_table(path)


class TestRetrievalDistribution:

    def test_hand_evaluation(self, basis_table):
        o_ra = ra_distribution(np.array([1.0, 0.0, 0.0]), basis_table)
        e = math.e
        np.testing.assert_allclose(o_ra, [e / (e + 2), 1 / (e + 2), 0.0], rtol=0, atol=1e-12)

    def test_equal_similarities(self, basis_table):
        o_ra = ra_distribution(np.array([1.0, 1.0, 1.0]), basis_table)
        np.testing.assert_allclose(o_ra, [1 / 3, 1 / 3, 0.0], rtol=0, atol=1e-12)

    def test_non_entity_mass_removed(self, labels, rng):
        table = centroid_table_from_reps(rng.normal(size=(9, 4)), np.array([0, 1, 2] * 3), labels)
        O = ra_distributions(rng.normal(size=(20, 4)), table)
        assert np.all(O[:, 2] == 0.0)
        assert np.all(O.sum(axis=1) < 1.0)

    def test_no_entity_centroid(self, labels):
        table = CentroidTable(labels, np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]), np.array([0, 0, 4]))
        np.testing.assert_array_equal(ra_distribution(np.array([1.0, 0.0]), table), np.zeros(3))

    def test_absent_label_gets_zero(self, labels):
        table = CentroidTable(labels, np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]), np.array([2, 0, 2]))
        o_ra = ra_distribution(np.array([1.0, 0.0]), table)
        e = math.e
        np.testing.assert_allclose(o_ra, [e / (e + 1), 0.0, 0.0], rtol=0, atol=1e-12)

    def test_dimension_checked(self, basis_table):
        with pytest.raises(ValidationError):
            ra_distribution(np.ones(4), basis_table)


class TestInterpolation:

    def test_reference_values(self):
        p = interpolate(np.array([0.7, 0.2, 0.1]), np.array([0.6, 0.4, 0.0]), 0.5)
        np.testing.assert_allclose(p, [0.65, 0.3, 0.05], rtol=0, atol=1e-12)

    def test_endpoints(self, rng):
        o_model = rng.dirichlet(np.ones(3))
        o_ra = np.array([0.6, 0.4, 0.0])
        np.testing.assert_array_equal(interpolate(o_model, o_ra, 0.0), o_model)
        np.testing.assert_array_equal(interpolate(o_model, o_ra, 1.0), o_ra)

    def test_alpha_range(self):
        with pytest.raises(ValidationError):
            interpolate(np.ones(2), np.ones(2), -0.1)

    def test_final_distribution_identities(self, labels, rng):
        table = centroid_table_from_reps(rng.normal(size=(9, 4)), np.array([0, 1, 2] * 3), labels)
        P = rng.dirichlet(np.ones(3), size=15)
        R = rng.normal(size=(15, 4))
        assert final_distributions(P, R, table, 0.0) is P
        assert final_distributions(P, R, None, 0.5) is P
        for alpha in (0.25, 0.5, 0.9):
            p_final = final_distributions(P, R, table, alpha)
            np.testing.assert_allclose(p_final[:, 2], (1 - alpha) * P[:, 2], rtol=0, atol=1e-15)
            o_ra = ra_distributions(R, table)
            np.testing.assert_allclose(p_final.sum(axis=1), 1 - alpha * (1 - o_ra.sum(axis=1)),
                                       rtol=0, atol=1e-12)


class TestBuildCentroidTable:

    def test_matches_manual_mean(self, tiny_dataset):
        labels = tiny_dataset.label_set
        vocab = Vocabulary.build(tiny_dataset.sentences)
        params = init_model_params(labels, seed=2, vocab=vocab, hidden_dim=6, embed_dim=4, projection_dim=5)
        table = build_centroid_table(params, tiny_dataset, max_span_len=3, neg_ratio=0.35, seed=9)

        reps = {name: [] for name in labels.labels}
        encoder = params.make_encoder()
        items = centroid_instances(tiny_dataset, 3, 0.35, 9)
        for sentence, spans in zip(tiny_dataset.sentences, items):
            R, _ = span_distributions(encoder.encode(sentence), [(i, j) for i, j, _ in spans], params.scoring)
            for (_, _, name), r in zip(spans, R):
                reps[name].append(r)
        for k, name in enumerate(labels.labels):
            assert table.counts[k] == len(reps[name])
            np.testing.assert_allclose(table.centroids[k], np.mean(reps[name], axis=0), rtol=0, atol=1e-12)

    def test_deterministic(self, tiny_dataset):
        params = init_model_params(tiny_dataset.label_set, seed=2, vocab=Vocabulary.build(tiny_dataset.sentences),
                                   hidden_dim=6, embed_dim=4, projection_dim=5)
        first = build_centroid_table(params, tiny_dataset, 3, 0.35, seed=9)
        second = build_centroid_table(params, tiny_dataset, 3, 0.35, seed=9)
        np.testing.assert_array_equal(first.centroids, second.centroids)

    def test_all_negatives(self, tiny_dataset):
        params = init_model_params(tiny_dataset.label_set, seed=2, vocab=Vocabulary.build(tiny_dataset.sentences),
                                   hidden_dim=6, embed_dim=4, projection_dim=5)
        table = build_centroid_table(params, tiny_dataset, 2, 0.35, seed=9, negative_sampling=False)
        # spans of length <= 2 over sentences of 4, 2 and 2 tokens, minus 4 gold spans
        assert table.counts[tiny_dataset.label_set.non_entity_index] == (4 + 3) + 3 + 3 - 4
