"""Tests for batch construction, the forward/backward pass and the training loop."""

import logging

import numpy as np
import pytest

from lib.ner.constants import UNK_INDEX
from lib.ner.corpus import GoldSpan, Sentence, SpanInstance, parse_bio
from lib.ner.diagnostics import NumericCounters
from lib.ner.encoder import PrecomputedEncoder
from lib.ner.evaluation import evaluate, predict_dataset
from lib.ner.experiments import variant_hyperparams
from lib.ner.hyperparams import Hyperparams
from lib.ner.optimizer import OptimizerState
from lib.ner.performance_monitor import PerformanceMonitor
from lib.ner.training import (
    TrainingBatch,
    backward,
    build_training_batch,
    forward_batch,
    initial_params,
    run_epoch,
    sentence_instances,
    train,
)
from lib.ner.validation import ContractViolation, NumericError


@pytest.fixture
def fixed_hyper(small_hyper):
    """No dropout and every negative, so each epoch sees the same instances."""
    return small_hyper.with_overrides(dropout_rate=0.0, negative_sampling=False, max_span_len=3)


class TestBatches:

    def test_instances_are_gold_then_negatives(self, small_hyper):
        sentence = Sentence(4, ("a", "b", "c", "d", "e"))
        gold = [GoldSpan(1, 2, "PER")]
        instances = sentence_instances(sentence, gold, small_hyper, epoch=1)
        assert (instances[0].start, instances[0].end, instances[0].label) == (1, 2, "PER")
        assert len(instances) == 1 + 2  # ceil(0.35 * 5)
        assert all(inst.label == "O" for inst in instances[1:])

    def test_negatives_depend_on_epoch_and_sentence_only(self, small_hyper):
        sentence = Sentence(4, tuple("abcdefghij"))
        first = sentence_instances(sentence, [], small_hyper, epoch=2)
        assert first == sentence_instances(sentence, [], small_hyper, epoch=2)
        others = [sentence_instances(sentence, [], small_hyper, epoch=e) for e in range(3, 13)]
        assert any(o != first for o in others)

    def test_pooled_batch(self, tiny_dataset, small_hyper):
        batch = build_training_batch(tiny_dataset, [2, 0], small_hyper, epoch=1)
        assert [s.id for s in batch.sentences] == [2, 0]
        assert batch.num_tokens == 6
        assert batch.token_offsets.tolist() == [0, 2]
        assert set(batch.owner.tolist()) == {0, 1}

    def test_instance_outside_sentence(self, tiny_dataset):
        with pytest.raises(ContractViolation):
            TrainingBatch.from_instances(tiny_dataset.sentences[:1], [SpanInstance(0, 2, 4, "O")],
                                         tiny_dataset.label_set)


class TestForwardBackward:

    def test_lambda_zero_has_no_contrastive_gradient(self, tiny_dataset, fixed_hyper):
        params = initial_params(tiny_dataset, fixed_hyper)
        batch = build_training_batch(tiny_dataset, [0, 1, 2], fixed_hyper, epoch=1)
        ce_only = fixed_hyper.with_overrides(lambda_=0.0)
        fwd = forward_batch(params, batch, ce_only)
        assert fwd.d_rd_scl is None
        assert fwd.loss_final == fwd.loss_ce

    def test_combined_loss(self, tiny_dataset, fixed_hyper):
        params = initial_params(tiny_dataset, fixed_hyper)
        batch = build_training_batch(tiny_dataset, [0, 1, 2], fixed_hyper, epoch=1)
        fwd = forward_batch(params, batch, fixed_hyper)
        lam = fixed_hyper.lambda_
        assert fwd.loss_final == pytest.approx((1 - lam) * fwd.loss_ce + lam * fwd.loss_scl)

    def test_frozen_encoder_gradients(self, tiny_dataset, fixed_hyper, rng):
        features = PrecomputedEncoder({s.id: rng.normal(size=(len(s), 16)) for s in tiny_dataset.sentences}, 16)
        params = initial_params(tiny_dataset, fixed_hyper, features)
        encoder = params.make_encoder(features)
        batch = build_training_batch(tiny_dataset, [0, 1, 2], fixed_hyper, epoch=1)
        grads = backward(params, forward_batch(params, batch, fixed_hyper, encoder=encoder),
                         fixed_hyper, batch, encoder)
        assert list(grads) == ["W", "V"]

    def test_gradient_shapes(self, tiny_dataset, fixed_hyper):
        params = initial_params(tiny_dataset, fixed_hyper)
        batch = build_training_batch(tiny_dataset, [0, 1, 2], fixed_hyper, epoch=1)
        grads = backward(params, forward_batch(params, batch, fixed_hyper), fixed_hyper, batch)
        for name, value in params.named_arrays().items():
            assert grads[name].shape == value.shape

    @pytest.mark.filterwarnings("error")
    def test_non_finite_loss_aborts(self, tiny_dataset, fixed_hyper):
        params = initial_params(tiny_dataset, fixed_hyper)
        params.scoring.V[0, 0] = np.inf
        batch = build_training_batch(tiny_dataset, [0, 1, 2], fixed_hyper, epoch=1)
        with pytest.raises(NumericError):
            forward_batch(params, batch, fixed_hyper)


class TestTrain:

    def test_zero_epochs(self, tiny_dataset, small_hyper):
        hyper = small_hyper.with_overrides(epochs=0)
        result = train(tiny_dataset, tiny_dataset, hyper)
        assert result.log == []
        assert result.log_text() == ""
        assert result.best_epoch == 0
        initial = initial_params(tiny_dataset, hyper)
        for name, value in initial.named_arrays().items():
            np.testing.assert_array_equal(result.params.named_arrays()[name], value)
        assert 0.0 <= result.best_dev_f1 <= 100.0

    def test_loss_decreases(self, synthetic_small, fixed_hyper):
        train_set, dev_set = synthetic_small[0], synthetic_small[1]
        hyper = fixed_hyper.with_overrides(epochs=5, lambda_=0.0, learning_rate=0.003)
        result = train(train_set, dev_set, hyper)
        losses = [record.loss_ce for record in result.log]
        assert all(later < earlier for earlier, later in zip(losses, losses[1:]))

    def test_identical_runs(self, synthetic_small, small_hyper):
        train_set, dev_set = synthetic_small[0], synthetic_small[1]
        first = train(train_set, dev_set, small_hyper)
        second = train(train_set, dev_set, small_hyper)
        assert first.log_text() == second.log_text()
        for name, value in first.params.named_arrays().items():
            assert value.tobytes() == second.params.named_arrays()[name].tobytes()
        assert first.table.centroids.tobytes() == second.table.centroids.tobytes()

    def test_log_records(self, synthetic_small, small_hyper):
        result = train(synthetic_small[0], synthetic_small[1], small_hyper)
        lines = result.log_text().splitlines()
        assert len(lines) == small_hyper.epochs
        for epoch, line in enumerate(lines, start=1):
            fields = line.split("\t")
            assert len(fields) == 8
            assert int(fields[0]) == epoch
            assert fields[7] == "0.00"
        assert result.best_dev_f1 == max(record.dev_f1 for record in result.log)

    def test_empty_dev_keeps_final_epoch(self, tiny_dataset, small_hyper):
        empty = parse_bio("", label_set=tiny_dataset.label_set)
        result = train(tiny_dataset, empty, small_hyper)
        assert result.best_epoch == small_hyper.epochs

    def test_ce_baseline_end_to_end(self, synthetic_small, small_hyper):
        train_set, dev_set, test_set = synthetic_small[0], synthetic_small[1], synthetic_small[2]
        baseline = variant_hyperparams(small_hyper, "ce_only")
        assert baseline.lambda_ == 0.0 and baseline.alpha == 0.0
        first = train(train_set, dev_set, baseline)
        second = train(train_set, dev_set, baseline.with_overrides(tau=5.0))
        for name, value in first.params.named_arrays().items():
            assert value.tobytes() == second.params.named_arrays()[name].tobytes()
        assert all(record.loss_final == record.loss_ce for record in first.log)
        _, with_table = evaluate(first.params, first.table, test_set, 0.0, baseline.max_span_len)
        assert with_table == predict_dataset(first.params, None, test_set, 0.0, baseline.max_span_len)

    def test_epoch_phases_are_timed(self, tiny_dataset, small_hyper):
        params = initial_params(tiny_dataset, small_hyper)
        monitor = PerformanceMonitor(logging.getLogger("tests.training"))
        run_epoch(params, OptimizerState.for_params(params.named_arrays()), tiny_dataset,
                  small_hyper.with_overrides(batch_size=2), 1, params.make_encoder(), NumericCounters(), monitor)
        assert monitor.total_steps == 2
        phases = monitor.get_phase_stats()
        assert set(phases) == {"forward", "backward", "update"}
        assert all(stats.samples == 2 for stats in phases.values())

    def test_rare_tokens_train_the_unk_row(self, synthetic_small, small_hyper):
        train_set, dev_set = synthetic_small[0], synthetic_small[1]
        hyper = small_hyper.with_overrides(min_token_count=2, epochs=1)
        initial = initial_params(train_set, hyper).encoder
        assert len(initial.vocab) < len(initial_params(train_set, small_hyper).encoder.vocab)
        trained = train(train_set, dev_set, hyper).params.encoder
        assert trained.vocab == initial.vocab
        assert not np.array_equal(trained.E[UNK_INDEX], initial.E[UNK_INDEX])

    def test_label_sets_must_match(self, tiny_dataset, small_hyper):
        with pytest.raises(ContractViolation):
            train(tiny_dataset, parse_bio("x\tB-OTHER\n"), small_hyper)

    def test_memorizes_tiny_corpus(self, tiny_dataset):
        hyper = Hyperparams(epochs=150, learning_rate=0.05, batch_size=8, dropout_rate=0.0, max_span_len=3,
                            negative_sampling=False, embed_dim=8, hidden_dim=16, projection_dim=16, seed=1)
        result = train(tiny_dataset, tiny_dataset, hyper)
        assert result.best_dev_f1 == 100.0
        report, _ = evaluate(result.params, result.table, tiny_dataset, hyper.alpha, hyper.max_span_len)
        assert report.f1 == 100.0
