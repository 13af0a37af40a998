"""Tests for training loops, resume, abort handling and evaluation sweeps."""

import dataclasses

import numpy as np
import pytest

from tcn_bench import functional as F
from tcn_bench.checkpoint import load_checkpoint
from tcn_bench.config import config_hash, dump_config
from tcn_bench.constants import (
    ABORT_SNAPSHOT,
    AUTOENCODER_CHECKPOINT,
    CHECKPOINT_NAME,
    LOSS_LOG,
    PREDICTOR_CHECKPOINT,
    PREDICTOR_LOSS_LOG,
)
from tcn_bench.exceptions import CheckpointError, NormalizationError, NumericalAbortError
from tcn_bench.export_writers import read_loss_log
from tcn_bench.helpers import derive_seed
from tcn_bench.layers import InitScheme, Linear
from tcn_bench.manifest import export_manifest, import_presentations
from tcn_bench.models import (
    AnalogyScorer,
    AnalogyScorerConfig,
    Autoencoder,
    AutoencoderConfig,
    Predictor,
    PredictorConfig,
)
from tcn_bench.optim import Adam
from tcn_bench.run_directory import RunDirectory
from tcn_bench.tensor import Tensor
from tcn_bench.training import (
    TrainingLoop,
    copy_baseline_mse,
    evaluate_analogy,
    evaluate_prediction,
    evaluation_problems,
    evaluation_sequences,
    load_analogy_model,
    load_dynobj_models,
    train_analogy,
    train_autoencoder,
    train_predictor,
    training_problems,
)
from tcn_bench.vaec import make_candidates


def make_run(tmp_path, name, config):
    return RunDirectory.create(tmp_path / name, dump_config(config.resolved()))


class TestTrainingLoop:
    """Test the generic loop on a two-parameter regression."""

    def build(self, run, config, iterations=4):
        layer = Linear(2, 1, InitScheme(), np.random.default_rng(0))
        optimizer = Adam(layer.named_parameters("toy."), 0.05)

        def restore(checkpoint):
            layer.load_state(checkpoint.subset("toy."))

        loop = TrainingLoop(
            "toy",
            run,
            config,
            iterations,
            optimizer,
            lambda: {f"toy.{k}": v for k, v in layer.state().items()},
            restore,
        )
        return loop, layer

    @staticmethod
    def regression_step(layer):
        def step(_, rng):
            x = rng.normal(size=(8, 2))
            y = x @ np.array([[2.0], [-1.0]]) + 0.5
            return F.mse_loss(layer(Tensor(x)), y), None

        return step

    def test_runs_all_iterations(self, tmp_path, toy_vaec_config):
        """Test loss log, checkpoint and record after a full run."""
        run = make_run(tmp_path, "loop", toy_vaec_config)
        loop, layer = self.build(run, toy_vaec_config)
        record = loop.run_steps(self.regression_step(layer))

        assert len(record.losses) == 4
        assert record.iterations == 4
        assert record.config_hash == config_hash(toy_vaec_config)
        assert record.train_accuracy is None
        losses, accuracies = read_loss_log(run.output_path(LOSS_LOG))
        assert losses == record.losses
        assert accuracies is None
        assert load_checkpoint(run.checkpoint_path(CHECKPOINT_NAME)).step == 4

    def test_interrupted_run_resumes_identically(self, tmp_path, toy_vaec_config):
        """Test an interrupted and resumed run matches an uninterrupted one."""
        straight_run = make_run(tmp_path, "straight", toy_vaec_config)
        loop, layer = self.build(straight_run, toy_vaec_config)
        straight = loop.run_steps(self.regression_step(layer))

        resumed_run = make_run(tmp_path, "resumed", toy_vaec_config)
        loop, layer = self.build(resumed_run, toy_vaec_config)
        inner = self.regression_step(layer)

        def interrupting(step, rng):
            if step == 3:
                raise KeyboardInterrupt
            return inner(step, rng)

        with pytest.raises(KeyboardInterrupt):
            loop.run_steps(interrupting)
        assert load_checkpoint(resumed_run.checkpoint_path(CHECKPOINT_NAME)).step == 3

        loop, layer = self.build(resumed_run, toy_vaec_config)
        resumed = loop.run_steps(self.regression_step(layer))

        assert resumed.losses == straight.losses
        a = load_checkpoint(straight_run.checkpoint_path(CHECKPOINT_NAME))
        b = load_checkpoint(resumed_run.checkpoint_path(CHECKPOINT_NAME))
        for key in a.entries:
            np.testing.assert_array_equal(a.entries[key], b.entries[key])

    def test_finished_run_is_not_repeated(self, tmp_path, toy_vaec_config):
        """Test resuming a finished run performs no further steps."""
        run = make_run(tmp_path, "finished", toy_vaec_config)
        loop, layer = self.build(run, toy_vaec_config)
        first = loop.run_steps(self.regression_step(layer))

        loop, layer = self.build(run, toy_vaec_config)
        calls = []

        def counting(step, rng):
            calls.append(step)
            return self.regression_step(layer)(step, rng)

        second = loop.run_steps(counting)
        assert calls == []
        assert second.losses == first.losses

    def test_zero_iterations(self, tmp_path, toy_vaec_config):
        """Test zero iterations saves the initial parameters and an empty log."""
        run = make_run(tmp_path, "zero", toy_vaec_config)
        loop, layer = self.build(run, toy_vaec_config, iterations=0)
        initial = layer.state()
        record = loop.run_steps(self.regression_step(layer))

        assert record.losses == []
        checkpoint = load_checkpoint(run.checkpoint_path(CHECKPOINT_NAME))
        assert checkpoint.step == 0
        np.testing.assert_array_equal(checkpoint.entries["toy.weight"], initial["weight"])
        assert read_loss_log(run.output_path(LOSS_LOG)) == ([], None)

    def test_foreign_checkpoint_rejected(self, tmp_path, toy_vaec_config):
        """Test a checkpoint from another config is not resumed."""
        run = make_run(tmp_path, "foreign", toy_vaec_config)
        loop, layer = self.build(run, toy_vaec_config)
        loop.run_steps(self.regression_step(layer))

        other = dataclasses.replace(toy_vaec_config, seed=9)
        loop, layer = self.build(run, other)
        with pytest.raises(CheckpointError, match="written by config"):
            loop.run_steps(self.regression_step(layer))

    def test_non_finite_loss_aborts(self, tmp_path, toy_vaec_config):
        """Test a NaN loss stops training and leaves a diagnostic snapshot."""
        run = make_run(tmp_path, "nan", toy_vaec_config)
        loop, layer = self.build(run, toy_vaec_config)
        inner = self.regression_step(layer)

        def diverging(step, rng):
            if step == 2:
                return Tensor(np.array(np.nan)), None
            return inner(step, rng)

        with pytest.raises(NumericalAbortError) as excinfo:
            loop.run_steps(diverging)

        assert excinfo.value.step == 2
        snapshot = run.checkpoint_path(ABORT_SNAPSHOT)
        assert excinfo.value.snapshot_path == str(snapshot)
        assert load_checkpoint(snapshot).step == 2
        losses, _ = read_loss_log(run.output_path(LOSS_LOG))
        assert len(losses) == 2


class TestAnalogyTraining:
    """Test analogy training and evaluation on the toy configuration."""

    def test_training_is_deterministic(self, tmp_path, toy_vaec_config):
        """Test two runs with the same config produce identical artifacts."""
        a = make_run(tmp_path, "a", toy_vaec_config)
        b = make_run(tmp_path, "b", toy_vaec_config)
        record_a, _ = train_analogy(toy_vaec_config, a)
        record_b, _ = train_analogy(toy_vaec_config, b)

        assert record_a.losses == record_b.losses
        assert len(record_a.losses) == 3
        assert all(np.isfinite(record_a.losses))
        assert a.checkpoint_path().read_bytes() == b.checkpoint_path().read_bytes()
        assert a.output_path(LOSS_LOG).read_text() == b.output_path(LOSS_LOG).read_text()

    def test_records_batch_accuracy(self, tmp_path, toy_vaec_config):
        run = make_run(tmp_path, "acc", toy_vaec_config)
        record, _ = train_analogy(toy_vaec_config, run)

        assert len(record.train_accuracy) == 3
        assert all(0.0 <= a <= 1.0 for a in record.train_accuracy)
        assert 0.0 <= record.metrics["final_batch_accuracy"] <= 1.0

    def test_training_manifest_is_reused(self, tmp_path, toy_vaec_config):
        """Test the written training manifest is read back on the next call."""
        run = make_run(tmp_path, "manifest", toy_vaec_config)
        first = training_problems(toy_vaec_config, run)
        assert (run.manifest_dir / "train_translation-1.txt").exists()
        assert training_problems(toy_vaec_config, run) == first
        assert len(first) == 64

    def test_evaluation_orders_are_fixed(self, toy_vaec_config):
        problems, presentations = evaluation_problems(toy_vaec_config, 2)
        again, repeated = evaluation_problems(toy_vaec_config, 2)
        assert problems == again
        assert presentations == repeated
        assert len(problems) == 16
        assert all(0 <= answer < 7 for _, answer in presentations)

    def test_evaluate_reports_each_region(self, tmp_path, toy_vaec_config):
        run = make_run(tmp_path, "eval", toy_vaec_config)
        _, model = train_analogy(toy_vaec_config, run)
        regions = evaluate_analogy(model, toy_vaec_config, run=run)

        assert [r.index for r in regions] == [1, 2]
        assert [r.tag for r in regions] == ["translation-1", "translation-2"]
        for region in regions:
            assert region.total == 16
            assert 0.0 <= region.accuracy <= 1.0
            assert region.correct == sum(r.correct for r in region.results)

    def test_evaluation_is_repeatable(self, tmp_path, toy_vaec_config):
        """Test evaluating a reloaded model gives the same predictions."""
        run = make_run(tmp_path, "reload", toy_vaec_config)
        _, model = train_analogy(toy_vaec_config, run)
        first = evaluate_analogy(model, toy_vaec_config, regions=[2], run=run)

        reloaded = load_analogy_model(toy_vaec_config, run)
        second = evaluate_analogy(reloaded, toy_vaec_config, regions=[2], run=run)
        assert [r.prediction for r in first[0].results] == [r.prediction for r in second[0].results]

    def test_train_stats_are_fitted_and_stored(self, tmp_path, toy_vaec_config):
        config = dataclasses.replace(toy_vaec_config, norm="batch_train_stats")
        run = make_run(tmp_path, "stats", config)
        _, model = train_analogy(config, run)

        assert model.norm.train_stats is not None
        checkpoint = load_checkpoint(run.checkpoint_path())
        assert "model.stats.mean" in checkpoint.entries
        assert checkpoint.entries["model.stats.var"].shape == (6,)

        reloaded = load_analogy_model(config, run)
        np.testing.assert_allclose(reloaded.norm.train_stats[0], model.norm.train_stats[0])

    def test_missing_checkpoint(self, tmp_path, toy_vaec_config):
        from tcn_bench.exceptions import InputMissingError

        run = make_run(tmp_path, "empty", toy_vaec_config)
        with pytest.raises(InputMissingError, match="analogy checkpoint"):
            load_analogy_model(toy_vaec_config, run)

    def test_long_runs_are_bit_identical(self, tmp_path, toy_vaec_config):
        """Test a hundred-step loss trajectory repeats exactly for the same seed."""
        config = dataclasses.replace(toy_vaec_config, iterations=100, checkpoint_every=50)
        a = make_run(tmp_path, "long-a", config)
        b = make_run(tmp_path, "long-b", config)
        record_a, _ = train_analogy(config, a)
        record_b, _ = train_analogy(config, b)

        assert len(record_a.losses) == 100
        assert np.array_equal(np.array(record_a.losses), np.array(record_b.losses))
        assert a.checkpoint_path().read_bytes() == b.checkpoint_path().read_bytes()

    def test_stored_evaluation_orders_are_used(self, tmp_path, toy_vaec_config):
        """Test a manifest written under another seed decides candidate orders and answers."""
        run = make_run(tmp_path, "foreign", toy_vaec_config)
        problems, default = evaluation_problems(toy_vaec_config, 2)
        path = run.manifest_dir / "eval_translation-2.txt"
        export_manifest(problems, path, seed=12345)

        stored, presentations = evaluation_problems(toy_vaec_config, 2, run)
        assert stored == problems
        assert presentations == [(c, a) for _, c, a in import_presentations(path)]
        assert presentations == [
            make_candidates(p, derive_seed(12345, "manifest", i)) for i, p in enumerate(problems)
        ]
        assert presentations != default

        model = AnalogyScorer(
            AnalogyScorerConfig.from_experiment(toy_vaec_config.resolved()), np.random.default_rng(0)
        )
        (region,) = evaluate_analogy(model, toy_vaec_config, regions=[2], run=run)
        assert [r.answer for r in region.results] == [a for _, a in presentations]

    def test_evaluation_requires_train_stats(self, toy_vaec_config):
        config = dataclasses.replace(toy_vaec_config, norm="batch_train_stats").resolved()
        model = AnalogyScorer(AnalogyScorerConfig.from_experiment(config), np.random.default_rng(0))
        with pytest.raises(NormalizationError, match="fitted training statistics"):
            evaluate_analogy(model, config, regions=[1])

    def test_evaluation_rejects_unused_train_stats(self, toy_vaec_config):
        config = toy_vaec_config.resolved()
        model = AnalogyScorer(AnalogyScorerConfig.from_experiment(config), np.random.default_rng(0))
        model.norm.train_stats = (np.zeros(6), np.ones(6))
        with pytest.raises(NormalizationError, match="only used by batch_train_stats"):
            evaluate_analogy(model, config, regions=[1])


class TestPredictionTraining:
    """Test the autoencoder and predictor stages on the toy configuration."""

    def test_stages_write_their_checkpoints(self, tmp_path, toy_dynobj_config):
        run = make_run(tmp_path, "dyn", toy_dynobj_config)
        ae_record, autoencoder = train_autoencoder(toy_dynobj_config, run)
        record, _ = train_predictor(toy_dynobj_config, run, autoencoder)

        assert len(ae_record.losses) == 2
        assert len(record.losses) == 2
        assert run.checkpoint_path(AUTOENCODER_CHECKPOINT).exists()
        assert run.checkpoint_path(PREDICTOR_CHECKPOINT).exists()
        losses, _ = read_loss_log(run.output_path(PREDICTOR_LOSS_LOG))
        assert losses == record.losses

    def test_evaluation_metrics(self, tmp_path, toy_dynobj_config):
        run = make_run(tmp_path, "dyn-eval", toy_dynobj_config)
        _, autoencoder = train_autoencoder(toy_dynobj_config, run)
        train_predictor(toy_dynobj_config, run, autoencoder)
        autoencoder, predictor = load_dynobj_models(toy_dynobj_config, run)

        metrics = evaluate_prediction(autoencoder, predictor, toy_dynobj_config, "test", run)
        assert metrics.split == "test"
        assert metrics.sequences == 4
        assert metrics.mse >= 0.0
        assert metrics.copy_baseline_mse >= 0.0
        assert metrics.reconstruction_mse >= 0.0
        assert (run.manifest_dir / "dynobj_test.txt").exists()

    def test_end_to_end_predictor(self, tmp_path, toy_dynobj_config):
        config = dataclasses.replace(toy_dynobj_config, end_to_end=True)
        run = make_run(tmp_path, "e2e", config)
        _, autoencoder = train_autoencoder(config, run)
        before = autoencoder.state()
        record, _ = train_predictor(config, run, autoencoder)

        assert all(np.isfinite(record.losses))
        after = autoencoder.state()
        for key in before:
            np.testing.assert_array_equal(before[key], after[key])

    def test_train_stats_predictor(self, tmp_path, toy_dynobj_config):
        config = dataclasses.replace(toy_dynobj_config, norm="batch_train_stats")
        run = make_run(tmp_path, "dyn-stats", config)
        _, autoencoder = train_autoencoder(config, run)
        _, predictor = train_predictor(config, run, autoencoder)

        assert predictor.norm.train_stats is not None
        assert "predictor.stats.mean" in load_checkpoint(run.checkpoint_path(PREDICTOR_CHECKPOINT)).entries

    def test_evaluation_sequences_are_fixed(self, toy_dynobj_config):
        first = evaluation_sequences(toy_dynobj_config, "train")
        assert evaluation_sequences(toy_dynobj_config, "train") == first
        assert evaluation_sequences(toy_dynobj_config, "test") != first
        assert len(first) == 4

    def test_evaluation_requires_train_stats(self, toy_dynobj_config):
        config = dataclasses.replace(toy_dynobj_config, norm="batch_train_stats").resolved()
        rng = np.random.default_rng(0)
        autoencoder = Autoencoder(AutoencoderConfig.from_experiment(config), rng)
        predictor = Predictor(PredictorConfig.from_experiment(config), rng)
        with pytest.raises(NormalizationError, match="fitted training statistics"):
            evaluate_prediction(autoencoder, predictor, config, "test")

    def test_evaluation_rejects_unused_train_stats(self, toy_dynobj_config):
        config = toy_dynobj_config.resolved()
        rng = np.random.default_rng(0)
        autoencoder = Autoencoder(AutoencoderConfig.from_experiment(config), rng)
        predictor = Predictor(PredictorConfig.from_experiment(config), rng)
        predictor.norm.train_stats = (np.zeros(3), np.ones(3))
        with pytest.raises(NormalizationError, match="only used by batch_train_stats"):
            evaluate_prediction(autoencoder, predictor, config, "test")


class TestCopyBaseline:
    def test_static_frames_score_zero(self):
        frames = np.ones((2, 3, 1, 4, 4))
        assert copy_baseline_mse(frames) == 0.0

    def test_single_pixel_change(self):
        frames = np.zeros((1, 2, 1, 2, 2))
        frames[0, 1, 0, 0, 0] = 1.0
        assert copy_baseline_mse(frames) == pytest.approx(0.25)


@pytest.mark.slow
class TestChanceLevel:
    def test_untrained_model_is_at_chance(self, tmp_path, toy_vaec_config):
        """Test an untrained scorer picks the answer about one time in seven."""
        config = dataclasses.replace(toy_vaec_config, iterations=0, eval_problems=1400)
        run = make_run(tmp_path, "chance", config)
        _, model = train_analogy(config, run)
        (result,) = evaluate_analogy(model, config, regions=[1], run=run)

        p = 1.0 / 7.0
        standard_error = np.sqrt(p * (1 - p) / result.total)
        assert abs(result.accuracy - p) < 3 * standard_error
