"""Training loops, checkpointing and evaluation sweeps.

Every random draw of a training step comes from `step_rng(seed, step)`, so a
run resumed from a checkpoint follows the same trajectory as an
uninterrupted one. Checkpoints carry the ADAM moments and, for
batch_train_stats, the fitted statistics.
"""

import dataclasses
import math
import time
from collections import Counter
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, NoReturn

import numpy as np
from numpy.typing import NDArray

from . import functional as F
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import ExperimentConfig, config_hash
from .constants import (
    ABORT_SNAPSHOT,
    AUTOENCODER_CHECKPOINT,
    AUTOENCODER_LOSS_LOG,
    CHECKPOINT_NAME,
    LOSS_LOG,
    PREDICTOR_CHECKPOINT,
    PREDICTOR_LOSS_LOG,
)
from .dynobj import SequenceSpec, render_frame, render_sequence, sample_sequence
from .exceptions import CheckpointError, NumericalAbortError
from .export_writers import read_loss_log, write_loss_log
from .helpers import derive_seed, format_duration, step_rng
from .layers import Layer
from .logger import logger
from .manifest import (
    export_manifest,
    export_sequences,
    import_manifest,
    import_presentations,
    import_sequences,
)
from .models import (
    AnalogyScorer,
    AnalogyScorerConfig,
    Autoencoder,
    AutoencoderConfig,
    Predictor,
    PredictorConfig,
)
from .normalization import NormSpec, check_evaluation_stats, fit_train_stats
from .optim import Adam
from .run_directory import RunDirectory
from .tensor import Tensor, no_grad
from .vaec import (
    AnalogyProblem,
    ImageBank,
    ObjectSpec,
    RegimeSpec,
    make_candidates,
    problem_images,
    sample_problems,
)

__all__ = [
    "RunRecord",
    "ProblemResult",
    "RegionAccuracy",
    "PredictionMetrics",
    "TrainingLoop",
    "training_problems",
    "evaluation_problems",
    "evaluation_sequences",
    "train_analogy",
    "load_analogy_model",
    "evaluate_analogy",
    "train_autoencoder",
    "train_predictor",
    "load_dynobj_models",
    "embed_objects",
    "encode_sequences",
    "evaluate_prediction",
    "copy_baseline_mse",
    "reconstruction_mse",
]

# Images embedded per forward pass outside training
_EMBED_CHUNK = 256

StepFn = Callable[[int, np.random.Generator], tuple[Tensor, float | None]]


@dataclass
class RunRecord:
    """Loss log and summary metrics of one training stage."""

    losses: list[float]
    seed: int
    config_hash: str
    iterations: int
    wall_clock: float = 0.0
    train_accuracy: list[float] | None = None
    metrics: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class ProblemResult:
    index: int
    relevant_dim: str
    answer: int
    prediction: int

    @property
    def correct(self) -> bool:
        return self.answer == self.prediction


@dataclass
class RegionAccuracy:
    """Per-problem outcomes for one region or scale."""

    index: int
    tag: str
    results: list[ProblemResult]

    @property
    def correct(self) -> int:
        return sum(r.correct for r in self.results)

    @property
    def total(self) -> int:
        return len(self.results)

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0


@dataclass
class PredictionMetrics:
    split: str
    mse: float
    copy_baseline_mse: float
    reconstruction_mse: float
    sequences: int


def _iterations(value: int | None) -> int:
    assert value is not None, "config must be resolved"
    return value


def _learning_rate(config: ExperimentConfig) -> float:
    assert config.learning_rate is not None, "config must be resolved"
    return config.learning_rate


class TrainingLoop:
    """Single-writer optimization loop with checkpoint, resume and abort handling."""

    def __init__(
        self,
        name: str,
        run: RunDirectory,
        config: ExperimentConfig,
        iterations: int,
        optimizer: Adam,
        state_fn: Callable[[], dict[str, NDArray[Any]]],
        restore_fn: Callable[[Checkpoint], None],
        checkpoint_name: str = CHECKPOINT_NAME,
        loss_log: str = LOSS_LOG,
    ):
        self.name = name
        self.run = run
        self.config = config
        self.digest = config_hash(config)
        self.iterations = iterations
        self.optimizer = optimizer
        self.state_fn = state_fn
        self.restore_fn = restore_fn
        self.checkpoint_path = run.checkpoint_path(checkpoint_name)
        self.loss_log_path = run.output_path(loss_log)
        self.losses: list[float] = []
        self.accuracies: list[float] = []

    def _entries(self) -> dict[str, NDArray[Any]]:
        return {**self.state_fn(), **self.optimizer.moments()}

    def save(self, step: int) -> None:
        save_checkpoint(self.checkpoint_path, self._entries(), self.digest, step)
        write_loss_log(
            self.loss_log_path,
            self.losses[:step],
            self.accuracies[:step] if len(self.accuracies) >= step else None,
            self.digest,
        )

    def resume(self) -> int:
        """Restore the latest checkpoint of this stage; returns its step."""
        if not self.checkpoint_path.exists():
            return 0
        checkpoint = load_checkpoint(self.checkpoint_path)
        if checkpoint.config_hash != self.digest:
            raise CheckpointError(
                f"Checkpoint was written by config {checkpoint.config_hash}, run uses {self.digest}",
                str(self.checkpoint_path),
            )
        self.restore_fn(checkpoint)
        self.optimizer.load_moments(checkpoint.entries, checkpoint.step)
        if checkpoint.step:
            losses, accuracies = read_loss_log(self.loss_log_path)
            if len(losses) < checkpoint.step:
                raise CheckpointError(
                    f"Loss log has {len(losses)} rows, checkpoint is at step {checkpoint.step}",
                    str(self.loss_log_path),
                )
            self.losses = losses[: checkpoint.step]
            self.accuracies = (accuracies or [])[: checkpoint.step]
        logger.info(f"Resuming {self.name} at step {checkpoint.step}/{self.iterations}")
        return checkpoint.step

    def run_steps(self, step_fn: StepFn) -> RunRecord:
        start = self.resume()
        began = time.perf_counter()
        every = self.config.checkpoint_every
        try:
            for step in range(start, self.iterations):
                rng = step_rng(self.config.seed, step, self.name)
                self.optimizer.zero_grad()
                loss, accuracy = step_fn(step, rng)
                value = loss.item()
                if not math.isfinite(value):
                    self._abort(step, value)
                loss.backward()
                self.optimizer.step()
                self.losses.append(value)
                if accuracy is not None:
                    self.accuracies.append(accuracy)

                done = step + 1
                if done % every == 0 or done == self.iterations:
                    self.save(done)
                    recent = self.losses[max(0, done - every) : done]
                    elapsed = format_duration(time.perf_counter() - began)
                    logger.info(
                        f"{self.name} step {done}/{self.iterations} "
                        f"loss {sum(recent) / len(recent):.4f} ({elapsed})"
                    )
            if start == self.iterations:
                # zero-iteration and already finished runs: the loaded parameters are the result
                self.save(self.iterations)
        except KeyboardInterrupt:
            completed = len(self.losses)
            self.save(completed)
            logger.warning(f"{self.name} interrupted at step {completed}; checkpoint saved")
            raise

        return RunRecord(
            losses=list(self.losses),
            seed=self.config.seed,
            config_hash=self.digest,
            iterations=self.iterations,
            wall_clock=time.perf_counter() - began,
            train_accuracy=list(self.accuracies) if self.accuracies else None,
        )

    def _abort(self, step: int, value: float) -> NoReturn:
        snapshot = save_checkpoint(
            self.run.checkpoint_path(ABORT_SNAPSHOT), self._entries(), self.digest, step
        )
        write_loss_log(self.loss_log_path, self.losses, None, self.digest)
        raise NumericalAbortError(f"Non-finite {self.name} loss ({value})", step, str(snapshot))


def _model_entries(prefix: str, layer: Layer, norm: NormSpec | None = None) -> dict[str, NDArray[Any]]:
    entries = {f"{prefix}{name}": value for name, value in layer.state().items()}
    if norm is not None and norm.train_stats is not None:
        mean, var = norm.train_stats
        entries[f"{prefix}stats.mean"] = np.asarray(mean)
        entries[f"{prefix}stats.var"] = np.asarray(var)
    return entries


def _restore_model(
    checkpoint: Checkpoint, prefix: str, layer: Layer, norm: NormSpec | None = None
) -> NormSpec | None:
    """Load parameters; returns the norm spec with any stored training statistics."""
    state = checkpoint.subset(prefix)
    layer.load_state(state)
    if norm is not None and "stats.mean" in state:
        stats = (state["stats.mean"].astype(np.float64), state["stats.var"].astype(np.float64))
        return dataclasses.replace(norm, train_stats=stats)
    return norm


def embed_objects(model: AnalogyScorer, specs: Sequence[ObjectSpec], bank: ImageBank) -> NDArray[Any]:
    with no_grad():
        chunks = [
            model.embed(Tensor(bank.stack(specs[i : i + _EMBED_CHUNK]))).data
            for i in range(0, len(specs), _EMBED_CHUNK)
        ]
    return np.concatenate(chunks)


def _fit_analogy_stats(
    model: AnalogyScorer, problems: Sequence[AnalogyProblem], bank: ImageBank
) -> NormSpec:
    """Whole-training-set statistics from unique images weighted by occurrence."""
    counts = Counter(obj for problem in problems for obj in problem.objects())
    specs = list(counts)
    weights = np.array([counts[s] for s in specs], dtype=np.float64)
    logger.info(f"Fitting training statistics over {len(specs)} unique images")
    return fit_train_stats(embed_objects(model, specs, bank), model.norm, weights)


def _presentation_images(
    problems: Sequence[AnalogyProblem],
    presentations: Sequence[tuple[list[ObjectSpec], int]],
    bank: ImageBank,
) -> tuple[NDArray[Any], NDArray[np.int64]]:
    images = np.stack([problem_images(p, c, bank) for p, (c, _) in zip(problems, presentations)])
    answers = np.array([answer for _, answer in presentations], dtype=np.int64)
    return images, answers


def training_problems(config: ExperimentConfig, run: RunDirectory | None = None) -> list[AnalogyProblem]:
    """Region 1 (or scale 1) problems; read from the run's manifest when present."""
    regime = RegimeSpec.create(config.regime_kind, 1)
    path = run.manifest_dir / f"train_{regime.tag}.txt" if run is not None else None
    if path is not None and path.exists():
        return import_manifest(path)
    problems = sample_problems(regime, config.train_problems, derive_seed(config.seed, "train-problems"))
    if path is not None:
        export_manifest(problems, path, seed=derive_seed(config.seed, "train-manifest"))
    return problems


def evaluation_problems(
    config: ExperimentConfig, index: int, run: RunDirectory | None = None
) -> tuple[list[AnalogyProblem], list[tuple[list[ObjectSpec], int]]]:
    """Problems of one region or scale with their fixed candidate orders.

    A manifest already in the run is authoritative, including the candidate
    order and answer position of every problem.
    """
    regime = RegimeSpec.create(config.regime_kind, index)
    path = run.manifest_dir / f"eval_{regime.tag}.txt" if run is not None else None
    if path is not None and path.exists():
        records = import_presentations(path)
        return [p for p, _, _ in records], [(c, a) for _, c, a in records]

    manifest_seed = derive_seed(config.seed, "eval-manifest", index)
    problems = sample_problems(
        regime, config.eval_problems, derive_seed(config.seed, "eval-problems", index)
    )
    if path is not None:
        export_manifest(problems, path, seed=manifest_seed)
    # same derivation as export_manifest, so these are the manifest's orders
    presentations = [
        make_candidates(problem, derive_seed(manifest_seed, "manifest", i))
        for i, problem in enumerate(problems)
    ]
    return problems, presentations



def _analogy_model(config: ExperimentConfig) -> AnalogyScorer:
    init_rng = np.random.default_rng(derive_seed(config.seed, "analogy-init"))
    return AnalogyScorer(AnalogyScorerConfig.from_experiment(config), init_rng)


def train_analogy(config: ExperimentConfig, run: RunDirectory) -> tuple[RunRecord, AnalogyScorer]:
    """Cross-entropy training on region/scale 1 with candidate order shuffled per presentation."""
    config = config.resolved()
    model = _analogy_model(config)
    problems = training_problems(config, run)
    bank = ImageBank(config.image_size)
    optimizer = Adam(model.named_parameters("model."), _learning_rate(config))

    def restore(checkpoint: Checkpoint) -> None:
        norm = _restore_model(checkpoint, "model.", model, model.norm)
        assert norm is not None
        model.norm = norm

    def step(_: int, rng: np.random.Generator) -> tuple[Tensor, float | None]:
        picks = rng.integers(0, len(problems), size=config.batch_size)
        batch = [problems[int(i)] for i in picks]
        presentations = [make_candidates(p, rng) for p in batch]
        images, answers = _presentation_images(batch, presentations, bank)
        logits = model.logits(Tensor(images), training=True, rng=rng)
        loss = F.softmax_cross_entropy(logits, answers)
        accuracy = float(np.mean(np.argmax(logits.data, axis=1) == answers))
        return loss, accuracy

    loop = TrainingLoop(
        "analogy",
        run,
        config,
        _iterations(config.iterations),
        optimizer,
        lambda: _model_entries("model.", model, model.norm),
        restore,
    )
    logger.info(
        f"Training {config.norm} analogy model on {len(problems)} problems "
        f"({model.num_parameters():,} parameters, {config.image_size}px)"
    )
    record = loop.run_steps(step)

    if config.norm == "batch_train_stats" and model.norm.train_stats is None:
        model.norm = _fit_analogy_stats(model, problems, bank)
        loop.save(loop.iterations)

    if record.train_accuracy:
        tail = record.train_accuracy[-config.checkpoint_every :]
        record.metrics["final_batch_accuracy"] = sum(tail) / len(tail)
    return record, model


def load_analogy_model(config: ExperimentConfig, run: RunDirectory) -> AnalogyScorer:
    config = config.resolved()
    model = _analogy_model(config)
    path = run.require(run.checkpoint_path(CHECKPOINT_NAME), "analogy checkpoint")
    checkpoint = load_checkpoint(path)
    if checkpoint.config_hash != config_hash(config):
        logger.warning(f"Checkpoint config {checkpoint.config_hash} differs from {config_hash(config)}")
    norm = _restore_model(checkpoint, "model.", model, model.norm)
    assert norm is not None
    model.norm = norm
    return model


def _evaluate_region(
    model: AnalogyScorer,
    config: ExperimentConfig,
    index: int,
    problems: Sequence[AnalogyProblem],
    presentations: Sequence[tuple[list[ObjectSpec], int]],
) -> RegionAccuracy:
    bank = ImageBank(config.image_size)
    results: list[ProblemResult] = []
    # online batch statistics need batches of the training size
    with no_grad():
        for start in range(0, len(problems), config.batch_size):
            chunk = problems[start : start + config.batch_size]
            images, answers = _presentation_images(
                chunk, presentations[start : start + config.batch_size], bank
            )
            predictions = np.argmax(model.logits(Tensor(images)).data, axis=1)
            results.extend(
                ProblemResult(index, p.relevant_dim, int(a), int(k))
                for p, a, k in zip(chunk, answers, predictions)
            )
    tag = RegimeSpec.create(config.regime_kind, index).tag
    region = RegionAccuracy(index, tag, results)
    logger.info(f"  {tag}: {region.accuracy:.1%} ({region.correct}/{region.total})")
    return region


def evaluate_analogy(
    model: AnalogyScorer,
    config: ExperimentConfig,
    regions: Sequence[int] | None = None,
    run: RunDirectory | None = None,
) -> list[RegionAccuracy]:
    """Accuracy per region or scale, in the order given."""
    config = config.resolved()
    check_evaluation_stats(model.norm)
    indices = list(regions if regions is not None else config.eval_regions)
    sets = {i: evaluation_problems(config, i, run) for i in indices}
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [
            pool.submit(_evaluate_region, model, config, i, sets[i][0], sets[i][1]) for i in indices
        ]
        return [f.result() for f in futures]


def _sequence_frames(specs: Sequence[SequenceSpec]) -> NDArray[np.float32]:
    """(N, T, 1, H, W) frames."""
    return np.stack([render_sequence(s) for s in specs])[:, :, None]


def encode_sequences(autoencoder: Autoencoder, frames: NDArray[Any]) -> Tensor:
    """Frozen-encoder embeddings (N, T, E) of (N, T, 1, H, W) frames."""
    n, t = frames.shape[:2]
    flat = frames.reshape(n * t, *frames.shape[2:])
    with no_grad():
        chunks = [
            autoencoder.encode(Tensor(flat[i : i + _EMBED_CHUNK])).data
            for i in range(0, len(flat), _EMBED_CHUNK)
        ]
    return Tensor(np.concatenate(chunks).reshape(n, t, -1))


def _sample_batch(config: ExperimentConfig, rng: np.random.Generator) -> list[SequenceSpec]:
    return [sample_sequence("train", rng, config.sequence_length) for _ in range(config.batch_size)]


def _autoencoder_model(config: ExperimentConfig) -> Autoencoder:
    init_rng = np.random.default_rng(derive_seed(config.seed, "autoencoder-init"))
    return Autoencoder(AutoencoderConfig.from_experiment(config), init_rng)


def _predictor_model(config: ExperimentConfig) -> Predictor:
    init_rng = np.random.default_rng(derive_seed(config.seed, "predictor-init"))
    return Predictor(PredictorConfig.from_experiment(config), init_rng)


def train_autoencoder(config: ExperimentConfig, run: RunDirectory) -> tuple[RunRecord, Autoencoder]:
    """Reconstruction MSE on single training frames at random positions."""
    config = config.resolved()
    model = _autoencoder_model(config)
    optimizer = Adam(model.named_parameters("autoencoder."), _learning_rate(config))

    def restore(checkpoint: Checkpoint) -> None:
        _restore_model(checkpoint, "autoencoder.", model)

    def step(_: int, rng: np.random.Generator) -> tuple[Tensor, float | None]:
        specs = _sample_batch(config, rng)
        positions = rng.integers(0, config.sequence_length, size=len(specs))
        images = np.stack(
            [render_frame(*s.params_at(int(t))) for s, t in zip(specs, positions)]
        )[:, None]
        _, reconstruction = model(Tensor(images))
        return F.mse_loss(reconstruction, images), None

    loop = TrainingLoop(
        "autoencoder",
        run,
        config,
        _iterations(config.autoencoder_iterations),
        optimizer,
        lambda: _model_entries("autoencoder.", model),
        restore,
        checkpoint_name=AUTOENCODER_CHECKPOINT,
        loss_log=AUTOENCODER_LOSS_LOG,
    )
    logger.info(f"Training autoencoder ({model.num_parameters():,} parameters)")
    return loop.run_steps(step), model


def _fit_prediction_stats(
    config: ExperimentConfig, autoencoder: Autoencoder, predictor: Predictor
) -> NormSpec:
    """Training statistics from a fixed sample of training sequences."""
    rng = np.random.default_rng(derive_seed(config.seed, "train-stats"))
    specs = [
        sample_sequence("train", rng, config.sequence_length)
        for _ in range(config.train_stats_sequences)
    ]
    z = np.concatenate(
        [
            encode_sequences(autoencoder, _sequence_frames(specs[i : i + config.batch_size])).data
            for i in range(0, len(specs), config.batch_size)
        ]
    )
    return fit_train_stats(z, predictor.norm)


def train_predictor(
    config: ExperimentConfig, run: RunDirectory, autoencoder: Autoencoder
) -> tuple[RunRecord, Predictor]:
    """Next-embedding MSE in normalized space over frozen encoder embeddings.

    With `end_to_end` the loss is the image-space MSE of the decoded
    de-normalized predictions; gradients pass through the frozen decoder.
    """
    config = config.resolved()
    predictor = _predictor_model(config)
    optimizer = Adam(predictor.named_parameters("predictor."), _learning_rate(config))

    def restore(checkpoint: Checkpoint) -> None:
        norm = _restore_model(checkpoint, "predictor.", predictor, predictor.norm)
        assert norm is not None
        predictor.norm = norm

    def step(_: int, rng: np.random.Generator) -> tuple[Tensor, float | None]:
        frames = _sequence_frames(_sample_batch(config, rng))
        out = predictor.predict(encode_sequences(autoencoder, frames), training=True, rng=rng)
        if not config.end_to_end:
            return F.mse_loss(out.normalized, out.targets), None
        autoencoder.zero_grad()
        n, steps, e = out.predictions.shape
        decoded = autoencoder.decode(out.predictions.reshape(n * steps, e))
        truth = frames[:, 1:].reshape(n * steps, *frames.shape[2:])
        return F.mse_loss(decoded, truth), None

    loop = TrainingLoop(
        "predictor",
        run,
        config,
        _iterations(config.predictor_iterations),
        optimizer,
        lambda: _model_entries("predictor.", predictor, predictor.norm),
        restore,
        checkpoint_name=PREDICTOR_CHECKPOINT,
        loss_log=PREDICTOR_LOSS_LOG,
    )
    logger.info(f"Training {config.norm} predictor over sequences of {config.sequence_length}")
    record = loop.run_steps(step)

    if config.norm == "batch_train_stats" and predictor.norm.train_stats is None:
        predictor.norm = _fit_prediction_stats(config, autoencoder, predictor)
        loop.save(loop.iterations)
    return record, predictor


def load_dynobj_models(config: ExperimentConfig, run: RunDirectory) -> tuple[Autoencoder, Predictor]:
    config = config.resolved()
    autoencoder = _autoencoder_model(config)
    predictor = _predictor_model(config)
    ae_checkpoint = load_checkpoint(
        run.require(run.checkpoint_path(AUTOENCODER_CHECKPOINT), "autoencoder checkpoint")
    )
    _restore_model(ae_checkpoint, "autoencoder.", autoencoder)
    predictor_checkpoint = load_checkpoint(
        run.require(run.checkpoint_path(PREDICTOR_CHECKPOINT), "predictor checkpoint")
    )
    norm = _restore_model(predictor_checkpoint, "predictor.", predictor, predictor.norm)
    assert norm is not None
    predictor.norm = norm
    return autoencoder, predictor


def evaluation_sequences(
    config: ExperimentConfig, split: str, run: RunDirectory | None = None
) -> list[SequenceSpec]:
    path = run.manifest_dir / f"dynobj_{split}.txt" if run is not None else None
    if path is not None and path.exists():
        return import_sequences(path)
    specs = [
        sample_sequence(split, derive_seed(config.seed, "eval-sequences", split, i), config.sequence_length)
        for i in range(config.eval_sequences)
    ]
    if path is not None:
        export_sequences(specs, path)
    return specs


def copy_baseline_mse(frames: NDArray[Any]) -> float:
    """Per-pixel MSE of predicting every frame as its predecessor."""
    diff = frames[:, 1:].astype(np.float64) - frames[:, :-1]
    return float(np.mean(diff * diff))


def reconstruction_mse(autoencoder: Autoencoder, frames: NDArray[Any]) -> float:
    """Per-pixel MSE of decoding the true embeddings of frames 2..T."""
    z = encode_sequences(autoencoder, frames)
    n, t, e = z.shape
    with no_grad():
        decoded = autoencoder.decode(z[:, 1:].reshape(n * (t - 1), e)).data
    diff = decoded.astype(np.float64) - frames[:, 1:].reshape(decoded.shape)
    return float(np.mean(diff * diff))


def evaluate_prediction(
    autoencoder: Autoencoder,
    predictor: Predictor,
    config: ExperimentConfig,
    split: str = "test",
    run: RunDirectory | None = None,
) -> PredictionMetrics:
    """Image-space MSE of decoded de-normalized predictions against frames 2..T."""
    config = config.resolved()
    check_evaluation_stats(predictor.norm)
    specs = evaluation_sequences(config, split, run)
    totals = np.zeros(3)
    for start in range(0, len(specs), config.batch_size):
        chunk = specs[start : start + config.batch_size]
        frames = _sequence_frames(chunk)
        z = encode_sequences(autoencoder, frames)
        with no_grad():
            out = predictor.predict(z)
            n, steps, e = out.predictions.shape
            decoded = autoencoder.decode(out.predictions.reshape(n * steps, e)).data
        diff = decoded.astype(np.float64) - frames[:, 1:].reshape(decoded.shape)
        totals += len(chunk) * np.array(
            [np.mean(diff * diff), copy_baseline_mse(frames), reconstruction_mse(autoencoder, frames)]
        )
    mse, copy, recon = (float(v) for v in totals / max(len(specs), 1))
    logger.info(f"  {split}: mse {mse:.5f} (copy {copy:.5f}, reconstruction {recon:.5f})")
    return PredictionMetrics(split, mse, copy, recon, len(specs))
