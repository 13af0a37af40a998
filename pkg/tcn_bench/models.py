"""Analogy scorer, autoencoder and sequence predictor.

The analogy scorer embeds the ten images of a problem once, builds the
four-term sequence A, B, C, candidate for each of the seven candidates,
normalizes, runs an LSTM over each sequence and maps its final hidden
state to a score. The prediction system encodes frames with a
convolutional autoencoder, normalizes the embedding sequence, predicts the
next embedding with an LSTM and maps the prediction back through the
captured statistics before decoding.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray

from . import functional as F
from .config import ExperimentConfig
from .constants import (
    ANALOGY_EMBEDDING,
    ANALOGY_HIDDEN,
    ANALOGY_LSTM_HIDDEN,
    AUTOENCODER_EMBEDDING,
    AUTOENCODER_HIDDEN,
    CONV_CHANNELS,
    CONV_KERNEL,
    DYNOBJ_IMAGE_SIZE,
    FEATURE_MAP_SIZE,
    NUM_CANDIDATES,
    PREDICTOR_LSTM_HIDDEN,
    VAEC_CHANNELS,
    VAEC_IMAGE_SIZE,
)
from .exceptions import ConfigurationError, ShapeError
from .layers import Conv2d, ConvTranspose2d, InitScheme, Layer, Linear, LSTMCell
from .logger import logger
from .normalization import (
    CONTEXT_METHODS,
    ContextBatch,
    NormSpec,
    NormStats,
    VECTOR_METHODS,
    apply_stats,
    normalize,
    normalize_with_stats,
    tcn_inverse,
)
from .tensor import Tensor, concatenate, no_grad, stack

__all__ = [
    "ANALOGY_INIT",
    "DYNOBJ_INIT",
    "EncoderConfig",
    "AnalogyScorerConfig",
    "AutoencoderConfig",
    "PredictorConfig",
    "ConvEncoder",
    "AnalogyScorer",
    "Autoencoder",
    "Predictor",
    "PredictionOutput",
    "encoder_depth",
    "count_parameters",
    "encode_image",
    "score_candidate",
    "solve_analogy",
    "autoencode",
    "predict_sequence",
]

ANALOGY_INIT = InitScheme(weight="xavier_uniform", bias="zeros")
DYNOBJ_INIT = InitScheme(weight="uniform_inv_sqrt_n", bias="uniform_inv_sqrt_n")

# Candidate context k gathers images A, B, C and candidate k
_CONTEXT_INDEX = np.array([[0, 1, 2, 3 + k] for k in range(NUM_CANDIDATES)])


def encoder_depth(image_size: int, feature_map: int = FEATURE_MAP_SIZE) -> int:
    """Number of stride-2 convolutions from image_size down to feature_map."""
    ratio = image_size // feature_map
    if image_size % feature_map or ratio < 2 or ratio & (ratio - 1):
        raise ConfigurationError(
            f"image size {image_size} does not halve down to {feature_map}", "vaec.image_scale"
        )
    return int(math.log2(ratio))


def count_parameters(layer: Layer) -> int:
    return layer.num_parameters()


def _conv_params(c_in: int, c_out: int) -> int:
    return c_in * c_out * CONV_KERNEL * CONV_KERNEL + c_out


def _linear_params(n_in: int, n_out: int) -> int:
    return n_in * n_out + n_out


def _lstm_params(n_in: int, hidden: int, layer_norm: bool) -> int:
    return n_in * 4 * hidden + hidden * 4 * hidden + 4 * hidden + (2 * hidden if layer_norm else 0)


def _check_count(layer: Layer, expected: int, name: str) -> None:
    actual = count_parameters(layer)
    if actual != expected:
        raise ShapeError(f"{name} parameter count mismatch", expected=(expected,), actual=(actual,))
    logger.debug(f"{name}: {actual:,} parameters")


@dataclass
class EncoderConfig:
    image_size: int
    channels: int
    conv_channels: int
    hidden: int
    embedding: int
    feature_map: int = FEATURE_MAP_SIZE

    def expected_parameters(self) -> int:
        depth = encoder_depth(self.image_size, self.feature_map)
        total = _conv_params(self.channels, self.conv_channels)
        total += (depth - 1) * _conv_params(self.conv_channels, self.conv_channels)
        flat = self.conv_channels * self.feature_map * self.feature_map
        total += _linear_params(flat, self.hidden) + _linear_params(self.hidden, self.hidden)
        return total + _linear_params(self.hidden, self.embedding)


class ConvEncoder(Layer):
    """Stride-2 convolutions, two ReLU dense layers, linear embedding."""

    def __init__(self, config: EncoderConfig, scheme: InitScheme, rng: np.random.Generator):
        super().__init__()
        self.config = config
        depth = encoder_depth(config.image_size, config.feature_map)
        self.convs = [
            self.add_child(
                f"conv{i}",
                Conv2d(config.channels if i == 0 else config.conv_channels, config.conv_channels, scheme, rng),
            )
            for i in range(depth)
        ]
        flat = config.conv_channels * config.feature_map * config.feature_map
        self.fc0 = self.add_child("fc0", Linear(flat, config.hidden, scheme, rng))
        self.fc1 = self.add_child("fc1", Linear(config.hidden, config.hidden, scheme, rng))
        self.embed = self.add_child("embed", Linear(config.hidden, config.embedding, scheme, rng))

    def __call__(self, images: Tensor) -> Tensor:
        cfg = self.config
        expected = (cfg.channels, cfg.image_size, cfg.image_size)
        if images.ndim != 4 or images.shape[1:] != expected:
            raise ShapeError("encoder input has the wrong shape", expected, images.shape[1:])
        x = images
        for conv in self.convs:
            x = conv(x).relu()
        x = F.flatten(x)
        x = self.fc0(x).relu()
        x = self.fc1(x).relu()
        return self.embed(x)


@dataclass
class AnalogyScorerConfig:
    image_size: int = VAEC_IMAGE_SIZE
    channels: int = VAEC_CHANNELS
    conv_channels: int = CONV_CHANNELS
    hidden: int = ANALOGY_HIDDEN
    embedding: int = ANALOGY_EMBEDDING
    lstm_hidden: int = ANALOGY_LSTM_HIDDEN
    feature_map: int = FEATURE_MAP_SIZE
    norm: NormSpec = field(default_factory=NormSpec)
    init: InitScheme = field(default_factory=lambda: ANALOGY_INIT)

    @classmethod
    def from_experiment(cls, config: ExperimentConfig) -> "AnalogyScorerConfig":
        return cls(
            image_size=config.image_size,
            conv_channels=config.conv_channels,
            hidden=config.hidden,
            embedding=config.embedding,
            lstm_hidden=config.lstm_hidden,
            norm=_norm_spec(config),
        )

    @property
    def encoder(self) -> EncoderConfig:
        return EncoderConfig(
            self.image_size, self.channels, self.conv_channels, self.hidden, self.embedding, self.feature_map
        )

    def learns_affine(self) -> bool:
        return self.norm.method not in ("none", "layer_recurrent")

    def expected_parameters(self) -> int:
        recurrent_ln = self.norm.method == "layer_recurrent"
        total = self.encoder.expected_parameters()
        total += _lstm_params(self.embedding, self.lstm_hidden, recurrent_ln)
        total += _linear_params(self.lstm_hidden, 1)
        return total + (2 * self.embedding if self.learns_affine() else 0)


def _norm_spec(config: ExperimentConfig) -> NormSpec:
    return NormSpec(
        method=config.norm,
        eps=config.eps,
        sub_batch_size=config.sub_batch_size,
        segment_len=config.segment_len,
        window=config.window,
        dropout_rate=config.dropout_rate,
        context=config.context,
    )


class AnalogyScorer(Layer):
    def __init__(self, config: AnalogyScorerConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        scheme = config.init
        self.encoder = self.add_child("encoder", ConvEncoder(config.encoder, scheme, rng))
        self.lstm = self.add_child(
            "lstm",
            LSTMCell(
                config.embedding,
                config.lstm_hidden,
                scheme,
                rng,
                layer_norm=config.norm.method == "layer_recurrent",
            ),
        )
        self.scorer = self.add_child("scorer", Linear(config.lstm_hidden, 1, scheme, rng))
        self.norm = config.norm.with_affine(config.embedding) if config.learns_affine() else config.norm
        for name, t in self.norm.named_parameters().items():
            self.add_parameter(f"norm_{name}", t)
        _check_count(self, config.expected_parameters(), "AnalogyScorer")

    def embed(self, images: Tensor) -> Tensor:
        return self.encoder(images)

    def contexts(
        self, z: Tensor, training: bool = False, rng: np.random.Generator | None = None
    ) -> ContextBatch:
        """(P, 10, E) embeddings to normalized (P * 7, 4, E) candidate contexts."""
        p, _, e = z.shape
        method = self.norm.method
        if method in VECTOR_METHODS:
            z = self._normalize_images(z, training, rng)
        ctx = ContextBatch(z[:, _CONTEXT_INDEX].reshape(p * NUM_CANDIDATES, 4, e))
        if method in CONTEXT_METHODS:
            ctx = normalize(ctx, self.norm, training=training, rng=rng)
        return ctx

    def _normalize_images(
        self, z: Tensor, training: bool, rng: np.random.Generator | None
    ) -> Tensor:
        """Per-image methods over (P, 10, E) with problems as the batch elements.

        Sub-batches hold whole problems; a trailing partial group of problems
        forms its own sub-batch.
        """
        p = z.shape[0]
        size = self.norm.sub_batch_size
        if self.norm.method != "sub_batch" or size < 1 or p % size == 0:
            return normalize(ContextBatch(z), self.norm, training=training, rng=rng).values
        full = p - p % size
        parts = []
        if full:
            parts.append(normalize(ContextBatch(z[:full]), self.norm, training=training, rng=rng).values)
        rest = dataclasses.replace(self.norm, sub_batch_size=p - full)
        parts.append(normalize(ContextBatch(z[full:]), rest, training=training, rng=rng).values)
        return concatenate(parts, axis=0)

    def score_contexts(self, ctx: ContextBatch) -> Tensor:
        """One score per normalized context, recurrent state reset for each."""
        k, steps, _ = ctx.shape
        state = self.lstm.initial_state(k)
        for t in range(steps):
            state = self.lstm(ctx.values[:, t], state)
        return self.scorer(state[0]).reshape(k)

    def logits(
        self, images: Tensor, training: bool = False, rng: np.random.Generator | None = None
    ) -> Tensor:
        """(P, 10, C, H, W) problem images to (P, 7) candidate scores."""
        if images.ndim != 5 or images.shape[1] != 3 + NUM_CANDIDATES:
            raise ShapeError("expected (P, 10, C, H, W) images", actual=images.shape)
        p = images.shape[0]
        z = self.embed(images.reshape(p * images.shape[1], *images.shape[2:]))
        ctx = self.contexts(z.reshape(p, images.shape[1], -1), training=training, rng=rng)
        return self.score_contexts(ctx).reshape(p, NUM_CANDIDATES)


@dataclass
class AutoencoderConfig:
    image_size: int = DYNOBJ_IMAGE_SIZE
    channels: int = 1
    conv_channels: int = CONV_CHANNELS
    hidden: int = AUTOENCODER_HIDDEN
    embedding: int = AUTOENCODER_EMBEDDING
    feature_map: int = FEATURE_MAP_SIZE
    init: InitScheme = field(default_factory=lambda: DYNOBJ_INIT)

    @classmethod
    def from_experiment(cls, config: ExperimentConfig) -> "AutoencoderConfig":
        return cls(conv_channels=config.conv_channels, hidden=config.ae_hidden, embedding=config.ae_embedding)

    @property
    def encoder(self) -> EncoderConfig:
        return EncoderConfig(
            self.image_size, self.channels, self.conv_channels, self.hidden, self.embedding, self.feature_map
        )

    def expected_parameters(self) -> int:
        depth = encoder_depth(self.image_size, self.feature_map)
        flat = self.conv_channels * self.feature_map * self.feature_map
        decoder = _linear_params(self.embedding, self.hidden) + _linear_params(self.hidden, self.hidden)
        decoder += _linear_params(self.hidden, flat)
        decoder += (depth - 1) * _conv_params(self.conv_channels, self.conv_channels)
        decoder += self.conv_channels * self.channels * CONV_KERNEL * CONV_KERNEL + self.channels
        return self.encoder.expected_parameters() + decoder


class Autoencoder(Layer):
    def __init__(self, config: AutoencoderConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        scheme = config.init
        depth = encoder_depth(config.image_size, config.feature_map)
        flat = config.conv_channels * config.feature_map * config.feature_map
        self.encoder = self.add_child("encoder", ConvEncoder(config.encoder, scheme, rng))
        self.dec_fc0 = self.add_child("dec_fc0", Linear(config.embedding, config.hidden, scheme, rng))
        self.dec_fc1 = self.add_child("dec_fc1", Linear(config.hidden, config.hidden, scheme, rng))
        self.dec_fc2 = self.add_child("dec_fc2", Linear(config.hidden, flat, scheme, rng))
        self.deconvs = [
            self.add_child(
                f"deconv{i}",
                ConvTranspose2d(
                    config.conv_channels,
                    config.channels if i == depth - 1 else config.conv_channels,
                    scheme,
                    rng,
                ),
            )
            for i in range(depth)
        ]
        _check_count(self, config.expected_parameters(), "Autoencoder")

    def encode(self, images: Tensor) -> Tensor:
        return self.encoder(images)

    def decode(self, z: Tensor) -> Tensor:
        cfg = self.config
        x = self.dec_fc0(z).relu()
        x = self.dec_fc1(x).relu()
        x = self.dec_fc2(x).relu()
        x = x.reshape(z.shape[0], cfg.conv_channels, cfg.feature_map, cfg.feature_map)
        for i, deconv in enumerate(self.deconvs):
            x = deconv(x)
            x = x.sigmoid() if i == len(self.deconvs) - 1 else x.relu()
        return x

    def __call__(self, images: Tensor) -> tuple[Tensor, Tensor]:
        z = self.encode(images)
        return z, self.decode(z)


@dataclass
class PredictorConfig:
    embedding: int = AUTOENCODER_EMBEDDING
    hidden: int = PREDICTOR_LSTM_HIDDEN
    norm: NormSpec = field(default_factory=NormSpec)
    init: InitScheme = field(default_factory=lambda: DYNOBJ_INIT)

    @classmethod
    def from_experiment(cls, config: ExperimentConfig) -> "PredictorConfig":
        return cls(embedding=config.ae_embedding, hidden=config.predictor_hidden, norm=_norm_spec(config))

    def expected_parameters(self) -> int:
        return _lstm_params(self.embedding, self.hidden, False) + _linear_params(self.hidden, self.embedding)


@dataclass
class PredictionOutput:
    """Predictions for positions 2..T in normalized and absolute coordinates."""

    normalized: Tensor
    targets: Tensor
    predictions: Tensor
    stats: NormStats | None


class Predictor(Layer):
    """Next-embedding LSTM; its normalization has fixed gamma=1, beta=0."""

    def __init__(self, config: PredictorConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        self.norm = config.norm
        self.lstm = self.add_child("lstm", LSTMCell(config.embedding, config.hidden, config.init, rng))
        self.out = self.add_child("out", Linear(config.hidden, config.embedding, config.init, rng))
        _check_count(self, config.expected_parameters(), "Predictor")

    def predict(
        self, z: Tensor, training: bool = False, rng: np.random.Generator | None = None
    ) -> PredictionOutput:
        """z of shape (N, T, E); normalizes z1..z(T-1) and predicts z2..zT."""
        if z.ndim != 3 or z.shape[1] < 2:
            raise ShapeError("prediction needs (N, T >= 2, E) embeddings", actual=z.shape)
        n, t, e = z.shape
        inputs = ContextBatch(z[:, : t - 1])
        targets = ContextBatch(z[:, 1:])
        normalized, stats = normalize_with_stats(inputs, self.norm, training=training, rng=rng)

        state = self.lstm.initial_state(n)
        steps = []
        for i in range(t - 1):
            state = self.lstm(normalized.values[:, i], state)
            steps.append(self.out(state[0]))
        predicted = ContextBatch(stack(steps, axis=1))

        if stats is None:
            return PredictionOutput(predicted.values, targets.values, predicted.values, None)
        return PredictionOutput(
            predicted.values,
            apply_stats(targets, stats).values,
            tcn_inverse(predicted, stats).values,
            stats,
        )


def encode_image(images: Tensor | NDArray[Any], encoder: ConvEncoder) -> Tensor:
    """Embeddings of a (M, C, H, W) image batch."""
    return encoder(images if isinstance(images, Tensor) else Tensor(images))


def score_candidate(embeddings: Tensor, model: AnalogyScorer) -> Tensor:
    """Scalar score of one normalized (4, E) context."""
    if embeddings.ndim != 2 or embeddings.shape[0] != 4:
        raise ShapeError("a candidate context has exactly 4 embeddings", actual=embeddings.shape)
    ctx = ContextBatch(embeddings.reshape(1, 4, embeddings.shape[1]))
    return model.score_contexts(ctx).reshape(())


def solve_analogy(
    images: Tensor | NDArray[Any], model: AnalogyScorer
) -> tuple[NDArray[Any], int]:
    """Softmax over the 7 candidates of one problem and the argmax index."""
    x = images if isinstance(images, Tensor) else Tensor(images)
    with no_grad():
        logits = model.logits(x.reshape(1, *x.shape))
        probs = F.softmax(logits, axis=-1).data[0]
    return probs, int(np.argmax(probs))


def autoencode(images: Tensor | NDArray[Any], model: Autoencoder) -> tuple[Tensor, Tensor]:
    return model(images if isinstance(images, Tensor) else Tensor(images))


def predict_sequence(
    embeddings: Tensor,
    predictor: Predictor,
    autoencoder: Autoencoder | None = None,
) -> tuple[Tensor, Tensor | None]:
    """De-normalized predictions of z2..zT and, with an autoencoder, their decoded frames."""
    out = predictor.predict(embeddings)
    if autoencoder is None:
        return out.predictions, None
    n, steps, e = out.predictions.shape
    frames = autoencoder.decode(out.predictions.reshape(n * steps, e))
    return out.predictions, frames.reshape(n, steps, *frames.shape[1:])
