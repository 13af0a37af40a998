"""Temporal context normalization and its comparison methods.

Every method maps a `ContextBatch` of shape (N sequences, T positions,
H features) to one of the same shape. TCN computes a mean and population
variance per feature over each context segment; the other methods differ
only in which activations share statistics:

- batch, batch_train_stats, batch_plus_dropout, tcn_plus_batch: all N*T vectors
- layer: the H features of one vector
- sub_batch: consecutive groups of sequences
- misaligned_tcn: fixed-length chunks of the concatenated position stream
- sliding_window_tcn: each position and its predecessors in that stream
- layer_recurrent, none: identity here
"""

import dataclasses
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from . import functional as F
from .constants import (
    DROPOUT_RATE,
    MISALIGNED_SEGMENT_LENGTH,
    NORM_EPS,
    SLIDING_WINDOW,
    SUB_BATCH_SIZE,
)
from .exceptions import ConfigurationError, NormalizationError, ShapeError
from .tensor import Tensor, as_tensor, concatenate

__all__ = [
    "NORM_METHODS",
    "CONTEXT_METHODS",
    "VECTOR_METHODS",
    "STATS_METHODS",
    "Segmentation",
    "ContextBatch",
    "NormSpec",
    "NormStats",
    "whole_segmentation",
    "split_segmentation",
    "tcn_forward",
    "tcn_inverse",
    "apply_stats",
    "normalize",
    "normalize_with_stats",
    "fit_train_stats",
    "check_evaluation_stats",
]

NORM_METHODS = (
    "tcn",
    "batch",
    "batch_train_stats",
    "layer",
    "layer_recurrent",
    "sub_batch",
    "misaligned_tcn",
    "sliding_window_tcn",
    "tcn_plus_batch",
    "batch_plus_dropout",
    "none",
)
# Methods whose statistics come from candidate contexts rather than single images
CONTEXT_METHODS = frozenset({"tcn", "misaligned_tcn", "sliding_window_tcn", "tcn_plus_batch"})
VECTOR_METHODS = frozenset(
    {"batch", "batch_train_stats", "batch_plus_dropout", "sub_batch", "layer"}
)
# Methods whose statistics can be inverted per feature
STATS_METHODS = frozenset(
    {"tcn", "batch", "batch_train_stats", "batch_plus_dropout", "tcn_plus_batch", "sub_batch"}
)
CONTEXT_MODES = ("whole", "source_target")

Segmentation = tuple[tuple[tuple[int, ...], ...], ...]


def whole_segmentation(n: int, t: int) -> Segmentation:
    """One segment spanning every position of each sequence."""
    return tuple((tuple(range(t)),) for _ in range(n))


def split_segmentation(n: int, t: int, boundaries: Sequence[int]) -> Segmentation:
    """Cut every sequence into contiguous segments at the given positions."""
    cuts = [0, *boundaries, t]
    segments = tuple(tuple(range(a, b)) for a, b in zip(cuts[:-1], cuts[1:]))
    return tuple(segments for _ in range(n))


@dataclass
class ContextBatch:
    """Activations indexed (sequence, position, feature) with their contexts."""

    values: Tensor
    segmentation: Segmentation | None = None

    def __post_init__(self) -> None:
        if self.values.ndim != 3:
            raise ShapeError("ContextBatch values must be N x T x H", actual=self.values.shape)

    @property
    def shape(self) -> tuple[int, int, int]:
        n, t, h = self.values.shape
        return n, t, h

    def segments(self) -> Segmentation:
        n, t, _ = self.shape
        return self.segmentation if self.segmentation is not None else whole_segmentation(n, t)

    def is_whole(self) -> bool:
        return self.segmentation is None or all(len(seq) == 1 for seq in self.segmentation)

    def membership(self) -> NDArray[Any]:
        """Indicator array (N, S, T); S is the largest segment count, padded with empty rows."""
        n, t, _ = self.shape
        segments = self.segments()
        if len(segments) != n:
            raise NormalizationError(f"Segmentation covers {len(segments)} sequences, batch has {n}")
        width = max(len(seq) for seq in segments) if segments else 1
        member = np.zeros((n, width, t))
        for i, seq in enumerate(segments):
            seen = np.zeros(t, dtype=np.int64)
            for s, positions in enumerate(seq):
                if not positions:
                    raise NormalizationError(f"Sequence {i} has an empty context segment {s}")
                for p in positions:
                    if not 0 <= p < t:
                        raise NormalizationError(f"Sequence {i} segment {s} names position {p} outside [0, {t})")
                    seen[p] += 1
                    member[i, s, p] = 1.0
            if not np.all(seen == 1):
                raise NormalizationError(
                    f"Segments of sequence {i} must cover every position exactly once"
                )
        return member

    def with_values(self, values: Tensor) -> "ContextBatch":
        return ContextBatch(values, self.segmentation)


@dataclass
class NormSpec:
    """Normalization method, parameters and learned or stored state."""

    method: str = "tcn"
    eps: float = NORM_EPS
    gamma: Tensor | None = None
    beta: Tensor | None = None
    train_stats: tuple[NDArray[Any], NDArray[Any]] | None = None
    sub_batch_size: int = SUB_BATCH_SIZE
    segment_len: int = MISALIGNED_SEGMENT_LENGTH
    window: int = SLIDING_WINDOW
    dropout_rate: float = DROPOUT_RATE
    context: str = "whole"

    def __post_init__(self) -> None:
        if self.method not in NORM_METHODS:
            raise ConfigurationError(f"Unknown normalization method '{self.method}'", "normalization.method")
        if self.eps <= 0:
            raise ConfigurationError("eps must be positive", "normalization.eps")
        if self.train_stats is not None and self.method != "batch_train_stats":
            raise ConfigurationError(
                "train_stats only apply to batch_train_stats", "normalization.method"
            )
        if self.context not in CONTEXT_MODES:
            raise ConfigurationError(f"Unknown context mode '{self.context}'", "normalization.context")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigurationError("dropout_rate must lie in [0, 1)", "normalization.dropout_rate")

    def with_affine(self, features: int) -> "NormSpec":
        """Copy with trainable gamma=1, beta=0 of the given width."""
        return dataclasses.replace(
            self,
            gamma=Tensor(np.ones(features), requires_grad=True),
            beta=Tensor(np.zeros(features), requires_grad=True),
        )

    def named_parameters(self) -> dict[str, Tensor]:
        named = {}
        if self.gamma is not None and self.gamma.requires_grad:
            named["gamma"] = self.gamma
        if self.beta is not None and self.beta.requires_grad:
            named["beta"] = self.beta
        return named


@dataclass
class NormStats:
    """Statistics captured by a forward pass.

    `mean` and `std` broadcast against the normalized values, unless
    `assignment` (N, T, S) is present, in which case they hold one row per
    context segment and are mapped to positions through it.
    """

    mean: Tensor
    std: Tensor
    assignment: NDArray[Any] | None = None

    def expanded(self, shape: tuple[int, int, int]) -> tuple[Tensor, Tensor]:
        """Per-position (mean, std) for values of the given shape."""
        if self.assignment is not None:
            n, t, s = self.assignment.shape
            if (n, t) != shape[:2] or self.mean.shape != (n, s, shape[2]):
                raise ShapeError("NormStats do not match batch", self.mean.shape, shape)
            assign = Tensor(self.assignment)
            return assign @ self.mean, assign @ self.std
        try:
            np.broadcast_shapes(self.mean.shape, shape)
        except ValueError as e:
            raise ShapeError("NormStats do not match batch", self.mean.shape, shape) from e
        if self.mean.ndim != 3 or self.mean.shape[2] not in (1, shape[2]):
            raise ShapeError("NormStats do not match batch", self.mean.shape, shape)
        return self.mean, self.std


def _affine(x: Tensor, spec: NormSpec) -> Tensor:
    if spec.gamma is not None:
        x = x * spec.gamma
    if spec.beta is not None:
        x = x + spec.beta
    return x


def _segmented(batch: ContextBatch, spec: NormSpec) -> ContextBatch:
    if spec.context == "source_target" and batch.segmentation is None:
        n, t, _ = batch.shape
        return ContextBatch(batch.values, split_segmentation(n, t, [t // 2]))
    return batch


def _pooled_stats(z: Tensor, axes: tuple[int, ...], eps: float) -> tuple[Tensor, Tensor]:
    mean = z.mean(axis=axes, keepdims=True)
    centered = z - mean
    std = ((centered * centered).mean(axis=axes, keepdims=True) + eps).sqrt()
    return mean, std


def tcn_forward(batch: ContextBatch, spec: NormSpec) -> tuple[ContextBatch, NormStats]:
    """Normalize each feature over each context segment, then apply gamma/beta."""
    batch = _segmented(batch, spec)
    z = batch.values
    if batch.segmentation is None:
        mean, std = _pooled_stats(z, (1,), spec.eps)
        out = (z - mean) / std
        return batch.with_values(_affine(out, spec)), NormStats(mean, std)

    member = batch.membership()
    counts = member.sum(axis=2, keepdims=True)
    averaging = Tensor(member / np.maximum(counts, 1.0))
    assignment = member.transpose(0, 2, 1)
    assign = Tensor(assignment)

    mean = averaging @ z
    centered = z - assign @ mean
    std = (averaging @ (centered * centered) + spec.eps).sqrt()
    out = centered / (assign @ std)
    return batch.with_values(_affine(out, spec)), NormStats(mean, std, assignment)


def apply_stats(batch: ContextBatch, stats: NormStats) -> ContextBatch:
    """Forward map (z - mean) / std with previously captured statistics."""
    mean, std = stats.expanded(batch.shape)
    return batch.with_values((batch.values - mean) / std)


def tcn_inverse(normalized: ContextBatch, stats: NormStats) -> ContextBatch:
    """De-normalize as std * z + mean; gamma and beta are not inverted."""
    mean, std = stats.expanded(normalized.shape)
    return normalized.with_values(normalized.values * std + mean)


def _sub_batch(batch: ContextBatch, spec: NormSpec) -> tuple[Tensor, NormStats]:
    n, t, h = batch.shape
    size = spec.sub_batch_size
    if size < 1 or n % size != 0:
        raise NormalizationError(f"Batch of {n} is not divisible into sub-batches of {size}")
    groups = n // size
    grouped = batch.values.reshape(groups, size * t, h)
    mean, std = _pooled_stats(grouped, (1,), spec.eps)
    out = ((grouped - mean) / std).reshape(n, t, h)
    # each sequence inherits its group's statistics
    owner = Tensor(np.repeat(np.eye(groups), size, axis=0))
    per_seq_mean = (owner @ mean.reshape(groups, h)).reshape(n, 1, h)
    per_seq_std = (owner @ std.reshape(groups, h)).reshape(n, 1, h)
    return out, NormStats(per_seq_mean, per_seq_std)


def _misaligned(batch: ContextBatch, spec: NormSpec) -> tuple[Tensor, NormStats]:
    n, t, h = batch.shape
    length = n * t
    seg = spec.segment_len
    full = length // seg if seg >= 1 else 0
    if full == 0:
        raise NormalizationError(
            f"Stream of {length} positions is shorter than segment length {seg}"
        )
    stream = batch.values.reshape(length, h)
    positions = np.arange(length)
    owner = np.minimum(positions // seg, full - 1)
    assign = np.zeros((length, full))
    assign[positions, owner] = 1.0
    # trailing remainder borrows the last full segment's statistics
    averaging = np.zeros((full, length))
    counted = positions < full * seg
    averaging[owner[counted], positions[counted]] = 1.0 / seg

    assign_t, averaging_t = Tensor(assign), Tensor(averaging)
    mean_pos = assign_t @ (averaging_t @ stream)
    centered = stream - mean_pos
    std_pos = assign_t @ (averaging_t @ (centered * centered) + spec.eps).sqrt()
    out = (centered / std_pos).reshape(n, t, h)
    return out, NormStats(mean_pos.reshape(n, t, h), std_pos.reshape(n, t, h))


def _sliding(batch: ContextBatch, spec: NormSpec) -> tuple[Tensor, NormStats]:
    n, t, h = batch.shape
    w = spec.window
    if w < 1 or w > t:
        raise NormalizationError(f"Sliding window {w} must lie in [1, T={t}]")
    length = n * t
    stream = batch.values.reshape(length, h)
    padded = concatenate([Tensor(np.zeros((w - 1, h))), stream], axis=0)
    positions = np.arange(length)
    count = Tensor(np.minimum(positions + 1, w).reshape(length, 1))
    shifted = [padded[w - 1 - k : w - 1 - k + length] for k in range(w)]
    masks = [Tensor((positions >= k).astype(float).reshape(length, 1)) for k in range(w)]

    total = shifted[0] * masks[0]
    for s, m in zip(shifted[1:], masks[1:]):
        total = total + s * m
    mean = total / count
    var_total = None
    for s, m in zip(shifted, masks):
        d = (s - mean) * m
        var_total = d * d if var_total is None else var_total + d * d
    assert var_total is not None
    std = (var_total / count + spec.eps).sqrt()
    out = ((stream - mean) / std).reshape(n, t, h)
    return out, NormStats(mean.reshape(n, t, h), std.reshape(n, t, h))


def check_evaluation_stats(spec: NormSpec) -> None:
    """Stored training statistics must be present exactly when the method is batch_train_stats."""
    if spec.method == "batch_train_stats" and spec.train_stats is None:
        raise NormalizationError("batch_train_stats needs fitted training statistics outside training")
    if spec.method != "batch_train_stats" and spec.train_stats is not None:
        raise NormalizationError(f"training statistics are only used by batch_train_stats, not {spec.method}")


def normalize_with_stats(
    batch: ContextBatch,
    spec: NormSpec,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[ContextBatch, NormStats | None]:
    """Dispatch on `spec.method`; returns the normalized batch and its statistics."""
    method = spec.method
    z = batch.values

    if method in ("none", "layer_recurrent"):
        return batch, None
    if method == "tcn":
        return tcn_forward(batch, spec)
    if method == "batch_train_stats" and not training:
        check_evaluation_stats(spec)
        mean_arr, var_arr = spec.train_stats
        h = batch.shape[2]
        mean = Tensor(np.asarray(mean_arr).reshape(1, 1, h))
        std = Tensor(np.sqrt(np.asarray(var_arr).reshape(1, 1, h) + spec.eps))
        stats = NormStats(mean, std)
        out = (z - mean) / std
    elif method in ("batch", "batch_train_stats", "batch_plus_dropout", "tcn_plus_batch"):
        mean, std = _pooled_stats(z, (0, 1), spec.eps)
        stats = NormStats(mean, std)
        out = (z - mean) / std
    elif method == "layer":
        mean, std = _pooled_stats(z, (2,), spec.eps)
        stats = NormStats(mean, std)
        out = (z - mean) / std
    elif method == "sub_batch":
        out, stats = _sub_batch(batch, spec)
    elif method == "misaligned_tcn":
        out, stats = _misaligned(batch, spec)
    elif method == "sliding_window_tcn":
        out, stats = _sliding(batch, spec)
    else:
        raise ConfigurationError(f"Unknown normalization method '{method}'", "normalization.method")

    out = _affine(out, spec)
    if method == "batch_plus_dropout":
        out = F.dropout(out, spec.dropout_rate, rng, training)
    return batch.with_values(out), stats


def normalize(
    batch: ContextBatch,
    spec: NormSpec,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> ContextBatch:
    """Normalize a batch with the configured method."""
    return normalize_with_stats(batch, spec, training=training, rng=rng)[0]


def fit_train_stats(
    embedding_stream: Tensor | NDArray[Any],
    spec: NormSpec,
    weights: NDArray[Any] | None = None,
) -> NormSpec:
    """Store per-feature mean and population variance of training embeddings."""
    if spec.method != "batch_train_stats":
        raise ConfigurationError(
            f"fit_train_stats needs method batch_train_stats, got '{spec.method}'",
            "normalization.method",
        )
    data = as_tensor(embedding_stream).data.astype(np.float64)
    data = data.reshape(-1, data.shape[-1]) if data.ndim > 1 else data.reshape(-1, 1)
    if data.shape[0] == 0:
        raise NormalizationError("Cannot fit training statistics on an empty stream")

    w = np.ones(data.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (data.shape[0],) or np.any(w < 0) or w.sum() <= 0:
        raise NormalizationError("Weights must be non-negative, one per vector, with positive sum")
    w = w / w.sum()
    mean = (w[:, None] * data).sum(axis=0)
    var = (w[:, None] * (data - mean) ** 2).sum(axis=0)
    return dataclasses.replace(spec, train_stats=(mean, var))
