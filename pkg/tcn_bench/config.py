"""Experiment configuration files.

A config is flat ``key = value`` text grouped into sections::

    [experiment]
    task = vaec_translation
    seed = 0

Unset schedule values (``iterations``, ``learning_rate`` and the dynamic
object schedules) resolve to the published defaults for the task and
normalization method. The canonical snapshot written by `dump_config`
always holds resolved values, and its SHA-256 names every output.
"""

import configparser
import dataclasses
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .constants import (
    ANALOGY_EMBEDDING,
    ANALOGY_HIDDEN,
    ANALOGY_ITERATIONS,
    ANALOGY_LEARNING_RATE,
    ANALOGY_LSTM_HIDDEN,
    AUTOENCODER_EMBEDDING,
    AUTOENCODER_HIDDEN,
    AUTOENCODER_ITERATIONS,
    BATCH_SIZE,
    CONV_CHANNELS,
    DROPOUT_RATE,
    DYNOBJ_LEARNING_RATE,
    DYNOBJ_SEQUENCE_LENGTH,
    MISALIGNED_SEGMENT_LENGTH,
    NO_NORM_LEARNING_RATE,
    NORM_EPS,
    NUM_REGIONS,
    PREDICTOR_ITERATIONS,
    PREDICTOR_LSTM_HIDDEN,
    PROBLEMS_PER_REGION,
    SLIDING_WINDOW,
    SLOW_CONVERGENCE_ITERATIONS,
    SUB_BATCH_SIZE,
    TRAIN_STATS_SAMPLE_SEQUENCES,
    VAEC_IMAGE_SIZE,
)
from .exceptions import ConfigurationError, InputMissingError

__all__ = [
    "TASKS",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "apply_overrides",
    "dump_config",
    "config_hash",
]

TASKS = ("vaec_translation", "vaec_scale", "dynobj")

# field name -> config section
_SECTIONS: dict[str, str] = {
    "task": "experiment",
    "seed": "experiment",
    "workers": "experiment",
    "norm": "normalization",
    "context": "normalization",
    "eps": "normalization",
    "sub_batch_size": "normalization",
    "segment_len": "normalization",
    "window": "normalization",
    "dropout_rate": "normalization",
    "image_scale": "vaec",
    "train_problems": "vaec",
    "eval_problems": "vaec",
    "eval_regions": "vaec",
    "sequence_length": "dynobj",
    "eval_sequences": "dynobj",
    "train_stats_sequences": "dynobj",
    "end_to_end": "dynobj",
    "conv_channels": "model",
    "hidden": "model",
    "embedding": "model",
    "lstm_hidden": "model",
    "ae_hidden": "model",
    "ae_embedding": "model",
    "predictor_hidden": "model",
    "iterations": "training",
    "learning_rate": "training",
    "batch_size": "training",
    "checkpoint_every": "training",
    "autoencoder_iterations": "training",
    "predictor_iterations": "training",
}


@dataclass
class ExperimentConfig:
    """Everything that determines one reproducible run."""

    task: str = "vaec_translation"
    seed: int = 0
    workers: int = 1

    norm: str = "tcn"
    context: str = "whole"
    eps: float = NORM_EPS
    sub_batch_size: int = SUB_BATCH_SIZE
    segment_len: int = MISALIGNED_SEGMENT_LENGTH
    window: int = SLIDING_WINDOW
    dropout_rate: float = DROPOUT_RATE

    image_scale: int = 1
    train_problems: int = PROBLEMS_PER_REGION
    eval_problems: int = PROBLEMS_PER_REGION
    eval_regions: tuple[int, ...] = tuple(range(1, NUM_REGIONS + 1))

    sequence_length: int = DYNOBJ_SEQUENCE_LENGTH
    eval_sequences: int = 1000
    train_stats_sequences: int = TRAIN_STATS_SAMPLE_SEQUENCES
    end_to_end: bool = False

    conv_channels: int = CONV_CHANNELS
    hidden: int = ANALOGY_HIDDEN
    embedding: int = ANALOGY_EMBEDDING
    lstm_hidden: int = ANALOGY_LSTM_HIDDEN
    ae_hidden: int = AUTOENCODER_HIDDEN
    ae_embedding: int = AUTOENCODER_EMBEDDING
    predictor_hidden: int = PREDICTOR_LSTM_HIDDEN

    iterations: int | None = None
    learning_rate: float | None = None
    batch_size: int = BATCH_SIZE
    checkpoint_every: int = 1000
    autoencoder_iterations: int | None = None
    predictor_iterations: int | None = None

    @property
    def image_size(self) -> int:
        if self.image_scale < 1 or VAEC_IMAGE_SIZE % self.image_scale:
            raise ConfigurationError(
                f"image_scale {self.image_scale} must divide {VAEC_IMAGE_SIZE}", "vaec.image_scale"
            )
        return VAEC_IMAGE_SIZE // self.image_scale

    @property
    def regime_kind(self) -> str:
        return "scale" if self.task == "vaec_scale" else "translation"

    def resolved(self) -> "ExperimentConfig":
        """Copy with every schedule default filled in."""
        slow = self.norm in ("layer", "layer_recurrent", "none")
        iterations = self.iterations
        if iterations is None:
            iterations = SLOW_CONVERGENCE_ITERATIONS if slow else ANALOGY_ITERATIONS
        learning_rate = self.learning_rate
        if learning_rate is None:
            if self.task == "dynobj":
                learning_rate = DYNOBJ_LEARNING_RATE
            elif self.norm == "none":
                learning_rate = NO_NORM_LEARNING_RATE
            else:
                learning_rate = ANALOGY_LEARNING_RATE
        return dataclasses.replace(
            self,
            iterations=iterations,
            learning_rate=learning_rate,
            autoencoder_iterations=(
                AUTOENCODER_ITERATIONS
                if self.autoencoder_iterations is None
                else self.autoencoder_iterations
            ),
            predictor_iterations=(
                PREDICTOR_ITERATIONS
                if self.predictor_iterations is None
                else self.predictor_iterations
            ),
        )


def _field_types() -> dict[str, Any]:
    return {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _coerce(name: str, raw: str) -> Any:
    kind = str(_field_types()[name])
    value = raw.strip()
    key = f"{_SECTIONS[name]}.{name}"
    try:
        if value.lower() in ("", "default") and "None" in kind:
            return None
        if "tuple" in kind:
            return tuple(int(v) for v in value.replace(",", " ").split())
        if "bool" in kind:
            if value.lower() in ("1", "true", "yes", "on"):
                return True
            if value.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {value}")
        if "int" in kind:
            return int(value)
        if "float" in kind:
            return float(value)
        return value
    except ValueError as e:
        raise ConfigurationError(f"Invalid value '{raw}': {e}", key) from e


def _set(config: ExperimentConfig, section: str, key: str, raw: str) -> None:
    if key not in _SECTIONS:
        raise ConfigurationError("Unknown config key", f"{section}.{key}")
    if _SECTIONS[key] != section:
        raise ConfigurationError(
            f"Key belongs to section [{_SECTIONS[key]}]", f"{section}.{key}"
        )
    setattr(config, key, _coerce(key, raw))


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigurationError(f"Cannot parse {source}: {e}") from e
    config = ExperimentConfig()
    for section in parser.sections():
        for key, raw in parser.items(section):
            _set(config, section, key, raw)
    return config


def load_config(path: Path) -> ExperimentConfig:
    """Read a config file."""
    if not path.exists():
        raise InputMissingError("Config file not found", str(path))
    return parse_config(path.read_text(encoding="utf-8"), source=str(path))


def apply_overrides(config: ExperimentConfig, overrides: list[str]) -> ExperimentConfig:
    """Apply ``section.key=value`` overrides to a copy."""
    updated = dataclasses.replace(config)
    for item in overrides:
        target, sep, raw = item.partition("=")
        section, dot, key = target.strip().partition(".")
        if not sep or not dot:
            raise ConfigurationError(f"Override '{item}' is not section.key=value")
        _set(updated, section, key, raw)
    return updated


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return " ".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(config: ExperimentConfig) -> str:
    """Canonical snapshot text of the resolved config."""
    resolved = config.resolved()
    sections: dict[str, list[str]] = {}
    for name, section in _SECTIONS.items():
        sections.setdefault(section, []).append(f"{name} = {_format(getattr(resolved, name))}")
    blocks = [f"[{section}]\n" + "\n".join(lines) + "\n" for section, lines in sections.items()]
    return "\n".join(blocks)


def config_hash(config: ExperimentConfig) -> str:
    """First 12 hex characters of the SHA-256 of the snapshot."""
    return hashlib.sha256(dump_config(config).encode("utf-8")).hexdigest()[:12]
