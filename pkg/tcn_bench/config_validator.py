"""Configuration validation for tcn-bench runs."""

import os
from pathlib import Path

from .config import TASKS, ExperimentConfig
from .constants import (
    BATCH_SIZE,
    FEATURE_MAP_SIZE,
    NUM_CANDIDATES,
    NUM_REGIONS,
    VAEC_IMAGE_SIZE,
)
from .logger import logger
from .normalization import NORM_METHODS, STATS_METHODS
from .vaec import RegimeSpec, enumerate_analogies


class ConfigValidator:
    """Validates an experiment config and its run environment."""

    def __init__(self) -> None:
        """Initialize the validator with empty error and warning lists."""
        self.errors: list[str] = []
        self.warnings: list[str] = []

    def validate_all(
        self, config: ExperimentConfig, run_root: Path | None = None
    ) -> tuple[bool, list[str], list[str]]:
        """Run all validation checks."""
        self.errors = []
        self.warnings = []

        self._validate_task(config)
        self._validate_normalization(config)
        self._validate_geometry(config)
        self._validate_schedule(config)
        if run_root is not None:
            self._validate_run_root(run_root)
            self._validate_disk_space(run_root)

        return len(self.errors) == 0, self.errors, self.warnings

    def _validate_task(self, config: ExperimentConfig) -> None:
        if config.task not in TASKS:
            self.errors.append(f"Unknown task '{config.task}' (expected one of {', '.join(TASKS)})")
            return
        if config.task == "dynobj":
            if config.sequence_length < 2:
                self.errors.append("sequence_length must be at least 2 for prediction")
            return

        bad = [r for r in config.eval_regions if not 1 <= r <= NUM_REGIONS]
        if bad:
            self.errors.append(f"eval_regions outside [1, {NUM_REGIONS}]: {bad}")
        total = len(enumerate_analogies(RegimeSpec.create(config.regime_kind, 1)))
        for name in ("train_problems", "eval_problems"):
            value = getattr(config, name)
            if not 1 <= value <= total:
                self.errors.append(f"{name} must lie in [1, {total}], got {value}")

    def _validate_normalization(self, config: ExperimentConfig) -> None:
        if config.norm not in NORM_METHODS:
            self.errors.append(f"Unknown normalization method '{config.norm}'")
            return
        if config.eps <= 0:
            self.errors.append("eps must be positive")
        if config.task == "dynobj" and config.norm not in STATS_METHODS | {"none"}:
            self.errors.append(f"Method '{config.norm}' cannot be inverted for prediction")
        if config.norm == "sub_batch":
            # analogy batches normalize 10 images per problem
            images = config.batch_size * (3 + NUM_CANDIDATES)
            if config.sub_batch_size < 1 or images % config.sub_batch_size:
                self.errors.append(
                    f"sub_batch_size {config.sub_batch_size} does not divide {images} images per batch"
                )
        if config.norm == "sliding_window_tcn" and not 1 <= config.window <= 4:
            self.errors.append(f"window {config.window} must lie in [1, 4] for analogy contexts")
        if config.norm == "misaligned_tcn" and config.segment_len < 1:
            self.errors.append("segment_len must be positive")
        if config.context != "whole" and config.norm != "tcn":
            self.warnings.append(f"context '{config.context}' only affects the tcn method")

    def _validate_geometry(self, config: ExperimentConfig) -> None:
        if config.task == "dynobj":
            return
        if config.image_scale < 1 or VAEC_IMAGE_SIZE % config.image_scale:
            self.errors.append(f"image_scale {config.image_scale} must divide {VAEC_IMAGE_SIZE}")
            return
        size = config.image_size
        ratio = size // FEATURE_MAP_SIZE
        if size % FEATURE_MAP_SIZE or ratio & (ratio - 1) or ratio < 2:
            self.errors.append(
                f"image size {size} does not halve down to a {FEATURE_MAP_SIZE}x{FEATURE_MAP_SIZE} feature map"
            )

    def _validate_schedule(self, config: ExperimentConfig) -> None:
        resolved = config.resolved()
        assert resolved.learning_rate is not None and resolved.iterations is not None
        if resolved.learning_rate <= 0:
            self.errors.append("learning_rate must be positive")
        if resolved.iterations < 0:
            self.errors.append("iterations must be non-negative")
        if config.batch_size < 1:
            self.errors.append("batch_size must be positive")
        elif config.batch_size != BATCH_SIZE:
            self.warnings.append(
                f"batch_size {config.batch_size} differs from the reference {BATCH_SIZE}"
            )
        if config.checkpoint_every < 1:
            self.errors.append("checkpoint_every must be positive")
        if config.workers < 1:
            self.errors.append("workers must be positive")

    def _validate_run_root(self, run_root: Path) -> None:
        if not run_root.exists():
            try:
                run_root.mkdir(parents=True, exist_ok=True)
                logger.info(f"Created run root: {run_root}")
            except OSError as e:
                self.errors.append(f"Cannot create run root {run_root}: {e}")
                return

        if not run_root.is_dir():
            self.errors.append(f"Run root is not a directory: {run_root}")
            return

        if not os.access(run_root, os.W_OK):
            self.errors.append(f"No write permission for: {run_root}")

    def _validate_disk_space(self, run_root: Path, min_mb: int = 100) -> None:
        """Check sufficient disk space for checkpoints and logs."""
        try:
            stat = os.statvfs(run_root if run_root.exists() else run_root.parent)
            available_mb = (stat.f_bavail * stat.f_frsize) / (1024 * 1024)

            if available_mb < min_mb:
                self.warnings.append(
                    f"Low disk space: {available_mb:.1f} MB available "
                    f"(recommended: {min_mb} MB+)"
                )
        except (OSError, AttributeError):
            # statvfs not available on all platforms
            pass
