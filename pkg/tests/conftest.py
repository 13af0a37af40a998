"""Pytest configuration and shared fixtures for tcn-bench tests."""

import os
import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest


# Create a session-level temp directory for the entire test session
_TEST_RUN_ROOT = None


def pytest_configure(config):
    """Create a temporary run root before any tests/modules are imported.

    This sets the TCN_BENCH_RUN_ROOT environment variable which the
    run_directory module reads to decide where bare run names live.
    """
    global _TEST_RUN_ROOT
    _TEST_RUN_ROOT = Path(tempfile.mkdtemp(prefix="tcn_bench_test_"))
    os.environ["TCN_BENCH_RUN_ROOT"] = str(_TEST_RUN_ROOT)


def pytest_unconfigure(config):
    """Clean up the temporary run root after all tests complete."""
    global _TEST_RUN_ROOT
    if _TEST_RUN_ROOT and _TEST_RUN_ROOT.exists():
        shutil.rmtree(_TEST_RUN_ROOT, ignore_errors=True)
    if "TCN_BENCH_RUN_ROOT" in os.environ:
        del os.environ["TCN_BENCH_RUN_ROOT"]


@pytest.fixture
def rng():
    """Seeded generator so every test draws the same numbers."""
    return np.random.default_rng(1234)


@pytest.fixture
def toy_vaec_config():
    """Tiny analogy experiment: 16px renders, narrow layers, a few steps."""
    from tcn_bench.config import ExperimentConfig

    return ExperimentConfig(
        task="vaec_translation",
        image_scale=8,
        train_problems=64,
        eval_problems=16,
        eval_regions=(1, 2),
        conv_channels=4,
        hidden=8,
        embedding=6,
        lstm_hidden=5,
        iterations=3,
        learning_rate=1e-3,
        batch_size=4,
        checkpoint_every=2,
    )


@pytest.fixture
def toy_dynobj_config():
    """Tiny prediction experiment over 4-frame sequences."""
    from tcn_bench.config import ExperimentConfig

    return ExperimentConfig(
        task="dynobj",
        sequence_length=4,
        eval_sequences=4,
        train_stats_sequences=4,
        conv_channels=2,
        ae_hidden=8,
        ae_embedding=3,
        predictor_hidden=4,
        autoencoder_iterations=2,
        predictor_iterations=2,
        batch_size=2,
        checkpoint_every=1,
    )
