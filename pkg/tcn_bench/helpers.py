"""Helper functions for common operations."""

import zlib

import numpy as np

__all__ = [
    "derive_seed",
    "step_rng",
    "format_duration",
]


def _label_key(label: int | str) -> int:
    if isinstance(label, str):
        return zlib.crc32(label.encode("utf-8"))
    return int(label)


def derive_seed(seed: int, *labels: int | str) -> int:
    """Stable 63-bit seed for a named sub-stream of a run seed."""
    entropy = [int(seed), *(_label_key(label) for label in labels)]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def step_rng(seed: int, step: int, stream: str = "train") -> np.random.Generator:
    """Generator for one training iteration; independent of how the run was resumed."""
    return np.random.default_rng([int(seed), int(step), _label_key(stream)])


def format_duration(seconds: float) -> str:
    """Format a wall-clock duration as a short human-readable string."""
    if seconds <= 0:
        return "---"

    hours = int(seconds // 3600)
    minutes = int((seconds % 3600) // 60)
    secs = seconds % 60

    if hours > 0:
        return f"{hours}h {minutes}m"
    if minutes > 0:
        return f"{minutes}m {int(secs)}s"
    return f"{secs:.1f}s"
