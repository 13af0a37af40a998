"""Dynamic object prediction sequences.

A white square on black changes size and location linearly between a
sampled start and end over T frames. Training sizes come from a small range
and evaluation sizes from a disjoint, larger one.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from PIL import Image

from .constants import (
    DYNOBJ_IMAGE_SIZE,
    DYNOBJ_LOCATION_RANGE,
    DYNOBJ_SEQUENCE_LENGTH,
    DYNOBJ_SPLITS,
    DYNOBJ_TEST_SIZE_RANGE,
    DYNOBJ_TRAIN_SIZE_RANGE,
    MANIFEST_DECIMALS,
)
from .exceptions import DatasetError

__all__ = [
    "SequenceSpec",
    "size_range",
    "sample_sequence",
    "render_frame",
    "render_sequence",
    "export_sequence_png",
]

Triple = tuple[float, float, float]


def size_range(split: str) -> tuple[float, float]:
    if split == "train":
        return DYNOBJ_TRAIN_SIZE_RANGE
    if split == "test":
        return DYNOBJ_TEST_SIZE_RANGE
    raise DatasetError(f"Unknown split '{split}' (expected one of {DYNOBJ_SPLITS})")


def _round_half_up(value: float) -> int:
    return int(np.floor(value + 0.5))


@dataclass(frozen=True)
class SequenceSpec:
    """Start and end (size, x, y) of one sequence."""

    length: int
    start: Triple
    end: Triple
    split: str

    def __post_init__(self) -> None:
        if self.length < 1:
            raise DatasetError(f"Sequence length must be positive, got {self.length}")
        low, high = size_range(self.split)
        loc_low, loc_high = DYNOBJ_LOCATION_RANGE
        for name, triple in (("start", self.start), ("end", self.end)):
            size, x, y = triple
            if not low <= size <= high:
                raise DatasetError(f"{name} size {size} outside {self.split} range [{low}, {high}]")
            for axis, loc in (("x", x), ("y", y)):
                if not loc_low <= loc <= loc_high:
                    raise DatasetError(f"{name} {axis} {loc} outside [{loc_low}, {loc_high}]")

    def params_at(self, t: int) -> Triple:
        """Linear interpolant at fraction t / (T - 1)."""
        if self.length == 1:
            return self.start
        frac = t / (self.length - 1)
        s0, x0, y0 = self.start
        s1, x1, y1 = self.end
        return (s0 + (s1 - s0) * frac, x0 + (x1 - x0) * frac, y0 + (y1 - y0) * frac)


def sample_sequence(
    split: str,
    seed: int | np.random.Generator,
    length: int = DYNOBJ_SEQUENCE_LENGTH,
) -> SequenceSpec:
    """Uniform start and end parameters, each drawn independently."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    low, high = size_range(split)
    loc_low, loc_high = DYNOBJ_LOCATION_RANGE

    def draw() -> Triple:
        size = rng.uniform(low, high)
        x = rng.uniform(loc_low, loc_high)
        y = rng.uniform(loc_low, loc_high)
        # rounded so manifests round-trip exactly
        return (
            round(float(size), MANIFEST_DECIMALS),
            round(float(x), MANIFEST_DECIMALS),
            round(float(y), MANIFEST_DECIMALS),
        )

    return SequenceSpec(length, draw(), draw(), split)


def render_frame(
    size: float, x: float, y: float, image_size: int = DYNOBJ_IMAGE_SIZE
) -> NDArray[np.float32]:
    """Binary frame with a clipped square at the rounded size and center."""
    frame = np.zeros((image_size, image_size), dtype=np.float32)
    width = max(_round_half_up(size), 1)
    cx, cy = _round_half_up(x), _round_half_up(y)
    x0, y0 = cx - width // 2, cy - width // 2
    rows = slice(max(y0, 0), min(y0 + width, image_size))
    cols = slice(max(x0, 0), min(x0 + width, image_size))
    frame[rows, cols] = 1.0
    return frame


def render_sequence(
    spec: SequenceSpec, image_size: int = DYNOBJ_IMAGE_SIZE
) -> NDArray[np.float32]:
    """(T, image_size, image_size) frames."""
    return np.stack([render_frame(*spec.params_at(t), image_size) for t in range(spec.length)])


def export_sequence_png(spec: SequenceSpec, path: Path) -> Path:
    """Save the frames side by side as a grayscale PNG strip."""
    strip = np.concatenate(list(render_sequence(spec)), axis=1)
    Image.fromarray((strip * 255).astype(np.uint8)).save(path)
    return path
