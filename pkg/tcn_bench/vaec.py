"""Visual analogy extrapolation dataset.

Objects are green squares on gray placed in a discrete 4-D level space
(brightness, size, x, y; 42 levels each). A regime restricts every
dimension to a 7-level palette: translation regions are contiguous blocks
along the diagonal, scales stretch the first block's level pattern. An
analogy A:B::C:D varies a single relevant dimension with B-A == D-C != 0 and
A != C; the six foils take the remaining palette levels on that dimension.
"""

import itertools
import threading
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray
from PIL import Image

from .constants import (
    BACKGROUND_GRAY,
    BRIGHTNESS_MAX,
    BRIGHTNESS_MIN,
    CENTER_MIN,
    CENTER_STEP,
    DIMENSIONS,
    LEVELS_PER_REGION,
    MAX_LEVEL,
    NUM_CANDIDATES,
    NUM_REGIONS,
    PROBLEMS_PER_REGION,
    REGIME_KINDS,
    VAEC_CHANNELS,
    VAEC_IMAGE_SIZE,
    WIDTH_MIN,
    WIDTH_STEP,
)
from .exceptions import DatasetError
from .logger import logger

__all__ = [
    "ObjectSpec",
    "RegimeSpec",
    "AnalogyProblem",
    "AnalogyEnumeration",
    "ImageBank",
    "level_to_value",
    "render_object",
    "enumerate_analogies",
    "sample_problems",
    "make_candidates",
    "problem_images",
    "export_problem_png",
]


def _check_level(level: int, dim: str) -> None:
    if not 0 <= level <= MAX_LEVEL:
        raise DatasetError(f"Level {level} for {dim} outside [0, {MAX_LEVEL}]")


def level_to_value(dim: str, level: int) -> float:
    """Physical value of a discrete level."""
    if dim not in DIMENSIONS:
        raise DatasetError(f"Unknown dimension '{dim}'")
    _check_level(level, dim)
    if dim == "brightness":
        return BRIGHTNESS_MIN + (BRIGHTNESS_MAX - BRIGHTNESS_MIN) * level / MAX_LEVEL
    if dim == "size":
        return float(WIDTH_MIN + WIDTH_STEP * level)
    return float(CENTER_MIN + CENTER_STEP * level)


@dataclass(frozen=True, order=True)
class ObjectSpec:
    brightness_level: int
    size_level: int
    x_level: int
    y_level: int

    def __post_init__(self) -> None:
        for dim, level in zip(DIMENSIONS, self.levels()):
            _check_level(level, dim)

    def levels(self) -> tuple[int, int, int, int]:
        return (self.brightness_level, self.size_level, self.x_level, self.y_level)

    def level(self, dim: str) -> int:
        return self.levels()[DIMENSIONS.index(dim)]

    @classmethod
    def from_levels(cls, levels: Sequence[int]) -> "ObjectSpec":
        if len(levels) != len(DIMENSIONS):
            raise DatasetError(f"Expected {len(DIMENSIONS)} levels, got {len(levels)}")
        return cls(*(int(v) for v in levels))


@dataclass(frozen=True)
class RegimeSpec:
    """A named family of per-dimension level palettes."""

    kind: str
    index: int
    palettes: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.palettes) != len(DIMENSIONS):
            raise DatasetError("A regime needs one palette per dimension")
        for dim, palette in zip(DIMENSIONS, self.palettes):
            if list(palette) != sorted(set(palette)):
                raise DatasetError(f"Palette for {dim} must be strictly increasing")
            for level in palette:
                _check_level(level, dim)

    @property
    def tag(self) -> str:
        return f"{self.kind}-{self.index}"

    def palette(self, dim: str) -> tuple[int, ...]:
        return self.palettes[DIMENSIONS.index(dim)]

    @classmethod
    def translation(cls, region: int) -> "RegimeSpec":
        if not 1 <= region <= NUM_REGIONS:
            raise DatasetError(f"Region {region} outside [1, {NUM_REGIONS}]")
        start = LEVELS_PER_REGION * (region - 1)
        palette = tuple(range(start, start + LEVELS_PER_REGION))
        return cls("translation", region, (palette,) * len(DIMENSIONS))

    @classmethod
    def scale(cls, scale: int) -> "RegimeSpec":
        if not 1 <= scale <= NUM_REGIONS:
            raise DatasetError(f"Scale {scale} outside [1, {NUM_REGIONS}]")
        palette = tuple(scale * k - 1 for k in range(1, LEVELS_PER_REGION + 1))
        return cls("scale", scale, (palette,) * len(DIMENSIONS))

    @classmethod
    def create(cls, kind: str, index: int) -> "RegimeSpec":
        if kind == "translation":
            return cls.translation(index)
        if kind == "scale":
            return cls.scale(index)
        raise DatasetError(f"Unknown regime kind '{kind}' (expected one of {REGIME_KINDS})")

    @classmethod
    def from_tag(cls, tag: str) -> "RegimeSpec":
        kind, sep, index = tag.rpartition("-")
        if not sep or not index.isdigit():
            raise DatasetError(f"Malformed regime tag '{tag}'")
        return cls.create(kind, int(index))


@dataclass(frozen=True)
class AnalogyProblem:
    a: ObjectSpec
    b: ObjectSpec
    c: ObjectSpec
    d: ObjectSpec
    foils: tuple[ObjectSpec, ...]
    relevant_dim: str
    tag: str

    def terms(self) -> tuple[ObjectSpec, ObjectSpec, ObjectSpec, ObjectSpec]:
        return (self.a, self.b, self.c, self.d)

    def objects(self) -> tuple[ObjectSpec, ...]:
        return (*self.terms(), *self.foils)

    def validate(self, regime: RegimeSpec | None = None) -> None:
        """Raise DatasetError unless every analogy invariant holds."""
        if self.relevant_dim not in DIMENSIONS:
            raise DatasetError(f"Unknown relevant dimension '{self.relevant_dim}'")
        if len(self.foils) != NUM_CANDIDATES - 1:
            raise DatasetError(f"Expected {NUM_CANDIDATES - 1} foils, got {len(self.foils)}")
        rel = DIMENSIONS.index(self.relevant_dim)
        irrelevant = [i for i in range(len(DIMENSIONS)) if i != rel]
        reference = [self.a.levels()[i] for i in irrelevant]
        for obj in self.objects():
            if [obj.levels()[i] for i in irrelevant] != reference:
                raise DatasetError("Objects disagree on an irrelevant dimension")
        a, b, c, d = (obj.levels()[rel] for obj in self.terms())
        if b - a != d - c or b == a:
            raise DatasetError("B-A must equal D-C and be nonzero")
        if a == c:
            raise DatasetError("A and C must differ on the relevant dimension")
        foil_levels = [f.levels()[rel] for f in self.foils]
        if d in foil_levels or len(set(foil_levels)) != len(foil_levels):
            raise DatasetError("Foils must be distinct and differ from D")
        if regime is not None:
            if set(foil_levels) | {d} != set(regime.palettes[rel]):
                raise DatasetError("Foils and D must cover the regime palette")


def _quadruples(levels: int) -> NDArray[np.int64]:
    """Palette-index quadruples (a, b, c, d) with b-a == d-c != 0 and a != c."""
    quads = [
        (a, b, c, c + b - a)
        for a, b, c in itertools.product(range(levels), repeat=3)
        if a != b and a != c and 0 <= c + b - a < levels
    ]
    return np.array(quads, dtype=np.int64).reshape(-1, 4)


class AnalogyEnumeration:
    """Deterministic, indexable enumeration of every valid analogy in a regime.

    Order: relevant dimension (in DIMENSIONS order), then the irrelevant
    level triple, then the quadruple, each lexicographic.
    """

    def __init__(self, regime: RegimeSpec):
        self.regime = regime
        self._blocks: list[tuple[int, NDArray[np.int64], list[tuple[int, ...]]]] = []
        self._offsets = [0]
        for rel, dim in enumerate(DIMENSIONS):
            quads = _quadruples(len(regime.palettes[rel]))
            others = [regime.palettes[i] for i in range(len(DIMENSIONS)) if i != rel]
            triples = list(itertools.product(*others))
            self._blocks.append((rel, quads, triples))
            self._offsets.append(self._offsets[-1] + len(quads) * len(triples))

    def __len__(self) -> int:
        return self._offsets[-1]

    @property
    def count(self) -> int:
        return len(self)

    def __getitem__(self, index: int) -> AnalogyProblem:
        if not 0 <= index < len(self):
            raise IndexError(f"Analogy index {index} out of range")
        block = int(np.searchsorted(self._offsets, index, side="right")) - 1
        rel, quads, triples = self._blocks[block]
        local = index - self._offsets[block]
        triple, quad = divmod(local, len(quads))
        return self._build(rel, triples[triple], quads[quad])

    def __iter__(self) -> Iterator[AnalogyProblem]:
        for rel, quads, triples in self._blocks:
            for triple in triples:
                for quad in quads:
                    yield self._build(rel, triple, quad)

    def _build(
        self, rel: int, triple: tuple[int, ...], quad: NDArray[np.int64]
    ) -> AnalogyProblem:
        palette = self.regime.palettes[rel]

        def obj(level: int) -> ObjectSpec:
            levels = list(triple)
            levels.insert(rel, level)
            return ObjectSpec.from_levels(levels)

        a, b, c, d = (palette[int(q)] for q in quad)
        foils = tuple(obj(level) for level in palette if level != d)
        return AnalogyProblem(obj(a), obj(b), obj(c), obj(d), foils, DIMENSIONS[rel], self.regime.tag)


def enumerate_analogies(regime: RegimeSpec) -> AnalogyEnumeration:
    """All valid analogies of a regime; `len()` is the count."""
    return AnalogyEnumeration(regime)


def sample_problems(
    regime: RegimeSpec, n: int = PROBLEMS_PER_REGION, seed: int = 0
) -> list[AnalogyProblem]:
    """Draw n distinct problems via a seeded shuffle of the enumeration."""
    enumeration = enumerate_analogies(regime)
    total = len(enumeration)
    if n < 0 or n > total:
        raise DatasetError(f"Cannot draw {n} problems from {total} in {regime.tag}")
    order = np.random.default_rng(seed).permutation(total)[:n]
    problems = [enumeration[int(i)] for i in order]
    logger.debug(f"Sampled {n} of {total} analogies from {regime.tag}")
    return problems


def make_candidates(
    problem: AnalogyProblem, seed: int | np.random.Generator
) -> tuple[list[ObjectSpec], int]:
    """D and the foils in a seeded random order, with D's position."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    pool = (problem.d, *problem.foils)
    order = rng.permutation(len(pool))
    candidates = [pool[int(k)] for k in order]
    return candidates, int(np.flatnonzero(order == 0)[0])


def _render_full(spec: ObjectSpec) -> NDArray[np.float32]:
    size = VAEC_IMAGE_SIZE
    image = np.full((size, size, VAEC_CHANNELS), BACKGROUND_GRAY, dtype=np.float32)
    width = int(level_to_value("size", spec.size_level))
    cx = int(level_to_value("x", spec.x_level))
    cy = int(level_to_value("y", spec.y_level))
    x0, y0 = cx - width // 2, cy - width // 2
    x1, y1 = x0 + width - 1, y0 + width - 1
    if x0 < 0 or y0 < 0 or x1 >= size or y1 >= size:
        logger.debug(f"Square clipped at image border: {spec}")
    rows = slice(max(y0, 0), min(y1, size - 1) + 1)
    cols = slice(max(x0, 0), min(x1, size - 1) + 1)
    image[rows, cols] = (0.0, level_to_value("brightness", spec.brightness_level), 0.0)
    return image


def render_object(spec: ObjectSpec, image_size: int = VAEC_IMAGE_SIZE) -> NDArray[np.float32]:
    """Render to (image_size, image_size, 3); smaller sizes block-average the full render."""
    image = _render_full(spec)
    if image_size == VAEC_IMAGE_SIZE:
        return image
    if image_size < 1 or VAEC_IMAGE_SIZE % image_size:
        raise DatasetError(f"Image size {image_size} must divide {VAEC_IMAGE_SIZE}")
    f = VAEC_IMAGE_SIZE // image_size
    blocks = image.reshape(image_size, f, image_size, f, VAEC_CHANNELS)
    return blocks.mean(axis=(1, 3), dtype=np.float64).astype(np.float32)


class ImageBank:
    """Memoized channel-first renders at one image size."""

    def __init__(self, image_size: int = VAEC_IMAGE_SIZE):
        self.image_size = image_size
        self._images: dict[ObjectSpec, NDArray[np.float32]] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._images)

    def get(self, spec: ObjectSpec) -> NDArray[np.float32]:
        with self._lock:
            image = self._images.get(spec)
        if image is None:
            image = np.ascontiguousarray(render_object(spec, self.image_size).transpose(2, 0, 1))
            image.setflags(write=False)
            with self._lock:
                self._images.setdefault(spec, image)
        return image

    def stack(self, specs: Sequence[ObjectSpec]) -> NDArray[np.float32]:
        return np.stack([self.get(s) for s in specs])


def problem_images(
    problem: AnalogyProblem, candidates: Sequence[ObjectSpec], bank: ImageBank
) -> NDArray[np.float32]:
    """(10, C, H, W): A, B, C then the candidates in presentation order."""
    return bank.stack([problem.a, problem.b, problem.c, *candidates])


def export_problem_png(
    problem: AnalogyProblem,
    candidates: Sequence[ObjectSpec],
    path: Path,
    image_size: int = VAEC_IMAGE_SIZE,
) -> Path:
    """Save A, B, C and the candidates side by side as an 8-bit PNG strip."""
    tiles = [render_object(s, image_size) for s in (problem.a, problem.b, problem.c, *candidates)]
    strip: NDArray[Any] = np.concatenate(tiles, axis=1)
    Image.fromarray(np.round(strip * 255.0).astype(np.uint8)).save(path)
    return path
