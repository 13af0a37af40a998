"""Learned-representation and training-curve analyses.

PCA follows the covariance route: center, form the (H, H) covariance with
divisor N - 1, eigendecompose and sort components by decreasing variance.
Each component is signed so its largest-magnitude loading is positive.
"""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .config import ExperimentConfig
from .constants import DIMENSIONS, LOSS_HALVING_WINDOW
from .exceptions import ShapeError
from .logger import logger
from .models import AnalogyScorer
from .normalization import CONTEXT_METHODS, VECTOR_METHODS, ContextBatch, NormSpec, normalize
from .run_directory import RunDirectory
from .tensor import Tensor, precision
from .training import RegionAccuracy, embed_objects, evaluation_problems
from .vaec import ImageBank, ObjectSpec, RegimeSpec, level_to_value

__all__ = [
    "PcaResult",
    "LinearFit",
    "DimensionTable",
    "DimensionFit",
    "EmbeddingReport",
    "pca",
    "linear_fit",
    "r_squared",
    "per_dimension_accuracy",
    "embedding_report",
    "curve_compare",
    "iterations_to_halve",
]


@dataclass
class PcaResult:
    """Components as rows, sorted by explained variance."""

    components: NDArray[np.float64]
    explained_variance: NDArray[np.float64]
    explained_variance_ratio: NDArray[np.float64]
    mean: NDArray[np.float64]
    projections: NDArray[np.float64]

    def transform(self, vectors: ArrayLike) -> NDArray[np.float64]:
        return (np.asarray(vectors, dtype=np.float64) - self.mean) @ self.components.T

    def reconstruct(self, scores: ArrayLike) -> NDArray[np.float64]:
        """Centered vectors from component scores."""
        return np.asarray(scores, dtype=np.float64) @ self.components


def pca(vectors: ArrayLike) -> PcaResult:
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ShapeError("PCA needs an N x H array with N >= 2", actual=x.shape)
    n = x.shape[0]
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    values, vecs = np.linalg.eigh(cov)
    order = np.argsort(values)[::-1]
    values = np.clip(values[order], 0.0, None)
    components = vecs[:, order].T

    pivots = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(len(components)), pivots])
    signs[signs == 0] = 1.0
    components = components * signs[:, None]

    total = values.sum()
    ratio = values / total if total > 0 else np.zeros_like(values)
    return PcaResult(components, values, ratio, mean, centered @ components[0])


@dataclass
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def linear_fit(x: ArrayLike, y: ArrayLike) -> LinearFit:
    """Ordinary least squares of y on x with an intercept."""
    xs = np.asarray(x, dtype=np.float64).reshape(-1)
    ys = np.asarray(y, dtype=np.float64).reshape(-1)
    if xs.shape != ys.shape or xs.size < 2:
        raise ShapeError("linear_fit needs two equal-length series of at least 2 points", xs.shape, ys.shape)
    design = np.stack([xs, np.ones_like(xs)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(design, ys, rcond=None)
    residual = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(residual**2)) / ss_tot if ss_tot > 0 else 0.0
    return LinearFit(float(slope), float(intercept), r2)


def r_squared(x: ArrayLike, y: ArrayLike) -> float:
    return linear_fit(x, y).r_squared


@dataclass
class DimensionTable:
    """Correct and total counts per (relevant dimension, region)."""

    regions: list[int]
    tags: list[str]
    counts: dict[tuple[str, int], tuple[int, int]]

    def accuracy(self, dim: str, index: int) -> float | None:
        correct, total = self.counts.get((dim, index), (0, 0))
        return correct / total if total else None

    def overall(self, index: int) -> float:
        """Count-weighted reaggregation over dimensions."""
        correct = sum(self.counts.get((d, index), (0, 0))[0] for d in DIMENSIONS)
        total = sum(self.counts.get((d, index), (0, 0))[1] for d in DIMENSIONS)
        return correct / total if total else 0.0


def per_dimension_accuracy(regions: Sequence[RegionAccuracy]) -> DimensionTable:
    counts: dict[tuple[str, int], tuple[int, int]] = {}
    for region in regions:
        for dim in DIMENSIONS:
            group = [r for r in region.results if r.relevant_dim == dim]
            counts[(dim, region.index)] = (sum(r.correct for r in group), len(group))
    return DimensionTable([r.index for r in regions], [r.tag for r in regions], counts)


@dataclass
class DimensionFit:
    dim: str
    pc1: NDArray[np.float64]
    values: NDArray[np.float64]
    fit: LinearFit
    explained_ratio: float


@dataclass
class EmbeddingReport:
    index: int
    tag: str
    method: str
    fits: list[DimensionFit]


def _report_spec(method: str) -> NormSpec | None:
    """Normalization applied to both embeddings and underlying values."""
    if method in CONTEXT_METHODS:
        return NormSpec("tcn")
    if method in VECTOR_METHODS and method != "layer":
        return NormSpec("batch")
    return None


def _normalized(values: NDArray[Any], spec: NormSpec) -> NDArray[np.float64]:
    with precision(np.float64):
        return normalize(ContextBatch(Tensor(values)), spec).values.data


def embedding_report(
    model: AnalogyScorer,
    config: ExperimentConfig,
    index: int,
    run: RunDirectory | None = None,
) -> EmbeddingReport:
    """First-PC value against each underlying dimension, with a linear fit.

    For normalized variants, embeddings and underlying values of the four
    analogy terms are normalized the same way, using only problems that vary
    on the plotted dimension. Otherwise every distinct object in the region
    is used as is.
    """
    config = config.resolved()
    problems, _ = evaluation_problems(config, index, run)
    bank = ImageBank(config.image_size)
    spec = _report_spec(config.norm)
    tag = RegimeSpec.create(config.regime_kind, index).tag
    fits: list[DimensionFit] = []

    for dim in DIMENSIONS:
        if spec is None:
            objects: list[ObjectSpec] = list(dict.fromkeys(o for p in problems for o in p.objects()))
            z = embed_objects(model, objects, bank).astype(np.float64)
            values = np.array([level_to_value(dim, o.level(dim)) for o in objects])
        else:
            subset = [p for p in problems if p.relevant_dim == dim]
            if not subset:
                logger.warning(f"{tag}: no problems vary on {dim}")
                continue
            terms = [o for p in subset for o in p.terms()]
            raw = embed_objects(model, terms, bank).reshape(len(subset), 4, -1)
            levels = np.array([level_to_value(dim, o.level(dim)) for o in terms])
            z = _normalized(raw, spec).reshape(len(terms), -1)
            values = _normalized(levels.reshape(len(subset), 4, 1), spec).reshape(-1)
        if len(z) < 2:
            continue
        result = pca(z)
        fit = linear_fit(values, result.projections)
        fits.append(
            DimensionFit(dim, result.projections, values, fit, float(result.explained_variance_ratio[0]))
        )
        logger.info(
            f"  {tag} {dim}: PC1 {result.explained_variance_ratio[0]:.1%} of variance, R^2 {fit.r_squared:.3f}"
        )
    return EmbeddingReport(index, tag, config.norm, fits)


def curve_compare(records: Mapping[str, Sequence[Sequence[float]]]) -> dict[str, list[float | None]]:
    """Per-iteration mean loss across seeds for each method.

    Iterations past the shortest seed of a method are missing, as are
    iterations past a method's end relative to the longest method.
    """
    if not records:
        raise ShapeError("curve_compare needs at least one record")
    curves: dict[str, list[float | None]] = {}
    for method, runs in records.items():
        if not runs:
            raise ShapeError(f"No loss logs for '{method}'")
        shortest = min(len(r) for r in runs)
        longest = max(len(r) for r in runs)
        if shortest != longest:
            logger.warning(f"{method}: loss logs differ in length ({shortest} vs {longest})")
        stacked = np.array([r[:shortest] for r in runs], dtype=np.float64)
        means: list[float | None] = [float(v) for v in stacked.mean(axis=0)]
        curves[method] = means + [None] * (longest - shortest)
    length = max(len(c) for c in curves.values())
    return {m: c + [None] * (length - len(c)) for m, c in curves.items()}


def iterations_to_halve(losses: Sequence[float], window: int = LOSS_HALVING_WINDOW) -> int | None:
    """First iteration at which the trailing-window mean reaches half the first window's mean."""
    values = np.asarray(losses, dtype=np.float64)
    if window < 1 or values.size < window:
        return None
    rolling = np.convolve(values, np.ones(window) / window, mode="valid")
    hits = np.flatnonzero(rolling <= rolling[0] / 2.0)
    return int(hits[0]) + window - 1 if hits.size else None
