"""Line-oriented manifests for analogy problems and dynamic-object sequences.

Analogy line: ``tag dim`` then A, B, C and the seven candidates in
presentation order (4 level integers each), then the answer position.
Sequence line: ``split T`` then start and end (size, x, y) with six decimals.
No header line; one record per line.
"""

from collections.abc import Sequence
from pathlib import Path

from .constants import DIMENSIONS, MANIFEST_DECIMALS, NUM_CANDIDATES
from .dynobj import SequenceSpec
from .exceptions import DatasetError, InputMissingError, ManifestParseError
from .helpers import derive_seed
from .logger import logger
from .run_directory import atomic_write_text
from .vaec import AnalogyProblem, ObjectSpec, make_candidates

__all__ = [
    "format_problem",
    "export_manifest",
    "import_manifest",
    "import_presentations",
    "export_sequences",
    "import_sequences",
]

_LEVELS = len(DIMENSIONS)
_PROBLEM_FIELDS = 2 + (3 + NUM_CANDIDATES) * _LEVELS + 1


def format_problem(
    problem: AnalogyProblem, candidates: Sequence[ObjectSpec], answer: int
) -> str:
    objects = (problem.a, problem.b, problem.c, *candidates)
    levels = " ".join(str(v) for obj in objects for v in obj.levels())
    return f"{problem.tag} {problem.relevant_dim} {levels} {answer}"


def export_manifest(problems: Sequence[AnalogyProblem], path: Path, seed: int = 0) -> Path:
    """Write problems with seeded candidate orders; same seed gives identical bytes."""
    lines = []
    for index, problem in enumerate(problems):
        candidates, answer = make_candidates(problem, derive_seed(seed, "manifest", index))
        lines.append(format_problem(problem, candidates, answer) + "\n")
    atomic_write_text(path, "".join(lines))
    logger.info(f"Wrote {len(problems)} problems to {path}")
    return path


def _read_lines(path: Path) -> list[str]:
    if not path.exists():
        raise InputMissingError("Manifest not found", str(path))
    try:
        return path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise ManifestParseError(f"Cannot read manifest: {e}", str(path)) from e


def _parse_problem(line: str) -> tuple[AnalogyProblem, list[ObjectSpec], int]:
    fields = line.split()
    if len(fields) != _PROBLEM_FIELDS:
        raise DatasetError(f"expected {_PROBLEM_FIELDS} fields, found {len(fields)}")
    tag, dim = fields[0], fields[1]
    if dim not in DIMENSIONS:
        raise DatasetError(f"unknown dimension '{dim}'")
    try:
        numbers = [int(v) for v in fields[2:]]
    except ValueError as e:
        raise DatasetError(f"non-integer level: {e}") from e
    objects = [
        ObjectSpec.from_levels(numbers[i : i + _LEVELS])
        for i in range(0, (3 + NUM_CANDIDATES) * _LEVELS, _LEVELS)
    ]
    answer = numbers[-1]
    if not 0 <= answer < NUM_CANDIDATES:
        raise DatasetError(f"answer position {answer} out of range")
    candidates = objects[3:]
    d = candidates[answer]
    foils = sorted(
        (c for i, c in enumerate(candidates) if i != answer), key=lambda o: o.level(dim)
    )
    problem = AnalogyProblem(objects[0], objects[1], objects[2], d, tuple(foils), dim, tag)
    problem.validate()
    return problem, candidates, answer


def import_presentations(path: Path) -> list[tuple[AnalogyProblem, list[ObjectSpec], int]]:
    """Problems with the candidate order and answer position stored in the file."""
    records = []
    for number, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            records.append(_parse_problem(line))
        except DatasetError as e:
            raise ManifestParseError(f"Invalid problem: {e}", str(path), number) from e
    logger.debug(f"Read {len(records)} problems from {path}")
    return records


def import_manifest(path: Path) -> list[AnalogyProblem]:
    """Read problems written by `export_manifest`."""
    return [problem for problem, _, _ in import_presentations(path)]


def export_sequences(specs: Sequence[SequenceSpec], path: Path) -> Path:
    fmt = f"{{:.{MANIFEST_DECIMALS}f}}"
    lines = []
    for spec in specs:
        values = " ".join(fmt.format(v) for v in (*spec.start, *spec.end))
        lines.append(f"{spec.split} {spec.length} {values}\n")
    atomic_write_text(path, "".join(lines))
    logger.info(f"Wrote {len(specs)} sequences to {path}")
    return path


def import_sequences(path: Path) -> list[SequenceSpec]:
    specs = []
    for number, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        fields = line.split()
        try:
            if len(fields) != 8:
                raise DatasetError(f"expected 8 fields, found {len(fields)}")
            values = [float(v) for v in fields[2:]]
            specs.append(
                SequenceSpec(
                    int(fields[1]),
                    (values[0], values[1], values[2]),
                    (values[3], values[4], values[5]),
                    fields[0],
                )
            )
        except (ValueError, DatasetError) as e:
            raise ManifestParseError(f"Invalid sequence: {e}", str(path), number) from e
    return specs
