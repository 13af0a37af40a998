"""CSV and gnuplot .dat writers for run outputs.

Every table carries a `config_hash` column naming the run that produced it.
Floats are written with `repr`, so identical runs give identical bytes.
"""

import csv
import io
from collections.abc import Mapping, Sequence
from pathlib import Path

from .constants import MISSING_MARKER
from .exceptions import InputMissingError, ManifestParseError
from .logger import logger
from .run_directory import atomic_write_text

__all__ = [
    "Cell",
    "write_table",
    "write_dat",
    "write_columns",
    "write_loss_log",
    "read_loss_log",
]

Cell = str | int | float | None


def _format_cell(value: Cell) -> str:
    if value is None:
        return MISSING_MARKER
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_table(
    path: Path, header: Sequence[str], rows: Sequence[Sequence[Cell]], dat: bool = False
) -> Path:
    """Write a CSV with a one-line header; optionally a .dat twin next to it."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_cell(v) for v in row])
    atomic_write_text(path, buffer.getvalue())

    file_size = path.stat().st_size
    logger.info(f"  ✓ {path.name}: {len(rows)} rows ({file_size / 1024:.1f} KB)")

    if dat:
        write_dat(path.with_suffix(".dat"), header, rows)
    return path


def write_dat(path: Path, header: Sequence[str], rows: Sequence[Sequence[Cell]]) -> Path:
    """Whitespace-separated columns with a `#` header line."""
    lines = ["# " + " ".join(header)]
    lines.extend(" ".join(_format_cell(v) for v in row) for row in rows)
    atomic_write_text(path, "\n".join(lines) + "\n")
    return path


def write_loss_log(
    path: Path,
    losses: Sequence[float],
    accuracies: Sequence[float] | None,
    config_hash: str,
) -> Path:
    header = ["iteration", "loss", "accuracy", "config_hash"]
    rows: list[list[Cell]] = [
        [i, float(loss), None if accuracies is None else float(accuracies[i]), config_hash]
        for i, loss in enumerate(losses)
    ]
    return write_table(path, header, rows)


def read_loss_log(path: Path) -> tuple[list[float], list[float] | None]:
    """Losses and, when logged, accuracies from a `write_loss_log` file."""
    if not path.exists():
        raise InputMissingError("Loss log not found", str(path))
    losses: list[float] = []
    accuracies: list[float] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        for number, row in enumerate(reader, start=2):
            try:
                losses.append(float(row["loss"]))
                if row["accuracy"] != MISSING_MARKER:
                    accuracies.append(float(row["accuracy"]))
            except (KeyError, TypeError, ValueError) as e:
                raise ManifestParseError(f"Invalid loss row: {e}", str(path), number) from e
    return losses, (accuracies if len(accuracies) == len(losses) and accuracies else None)


def write_columns(
    path: Path, columns: Mapping[str, Sequence[Cell]], config_hash: str, dat: bool = True
) -> Path:
    """One row per iteration, one column per series; short series pad with missing cells."""
    length = max((len(v) for v in columns.values()), default=0)
    rows: list[list[Cell]] = [
        [i, *(values[i] if i < len(values) else None for values in columns.values()), config_hash]
        for i in range(length)
    ]
    return write_table(path, ["iteration", *columns, "config_hash"], rows, dat=dat)
