"""Run directory layout and atomic file writes for tcn-bench."""

import os
import tempfile
from pathlib import Path

from .constants import CHECKPOINT_NAME, CONFIG_SNAPSHOT, DONE_MARKER, LOG_NAME
from .exceptions import InputMissingError
from .logger import logger

__all__ = [
    "RUN_ROOT",
    "RunDirectory",
    "atomic_write_bytes",
    "atomic_write_text",
    "resolve_run_path",
]

if "TCN_BENCH_RUN_ROOT" in os.environ:
    RUN_ROOT = Path(os.environ["TCN_BENCH_RUN_ROOT"])
else:
    RUN_ROOT = Path.home() / ".cache" / "tcn-bench" / "runs"


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write bytes to a file atomically using temp-file + rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = None
    try:
        with tempfile.NamedTemporaryFile(
            mode="wb", dir=path.parent, suffix=".tmp", delete=False
        ) as tmp:
            tmp.write(data)
            tmp_path = tmp.name
        os.replace(tmp_path, str(path))
    except OSError:
        logger.debug(f"Failed to write {path}")
        if tmp_path:
            try:
                os.unlink(tmp_path)
            except OSError:
                pass
        raise


def atomic_write_text(path: Path, text: str) -> None:
    """Write UTF-8 text atomically with `\\n` line endings."""
    atomic_write_bytes(path, text.encode("utf-8"))


def resolve_run_path(name: str | Path) -> Path:
    """Absolute or explicitly relative paths stay; bare names land under RUN_ROOT."""
    path = Path(name)
    if path.is_absolute() or str(name).startswith((".", os.sep)) or path.exists():
        return path
    return RUN_ROOT / path


class RunDirectory:
    """Paths of one run: config snapshot, manifests, checkpoints, CSVs, log."""

    def __init__(self, path: Path):
        self.path = Path(path)

    def __repr__(self) -> str:
        return f"RunDirectory({str(self.path)!r})"

    @property
    def config_path(self) -> Path:
        return self.path / CONFIG_SNAPSHOT

    @property
    def log_path(self) -> Path:
        return self.path / LOG_NAME

    @property
    def done_path(self) -> Path:
        return self.path / DONE_MARKER

    @property
    def manifest_dir(self) -> Path:
        return self.path / "manifests"

    def checkpoint_path(self, name: str = CHECKPOINT_NAME) -> Path:
        return self.path / name

    def output_path(self, name: str) -> Path:
        return self.path / name

    @classmethod
    def create(cls, path: Path, config_text: str) -> "RunDirectory":
        """Create the directory and snapshot the merged config before any work."""
        run = cls(path)
        run.path.mkdir(parents=True, exist_ok=True)
        atomic_write_text(run.config_path, config_text)
        logger.debug(f"Config snapshot written to {run.config_path}")
        return run

    @classmethod
    def open(cls, path: Path) -> "RunDirectory":
        """Open an existing run, which must hold a config snapshot."""
        run = cls(path)
        if not run.config_path.exists():
            raise InputMissingError("Run directory has no config snapshot", str(run.path))
        return run

    def require(self, path: Path, what: str) -> Path:
        if not path.exists():
            raise InputMissingError(f"Missing {what}", str(path))
        return path

    def is_done(self) -> bool:
        return self.done_path.exists()

    def mark_done(self, config_hash: str) -> None:
        atomic_write_text(self.done_path, f"{config_hash}\n")
        logger.info(f"Run complete: {self.path} ({config_hash})")
