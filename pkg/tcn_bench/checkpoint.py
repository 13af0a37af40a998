"""Checkpoint container: text header plus named little-endian float32 arrays.

Layout::

    TCNCKPT 1
    config_hash=<hex>
    step=<int>
    entries=<int>
    <blank line>
    repeated: u32 name length, name bytes, u32 ndim, u32 dims..., float32 data
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .exceptions import CheckpointError, InputMissingError
from .logger import logger
from .run_directory import atomic_write_bytes

__all__ = ["Checkpoint", "save_checkpoint", "load_checkpoint"]

MAGIC = "TCNCKPT 1"
_U32 = struct.Struct("<I")


@dataclass
class Checkpoint:
    config_hash: str
    step: int
    entries: dict[str, NDArray[Any]] = field(default_factory=dict)

    def subset(self, prefix: str) -> dict[str, NDArray[Any]]:
        """Entries under a dotted prefix, with the prefix removed."""
        return {
            name[len(prefix) :]: value
            for name, value in self.entries.items()
            if name.startswith(prefix)
        }


def _encode(checkpoint: Checkpoint) -> bytes:
    header = (
        f"{MAGIC}\nconfig_hash={checkpoint.config_hash}\n"
        f"step={checkpoint.step}\nentries={len(checkpoint.entries)}\n\n"
    )
    chunks = [header.encode("ascii")]
    for name, value in checkpoint.entries.items():
        array = np.ascontiguousarray(value, dtype="<f4")
        encoded = name.encode("utf-8")
        chunks.append(_U32.pack(len(encoded)))
        chunks.append(encoded)
        chunks.append(_U32.pack(array.ndim))
        chunks.extend(_U32.pack(d) for d in array.shape)
        chunks.append(array.tobytes())
    return b"".join(chunks)


def save_checkpoint(
    path: Path, entries: dict[str, NDArray[Any]], config_hash: str, step: int
) -> Path:
    """Write a checkpoint atomically."""
    atomic_write_bytes(path, _encode(Checkpoint(config_hash, step, dict(entries))))
    logger.debug(f"Checkpoint written: {path} (step {step}, {len(entries)} entries)")
    return path


def _read_u32(data: bytes, offset: int, path: Path) -> tuple[int, int]:
    if offset + 4 > len(data):
        raise CheckpointError("Truncated checkpoint", str(path))
    return _U32.unpack_from(data, offset)[0], offset + 4


def load_checkpoint(path: Path) -> Checkpoint:
    """Read a checkpoint written by `save_checkpoint`."""
    if not path.exists():
        raise InputMissingError("Checkpoint not found", str(path))
    data = path.read_bytes()
    split = data.find(b"\n\n")
    if split < 0:
        raise CheckpointError("Checkpoint header not terminated", str(path))

    lines = data[:split].decode("ascii", errors="replace").split("\n")
    if not lines or lines[0] != MAGIC:
        raise CheckpointError("Not a tcn-bench checkpoint", str(path))
    fields: dict[str, str] = {}
    for line in lines[1:]:
        key, sep, value = line.partition("=")
        if not sep:
            raise CheckpointError(f"Malformed header line '{line}'", str(path))
        fields[key] = value
    try:
        checkpoint = Checkpoint(fields["config_hash"], int(fields["step"]))
        count = int(fields["entries"])
    except (KeyError, ValueError) as e:
        raise CheckpointError(f"Incomplete checkpoint header: {e}", str(path)) from e

    offset = split + 2
    for _ in range(count):
        name_len, offset = _read_u32(data, offset, path)
        name = data[offset : offset + name_len].decode("utf-8")
        offset += name_len
        ndim, offset = _read_u32(data, offset, path)
        shape = []
        for _ in range(ndim):
            dim, offset = _read_u32(data, offset, path)
            shape.append(dim)
        nbytes = 4 * int(np.prod(shape, dtype=np.int64))
        if offset + nbytes > len(data):
            raise CheckpointError(f"Truncated entry '{name}'", str(path))
        array = np.frombuffer(data, dtype="<f4", count=nbytes // 4, offset=offset)
        checkpoint.entries[name] = array.reshape(shape).astype(np.float32)
        offset += nbytes
    if offset != len(data):
        raise CheckpointError("Trailing bytes after last entry", str(path))
    return checkpoint
