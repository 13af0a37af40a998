"""Tests for checkpoint module."""

import numpy as np
import pytest

from tcn_bench.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from tcn_bench.exceptions import CheckpointError, InputMissingError


class TestCheckpointFormat:
    """Tests for saving and loading checkpoints."""

    def test_entries_keep_order_shape_and_values(self, tmp_path, rng):
        """Test every entry comes back with its name, shape and float32 values."""
        entries = {
            "model.encoder.conv0.weight": rng.normal(size=(4, 3, 4, 4)).astype(np.float32),
            "model.scorer.bias": np.zeros(1, dtype=np.float32),
            "adam.m.model.scorer.bias": np.array([0.5], dtype=np.float32),
        }
        path = save_checkpoint(tmp_path / "model.ckpt", entries, "abc123def456", 250)

        loaded = load_checkpoint(path)
        assert loaded.config_hash == "abc123def456"
        assert loaded.step == 250
        assert list(loaded.entries) == list(entries)
        for name, value in entries.items():
            np.testing.assert_array_equal(loaded.entries[name], value)

    def test_header_is_readable_text(self, tmp_path):
        """Test the header lines precede the binary payload."""
        path = save_checkpoint(tmp_path / "model.ckpt", {}, "abc", 0)
        assert path.read_bytes().startswith(b"TCNCKPT 1\nconfig_hash=abc\nstep=0\nentries=0\n\n")

    def test_same_entries_same_bytes(self, tmp_path):
        """Test identical inputs give identical files."""
        entries = {"w": np.arange(6, dtype=np.float32).reshape(2, 3)}
        a = save_checkpoint(tmp_path / "a.ckpt", entries, "h", 3).read_bytes()
        b = save_checkpoint(tmp_path / "b.ckpt", entries, "h", 3).read_bytes()
        assert a == b

    def test_subset_strips_prefix(self):
        """Test subset selects one model's entries."""
        checkpoint = Checkpoint("h", 1, {"model.a": np.zeros(1), "adam.m.model.a": np.ones(1)})
        assert list(checkpoint.subset("model.")) == ["a"]


class TestCheckpointErrors:
    """Tests for malformed checkpoint files."""

    def test_missing_file(self, tmp_path):
        """Test missing checkpoint raises InputMissingError."""
        with pytest.raises(InputMissingError):
            load_checkpoint(tmp_path / "none.ckpt")

    def test_wrong_magic(self, tmp_path):
        """Test a foreign file is rejected."""
        path = tmp_path / "x.ckpt"
        path.write_bytes(b"NOTCKPT\nstep=0\n\n")
        with pytest.raises(CheckpointError, match="Not a tcn-bench checkpoint"):
            load_checkpoint(path)

    def test_truncated_payload(self, tmp_path):
        """Test a truncated entry is detected."""
        path = save_checkpoint(tmp_path / "x.ckpt", {"w": np.ones((4, 4), dtype=np.float32)}, "h", 1)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(CheckpointError, match="Truncated"):
            load_checkpoint(path)

    def test_trailing_bytes(self, tmp_path):
        """Test extra bytes after the last entry are rejected."""
        path = save_checkpoint(tmp_path / "x.ckpt", {}, "h", 1)
        path.write_bytes(path.read_bytes() + b"junk")
        with pytest.raises(CheckpointError, match="Trailing"):
            load_checkpoint(path)
