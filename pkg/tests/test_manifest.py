"""Tests for manifest module."""

import pytest

from tcn_bench.dynobj import sample_sequence
from tcn_bench.exceptions import InputMissingError, ManifestParseError
from tcn_bench.helpers import derive_seed
from tcn_bench.manifest import (
    export_manifest,
    export_sequences,
    format_problem,
    import_manifest,
    import_presentations,
    import_sequences,
)
from tcn_bench.vaec import RegimeSpec, make_candidates, sample_problems


@pytest.fixture
def problems():
    return sample_problems(RegimeSpec.translation(2), 25, seed=1)


class TestAnalogyManifest:
    """Tests for analogy manifests."""

    def test_line_layout(self, problems):
        """Test one line per problem: tag, dimension, 40 levels and the answer."""
        candidates, answer = make_candidates(problems[0], 0)
        fields = format_problem(problems[0], candidates, answer).split()
        assert fields[0] == "translation-2"
        assert fields[1] == problems[0].relevant_dim
        assert len(fields) == 43
        assert int(fields[-1]) == answer

    def test_same_seed_same_bytes(self, tmp_path, problems):
        """Test exporting twice with one seed gives identical files."""
        a = export_manifest(problems, tmp_path / "a.txt", seed=9).read_bytes()
        b = export_manifest(problems, tmp_path / "b.txt", seed=9).read_bytes()
        c = export_manifest(problems, tmp_path / "c.txt", seed=10).read_bytes()
        assert a == b
        assert a != c

    def test_reads_back(self, tmp_path, problems):
        """Test imported problems equal the exported ones."""
        path = export_manifest(problems, tmp_path / "m.txt", seed=3)
        assert import_manifest(path) == problems

    def test_candidate_order_recoverable(self, tmp_path, problems):
        """Test the written order is the one derived from the manifest seed."""
        path = export_manifest(problems, tmp_path / "m.txt", seed=3)
        line = path.read_text().splitlines()[4]
        candidates, answer = make_candidates(problems[4], derive_seed(3, "manifest", 4))
        assert line == format_problem(problems[4], candidates, answer)

    def test_presentations_read_back(self, tmp_path, problems):
        """Test stored candidate orders and answer positions are returned as written."""
        path = export_manifest(problems, tmp_path / "m.txt", seed=3)
        records = import_presentations(path)
        assert [p for p, _, _ in records] == problems
        for index, (problem, candidates, answer) in enumerate(records):
            assert (candidates, answer) == make_candidates(problem, derive_seed(3, "manifest", index))
            assert candidates[answer] == problem.d

    def test_blank_lines_skipped(self, tmp_path, problems):
        """Test blank lines are ignored."""
        path = export_manifest(problems[:2], tmp_path / "m.txt")
        path.write_text(path.read_text().replace("\n", "\n\n"))
        assert len(import_manifest(path)) == 2

    def test_missing_file(self, tmp_path):
        """Test a missing manifest raises InputMissingError."""
        with pytest.raises(InputMissingError):
            import_manifest(tmp_path / "none.txt")

    def test_short_line(self, tmp_path):
        """Test a truncated line names its line number."""
        path = tmp_path / "m.txt"
        path.write_text("translation-1 x 1 2 3\n")
        with pytest.raises(ManifestParseError, match="Line: 1"):
            import_manifest(path)

    def test_invalid_problem(self, tmp_path, problems):
        """Test a line violating the analogy invariants is rejected."""
        path = export_manifest(problems[:1], tmp_path / "m.txt")
        fields = path.read_text().split()
        fields[-1] = "7"
        path.write_text(" ".join(fields) + "\n")
        with pytest.raises(ManifestParseError, match="answer position"):
            import_manifest(path)


class TestSequenceManifest:
    """Tests for dynamic-object manifests."""

    def test_round_trip(self, tmp_path):
        """Test sequence specs read back exactly."""
        specs = [sample_sequence("test", seed, length=7) for seed in range(5)]
        path = export_sequences(specs, tmp_path / "s.txt")
        assert import_sequences(path) == specs
        assert path.read_text().splitlines()[0].startswith("test 7 ")

    def test_bad_line(self, tmp_path):
        """Test malformed lines raise ManifestParseError."""
        path = tmp_path / "s.txt"
        path.write_text("train 5 1.0 2.0\n")
        with pytest.raises(ManifestParseError, match="expected 8 fields"):
            import_sequences(path)

    def test_out_of_range_values(self, tmp_path):
        """Test parameters outside the split's ranges are rejected."""
        path = tmp_path / "s.txt"
        path.write_text("train 5 50.0 20.0 20.0 5.0 20.0 20.0\n")
        with pytest.raises(ManifestParseError):
            import_sequences(path)
