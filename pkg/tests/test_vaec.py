"""Tests for vaec module."""

import itertools

import numpy as np
import pytest
from PIL import Image

from tcn_bench.constants import DIMENSIONS
from tcn_bench.exceptions import DatasetError
from tcn_bench.vaec import (
    AnalogyProblem,
    ImageBank,
    ObjectSpec,
    RegimeSpec,
    enumerate_analogies,
    export_problem_png,
    level_to_value,
    make_candidates,
    problem_images,
    render_object,
    sample_problems,
)


def brute_force_count(levels):
    """Count (a, b, c, d) with b-a == d-c != 0 and a != c by direct search."""
    return sum(
        1
        for a, b, c, d in itertools.product(range(levels), repeat=4)
        if b - a == d - c and b != a and a != c
    )


class TestLevels:
    """Tests for level_to_value and ObjectSpec."""

    def test_level_values(self):
        """Test the level to physical value maps at both ends."""
        assert level_to_value("brightness", 0) == pytest.approx(0.4)
        assert level_to_value("brightness", 41) == pytest.approx(1.0)
        assert level_to_value("size", 0) == 3.0
        assert level_to_value("size", 41) == 85.0
        assert level_to_value("x", 0) == 43.0
        assert level_to_value("y", 41) == 84.0

    def test_out_of_range_level(self):
        """Test levels past 41 are rejected."""
        with pytest.raises(DatasetError):
            ObjectSpec(0, 0, 0, 42)
        with pytest.raises(DatasetError):
            level_to_value("hue", 0)

    def test_from_levels(self):
        """Test construction from a level sequence."""
        assert ObjectSpec.from_levels([1, 2, 3, 4]).level("x") == 3
        with pytest.raises(DatasetError):
            ObjectSpec.from_levels([1, 2, 3])


class TestRegimes:
    """Tests for RegimeSpec."""

    def test_translation_blocks(self):
        """Test translation regions are contiguous blocks of seven levels."""
        assert RegimeSpec.translation(1).palette("x") == tuple(range(7))
        assert RegimeSpec.translation(6).palette("size") == tuple(range(35, 42))

    def test_scale_palettes(self):
        """Test scales stretch the first block's pattern."""
        assert RegimeSpec.scale(1).palette("brightness") == tuple(range(7))
        assert RegimeSpec.scale(6).palette("y") == (5, 11, 17, 23, 29, 35, 41)

    def test_tags_round_trip(self):
        """Test tags name the regime and parse back."""
        regime = RegimeSpec.create("scale", 3)
        assert regime.tag == "scale-3"
        assert RegimeSpec.from_tag("scale-3") == regime

    def test_bad_regimes(self):
        """Test invalid kinds and indices."""
        for kind, index in (("translation", 0), ("scale", 7), ("rotation", 1)):
            with pytest.raises(DatasetError):
                RegimeSpec.create(kind, index)
        with pytest.raises(DatasetError):
            RegimeSpec.from_tag("scale")


class TestEnumeration:
    """Tests for the analogy enumeration."""

    def test_region_count(self):
        """Test a region holds 140 quadruples x 343 backgrounds x 4 dimensions."""
        assert brute_force_count(7) == 140
        assert len(enumerate_analogies(RegimeSpec.translation(1))) == 192080
        assert len(enumerate_analogies(RegimeSpec.scale(4))) == 192080

    def test_indexing_matches_iteration(self):
        """Test random access agrees with sequential iteration."""
        enumeration = enumerate_analogies(RegimeSpec.translation(2))
        first = list(itertools.islice(iter(enumeration), 300))
        assert [enumeration[i] for i in range(300)] == first
        with pytest.raises(IndexError):
            enumeration[len(enumeration)]

    def test_problems_valid(self):
        """Test enumerated problems satisfy every invariant."""
        regime = RegimeSpec.translation(3)
        enumeration = enumerate_analogies(regime)
        for index in range(0, len(enumeration), 997):
            enumeration[index].validate(regime)

    @pytest.mark.slow
    def test_full_region_valid(self):
        """Test every problem of a region is valid and distinct."""
        regime = RegimeSpec.translation(1)
        problems = list(enumerate_analogies(regime))
        for problem in problems:
            problem.validate(regime)
        assert len(set(problems)) == 192080


class TestAnalogyProblem:
    """Tests for AnalogyProblem invariants."""

    def problem(self):
        return enumerate_analogies(RegimeSpec.translation(1))[0]

    def test_unique_answer(self):
        """Test exactly one candidate completes the analogy."""
        problem = self.problem()
        rel = problem.relevant_dim
        delta = problem.b.level(rel) - problem.a.level(rel)
        matches = [
            o for o in (problem.d, *problem.foils) if o.level(rel) - problem.c.level(rel) == delta
        ]
        assert matches == [problem.d]

    def test_irrelevant_mismatch(self):
        """Test an object differing on an irrelevant dimension is rejected."""
        problem = self.problem()
        levels = list(problem.a.levels())
        other = DIMENSIONS.index("y") if problem.relevant_dim != "y" else 0
        levels[other] += 1
        broken = AnalogyProblem(
            ObjectSpec.from_levels(levels), problem.b, problem.c, problem.d,
            problem.foils, problem.relevant_dim, problem.tag,
        )
        with pytest.raises(DatasetError, match="irrelevant"):
            broken.validate()

    def test_wrong_foil_count(self):
        """Test a problem needs six foils."""
        problem = self.problem()
        broken = AnalogyProblem(
            problem.a, problem.b, problem.c, problem.d, problem.foils[:5], problem.relevant_dim, problem.tag
        )
        with pytest.raises(DatasetError, match="foils"):
            broken.validate()


class TestSampling:
    """Tests for sample_problems and make_candidates."""

    def test_full_sample_unique(self):
        """Test the default sample draws 19,040 distinct problems."""
        problems = sample_problems(RegimeSpec.translation(1), seed=7)
        assert len(problems) == 19040
        assert len(set(problems)) == 19040

    def test_seeded(self):
        """Test the same seed draws the same problems."""
        regime = RegimeSpec.scale(2)
        assert sample_problems(regime, 20, seed=3) == sample_problems(regime, 20, seed=3)
        assert sample_problems(regime, 20, seed=3) != sample_problems(regime, 20, seed=4)

    def test_too_many(self):
        """Test drawing more problems than exist fails."""
        with pytest.raises(DatasetError):
            sample_problems(RegimeSpec.translation(1), 192081)

    def test_candidates_permutation(self):
        """Test candidates are D and the foils with D at the reported position."""
        problem = sample_problems(RegimeSpec.translation(1), 1, seed=0)[0]
        candidates, answer = make_candidates(problem, 11)
        assert candidates[answer] == problem.d
        assert sorted(candidates) == sorted((problem.d, *problem.foils))
        assert make_candidates(problem, 11) == (candidates, answer)

    def test_answer_positions_spread(self):
        """Test the answer lands in every slot across many shuffles."""
        problem = sample_problems(RegimeSpec.translation(1), 1, seed=0)[0]
        rng = np.random.default_rng(0)
        positions = {make_candidates(problem, rng)[1] for _ in range(200)}
        assert positions == set(range(7))


class TestRendering:
    """Tests for object rendering."""

    def test_smallest_square(self):
        """Test a width-3 square at full brightness covers 9 pixels."""
        image = render_object(ObjectSpec(41, 0, 0, 0))
        assert image.shape == (128, 128, 3)
        green = image[:, :, 1]
        assert int((green == 1.0).sum()) == 9
        assert np.all(green[42:45, 42:45] == 1.0)
        assert np.all(image[42:45, 42:45, 0] == 0.0)
        assert np.all(image[0, 0] == 0.5)

    def test_downsampled_mean(self):
        """Test reduced renders block-average the full image."""
        spec = ObjectSpec(20, 10, 5, 30)
        full = render_object(spec)
        small = render_object(spec, 32)
        assert small.shape == (32, 32, 3)
        assert small.mean() == pytest.approx(full.mean(), rel=1e-5)

    def test_bad_size(self):
        """Test sizes must divide 128."""
        with pytest.raises(DatasetError):
            render_object(ObjectSpec(0, 0, 0, 0), 48)

    def test_image_bank(self):
        """Test the bank renders channel-first and memoizes."""
        bank = ImageBank(16)
        spec = ObjectSpec(1, 2, 3, 4)
        image = bank.get(spec)
        assert image.shape == (3, 16, 16)
        assert bank.get(spec) is image
        assert len(bank) == 1
        assert not image.flags.writeable

    def test_problem_images(self):
        """Test problem images stack A, B, C and seven candidates."""
        problem = sample_problems(RegimeSpec.translation(1), 1, seed=0)[0]
        candidates, _ = make_candidates(problem, 0)
        assert problem_images(problem, candidates, ImageBank(16)).shape == (10, 3, 16, 16)

    def test_png_strip(self, tmp_path):
        """Test the exported strip holds ten tiles side by side."""
        problem = sample_problems(RegimeSpec.translation(1), 1, seed=0)[0]
        candidates, _ = make_candidates(problem, 0)
        path = export_problem_png(problem, candidates, tmp_path / "p.png", image_size=32)
        with Image.open(path) as image:
            assert image.size == (320, 32)
