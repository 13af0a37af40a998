"""Tests for optim module."""

import numpy as np
import pytest

from tcn_bench.exceptions import ShapeError
from tcn_bench.optim import Adam, OptimState, adam_update
from tcn_bench.tensor import Tensor, precision


class TestAdamUpdate:
    """Tests for adam_update function."""

    def test_first_step_moves_by_learning_rate(self):
        """Test the bias-corrected first step has magnitude lr per element."""
        with precision(np.float64):
            p = Tensor([1.0, -2.0], requires_grad=True)
        state = OptimState(learning_rate=0.1)
        adam_update({"p": p}, {"p": np.array([0.5, -3.0])}, state)
        np.testing.assert_allclose(p.data, [0.9, -1.9], rtol=1e-6)
        assert state.step_count == 1

    def test_missing_gradient_counts_as_zero(self):
        """Test a parameter without gradient still advances its moments."""
        p = Tensor([1.0], requires_grad=True)
        state = OptimState(learning_rate=0.1)
        adam_update({"p": p}, {"p": None}, state)
        np.testing.assert_array_equal(p.data, [1.0])
        assert "p" in state.first_moment

    def test_wrong_gradient_shape(self):
        """Test a misshapen gradient raises ShapeError."""
        p = Tensor([1.0, 2.0], requires_grad=True)
        with pytest.raises(ShapeError):
            adam_update({"p": p}, {"p": np.zeros(3)}, OptimState(learning_rate=0.1))

    def test_replaces_arrays(self):
        """Test parameter arrays are replaced rather than written in place."""
        p = Tensor([1.0], requires_grad=True)
        before = p.data
        adam_update({"p": p}, {"p": np.array([1.0])}, OptimState(learning_rate=0.1))
        assert p.data is not before
        assert before[0] == 1.0


class TestAdam:
    """Tests for Adam class."""

    def test_minimizes_quadratic(self):
        """Test ADAM drives a quadratic toward its minimum."""
        with precision(np.float64):
            x = Tensor([5.0, -3.0], requires_grad=True)
            opt = Adam({"x": x}, learning_rate=0.1)
            for _ in range(500):
                opt.zero_grad()
                ((x - 1.0) * (x - 1.0)).sum().backward()
                opt.step()
        np.testing.assert_allclose(x.data, [1.0, 1.0], atol=5e-2)

    def test_moments_resume_identically(self):
        """Test restoring moments reproduces the next update exactly."""
        def run(steps, restore_from=None):
            with precision(np.float64):
                x = Tensor([2.0], requires_grad=True)
                opt = Adam({"x": x}, learning_rate=0.05)
                if restore_from is not None:
                    x.data = restore_from[0].copy()
                    opt.load_moments(restore_from[1], restore_from[2])
                for _ in range(steps):
                    opt.zero_grad()
                    (x * x * x).sum().backward()
                    opt.step()
            return x.data.copy(), opt.moments(), opt.state.step_count

        straight = run(4)[0]
        data, moments, count = run(2)
        resumed = run(2, (data, moments, count))[0]
        np.testing.assert_array_equal(straight, resumed)

    def test_moment_keys(self):
        """Test checkpoint keys carry the parameter names."""
        x = Tensor([1.0], requires_grad=True)
        opt = Adam({"model.x": x}, learning_rate=0.1)
        assert opt.moments() == {}
        (x * 2.0).sum().backward()
        opt.step()
        assert sorted(opt.moments()) == ["adam.m.model.x", "adam.v.model.x"]
