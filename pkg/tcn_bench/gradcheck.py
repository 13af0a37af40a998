"""Central finite-difference gradient checks."""

from collections.abc import Callable, Sequence
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .exceptions import ConfigurationError
from .tensor import Tensor

__all__ = ["numerical_gradient", "relative_error", "check_gradients"]


def numerical_gradient(
    fn: Callable[[], Tensor], tensor: Tensor, step: float = 1e-6
) -> NDArray[Any]:
    """Central differences of a scalar function with respect to one tensor."""
    grad = np.zeros_like(tensor.data)
    original = tensor.data
    flat = original.reshape(-1)
    for idx in range(flat.size):
        shifted = flat.copy()
        shifted[idx] = flat[idx] + step
        tensor.data = shifted.reshape(original.shape)
        plus = fn().item()
        shifted[idx] = flat[idx] - step
        tensor.data = shifted.reshape(original.shape)
        minus = fn().item()
        grad.reshape(-1)[idx] = (plus - minus) / (2.0 * step)
    tensor.data = original
    return grad


def relative_error(analytic: NDArray[Any], numeric: NDArray[Any]) -> float:
    """Norm-relative difference; tiny gradients are compared against a floor of 1e-3."""
    scale = max(float(np.linalg.norm(analytic) + np.linalg.norm(numeric)), 1e-3)
    return float(np.linalg.norm(analytic - numeric)) / scale


def check_gradients(
    fn: Callable[[], Tensor], inputs: Sequence[Tensor], step: float = 1e-6
) -> float:
    """Largest relative error between tape and finite-difference gradients.

    `fn` recomputes the scalar loss from the current values of `inputs`, which
    must be 64-bit tensors that require gradients.
    """
    for t in inputs:
        if t.dtype != np.float64:
            raise ConfigurationError("Gradient checks need float64 tensors; use precision(np.float64)")
        if not t.requires_grad:
            raise ConfigurationError("Gradient checks need tensors that require grad")
        t.zero_grad()

    fn().backward()
    worst = 0.0
    for t in inputs:
        analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
        worst = max(worst, relative_error(analytic, numerical_gradient(fn, t, step)))
    return worst
