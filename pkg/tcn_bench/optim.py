"""ADAM optimizer with bias correction."""

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .constants import ADAM_BETA1, ADAM_BETA2, ADAM_EPS
from .exceptions import ShapeError
from .tensor import Tensor

__all__ = ["OptimState", "adam_update", "Adam"]


@dataclass
class OptimState:
    """Per-parameter moment buffers and the shared step counter."""

    learning_rate: float
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps_opt: float = ADAM_EPS
    step_count: int = 0
    first_moment: dict[str, NDArray[Any]] = field(default_factory=dict)
    second_moment: dict[str, NDArray[Any]] = field(default_factory=dict)


def adam_update(
    params: dict[str, Tensor],
    grads: dict[str, NDArray[Any] | None],
    state: OptimState,
) -> tuple[dict[str, Tensor], OptimState]:
    """Apply one bias-corrected ADAM step.

    Parameter arrays are replaced, never written in place. A missing gradient
    counts as zero so the moments of every parameter advance together.
    """
    state.step_count += 1
    t = state.step_count
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t

    for name, param in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(param.data)
        elif grad.shape != param.data.shape:
            raise ShapeError(f"Gradient for '{name}' has wrong shape", param.shape, grad.shape)

        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None or v is None:
            m = np.zeros_like(param.data)
            v = np.zeros_like(param.data)

        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.first_moment[name] = m
        state.second_moment[name] = v

        m_hat = m / correction1
        v_hat = v / correction2
        param.data = param.data - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps_opt)

    return params, state


class Adam:
    """Binds named parameters to an `OptimState`."""

    def __init__(self, params: dict[str, Tensor], learning_rate: float):
        self.params = params
        self.state = OptimState(learning_rate=learning_rate)

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.zero_grad()

    def step(self) -> None:
        grads = {name: p.grad for name, p in self.params.items()}
        adam_update(self.params, grads, self.state)

    def moments(self) -> dict[str, NDArray[Any]]:
        """Moment buffers keyed for checkpoint storage."""
        entries: dict[str, NDArray[Any]] = {}
        for name in self.params:
            if name in self.state.first_moment:
                entries[f"adam.m.{name}"] = self.state.first_moment[name]
                entries[f"adam.v.{name}"] = self.state.second_moment[name]
        return entries

    def load_moments(self, entries: dict[str, NDArray[Any]], step_count: int) -> None:
        for name, param in self.params.items():
            m = entries.get(f"adam.m.{name}")
            v = entries.get(f"adam.v.{name}")
            if m is not None and v is not None:
                self.state.first_moment[name] = m.astype(param.data.dtype)
                self.state.second_moment[name] = v.astype(param.data.dtype)
        self.state.step_count = step_count
