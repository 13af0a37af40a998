"""Parameter containers for the model building blocks.

Each layer owns its tensors under stable names; nested layers contribute
dotted names (`encoder.conv0.weight`) in construction order. That order is
the checkpoint order and the optimizer order.
"""

from collections.abc import Iterator
from typing import Any, TypeVar

import numpy as np
from numpy.typing import NDArray

from . import functional as F
from .constants import CONV_KERNEL, CONV_PADDING, CONV_STRIDE
from .exceptions import CheckpointError
from .initializers import init_params
from .tensor import Tensor

__all__ = [
    "InitScheme",
    "Layer",
    "Linear",
    "Conv2d",
    "ConvTranspose2d",
    "LSTMCell",
]

L = TypeVar("L", bound="Layer")


class InitScheme:
    """Weight and bias schemes shared by every layer of a model."""

    def __init__(self, weight: str = "xavier_uniform", bias: str = "zeros"):
        self.weight = weight
        self.bias = bias

    def __repr__(self) -> str:
        return f"InitScheme(weight={self.weight!r}, bias={self.bias!r})"


class Layer:
    """Base container with ordered named parameters and sub-layers."""

    def __init__(self) -> None:
        self._params: dict[str, Tensor] = {}
        self._children: dict[str, Layer] = {}

    def add_parameter(self, name: str, tensor: Tensor) -> Tensor:
        self._params[name] = tensor
        return tensor

    def add_child(self, name: str, layer: L) -> L:
        self._children[name] = layer
        return layer

    def named_parameters(self, prefix: str = "") -> dict[str, Tensor]:
        named = {f"{prefix}{name}": t for name, t in self._params.items()}
        for child_name, child in self._children.items():
            named.update(child.named_parameters(f"{prefix}{child_name}."))
        return named

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    def children(self) -> Iterator["Layer"]:
        return iter(self._children.values())

    def num_parameters(self) -> int:
        return sum(t.size for t in self.parameters())

    def zero_grad(self) -> None:
        for t in self.parameters():
            t.zero_grad()

    def state(self) -> dict[str, NDArray[Any]]:
        """Copy of every parameter array, keyed by dotted name."""
        return {name: t.data.copy() for name, t in self.named_parameters().items()}

    def load_state(self, state: dict[str, NDArray[Any]]) -> None:
        """Replace parameter values from a name-to-array mapping."""
        for name, t in self.named_parameters().items():
            if name not in state:
                raise CheckpointError(f"Missing parameter '{name}'")
            value = np.asarray(state[name], dtype=t.data.dtype)
            if value.shape != t.data.shape:
                raise CheckpointError(
                    f"Parameter '{name}' has shape {value.shape}, expected {t.data.shape}"
                )
            t.data = value.copy()


def _bias(size: int, fan_in: int, scheme: InitScheme, rng: np.random.Generator) -> Tensor:
    return init_params((size,), scheme.bias, rng, fan_in=fan_in)


class Linear(Layer):
    def __init__(
        self, in_features: int, out_features: int, scheme: InitScheme, rng: np.random.Generator
    ):
        super().__init__()
        self.in_features, self.out_features = in_features, out_features
        self.weight = self.add_parameter(
            "weight", init_params((in_features, out_features), scheme.weight, rng)
        )
        self.bias = self.add_parameter("bias", _bias(out_features, in_features, scheme, rng))

    def __call__(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight, self.bias)


class Conv2d(Layer):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        scheme: InitScheme,
        rng: np.random.Generator,
        kernel: int = CONV_KERNEL,
        stride: int = CONV_STRIDE,
        padding: int = CONV_PADDING,
    ):
        super().__init__()
        self.stride, self.padding = stride, padding
        self.weight = self.add_parameter(
            "weight",
            init_params((out_channels, in_channels, kernel, kernel), scheme.weight, rng),
        )
        self.bias = self.add_parameter(
            "bias", _bias(out_channels, in_channels * kernel * kernel, scheme, rng)
        )

    def __call__(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class ConvTranspose2d(Layer):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        scheme: InitScheme,
        rng: np.random.Generator,
        kernel: int = CONV_KERNEL,
        stride: int = CONV_STRIDE,
        padding: int = CONV_PADDING,
    ):
        super().__init__()
        self.stride, self.padding = stride, padding
        receptive = kernel * kernel
        self.weight = self.add_parameter(
            "weight",
            init_params(
                (in_channels, out_channels, kernel, kernel),
                scheme.weight,
                rng,
                fan_in=in_channels * receptive,
                fan_out=out_channels * receptive,
            ),
        )
        self.bias = self.add_parameter(
            "bias", _bias(out_channels, in_channels * receptive, scheme, rng)
        )

    def __call__(self, y: Tensor) -> Tensor:
        return F.conv_transpose2d(
            y, self.weight, self.bias, stride=self.stride, padding=self.padding
        )


class LSTMCell(Layer):
    """LSTM cell; optionally layer-normalizes the emitted hidden state."""

    def __init__(
        self,
        input_size: int,
        hidden_size: int,
        scheme: InitScheme,
        rng: np.random.Generator,
        layer_norm: bool = False,
    ):
        super().__init__()
        self.hidden_size = hidden_size
        gates = 4 * hidden_size
        # uniform_inv_sqrt_n bounds every LSTM tensor by 1/sqrt(hidden)
        self.w_x = self.add_parameter(
            "w_x", init_params((input_size, gates), scheme.weight, rng, fan_in=self._fan(input_size, scheme))
        )
        self.w_h = self.add_parameter(
            "w_h", init_params((hidden_size, gates), scheme.weight, rng, fan_in=self._fan(hidden_size, scheme))
        )
        self.bias = self.add_parameter("bias", _bias(gates, hidden_size, scheme, rng))
        self.ln_gamma: Tensor | None = None
        self.ln_beta: Tensor | None = None
        if layer_norm:
            self.ln_gamma = self.add_parameter("ln_gamma", init_params((hidden_size,), "ones", rng))
            self.ln_beta = self.add_parameter("ln_beta", init_params((hidden_size,), "zeros", rng))

    def _fan(self, rows: int, scheme: InitScheme) -> int:
        return self.hidden_size if scheme.weight == "uniform_inv_sqrt_n" else rows

    def initial_state(self, batch: int) -> tuple[Tensor, Tensor]:
        zeros = np.zeros((batch, self.hidden_size))
        return Tensor(zeros), Tensor(zeros)

    def __call__(self, x: Tensor, state: tuple[Tensor, Tensor]) -> tuple[Tensor, Tensor]:
        return F.lstm_step(
            x, state, self.w_x, self.w_h, self.bias, self.ln_gamma, self.ln_beta
        )
