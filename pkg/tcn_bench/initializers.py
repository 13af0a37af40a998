"""Parameter initialization schemes."""

import math

import numpy as np

from .exceptions import ConfigurationError
from .tensor import Tensor

__all__ = ["INIT_SCHEMES", "fans", "init_params"]

INIT_SCHEMES = ("xavier_uniform", "uniform_inv_sqrt_n", "zeros", "ones")


def fans(shape: tuple[int, ...]) -> tuple[int, int]:
    """Fan-in and fan-out implied by a weight shape.

    Dense weights are stored (in, out); convolution weights (out, in, K, K).
    """
    if len(shape) == 1:
        return shape[0], shape[0]
    if len(shape) == 2:
        return shape[0], shape[1]
    receptive = int(np.prod(shape[2:]))
    return shape[1] * receptive, shape[0] * receptive


def init_params(
    shape: tuple[int, ...],
    scheme: str,
    rng: np.random.Generator,
    fan_in: int | None = None,
    fan_out: int | None = None,
) -> Tensor:
    """Draw a trainable tensor from the named scheme."""
    if scheme not in INIT_SCHEMES:
        raise ConfigurationError(
            f"Unknown init scheme '{scheme}' (expected one of {', '.join(INIT_SCHEMES)})",
            config_key="model.init",
        )

    if scheme == "zeros":
        return Tensor(np.zeros(shape), requires_grad=True)
    if scheme == "ones":
        return Tensor(np.ones(shape), requires_grad=True)

    default_in, default_out = fans(shape)
    fan_in = fan_in if fan_in is not None else default_in
    fan_out = fan_out if fan_out is not None else default_out

    if scheme == "xavier_uniform":
        bound = math.sqrt(6.0 / (fan_in + fan_out))
    else:
        bound = 1.0 / math.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)
