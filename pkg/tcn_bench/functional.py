"""Neural-network kernels built on the tensor engine.

Convolutions loop over kernel taps and contract each tap with one
`tensordot`, so every reduction runs in a fixed order regardless of batch
size. Losses subtract the row maximum before exponentiating.
"""

from typing import Any

import numpy as np

from .exceptions import ConfigurationError, InvalidTargetError, ShapeError
from .tensor import Array, Function, Tensor, as_tensor

__all__ = [
    "conv2d",
    "conv_transpose2d",
    "conv_output_size",
    "conv_transpose_output_size",
    "linear",
    "relu",
    "sigmoid",
    "tanh",
    "softmax",
    "log_softmax",
    "softmax_cross_entropy",
    "mse_loss",
    "flatten",
    "dropout",
    "layer_norm",
    "lstm_step",
]


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    """Spatial size after a convolution."""
    return (size + 2 * padding - kernel) // stride + 1


def conv_transpose_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    """Spatial size after a transposed convolution."""
    return (size - 1) * stride - 2 * padding + kernel


def _tap(offset: int, stride: int, count: int) -> slice:
    return slice(offset, offset + stride * (count - 1) + 1, stride)


def _check_conv_shapes(
    x: Tensor, weight: Tensor, bias: Tensor | None, in_axis: int, out_axis: int
) -> None:
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeError("convolution expects 4-D input and weight", weight.shape, x.shape)
    if weight.shape[2] != weight.shape[3]:
        raise ShapeError("convolution kernels must be square", weight.shape, x.shape)
    if x.shape[1] != weight.shape[in_axis]:
        raise ShapeError("input channels do not match weight", weight.shape, x.shape)
    if bias is not None and bias.shape != (weight.shape[out_axis],):
        raise ShapeError("bias does not match output channels", weight.shape, bias.shape)


class Conv2d(Function):
    def forward(
        self, x: Array, weight: Array, bias: Array, stride: int = 1, padding: int = 0, **kwargs: Any
    ) -> Array:
        n, _, h, w = x.shape
        out_ch, _, k, _ = weight.shape
        oh = conv_output_size(h, k, stride, padding)
        ow = conv_output_size(w, k, stride, padding)
        if oh < 1 or ow < 1:
            raise ShapeError("kernel larger than padded input", weight.shape, x.shape)
        self.stride, self.padding, self.out_hw = stride, padding, (oh, ow)
        self.x_shape = x.shape
        self.xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
        self.weight = weight
        out = np.zeros((n, oh, ow, out_ch), dtype=x.dtype)
        for i in range(k):
            for j in range(k):
                patch = self.xp[:, :, _tap(i, stride, oh), _tap(j, stride, ow)]
                out += np.tensordot(patch, weight[:, :, i, j], axes=([1], [1]))
        return out.transpose(0, 3, 1, 2) + bias.reshape(1, -1, 1, 1)

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        k = self.weight.shape[2]
        oh, ow = self.out_hw
        s, p = self.stride, self.padding
        grad_t = grad.transpose(0, 2, 3, 1)
        grad_w = np.zeros_like(self.weight)
        grad_xp = np.zeros_like(self.xp)
        for i in range(k):
            for j in range(k):
                rows, cols = _tap(i, s, oh), _tap(j, s, ow)
                patch = self.xp[:, :, rows, cols]
                grad_w[:, :, i, j] = np.tensordot(grad_t, patch, axes=([0, 1, 2], [0, 2, 3]))
                grad_xp[:, :, rows, cols] += np.tensordot(
                    grad_t, self.weight[:, :, i, j], axes=([3], [0])
                ).transpose(0, 3, 1, 2)
        h, w = self.x_shape[2], self.x_shape[3]
        grad_x = grad_xp[:, :, p : p + h, p : p + w]
        return grad_x, grad_w, grad.sum(axis=(0, 2, 3))


class ConvTranspose2d(Function):
    def forward(
        self, y: Array, weight: Array, bias: Array, stride: int = 1, padding: int = 0, **kwargs: Any
    ) -> Array:
        n, _, h, w = y.shape
        _, out_ch, k, _ = weight.shape
        oh = conv_transpose_output_size(h, k, stride, padding)
        ow = conv_transpose_output_size(w, k, stride, padding)
        if oh < 1 or ow < 1:
            raise ShapeError("padding larger than transposed output", weight.shape, y.shape)
        self.stride, self.padding, self.in_hw = stride, padding, (h, w)
        self.y, self.weight = y, weight
        y_t = y.transpose(0, 2, 3, 1)
        out = np.zeros((n, out_ch, oh + 2 * padding, ow + 2 * padding), dtype=y.dtype)
        for i in range(k):
            for j in range(k):
                out[:, :, _tap(i, stride, h), _tap(j, stride, w)] += np.tensordot(
                    y_t, weight[:, :, i, j], axes=([3], [0])
                ).transpose(0, 3, 1, 2)
        out = out[:, :, padding : padding + oh, padding : padding + ow]
        return out + bias.reshape(1, -1, 1, 1)

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        k = self.weight.shape[2]
        h, w = self.in_hw
        s, p = self.stride, self.padding
        grad_p = np.pad(grad, ((0, 0), (0, 0), (p, p), (p, p)))
        y_t = self.y.transpose(0, 2, 3, 1)
        grad_y = np.zeros(y_t.shape, dtype=grad.dtype)
        grad_w = np.zeros_like(self.weight)
        for i in range(k):
            for j in range(k):
                patch = grad_p[:, :, _tap(i, s, h), _tap(j, s, w)]
                grad_y += np.tensordot(patch, self.weight[:, :, i, j], axes=([1], [1]))
                grad_w[:, :, i, j] = np.tensordot(y_t, patch, axes=([0, 1, 2], [0, 2, 3]))
        return grad_y.transpose(0, 3, 1, 2), grad_w, grad.sum(axis=(0, 2, 3))


def conv2d(
    x: Tensor, weight: Tensor, bias: Tensor | None = None, stride: int = 1, padding: int = 0
) -> Tensor:
    """Cross-correlate NCHW input with OIKK weights."""
    _check_conv_shapes(x, weight, bias, in_axis=1, out_axis=0)
    if bias is None:
        bias = Tensor(np.zeros(weight.shape[0]))
    return Conv2d.apply(x, weight, bias, stride=stride, padding=padding)


def conv_transpose2d(
    y: Tensor, weight: Tensor, bias: Tensor | None = None, stride: int = 1, padding: int = 0
) -> Tensor:
    """Adjoint of `conv2d` for the same weight layout (in, out, K, K)."""
    _check_conv_shapes(y, weight, bias, in_axis=0, out_axis=1)
    if bias is None:
        bias = Tensor(np.zeros(weight.shape[1]))
    return ConvTranspose2d.apply(y, weight, bias, stride=stride, padding=padding)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """Affine map with weight stored as (in, out)."""
    if x.shape[-1] != weight.shape[0]:
        raise ShapeError("linear input width does not match weight", weight.shape, x.shape)
    out = x @ weight
    return out + bias if bias is not None else out


def relu(x: Tensor) -> Tensor:
    return x.relu()


def sigmoid(x: Tensor) -> Tensor:
    return x.sigmoid()


def tanh(x: Tensor) -> Tensor:
    return x.tanh()


def flatten(x: Tensor) -> Tensor:
    """Collapse all but the leading axis."""
    return x.reshape(x.shape[0], -1)


class Softmax(Function):
    def forward(self, x: Array, axis: int = -1, **kwargs: Any) -> Array:
        e = np.exp(x - x.max(axis=axis, keepdims=True))
        self.axis = axis
        self.out = e / e.sum(axis=axis, keepdims=True)
        return self.out

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        inner = (grad * self.out).sum(axis=self.axis, keepdims=True)
        return (self.out * (grad - inner),)


class LogSoftmax(Function):
    def forward(self, x: Array, axis: int = -1, **kwargs: Any) -> Array:
        shifted = x - x.max(axis=axis, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
        self.axis = axis
        self.probs = np.exp(shifted - log_norm)
        return shifted - log_norm

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return (grad - self.probs * grad.sum(axis=self.axis, keepdims=True),)


class SoftmaxCrossEntropy(Function):
    def forward(self, logits: Array, targets: Array | None = None, **kwargs: Any) -> Array:
        assert targets is not None
        n = logits.shape[0]
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        self.probs = np.exp(log_probs)
        self.targets = targets
        return np.asarray(-log_probs[np.arange(n), targets].mean())

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        n = self.probs.shape[0]
        delta = self.probs.copy()
        delta[np.arange(n), self.targets] -= 1.0
        return (delta * (grad / n),)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    return Softmax.apply(x, axis=axis)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    return LogSoftmax.apply(x, axis=axis)


def softmax_cross_entropy(logits: Tensor, targets: Any) -> Tensor:
    """Mean negative log-likelihood of integer targets under row softmax."""
    target_array = np.asarray(targets, dtype=np.int64).reshape(-1)
    if logits.ndim != 2 or target_array.shape[0] != logits.shape[0]:
        raise ShapeError(
            "logits must be N x C with one target per row",
            expected=(target_array.shape[0], -1),
            actual=logits.shape,
        )
    num_classes = logits.shape[1]
    bad = (target_array < 0) | (target_array >= num_classes)
    if bad.any():
        raise InvalidTargetError(
            f"Target index {int(target_array[bad][0])} out of range for {num_classes} classes"
        )
    return SoftmaxCrossEntropy.apply(logits, targets=target_array)


def mse_loss(prediction: Tensor, target: Tensor | Array) -> Tensor:
    """Mean squared error over every element."""
    target_t = as_tensor(target)
    if prediction.shape != target_t.shape:
        raise ShapeError("mse operands differ in shape", target_t.shape, prediction.shape)
    diff = prediction - target_t
    return (diff * diff).mean()


def dropout(
    x: Tensor, rate: float, rng: np.random.Generator | None, training: bool
) -> Tensor:
    """Inverted dropout; identity outside training."""
    if not training or rate <= 0.0:
        return x
    if rng is None:
        raise ConfigurationError("dropout during training needs a random generator")
    keep = rng.random(x.shape) >= rate
    return x * Tensor(keep / (1.0 - rate))


def layer_norm(
    x: Tensor,
    gamma: Tensor | None = None,
    beta: Tensor | None = None,
    eps: float = 1e-8,
) -> Tensor:
    """Normalize each vector over its last axis."""
    mean = x.mean(axis=-1, keepdims=True)
    centered = x - mean
    var = (centered * centered).mean(axis=-1, keepdims=True)
    out = centered / (var + eps).sqrt()
    if gamma is not None:
        out = out * gamma
    if beta is not None:
        out = out + beta
    return out


def lstm_step(
    x: Tensor,
    state: tuple[Tensor, Tensor],
    w_x: Tensor,
    w_h: Tensor,
    bias: Tensor,
    ln_gamma: Tensor | None = None,
    ln_beta: Tensor | None = None,
) -> tuple[Tensor, Tensor]:
    """One LSTM cell update with gates ordered input, forget, candidate, output."""
    h, c = state
    hidden = h.shape[-1]
    if w_x.shape != (x.shape[-1], 4 * hidden) or w_h.shape != (hidden, 4 * hidden):
        raise ShapeError(
            "LSTM weights do not match input and hidden sizes",
            expected=(x.shape[-1], 4 * hidden),
            actual=w_x.shape,
        )
    gates = x @ w_x + h @ w_h + bias
    i = gates[..., 0:hidden].sigmoid()
    f = gates[..., hidden : 2 * hidden].sigmoid()
    g = gates[..., 2 * hidden : 3 * hidden].tanh()
    o = gates[..., 3 * hidden : 4 * hidden].sigmoid()
    c_next = f * c + i * g
    h_next = o * c_next.tanh()
    if ln_gamma is not None:
        h_next = layer_norm(h_next, ln_gamma, ln_beta)
    return h_next, c_next
