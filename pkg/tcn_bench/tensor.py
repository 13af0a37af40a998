"""Define-by-run tensors with reverse-mode differentiation.

Every differentiable operation is a `Function` subclass with a `forward` on
raw numpy arrays and a `backward` mapping the output gradient to one gradient
per input. `Function.apply` records the operation on the output tensor, so
the tape is rebuilt on every forward pass. `Tensor.backward` walks the tape
once in reverse topological order and accumulates gradients into leaves.
"""

import contextlib
import contextvars
import itertools
from collections.abc import Iterator, Sequence
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, DTypeLike, NDArray

from .exceptions import ShapeError

__all__ = [
    "Function",
    "Tensor",
    "as_tensor",
    "concatenate",
    "default_dtype",
    "is_grad_enabled",
    "no_grad",
    "precision",
    "stack",
    "unbroadcast",
]

Array = NDArray[Any]
Index = Any

_DEFAULT_DTYPE: contextvars.ContextVar[np.dtype[Any]] = contextvars.ContextVar(
    "tcn_bench_default_dtype", default=np.dtype(np.float32)
)
_GRAD_ENABLED: contextvars.ContextVar[bool] = contextvars.ContextVar(
    "tcn_bench_grad_enabled", default=True
)
_node_ids = itertools.count()


def default_dtype() -> np.dtype[Any]:
    """Floating dtype new tensors are created with."""
    return _DEFAULT_DTYPE.get()


@contextlib.contextmanager
def precision(dtype: DTypeLike) -> Iterator[None]:
    """Create tensors with the given floating dtype inside the block."""
    token = _DEFAULT_DTYPE.set(np.dtype(dtype))
    try:
        yield
    finally:
        _DEFAULT_DTYPE.reset(token)


def is_grad_enabled() -> bool:
    """Whether operations currently record onto the tape."""
    return _GRAD_ENABLED.get()


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate without recording a tape."""
    token = _GRAD_ENABLED.set(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.reset(token)


def unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Sum a broadcast gradient back down to `shape`."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Function:
    """Base class for differentiable operations."""

    def __init__(self, *inputs: "Tensor"):
        self.inputs = inputs

    def forward(self, *arrays: Array, **kwargs: Any) -> Array:
        raise NotImplementedError("Forward pass not implemented for this function")

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        raise NotImplementedError("Backward pass not implemented for this function")

    @classmethod
    def apply(cls, *inputs: "Tensor", **kwargs: Any) -> "Tensor":
        """Run the forward pass and record it on the output tensor."""
        func = cls(*inputs)
        out = func.forward(*(t.data for t in inputs), **kwargs)
        requires_grad = is_grad_enabled() and any(t.requires_grad for t in inputs)
        return Tensor(
            out, requires_grad=requires_grad, creator=func if requires_grad else None
        )


class Tensor:
    """Dense array with an optional gradient buffer and tape handle."""

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        creator: Function | None = None,
    ):
        self.data: Array = np.asarray(data, dtype=default_dtype())
        self.grad: Array | None = None
        self.requires_grad = requires_grad
        self.creator = creator
        self.tape_id: int | None = next(_node_ids) if creator is not None else None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype[Any]:
        return self.data.dtype

    def numpy(self) -> Array:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, grad: ArrayLike | None = None) -> None:
        """Accumulate d(self)/d(leaf) into every leaf that requires a gradient."""
        if grad is None:
            if self.size != 1:
                raise ShapeError(
                    "backward() without a gradient needs a scalar output",
                    expected=(),
                    actual=self.shape,
                )
            seed = np.ones_like(self.data)
        else:
            seed = np.asarray(grad, dtype=self.data.dtype)
            if seed.shape != self.data.shape:
                raise ShapeError(
                    "Gradient shape does not match tensor",
                    expected=self.shape,
                    actual=seed.shape,
                )

        order = self._topological_order()
        grads: dict[int, Array] = {id(self): seed}
        for node in reversed(order):
            node_grad = grads.pop(id(node), None)
            if node_grad is None:
                continue
            if node.creator is None:
                if node.requires_grad:
                    node.grad = node_grad if node.grad is None else node.grad + node_grad
                continue
            input_grads = node.creator.backward(node_grad)
            for inp, inp_grad in zip(node.creator.inputs, input_grads):
                if inp_grad is None or not inp.requires_grad:
                    continue
                key = id(inp)
                if key in grads:
                    grads[key] = grads[key] + inp_grad
                else:
                    grads[key] = inp_grad

    def _topological_order(self) -> list["Tensor"]:
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, children_done = stack.pop()
            if children_done:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            if node.creator is not None:
                for inp in reversed(node.creator.inputs):
                    if inp.requires_grad and id(inp) not in visited:
                        stack.append((inp, False))
        return order

    # Arithmetic

    def __add__(self, other: "Tensor | ArrayLike") -> "Tensor":
        return Add.apply(self, as_tensor(other))

    def __radd__(self, other: "Tensor | ArrayLike") -> "Tensor":
        return Add.apply(as_tensor(other), self)

    def __sub__(self, other: "Tensor | ArrayLike") -> "Tensor":
        return Sub.apply(self, as_tensor(other))

    def __rsub__(self, other: "Tensor | ArrayLike") -> "Tensor":
        return Sub.apply(as_tensor(other), self)

    def __mul__(self, other: "Tensor | ArrayLike") -> "Tensor":
        return Mul.apply(self, as_tensor(other))

    def __rmul__(self, other: "Tensor | ArrayLike") -> "Tensor":
        return Mul.apply(as_tensor(other), self)

    def __truediv__(self, other: "Tensor | ArrayLike") -> "Tensor":
        return Div.apply(self, as_tensor(other))

    def __rtruediv__(self, other: "Tensor | ArrayLike") -> "Tensor":
        return Div.apply(as_tensor(other), self)

    def __neg__(self) -> "Tensor":
        return Neg.apply(self)

    def __pow__(self, exponent: float) -> "Tensor":
        return Pow.apply(self, exponent=float(exponent))

    def __matmul__(self, other: "Tensor | ArrayLike") -> "Tensor":
        return MatMul.apply(self, as_tensor(other))

    def __getitem__(self, index: Index) -> "Tensor":
        return GetItem.apply(self, index=index)

    # Reductions and shape

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> "Tensor":
        return Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> "Tensor":
        return Mean.apply(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Reshape.apply(self, shape=shape)

    def transpose(self, *axes: int) -> "Tensor":
        return Transpose.apply(self, axes=axes if axes else None)

    # Elementwise

    def exp(self) -> "Tensor":
        return Exp.apply(self)

    def log(self) -> "Tensor":
        return Log.apply(self)

    def sqrt(self) -> "Tensor":
        return Sqrt.apply(self)

    def relu(self) -> "Tensor":
        return Relu.apply(self)

    def sigmoid(self) -> "Tensor":
        return Sigmoid.apply(self)

    def tanh(self) -> "Tensor":
        return Tanh.apply(self)


def as_tensor(value: "Tensor | ArrayLike") -> Tensor:
    """Wrap constants as non-differentiable tensors."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=False)


def concatenate(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Join tensors along an existing axis."""
    if not tensors:
        raise ShapeError("concatenate needs at least one tensor")
    return Concat.apply(*tensors, axis=axis)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Join tensors along a new axis."""
    if not tensors:
        raise ShapeError("stack needs at least one tensor")
    return Stack.apply(*tensors, axis=axis)


class Add(Function):
    def forward(self, a: Array, b: Array, **kwargs: Any) -> Array:
        self.shapes = (a.shape, b.shape)
        return a + b

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return unbroadcast(grad, self.shapes[0]), unbroadcast(grad, self.shapes[1])


class Sub(Function):
    def forward(self, a: Array, b: Array, **kwargs: Any) -> Array:
        self.shapes = (a.shape, b.shape)
        return a - b

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return unbroadcast(grad, self.shapes[0]), unbroadcast(-grad, self.shapes[1])


class Mul(Function):
    def forward(self, a: Array, b: Array, **kwargs: Any) -> Array:
        self.a, self.b = a, b
        return a * b

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return (
            unbroadcast(grad * self.b, self.a.shape),
            unbroadcast(grad * self.a, self.b.shape),
        )


class Div(Function):
    def forward(self, a: Array, b: Array, **kwargs: Any) -> Array:
        self.a, self.b = a, b
        return a / b

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return (
            unbroadcast(grad / self.b, self.a.shape),
            unbroadcast(-grad * self.a / (self.b * self.b), self.b.shape),
        )


class Neg(Function):
    def forward(self, a: Array, **kwargs: Any) -> Array:
        return -a

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return (-grad,)


class Pow(Function):
    def forward(self, a: Array, exponent: float = 1.0, **kwargs: Any) -> Array:
        self.a, self.exponent = a, exponent
        return a**exponent

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return (grad * self.exponent * self.a ** (self.exponent - 1.0),)


class MatMul(Function):
    def forward(self, a: Array, b: Array, **kwargs: Any) -> Array:
        if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
            raise ShapeError("matmul operands are incompatible", a.shape, b.shape)
        self.a, self.b = a, b
        return np.matmul(a, b)

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        grad_a = np.matmul(grad, np.swapaxes(self.b, -1, -2))
        grad_b = np.matmul(np.swapaxes(self.a, -1, -2), grad)
        return unbroadcast(grad_a, self.a.shape), unbroadcast(grad_b, self.b.shape)


def _normalize_axes(axis: int | tuple[int, ...] | None, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


class Sum(Function):
    def forward(
        self,
        a: Array,
        axis: int | tuple[int, ...] | None = None,
        keepdims: bool = False,
        **kwargs: Any,
    ) -> Array:
        self.in_shape = a.shape
        self.axes = _normalize_axes(axis, a.ndim)
        self.keepdims = keepdims
        return np.asarray(a.sum(axis=self.axes, keepdims=keepdims))

    def _expand(self, grad: Array) -> Array:
        if not self.keepdims:
            grad = np.expand_dims(grad, self.axes)
        return np.broadcast_to(grad, self.in_shape).copy()

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return (self._expand(grad),)


class Mean(Sum):
    def forward(
        self,
        a: Array,
        axis: int | tuple[int, ...] | None = None,
        keepdims: bool = False,
        **kwargs: Any,
    ) -> Array:
        out = super().forward(a, axis=axis, keepdims=keepdims)
        self.count = int(np.prod([a.shape[i] for i in self.axes])) if a.ndim else 1
        return out / self.count

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return (self._expand(grad) / self.count,)


class Reshape(Function):
    def forward(self, a: Array, shape: tuple[int, ...] = (), **kwargs: Any) -> Array:
        self.in_shape = a.shape
        try:
            return a.reshape(shape)
        except ValueError as e:
            raise ShapeError(f"Cannot reshape: {e}", expected=shape, actual=a.shape) from e

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return (grad.reshape(self.in_shape),)


class Transpose(Function):
    def forward(self, a: Array, axes: tuple[int, ...] | None = None, **kwargs: Any) -> Array:
        self.axes = axes if axes is not None else tuple(reversed(range(a.ndim)))
        return np.transpose(a, self.axes)

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return (np.transpose(grad, np.argsort(self.axes)),)


def _is_basic_index(index: Index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return all(
        isinstance(i, (int, slice, type(None))) or i is Ellipsis for i in items
    )


class GetItem(Function):
    def forward(self, a: Array, index: Index = None, **kwargs: Any) -> Array:
        self.in_shape, self.dtype, self.index = a.shape, a.dtype, index
        return np.array(a[index])

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        out = np.zeros(self.in_shape, dtype=grad.dtype)
        if _is_basic_index(self.index):
            out[self.index] += grad
        else:
            np.add.at(out, self.index, grad)
        return (out,)


class Concat(Function):
    def forward(self, *arrays: Array, axis: int = 0, **kwargs: Any) -> Array:
        self.axis = axis
        self.splits = np.cumsum([a.shape[axis] for a in arrays])[:-1]
        try:
            return np.concatenate(arrays, axis=axis)
        except ValueError as e:
            raise ShapeError(f"Cannot concatenate: {e}") from e

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return tuple(np.split(grad, self.splits, axis=self.axis))


class Stack(Function):
    def forward(self, *arrays: Array, axis: int = 0, **kwargs: Any) -> Array:
        self.axis = axis
        try:
            return np.stack(arrays, axis=axis)
        except ValueError as e:
            raise ShapeError(f"Cannot stack: {e}") from e

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return tuple(
            np.take(grad, i, axis=self.axis) for i in range(grad.shape[self.axis])
        )


class Exp(Function):
    def forward(self, a: Array, **kwargs: Any) -> Array:
        self.out = np.exp(a)
        return self.out

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return (grad * self.out,)


class Log(Function):
    def forward(self, a: Array, **kwargs: Any) -> Array:
        self.a = a
        return np.log(a)

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return (grad / self.a,)


class Sqrt(Function):
    def forward(self, a: Array, **kwargs: Any) -> Array:
        self.out = np.sqrt(a)
        return self.out

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return (grad * 0.5 / self.out,)


class Relu(Function):
    def forward(self, a: Array, **kwargs: Any) -> Array:
        self.mask = a > 0
        return a * self.mask

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return (grad * self.mask,)


class Sigmoid(Function):
    def forward(self, a: Array, **kwargs: Any) -> Array:
        # tanh form never overflows
        self.out = 0.5 * (1.0 + np.tanh(0.5 * a))
        return self.out

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return (grad * self.out * (1.0 - self.out),)


class Tanh(Function):
    def forward(self, a: Array, **kwargs: Any) -> Array:
        self.out = np.tanh(a)
        return self.out

    def backward(self, grad: Array) -> tuple[Array | None, ...]:
        return (grad * (1.0 - self.out * self.out),)
