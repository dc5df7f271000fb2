"""
Dense tensors with a recording tape.

Every op builds its output eagerly and, while a tape is active, records the
output together with a rule mapping the output gradient to gradients of the
parents. `backward` replays the tape in reverse without mutating any tensor,
so it can be called repeatedly.
"""
import threading
from contextlib import contextmanager
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from voxfield.exceptions import NonScalarLossError, ShapeMismatchError

BackwardRule = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]

_local = threading.local()


class Tensor:
    """
    An n-dimensional array node.

    :param data: Values; integer input is promoted to float64.
    :param dtype: Optional dtype to cast to.
    :param name: Optional name, used by checkpoints and error messages.
    """

    __slots__ = ('data', 'name', '_parents', '_backward')

    def __init__(self, data, dtype=None, name: str = None, _parents=(), _backward=None):
        data = np.asarray(data, dtype=dtype)
        if not np.issubdtype(data.dtype, np.floating):
            data = data.astype(np.float64)
        self.data = data
        self.name = name
        self._parents: Tuple['Tensor', ...] = tuple(_parents)
        self._backward: Optional[BackwardRule] = _backward

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        """Return True for tensors not produced by an op."""
        return self._backward is None

    def item(self) -> float:
        """Return the value of a one-element tensor."""
        if self.data.size != 1:
            raise ValueError('item() needs one element, shape is {}'.format(self.shape))
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """Return a copy of the values."""
        return self.data.copy()

    def detach(self) -> 'Tensor':
        """Return a leaf sharing the values but cut from the graph."""
        return Tensor(self.data, name=self.name)

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, scale(_lift(other, self), -1.0))

    def __rsub__(self, other):
        return add(_lift(other, self), scale(self, -1.0))

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, other)
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        label = ' {}'.format(self.name) if self.name else ''
        return 'Tensor{}(shape={}, dtype={})'.format(label, self.shape, self.dtype)


class Tape:
    """Records op outputs in creation order, which is a topological order."""

    def __init__(self):
        self.nodes: List[Tensor] = []

    def record(self, node: Tensor) -> None:
        self.nodes.append(node)

    def __len__(self):
        return len(self.nodes)


def _tape_stack() -> List[Tape]:
    if not hasattr(_local, 'stack'):
        _local.stack = []
    return _local.stack


def active_tape() -> Optional[Tape]:
    """Return the innermost tape of this thread, if any."""
    stack = _tape_stack()
    return stack[-1] if stack else None


@contextmanager
def recording(tape: Tape = None):
    """Context manager recording every op into `tape` (a new one by default)."""
    tape = tape if tape is not None else Tape()
    stack = _tape_stack()
    stack.append(tape)
    try:
        yield tape
    finally:
        stack.pop()


def _node(data, parents: Sequence[Tensor], rule: BackwardRule) -> Tensor:
    out = Tensor(data, _parents=parents, _backward=rule)
    tape = active_tape()
    if tape is not None:
        tape.record(out)
    return out


def _lift(value, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=like.dtype))


def _trailing(big: Tuple[int, ...], small: Tuple[int, ...]) -> bool:
    return len(small) <= len(big) and tuple(big[len(big) - len(small):]) == tuple(small)


def _reduce_to(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if grad.shape == tuple(shape):
        return grad
    return grad.reshape((-1,) + tuple(shape)).sum(axis=0)


def _broadcast_pair(op, a: Tensor, b: Tensor):
    if a.shape == b.shape or _trailing(a.shape, b.shape) or _trailing(b.shape, a.shape):
        return
    raise ShapeMismatchError(op, a.shape, b.shape)


def add(a, b) -> Tensor:
    """Elementwise sum; the smaller operand may match the trailing dims."""
    a = a if isinstance(a, Tensor) else _lift(a, b)
    b = _lift(b, a)
    _broadcast_pair('add', a, b)

    def rule(g):
        return _reduce_to(g, a.shape), _reduce_to(g, b.shape)

    return _node(a.data + b.data, (a, b), rule)


def mul(a, b) -> Tensor:
    """Elementwise product with the same trailing-dim rule as `add`."""
    a = a if isinstance(a, Tensor) else _lift(a, b)
    b = _lift(b, a)
    _broadcast_pair('mul', a, b)

    def rule(g):
        return _reduce_to(g * b.data, a.shape), _reduce_to(g * a.data, b.shape)

    return _node(a.data * b.data, (a, b), rule)


def scale(a: Tensor, factor: float) -> Tensor:
    """Multiply by a constant."""
    factor = a.dtype.type(factor)

    def rule(g):
        return (g * factor,)

    return _node(a.data * factor, (a,), rule)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product over the last two axes.

    `b` is either 2-D (shared by every batch entry of `a`) or has the same
    batch dims as `a`.
    """
    a = a if isinstance(a, Tensor) else _lift(a, b)
    b = _lift(b, a)
    if (
        a.ndim < 2
        or b.ndim < 2
        or a.shape[-1] != b.shape[-2]
        or (b.ndim > 2 and a.shape[:-2] != b.shape[:-2])
    ):
        raise ShapeMismatchError('matmul', a.shape, b.shape)

    def rule(g):
        grad_a = g @ np.swapaxes(b.data, -1, -2)
        if b.ndim == 2 and a.ndim > 2:
            grad_b = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        else:
            grad_b = np.swapaxes(a.data, -1, -2) @ g
        return grad_a, grad_b

    return _node(a.data @ b.data, (a, b), rule)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    """Softmax along `axis`; entries at -inf get exactly zero weight."""
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def rule(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return _node(out, (a,), rule)


def masked_fill(a: Tensor, mask, value: float) -> Tensor:
    """Replace entries where `mask` is True by a constant."""
    mask = np.asarray(mask, dtype=bool)
    if not (mask.shape == a.shape or _trailing(a.shape, mask.shape)):
        raise ShapeMismatchError('masked_fill', a.shape, mask.shape)

    def rule(g):
        return (np.where(mask, 0.0, g).astype(g.dtype),)

    return _node(np.where(mask, a.dtype.type(value), a.data), (a,), rule)


def layer_norm(a: Tensor, eps: float = 1e-6) -> Tensor:
    """Normalize the last axis to zero mean and unit variance (no affine)."""
    mean = a.data.mean(axis=-1, keepdims=True)
    centered = a.data - mean
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    normed = centered * inv_std

    def rule(g):
        g_mean = g.mean(axis=-1, keepdims=True)
        gx_mean = (g * normed).mean(axis=-1, keepdims=True)
        return (inv_std * (g - g_mean - normed * gx_mean),)

    return _node(normed, (a,), rule)


def silu(a: Tensor) -> Tensor:
    """x * sigmoid(x)."""
    sig = 1.0 / (1.0 + np.exp(-a.data))

    def rule(g):
        return (g * sig * (1.0 + a.data * (1.0 - sig)),)

    return _node(a.data * sig, (a,), rule)


def embed_lookup(table: Tensor, ids) -> Tensor:
    """Gather rows of `table`; gradients scatter-add back."""
    ids = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2:
        raise ShapeMismatchError('embed_lookup', table.shape, ids.shape)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeMismatchError('embed_lookup', table.shape, (int(ids.max()) + 1,))

    def rule(g):
        grad = np.zeros_like(table.data)
        np.add.at(grad, ids, g)
        return (grad,)

    return _node(table.data[ids], (table,), rule)


def reshape(a: Tensor, shape) -> Tensor:
    shape = tuple(shape)

    def rule(g):
        return (g.reshape(a.shape),)

    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise ShapeMismatchError('reshape', a.shape, shape)
    return _node(data, (a,), rule)


def transpose(a: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def rule(g):
        return (np.transpose(g, inverse),)

    return _node(np.transpose(a.data, axes), (a,), rule)


def slice_last(a: Tensor, start: int, stop: int) -> Tensor:
    """Select `a[..., start:stop]`."""

    def rule(g):
        grad = np.zeros_like(a.data)
        grad[..., start:stop] = g
        return (grad,)

    return _node(a.data[..., start:stop], (a,), rule)


def tensor_sum(a: Tensor) -> Tensor:
    """Sum of all entries, as a 0-d tensor."""

    def rule(g):
        return (np.broadcast_to(g, a.shape).astype(a.dtype),)

    return _node(a.data.sum(), (a,), rule)


def mean(a: Tensor) -> Tensor:
    """Mean of all entries, as a 0-d tensor."""
    return scale(tensor_sum(a), 1.0 / max(a.data.size, 1))


def mse(prediction: Tensor, target) -> Tensor:
    """Mean squared error over all entries."""
    target = _lift(target, prediction)
    if prediction.shape != target.shape:
        raise ShapeMismatchError('mse', prediction.shape, target.shape)
    diff = prediction.data - target.data
    count = max(diff.size, 1)

    def rule(g):
        grad = g * (2.0 / count) * diff
        return grad, -grad

    return _node(np.mean(diff ** 2), (prediction, target), rule)


def backward(
    tape: Tape, loss: Tensor, wrt: Optional[Iterable[Tensor]] = None
) -> Dict[Tensor, np.ndarray]:
    """
    Reverse-mode gradients of a scalar loss.

    :param tape: Tape the loss was recorded on.
    :param loss: Scalar tensor.
    :param wrt: Leaves to return gradients for; all leaves on the tape by
        default. Leaves the loss does not depend on get zeros.
    :raises NonScalarLossError: `loss` has more than one entry.
    """
    if loss.data.size != 1:
        raise NonScalarLossError(
            'loss has shape {}, expected a scalar'.format(loss.shape)
        )
    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(tape.nodes):
        g = grads.get(id(node))
        if g is None:
            continue
        for parent, parent_grad in zip(node._parents, node._backward(g)):
            if parent_grad is None:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + parent_grad
            else:
                grads[key] = np.asarray(parent_grad, dtype=parent.dtype)

    if wrt is None:
        seen = set()
        wrt = []
        for node in tape.nodes:
            for parent in node._parents:
                if parent.is_leaf and id(parent) not in seen:
                    seen.add(id(parent))
                    wrt.append(parent)
    return {
        leaf: grads[id(leaf)].reshape(leaf.shape)
        if id(leaf) in grads
        else np.zeros_like(leaf.data)
        for leaf in wrt
    }
