"""Adam with bias correction."""
from typing import Dict, NamedTuple, Tuple

import numpy as np

from voxfield.autograd.tensor import Tensor
from voxfield.exceptions import ShapeMismatchError


class AdamState(NamedTuple):
    """First and second moment estimates per parameter name."""

    step: int
    m: Dict[str, np.ndarray]
    v: Dict[str, np.ndarray]

    @classmethod
    def zeros(cls, params: Dict[str, Tensor]) -> 'AdamState':
        return cls(
            0,
            {k: np.zeros_like(p.data) for k, p in params.items()},
            {k: np.zeros_like(p.data) for k, p in params.items()},
        )


def adam_step(
    params: Dict[str, Tensor],
    grads: Dict[str, np.ndarray],
    state: AdamState,
    lr: float = 5e-4,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Tuple[Dict[str, Tensor], AdamState]:
    """
    One Adam update.

    Parameters without a gradient entry are treated as having a zero gradient.
    Inputs are left untouched; new leaf tensors and a new state are returned.
    """
    step = state.step + 1
    new_params, new_m, new_v = {}, {}, {}
    for name, param in params.items():
        grad = grads.get(name)
        grad = np.zeros_like(param.data) if grad is None else np.asarray(grad)
        if grad.shape != param.shape:
            raise ShapeMismatchError(
                'adam_step[{}]'.format(name), param.shape, grad.shape
            )
        m = beta1 * state.m[name] + (1.0 - beta1) * grad
        v = beta2 * state.v[name] + (1.0 - beta2) * grad * grad
        m_hat = m / (1.0 - beta1 ** step)
        v_hat = v / (1.0 - beta2 ** step)
        update = lr * m_hat / (np.sqrt(v_hat) + eps)
        new_params[name] = Tensor(
            (param.data - update).astype(param.dtype), name=param.name or name
        )
        new_m[name] = m.astype(param.dtype)
        new_v[name] = v.astype(param.dtype)
    return new_params, AdamState(step, new_m, new_v)
