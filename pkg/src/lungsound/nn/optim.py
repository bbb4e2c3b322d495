"""Parameter update rules."""

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from .layers import Params


def _check(param: np.ndarray, grad: np.ndarray) -> None:
    if np.shape(param) != np.shape(grad):
        raise ShapeError("optimizer", f"parameter {np.shape(param)} vs gradient {np.shape(grad)}")


def sgd_step(param: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
    """Plain gradient descent: ``param - lr * grad``."""
    _check(param, grad)
    return param - lr * grad


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros_like(cls, param: np.ndarray) -> "AdamState":
        return cls(np.zeros_like(param), np.zeros_like(param), 0)


def adam_step(
    param: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; returns the new parameter and state."""
    _check(param, grad)
    _check(state.m, grad)
    t = state.t + 1
    m = beta1 * state.m + (1 - beta1) * grad
    v = beta2 * state.v + (1 - beta2) * grad * grad
    m_hat = m / (1 - beta1**t)
    v_hat = v / (1 - beta2**t)
    return param - lr * m_hat / (np.sqrt(v_hat) + eps), AdamState(m, v, t)


class SGD:
    """Gradient descent over a graph's parameter store."""

    def __init__(self, lr: float = 1e-2):
        self.lr = lr

    def step(self, params: dict[int, Params], grads: dict[int, Params], lr: float | None = None):
        lr = self.lr if lr is None else lr
        for i, layer_grads in grads.items():
            for name, g in layer_grads.items():
                params[i][name] = sgd_step(params[i][name], g, lr).astype(
                    params[i][name].dtype, copy=False
                )


class Adam:
    """Adam over a graph's parameter store; state is keyed by (layer, name)."""

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state: dict[tuple[int, str], AdamState] = {}

    def step(self, params: dict[int, Params], grads: dict[int, Params], lr: float | None = None):
        lr = self.lr if lr is None else lr
        for i in sorted(grads):
            for name in sorted(grads[i]):
                p = params[i][name]
                key = (i, name)
                state = self.state.get(key) or AdamState.zeros_like(p)
                new, self.state[key] = adam_step(
                    p, grads[i][name], state, lr, self.beta1, self.beta2, self.eps
                )
                params[i][name] = new.astype(p.dtype, copy=False)


def make_optimizer(name: str, lr: float) -> SGD | Adam:
    if name == "adam":
        return Adam(lr)
    if name == "sgd":
        return SGD(lr)
    raise ValueError(f"unknown optimizer '{name}'")
