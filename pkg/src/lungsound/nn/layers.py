"""Layer kinds of the network engine.

Every layer works on a batch: inputs are shaped ``(N, *input_shape)``.
Layers hold no tensors themselves; parameters and activation caches are
passed in and returned so one built graph can serve several threads.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, ClassVar

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ConfigError, ShapeError

Params = dict[str, np.ndarray]

LAYER_KINDS = (
    "Conv1D",
    "Conv2D",
    "MaxPool1D",
    "MaxPool2D",
    "Dense",
    "ReLU",
    "Softmax",
    "Flatten",
    "Reshape",
    "Concat",
)


@dataclass(frozen=True)
class LayerSpec:
    """Kind plus kind-specific hyperparameters."""

    kind: str
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in LAYER_KINDS:
            raise ConfigError(f"unknown layer kind '{self.kind}'")

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LayerSpec":
        data = dict(data)
        return cls(data.pop("kind"), data)


def _positive_ints(name: str, value: Any, n: int) -> tuple[int, ...]:
    values = tuple(value) if isinstance(value, (list, tuple)) else (value,) * n
    try:
        ints = tuple(int(v) for v in values)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be {n} positive integer(s), got {value!r}") from None
    if len(ints) != n or any(i != v or i < 1 for i, v in zip(ints, values)):
        raise ConfigError(f"{name} must be {n} positive integer(s), got {value!r}")
    return ints


class Layer:
    """Base class: shape inference, parameters, forward/backward and cost."""

    kind: ClassVar[str] = ""

    def __init__(self, spec: LayerSpec, input_shape: tuple[int, ...], index: int,
                 aux_ports: dict[str, int] | None = None):
        self.spec = spec
        self.index = index
        self.name = f"{index}:{spec.kind}"
        self.input_shape = tuple(int(d) for d in input_shape)
        self.aux_ports = aux_ports or {}
        self.output_shape = self._output_shape()
        if any(d < 1 for d in self.output_shape):
            raise ShapeError(
                self.name, f"non-positive output shape {self.output_shape} from {self.input_shape}"
            )

    def _output_shape(self) -> tuple[int, ...]:
        return self.input_shape

    def _require_rank(self, rank: int) -> None:
        if len(self.input_shape) != rank:
            raise ShapeError(
                self.name, f"expects a rank-{rank} input, got shape {self.input_shape}"
            )

    # Parameters

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        return {}

    def fan_in(self) -> int:
        return 1

    def init_params(self, rng: np.random.Generator, dtype: np.dtype, relu_next: bool) -> Params:
        shapes = self.param_shapes()
        if not shapes:
            return {}
        # He-uniform for ReLU-followed layers, variance-1/fan_in uniform otherwise
        limit = math.sqrt((6.0 if relu_next else 3.0) / self.fan_in())
        return {
            "weight": rng.uniform(-limit, limit, shapes["weight"]).astype(dtype),
            "bias": np.zeros(shapes["bias"], dtype=dtype),
        }

    # Computation

    def forward(self, x: np.ndarray, params: Params, aux: dict[str, np.ndarray]) -> tuple[
        np.ndarray, Any
    ]:
        raise NotImplementedError

    def backward(self, grad: np.ndarray, params: Params, cache: Any) -> tuple[
        np.ndarray, Params, dict[str, np.ndarray]
    ]:
        raise NotImplementedError

    def pattern(self, cache: Any) -> np.ndarray | None:
        """Discrete activation pattern (ReLU mask, pooling argmax), if any."""
        return None

    # Accounting

    def cost(self) -> tuple[int, int]:
        """(parameter count, FLOPs) for one example."""
        return 0, 0


class _Conv(Layer):
    """Convolution over 1 or 2 spatial dims, computed as one matmul per kernel tap."""

    ndim: ClassVar[int] = 1

    def __init__(self, spec, input_shape, index, aux_ports=None):
        p = spec.params
        self.out_channels = _positive_ints("out_channels", p.get("out_channels"), 1)[0]
        self.kernel = _positive_ints("kernel_size", p.get("kernel_size"), self.ndim)
        self.stride = _positive_ints("stride", p.get("stride", 1), self.ndim)
        super().__init__(spec, input_shape, index, aux_ports)

    def _output_shape(self) -> tuple[int, ...]:
        self._require_rank(self.ndim + 1)
        spatial = self.input_shape[1:]
        out = tuple(
            (n - k) // s + 1 if n >= k else 0
            for n, k, s in zip(spatial, self.kernel, self.stride)
        )
        return (self.out_channels, *out)

    @property
    def in_channels(self) -> int:
        return self.input_shape[0]

    def param_shapes(self):
        return {
            "weight": (self.out_channels, self.in_channels, *self.kernel),
            "bias": (self.out_channels,),
        }

    def fan_in(self) -> int:
        return self.in_channels * math.prod(self.kernel)

    def _taps(self):
        out = self.output_shape[1:]
        for tap in itertools.product(*(range(k) for k in self.kernel)):
            window = tuple(
                slice(t, t + s * (o - 1) + 1, s) for t, s, o in zip(tap, self.stride, out)
            )
            yield tap, (slice(None), slice(None), *window)

    def forward(self, x, params, aux):
        n = x.shape[0]
        positions = math.prod(self.output_shape[1:])
        w = params["weight"]
        out = np.zeros((n, self.out_channels, positions), dtype=x.dtype)
        for tap, window in self._taps():
            out += w[(slice(None), slice(None), *tap)] @ x[window].reshape(
                n, self.in_channels, positions
            )
        out += params["bias"][None, :, None]
        return out.reshape(n, *self.output_shape), x

    def backward(self, grad, params, cache):
        x = cache
        n = x.shape[0]
        positions = math.prod(self.output_shape[1:])
        g = grad.reshape(n, self.out_channels, positions)
        w = params["weight"]
        dw = np.zeros_like(w)
        dx = np.zeros_like(x)
        window_shape = (n, self.in_channels, *self.output_shape[1:])
        for tap, window in self._taps():
            index = (slice(None), slice(None), *tap)
            xs = x[window].reshape(n, self.in_channels, positions)
            dw[index] = (g @ xs.transpose(0, 2, 1)).sum(axis=0)
            dx[window] += (w[index].T @ g).reshape(window_shape)
        db = g.sum(axis=(0, 2))
        return dx, {"weight": dw, "bias": db}, {}

    def cost(self):
        positions = math.prod(self.output_shape[1:])
        taps = math.prod(self.kernel)
        macs = taps * self.in_channels * self.out_channels * positions
        n_params = taps * self.in_channels * self.out_channels + self.out_channels
        return n_params, 2 * macs + self.out_channels * positions


class Conv1D(_Conv):
    kind = "Conv1D"
    ndim = 1


class Conv2D(_Conv):
    kind = "Conv2D"
    ndim = 2


class MaxPool1D(Layer):
    """Max pooling along time; non-overlapping unless ``stride`` is given."""

    kind = "MaxPool1D"

    def __init__(self, spec, input_shape, index, aux_ports=None):
        self.pool = _positive_ints("pool_size", spec.params.get("pool_size"), 1)[0]
        self.stride = _positive_ints("stride", spec.params.get("stride", self.pool), 1)[0]
        super().__init__(spec, input_shape, index, aux_ports)

    def _output_shape(self):
        self._require_rank(2)
        c, length = self.input_shape
        return (c, (length - self.pool) // self.stride + 1 if length >= self.pool else 0)

    def forward(self, x, params, aux):
        lo = self.output_shape[1]
        windows = sliding_window_view(x, self.pool, axis=2)[:, :, :: self.stride][:, :, :lo]
        idx = windows.argmax(axis=-1)
        out = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]
        return out, (idx, x.shape)

    def backward(self, grad, params, cache):
        idx, shape = cache
        n, c, lo = idx.shape
        pos = np.arange(lo)[None, None, :] * self.stride + idx
        dx = np.zeros(shape, dtype=grad.dtype)
        np.add.at(dx, (np.arange(n)[:, None, None], np.arange(c)[None, :, None], pos), grad)
        return dx, {}, {}

    def pattern(self, cache):
        return cache[0]

    def cost(self):
        return 0, math.prod(self.output_shape)


class MaxPool2D(Layer):
    kind = "MaxPool2D"

    def __init__(self, spec, input_shape, index, aux_ports=None):
        self.pool = _positive_ints("pool_size", spec.params.get("pool_size"), 2)
        self.stride = _positive_ints("stride", spec.params.get("stride", list(self.pool)), 2)
        super().__init__(spec, input_shape, index, aux_ports)

    def _output_shape(self):
        self._require_rank(3)
        c, h, w = self.input_shape
        (ph, pw), (sh, sw) = self.pool, self.stride
        return (
            c,
            (h - ph) // sh + 1 if h >= ph else 0,
            (w - pw) // sw + 1 if w >= pw else 0,
        )

    def forward(self, x, params, aux):
        _, ho, wo = self.output_shape
        (ph, pw), (sh, sw) = self.pool, self.stride
        windows = sliding_window_view(x, (ph, pw), axis=(2, 3))[:, :, ::sh, ::sw][:, :, :ho, :wo]
        flat = windows.reshape(*windows.shape[:4], ph * pw)
        idx = flat.argmax(axis=-1)
        out = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]
        return out, (idx, x.shape)

    def backward(self, grad, params, cache):
        idx, shape = cache
        n, c, ho, wo = idx.shape
        (_, pw), (sh, sw) = self.pool, self.stride
        rows = np.arange(ho)[None, None, :, None] * sh + idx // pw
        cols = np.arange(wo)[None, None, None, :] * sw + idx % pw
        dx = np.zeros(shape, dtype=grad.dtype)
        batch = np.arange(n)[:, None, None, None]
        channel = np.arange(c)[None, :, None, None]
        np.add.at(dx, (batch, channel, rows, cols), grad)
        return dx, {}, {}

    def pattern(self, cache):
        return cache[0]

    def cost(self):
        return 0, math.prod(self.output_shape)


class Dense(Layer):
    kind = "Dense"

    def __init__(self, spec, input_shape, index, aux_ports=None):
        self.units = _positive_ints("units", spec.params.get("units"), 1)[0]
        super().__init__(spec, input_shape, index, aux_ports)

    def _output_shape(self):
        self._require_rank(1)
        return (self.units,)

    def param_shapes(self):
        return {"weight": (self.input_shape[0], self.units), "bias": (self.units,)}

    def fan_in(self):
        return self.input_shape[0]

    def forward(self, x, params, aux):
        return x @ params["weight"] + params["bias"], x

    def backward(self, grad, params, cache):
        x = cache
        return grad @ params["weight"].T, {"weight": x.T @ grad, "bias": grad.sum(axis=0)}, {}

    def cost(self):
        d = self.input_shape[0]
        return d * self.units + self.units, 2 * d * self.units + self.units


class ReLU(Layer):
    kind = "ReLU"

    def forward(self, x, params, aux):
        mask = x > 0
        return np.where(mask, x, 0).astype(x.dtype, copy=False), mask

    def backward(self, grad, params, cache):
        return grad * cache, {}, {}

    def pattern(self, cache):
        return cache

    def cost(self):
        return 0, math.prod(self.output_shape)


def softmax(z: np.ndarray) -> np.ndarray:
    """Softmax over the last axis with max subtraction."""
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


class Softmax(Layer):
    kind = "Softmax"

    def forward(self, x, params, aux):
        p = softmax(x)
        return p, p

    def backward(self, grad, params, cache):
        p = cache
        return p * (grad - (grad * p).sum(axis=-1, keepdims=True)), {}, {}

    def cost(self):
        return 0, math.prod(self.output_shape)


class Flatten(Layer):
    kind = "Flatten"

    def _output_shape(self):
        return (math.prod(self.input_shape),)

    def forward(self, x, params, aux):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, grad, params, cache):
        return grad.reshape(cache), {}, {}


class Reshape(Layer):
    kind = "Reshape"

    def _output_shape(self):
        target = tuple(int(d) for d in self.spec.params.get("shape", ()))
        if math.prod(target) != math.prod(self.input_shape):
            raise ShapeError(self.name, f"cannot reshape {self.input_shape} to {target}")
        return target

    def forward(self, x, params, aux):
        return x.reshape(x.shape[0], *self.output_shape), x.shape

    def backward(self, grad, params, cache):
        return grad.reshape(cache), {}, {}


class Concat(Layer):
    """Appends an auxiliary input port to a flat feature vector."""

    kind = "Concat"

    def __init__(self, spec, input_shape, index, aux_ports=None):
        self.port = str(spec.params.get("port", "demographics"))
        if aux_ports is None or self.port not in aux_ports:
            raise ShapeError(f"{index}:Concat", f"unknown auxiliary port '{self.port}'")
        self.aux_size = int(aux_ports[self.port])
        super().__init__(spec, input_shape, index, aux_ports)

    def _output_shape(self):
        self._require_rank(1)
        return (self.input_shape[0] + self.aux_size,)

    def forward(self, x, params, aux):
        a = aux[self.port]
        if a.shape != (x.shape[0], self.aux_size):
            raise ShapeError(
                self.name, f"port '{self.port}' expects {(x.shape[0], self.aux_size)}, got {a.shape}"
            )
        return np.concatenate([x, a.astype(x.dtype, copy=False)], axis=1), None

    def backward(self, grad, params, cache):
        d = self.input_shape[0]
        return grad[:, :d], {}, {self.port: grad[:, d:]}


LAYER_TYPES: dict[str, type[Layer]] = {
    cls.kind: cls
    for cls in (Conv1D, Conv2D, MaxPool1D, MaxPool2D, Dense, ReLU, Softmax, Flatten, Reshape,
                Concat)
}


def build_layer(spec: LayerSpec, input_shape: tuple[int, ...], index: int,
                aux_ports: dict[str, int] | None = None) -> Layer:
    return LAYER_TYPES[spec.kind](spec, input_shape, index, aux_ports)
