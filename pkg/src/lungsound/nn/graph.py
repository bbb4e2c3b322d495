"""Sequential model graph with auxiliary input ports."""

import copy
import logging
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Sequence

import numpy as np

from ..errors import GradientStateError, NonFiniteError, ParameterError, ShapeError
from .layers import Layer, LayerSpec, Params, build_layer

log = logging.getLogger(__name__)


@dataclass
class Gradients:
    """Result of a backward pass."""

    params: dict[int, Params] = field(default_factory=dict)
    input: np.ndarray | None = None
    aux: dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class _ForwardCache:
    x: np.ndarray
    aux: dict[str, np.ndarray]
    caches: list[Any]
    n_layers: int
    batched: bool


class ModelGraph:
    """Ordered layer list over one primary input and optional auxiliary ports.

    Parameters live in ``params`` keyed by layer index. ``forward`` keeps the
    activations of its last call (unless ``cache=False``) for ``backward``.
    """

    def __init__(
        self,
        input_shape: Sequence[int],
        layers: Sequence[LayerSpec],
        aux_ports: Mapping[str, int] | None = None,
        dtype: str | np.dtype = "float32",
    ):
        self.input_shape = tuple(int(d) for d in input_shape)
        self.specs = [s if isinstance(s, LayerSpec) else LayerSpec.from_dict(s) for s in layers]
        self.aux_ports = {str(k): int(v) for k, v in (aux_ports or {}).items()}
        self.dtype = np.dtype(dtype)
        if not self.specs:
            raise ShapeError("graph", "a graph needs at least one layer")

        self.layers: list[Layer] = []
        shape = self.input_shape
        for i, spec in enumerate(self.specs):
            layer = build_layer(spec, shape, i, self.aux_ports)
            self.layers.append(layer)
            shape = layer.output_shape

        self.params: dict[int, Params] = {}
        self._cache: _ForwardCache | None = None

    @property
    def output_shape(self) -> tuple[int, ...]:
        return self.layers[-1].output_shape

    @property
    def initialized(self) -> bool:
        return all(i in self.params for i, layer in enumerate(self.layers) if layer.param_shapes())

    def initialize(self, seed: int = 0) -> "ModelGraph":
        """Fan-in scaled uniform weights, zero biases, from a seeded generator."""
        rng = np.random.default_rng(seed)
        self.params = {}
        for i, layer in enumerate(self.layers):
            if not layer.param_shapes():
                continue
            relu_next = i + 1 < len(self.layers) and self.layers[i + 1].kind == "ReLU"
            self.params[i] = layer.init_params(rng, self.dtype, relu_next)
        self._cache = None
        return self

    def parameter_items(self) -> Iterator[tuple[int, str, np.ndarray]]:
        for i in sorted(self.params):
            for name in sorted(self.params[i]):
                yield i, name, self.params[i][name]

    @property
    def n_params(self) -> int:
        return sum(layer.cost()[0] for layer in self.layers)

    def snapshot(self) -> dict[int, Params]:
        return {i: {k: v.copy() for k, v in p.items()} for i, p in self.params.items()}

    def load_params(self, params: Mapping[int, Params]) -> None:
        """Replace parameters after checking names, shapes and dtype."""
        loaded: dict[int, Params] = {}
        for i, layer in enumerate(self.layers):
            shapes = layer.param_shapes()
            if not shapes:
                continue
            if i not in params:
                raise ParameterError(f"layer {layer.name}: parameters missing")
            loaded[i] = {}
            for name, shape in shapes.items():
                value = params[i].get(name)
                if value is None:
                    raise ParameterError(f"layer {layer.name}: parameter '{name}' missing")
                if tuple(value.shape) != tuple(shape):
                    raise ShapeError(
                        layer.name, f"parameter '{name}' has shape {value.shape}, expected {shape}"
                    )
                loaded[i][name] = np.asarray(value, dtype=self.dtype)
        self.params = loaded
        self._cache = None

    # ------------------------------------------------------------------

    def _prepare(self, x: Any, aux: Mapping[str, Any] | None) -> tuple[
        np.ndarray, dict[str, np.ndarray], bool
    ]:
        x = np.asarray(x, dtype=self.dtype)
        batched = x.ndim == len(self.input_shape) + 1
        if not batched:
            x = x[None]
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeError(
                "input", f"expected {self.input_shape} per example, got {tuple(x.shape[1:])}"
            )
        aux_arrays: dict[str, np.ndarray] = {}
        for port, size in self.aux_ports.items():
            if aux is None or port not in aux:
                raise ShapeError(f"aux:{port}", "auxiliary input missing")
            a = np.asarray(aux[port], dtype=self.dtype)
            if a.ndim == 1:
                a = a[None]
            if a.shape != (x.shape[0], size):
                raise ShapeError(f"aux:{port}", f"expected {(x.shape[0], size)}, got {a.shape}")
            aux_arrays[port] = a
        return x, aux_arrays, batched

    def forward(
        self,
        x: Any,
        aux: Mapping[str, Any] | None = None,
        logits: bool = False,
        cache: bool = True,
    ) -> np.ndarray:
        """Run the graph.

        Args:
            x: One example shaped ``input_shape`` or a batch ``(N, *input_shape)``.
            aux: Arrays for every auxiliary port, ``(size,)`` or ``(N, size)``.
            logits: Stop before a final Softmax.
            cache: Keep activations for ``backward``.

        Returns:
            Output of the last layer run, batched like ``x``.
        """
        if not self.initialized:
            raise ParameterError("parameters are not initialized")
        h, aux_arrays, batched = self._prepare(x, aux)
        n_layers = len(self.layers)
        if logits and self.layers[-1].kind == "Softmax":
            n_layers -= 1

        caches = []
        x_in = h
        for i in range(n_layers):
            layer = self.layers[i]
            h, c = layer.forward(h, self.params.get(i, {}), aux_arrays)
            if not np.all(np.isfinite(h)):
                raise NonFiniteError(layer.name)
            caches.append(c)

        self._cache = (
            _ForwardCache(x_in, aux_arrays, caches, n_layers, batched) if cache else None
        )
        return h if batched else h[0]

    def backward(self, grad: Any) -> Gradients:
        """Reverse-mode gradients of the last cached forward pass."""
        if self._cache is None:
            raise GradientStateError("backward called without a cached forward pass")
        state = self._cache
        g = np.asarray(grad, dtype=self.dtype)
        if not state.batched:
            g = g[None]
        expected = (state.x.shape[0], *self.layers[state.n_layers - 1].output_shape)
        if g.shape != expected:
            raise ShapeError("loss_grad", f"expected {expected}, got {g.shape}")

        out = Gradients()
        for i in reversed(range(state.n_layers)):
            layer = self.layers[i]
            g, dparams, daux = layer.backward(g, self.params.get(i, {}), state.caches[i])
            if dparams:
                out.params[i] = dparams
            for port, value in daux.items():
                out.aux[port] = out.aux.get(port, 0) + value
        out.input = g if state.batched else g[0]
        if not state.batched:
            out.aux = {k: v[0] for k, v in out.aux.items()}
        return out

    def patterns(self) -> list[np.ndarray | None]:
        """Activation patterns of the last cached forward pass."""
        if self._cache is None:
            raise GradientStateError("no cached forward pass")
        return [layer.pattern(c) for layer, c in zip(self.layers, self._cache.caches)]

    def clear_cache(self) -> None:
        self._cache = None

    # ------------------------------------------------------------------

    def describe(self) -> dict[str, Any]:
        """Human-readable graph definition (no weights)."""
        return {
            "input_shape": list(self.input_shape),
            "aux_ports": dict(sorted(self.aux_ports.items())),
            "dtype": self.dtype.name,
            "layers": [spec.to_dict() for spec in self.specs],
        }

    @classmethod
    def from_description(cls, data: Mapping[str, Any]) -> "ModelGraph":
        return cls(
            input_shape=data["input_shape"],
            layers=[LayerSpec.from_dict(d) for d in data["layers"]],
            aux_ports=data.get("aux_ports", {}),
            dtype=data.get("dtype", "float32"),
        )

    def copy(self) -> "ModelGraph":
        other = ModelGraph.from_description(copy.deepcopy(self.describe()))
        other.params = self.snapshot()
        return other

    def astype(self, dtype: str | np.dtype) -> "ModelGraph":
        """Copy of the graph with parameters cast to ``dtype``."""
        description = copy.deepcopy(self.describe())
        description["dtype"] = np.dtype(dtype).name
        other = ModelGraph.from_description(description)
        other.params = {
            i: {k: v.astype(dtype) for k, v in p.items()} for i, p in self.params.items()
        }
        return other

    def summary(self) -> list[dict[str, Any]]:
        return [
            {
                "index": layer.index,
                "kind": layer.kind,
                "output_shape": layer.output_shape,
                "params": layer.cost()[0],
            }
            for layer in self.layers
        ]


def forward(
    g: ModelGraph, primary_input: Any, aux_inputs: Mapping[str, Any] | None = None
) -> np.ndarray:
    return g.forward(primary_input, aux_inputs)


def backward(
    g: ModelGraph,
    primary_input: Any,
    aux_inputs: Mapping[str, Any] | None,
    loss_grad: Any,
) -> Gradients:
    """Gradients for ``loss_grad`` at the output of a forward pass on the same inputs."""
    state = g._cache
    if state is None:
        raise GradientStateError("backward called without a cached forward pass")
    x = np.asarray(primary_input, dtype=g.dtype)
    if not state.batched:
        x = x[None]
    if x.shape != state.x.shape or not np.array_equal(x, state.x):
        raise GradientStateError("cached forward pass was computed on different inputs")
    return g.backward(loss_grad)
