"""Finite-difference check of analytic gradients."""

import logging
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from ..errors import ConfigError
from .graph import ModelGraph

log = logging.getLogger(__name__)


@dataclass
class GradCheckResult:
    max_rel_error: float
    checked: int
    skipped: int
    per_tensor: dict[str, float] = field(default_factory=dict)

    def passed(self, tol: float = 1e-4) -> bool:
        """Every checked coordinate within ``tol`` (see ``relative_error`` for the floor)."""
        return self.checked > 0 and self.max_rel_error < tol


def _same_patterns(a: list, b: list) -> bool:
    return all(
        (p is None and q is None) or (p is not None and q is not None and np.array_equal(p, q))
        for p, q in zip(a, b)
    )


def relative_error(analytic: float, numeric: float, floor: float = 1e-3) -> float:
    """|a - n| / max(|a|, |n|, floor).

    Gradients larger than ``floor`` are compared relatively. Smaller ones are
    compared absolutely: a tolerance ``tol`` then bounds |a - n| by
    ``tol * floor``.
    """
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def gradient_check(
    graph: ModelGraph,
    x: np.ndarray,
    aux: Mapping[str, Any] | None = None,
    h: float = 1e-5,
    seed: int = 0,
    max_coords: int | None = None,
) -> GradCheckResult:
    """Compare backward() against central differences of ``sum(output * R)``.

    R is a fixed random projection. Every parameter, input and auxiliary
    coordinate is perturbed by +/-h (or a random subset of ``max_coords`` per
    tensor). Coordinates whose perturbation flips a ReLU mask or a pooling
    argmax are skipped: the loss is not differentiable there.
    """
    if graph.dtype != np.float64:
        raise ConfigError("gradient checks need a float64 graph")
    rng = np.random.default_rng(seed)
    x = np.array(x, dtype=np.float64)
    aux = {k: np.array(v, dtype=np.float64) for k, v in (aux or {}).items()}

    out = graph.forward(x, aux)
    projection = rng.standard_normal(out.shape)
    baseline = graph.patterns()
    grads = graph.backward(projection)

    def loss_and_patterns() -> tuple[float, list]:
        y = graph.forward(x, aux)
        return float((y * projection).sum()), graph.patterns()

    tensors: list[tuple[str, np.ndarray, np.ndarray]] = []
    for i, name, p in graph.parameter_items():
        tensors.append((f"{i}.{name}", p, grads.params[i][name]))
    tensors.append(("input", x, grads.input))
    for port, a in aux.items():
        tensors.append((f"aux.{port}", a, grads.aux[port]))

    result = GradCheckResult(max_rel_error=0.0, checked=0, skipped=0)
    for label, tensor, analytic in tensors:
        coords = np.arange(tensor.size)
        if max_coords is not None and tensor.size > max_coords:
            coords = np.sort(rng.choice(tensor.size, size=max_coords, replace=False))
        worst = 0.0
        flat = tensor.reshape(-1)
        for c in coords:
            original = flat[c]
            flat[c] = original + h
            plus, plus_patterns = loss_and_patterns()
            flat[c] = original - h
            minus, minus_patterns = loss_and_patterns()
            flat[c] = original
            if not (_same_patterns(plus_patterns, baseline)
                    and _same_patterns(minus_patterns, baseline)):
                result.skipped += 1
                continue
            numeric = (plus - minus) / (2 * h)
            err = relative_error(float(analytic.reshape(-1)[c]), numeric)
            worst = max(worst, err)
            result.checked += 1
        result.per_tensor[label] = worst
        result.max_rel_error = max(result.max_rel_error, worst)

    graph.clear_cache()
    log.debug("Gradient check: %d checked, %d skipped, max rel error %.3g",
              result.checked, result.skipped, result.max_rel_error)
    return result
