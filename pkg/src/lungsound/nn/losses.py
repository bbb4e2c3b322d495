"""Classification loss."""

import numpy as np

from ..errors import ShapeError
from .layers import softmax


def log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax_cross_entropy(
    logits: np.ndarray,
    labels: np.ndarray,
    class_weights: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy of ``softmax(logits)`` against integer labels.

    Args:
        logits: (N, C) scores.
        labels: (N,) class indices.
        class_weights: Optional (C,) per-class loss weights.

    Returns:
        (loss, gradient with respect to logits)
    """
    logits = np.asarray(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError("loss", f"logits {logits.shape} do not match labels {labels.shape}")
    n, c = logits.shape
    if n == 0:
        raise ShapeError("loss", "empty batch")
    if labels.min() < 0 or labels.max() >= c:
        raise ShapeError("loss", f"labels outside [0, {c})")

    rows = np.arange(n)
    weights = (
        np.ones(n, dtype=logits.dtype)
        if class_weights is None
        else np.asarray(class_weights, dtype=logits.dtype)[labels]
    )
    loss = float(-(weights * log_softmax(logits)[rows, labels]).sum() / n)

    grad = softmax(logits)
    grad[rows, labels] -= 1
    grad *= weights[:, None] / n
    return loss, grad
