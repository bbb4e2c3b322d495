"""Compact numpy network engine: layers, gradients, optimizers and cost accounting."""

from .cost import FLOP_CONVENTION, CostReport, count_cost
from .gradcheck import GradCheckResult, gradient_check, relative_error
from .graph import Gradients, ModelGraph, backward, forward
from .layers import LAYER_KINDS, LayerSpec, softmax
from .losses import softmax_cross_entropy
from .optim import SGD, Adam, AdamState, adam_step, make_optimizer, sgd_step
from .serialize import load_model, save_model

__all__ = [
    "FLOP_CONVENTION",
    "LAYER_KINDS",
    "SGD",
    "Adam",
    "AdamState",
    "CostReport",
    "GradCheckResult",
    "Gradients",
    "LayerSpec",
    "ModelGraph",
    "adam_step",
    "backward",
    "count_cost",
    "forward",
    "gradient_check",
    "load_model",
    "make_optimizer",
    "relative_error",
    "save_model",
    "sgd_step",
    "softmax",
    "softmax_cross_entropy",
]
