"""Numeric core of the referring video segmentation project.

Thin numpy wrappers over the C++ library: activations and attention
primitives, minimum-cost assignment, and the segmentation metrics.
"""

from ._core import (
    assignment_cost,
    avg_pool2d,
    boundary_f,
    boundary_tolerance,
    conv2d,
    hungarian,
    iou,
    logsumexp,
    map_50_95,
    matmul,
    precision_at_k,
    relu,
    sigmoid,
    softmax,
    softplus,
    stability_variance,
    upsample2x,
)

__all__ = [
    "assignment_cost",
    "avg_pool2d",
    "boundary_f",
    "boundary_tolerance",
    "conv2d",
    "hungarian",
    "iou",
    "logsumexp",
    "map_50_95",
    "matmul",
    "precision_at_k",
    "relu",
    "sigmoid",
    "softmax",
    "softplus",
    "stability_variance",
    "upsample2x",
]
