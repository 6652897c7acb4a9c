"""Tensorized Gauss-Hermite quadrature against the standard Gaussian measure."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import roots_hermitenorm


def gauss_hermite_rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights integrating exactly against N(0,1) up to degree 2n-1.

    scipy's probabilists' rule stays stable into the thousands of nodes
    (numpy's recurrence overflows past ~300).
    """
    if nodes < 1:
        raise ValueError("need at least one quadrature node")
    x, w = roots_hermitenorm(nodes)
    return x, w / math.sqrt(2.0 * math.pi)


def tensor_rule(dimension: int, nodes_per_axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Product rule on R^d: points (n^d, d) and matching probability weights."""
    x, w = gauss_hermite_rule(nodes_per_axis)
    if dimension == 1:
        return x[:, None], w
    grids = np.meshgrid(*([x] * dimension), indexing="ij")
    pts = np.stack([g.reshape(-1) for g in grids], axis=1)
    wgrids = np.meshgrid(*([w] * dimension), indexing="ij")
    wts = np.ones(pts.shape[0])
    for g in wgrids:
        wts = wts * g.reshape(-1)
    return pts, wts


def tensor_grid(dimension: int, points_per_axis: int, halfwidth: float) -> np.ndarray:
    """Uniform tensor grid on [-halfwidth, halfwidth]^d, shape (n^d, d)."""
    axis = np.linspace(-halfwidth, halfwidth, points_per_axis)
    if dimension == 1:
        return axis[:, None]
    grids = np.meshgrid(*([axis] * dimension), indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)
