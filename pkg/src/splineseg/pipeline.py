"""End-to-end helpers: training from master shapes, fit post-processing.

The training pipeline runs normalize, expand, align, train in that
order. Fitted shapes come back from the engine as expanded flat arrays;
the exported contour keeps only the master points, since slaves are a
deformation aid, recomputed from masters whenever needed.
"""

from __future__ import annotations

import numpy as np

from . import align, model as model_mod, spline
from .errors import InsufficientData
from .model import ShapeModel
from .spline import ControlShape, SplineConfig, SplineMeta


def check_consistent(shapes) -> tuple:
    """Topology and per-part master counts shared by all shapes."""
    if not shapes:
        raise InsufficientData("no shapes supplied")
    first = shapes[0]
    counts = first.master_counts()
    for s in shapes[1:]:
        if s.topology != first.topology:
            raise ValueError("shapes mix topologies")
        if s.master_counts() != counts:
            raise ValueError("shapes have differing master counts")
    return first.topology, counts


def expanded_flat(shape: ControlShape, config: SplineConfig,
                  epsilon: int) -> np.ndarray:
    """Normalized then expanded shape as a flat coordinate array."""
    masters = shape.master_shape() if not shape.masters.all() else shape
    flat_hat, _, _ = align.normalize(align.as_flat(masters.points))
    normed = ControlShape(
        points=align.as_points(flat_hat),
        masters=np.ones(len(masters.points), dtype=bool),
        topology=masters.topology,
        parts=list(masters.parts),
    )
    expanded = spline.expand_shape(normed, epsilon, config)
    return align.as_flat(expanded.points)


def build_model(shapes, config: SplineConfig, epsilon: int,
                phi: float) -> ShapeModel:
    """Train a shape model from masters-only training shapes."""
    topology, counts = check_consistent(shapes)
    flats = [expanded_flat(s, config, epsilon) for s in shapes]
    aligned, _, weights = align.align_set(flats)
    meta = SplineMeta(
        alpha=config.alpha, rho=config.rho, epsilon=epsilon,
        topology=topology, master_counts=counts,
    )
    return model_mod.train(aligned, phi, weights=weights, meta=meta)


def contour_masters(flat: np.ndarray, meta: SplineMeta) -> ControlShape:
    """Masters-only contour from an expanded fit result."""
    expanded = meta.control_shape(np.asarray(flat, dtype=float))
    return expanded.master_shape()
