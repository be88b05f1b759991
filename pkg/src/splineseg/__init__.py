"""Interactive spline-based statistical shape segmentation workbench.

Layers, bottom up: spline (Catmull-Rom evaluation and expansion), align
(normalization and similarity alignment), model (statistical shape
models), image (filtering, force fields, pyramids), engine (model-to-
image fitting), metrics (overlap and edit usability), fileio/corpus/cli
(artifacts and commands), service (session HTTP API).
"""

from .align import IDENTITY_POSE, PoseParams, align_pair, align_set, normalize, transform
from .engine import (
    FitState,
    LevelConfig,
    PyramidSchedule,
    fit_single_level,
    iterate_level,
    rasterize,
    run_pyramid,
)
from .errors import SplinesegError
from .image import VectorField, bilinear_sample, build_pyramid, edge_map, gvf, median_filter
from .metrics import EditSession, OverlapReport, effort, efficiency, manipulation, overlap
from .model import ShapeModel, select_g, synthesize, train
from .model import project as project_modes
from .pipeline import build_model
from .spline import (
    CLOSED,
    OPEN,
    ControlShape,
    SplineConfig,
    SplineMeta,
    eval_segment,
    expand_shape,
    knot_sequence,
    sample_curve,
)

__version__ = "0.1.0"

__all__ = [
    "CLOSED",
    "ControlShape",
    "EditSession",
    "FitState",
    "IDENTITY_POSE",
    "LevelConfig",
    "OPEN",
    "OverlapReport",
    "PoseParams",
    "PyramidSchedule",
    "ShapeModel",
    "SplineConfig",
    "SplineMeta",
    "SplinesegError",
    "VectorField",
    "align_pair",
    "align_set",
    "bilinear_sample",
    "build_model",
    "build_pyramid",
    "edge_map",
    "effort",
    "efficiency",
    "eval_segment",
    "expand_shape",
    "fit_single_level",
    "gvf",
    "iterate_level",
    "knot_sequence",
    "manipulation",
    "median_filter",
    "normalize",
    "overlap",
    "project_modes",
    "rasterize",
    "run_pyramid",
    "sample_curve",
    "select_g",
    "synthesize",
    "train",
    "transform",
    "__version__",
]
