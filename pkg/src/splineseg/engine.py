"""Iterative model-to-image fitting and the coarse-to-fine pyramid driver.

One fitting iteration moves the current shape between model scale and
image scale: sample the force field at the image-scale points, push each
point along its curve normal, map the deformed shape back to model scale,
re-project onto the retained modes (with clamping and a Mahalanobis
radius), then recover the pose that carries the re-synthesized shape back
onto the deformed one. The pyramid driver repeats this per resolution
level, carrying pose and mode coefficients down with per-level transfer
coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import align, image, model as model_mod, spline
from .align import PoseParams
from .errors import OpenContour, ScheduleMismatch, SingularSystem
from .model import ShapeModel

# Default convergence tolerance (pixels) for single-level fits.
DEFAULT_TOL = 0.1


@dataclass(frozen=True)
class LevelConfig:
    """Per-resolution-level fitting parameters (one schedule table row)."""

    resolution: int
    q: int
    phi: float
    median_kernel: tuple | None = None
    c_t: float | None = None
    c_s: float | None = None
    c_x: float | None = None
    c_y: float | None = None
    c_b: float | None = None
    c_b2: float | None = None
    psi: float = 1.0
    mu: float = 0.1
    d_max_factor: float = 2.0

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if not 0.0 < self.phi < 1.0:
            raise ValueError("phi must lie in (0, 1)")
        if self.resolution < 4:
            raise ValueError("resolution must be >= 4")

    @property
    def transfer(self):
        """(c_t, c_s, c_x, c_y, c_b) or None when this is an entry level."""
        coeffs = (self.c_t, self.c_s, self.c_x, self.c_y, self.c_b)
        if all(c is None for c in coeffs):
            return None
        if any(c is None for c in coeffs):
            raise ValueError("transfer coefficients must be all set or all nil")
        return coeffs


@dataclass(frozen=True)
class PyramidSchedule:
    """Levels ordered coarse to fine, plus the hand-set entry state."""

    levels: tuple
    init_pose: PoseParams
    init_b_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if not self.levels:
            raise ValueError("schedule needs at least one level")
        for a, b in zip(self.levels, self.levels[1:]):
            if b.resolution != 2 * a.resolution:
                raise ValueError(
                    "level resolutions must double coarse to fine: "
                    f"{a.resolution} -> {b.resolution}"
                )
        if self.levels[0].transfer is not None:
            raise ValueError("coarsest level takes no transfer coefficients")
        for cfg in self.levels[1:]:
            if cfg.transfer is None:
                raise ValueError("non-entry levels need transfer coefficients")
        for l in self.init_b_overrides:
            if l < 1:
                raise ValueError("b override indices are 1-based")

    @property
    def n_levels(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class FitState:
    """Snapshot after one fitting iteration.

    z_model is synthesized from b; z_image is z_model carried through
    pose; z_deformed is the force-displaced image-scale shape the next
    iteration's pose was recovered against.
    """

    b: np.ndarray
    pose: PoseParams
    delta: np.ndarray
    iteration: int
    level: int
    z_model: np.ndarray
    z_image: np.ndarray
    z_deformed: np.ndarray


def curve_normals(points: np.ndarray, topology: str = spline.CLOSED,
                  parts=None) -> np.ndarray:
    """Unit normals from central-difference tangents, per part.

    Closed parts wrap; open parts fall back to one-sided differences at
    their endpoints. Degenerate zero tangents yield zero normals.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if parts is None:
        parts = [(0, n)]
    tangents = np.zeros_like(points)
    for start, stop in parts:
        seg = points[start:stop]
        k = len(seg)
        if k < 2:
            continue
        if topology == spline.CLOSED:
            tangents[start:stop] = np.roll(seg, -1, axis=0) - np.roll(seg, 1, axis=0)
        else:
            tangents[start + 1:stop - 1] = seg[2:] - seg[:-2]
            tangents[start] = seg[1] - seg[0]
            tangents[stop - 1] = seg[-1] - seg[-2]
    normals = np.stack([-tangents[:, 1], tangents[:, 0]], axis=1)
    norms = np.hypot(normals[:, 0], normals[:, 1])
    good = norms > 0
    normals[good] /= norms[good, None]
    normals[~good] = 0.0
    return normals


def normal_displacements(z_image: np.ndarray, fieldxy: image.VectorField,
                         topology: str = spline.CLOSED,
                         parts=None) -> np.ndarray:
    """Project the sampled force at each point onto the curve normal."""
    pts = align.as_points(z_image)
    u, v = image.sample_field(fieldxy, pts[:, 0], pts[:, 1])
    q = np.stack([u, v], axis=1)
    normals = curve_normals(pts, topology, parts)
    scale = np.sum(q * normals, axis=1)
    return align.as_flat(scale[:, None] * normals)


def deform(z_image: np.ndarray, d: np.ndarray, psi: float) -> np.ndarray:
    if len(z_image) != len(d):
        raise ValueError("shape and displacement lengths differ")
    return np.asarray(z_image, dtype=float) + psi * np.asarray(d, dtype=float)


def recover_pose(prev_deformed: np.ndarray,
                 z_model_next: np.ndarray) -> PoseParams:
    """Pose carrying the next model-scale shape onto the last deformed one."""
    return align.align_pair(prev_deformed, z_model_next)


def back_to_model(z_deformed: np.ndarray, delta: np.ndarray,
                  mean: np.ndarray):
    """Strip the pose-free deformation offset and align into model scale.

    Returns the model-scale shape and the pose that produced it.
    """
    pose_minus = align.align_pair(mean, z_deformed - delta)
    return align.transform(z_deformed, pose_minus), pose_minus


def make_state(model: ShapeModel, b: np.ndarray, pose: PoseParams,
               level: int = 1, iteration: int = 0) -> FitState:
    """Consistent state from mode coefficients and a pose."""
    b = np.asarray(b, dtype=float)
    z_model = model_mod.synthesize(model, b)
    z_image = align.transform(z_model, pose)
    return FitState(
        b=b, pose=pose, delta=np.zeros_like(z_model),
        iteration=iteration, level=level,
        z_model=z_model, z_image=z_image, z_deformed=z_image.copy(),
    )


def iterate_level(state: FitState, fieldxy: image.VectorField,
                  cfg: LevelConfig, model: ShapeModel,
                  tol: float | None = None, history: list | None = None
                  ) -> FitState:
    """Run up to cfg.q fitting iterations against one force field.

    With tol set, stops early once the largest point movement drops
    below it; schedule-driven levels pass tol=None and run exactly q.
    A singular alignment aborts the level, returning the last valid
    state.
    """
    topology = model.meta.topology
    parts = model.meta.layout()[1]
    g = len(state.b)
    d_max = cfg.d_max_factor * g
    lams = model.eigvals[:g]

    for it in range(1, cfg.q + 1):
        try:
            d = normal_displacements(state.z_image, fieldxy, topology, parts)
            z_deformed = deform(state.z_image, d, cfg.psi)
            delta = align.rotate_scale(state.z_model - model.mean, state.pose)
            z_minus, _ = back_to_model(z_deformed, delta, model.mean)
            b = model_mod.project(model, z_minus, g)
            b = np.clip(b, -2.0 * np.sqrt(lams), 2.0 * np.sqrt(lams))
            b = model_mod.rescale_modes(model, b, d_max)
            z_model = model_mod.synthesize(model, b)
            pose = recover_pose(z_deformed, z_model)
            z_image = align.transform(z_model, pose)
        except SingularSystem:
            break
        moved = float(np.abs(z_image - state.z_image).max())
        state = FitState(
            b=b, pose=pose, delta=delta,
            iteration=state.iteration + 1, level=state.level,
            z_model=z_model, z_image=z_image, z_deformed=z_deformed,
        )
        if history is not None:
            history.append(state)
        if tol is not None and moved < tol:
            break
    return state


def _level_field(img_level: np.ndarray, cfg: LevelConfig) -> image.VectorField:
    fe = image.edge_map(img_level, cfg.median_kernel)
    return image.gvf(fe, mu=cfg.mu)


def _entry_b(model: ShapeModel, g: int, overrides: dict,
             c_b2: float | None) -> np.ndarray:
    # The coarsest level's c_b2 column is itself an entry override
    # (b_2 = c_b2 * sqrt(lambda_2)); explicit overrides win.
    merged = dict(overrides)
    if c_b2 is not None:
        merged.setdefault(2, c_b2)
    width = max([g] + [l for l in merged])
    if width > len(model.eigvals):
        raise ScheduleMismatch(
            f"b override index {width} exceeds {len(model.eigvals)} "
            "retained modes"
        )
    b = np.zeros(width)
    for l, coeff in merged.items():
        b[l - 1] = coeff * np.sqrt(model.eigvals[l - 1])
    return b


def _transfer_b(b_final: np.ndarray, g_next: int, cfg: LevelConfig,
                model: ShapeModel) -> np.ndarray:
    width = g_next
    if cfg.c_b2 is not None:
        width = max(width, 2)
    if width > len(model.eigvals):
        raise ScheduleMismatch(
            f"schedule needs {width} modes, model retains "
            f"{len(model.eigvals)}"
        )
    b = np.zeros(width)
    k = min(len(b_final), width)
    b[:k] = cfg.c_b * b_final[:k]
    if cfg.c_b2 is not None:
        b[1] = cfg.c_b2 * np.sqrt(model.eigvals[1])
    return b


def run_pyramid(img: np.ndarray, model: ShapeModel, sched: PyramidSchedule):
    """Coarse-to-fine fit; returns the final image-scale contour and the
    per-iteration state history (all levels, coarse first)."""
    img = np.asarray(img, dtype=float)
    n = sched.n_levels
    finest = sched.levels[-1]
    if max(img.shape) != finest.resolution:
        raise ScheduleMismatch(
            f"image {img.shape[1]}x{img.shape[0]} does not match finest "
            f"level resolution {finest.resolution}"
        )
    pyramid = image.build_pyramid(img, n)
    for cfg, lvl in zip(sched.levels, reversed(pyramid)):
        if max(lvl.shape) != cfg.resolution:
            raise ScheduleMismatch(
                f"pyramid level {lvl.shape} vs schedule resolution "
                f"{cfg.resolution}"
            )

    history: list = []
    state = None
    for idx, cfg in enumerate(sched.levels):
        level_no = n - idx
        g = min(model_mod.select_g(model.all_eigvals, cfg.phi),
                len(model.eigvals))
        if idx == 0:
            b = _entry_b(model, g, sched.init_b_overrides, cfg.c_b2)
            pose = sched.init_pose
        else:
            b = _transfer_b(state.b, g, cfg, model)
            prev = state.pose
            pose = PoseParams(
                theta=cfg.c_t * prev.theta, s=cfg.c_s * prev.s,
                tau_x=cfg.c_x * prev.tau_x, tau_y=cfg.c_y * prev.tau_y,
            )
        state = make_state(model, b, pose, level=level_no)
        history.append(state)  # entry state, iteration 0
        fieldxy = _level_field(pyramid[level_no - 1], cfg)
        state = iterate_level(state, fieldxy, cfg, model, tol=None,
                              history=history)
    return state.z_image, history


def fit_single_level(img: np.ndarray, model: ShapeModel, cfg: LevelConfig,
                     pose: PoseParams, b=None, tol: float = DEFAULT_TOL):
    """Native-resolution fit with convergence-tolerance stopping."""
    img = np.asarray(img, dtype=float)
    g = min(model_mod.select_g(model.all_eigvals, cfg.phi),
            len(model.eigvals))
    if b is None:
        b = np.zeros(g)
    history: list = []
    state = make_state(model, b, pose, level=1)
    fieldxy = _level_field(img, cfg)
    state = iterate_level(state, fieldxy, cfg, model, tol=tol,
                          history=history)
    return state.z_image, history


def _fill_polygon(mask: np.ndarray, poly: np.ndarray):
    """Even-odd scanline fill of one polygon into a boolean mask.

    Pixel (r, c) is set when its center (c+0.5, r+0.5) is inside; edges
    use half-open vertical intervals so shared vertices count once.
    """
    h, w = mask.shape
    x0 = poly[:, 0]
    y0 = poly[:, 1]
    x1 = np.roll(x0, -1)
    y1 = np.roll(y0, -1)
    keep = y0 != y1
    x0, y0, x1, y1 = x0[keep], y0[keep], x1[keep], y1[keep]
    if len(x0) == 0:
        return
    ylo = np.minimum(y0, y1)
    yhi = np.maximum(y0, y1)
    r_min = max(0, int(np.ceil(ylo.min() - 0.5)))
    r_max = min(h - 1, int(np.ceil(yhi.max() - 0.5)) - 1)
    for r in range(r_min, r_max + 1):
        y = r + 0.5
        hit = (ylo <= y) & (y < yhi)
        if not hit.any():
            continue
        xs = x0[hit] + (y - y0[hit]) * (x1[hit] - x0[hit]) / (y1[hit] - y0[hit])
        xs.sort()
        for xa, xb in zip(xs[0::2], xs[1::2]):
            ca = max(0, int(np.ceil(xa - 0.5)))
            cb = min(w - 1, int(np.ceil(xb - 0.5)) - 1)
            if cb >= ca:
                mask[r, ca:cb + 1] ^= True


def rasterize(shape, dims, cfg: spline.SplineConfig | None = None
              ) -> np.ndarray:
    """Filled binary mask of a closed contour (or several parts).

    Accepts a ControlShape (sampled densely with cfg) or an already
    sampled polygon as an (n, 2) or flat array. Parts fill independently
    and combine by OR (disjoint anatomy), each with the even-odd rule.
    """
    w, h = dims
    mask = np.zeros((h, w), dtype=bool)
    if isinstance(shape, spline.ControlShape):
        if shape.topology != spline.CLOSED:
            raise OpenContour("rasterize needs a closed contour")
        cfg = cfg or spline.SplineConfig()
        polys = spline.sample_parts(shape, cfg)
    else:
        pts = np.asarray(shape, dtype=float)
        if pts.ndim == 1:
            pts = align.as_points(pts)
        polys = [pts]
    out = np.zeros((h, w), dtype=bool)
    for poly in polys:
        poly = np.asarray(poly, dtype=float)
        if len(poly) >= 2 and np.allclose(poly[0], poly[-1]):
            poly = poly[:-1]
        if len(poly) < 3:
            continue
        mask[:] = False
        _fill_polygon(mask, poly)
        out |= mask
    return out
