"""Shape normalization, similarity transforms and least-squares alignment.

Shapes travel as flat vectors [x1 y1 x2 y2 ...]. All functions are pure;
align_set reduces deterministically regardless of caller threading.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateShape, NonConvergence, SingularSystem


@dataclass(frozen=True)
class PoseParams:
    """Similarity pose: rotate by theta, scale by s, then translate."""

    theta: float = 0.0
    s: float = 1.0
    tau_x: float = 0.0
    tau_y: float = 0.0

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError(f"scale must be positive, got {self.s}")

    @property
    def a_x(self) -> float:
        return self.s * math.cos(self.theta)

    @property
    def a_y(self) -> float:
        return self.s * math.sin(self.theta)

    def inverse(self) -> "PoseParams":
        c, s = math.cos(-self.theta), math.sin(-self.theta)
        inv_s = 1.0 / self.s
        return PoseParams(
            theta=-self.theta,
            s=inv_s,
            tau_x=-inv_s * (c * self.tau_x - s * self.tau_y),
            tau_y=-inv_s * (s * self.tau_x + c * self.tau_y),
        )


IDENTITY_POSE = PoseParams()


def as_points(flat: np.ndarray) -> np.ndarray:
    return np.asarray(flat, dtype=float).reshape(-1, 2)


def as_flat(points: np.ndarray) -> np.ndarray:
    return np.asarray(points, dtype=float).reshape(-1)


def normalize(flat: np.ndarray):
    """Center a shape and scale its largest axis deviation to 1.

    Returns (normalized flat shape, centroid, eta) where eta is the
    maximum absolute coordinate deviation from the centroid, so every
    output coordinate lands in [-1, 1] with at least one hitting +-1.
    """
    pts = as_points(flat)
    if len(pts) < 2:
        raise ValueError("need at least two points")
    centroid = pts.mean(axis=0)
    dev = pts - centroid
    eta = float(np.abs(dev).max())
    if eta == 0.0:
        raise DegenerateShape("all points coincide")
    return as_flat(dev / eta), centroid, eta


def transform(flat: np.ndarray, pose: PoseParams) -> np.ndarray:
    """Apply the similarity pose to every point of a flat shape."""
    pts = as_points(flat)
    ax, ay = pose.a_x, pose.a_y
    out = np.empty_like(pts)
    out[:, 0] = pose.tau_x + pts[:, 0] * ax - pts[:, 1] * ay
    out[:, 1] = pose.tau_y + pts[:, 0] * ay + pts[:, 1] * ax
    return as_flat(out)


def rotate_scale(flat: np.ndarray, pose: PoseParams) -> np.ndarray:
    """Rotation and scale of the pose with zero translation."""
    bare = PoseParams(theta=pose.theta, s=pose.s)
    return transform(flat, bare)


def align_pair(target: np.ndarray, source: np.ndarray,
               weights: np.ndarray = None) -> PoseParams:
    """Pose that maps ``source`` onto ``target`` in weighted least squares.

    Solves the 4x4 normal equations for (a_x, a_y, tau_x, tau_y) with
    per-point weights (uniform when omitted). Raises SingularSystem when
    the system is rank-deficient, e.g. all source points coincide.
    """
    tgt = as_points(target)
    src = as_points(source)
    if tgt.shape != src.shape:
        raise ValueError("shapes must hold the same number of points")
    m = len(src)
    w = np.full(m, 1.0 / m) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (m,):
        raise ValueError("weights must provide one value per point")

    sx, sy = src[:, 0], src[:, 1]
    tx, ty = tgt[:, 0], tgt[:, 1]
    chi_s = float(w @ sx)
    gam_s = float(w @ sy)
    chi_t = float(w @ tx)
    gam_t = float(w @ ty)
    z = float(w @ (sx**2 + sy**2))
    wsum = float(w.sum())
    c1 = float(w @ (tx * sx + ty * sy))
    c2 = float(w @ (ty * sx - tx * sy))

    a = np.array(
        [
            [chi_s, -gam_s, wsum, 0.0],
            [gam_s, chi_s, 0.0, wsum],
            [z, 0.0, chi_s, gam_s],
            [0.0, z, -gam_s, chi_s],
        ]
    )
    rhs = np.array([chi_t, gam_t, c1, c2])
    try:
        sol = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("alignment system is singular") from exc
    if not np.all(np.isfinite(sol)):
        raise SingularSystem("alignment system is ill-conditioned")
    ax, ay, taux, tauy = sol
    s = math.hypot(ax, ay)
    if s < 1e-12:
        raise SingularSystem("alignment collapsed to zero scale")
    return PoseParams(theta=math.atan2(ay, ax), s=s, tau_x=taux, tau_y=tauy)


def point_weights(shapes) -> np.ndarray:
    """Per-point weights favouring points with stable pairwise distances.

    For each point the inter-point distances to every other point are
    measured in every shape; the weight is the reciprocal of the summed
    distance variances, normalized to sum to 1. Falls back to uniform
    weights when any variance sum is zero (e.g. identical shapes).
    """
    stack = np.stack([as_points(s) for s in shapes])  # (r, m, 2)
    r, m, _ = stack.shape
    if r < 2:
        raise ValueError("need at least two shapes")
    diff = stack[:, :, None, :] - stack[:, None, :, :]
    dist = np.linalg.norm(diff, axis=-1)          # (r, m, m)
    var = dist.var(axis=0)                        # population variance across shapes
    sums = var.sum(axis=1)                        # (m,)
    if np.any(sums == 0.0):
        return np.full(m, 1.0 / m)
    omega = 1.0 / sums
    return omega / omega.sum()


def align_set(shapes, tol: float = 1e-6, max_iter: int = 100,
              history: list | None = None):
    """Mutually align a set of equal-length shapes.

    One shape seeds the process as alignment basis; afterwards the loop
    recomputes the mean, re-normalizes it to pin the frame, and re-aligns
    every shape to it until the mean stops moving (max coordinate change
    below tol). Returns (aligned list, mean shape, point weights).

    When history is a list, the per-iteration mean deltas are appended to
    it (diagnostic; the list is also filled on the NonConvergence path).
    """
    flats = [as_flat(s) for s in shapes]
    if len(flats) < 2:
        raise ValueError("need at least two shapes to align")
    lengths = {len(f) for f in flats}
    if len(lengths) != 1:
        raise ValueError("shapes must share the same point count")
    w = point_weights(flats)

    basis = flats[0]
    aligned = [transform(f, align_pair(basis, f, w)) for f in flats]
    prev_mean = None
    delta = None
    for _ in range(max_iter):
        mean, _, _ = normalize(np.mean(aligned, axis=0))
        if prev_mean is not None:
            delta = float(np.abs(mean - prev_mean).max())
            if history is not None:
                history.append(delta)
            if delta < tol:
                return aligned, mean, w
        aligned = [transform(f, align_pair(mean, f, w)) for f in aligned]
        prev_mean = mean
    raise NonConvergence(
        f"alignment loop did not settle in {max_iter} iterations",
        last_delta=delta,
    )
