"""Point-distribution model: PCA over aligned shapes plus mode handling.

A trained model is immutable and can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EigenFailure, InsufficientData
from .spline import SplineMeta

# Eigenvalues below this fraction of the largest count as zero and are
# dropped from the mode matrix (they would blow up the Mahalanobis sum).
ZERO_EIGVAL_RTOL = 1e-12
# Absolute floor, scaled by the squared coordinate magnitude: alignment
# arithmetic jitters coordinates by O(1e-12 |x|), so variances below
# (1e-9 |x|)^2 are float noise, not shape variation. Without this floor
# a set of identical shapes run through alignment reports a spectrum of
# ~1e-33 "modes" instead of all zeros.
ZERO_EIGVAL_ATOL = 1e-18


@dataclass(frozen=True)
class ShapeModel:
    """Mean shape, eigenmodes and the metadata needed to use them.

    mean: (2m,) flat mean shape in the normalized model frame.
    modes: (2m, G) orthonormal eigenvector columns, one per retained
        (strictly positive) eigenvalue, descending.
    eigvals: (G,) positive eigenvalues matching the mode columns.
    all_eigvals: full length-2m spectrum (zeros included) so the retained
        mode count can be re-chosen for any variance ratio later.
    g: mode count selected at training time for ``phi``.
    weights: per-point alignment weights from training.
    meta: spline topology/expansion bookkeeping for folding flat vectors
        back into contours.
    """

    mean: np.ndarray
    modes: np.ndarray
    eigvals: np.ndarray
    all_eigvals: np.ndarray
    g: int
    phi: float
    weights: np.ndarray
    meta: SplineMeta = field(default_factory=SplineMeta)
    samples: int = 0

    @property
    def n_points(self) -> int:
        return len(self.mean) // 2

    def modes_for(self, g: int) -> np.ndarray:
        if not 0 <= g <= self.modes.shape[1]:
            raise DimensionMismatch(
                f"model retains {self.modes.shape[1]} modes, asked for {g}"
            )
        return self.modes[:, :g]


def select_g(eigvals: np.ndarray, phi: float) -> int:
    """Smallest mode count whose variance share exceeds ``phi``.

    The denominator is the whole spectrum; zero eigenvalues can never be
    selected because they add nothing to the cumulative sum.
    """
    if not 0.0 < phi < 1.0:
        raise ValueError(f"phi must be in (0, 1), got {phi}")
    vals = np.clip(np.asarray(eigvals, dtype=float), 0.0, None)
    total = vals.sum()
    if total == 0.0:
        return 0
    ratio = np.cumsum(vals) / total
    i = int(np.searchsorted(ratio, phi, side="right"))
    return min(i + 1, int(np.count_nonzero(vals)))


def train(aligned, phi: float, weights: np.ndarray = None,
          meta: SplineMeta = None) -> ShapeModel:
    """Build the model from aligned flat shapes.

    Mean is the arithmetic average; the covariance uses the 1/r estimator
    over the r training shapes. Eigenpairs come from a dense symmetric
    solve, sorted descending, with each eigenvector's sign fixed so its
    largest-magnitude entry is positive (keeps stored models stable
    across solvers).
    """
    data = np.stack([np.asarray(s, dtype=float) for s in aligned])
    r, dim = data.shape
    if r < 2:
        raise InsufficientData(f"need at least 2 shapes, got {r}")
    mean = data.mean(axis=0)
    centered = data - mean
    cov = centered.T @ centered / r
    try:
        vals, vecs = np.linalg.eigh(cov)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure("eigendecomposition failed") from exc
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order]

    # deterministic sign: largest-magnitude entry of each column positive
    flip = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(dim)] < 0
    vecs[:, flip] *= -1.0

    scale = float(np.max(np.abs(data), initial=0.0))
    cutoff = max(ZERO_EIGVAL_RTOL * float(vals[0]),
                 ZERO_EIGVAL_ATOL * scale * scale)
    keep = vals > cutoff
    all_eigvals = np.where(keep, vals, 0.0)
    g = select_g(all_eigvals, phi)
    m = dim // 2
    if weights is None:
        weights = np.full(m, 1.0 / m)
    if meta is None:
        meta = SplineMeta(master_counts=(m,), epsilon=0)
    return ShapeModel(
        mean=mean,
        modes=vecs[:, keep],
        eigvals=vals[keep],
        all_eigvals=all_eigvals,
        g=g,
        phi=phi,
        weights=np.asarray(weights, dtype=float),
        meta=meta,
        samples=r,
    )


def synthesize(model: ShapeModel, b: np.ndarray) -> np.ndarray:
    """Shape for mode vector b: mean + modes @ b (first len(b) modes)."""
    b = np.asarray(b, dtype=float)
    return model.mean + model.modes_for(len(b)) @ b


def project(model: ShapeModel, flat: np.ndarray, g: int = None) -> np.ndarray:
    """Mode vector of a model-frame shape: modes^T (shape - mean)."""
    flat = np.asarray(flat, dtype=float)
    if flat.shape != model.mean.shape:
        raise DimensionMismatch(
            f"shape has length {flat.shape}, model expects {model.mean.shape}"
        )
    g = model.g if g is None else g
    return model.modes_for(g).T @ (flat - model.mean)


def clamp_modes(model: ShapeModel, b: np.ndarray) -> np.ndarray:
    """Clip each coefficient to +-2 standard deviations of its mode."""
    b = np.asarray(b, dtype=float)
    bound = 2.0 * np.sqrt(model.eigvals[: len(b)])
    return np.clip(b, -bound, bound)


def mode_distance(model: ShapeModel, b: np.ndarray) -> float:
    """Mahalanobis-style radius sqrt(sum b_l^2 / lambda_l)."""
    b = np.asarray(b, dtype=float)
    lam = model.eigvals[: len(b)]
    return float(np.sqrt(np.sum(b**2 / lam))) if len(b) else 0.0


def rescale_modes(model: ShapeModel, b: np.ndarray, d_max: float) -> np.ndarray:
    """Shrink b radially when its mode distance exceeds d_max."""
    if not d_max > 0:
        raise ValueError("d_max must be positive")
    b = np.asarray(b, dtype=float)
    d = mode_distance(model, b)
    if d <= d_max:
        return b.copy()
    return b * (d_max / d)
