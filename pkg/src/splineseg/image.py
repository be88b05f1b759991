"""Image preprocessing, gradient-vector-flow fields and image pyramids.

Images are plain (h, w) float arrays with intensities in [0, 1], indexed
[row, col]. Continuous coordinates are (x, y) with x along columns and the
pixel (r, c) centered at (c + 0.5, r + 0.5).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import Divergence, KernelTooLarge, TooManyLevels

# Binomial 5-tap smoothing kernel used between pyramid levels.
_PYRAMID_KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def median_filter(img: np.ndarray, kernel_w: int, kernel_h: int) -> np.ndarray:
    """Median filter with replicate-padded borders.

    Even kernels have no central pixel; the window is anchored so the
    output pixel sits at offset ceil(k/2) - 1, i.e. the top-left pixel of
    the central 2x2 block. Even pixel counts take the mean of the two
    middle values.
    """
    img = np.asarray(img, dtype=float)
    h, w = img.shape
    if kernel_w < 1 or kernel_h < 1:
        raise ValueError("kernel dims must be >= 1")
    if kernel_w > w or kernel_h > h:
        raise KernelTooLarge(
            f"{kernel_w}x{kernel_h} kernel exceeds {w}x{h} image"
        )
    top = (kernel_h + 1) // 2 - 1
    left = (kernel_w + 1) // 2 - 1
    padded = np.pad(
        img,
        ((top, kernel_h - 1 - top), (left, kernel_w - 1 - left)),
        mode="edge",
    )
    windows = sliding_window_view(padded, (kernel_h, kernel_w))
    return np.median(windows, axis=(-2, -1))


def gradient(img: np.ndarray):
    """(gx, gy): central differences inside, one-sided at the borders."""
    gy, gx = np.gradient(np.asarray(img, dtype=float))
    return gx, gy


def edge_map(img: np.ndarray, median_kernel=None) -> np.ndarray:
    """Gradient-magnitude edge map, optionally median-filtered first."""
    img = np.asarray(img, dtype=float)
    if median_kernel is not None:
        kw, kh = median_kernel
        img = median_filter(img, kw, kh)
    gx, gy = gradient(img)
    return np.hypot(gx, gy)


@dataclass
class VectorField:
    """Diffused edge-force field (u, v) plus the edge map that drove it."""

    u: np.ndarray
    v: np.ndarray
    fe: np.ndarray
    mu: float
    iterations_run: int = 0
    final_residual: float = 0.0
    energies: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def shape(self):
        return self.u.shape


def _laplacian(a: np.ndarray) -> np.ndarray:
    p = np.pad(a, 1, mode="edge")
    return (p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:]) - 4.0 * a


def field_energy(u, v, fx, fy, weight, mu) -> float:
    """Discrete field functional: smoothness (forward differences) plus
    the edge-weighted data residual. The descent step in gvf() is its
    exact negative gradient, so this is what must decrease."""
    smooth = 0.0
    for a in (u, v):
        smooth += np.sum(np.diff(a, axis=0) ** 2) + np.sum(np.diff(a, axis=1) ** 2)
    data = np.sum(weight * ((u - fx) ** 2 + (v - fy) ** 2))
    return float(mu * smooth + data)


def gvf(fe: np.ndarray, mu: float = 0.1, max_iter: int = 200,
        tol: float = 1e-4, dt: float = None,
        init: tuple = None) -> VectorField:
    """Diffuse the edge-map gradient into a dense vector field.

    Runs explicit gradient descent on the regularized functional with
    step dt = 1/(4*mu + 1) unless overridden, Jacobi style (each sweep
    reads only the previous iterate). Starts from the raw edge-map
    gradient (or the warm-start pair init=(u, v)) and stops when the
    largest component update drops below tol. Raises Divergence if the
    discrete energy rises on two consecutive sweeps.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    fe = np.asarray(fe, dtype=float)
    fx, fy = gradient(fe)
    weight = fx**2 + fy**2
    if init is None:
        u = fx.copy()
        v = fy.copy()
    else:
        u = np.array(init[0], dtype=float)
        v = np.array(init[1], dtype=float)
        if u.shape != fe.shape or v.shape != fe.shape:
            raise ValueError("warm-start field dims must match the edge map")
    if dt is None:
        dt = 1.0 / (4.0 * mu + 1.0)

    energies = [field_energy(u, v, fx, fy, weight, mu)]
    residual = 0.0
    rising = 0
    iterations = 0
    for iterations in range(1, max_iter + 1):
        u_new = u + dt * (mu * _laplacian(u) - weight * (u - fx))
        v_new = v + dt * (mu * _laplacian(v) - weight * (v - fy))
        residual = max(
            float(np.abs(u_new - u).max()), float(np.abs(v_new - v).max())
        )
        u, v = u_new, v_new
        energy = field_energy(u, v, fx, fy, weight, mu)
        rising = rising + 1 if energy > energies[-1] else 0
        energies.append(energy)
        if rising >= 2:
            raise Divergence(
                f"field energy rose twice in a row at sweep {iterations}"
            )
        if residual < tol:
            break
    return VectorField(
        u=u, v=v, fe=fe, mu=mu,
        iterations_run=iterations,
        final_residual=residual,
        energies=np.asarray(energies),
    )


def gvf_step(field: VectorField, fe: np.ndarray) -> VectorField:
    """One extra descent sweep resumed from a solved field."""
    return gvf(fe, mu=field.mu, max_iter=1, tol=0.0,
               init=(field.u, field.v))


def _smooth_rows(img: np.ndarray) -> np.ndarray:
    p = np.pad(img, ((2, 2), (0, 0)), mode="edge")
    h = img.shape[0]
    out = np.zeros_like(img)
    for i, k in enumerate(_PYRAMID_KERNEL):
        out += k * p[i:i + h, :]
    return out


def smooth5(img: np.ndarray) -> np.ndarray:
    """Separable binomial [1 4 6 4 1]/16 smoothing, edge-replicated."""
    return _smooth_rows(_smooth_rows(np.asarray(img, dtype=float)).T).T


def build_pyramid(img: np.ndarray, levels: int):
    """Smoothed-and-halved image stack, finest first.

    Each coarser level is the binomial-smoothed predecessor subsampled by
    two (dims floor-divided). Raises TooManyLevels once a level would
    fall under 4 pixels on a side.
    """
    img = np.asarray(img, dtype=float)
    if levels < 1:
        raise ValueError("need at least one level")
    pyramid = [img]
    for _ in range(levels - 1):
        cur = pyramid[-1]
        h, w = cur.shape
        if h // 2 < 4 or w // 2 < 4:
            raise TooManyLevels(
                f"level below 4 px: {h}x{w} cannot halve again"
            )
        sm = smooth5(cur)
        pyramid.append(sm[: 2 * (h // 2):2, : 2 * (w // 2):2])
    return pyramid


def bilinear_sample(grid: np.ndarray, x, y):
    """Sample a grid at continuous (x, y), clamping outside the frame.

    Grid values live at pixel centers; coordinates shift by half a pixel
    into index space before interpolation.
    """
    grid = np.asarray(grid, dtype=float)
    h, w = grid.shape
    ix = np.clip(np.asarray(x, dtype=float) - 0.5, 0.0, w - 1.0)
    iy = np.clip(np.asarray(y, dtype=float) - 0.5, 0.0, h - 1.0)
    x0 = np.clip(np.floor(ix).astype(int), 0, w - 2) if w > 1 else np.zeros_like(ix, int)
    y0 = np.clip(np.floor(iy).astype(int), 0, h - 2) if h > 1 else np.zeros_like(iy, int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    tx = ix - x0
    ty = iy - y0
    top = grid[y0, x0] * (1 - tx) + grid[y0, x1] * tx
    bot = grid[y1, x0] * (1 - tx) + grid[y1, x1] * tx
    return top * (1 - ty) + bot * ty


def sample_field(fieldxy: VectorField, x, y):
    """(u, v) components of the field at continuous image coordinates."""
    return (
        bilinear_sample(fieldxy.u, x, y),
        bilinear_sample(fieldxy.v, x, y),
    )


def invert(img: np.ndarray) -> np.ndarray:
    """Photometric negative of a [0, 1] image."""
    return 1.0 - np.asarray(img, dtype=float)
