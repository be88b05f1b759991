"""Deterministic synthetic blob corpus for desk-scale end-to-end runs.

Each sample is a smooth closed blob: eight master points at fixed polar
angles whose radii follow a low-order harmonic model with random
coefficients. The rendered image is a soft-edged bright blob on a dark
background with mild Gaussian noise; the ground-truth mask is the exact
rasterization of the generating contour.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import fileio, image, spline
from .align import PoseParams
from .engine import LevelConfig, PyramidSchedule, rasterize
from .spline import CLOSED, ControlShape, SplineConfig

DEFAULT_RESOLUTION = 128
DEFAULT_MASTERS = 8
DEFAULT_EPSILON = 1

# Harmonic radius model: r(theta) = R0 (1 + a1 cos + a2 sin + a3 cos 2t).
_COEFF_SD = (0.12, 0.09, 0.06)
_BASE_RADIUS_FRAC = 0.28
_RADIUS_SD_FRAC = 0.05
_CENTER_SD_FRAC = 0.022
_ROTATION_SD = 0.08
_NOISE_SD = 0.015
_BG, _FG = 0.2, 0.8


def blob_masters(rng: np.random.Generator, resolution: int,
                 n_masters: int = DEFAULT_MASTERS) -> ControlShape:
    """One random blob contour as a closed masters-only shape."""
    r0 = _BASE_RADIUS_FRAC * resolution * (1 + _RADIUS_SD_FRAC * rng.standard_normal())
    a1, a2, a3 = (sd * rng.standard_normal() for sd in _COEFF_SD)
    rot = _ROTATION_SD * rng.standard_normal()
    cx = resolution / 2 + _CENTER_SD_FRAC * resolution * rng.standard_normal()
    cy = resolution / 2 + _CENTER_SD_FRAC * resolution * rng.standard_normal()
    angles = 2 * np.pi * np.arange(n_masters) / n_masters + rot
    radii = r0 * (1 + a1 * np.cos(angles) + a2 * np.sin(angles)
                  + a3 * np.cos(2 * angles))
    pts = np.stack([cx + radii * np.cos(angles),
                    cy + radii * np.sin(angles)], axis=1)
    return ControlShape(
        points=pts, masters=np.ones(n_masters, dtype=bool),
        topology=CLOSED, parts=[(0, n_masters)],
    )


def render_blob(shape: ControlShape, resolution: int,
                rng: np.random.Generator, config: SplineConfig):
    """(image, truth mask) for one blob contour."""
    truth = rasterize(shape, (resolution, resolution), config)
    img = np.where(truth, _FG, _BG)
    img = image.smooth5(img)
    img = img + _NOISE_SD * rng.standard_normal(img.shape)
    return np.clip(img, 0.0, 1.0), truth


def blob_schedule(resolution: int = DEFAULT_RESOLUTION,
                  levels: int = 3) -> PyramidSchedule:
    """Coarse-to-fine schedule sized for the blob corpus.

    Forces on the soft synthetic edges are weak, so the gain psi runs
    high and b carries over undamped (c_b = 1) between levels.
    """
    coarse_res = resolution >> (levels - 1)
    configs = [LevelConfig(resolution=coarse_res, q=40, phi=0.70,
                           psi=6.0, mu=0.15)]
    phis = [0.85, 0.95, 0.97, 0.98]
    qs = [60, 80, 90, 100]
    psis = [4.0, 3.0, 3.0, 3.0]
    for k in range(1, levels):
        configs.append(LevelConfig(
            resolution=coarse_res << k,
            q=qs[min(k - 1, len(qs) - 1)],
            phi=phis[min(k - 1, len(phis) - 1)],
            c_t=0.2, c_s=2.0, c_x=2.0, c_y=2.0, c_b=1.0,
            psi=psis[min(k - 1, len(psis) - 1)], mu=0.15,
        ))
    init_scale = _BASE_RADIUS_FRAC * coarse_res / 0.9
    pose = PoseParams(theta=0.0, s=init_scale,
                      tau_x=coarse_res / 2, tau_y=coarse_res / 2)
    return PyramidSchedule(levels=tuple(configs), init_pose=pose)


def generate(out_dir, seed: int, count: int,
             resolution: int = DEFAULT_RESOLUTION,
             n_masters: int = DEFAULT_MASTERS,
             epsilon: int = DEFAULT_EPSILON) -> dict:
    """Write a full corpus to out_dir; returns its meta record.

    Layout: shapes/shape_NNN.json, images/image_NNN.png,
    truths/truth_NNN.png, schedule.json, meta.json. The first half of
    the samples is the training split, the second half the test split.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    out = Path(out_dir)
    for sub in ("shapes", "images", "truths"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    config = SplineConfig()
    names = []
    for i in range(count):
        shape = blob_masters(rng, resolution, n_masters)
        img, truth = render_blob(shape, resolution, rng, config)
        stem = f"{i:03d}"
        fileio.write_shape(out / "shapes" / f"shape_{stem}.json",
                           shape, config, epsilon)
        fileio.save_image(out / "images" / f"image_{stem}.png", img)
        fileio.save_mask(out / "truths" / f"truth_{stem}.png", truth)
        names.append(stem)
    sched = blob_schedule(resolution)
    fileio.write_schedule(out / "schedule.json", sched)
    half = count // 2
    meta = {
        "format": "splineseg-corpus",
        "version": fileio.FORMAT_VERSION,
        "seed": int(seed),
        "count": int(count),
        "resolution": int(resolution),
        "masters": int(n_masters),
        "epsilon": int(epsilon),
        "alpha": config.alpha,
        "rho": config.rho,
        "train": names[:half],
        "test": names[half:],
    }
    (out / "meta.json").write_text(fileio.dumps_canonical(meta),
                                   encoding="utf-8")
    return meta
