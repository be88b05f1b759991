"""Text file formats (shapes, models, schedules, manifests) and raster IO.

All structured artifacts are JSON with sorted keys, two-space indent and
a trailing newline, so writes are canonical and read-write round-trips
are byte-identical. Floats rely on JSON shortest-repr encoding, which is
lossless for doubles.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
from PIL import Image

from .align import PoseParams
from .engine import LevelConfig, PyramidSchedule
from .model import ShapeModel
from .spline import ControlShape, SplineConfig, SplineMeta
from .errors import DimensionMismatch

SHAPE_FORMAT = "splineseg-shape"
MODEL_FORMAT = "splineseg-model"
SCHEDULE_FORMAT = "splineseg-schedule"
MANIFEST_FORMAT = "splineseg-manifest"
FORMAT_VERSION = 1

ORTHONORMALITY_TOL = 1e-6


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write_text(path, text: str):
    Path(path).write_text(text, encoding="utf-8")


def _read_json(path, expected_format: str) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict) or data.get("format") != expected_format:
        raise ValueError(f"{path}: expected a {expected_format} file")
    if data.get("version") != FORMAT_VERSION:
        raise ValueError(
            f"{path}: unsupported version {data.get('version')!r}"
        )
    return data


# -- shapes -----------------------------------------------------------------

def shape_payload(shape: ControlShape, config: SplineConfig,
                  epsilon: int = 0) -> dict:
    masters = shape.master_shape() if not shape.masters.all() else shape
    return {
        "format": SHAPE_FORMAT,
        "version": FORMAT_VERSION,
        "topology": masters.topology,
        "alpha": config.alpha,
        "rho": config.rho,
        "epsilon": int(epsilon),
        "parts": [[int(s), int(e)] for s, e in masters.parts],
        "points": [[float(x), float(y)] for x, y in masters.points],
    }


def write_shape(path, shape: ControlShape, config: SplineConfig,
                epsilon: int = 0):
    _write_text(path, dumps_canonical(shape_payload(shape, config, epsilon)))


def read_shape(path):
    """Returns (masters-only ControlShape, SplineConfig, epsilon)."""
    data = _read_json(path, SHAPE_FORMAT)
    points = np.asarray(data["points"], dtype=float)
    parts = [tuple(p) for p in data["parts"]]
    shape = ControlShape(
        points=points,
        masters=np.ones(len(points), dtype=bool),
        topology=data["topology"],
        parts=parts,
    )
    config = SplineConfig(alpha=float(data["alpha"]), rho=float(data["rho"]))
    return shape, config, int(data["epsilon"])


# -- models -----------------------------------------------------------------

def model_payload(model: ShapeModel) -> dict:
    if model.meta is None:
        raise ValueError("model has no spline metadata to persist")
    meta = model.meta
    return {
        "format": MODEL_FORMAT,
        "version": FORMAT_VERSION,
        "spline": {
            "alpha": meta.alpha,
            "rho": meta.rho,
            "epsilon": meta.epsilon,
            "topology": meta.topology,
            "master_counts": list(meta.master_counts),
        },
        "mean": [float(v) for v in model.mean],
        "eigenvalues": [float(v) for v in model.all_eigvals],
        "modes": [[float(v) for v in row] for row in model.modes],
        "weights": [float(v) for v in model.weights],
        "training": {
            "samples": int(model.samples),
            "phi": float(model.phi),
            "g": int(model.g),
        },
    }


def write_model(path, model: ShapeModel):
    _write_text(path, dumps_canonical(model_payload(model)))


def read_model(path) -> ShapeModel:
    data = _read_json(path, MODEL_FORMAT)
    sp = data["spline"]
    meta = SplineMeta(
        alpha=float(sp["alpha"]), rho=float(sp["rho"]),
        epsilon=int(sp["epsilon"]), topology=sp["topology"],
        master_counts=tuple(int(c) for c in sp["master_counts"]),
    )
    mean = np.asarray(data["mean"], dtype=float)
    modes = np.asarray(data["modes"], dtype=float)
    if modes.ndim != 2 or modes.shape[0] != len(mean):
        raise ValueError(f"{path}: mode matrix does not match mean length")
    gram = modes.T @ modes
    if np.abs(gram - np.eye(modes.shape[1])).max() > ORTHONORMALITY_TOL:
        raise ValueError(f"{path}: mode vectors are not orthonormal")
    all_eigvals = np.asarray(data["eigenvalues"], dtype=float)
    retained = modes.shape[1]
    return ShapeModel(
        mean=mean,
        modes=modes,
        eigvals=all_eigvals[:retained].copy(),
        all_eigvals=all_eigvals,
        g=int(data["training"]["g"]),
        phi=float(data["training"]["phi"]),
        weights=np.asarray(data["weights"], dtype=float),
        meta=meta,
        samples=int(data["training"]["samples"]),
    )


# -- schedules --------------------------------------------------------------

def _level_payload(cfg: LevelConfig) -> dict:
    return {
        "resolution": cfg.resolution,
        "q": cfg.q,
        "phi": cfg.phi,
        "median_kernel": list(cfg.median_kernel) if cfg.median_kernel else None,
        "c_t": cfg.c_t, "c_s": cfg.c_s, "c_x": cfg.c_x, "c_y": cfg.c_y,
        "c_b": cfg.c_b, "c_b2": cfg.c_b2,
        "psi": cfg.psi,
        "mu": cfg.mu,
        "d_max_factor": cfg.d_max_factor,
    }


def schedule_payload(sched: PyramidSchedule) -> dict:
    pose = sched.init_pose
    return {
        "format": SCHEDULE_FORMAT,
        "version": FORMAT_VERSION,
        "init_pose": {
            "theta": pose.theta, "s": pose.s,
            "tau_x": pose.tau_x, "tau_y": pose.tau_y,
        },
        "init_b": {str(l): float(c)
                   for l, c in sorted(sched.init_b_overrides.items())},
        "levels": [_level_payload(cfg) for cfg in sched.levels],
    }


def write_schedule(path, sched: PyramidSchedule):
    _write_text(path, dumps_canonical(schedule_payload(sched)))


def read_schedule(path) -> PyramidSchedule:
    data = _read_json(path, SCHEDULE_FORMAT)
    levels = []
    for lv in data["levels"]:
        kernel = lv.get("median_kernel")
        levels.append(LevelConfig(
            resolution=int(lv["resolution"]),
            q=int(lv["q"]),
            phi=float(lv["phi"]),
            median_kernel=tuple(kernel) if kernel else None,
            c_t=lv.get("c_t"), c_s=lv.get("c_s"),
            c_x=lv.get("c_x"), c_y=lv.get("c_y"),
            c_b=lv.get("c_b"), c_b2=lv.get("c_b2"),
            psi=float(lv.get("psi", 1.0)),
            mu=float(lv.get("mu", 0.1)),
            d_max_factor=float(lv.get("d_max_factor", 2.0)),
        ))
    ip = data["init_pose"]
    pose = PoseParams(theta=float(ip["theta"]), s=float(ip["s"]),
                      tau_x=float(ip["tau_x"]), tau_y=float(ip["tau_y"]))
    overrides = {int(l): float(c) for l, c in data.get("init_b", {}).items()}
    return PyramidSchedule(levels=tuple(levels), init_pose=pose,
                           init_b_overrides=overrides)


# -- rasters ----------------------------------------------------------------

_CHANNELS = {"r": 0, "red": 0, "g": 1, "green": 1, "b": 2, "blue": 2}


def load_image(path, channel: str | None = None) -> np.ndarray:
    """Grayscale [0, 1] float image from an 8- or 16-bit raster file.

    Color inputs need an explicit channel name (red/green/blue).
    """
    with Image.open(path) as im:
        if im.mode in ("L", "P"):
            arr = np.asarray(im.convert("L"), dtype=float) / 255.0
        elif im.mode in ("I", "I;16", "I;16B", "I;16L"):
            arr = np.asarray(im, dtype=float) / 65535.0
        elif im.mode in ("RGB", "RGBA"):
            if channel is None:
                raise ValueError(
                    f"{path}: color image needs a channel selection "
                    "(red, green or blue)"
                )
            idx = _CHANNELS.get(channel.lower())
            if idx is None:
                raise ValueError(f"unknown channel {channel!r}")
            arr = np.asarray(im.convert("RGB"), dtype=float)[:, :, idx] / 255.0
        else:
            raise ValueError(f"{path}: unsupported image mode {im.mode}")
    return np.clip(arr, 0.0, 1.0)


def save_image(path, arr: np.ndarray):
    data = np.clip(np.asarray(arr, dtype=float), 0.0, 1.0)
    Image.fromarray(np.round(data * 255.0).astype(np.uint8), mode="L").save(path)


def load_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L")) > 127


def save_mask(path, mask: np.ndarray):
    mask = np.asarray(mask).astype(bool)
    Image.fromarray((mask * np.uint8(255)), mode="L").save(path)


def require_same_dims(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise DimensionMismatch(f"dims differ: {a.shape} vs {b.shape}")


# -- manifests --------------------------------------------------------------

def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, entries: dict):
    payload = {"format": MANIFEST_FORMAT, "version": FORMAT_VERSION}
    payload.update(entries)
    _write_text(path, dumps_canonical(payload))
