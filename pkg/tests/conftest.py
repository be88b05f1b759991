"""Shared fixtures: a deterministic corpus, a trained model, a service app."""

from __future__ import annotations

import numpy as np
import pytest

from splineseg import corpus, fileio, pipeline
from splineseg.spline import SplineConfig

CORPUS_SEED = 7
CORPUS_COUNT = 24


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    corpus.generate(out, seed=CORPUS_SEED, count=CORPUS_COUNT)
    return out


@pytest.fixture(scope="session")
def corpus_meta(corpus_dir):
    import json

    return json.loads((corpus_dir / "meta.json").read_text())


@pytest.fixture(scope="session")
def trained_model(corpus_dir, corpus_meta):
    shapes = [
        fileio.read_shape(corpus_dir / "shapes" / f"shape_{s}.json")[0]
        for s in corpus_meta["train"]
    ]
    config = SplineConfig(alpha=corpus_meta["alpha"], rho=corpus_meta["rho"])
    return pipeline.build_model(shapes, config, corpus_meta["epsilon"],
                                phi=0.95)


@pytest.fixture(scope="session")
def corpus_schedule(corpus_dir):
    return fileio.read_schedule(corpus_dir / "schedule.json")


@pytest.fixture(scope="session")
def service_data_dir(tmp_path_factory, trained_model, corpus_schedule):
    data = tmp_path_factory.mktemp("service_data")
    (data / "models").mkdir()
    (data / "schedules").mkdir()
    fileio.write_model(data / "models" / "blob.json", trained_model)
    fileio.write_schedule(data / "schedules" / "blob.json", corpus_schedule)
    return data


def random_closed_masters(rng: np.random.Generator, n: int = 8,
                          spread: float = 10.0) -> np.ndarray:
    """Well-separated random closed control polygon (convex-ish star)."""
    angles = np.sort(rng.uniform(0, 2 * np.pi, n))
    while np.min(np.diff(angles, append=angles[0] + 2 * np.pi)) < 0.15:
        angles = np.sort(rng.uniform(0, 2 * np.pi, n))
    radii = rng.uniform(0.3, 1.0, n) * spread
    return np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
