"""Regenerates spline_vectors.json, the cross-implementation parity set.

The JSON file is a frozen contract: any evaluator (this package, the
browser editor, anything else) must reproduce the stored sample points
within 1e-6. Run this script only when the evaluator contract itself
changes, and bump "revision" so consumers notice.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from splineseg import spline
from splineseg.spline import CLOSED, OPEN, SplineConfig

OUT = Path(__file__).with_name("spline_vectors.json")
N_PARAMS = 7


def window_record(control: np.ndarray, alpha: float) -> dict:
    knots = spline.knot_sequence(control, alpha)
    ts = np.linspace(knots[1], knots[2], N_PARAMS)
    pts = spline.eval_segment(control, knots, ts)
    return {
        "alpha": alpha,
        "control": control.tolist(),
        "knots": knots.tolist(),
        "t": ts.tolist(),
        "points": pts.tolist(),
    }


def contour_record(masters: np.ndarray, topology: str, seg: int,
                   alpha: float, rho: float, density: int) -> dict:
    cfg = SplineConfig(alpha=alpha, rho=rho, samples_per_segment=density)
    pts = spline.sample_segment(masters, topology, seg, cfg)
    return {
        "alpha": alpha,
        "rho": rho,
        "topology": topology,
        "masters": masters.tolist(),
        "segment": seg,
        "density": density,
        "points": pts.tolist(),
    }


def random_window(rng: np.random.Generator, spread: float) -> np.ndarray:
    while True:
        pts = rng.uniform(-spread, spread, size=(4, 2))
        if np.min(np.linalg.norm(np.diff(pts, axis=0), axis=1)) > 1e-3:
            return pts


def closed_star(rng: np.random.Generator, n: int) -> np.ndarray:
    angles = np.sort(rng.uniform(0, 2 * np.pi, n))
    while np.min(np.diff(angles, append=angles[0] + 2 * np.pi)) < 0.2:
        angles = np.sort(rng.uniform(0, 2 * np.pi, n))
    radii = rng.uniform(4.0, 12.0, n)
    return np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)


def main():
    rng = np.random.default_rng(2024)
    segment_eval = []
    for alpha in (0.0, 0.5, 1.0):
        for _ in range(6):
            segment_eval.append(window_record(random_window(rng, 10.0), alpha))
        # uneven chords stress the knot spacing
        base = random_window(rng, 1.0)
        base[3] += (40.0, -25.0)
        segment_eval.append(window_record(base, alpha))
    # collinear window: curve must stay on the line
    collinear = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    for alpha in (0.0, 0.5, 1.0):
        segment_eval.append(window_record(collinear, alpha))

    contour_segments = []
    hexagon = closed_star(rng, 6)
    for seg in (0, 3):
        contour_segments.append(
            contour_record(hexagon, CLOSED, seg, 0.5, 0.25, 8))
    octagon = closed_star(rng, 8)
    contour_segments.append(contour_record(octagon, CLOSED, 5, 0.5, 0.25, 16))
    contour_segments.append(contour_record(octagon, CLOSED, 7, 0.0, 0.25, 8))
    contour_segments.append(contour_record(octagon, CLOSED, 2, 1.0, 0.25, 8))
    open_run = np.cumsum(rng.uniform(-3.0, 3.0, size=(5, 2)), axis=0)
    for seg in (0, 1, 3):        # phantom ends and an interior segment
        contour_segments.append(
            contour_record(open_run, OPEN, seg, 0.5, 0.25, 8))
    contour_segments.append(contour_record(open_run, OPEN, 0, 0.5, 0.4, 8))

    payload = {
        "revision": 1,
        "description": (
            "Parity vectors for independent spline evaluators. Every "
            "implementation must reproduce 'points' within 1e-6 of these "
            "values. 'segment_eval' exercises a single four-point window "
            "(knots included for unit-testing the knot rule); "
            "'contour_segments' exercises window selection on whole "
            "contours, including wrap-around and phantom endpoints."
        ),
        "segment_eval": segment_eval,
        "contour_segments": contour_segments,
    }
    OUT.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {OUT} ({len(segment_eval)} window vectors, "
          f"{len(contour_segments)} contour vectors)")


if __name__ == "__main__":
    main()
