"""
End to end: synthetic corpus, training, coarse-to-fine segmentation
===================================================================

Generates a small blob corpus on disk, trains the shape model on one
half, and segments the other half with the multi-resolution pyramid,
scoring every result against its ground-truth mask.
"""

import tempfile
from pathlib import Path

import numpy as np

from splineseg import corpus, engine, fileio, metrics, pipeline
from splineseg.spline import SplineConfig

workdir = Path(tempfile.mkdtemp(prefix="splineseg_demo_"))

# -- generate a corpus ------------------------------------------------------
# Ten 128px samples: soft-edged bright blobs with the generating contour
# rasterized as ground truth. The first five are the training split.

meta = corpus.generate(workdir, seed=5, count=10, resolution=128)
print(f"corpus written to {workdir}")
print(f"train split: {meta['train']}")
print(f"test split:  {meta['test']}")

# -- train ------------------------------------------------------------------
# Contours come back as masters-only shapes; build_model expands each
# with the stored epsilon, aligns the set, and trains the eigenmodel.

shapes = [fileio.read_shape(workdir / "shapes" / f"shape_{s}.json")[0]
          for s in meta["train"]]
config = SplineConfig(alpha=meta["alpha"], rho=meta["rho"])
model = pipeline.build_model(shapes, config, meta["epsilon"], phi=0.95)
print(f"\nmodel: {model.n_points} points, {model.samples} samples, "
      f"g={model.g} modes at phi={model.phi}")

# -- segment the test split -------------------------------------------------
# The stored schedule drives a three-level pyramid fit. Theta is the
# overlap TP / (TP + FP + FN) against the ground-truth mask.

sched = fileio.read_schedule(workdir / "schedule.json")
print(f"\nschedule: {sched.n_levels} levels at "
      f"{[c.resolution for c in sched.levels]}")

thetas = []
for stem in meta["test"]:
    img = fileio.load_image(workdir / "images" / f"image_{stem}.png")
    truth = fileio.load_mask(workdir / "truths" / f"truth_{stem}.png")
    contour, history = engine.run_pyramid(img, model, sched)
    mask = engine.rasterize(contour, (img.shape[1], img.shape[0]))
    theta = metrics.overlap(mask, truth).theta
    thetas.append(theta)
    print(f"  {stem}: theta={theta:.4f} ({len(history)} states recorded)")

summary = metrics.summarize(thetas)
print(f"\nmean theta over {summary['count']} test images: "
      f"{summary['mean']:.4f} +- {summary['sd']:.4f} "
      f"(min {summary['min']:.4f})")

# -- inside the fit ---------------------------------------------------------
# The history holds one FitState per iteration, coarse level first.
# Watching the mode budget and pose evolve shows the coarse-to-fine
# handoff: few modes and a rough pose early, full budget at the end.

by_level = {}
for st in history:
    by_level.setdefault(st.level, []).append(st)
print("\nlast fit, per level (level 3 = coarsest):")
for lvl in sorted(by_level, reverse=True):
    states = by_level[lvl]
    last = states[-1]
    print(f"  level {lvl}: {len(states) - 1} iterations, "
          f"g={len(last.b)}, pose s={last.pose.s:.2f} "
          f"tau=({last.pose.tau_x:.1f}, {last.pose.tau_y:.1f})")

# -- folding the result back into a contour ---------------------------------
# The flat result vector becomes an editable ControlShape via the model
# metadata; its masters are what an operator would drag in the editor.

final = model.meta.control_shape(contour)
print(f"\nfinal contour: {len(final.points)} control points, "
      f"{int(final.masters.sum())} masters, topology {final.topology}")
