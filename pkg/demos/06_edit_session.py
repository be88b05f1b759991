"""
Edit sessions: correcting a contour and scoring the operator's work
===================================================================

A fitted contour is rarely the last word; an operator drags master
points until the outline is right. This script simulates such a session:
it segments one image, nudges the worst masters onto the true boundary,
tracks which spline segments each drag invalidates, and computes the
manipulation / effort / efficiency metrics from the recorded event log.
"""

import tempfile
from pathlib import Path

import numpy as np

from splineseg import corpus, engine, fileio, metrics, pipeline, spline

workdir = Path(tempfile.mkdtemp(prefix="splineseg_edit_"))

# -- a contour to correct ---------------------------------------------------

meta = corpus.generate(workdir, seed=33, count=6, resolution=128)
shapes = [fileio.read_shape(workdir / "shapes" / f"shape_{s}.json")[0]
          for s in meta["train"]]
config = spline.SplineConfig(alpha=meta["alpha"], rho=meta["rho"])
model = pipeline.build_model(shapes, config, meta["epsilon"], phi=0.95)
sched = fileio.read_schedule(workdir / "schedule.json")

stem = meta["test"][0]
img = fileio.load_image(workdir / "images" / f"image_{stem}.png")
truth = fileio.load_mask(workdir / "truths" / f"truth_{stem}.png")
dims = (img.shape[1], img.shape[0])

flat, _ = engine.run_pyramid(img, model, sched)
contour = model.meta.control_shape(flat).master_shape()
theta_before = metrics.overlap(engine.rasterize(contour, dims, config),
                               truth).theta
print(f"automatic fit on image_{stem}: theta={theta_before:.4f}")

# -- where should each master go? -------------------------------------------
# Cast a ray from the contour centroid through each master and find the
# truth boundary along it. The distance to that crossing says how far
# off each master sits.


def boundary_target(mask, center, point):
    ts = np.linspace(0.05, 2.0, 400)
    best = center
    for t in ts:
        x, y = center + t * (point - center)
        c, r = int(round(x)), int(round(y))
        if not (0 <= r < mask.shape[0] and 0 <= c < mask.shape[1]):
            break
        if mask[r, c]:
            best = np.array([x, y])
    return best


center = contour.points.mean(axis=0)
targets = np.array([boundary_target(truth, center, p)
                    for p in contour.points])
errors = np.linalg.norm(targets - contour.points, axis=1)
order = np.argsort(errors)[::-1]
print("masters ranked by boundary error (px):",
      np.round(errors[order], 2))

# -- the edit loop ----------------------------------------------------------
# Drag the three worst masters, one every two seconds. Each move only
# invalidates the spline segments whose control window contains the
# moved point; everything else keeps its cached samples. That locality
# is what makes live preview cheap.

n = len(contour.points)
session = metrics.EditSession(theta_before=theta_before)
t_ms = 5000.0
for idx in order[:3]:
    before = [spline.sample_segment(contour.points, contour.topology, s, config)
              for s in range(n)]
    old = contour.points[idx].copy()
    contour.points[idx] = targets[idx]
    session.record_move(t_ms, int(idx), old, targets[idx])
    t_ms += 2000.0

    dirty = spline.segments_touching(n, contour.topology, int(idx))
    after = [spline.sample_segment(contour.points, contour.topology, s, config)
             for s in range(n)]
    changed = [s for s in range(n) if not np.array_equal(before[s], after[s])]
    print(f"  moved master {idx} by {errors[idx]:.2f}px -> "
          f"segments {changed} resampled (predicted {dirty})")

# -- scoring the session ----------------------------------------------------

theta_after = metrics.overlap(engine.rasterize(contour, dims, config),
                              truth).theta
session.theta_after = theta_after
session.record_export(t_ms + 4000.0)

print(f"\ntheta {theta_before:.4f} -> {theta_after:.4f} "
      f"after {session.moves} moves in {session.duration:.1f}s")
print(f"manipulation M = {metrics.manipulation(session):.4f} s/move")
print(f"effort       E = {metrics.effort(session):.4f}")
print(f"efficiency   Y = {metrics.efficiency(session):+.4f} "
      f"(overlap % gained per unit effort)")

# -- the event log ----------------------------------------------------------
# Sessions serialize to a line-delimited log with full float precision,
# so any later analysis reproduces the metrics bit for bit.

log = metrics.write_event_log(session)
print("\nevent log:")
print("  " + "\n  ".join(log.strip().splitlines()))

replayed = metrics.read_event_log(log)
same = (metrics.manipulation(replayed) == metrics.manipulation(session)
        and metrics.effort(replayed) == metrics.effort(session)
        and metrics.efficiency(replayed) == metrics.efficiency(session))
print(f"replayed metrics identical: {same}")
