"""Catmull-Rom curve evaluation with selectable knot parameterization.

Curves interpolate their control points. Knot spacing follows
``|p_{i+1} - p_i|^alpha`` so alpha=0 gives uniform, alpha=0.5 centripetal
and alpha=1 chordal parameterization. Everything here is a pure function
over immutable inputs and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DuplicateConsecutivePoints,
    ParameterOutOfRange,
    TopologyError,
)

OPEN = "open"
CLOSED = "closed"

# Basis matrix of the classic uniform Catmull-Rom form (t in [0, 1]).
_UNIFORM_BASIS = 0.5 * np.array(
    [
        [-1.0, 3.0, -3.0, 1.0],
        [2.0, -5.0, 4.0, -1.0],
        [-1.0, 0.0, 1.0, 0.0],
        [0.0, 2.0, 0.0, 0.0],
    ]
)


@dataclass(frozen=True)
class SplineConfig:
    """Evaluation settings shared by sampling, expansion and rasterization.

    alpha: knot parameterization exponent in [0, 1] (0.5 = centripetal).
    rho: endpoint phantom distance as a fraction of the adjacent chord,
        in (0, 0.5].
    samples_per_segment: polyline density used by sample_curve.
    inward_end_phantom: if True the trailing phantom folds back toward the
        curve instead of extending past the final point (see
        extend_endpoints).
    """

    alpha: float = 0.5
    rho: float = 0.5
    samples_per_segment: int = 32
    inward_end_phantom: bool = False

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 < self.rho <= 0.5:
            raise ValueError(f"rho must be in (0, 0.5], got {self.rho}")
        if self.samples_per_segment < 1:
            raise ValueError("samples_per_segment must be >= 1")


@dataclass
class ControlShape:
    """Ordered 2-D control points with master/slave roles.

    points: (n, 2) float array.
    masters: (n,) bool array, True where the point is a master.
    topology: "open" or "closed" (applies to every part).
    parts: contiguous [start, stop) point-index ranges, one per contour
        part. Multi-part shapes (e.g. paired organs) concatenate their
        parts into one point list.
    """

    points: np.ndarray
    masters: np.ndarray = None
    topology: str = CLOSED
    parts: list = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 2:
            raise ValueError("points must be an (n, 2) array")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("control points must be finite")
        n = len(self.points)
        if self.masters is None:
            self.masters = np.ones(n, dtype=bool)
        self.masters = np.asarray(self.masters, dtype=bool)
        if self.masters.shape != (n,):
            raise ValueError("masters flag array must match point count")
        if self.topology not in (OPEN, CLOSED):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.parts is None:
            self.parts = [(0, n)]
        self.parts = [(int(a), int(b)) for a, b in self.parts]
        self._check_parts()

    def _check_parts(self):
        n = len(self.points)
        expect = 0
        for start, stop in self.parts:
            if start != expect or stop <= start:
                raise ValueError("parts must contiguously partition the points")
            expect = stop
            npts = stop - start
            minimum = 2 if self.topology == OPEN else 3
            if npts < minimum:
                raise ValueError(
                    f"{self.topology} part needs >= {minimum} points, got {npts}"
                )
            pts = self.points[start:stop]
            pairs = _consecutive_pairs(npts, self.topology)
            gaps = np.linalg.norm(pts[pairs[:, 1]] - pts[pairs[:, 0]], axis=1)
            if np.any(gaps == 0.0):
                raise DuplicateConsecutivePoints(
                    "consecutive control points coincide"
                )
            self._check_roles(start, stop)
        if expect != n:
            raise ValueError("parts must cover every point")

    def _check_roles(self, start, stop):
        # Masters must alternate with uniform slave runs: M S^e M S^e ...
        flags = self.masters[start:stop]
        if flags.all():
            return
        idx = np.flatnonzero(flags)
        if len(idx) == 0 or idx[0] != 0:
            raise ValueError("each part must begin with a master point")
        runs = np.diff(idx) - 1
        if self.topology == CLOSED:
            runs = np.append(runs, (stop - start) - 1 - idx[-1])
        else:
            if idx[-1] != (stop - start) - 1:
                raise ValueError("open parts must end with a master point")
        if len(runs) and not np.all(runs == runs[0]):
            raise ValueError("slave count between masters must be uniform")

    @property
    def epsilon(self) -> int:
        """Uniform slave count between consecutive masters (0 if none)."""
        idx = np.flatnonzero(self.masters)
        if len(idx) < 2:
            return 0
        return int(idx[1] - idx[0] - 1)

    def master_counts(self):
        return [int(self.masters[a:b].sum()) for a, b in self.parts]

    def master_shape(self) -> "ControlShape":
        """Drop slave points, keeping masters and part structure."""
        counts = self.master_counts()
        bounds = np.cumsum([0] + counts)
        return ControlShape(
            points=self.points[self.masters].copy(),
            topology=self.topology,
            parts=[(bounds[i], bounds[i + 1]) for i in range(len(counts))],
        )


@dataclass(frozen=True)
class SplineMeta:
    """Spline bookkeeping a trained model carries around.

    master_counts holds the number of master points per part; the expanded
    point layout (masters interleaved with epsilon slaves) is derived from
    it, so flat model vectors can be folded back into contours.
    """

    alpha: float = 0.5
    rho: float = 0.5
    epsilon: int = 0
    topology: str = CLOSED
    master_counts: tuple = (0,)

    def config(self, samples_per_segment: int = 32) -> SplineConfig:
        return SplineConfig(
            alpha=self.alpha, rho=self.rho,
            samples_per_segment=samples_per_segment,
        )

    def expanded_counts(self):
        """Points per part once epsilon slaves sit in every master gap."""
        out = []
        for m in self.master_counts:
            gaps = m if self.topology == CLOSED else m - 1
            out.append(m + self.epsilon * gaps)
        return out

    def total_points(self) -> int:
        return sum(self.expanded_counts())

    def layout(self):
        """(masters bool array, part ranges) for the expanded shape."""
        counts = self.expanded_counts()
        bounds = np.cumsum([0] + counts)
        parts = [(int(bounds[i]), int(bounds[i + 1])) for i in range(len(counts))]
        masters = np.zeros(bounds[-1], dtype=bool)
        step = self.epsilon + 1
        for (a, b) in parts:
            masters[a:b:step] = True
        return masters, parts

    def control_shape(self, flat: np.ndarray) -> ControlShape:
        """Fold a flat [x1 y1 x2 y2 ...] vector into a ControlShape."""
        masters, parts = self.layout()
        pts = np.asarray(flat, dtype=float).reshape(-1, 2)
        if len(pts) != len(masters):
            raise ValueError(
                f"flat vector holds {len(pts)} points, layout expects {len(masters)}"
            )
        return ControlShape(points=pts, masters=masters,
                            topology=self.topology, parts=parts)


def _consecutive_pairs(npts, topology):
    i = np.arange(npts if topology == CLOSED else npts - 1)
    return np.stack([i, (i + 1) % npts], axis=1)


def knot_sequence(points: np.ndarray, alpha: float) -> np.ndarray:
    """Knots with t0 = 0 and increments |p_{i+1} - p_i|**alpha.

    Raises DuplicateConsecutivePoints when a zero chord would stall the
    sequence (alpha > 0; with alpha = 0 the increment is 1 regardless).
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        raise ValueError("need at least two points")
    chords = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if alpha > 0.0 and np.any(chords == 0.0):
        raise DuplicateConsecutivePoints("zero chord between consecutive points")
    steps = chords**alpha
    knots = np.empty(len(pts))
    knots[0] = 0.0
    np.cumsum(steps, out=knots[1:])
    return knots


def extend_endpoints(points: np.ndarray, rho: float,
                     inward: bool = False,
                     topology: str = OPEN) -> np.ndarray:
    """Prepend and append phantom points so an open curve reaches its ends.

    The leading phantom is p1 - rho*(p2 - p1). By default the trailing one
    extends symmetrically past the last point, p_m + rho*(p_m - p_{m-1});
    with inward=True it folds back onto the curve instead (p_m - rho*(...)),
    which pinches the final segment.
    """
    if topology == CLOSED:
        raise TopologyError("closed contours wrap; phantom extension is for open curves")
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        raise ValueError("need at least two points to extend")
    first = pts[0] - rho * (pts[1] - pts[0])
    tail = rho * (pts[-1] - pts[-2])
    last = pts[-1] - tail if inward else pts[-1] + tail
    return np.vstack([first, pts, last])


def eval_segment(ctrl: np.ndarray, knots: np.ndarray, t) -> np.ndarray:
    """Evaluate one curve segment at parameter(s) t in [knots[1], knots[2]].

    ctrl is the (4, 2) control window, knots its strictly increasing
    (4,) knot values. Uses the three-level linear-blend pyramid, which
    interpolates ctrl[1] at knots[1] and ctrl[2] at knots[2]. Returns an
    (k, 2) array for array t, a (2,) point for scalar t.
    """
    ctrl = np.asarray(ctrl, dtype=float)
    knots = np.asarray(knots, dtype=float)
    if ctrl.shape != (4, 2) or knots.shape != (4,):
        raise ValueError("expected (4, 2) controls and (4,) knots")
    if np.any(np.diff(knots) <= 0.0):
        raise ValueError("knots must be strictly increasing")
    scalar = np.isscalar(t) or np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    t0, t1, t2, t3 = knots
    slack = 1e-12 * (t3 - t0)
    if np.any(t < t1 - slack) or np.any(t > t2 + slack):
        raise ParameterOutOfRange(
            f"t outside [{t1}, {t2}]"
        )
    tt = t[:, None]
    p0, p1, p2, p3 = ctrl
    l01 = ((t1 - tt) * p0 + (tt - t0) * p1) / (t1 - t0)
    l12 = ((t2 - tt) * p1 + (tt - t1) * p2) / (t2 - t1)
    l23 = ((t3 - tt) * p2 + (tt - t2) * p3) / (t3 - t2)
    l012 = ((t2 - tt) * l01 + (tt - t0) * l12) / (t2 - t0)
    l123 = ((t3 - tt) * l12 + (tt - t1) * l23) / (t3 - t1)
    out = ((t2 - tt) * l012 + (tt - t1) * l123) / (t2 - t1)
    return out[0] if scalar else out


def eval_segment_uniform(ctrl: np.ndarray, t) -> np.ndarray:
    """Uniform Catmull-Rom in matrix form, t in [0, 1] between ctrl[1..2]."""
    ctrl = np.asarray(ctrl, dtype=float)
    scalar = np.isscalar(t) or np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    powers = np.stack([t**3, t**2, t, np.ones_like(t)], axis=1)
    out = powers @ _UNIFORM_BASIS @ ctrl
    return out[0] if scalar else out


def segment_count(npts: int, topology: str) -> int:
    return npts if topology == CLOSED else npts - 1


def segment_controls(points: np.ndarray, topology: str, seg: int,
                     cfg: SplineConfig) -> np.ndarray:
    """(4, 2) control window of segment ``seg`` within one part.

    Closed parts wrap periodically. Open parts use phantom extension for
    the first and last segments.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    nseg = segment_count(n, topology)
    if not 0 <= seg < nseg:
        raise IndexError(f"segment {seg} out of range (0..{nseg - 1})")
    if topology == CLOSED:
        idx = [(seg - 1) % n, seg, (seg + 1) % n, (seg + 2) % n]
        return pts[idx]
    ext = extend_endpoints(pts, cfg.rho, cfg.inward_end_phantom)
    return ext[seg:seg + 4]


def segment_support(npts: int, topology: str, seg: int) -> set:
    """Control-point ordinals whose position influences segment ``seg``.

    Phantom points of open parts are derived from the two nearest real
    points, so the support folds their dependencies in.
    """
    nseg = segment_count(npts, topology)
    if not 0 <= seg < nseg:
        raise IndexError(f"segment {seg} out of range")
    if topology == CLOSED:
        return {(seg + k) % npts for k in (-1, 0, 1, 2)}
    raw = range(seg - 1, seg + 3)
    out = set()
    for i in raw:
        if i < 0:
            out.update({0, 1})           # leading phantom
        elif i >= npts:
            out.update({npts - 2, npts - 1})  # trailing phantom
        else:
            out.add(i)
    return out


def segments_touching(npts: int, topology: str, point: int) -> list:
    """Segments whose support includes ``point``, in index order."""
    return [s for s in range(segment_count(npts, topology))
            if point in segment_support(npts, topology, s)]


def sample_segment(points: np.ndarray, topology: str, seg: int,
                   cfg: SplineConfig, density: int = None) -> np.ndarray:
    """Polyline of one segment, both endpoints included (density+1 samples)."""
    density = cfg.samples_per_segment if density is None else density
    ctrl = segment_controls(points, topology, seg, cfg)
    knots = knot_sequence(ctrl, cfg.alpha)
    ts = np.linspace(knots[1], knots[2], density + 1)
    return eval_segment(ctrl, knots, ts)


def sample_part(points: np.ndarray, topology: str,
                cfg: SplineConfig, density: int = None) -> np.ndarray:
    """Full polyline of one part; joints appear once, closed parts repeat
    the first sample at the end."""
    density = cfg.samples_per_segment if density is None else density
    nseg = segment_count(len(points), topology)
    chunks = []
    for s in range(nseg):
        seg = sample_segment(points, topology, s, cfg, density)
        chunks.append(seg if s == nseg - 1 else seg[:-1])
    return np.vstack(chunks)


def sample_parts(shape: ControlShape, cfg: SplineConfig,
                 density: int = None) -> list:
    return [sample_part(shape.points[a:b], shape.topology, cfg, density)
            for a, b in shape.parts]


def sample_curve(shape: ControlShape, cfg: SplineConfig,
                 density: int = None) -> np.ndarray:
    """Sampled polyline through every control point of every part."""
    return np.vstack(sample_parts(shape, cfg, density))


def expand_shape(shape: ControlShape, epsilon: int,
                 cfg: SplineConfig) -> ControlShape:
    """Insert ``epsilon`` slave points into every master gap.

    Slaves sit at parameters that equally section each knot interval,
    t_i + k/(epsilon+1) * (t_{i+1} - t_i), evaluated on the unexpanded
    curve, so they lie exactly on it. Open parts gain slaves after every
    master except the last; closed parts in every gap including the wrap.
    """
    if not shape.masters.all():
        raise ValueError("shape already holds slave points")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if epsilon == 0:
        return shape
    new_points, new_masters, new_parts = [], [], []
    offset = 0
    fracs = np.arange(1, epsilon + 1) / (epsilon + 1)
    for a, b in shape.parts:
        pts = shape.points[a:b]
        nseg = segment_count(len(pts), shape.topology)
        for s in range(nseg):
            ctrl = segment_controls(pts, shape.topology, s, cfg)
            knots = knot_sequence(ctrl, cfg.alpha)
            ts = knots[1] + fracs * (knots[2] - knots[1])
            new_points.append(pts[s])
            new_points.extend(eval_segment(ctrl, knots, ts))
            new_masters.extend([True] + [False] * epsilon)
        if shape.topology == OPEN:
            new_points.append(pts[-1])
            new_masters.append(True)
        new_parts.append((offset, len(new_points)))
        offset = len(new_points)
    return ControlShape(
        points=np.asarray(new_points, dtype=float),
        masters=np.asarray(new_masters, dtype=bool),
        topology=shape.topology,
        parts=new_parts,
    )
