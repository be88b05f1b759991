/*
 * Client-side mirror of the server's spline evaluator.
 *
 * Only the pieces needed for drag preview live here: knot sequencing,
 * single-segment evaluation, window selection (periodic wrap for closed
 * contours, phantom endpoints for open ones) and the support query that
 * says which segments a moved master invalidates. The server stays
 * authoritative; parity with it is pinned by the shared vector fixtures
 * at 1e-6.
 */

export type Vec2 = [number, number];
export type Topology = 'open' | 'closed';

export interface SplineOptions {
  alpha: number;
  rho: number;
  inwardEndPhantom?: boolean;
}

export class DuplicateConsecutivePoints extends Error {}
export class ParameterOutOfRange extends Error {}
export class TopologyError extends Error {}

const hypot = (dx: number, dy: number): number => Math.sqrt(dx * dx + dy * dy);

/** Knots with t0 = 0 and increments |p_{i+1} - p_i|^alpha. */
export function knotSequence(points: readonly Vec2[], alpha: number): number[] {
  if (points.length < 2) throw new Error('need at least two points');
  const knots = [0];
  for (let i = 1; i < points.length; i++) {
    const chord = hypot(points[i][0] - points[i - 1][0],
                        points[i][1] - points[i - 1][1]);
    if (alpha > 0 && chord === 0) {
      throw new DuplicateConsecutivePoints('zero chord between consecutive points');
    }
    knots.push(knots[i - 1] + Math.pow(chord, alpha));
  }
  return knots;
}

/** Phantom points so an open curve reaches its ends: p1 - rho*(p2 - p1)
 *  in front, and symmetrically past the last point (or folded back with
 *  inward = true). */
export function extendEndpoints(points: readonly Vec2[], rho: number,
                                inward = false): Vec2[] {
  if (points.length < 2) throw new Error('need at least two points to extend');
  const first = points[0];
  const second = points[1];
  const last = points[points.length - 1];
  const beforeLast = points[points.length - 2];
  const lead: Vec2 = [first[0] - rho * (second[0] - first[0]),
                      first[1] - rho * (second[1] - first[1])];
  const tx = rho * (last[0] - beforeLast[0]);
  const ty = rho * (last[1] - beforeLast[1]);
  const trail: Vec2 = inward ? [last[0] - tx, last[1] - ty]
                             : [last[0] + tx, last[1] + ty];
  return [lead, ...points.map((p): Vec2 => [p[0], p[1]]), trail];
}

/** One segment of the three-level linear-blend pyramid, t in
 *  [knots[1], knots[2]]. Interpolates ctrl[1] and ctrl[2] exactly. */
export function evalSegment(ctrl: readonly Vec2[], knots: readonly number[],
                            t: number): Vec2 {
  if (ctrl.length !== 4 || knots.length !== 4) {
    throw new Error('expected 4 controls and 4 knots');
  }
  const [t0, t1, t2, t3] = knots;
  if (!(t1 > t0 && t2 > t1 && t3 > t2)) {
    throw new Error('knots must be strictly increasing');
  }
  const slack = 1e-12 * (t3 - t0);
  if (t < t1 - slack || t > t2 + slack) {
    throw new ParameterOutOfRange(`t outside [${t1}, ${t2}]`);
  }
  const out: Vec2 = [0, 0];
  for (let c = 0; c < 2; c++) {
    const p0 = ctrl[0][c], p1 = ctrl[1][c], p2 = ctrl[2][c], p3 = ctrl[3][c];
    const l01 = ((t1 - t) * p0 + (t - t0) * p1) / (t1 - t0);
    const l12 = ((t2 - t) * p1 + (t - t1) * p2) / (t2 - t1);
    const l23 = ((t3 - t) * p2 + (t - t2) * p3) / (t3 - t2);
    const l012 = ((t2 - t) * l01 + (t - t0) * l12) / (t2 - t0);
    const l123 = ((t3 - t) * l12 + (t - t1) * l23) / (t3 - t1);
    out[c] = ((t2 - t) * l012 + (t - t1) * l123) / (t2 - t1);
  }
  return out;
}

export function segmentCount(npts: number, topology: Topology): number {
  return topology === 'closed' ? npts : npts - 1;
}

/** The (4) control window of one segment within a part. */
export function segmentControls(points: readonly Vec2[], topology: Topology,
                                seg: number, opts: SplineOptions): Vec2[] {
  const n = points.length;
  const nseg = segmentCount(n, topology);
  if (seg < 0 || seg >= nseg) {
    throw new Error(`segment ${seg} out of range (0..${nseg - 1})`);
  }
  if (topology === 'closed') {
    const mod = (i: number) => ((i % n) + n) % n;
    return [points[mod(seg - 1)], points[seg], points[mod(seg + 1)],
            points[mod(seg + 2)]].map((p): Vec2 => [p[0], p[1]]);
  }
  const ext = extendEndpoints(points, opts.rho, opts.inwardEndPhantom ?? false);
  return ext.slice(seg, seg + 4);
}

/** Control-point ordinals whose position influences segment `seg`. */
export function segmentSupport(npts: number, topology: Topology,
                               seg: number): Set<number> {
  const nseg = segmentCount(npts, topology);
  if (seg < 0 || seg >= nseg) throw new Error(`segment ${seg} out of range`);
  const out = new Set<number>();
  if (topology === 'closed') {
    for (const k of [-1, 0, 1, 2]) out.add(((seg + k) % npts + npts) % npts);
    return out;
  }
  for (let i = seg - 1; i < seg + 3; i++) {
    if (i < 0) {
      out.add(0);
      out.add(1); // leading phantom depends on the first two points
    } else if (i >= npts) {
      out.add(npts - 2);
      out.add(npts - 1); // trailing phantom
    } else {
      out.add(i);
    }
  }
  return out;
}

/** Segments whose support contains `point`, ascending. */
export function segmentsTouching(npts: number, topology: Topology,
                                 point: number): number[] {
  const out: number[] = [];
  for (let s = 0; s < segmentCount(npts, topology); s++) {
    if (segmentSupport(npts, topology, s).has(point)) out.push(s);
  }
  return out;
}

/** Polyline of one segment, both endpoints included (density+1 samples). */
export function sampleSegment(points: readonly Vec2[], topology: Topology,
                              seg: number, opts: SplineOptions,
                              density: number): Vec2[] {
  if (density < 1) throw new Error('density must be >= 1');
  const ctrl = segmentControls(points, topology, seg, opts);
  const knots = knotSequence(ctrl, opts.alpha);
  const t1 = knots[1];
  const t2 = knots[2];
  const out: Vec2[] = [];
  for (let i = 0; i <= density; i++) {
    const t = i === density ? t2 : t1 + ((t2 - t1) * i) / density;
    out.push(evalSegment(ctrl, knots, t));
  }
  return out;
}

/** Full polyline of one part; closed parts repeat the first sample. */
export function samplePart(points: readonly Vec2[], topology: Topology,
                           opts: SplineOptions, density: number): Vec2[] {
  const nseg = segmentCount(points.length, topology);
  const out: Vec2[] = [];
  for (let s = 0; s < nseg; s++) {
    const chunk = sampleSegment(points, topology, s, opts, density);
    out.push(...(s === nseg - 1 ? chunk : chunk.slice(0, -1)));
  }
  return out;
}
