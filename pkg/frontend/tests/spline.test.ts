import { readFileSync } from 'node:fs';
import { describe, expect, it } from 'vitest';

import {
  DuplicateConsecutivePoints,
  evalSegment,
  knotSequence,
  sampleSegment,
  segmentsTouching,
  type Topology,
  type Vec2,
} from '../src/spline.js';

interface SegmentVector {
  alpha: number;
  control: Vec2[];
  knots: number[];
  t: number[];
  points: Vec2[];
}

interface ContourVector {
  alpha: number;
  rho: number;
  topology: Topology;
  masters: Vec2[];
  segment: number;
  density: number;
  points: Vec2[];
}

interface FixtureFile {
  revision: number;
  segment_eval: SegmentVector[];
  contour_segments: ContourVector[];
}

const fixtures: FixtureFile = JSON.parse(readFileSync(
  new URL('../../tests/fixtures/spline_vectors.json', import.meta.url),
  'utf-8',
));

const PARITY_TOL = 1e-6;

const maxPointError = (got: Vec2[], want: Vec2[]): number => {
  expect(got.length).toBe(want.length);
  let worst = 0;
  for (let i = 0; i < got.length; i++) {
    worst = Math.max(worst, Math.abs(got[i][0] - want[i][0]),
                     Math.abs(got[i][1] - want[i][1]));
  }
  return worst;
};

describe('parity with the server evaluator on the shared fixtures', () => {
  it('covers both fixture families', () => {
    expect(fixtures.segment_eval.length).toBeGreaterThanOrEqual(20);
    expect(fixtures.contour_segments.length).toBeGreaterThanOrEqual(9);
  });

  it('reproduces every single-window vector within 1e-6', () => {
    for (const vec of fixtures.segment_eval) {
      const knots = knotSequence(vec.control, vec.alpha);
      for (let k = 0; k < 4; k++) {
        expect(Math.abs(knots[k] - vec.knots[k])).toBeLessThan(PARITY_TOL);
      }
      const got = vec.t.map((t) => evalSegment(vec.control, vec.knots, t));
      expect(maxPointError(got, vec.points)).toBeLessThan(PARITY_TOL);
    }
  });

  it('reproduces every contour segment (wrap + phantoms) within 1e-6', () => {
    for (const vec of fixtures.contour_segments) {
      const got = sampleSegment(vec.masters, vec.topology, vec.segment,
                                { alpha: vec.alpha, rho: vec.rho },
                                vec.density);
      expect(maxPointError(got, vec.points)).toBeLessThan(PARITY_TOL);
    }
  });
});

describe('knot sequencing', () => {
  it('follows the |chord|^alpha rule', () => {
    const pts: Vec2[] = [[0, 0], [4, 0], [4, 3]];
    expect(knotSequence(pts.slice(0, 2), 0.5)).toEqual([0, 2]);
    expect(knotSequence(pts, 1.0)).toEqual([0, 4, 7]);
    expect(knotSequence([[0, 0], [7, 1], [2, 2]], 0.0)).toEqual([0, 1, 2]);
  });

  it('rejects zero chords unless alpha is zero', () => {
    const dup: Vec2[] = [[1, 1], [1, 1], [2, 2]];
    expect(() => knotSequence(dup, 0.5)).toThrow(DuplicateConsecutivePoints);
    expect(knotSequence(dup, 0.0)).toEqual([0, 1, 2]);
  });
});

describe('segment evaluation', () => {
  const ctrl: Vec2[] = [[0, 0], [4, 0], [8, 3], [9, 3]];

  it('interpolates the inner controls at the knot ends', () => {
    const knots = knotSequence(ctrl, 0.5);
    const atStart = evalSegment(ctrl, knots, knots[1]);
    const atEnd = evalSegment(ctrl, knots, knots[2]);
    expect(Math.abs(atStart[0] - 4)).toBeLessThan(1e-12);
    expect(Math.abs(atStart[1] - 0)).toBeLessThan(1e-12);
    expect(Math.abs(atEnd[0] - 8)).toBeLessThan(1e-12);
    expect(Math.abs(atEnd[1] - 3)).toBeLessThan(1e-12);
  });

  it('rejects parameters outside the middle knot span', () => {
    const knots = knotSequence(ctrl, 0.5);
    expect(() => evalSegment(ctrl, knots, knots[0])).toThrow(/outside/);
    expect(() => evalSegment(ctrl, knots, knots[3])).toThrow(/outside/);
  });

  it('sampled endpoints are the masters the segment spans', () => {
    const hexagon: Vec2[] = [[10, 0], [5, 8.66], [-5, 8.66], [-10, 0],
                             [-5, -8.66], [5, -8.66]];
    for (let seg = 0; seg < 6; seg++) {
      const pts = sampleSegment(hexagon, 'closed', seg,
                                { alpha: 0.5, rho: 0.5 }, 4);
      expect(pts.length).toBe(5);
      expect(pts[0]).toEqual(hexagon[seg]);
      const next = hexagon[(seg + 1) % 6];
      expect(Math.abs(pts[4][0] - next[0])).toBeLessThan(1e-12);
      expect(Math.abs(pts[4][1] - next[1])).toBeLessThan(1e-12);
    }
  });
});

describe('segment support', () => {
  it('closed: a master touches the four segments of its window', () => {
    expect(segmentsTouching(8, 'closed', 3)).toEqual([1, 2, 3, 4]);
    expect(segmentsTouching(8, 'closed', 0)).toEqual([0, 1, 6, 7]);
  });

  it('open: end phantoms fold their dependencies into the edge points', () => {
    // 5 points, 4 segments; moving an endpoint influences the phantom too
    expect(segmentsTouching(5, 'open', 0)).toEqual([0, 1]);
    expect(segmentsTouching(5, 'open', 4)).toEqual([2, 3]);
    expect(segmentsTouching(5, 'open', 2)).toEqual([0, 1, 2, 3]);
  });
});
