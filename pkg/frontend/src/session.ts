/*
 * Editor-side session state: the sampled curve, draggable master
 * handles, the single-flight move queue, and a local mirror of the
 * server's event log for live metric display.
 *
 * Drags preview locally through the spline mirror; releasing sends one
 * PATCH whose response is authoritative. At most one request is in
 * flight; moves released meanwhile queue up. Network failures replay
 * the pending move, rejections roll back its optimistic coordinates.
 */

import type {
  ContourPayload,
  ExportPayload,
  PointListing,
  ServiceClient,
} from './api.js';
import { ServiceError } from './api.js';
import * as metrics from './metrics.js';
import type { EventLog } from './metrics.js';
import type { SplineOptions, Topology, Vec2 } from './spline.js';
import { sampleSegment, segmentCount, segmentsTouching } from './spline.js';

export interface LiveMetrics {
  moves: number;
  elapsedS: number;
  manipulation: number | null;
  effort: number | null;
  efficiency: number | null;
}

interface PendingMove {
  index: number;
  part: number;
  pos: number;
  oldXy: Vec2;
  newXy: Vec2;
  timestampMs: number;
  attempts: number;
}

export const segKey = (part: number, seg: number): string => `${part}:${seg}`;

export class SessionExported extends Error {}

export class EditorSession {
  topology: Topology = 'closed';
  density: number;
  splineOpts: SplineOptions = { alpha: 0.5, rho: 0.5 };

  /** Master coordinates per part, in master-ordinal order. */
  partMasters: Vec2[][] = [];
  /** Expanded-index listings straight from the server. */
  masters: PointListing[] = [];
  slaves: PointListing[] = [];
  /** "part:seg" -> sampled polyline. Only affected keys change on a move. */
  segments = new Map<string, Vec2[]>();

  thetaBefore: number | null = null;
  exported = false;
  localLog: EventLog = metrics.emptyLog();
  lastError: ServiceError | Error | null = null;
  onConflict: ((err: ServiceError) => void) | null = null;

  maxRetries = 3;
  retryDelayMs = 250;

  private partMasterCounts: number[] = [];
  private serverMoves = 0;
  private inFlight = false;
  private queue: PendingMove[] = [];
  private drainWaiters: (() => void)[] = [];

  constructor(
    private readonly client: ServiceClient,
    readonly sid: string,
    private readonly token: string,
    density = 32,
  ) {
    this.density = density;
  }

  get moves(): number {
    return this.localLog.moves.length;
  }

  get confirmedMoves(): number {
    return this.serverMoves;
  }

  async segment(scheduleId: string | null): Promise<void> {
    this.assertWritable();
    const resp = await this.client.segment(this.sid, this.token, scheduleId);
    this.thetaBefore = resp.theta_before ?? null;
    const contour = await this.client.contour(this.sid, this.density);
    this.loadContour(contour);
    this.localLog = metrics.emptyLog();
    this.serverMoves = 0;
  }

  loadContour(payload: ContourPayload): void {
    this.topology = payload.topology;
    this.splineOpts = { alpha: payload.alpha, rho: payload.rho };
    this.density = payload.density;
    this.partMasterCounts = payload.parts.map((p) =>
      this.topology === 'closed' ? p.segments.length : p.segments.length + 1,
    );
    this.segments = new Map();
    for (const part of payload.parts) {
      for (const seg of part.segments) {
        this.segments.set(segKey(part.part, seg.index),
                          seg.points.map((p): Vec2 => [p[0], p[1]]));
      }
    }
    this.applyPointListing(payload.masters, payload.slaves);
  }

  private applyPointListing(masters: PointListing[],
                            slaves: PointListing[]): void {
    this.masters = masters;
    this.slaves = slaves;
    this.partMasters = [];
    let taken = 0;
    for (const count of this.partMasterCounts) {
      this.partMasters.push(
        masters.slice(taken, taken + count).map((m): Vec2 => [m.x, m.y]),
      );
      taken += count;
    }
  }

  /** (part, ordinal-within-part) of a master handle's expanded index. */
  masterLocation(index: number): { part: number; pos: number } {
    const flat = this.masters.findIndex((m) => m.index === index);
    if (flat < 0) throw new Error(`no master with index ${index}`);
    let part = 0;
    let pos = flat;
    while (pos >= this.partMasterCounts[part]) {
      pos -= this.partMasterCounts[part];
      part += 1;
    }
    return { part, pos };
  }

  /**
   * Re-evaluate only the segments invalidated by dragging one master,
   * without touching session state. The caller overlays these on the
   * cached curve while the pointer is down.
   */
  previewMove(index: number, x: number, y: number):
      { affected: [number, number][]; segments: Map<string, Vec2[]> } {
    const { part, pos } = this.masterLocation(index);
    const pts = this.partMasters[part].map((p): Vec2 => [p[0], p[1]]);
    pts[pos] = [x, y];
    const touched = segmentsTouching(pts.length, this.topology, pos);
    const out = new Map<string, Vec2[]>();
    for (const seg of touched) {
      out.set(segKey(part, seg),
              sampleSegment(pts, this.topology, seg, this.splineOpts,
                            this.density));
    }
    return { affected: touched.map((s) => [part, s]), segments: out };
  }

  /**
   * Complete a drag. Returns false (and sends nothing) when the handle
   * was released exactly where it started; otherwise records the move
   * and queues one PATCH.
   */
  releaseDrag(index: number, x: number, y: number,
              timestampMs: number): boolean {
    this.assertWritable();
    const { part, pos } = this.masterLocation(index);
    const current = this.partMasters[part][pos];
    if (current[0] === x && current[1] === y) return false;

    const move: PendingMove = {
      index, part, pos,
      oldXy: [current[0], current[1]],
      newXy: [x, y],
      timestampMs,
      attempts: 0,
    };
    // optimistic: later previews start from the newest geometry
    this.partMasters[part][pos] = [x, y];
    const flat = this.masters.findIndex((m) => m.index === index);
    this.masters[flat] = { index, x, y };
    this.localLog.moves.push({
      timestampMs, index,
      oldXy: move.oldXy, newXy: [x, y],
    });
    this.queue.push(move);
    void this.pump();
    return true;
  }

  /** Resolves once every queued move has been acknowledged. */
  flush(): Promise<void> {
    if (!this.inFlight && this.queue.length === 0) return Promise.resolve();
    return new Promise((resolve) => this.drainWaiters.push(resolve));
  }

  private async pump(): Promise<void> {
    if (this.inFlight) return;
    const move = this.queue.shift();
    if (move === undefined) {
      for (const w of this.drainWaiters.splice(0)) w();
      return;
    }
    this.inFlight = true;
    try {
      const resp = await this.client.movePoint(this.sid, this.token,
                                               move.index, {
        x: move.newXy[0],
        y: move.newXy[1],
        timestamp_ms: move.timestampMs,
        density: this.density,
      });
      this.serverMoves = resp.moves;
      for (const part of resp.parts) {
        for (const seg of part.segments) {
          this.segments.set(segKey(part.part, seg.index),
                            seg.points.map((p): Vec2 => [p[0], p[1]]));
        }
      }
      this.applyPointListing(resp.masters, resp.slaves);
    } catch (err) {
      if (err instanceof ServiceError) {
        this.rollback(move);
        this.lastError = err;
        if (err.status === 409 && this.onConflict) this.onConflict(err);
      } else if (move.attempts + 1 < this.maxRetries) {
        // network hiccup: replay the same move
        move.attempts += 1;
        this.queue.unshift(move);
        await new Promise((r) => setTimeout(r, this.retryDelayMs));
      } else {
        this.rollback(move);
        this.lastError = err as Error;
      }
    } finally {
      this.inFlight = false;
    }
    void this.pump();
  }

  private rollback(move: PendingMove): void {
    this.partMasters[move.part][move.pos] = [move.oldXy[0], move.oldXy[1]];
    const flat = this.masters.findIndex((m) => m.index === move.index);
    if (flat >= 0) {
      this.masters[flat] = {
        index: move.index, x: move.oldXy[0], y: move.oldXy[1],
      };
    }
    const at = this.localLog.moves.findIndex(
      (m) => m.timestampMs === move.timestampMs && m.index === move.index,
    );
    if (at >= 0) this.localLog.moves.splice(at, 1);
  }

  async exportSession(timestampMs: number | null = null):
      Promise<ExportPayload> {
    this.assertWritable();
    await this.flush();
    const payload = await this.client.exportSession(this.sid, this.token,
                                                    timestampMs);
    this.exported = true;
    this.localLog = metrics.parseEventLog(payload.event_log);
    return payload;
  }

  /** Values for the metrics panel; pass the clock for live elapsed. */
  liveMetrics(nowMs: number | null = null): LiveMetrics {
    const log = this.localLog;
    const n = log.moves.length;
    let elapsed = metrics.duration(log);
    if (nowMs !== null && n > 0 && log.exportTimestampMs === null) {
      elapsed = (nowMs - log.moves[0].timestampMs) / 1000.0;
    }
    let manip: number | null = null;
    let eff: number | null = null;
    let y: number | null = null;
    if (n > 0) {
      manip = elapsed / n;
      eff = (elapsed * elapsed) / n;
      if (eff > 0 && log.thetaBefore !== null && log.thetaAfter !== null) {
        y = ((log.thetaAfter - log.thetaBefore) * 100.0) / eff;
      }
    }
    return {
      moves: n, elapsedS: elapsed,
      manipulation: manip, effort: eff, efficiency: y,
    };
  }

  samplesFor(part: number, seg: number): Vec2[] | undefined {
    return this.segments.get(segKey(part, seg));
  }

  segmentCountOf(part: number): number {
    return segmentCount(this.partMasterCounts[part], this.topology);
  }

  get partCount(): number {
    return this.partMasterCounts.length;
  }

  private assertWritable(): void {
    if (this.exported) {
      throw new SessionExported('session is read-only after export');
    }
  }
}
