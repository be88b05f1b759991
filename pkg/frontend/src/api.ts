/*
 * Typed client for the session service. Every interaction with the
 * backend goes through here; the fetch implementation is injectable so
 * tests can route calls to an in-memory stand-in.
 */

import type { Topology } from './spline.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ModelEntry {
  id: string;
  points: number;
  g: number;
  epsilon: number;
  topology: Topology;
  alpha: number;
  rho: number;
}

export interface ScheduleEntry {
  id: string;
  levels: number;
  resolutions: number[];
}

export interface SessionCreated {
  id: string;
  token: string;
  width: number;
  height: number;
  study_mode: boolean;
}

export interface SessionStatus {
  id: string;
  status: string;
  has_contour: boolean;
  exported: boolean;
  moves: number;
  study_mode: boolean;
  truth_overlay: boolean;
  theta_before?: number;
  error?: string;
}

export interface PointListing {
  index: number;
  x: number;
  y: number;
}

export interface SegmentSamples {
  index: number;
  points: [number, number][];
}

export interface PartSegments {
  part: number;
  segments: SegmentSamples[];
}

export interface SegmentResponse {
  status: string;
  masters: PointListing[];
  slaves: PointListing[];
  theta_before?: number;
}

export interface ContourPayload {
  topology: Topology;
  density: number;
  alpha: number;
  rho: number;
  parts: PartSegments[];
  masters: PointListing[];
  slaves: PointListing[];
}

export interface MoveResponse {
  moves: number;
  affected: [number, number][];
  parts: PartSegments[];
  masters: PointListing[];
  slaves: PointListing[];
}

export interface ExportMetrics {
  manipulation: number;
  effort: number;
  efficiency?: number;
}

export interface ExportPayload {
  contour: unknown;
  mask: string;
  event_log: string;
  moves: number;
  duration: number;
  theta_before: number | null;
  theta_after: number | null;
  metrics: ExportMetrics | null;
}

export class ServiceError extends Error {
  constructor(readonly status: number, readonly detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body && typeof body.detail === 'string') detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ServiceError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class ServiceClient {
  private readonly fetchFn: FetchLike;

  constructor(readonly baseUrl: string, fetchFn?: FetchLike) {
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, '') + path;
  }

  listModels(): Promise<{ models: ModelEntry[] }> {
    return this.fetchFn(this.url('/models')).then((r) => asJson(r));
  }

  listSchedules(): Promise<{ schedules: ScheduleEntry[] }> {
    return this.fetchFn(this.url('/schedules')).then((r) => asJson(r));
  }

  createSession(req: {
    image: string;
    model: string;
    truth?: string;
    study_mode?: boolean;
    channel?: string;
  }): Promise<SessionCreated> {
    return this.fetchFn(this.url('/sessions'), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(req),
    }).then((r) => asJson(r));
  }

  status(sid: string): Promise<SessionStatus> {
    return this.fetchFn(this.url(`/sessions/${sid}`)).then((r) => asJson(r));
  }

  imageUrl(sid: string): string {
    return this.url(`/sessions/${sid}/image`);
  }

  truthUrl(sid: string): string {
    return this.url(`/sessions/${sid}/truth`);
  }

  segment(sid: string, token: string,
          scheduleId: string | null): Promise<SegmentResponse> {
    return this.fetchFn(this.url(`/sessions/${sid}/segment`), {
      method: 'POST',
      headers: {
        'Content-Type': 'application/json',
        'X-Session-Token': token,
      },
      body: JSON.stringify({ schedule: scheduleId, wait: true }),
    }).then((r) => asJson(r));
  }

  contour(sid: string, density: number): Promise<ContourPayload> {
    return this.fetchFn(this.url(`/sessions/${sid}/contour?density=${density}`))
      .then((r) => asJson(r));
  }

  movePoint(sid: string, token: string, index: number, body: {
    x: number;
    y: number;
    timestamp_ms: number;
    density: number;
  }): Promise<MoveResponse> {
    return this.fetchFn(this.url(`/sessions/${sid}/points/${index}`), {
      method: 'PATCH',
      headers: {
        'Content-Type': 'application/json',
        'X-Session-Token': token,
      },
      body: JSON.stringify(body),
    }).then((r) => asJson(r));
  }

  exportSession(sid: string, token: string,
                timestampMs: number | null): Promise<ExportPayload> {
    return this.fetchFn(this.url(`/sessions/${sid}/export`), {
      method: 'POST',
      headers: {
        'Content-Type': 'application/json',
        'X-Session-Token': token,
      },
      body: JSON.stringify(
        timestampMs === null ? {} : { timestamp_ms: timestampMs },
      ),
    }).then((r) => asJson(r));
  }
}
