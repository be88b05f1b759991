/*
 * Edit-session metrics, mirroring the server's arithmetic exactly so an
 * exported event log recomputes to bit-identical values offline.
 *
 * Log lines: "move <ms> <index> <old_x> <old_y> <new_x> <new_y>",
 * "export <ms>", "theta_before <v>", "theta_after <v>".
 */

export interface MoveRecord {
  timestampMs: number;
  index: number;
  oldXy: [number, number];
  newXy: [number, number];
}

export interface EventLog {
  moves: MoveRecord[];
  exportTimestampMs: number | null;
  thetaBefore: number | null;
  thetaAfter: number | null;
}

export class NoMoves extends Error {}
export class ZeroEffort extends Error {}

export function emptyLog(): EventLog {
  return {
    moves: [],
    exportTimestampMs: null,
    thetaBefore: null,
    thetaAfter: null,
  };
}

export function parseEventLog(text: string): EventLog {
  const log = emptyLog();
  for (const raw of text.split('\n')) {
    const line = raw.trim();
    if (!line) continue;
    const [kind, ...rest] = line.split(/\s+/);
    if (kind === 'move') {
      const [ts, idx, ox, oy, nx, ny] = rest;
      log.moves.push({
        timestampMs: Number(ts),
        index: Number(idx),
        oldXy: [Number(ox), Number(oy)],
        newXy: [Number(nx), Number(ny)],
      });
    } else if (kind === 'export') {
      log.exportTimestampMs = Number(rest[0]);
    } else if (kind === 'theta_before') {
      log.thetaBefore = Number(rest[0]);
    } else if (kind === 'theta_after') {
      log.thetaAfter = Number(rest[0]);
    } else {
      throw new Error(`unknown log record: ${kind}`);
    }
  }
  return log;
}

/** Elapsed seconds from the first move to the export (or last move). */
export function duration(log: EventLog): number {
  if (log.moves.length === 0) return 0.0;
  const start = log.moves[0].timestampMs;
  const end = log.exportTimestampMs ?? log.moves[log.moves.length - 1].timestampMs;
  return (end - start) / 1000.0;
}

/** Mean seconds per move. */
export function manipulation(log: EventLog): number {
  if (log.moves.length === 0) throw new NoMoves('no move events recorded');
  return duration(log) / log.moves.length;
}

/** Duration squared over move count. */
export function effort(log: EventLog): number {
  if (log.moves.length === 0) throw new NoMoves('no move events recorded');
  const d = duration(log);
  return (d * d) / log.moves.length;
}

/** Overlap gain, in percent, per unit effort. */
export function efficiency(log: EventLog): number {
  const e = effort(log);
  if (e === 0) throw new ZeroEffort('effort is zero; efficiency undefined');
  if (log.thetaBefore === null || log.thetaAfter === null) {
    throw new Error('efficiency needs overlap before and after');
  }
  return ((log.thetaAfter - log.thetaBefore) * 100.0) / e;
}
