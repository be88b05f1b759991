/*
 * Canvas drawing for the editor scene: image layer, optional truth
 * overlay, the sampled curve, and master/slave markers. Pure drawing;
 * all state lives in EditorSession and the app shell.
 */

import type { PointListing } from './api.js';
import type { EditorSession } from './session.js';
import type { Vec2 } from './spline.js';
import { worldToCanvas, type ViewTransform } from './viewport.js';

export const MASTER_RADIUS_PX = 5;
export const SLAVE_RADIUS_PX = 3;

const CURVE_STYLE = '#ffd166';
const PREVIEW_STYLE = '#06d6a0';
const MASTER_FILL = '#ef476f';
const SLAVE_FILL = '#8ecae6';
const TRUTH_STYLE = 'rgba(144, 224, 239, 0.45)';

export function drawImageLayer(ctx: CanvasRenderingContext2D,
                               img: CanvasImageSource | null,
                               view: ViewTransform,
                               width: number, height: number): void {
  ctx.fillStyle = '#202430';
  ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  if (img === null) return;
  ctx.save();
  ctx.imageSmoothingEnabled = view.scale < 4;
  ctx.setTransform(view.scale, 0, 0, view.scale, view.offsetX, view.offsetY);
  ctx.drawImage(img, 0, 0, width, height);
  ctx.restore();
}

export function drawTruthOverlay(ctx: CanvasRenderingContext2D,
                                 truth: CanvasImageSource,
                                 view: ViewTransform,
                                 width: number, height: number): void {
  ctx.save();
  ctx.globalAlpha = 0.35;
  ctx.setTransform(view.scale, 0, 0, view.scale, view.offsetX, view.offsetY);
  ctx.drawImage(truth, 0, 0, width, height);
  ctx.restore();
  ctx.strokeStyle = TRUTH_STYLE;
}

export function drawPolyline(ctx: CanvasRenderingContext2D,
                             pts: readonly Vec2[], view: ViewTransform,
                             style: string, widthPx = 1.5): void {
  if (pts.length < 2) return;
  ctx.strokeStyle = style;
  ctx.lineWidth = widthPx;
  ctx.beginPath();
  const [x0, y0] = worldToCanvas(pts[0], view);
  ctx.moveTo(x0, y0);
  for (let i = 1; i < pts.length; i++) {
    const [x, y] = worldToCanvas(pts[i], view);
    ctx.lineTo(x, y);
  }
  ctx.stroke();
}

/**
 * The whole curve from the session cache, with any in-drag preview
 * segments drawn over their stale counterparts in a distinct color.
 */
export function drawCurve(ctx: CanvasRenderingContext2D,
                          session: EditorSession, view: ViewTransform,
                          preview: Map<string, Vec2[]> | null): void {
  for (let part = 0; part < session.partCount; part++) {
    for (let seg = 0; seg < session.segmentCountOf(part); seg++) {
      const key = `${part}:${seg}`;
      const fresh = preview?.get(key);
      const pts = fresh ?? session.samplesFor(part, seg);
      if (pts) drawPolyline(ctx, pts, view, fresh ? PREVIEW_STYLE : CURVE_STYLE);
    }
  }
}

function drawMarker(ctx: CanvasRenderingContext2D, p: Vec2,
                    view: ViewTransform, radius: number, fill: string): void {
  const [x, y] = worldToCanvas(p, view);
  ctx.beginPath();
  ctx.arc(x, y, radius, 0, Math.PI * 2);
  ctx.fillStyle = fill;
  ctx.strokeStyle = '#ffffff';
  ctx.lineWidth = 1;
  ctx.fill();
  ctx.stroke();
}

export function drawHandles(ctx: CanvasRenderingContext2D,
                            masters: readonly PointListing[],
                            slaves: readonly PointListing[],
                            view: ViewTransform,
                            dragOverride: { index: number; xy: Vec2 } | null,
                            ): void {
  for (const s of slaves) {
    drawMarker(ctx, [s.x, s.y], view, SLAVE_RADIUS_PX, SLAVE_FILL);
  }
  for (const m of masters) {
    const p: Vec2 = dragOverride && dragOverride.index === m.index
      ? dragOverride.xy
      : [m.x, m.y];
    drawMarker(ctx, p, view, MASTER_RADIUS_PX, MASTER_FILL);
  }
}
