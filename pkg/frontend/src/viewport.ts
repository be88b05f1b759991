/*
 * Zoom/pan transform between image coordinates and canvas pixels, plus
 * handle hit-testing. Hit targets are measured in canvas pixels with a
 * fixed 12 px floor, so zooming out never makes handles impossible to
 * grab.
 */

import type { PointListing } from './api.js';
import type { Vec2 } from './spline.js';

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export const HANDLE_HIT_RADIUS_PX = 12;

export const identityView = (): ViewTransform =>
  ({ scale: 1, offsetX: 0, offsetY: 0 });

export function worldToCanvas(p: Vec2, view: ViewTransform): Vec2 {
  return [p[0] * view.scale + view.offsetX, p[1] * view.scale + view.offsetY];
}

export function canvasToWorld(p: Vec2, view: ViewTransform): Vec2 {
  return [(p[0] - view.offsetX) / view.scale,
          (p[1] - view.offsetY) / view.scale];
}

/** Rescale about a fixed canvas point (the cursor under the wheel). */
export function zoomAt(view: ViewTransform, factor: number,
                       atX: number, atY: number): ViewTransform {
  const scale = view.scale * factor;
  return {
    scale,
    offsetX: atX - (atX - view.offsetX) * factor,
    offsetY: atY - (atY - view.offsetY) * factor,
  };
}

export function pan(view: ViewTransform, dx: number, dy: number): ViewTransform {
  return { ...view, offsetX: view.offsetX + dx, offsetY: view.offsetY + dy };
}

/** Scale-to-fit an image into a canvas, centered. */
export function fitView(imageW: number, imageH: number,
                        canvasW: number, canvasH: number): ViewTransform {
  const scale = Math.min(canvasW / imageW, canvasH / imageH);
  return {
    scale,
    offsetX: (canvasW - imageW * scale) / 2,
    offsetY: (canvasH - imageH * scale) / 2,
  };
}

/**
 * Index (into the listing) of the master under a canvas-space pointer,
 * or null. The pick radius never drops below HANDLE_HIT_RADIUS_PX
 * regardless of zoom; nearest handle wins inside it.
 */
export function pickHandle(handles: readonly PointListing[],
                           view: ViewTransform,
                           pointerX: number, pointerY: number,
                           drawnRadiusPx = 5): number | null {
  const radius = Math.max(HANDLE_HIT_RADIUS_PX, drawnRadiusPx);
  let best: number | null = null;
  let bestDist = Infinity;
  for (let i = 0; i < handles.length; i++) {
    const [cx, cy] = worldToCanvas([handles[i].x, handles[i].y], view);
    const d = Math.hypot(cx - pointerX, cy - pointerY);
    if (d <= radius && d < bestDist) {
      best = i;
      bestDist = d;
    }
  }
  return best;
}

/** Study-mode display inversion of an 8-bit pixel value. */
export function invertByte(value: number): number {
  return 255 - value;
}

/** Inversion of a normalized [0, 1] intensity. */
export function invertUnit(value: number): number {
  return 1 - value;
}
