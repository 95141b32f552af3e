import type { Vertex } from './types.js';

/**
 * Canvas viewport: image coordinates map to canvas pixels by
 *
 *   x = col * zoom + panX,  y = row * zoom + panY.
 *
 * Zoom is constrained to powers of two and pans to integers. Under those
 * constraints the mapping is exactly invertible in floating point for the
 * coordinates the editor produces (canvas clicks are integers, so stored
 * vertices are dyadic rationals): multiplying or dividing by a power of
 * two only shifts the exponent, and the integer pan adds no rounding for
 * values in the editor's range.
 */
export interface Viewport {
  zoom: number;
  panX: number;
  panY: number;
}

export const MIN_ZOOM = 0.125;
export const MAX_ZOOM = 64;

export function defaultViewport(): Viewport {
  return { zoom: 1, panX: 0, panY: 0 };
}

export function checkViewport(vp: Viewport): void {
  const exp = Math.log2(vp.zoom);
  if (!Number.isInteger(exp) || vp.zoom < MIN_ZOOM || vp.zoom > MAX_ZOOM) {
    throw new Error(`zoom must be a power of two in [${MIN_ZOOM}, ${MAX_ZOOM}], got ${vp.zoom}`);
  }
  if (!Number.isInteger(vp.panX) || !Number.isInteger(vp.panY)) {
    throw new Error(`pan must be integer canvas pixels, got (${vp.panX}, ${vp.panY})`);
  }
}

export function imageToCanvas(vp: Viewport, vertex: Vertex): { x: number; y: number } {
  checkViewport(vp);
  const [row, col] = vertex;
  return { x: col * vp.zoom + vp.panX, y: row * vp.zoom + vp.panY };
}

export function canvasToImage(vp: Viewport, x: number, y: number): Vertex {
  checkViewport(vp);
  return [(y - vp.panY) / vp.zoom, (x - vp.panX) / vp.zoom];
}

export function panBy(vp: Viewport, dx: number, dy: number): Viewport {
  return { ...vp, panX: vp.panX + Math.round(dx), panY: vp.panY + Math.round(dy) };
}

/**
 * Zoom in or out by one power-of-two step, keeping the given canvas point
 * over (almost) the same image point. The pan re-rounds to integers, so
 * the anchor may drift by at most one canvas pixel.
 */
export function zoomStep(vp: Viewport, direction: 1 | -1, anchorX: number, anchorY: number): Viewport {
  checkViewport(vp);
  const zoom = direction > 0 ? vp.zoom * 2 : vp.zoom / 2;
  if (zoom < MIN_ZOOM || zoom > MAX_ZOOM) return vp;
  const ratio = zoom / vp.zoom;
  return {
    zoom,
    panX: Math.round(anchorX - (anchorX - vp.panX) * ratio),
    panY: Math.round(anchorY - (anchorY - vp.panY) * ratio),
  };
}
