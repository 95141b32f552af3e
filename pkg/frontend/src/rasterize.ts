import type { Polygon } from './types.js';

// Even-odd rasterization at pixel centers, arithmetic-for-arithmetic the
// same rule the annotation service applies: pixel (i, j) is positive when
// its center lies inside the polygon, a polygon with fewer than 3 distinct
// vertices is skipped, and overlapping polygons union.

function isDegenerate(poly: Polygon): boolean {
  const distinct = new Set(poly.map(([r, c]) => `${r},${c}`));
  return distinct.size < 3;
}

export function rasterizePolygon(poly: Polygon, height: number, width: number): Uint8Array {
  const out = new Uint8Array(height * width);
  if (poly.some((v) => v.length !== 2)) {
    throw new Error('polygon must be a sequence of [row, col] pairs');
  }
  if (isDegenerate(poly)) {
    console.warn('skipping degenerate polygon with <3 distinct vertices');
    return out;
  }
  const rows = poly.map(([r]) => r);
  const rLo = Math.max(0, Math.ceil(Math.min(...rows)));
  const rHi = Math.min(height - 1, Math.floor(Math.max(...rows)));
  const n = poly.length;
  for (let row = rLo; row <= rHi; row++) {
    for (let col = 0; col < width; col++) {
      let inside = false;
      for (let k = 0; k < n; k++) {
        const [r1, c1] = poly[k];
        const [r2, c2] = poly[(k + 1) % n];
        if (r1 === r2) continue;
        // Half-open row rule: no double counting at shared vertices.
        if (r1 > row !== r2 > row) {
          const cAt = c1 + ((row - r1) * (c2 - c1)) / (r2 - r1);
          if (col < cAt) inside = !inside;
        }
      }
      if (inside) out[row * width + col] = 1;
    }
  }
  return out;
}

export function rasterizePolygons(polys: Polygon[], height: number, width: number): Uint8Array {
  const out = new Uint8Array(height * width);
  for (const poly of polys) {
    const mask = rasterizePolygon(poly, height, width);
    for (let i = 0; i < out.length; i++) {
      if (mask[i]) out[i] = 1;
    }
  }
  return out;
}

/** Positive pixels as sorted [row, col] pairs, the service's wire order. */
export function positivePixels(mask: Uint8Array, height: number, width: number): [number, number][] {
  const out: [number, number][] = [];
  for (let row = 0; row < height; row++) {
    for (let col = 0; col < width; col++) {
      if (mask[row * width + col]) out.push([row, col]);
    }
  }
  return out;
}
