import { describe, expect, it } from 'vitest';
import {
  canvasToImage,
  checkViewport,
  defaultViewport,
  imageToCanvas,
  MAX_ZOOM,
  MIN_ZOOM,
  panBy,
  type Viewport,
  zoomStep,
} from '../src/viewport.js';
import type { Vertex } from '../src/types.js';

// Deterministic 32-bit PRNG, good enough for coordinate fuzzing.
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

const ZOOM_LEVELS = [1, 2, 4];

function randomViewport(rand: () => number, zoom: number): Viewport {
  return {
    zoom,
    panX: Math.floor(rand() * 2001) - 1000,
    panY: Math.floor(rand() * 2001) - 1000,
  };
}

describe('coordinate mapping', () => {
  it('round-trips editor-produced image points exactly at 3 zoom levels', () => {
    const rand = mulberry32(2024);
    for (const zoom of ZOOM_LEVELS) {
      for (let trial = 0; trial < 500; trial++) {
        const vp = randomViewport(rand, zoom);
        // Clicks are integer canvas pixels, so vertices are dyadic
        // rationals; 1/32 covers every zoom level under test.
        const vertex: Vertex = [
          Math.floor(rand() * 9000) / 32,
          Math.floor(rand() * 9000) / 32,
        ];
        const { x, y } = imageToCanvas(vp, vertex);
        expect(canvasToImage(vp, x, y)).toEqual(vertex);
      }
    }
  });

  it('round-trips integer canvas clicks exactly at every allowed zoom', () => {
    const rand = mulberry32(77);
    for (let zoom = MIN_ZOOM; zoom <= MAX_ZOOM; zoom *= 2) {
      for (let trial = 0; trial < 200; trial++) {
        const vp = randomViewport(rand, zoom);
        const click = { x: Math.floor(rand() * 1024), y: Math.floor(rand() * 1024) };
        const vertex = canvasToImage(vp, click.x, click.y);
        expect(imageToCanvas(vp, vertex)).toEqual(click);
      }
    }
  });

  it('maps the image origin to the pan offset', () => {
    const vp: Viewport = { zoom: 4, panX: 17, panY: -3 };
    expect(imageToCanvas(vp, [0, 0])).toEqual({ x: 17, y: -3 });
    expect(imageToCanvas(vp, [2, 5])).toEqual({ x: 37, y: 5 });
  });
});

describe('viewport constraints', () => {
  it('rejects zooms that are not powers of two in range', () => {
    for (const zoom of [0, 3, 0.1, 0.0625, 128, -2]) {
      expect(() => checkViewport({ zoom, panX: 0, panY: 0 })).toThrow(/zoom/);
    }
  });

  it('rejects fractional pans', () => {
    expect(() => checkViewport({ zoom: 1, panX: 0.5, panY: 0 })).toThrow(/pan/);
    expect(() => checkViewport({ zoom: 1, panX: 0, panY: -2.25 })).toThrow(/pan/);
  });

  it('panBy rounds drag deltas to keep pans integral', () => {
    const vp = panBy(defaultViewport(), 10.4, -3.6);
    expect(vp).toEqual({ zoom: 1, panX: 10, panY: -4 });
    expect(() => checkViewport(vp)).not.toThrow();
  });
});

describe('zoom stepping', () => {
  it('doubles or halves and clamps at the ends', () => {
    let vp = defaultViewport();
    vp = zoomStep(vp, 1, 0, 0);
    expect(vp.zoom).toBe(2);
    vp = zoomStep(vp, -1, 0, 0);
    vp = zoomStep(vp, -1, 0, 0);
    expect(vp.zoom).toBe(0.5);
    for (let i = 0; i < 10; i++) vp = zoomStep(vp, -1, 0, 0);
    expect(vp.zoom).toBe(MIN_ZOOM);
    for (let i = 0; i < 20; i++) vp = zoomStep(vp, 1, 0, 0);
    expect(vp.zoom).toBe(MAX_ZOOM);
  });

  it('keeps the anchor within one canvas pixel and the viewport valid', () => {
    const rand = mulberry32(13);
    for (let trial = 0; trial < 300; trial++) {
      const exp = Math.floor(rand() * 7) - 3; // zoom in [1/8, 8]
      const vp = randomViewport(rand, 2 ** exp);
      const anchorX = Math.floor(rand() * 800);
      const anchorY = Math.floor(rand() * 800);
      const direction = rand() < 0.5 ? 1 : -1;
      const next = zoomStep(vp, direction as 1 | -1, anchorX, anchorY);
      expect(() => checkViewport(next)).not.toThrow();
      if (next === vp) continue; // clamped at an end
      const before = canvasToImage(vp, anchorX, anchorY);
      const after = canvasToImage(next, anchorX, anchorY);
      expect(Math.abs(after[0] - before[0]) * next.zoom).toBeLessThanOrEqual(1);
      expect(Math.abs(after[1] - before[1]) * next.zoom).toBeLessThanOrEqual(1);
    }
  });
});
