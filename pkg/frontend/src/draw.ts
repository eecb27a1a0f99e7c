/** Map-drawing math: viewport projection and SVG shape generation.
 *
 * The map is a local equirectangular view; at dashboard scales (a town,
 * a region) the distortion is far below one pixel. Pure functions so the
 * click-to-polygon flow is testable without a DOM.
 */

import { METERS_PER_DEGREE } from "./geometry.js";
import type { GeoPointLL } from "./types.js";
import type { DensityCell } from "./stats.js";

export interface Viewport {
  center: GeoPointLL;
  metersPerPixel: number;
  widthPx: number;
  heightPx: number;
}

export function geoToPixel(vp: Viewport, p: GeoPointLL): { x: number; y: number } {
  const cos = Math.cos((vp.center.lat * Math.PI) / 180);
  const xM = (p.lon - vp.center.lon) * METERS_PER_DEGREE * cos;
  const yM = (p.lat - vp.center.lat) * METERS_PER_DEGREE;
  return {
    x: vp.widthPx / 2 + xM / vp.metersPerPixel,
    y: vp.heightPx / 2 - yM / vp.metersPerPixel,
  };
}

export function pixelToGeo(vp: Viewport, x: number, y: number): GeoPointLL {
  const cos = Math.cos((vp.center.lat * Math.PI) / 180);
  const xM = (x - vp.widthPx / 2) * vp.metersPerPixel;
  const yM = (vp.heightPx / 2 - y) * vp.metersPerPixel;
  return {
    lat: vp.center.lat + yM / METERS_PER_DEGREE,
    lon: vp.center.lon + xM / (METERS_PER_DEGREE * cos),
  };
}

/** The `points` attribute for an SVG <polygon> of the given ring. */
export function polygonPoints(vp: Viewport, vertices: GeoPointLL[]): string {
  return vertices
    .map((v) => {
      const { x, y } = geoToPixel(vp, v);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
}

export interface GridRect {
  x: number;
  y: number;
  width: number;
  height: number;
  count: number;
}

/** Density cells as pixel rectangles for the coarse stats map. */
export function densityRects(vp: Viewport, cells: DensityCell[], cellDeg: number): GridRect[] {
  return cells.map((cell) => {
    const corner = geoToPixel(vp, {
      lat: cell.center.lat + cellDeg / 2,
      lon: cell.center.lon - cellDeg / 2,
    });
    const opposite = geoToPixel(vp, {
      lat: cell.center.lat - cellDeg / 2,
      lon: cell.center.lon + cellDeg / 2,
    });
    return {
      x: corner.x,
      y: corner.y,
      width: opposite.x - corner.x,
      height: opposite.y - corner.y,
      count: cell.count,
    };
  });
}

/** Append a clicked map position to the ring being drawn. */
export function addVertex(ring: GeoPointLL[], vp: Viewport, x: number, y: number): GeoPointLL[] {
  return [...ring, pixelToGeo(vp, x, y)];
}

/**
 * Close the ring being drawn, returning it when it can form a region.
 *
 * Null means the ring is kept open (fewer than 3 vertices); the caller
 * decides whether to keep collecting clicks or discard.
 */
export function closeRing(ring: GeoPointLL[]): GeoPointLL[] | null {
  if (ring.length < 3) return null;
  return ring;
}
