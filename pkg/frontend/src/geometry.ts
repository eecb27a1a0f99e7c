/** Geodesic helpers mirroring the backend's validation geometry.
 *
 * Distances are meters on a spherical Earth; polygon checks run in a
 * local equirectangular projection centered on the ring's centroid,
 * exactly like the server, so client and server agree on which drawn
 * rings are acceptable.
 */

import type { GeoPointLL } from "./types.js";

export const EARTH_RADIUS_M = 6_371_000;
export const METERS_PER_DEGREE = (Math.PI * EARTH_RADIUS_M) / 180;
export const COARSE_CELL_DEG = 0.2;
export const STATS_GRID_DEG = 0.02;

export function haversine(a: GeoPointLL, b: GeoPointLL): number {
  const phi1 = (a.lat * Math.PI) / 180;
  const phi2 = (b.lat * Math.PI) / 180;
  const dPhi = ((b.lat - a.lat) * Math.PI) / 180;
  const dLambda = ((b.lon - a.lon) * Math.PI) / 180;
  const h =
    Math.sin(dPhi / 2) ** 2 +
    Math.cos(phi1) * Math.cos(phi2) * Math.sin(dLambda / 2) ** 2;
  return 2 * EARTH_RADIUS_M * Math.atan2(Math.sqrt(h), Math.sqrt(1 - h));
}

export function centroid(vertices: GeoPointLL[]): GeoPointLL {
  let lat = 0;
  let lon = 0;
  for (const v of vertices) {
    lat += v.lat;
    lon += v.lon;
  }
  return { lat: lat / vertices.length, lon: lon / vertices.length };
}

type XY = [number, number];

function project(origin: GeoPointLL, p: GeoPointLL): XY {
  return [
    (p.lon - origin.lon) * Math.cos((origin.lat * Math.PI) / 180),
    p.lat - origin.lat,
  ];
}

function* ringEdges<T>(ring: T[]): Generator<[T, T]> {
  for (let i = 0; i < ring.length; i++) {
    yield [ring[i]!, ring[(i + 1) % ring.length]!];
  }
}

function shoelaceArea(ring: XY[]): number {
  let area = 0;
  for (const [[x1, y1], [x2, y2]] of ringEdges(ring)) {
    area += x1 * y2 - x2 * y1;
  }
  return area / 2;
}

function orient(a: XY, b: XY, c: XY): number {
  const v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
  if (Math.abs(v) < 1e-18) return 0;
  return v > 0 ? 1 : -1;
}

function segmentsProperlyIntersect(p1: XY, p2: XY, p3: XY, p4: XY): boolean {
  const o1 = orient(p1, p2, p3);
  const o2 = orient(p1, p2, p4);
  const o3 = orient(p3, p4, p1);
  const o4 = orient(p3, p4, p2);
  return o1 !== o2 && o3 !== o4 && o1 !== 0 && o2 !== 0 && o3 !== 0 && o4 !== 0;
}

function ringSelfIntersects(ring: XY[]): boolean {
  const edges = [...ringEdges(ring)];
  const n = edges.length;
  for (let i = 0; i < n; i++) {
    for (let j = i + 1; j < n; j++) {
      if (j === (i + 1) % n || i === (j + 1) % n) continue;
      if (segmentsProperlyIntersect(...edges[i]!, ...edges[j]!)) return true;
    }
  }
  return false;
}

export function checkCoordinate(lat: number, lon: number): string | null {
  if (!Number.isFinite(lat) || !Number.isFinite(lon)) {
    return "coordinates must be finite";
  }
  if (lat < -90 || lat > 90) return `latitude ${lat} out of range [-90, 90]`;
  if (lon < -180 || lon > 180) return `longitude ${lon} out of range [-180, 180]`;
  return null;
}

/**
 * Why a drawn ring is not a valid query region, or null when it is.
 *
 * The checks and their order mirror the server: vertex count, repeated
 * consecutive vertices, antimeridian crossing, zero area, self-intersection.
 */
export function checkPolygon(vertices: GeoPointLL[]): string | null {
  if (vertices.length < 3) return "polygon needs at least 3 vertices";
  for (const v of vertices) {
    const bad = checkCoordinate(v.lat, v.lon);
    if (bad) return bad;
  }
  for (const [a, b] of ringEdges(vertices)) {
    if (a.lat === b.lat && a.lon === b.lon) {
      return "polygon has two identical consecutive vertices";
    }
    if (Math.abs(a.lon - b.lon) > 180) return "polygon crosses the antimeridian";
  }
  const origin = centroid(vertices);
  const projected = vertices.map((v) => project(origin, v));
  if (Math.abs(shoelaceArea(projected)) < 1e-18) return "polygon has zero area";
  if (ringSelfIntersects(projected)) return "polygon ring is self-intersecting";
  return null;
}

function roundHalfAway(x: number): number {
  return Math.sign(x) * Math.floor(Math.abs(x) + 0.5);
}

/** Snap a point to the center of its grid cell (half-away-from-zero ties). */
export function gridRound(p: GeoPointLL, cell: number): GeoPointLL {
  const lat = roundHalfAway(Number((p.lat / cell).toFixed(9))) * cell;
  const lon = roundHalfAway(Number((p.lon / cell).toFixed(9))) * cell;
  return { lat, lon };
}

export function isOnGrid(value: number, cell: number, tol = 1e-9): boolean {
  const ratio = value / cell;
  return Math.abs(ratio - Math.round(ratio)) <= tol;
}

function cellIndex(value: number, cell: number): number {
  // Rounding to 9 decimals first keeps boundary coordinates (12.60 / 0.2)
  // in the cell they nominally open, matching the server.
  return Math.floor(Number((value / cell).toFixed(9)));
}

export function coarseCell(p: GeoPointLL, cell = COARSE_CELL_DEG): string {
  return `${cellIndex(p.lat, cell)}:${cellIndex(p.lon, cell)}`;
}

export function cellsCoveringRing(
  vertices: GeoPointLL[],
  cell = COARSE_CELL_DEG,
): string[] {
  const latLo = cellIndex(Math.min(...vertices.map((v) => v.lat)), cell);
  const latHi = cellIndex(Math.max(...vertices.map((v) => v.lat)), cell);
  const lonLo = cellIndex(Math.min(...vertices.map((v) => v.lon)), cell);
  const lonHi = cellIndex(Math.max(...vertices.map((v) => v.lon)), cell);
  const cells: string[] = [];
  for (let i = latLo; i <= latHi; i++) {
    for (let j = lonLo; j <= lonHi; j++) {
      cells.push(`${i}:${j}`);
    }
  }
  return cells;
}
