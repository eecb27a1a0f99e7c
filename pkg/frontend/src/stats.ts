/** Open-data CSV parsing and the aggregates the stats view renders.
 *
 * The export schema is fixed and none of its fields can contain commas
 * or quotes, so parsing is a strict header check plus line splitting.
 */

import { STATS_GRID_DEG, gridRound, isOnGrid } from "./geometry.js";
import type { GeoPointLL, StatsRow } from "./types.js";

export const OPEN_DATA_HEADER =
  "day,row_key,minutes_tracked,centroid_lat,centroid_lon,bbox_diag_m," +
  "known_locations,notes,samples_recorded,samples_discarded,minutes_at_home";

export class OpenDataFormatError extends Error {}

function toNumber(field: string, raw: string): number {
  const value = Number(raw);
  if (raw === "" || !Number.isFinite(value)) {
    throw new OpenDataFormatError(`row field ${field} is not numeric: ${raw!}`);
  }
  return value;
}

export function parseOpenDataCsv(text: string): StatsRow[] {
  const lines = text.split(/\r\n|\n/).filter((line) => line !== "");
  if (lines.length === 0 || lines[0] !== OPEN_DATA_HEADER) {
    throw new OpenDataFormatError("unexpected open-data CSV header");
  }
  const rows: StatsRow[] = [];
  for (const line of lines.slice(1)) {
    const cols = line.split(",");
    if (cols.length !== 11) {
      throw new OpenDataFormatError(`expected 11 columns, got ${cols.length}`);
    }
    rows.push({
      day: cols[0]!,
      rowKey: cols[1]!,
      minutesTracked: toNumber("minutes_tracked", cols[2]!),
      centroidLat: toNumber("centroid_lat", cols[3]!),
      centroidLon: toNumber("centroid_lon", cols[4]!),
      bboxDiagM: toNumber("bbox_diag_m", cols[5]!),
      knownLocations: toNumber("known_locations", cols[6]!),
      notes: toNumber("notes", cols[7]!),
      samplesRecorded: toNumber("samples_recorded", cols[8]!),
      samplesDiscarded: toNumber("samples_discarded", cols[9]!),
      minutesAtHome: toNumber("minutes_at_home", cols[10]!),
    });
  }
  return rows;
}

export interface DailySummary {
  day: string;
  installations: number;
  meanMinutesTracked: number;
  meanMinutesAtHome: number;
}

/** Per-day aggregates for the table view, sorted by day. */
export function summarizeByDay(rows: StatsRow[]): DailySummary[] {
  const byDay = new Map<string, StatsRow[]>();
  for (const row of rows) {
    const bucket = byDay.get(row.day);
    if (bucket) {
      bucket.push(row);
    } else {
      byDay.set(row.day, [row]);
    }
  }
  return [...byDay.entries()]
    .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
    .map(([day, dayRows]) => ({
      day,
      installations: dayRows.length,
      meanMinutesTracked:
        dayRows.reduce((sum, r) => sum + r.minutesTracked, 0) / dayRows.length,
      meanMinutesAtHome:
        dayRows.reduce((sum, r) => sum + r.minutesAtHome, 0) / dayRows.length,
    }));
}

export interface DensityCell {
  center: GeoPointLL;
  count: number;
}

/**
 * Bucket row centroids into statistics-grid cells for the coarse map.
 *
 * Every emitted coordinate is a grid-cell center, so the view never
 * renders anything finer than the upload grid even if a row somehow
 * carried an off-grid value.
 */
export function centroidDensity(rows: StatsRow[], cellDeg = STATS_GRID_DEG): DensityCell[] {
  const counts = new Map<string, DensityCell>();
  for (const row of rows) {
    const center = gridRound({ lat: row.centroidLat, lon: row.centroidLon }, cellDeg);
    const key = `${center.lat}/${center.lon}`;
    const cell = counts.get(key);
    if (cell) {
      cell.count += 1;
    } else {
      counts.set(key, { center, count: 1 });
    }
  }
  return [...counts.values()].sort((a, b) => b.count - a.count);
}

/** True when every rendered coordinate sits on the statistics grid. */
export function coordinatesOnGrid(cells: DensityCell[], cellDeg = STATS_GRID_DEG): boolean {
  return cells.every(
    (cell) => isOnGrid(cell.center.lat, cellDeg) && isOnGrid(cell.center.lon, cellDeg),
  );
}
