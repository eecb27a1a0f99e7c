/** Client-side call-to-action validation.
 *
 * Duplicates the server's document rules so the publish form can flag
 * problems inline before anything leaves the browser; the server stays
 * authoritative. Checks, defaults, and error wording follow the backend
 * validator. On exotic JSON types (booleans where numbers belong) this
 * validator is deliberately stricter than the server's coercions.
 */

import { checkCoordinate, checkPolygon, cellsCoveringRing } from "./geometry.js";
import type { CtaDocument, CtaDraft, CtaRegionWire, GeoPointLL } from "./types.js";
import { draftToDocument } from "./types.js";

export type ValidationResult =
  | { ok: true; document: CtaDocument; coverageCells: string[] }
  | { ok: false; error: string; regionIndex?: number };

function fail(error: string, regionIndex?: number): ValidationResult {
  return regionIndex === undefined ? { ok: false, error } : { ok: false, error, regionIndex };
}

function toInt(value: unknown, what: string): number {
  if (typeof value === "number" && Number.isFinite(value)) return Math.trunc(value);
  if (typeof value === "string" && /^[+-]?\d+$/.test(value.trim())) {
    return parseInt(value.trim(), 10);
  }
  throw new Error(`invalid CTA document: ${what} is not an integer`);
}

function toFloat(value: unknown, what: string): number {
  if (typeof value === "number" && Number.isFinite(value)) return value;
  if (typeof value === "string" && value.trim() !== "") {
    const parsed = Number(value);
    if (Number.isFinite(parsed)) return parsed;
  }
  throw new Error(`invalid CTA document: ${what} is not a number`);
}

const HEX_TCN = /^[0-9a-fA-F]+$/;

function checkTcn(value: unknown): string | null {
  if (typeof value !== "string" || value.length % 2 !== 0 || (value !== "" && !HEX_TCN.test(value))) {
    return "invalid CTA document: TCN is not a hex string";
  }
  if (value.length !== 32) return "TCN must be 16 bytes";
  return null;
}

function parseRegion(entry: unknown, index: number): CtaRegionWire | ValidationResult {
  if (typeof entry !== "object" || entry === null || Array.isArray(entry)) {
    return fail("invalid CTA document: region is not an object", index);
  }
  const rec = entry as Record<string, unknown>;
  if (!Array.isArray(rec["polygon"])) {
    return fail("invalid CTA document: region polygon missing", index);
  }
  const vertices: GeoPointLL[] = [];
  for (const pair of rec["polygon"]) {
    if (!Array.isArray(pair) || pair.length !== 2) {
      return fail("invalid CTA document: polygon vertex is not a [lat, lon] pair", index);
    }
    const [lat, lon] = pair as [unknown, unknown];
    if (typeof lat !== "number" || typeof lon !== "number") {
      return fail("invalid CTA document: polygon vertex is not numeric", index);
    }
    const bad = checkCoordinate(lat, lon);
    if (bad) return fail(bad, index);
    vertices.push({ lat, lon });
  }
  const badRing = checkPolygon(vertices);
  if (badRing) return fail(badRing, index);
  if (!Array.isArray(rec["interval"]) || rec["interval"].length !== 2) {
    return fail("invalid CTA document: region interval missing", index);
  }
  let start: number;
  let end: number;
  try {
    start = toInt(rec["interval"][0], "interval start");
    end = toInt(rec["interval"][1], "interval end");
  } catch (exc) {
    return fail((exc as Error).message, index);
  }
  if (start >= end) return fail("region interval start must be before end", index);
  return {
    polygon: vertices.map((v) => [v.lat, v.lon] as [number, number]),
    interval: [start, end],
  };
}

/** Validate a raw decoded document the way the server will. */
export function validateCta(raw: unknown): ValidationResult {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    return fail("CTA document must be an object");
  }
  const rec = raw as Record<string, unknown>;

  const regions: CtaRegionWire[] = [];
  const rawRegions = rec["regions"] ?? [];
  if (!Array.isArray(rawRegions)) return fail("invalid CTA document: regions is not a list");
  for (let i = 0; i < rawRegions.length; i++) {
    const region = parseRegion(rawRegions[i], i);
    if ("ok" in region) return region;
    regions.push(region);
  }

  const tcns: string[] = [];
  const rawTcns = rec["tcns"] ?? [];
  if (!Array.isArray(rawTcns)) return fail("invalid CTA document: tcns is not a list");
  for (const tcn of rawTcns) {
    const bad = checkTcn(tcn);
    if (bad) return fail(bad);
    tcns.push((tcn as string).toLowerCase());
  }

  if (!("id" in rec)) return fail("invalid CTA document: id missing");
  if (!("authority_id" in rec)) return fail("invalid CTA document: authority_id missing");
  const id = String(rec["id"]);
  const authorityId = String(rec["authority_id"]);
  if (!id) return fail("CTA id must not be empty");
  if (!authorityId) return fail("CTA authority id must not be empty");

  let createdAt: number;
  let expiresAt: number;
  let maxDistance: number;
  let minExposure: number;
  try {
    if (!("created_at" in rec)) throw new Error("invalid CTA document: created_at missing");
    if (!("expires_at" in rec)) throw new Error("invalid CTA document: expires_at missing");
    createdAt = toInt(rec["created_at"], "created_at");
    expiresAt = toInt(rec["expires_at"], "expires_at");
    maxDistance = toFloat(rec["max_distance_m"] ?? 0, "max_distance_m");
    minExposure = toInt(rec["min_exposure_s"] ?? 0, "min_exposure_s");
  } catch (exc) {
    return fail((exc as Error).message);
  }

  if (expiresAt <= createdAt) return fail("CTA expired at creation");
  if (regions.length === 0 && tcns.length === 0) {
    return fail("CTA needs at least one region or one TCN");
  }
  if (maxDistance < 0) return fail("max distance must be >= 0");
  if (minExposure < 0) return fail("min exposure must be >= 0");

  const coverage: string[] = [];
  for (const region of regions) {
    const ring = region.polygon.map(([lat, lon]) => ({ lat, lon }));
    for (const cell of cellsCoveringRing(ring)) {
      if (!coverage.includes(cell)) coverage.push(cell);
    }
  }

  const document: CtaDocument = {
    id,
    authority_id: authorityId,
    regions,
    tcns: [...new Set(tcns)].sort(),
    max_distance_m: maxDistance,
    min_exposure_s: minExposure,
    message: String(rec["message"] ?? ""),
    created_at: createdAt,
    expires_at: expiresAt,
  };
  return { ok: true, document, coverageCells: coverage };
}

/**
 * Problems with a draft as typed, for inline display; empty when publishable.
 *
 * Runs the full document validation plus the freshness rule the server
 * applies at publish time (an already-expired document is refused).
 */
export function draftProblems(draft: CtaDraft, nowS: number): string[] {
  const problems: string[] = [];
  const result = validateCta(draftToDocument(draft));
  if (!result.ok) {
    problems.push(
      result.regionIndex === undefined
        ? result.error
        : `region ${result.regionIndex + 1}: ${result.error}`,
    );
  }
  if (draft.expiresAt <= nowS) problems.push("call to action is already expired");
  if (draft.activeRegion.length > 0) {
    problems.push("finish or discard the region being drawn");
  }
  return problems;
}
