/** Wire types shared with the backend, plus dashboard-local draft state. */

export interface GeoPointLL {
  lat: number;
  lon: number;
}

/** One query region as it appears on the wire: a closed ring + a time interval. */
export interface CtaRegionWire {
  polygon: [number, number][];
  interval: [number, number];
}

/** A call-to-action document exactly as POSTed to /v1/cta. */
export interface CtaDocument {
  id: string;
  authority_id: string;
  regions: CtaRegionWire[];
  tcns: string[];
  max_distance_m: number;
  min_exposure_s: number;
  message: string;
  created_at: number;
  expires_at: number;
  coverage_cells?: string[];
}

/** A region being drawn: vertices clicked so far plus its time interval. */
export interface DraftRegion {
  vertices: GeoPointLL[];
  startS: number;
  endS: number;
}

/**
 * Everything the publish form holds before validation.
 *
 * Mirrors the CallToAction fields pre-validation; `activeRegion` is the
 * ring currently being clicked together on the map and is not part of
 * the document until closed.
 */
export interface CtaDraft {
  id: string;
  authorityId: string;
  regions: DraftRegion[];
  tcnsHex: string[];
  maxDistanceM: number;
  minExposureS: number;
  message: string;
  createdAt: number;
  expiresAt: number;
  activeRegion: GeoPointLL[];
}

/** One parsed row of the open-data CSV export. */
export interface StatsRow {
  day: string;
  rowKey: string;
  minutesTracked: number;
  centroidLat: number;
  centroidLon: number;
  bboxDiagM: number;
  knownLocations: number;
  notes: number;
  samplesRecorded: number;
  samplesDiscarded: number;
  minutesAtHome: number;
}

export function emptyDraft(authorityId: string, now: number): CtaDraft {
  return {
    id: "",
    authorityId,
    regions: [],
    tcnsHex: [],
    maxDistanceM: 20,
    minExposureS: 900,
    message: "",
    createdAt: now,
    expiresAt: now + 14 * 86_400,
    activeRegion: [],
  };
}

/** Assemble the wire document from a draft (drawing state is dropped). */
export function draftToDocument(draft: CtaDraft): CtaDocument {
  return {
    id: draft.id,
    authority_id: draft.authorityId,
    regions: draft.regions.map((r) => ({
      polygon: r.vertices.map((v) => [v.lat, v.lon] as [number, number]),
      interval: [r.startS, r.endS] as [number, number],
    })),
    tcns: [...draft.tcnsHex].sort(),
    max_distance_m: draft.maxDistanceM,
    min_exposure_s: draft.minExposureS,
    message: draft.message,
    created_at: draft.createdAt,
    expires_at: draft.expiresAt,
  };
}
