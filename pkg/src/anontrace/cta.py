"""Call-to-action queries and their fully-local evaluation.

A call to action (CTA) is a distributed query published by a health
authority: geo-polygons with time intervals and/or a set of temporary
contact numbers, plus the sensitivity knobs ``max_distance_m`` and
``min_exposure_s``.  Matching runs entirely on the device against the
local trace and contact log; nothing about the result is transmitted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .geo import GeoError, GeoPoint, GeoPolygon, cells_covering_bbox, distance_to_polygon
from .tcn import TCN_LENGTH, ContactLog
from .trace import TraceStore


class CtaValidationError(ValueError):
    """Raised when a raw CTA document violates the schema or invariants."""


class CtaExpiredError(ValueError):
    """Raised when a CTA is evaluated past its expiry time."""


@dataclass(frozen=True)
class CtaRegion:
    polygon: GeoPolygon
    start: int
    end: int

    def __post_init__(self):
        if self.start >= self.end:
            raise CtaValidationError("region interval start must be before end")


@dataclass(frozen=True)
class CallToAction:
    id: str
    authority_id: str
    regions: tuple[CtaRegion, ...]
    tcns: frozenset[bytes]
    max_distance_m: float
    min_exposure_s: int
    message: str
    created_at: int
    expires_at: int
    coverage_cells: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.id:
            raise CtaValidationError("CTA id must not be empty")
        if not self.authority_id:
            raise CtaValidationError("CTA authority id must not be empty")
        if self.expires_at <= self.created_at:
            raise CtaValidationError("CTA expired at creation")
        if not self.regions and not self.tcns:
            raise CtaValidationError("CTA needs at least one region or one TCN")
        if self.max_distance_m < 0:
            raise CtaValidationError("max distance must be >= 0")
        if self.min_exposure_s < 0:
            raise CtaValidationError("min exposure must be >= 0")
        for tcn in self.tcns:
            if len(tcn) != TCN_LENGTH:
                raise CtaValidationError("TCN must be 16 bytes")

    def compute_coverage_cells(self) -> list[str]:
        """Coarse cells intersecting any region's bounding box."""
        cells: list[str] = []
        for region in self.regions:
            for cell in cells_covering_bbox(region.polygon.bounding_box()):
                if cell not in cells:
                    cells.append(cell)
        return cells


class MatchChannel(Enum):
    GEO = "geo"
    TCN = "tcn"
    BOTH = "both"


@dataclass(frozen=True)
class ExposureMatch:
    cta_id: str
    channel: MatchChannel
    exposure_seconds: int
    matched_regions: tuple[int, ...]
    matched_tcns: int


def validate_cta(raw: dict) -> CallToAction:
    """Parse and validate a raw CTA document (decoded JSON).

    Enforces every type invariant: well-formed simple polygons, ordered
    intervals, at least one query channel, non-negative sensitivity, and
    an expiry after creation.
    """
    if not isinstance(raw, dict):
        raise CtaValidationError("CTA document must be an object")
    try:
        regions = []
        for entry in raw.get("regions", []):
            polygon = GeoPolygon(GeoPoint(lat, lon) for lat, lon in entry["polygon"])
            start, end = entry["interval"]
            regions.append(CtaRegion(polygon, int(start), int(end)))
        tcns = frozenset(bytes.fromhex(h) for h in raw.get("tcns", []))
        return CallToAction(
            id=str(raw["id"]),
            authority_id=str(raw["authority_id"]),
            regions=tuple(regions),
            tcns=tcns,
            max_distance_m=float(raw.get("max_distance_m", 0.0)),
            min_exposure_s=int(raw.get("min_exposure_s", 0)),
            message=str(raw.get("message", "")),
            created_at=int(raw["created_at"]),
            expires_at=int(raw["expires_at"]),
            coverage_cells=tuple(raw.get("coverage_cells", ())),
        )
    except CtaValidationError:
        raise
    except (KeyError, TypeError, ValueError, GeoError) as exc:
        raise CtaValidationError(f"invalid CTA document: {exc}") from exc


def cta_to_dict(cta: CallToAction) -> dict:
    """Canonical wire representation (JSON object, TCNs hex-encoded)."""
    return {
        "id": cta.id,
        "authority_id": cta.authority_id,
        "regions": [
            {
                "polygon": [[v.lat, v.lon] for v in r.polygon.vertices],
                "interval": [r.start, r.end],
            }
            for r in cta.regions
        ],
        "tcns": sorted(t.hex() for t in cta.tcns),
        "max_distance_m": cta.max_distance_m,
        "min_exposure_s": cta.min_exposure_s,
        "message": cta.message,
        "created_at": cta.created_at,
        "expires_at": cta.expires_at,
        "coverage_cells": list(cta.coverage_cells),
    }


def cta_to_json(cta: CallToAction) -> str:
    return json.dumps(cta_to_dict(cta), sort_keys=True)


def match_geo(store: TraceStore, cta: CallToAction) -> tuple[int, list[int]]:
    """Exposure seconds and indices of regions the trace matches.

    Per region, exposure is the summed dwell of non-discarded samples
    that fall inside the region's time interval and within
    ``max_distance_m`` of the polygon.  A region matches when it has at
    least one qualifying sample and its exposure reaches
    ``min_exposure_s``.  The total is the maximum over matched regions,
    not the sum: overlapping regions must not double-count minutes.
    """
    matched: list[int] = []
    best_exposure = 0
    for idx, region in enumerate(cta.regions):
        exposure = 0
        qualifying = False
        for position, _, dwell in store.dwell_segments(region.start, region.end):
            if distance_to_polygon(position, region.polygon) <= cta.max_distance_m:
                qualifying = True
                exposure += dwell
        if qualifying and exposure >= cta.min_exposure_s:
            matched.append(idx)
            best_exposure = max(best_exposure, exposure)
    return best_exposure, matched


def match_tcn(contact_log: ContactLog, cta: CallToAction) -> int:
    """Count of query TCNs found in the local contact log (exact match)."""
    return len(cta.tcns & contact_log.observed_tcns())


def match_cta(
    store: TraceStore,
    contact_log: ContactLog,
    cta: CallToAction,
    now: int,
) -> ExposureMatch | None:
    """Evaluate a CTA locally; None when neither channel fires.

    Pure function of its arguments: no network, no persistence.  Any
    shared TCN triggers the contact channel regardless of geo exposure;
    the geo channel applies the authority's sensitivity parameters.
    """
    if now >= cta.expires_at:
        raise CtaExpiredError(f"CTA {cta.id} expired at {cta.expires_at}")
    exposure, matched_regions = match_geo(store, cta)
    tcn_hits = match_tcn(contact_log, cta)
    geo_fired = bool(matched_regions)
    tcn_fired = tcn_hits > 0
    if not geo_fired and not tcn_fired:
        return None
    if geo_fired and tcn_fired:
        channel = MatchChannel.BOTH
    elif geo_fired:
        channel = MatchChannel.GEO
    else:
        channel = MatchChannel.TCN
    return ExposureMatch(
        cta_id=cta.id,
        channel=channel,
        exposure_seconds=exposure,
        matched_regions=tuple(matched_regions),
        matched_tcns=tcn_hits,
    )
