"""Turn a voluntarily shared trace into an anonymous call to action.

The diagnosed user's samples are clustered into stay points; each stay
point becomes a regular 12-gon around a snapped, expanded center with a
padded time interval.  Region vertices therefore never coincide with raw
samples and interval endpoints never reveal sample-resolution times.
The user's rotating identifiers come in as a compact report and are
expanded into the query's TCN set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cta import CallToAction, CtaRegion
from .geo import METERS_PER_DEGREE, GeoPoint, GeoPolygon, haversine
from .tcn import TcnReport
from .trace import LocationSample

MIN_STAY_DURATION_S = 300
MAX_STAY_RADIUS_M = 75.0

#: Extra buffer added around a stay radius when drawing the query region.
REGION_EXPANSION_M = 100.0

#: Padding applied to both ends of a stay interval in the query.
TIME_PAD_S = 1800

#: Pitch of the grid the region center is snapped to, hiding the true centroid.
CENTER_SNAP_M = 10.0

CTA_LIFETIME_S = 14 * 86_400

REGION_VERTEX_COUNT = 12


class BuildError(ValueError):
    """No usable input to build a call to action from."""


@dataclass(frozen=True)
class StayPoint:
    """A run of consecutive samples confined to a small radius."""

    center: GeoPoint
    radius: float
    start: int
    end: int
    support_samples: int


@dataclass(frozen=True)
class BuildParams:
    expansion_m: float = REGION_EXPANSION_M
    time_pad_s: int = TIME_PAD_S
    center_snap_m: float = CENTER_SNAP_M
    lifetime_s: int = CTA_LIFETIME_S
    max_distance_m: float = 20.0
    min_exposure_s: int = 300
    include_movement_discs: bool = False
    movement_disc_radius_m: float = 100.0


def detect_stay_points(
    samples: list[LocationSample],
    min_stay_duration_s: int = MIN_STAY_DURATION_S,
    max_stay_radius_m: float = MAX_STAY_RADIUS_M,
) -> list[StayPoint]:
    """Greedy forward scan for disjoint stationary runs.

    A run grows while each next sample stays within the radius of the
    run's running centroid; it becomes a stay point when it spans at
    least the minimum duration.
    """
    active = [s for s in samples if not s.discarded]
    stays = []
    i = 0
    while i < len(active):
        run = [active[i]]
        centroid = active[i].position
        j = i + 1
        while j < len(active):
            if haversine(centroid, active[j].position) > max_stay_radius_m:
                break
            run.append(active[j])
            centroid = GeoPoint(
                sum(s.position.lat for s in run) / len(run),
                sum(s.position.lon for s in run) / len(run),
            )
            j += 1
        span = run[-1].timestamp - run[0].timestamp
        if span >= min_stay_duration_s:
            radius = max(haversine(centroid, s.position) for s in run)
            stays.append(StayPoint(centroid, radius, run[0].timestamp, run[-1].timestamp, len(run)))
            i = j
        else:
            i += 1
    return stays


def build_cta(
    stay_points: list[StayPoint],
    tcn_report: TcnReport | None,
    cta_id: str,
    authority_id: str,
    message: str,
    created_at: int,
    params: BuildParams = BuildParams(),
    movement_samples: list[LocationSample] | None = None,
) -> CallToAction:
    """Assemble the anonymous query from stay points and a TCN report.

    Each stay point yields one region: a regular 12-gon circumscribing a
    circle of radius (stay radius + expansion) centered on the snapped
    centroid, valid over the padded stay interval.  Movement between
    stay points is deliberately not queried by default; per-sample disc
    regions can be enabled where an authority accepts the extra alarms.
    """
    has_discs = params.include_movement_discs and bool(movement_samples)
    if not stay_points and not has_discs and tcn_report is None:
        raise BuildError("need at least one stay point, movement disc, or TCN report")
    regions = []
    for stay in stay_points:
        center = _snap_center(stay.center, params.center_snap_m)
        polygon = _regular_polygon(center, stay.radius + params.expansion_m, REGION_VERTEX_COUNT)
        regions.append(CtaRegion(polygon, stay.start - params.time_pad_s, stay.end + params.time_pad_s))
    if params.include_movement_discs and movement_samples:
        for sample in movement_samples:
            if sample.discarded:
                continue
            center = _snap_center(sample.position, params.center_snap_m)
            polygon = _regular_polygon(center, params.movement_disc_radius_m, REGION_VERTEX_COUNT)
            regions.append(
                CtaRegion(polygon, sample.timestamp - params.time_pad_s, sample.timestamp + params.time_pad_s)
            )
    tcns = frozenset(tcn_report.expand()) if tcn_report is not None else frozenset()
    return CallToAction(
        id=cta_id,
        authority_id=authority_id,
        regions=tuple(regions),
        tcns=tcns,
        max_distance_m=params.max_distance_m,
        min_exposure_s=params.min_exposure_s,
        message=message,
        created_at=created_at,
        expires_at=created_at + params.lifetime_s,
    )


def _snap_center(p: GeoPoint, snap_m: float) -> GeoPoint:
    lat_pitch = snap_m / METERS_PER_DEGREE
    lon_pitch = snap_m / (METERS_PER_DEGREE * math.cos(math.radians(p.lat)))
    return GeoPoint(round(p.lat / lat_pitch) * lat_pitch, round(p.lon / lon_pitch) * lon_pitch)


def _regular_polygon(center: GeoPoint, inradius_m: float, sides: int) -> GeoPolygon:
    # Circumscribing the circle: vertices sit at inradius / cos(pi/n).
    vertex_radius = inradius_m / math.cos(math.pi / sides)
    lat_scale = 1.0 / METERS_PER_DEGREE
    lon_scale = 1.0 / (METERS_PER_DEGREE * math.cos(math.radians(center.lat)))
    vertices = []
    for k in range(sides):
        angle = 2.0 * math.pi * k / sides
        vertices.append(
            GeoPoint(
                center.lat + vertex_radius * math.sin(angle) * lat_scale,
                center.lon + vertex_radius * math.cos(angle) * lon_scale,
            )
        )
    return GeoPolygon(vertices)
