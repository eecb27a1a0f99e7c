"""Anonymized daily usage statistics.

Seven per-installation counters are computed from one day of the local
trace and shipped with a random installation id.  The only position that
ever leaves the device is the day's centroid snapped to a 0.02-degree
grid (cells of roughly 2 km), so uploaded statistics cannot localize a
user; the serializer refuses any centroid that is not on that grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .dayfile import day_start
from .geo import BoundingBox, GeoPoint, bbox_diagonal, grid_round, haversine, is_on_grid
from .trace import TraceStore

#: Centroid grid pitch in degrees (~2.2 km of latitude per cell).
CENTROID_GRID_DEG = 0.02

SECONDS_PER_DAY = 86_400


class StatsContractError(ValueError):
    """A statistics payload would leak more than the anonymity contract allows."""


@dataclass(frozen=True)
class DailyStats:
    installation_id: str
    day: str
    minutes_tracked: int
    centroid: GeoPoint | None
    bbox_diagonal_m: int
    known_locations_visited: int
    notes_count: int
    samples_recorded: int
    samples_discarded: int
    minutes_at_home: int


def compute_daily_stats(store: TraceStore, day: str, installation_id: str) -> DailyStats:
    """Compute the day's counters from a store snapshot.

    Pure function of (store, day).  Minutes are dwell-covered time, not
    wall-clock uptime; discarded samples count only in the recorded and
    discarded totals.  A day with no samples yields all-zero stats with
    no centroid.
    """
    start = day_start(day)
    end = start + SECONDS_PER_DAY - 1
    day_samples = [s for s in store.samples if start <= s.timestamp <= end]
    active = [s for s in day_samples if not s.discarded]
    segments = store.dwell_segments(start, end)
    total_dwell = sum(dwell for _, _, dwell in segments)

    centroid = None
    diagonal = 0
    if active:
        mean = GeoPoint(
            sum(s.position.lat for s in active) / len(active),
            sum(s.position.lon for s in active) / len(active),
        )
        centroid = grid_round(mean, CENTROID_GRID_DEG)
        diagonal = round(bbox_diagonal(BoundingBox.around(s.position for s in active)))

    events = [e for e in store.geofence_events() if e.enter <= end and e.exit >= start]
    visited = {e.location_id for e in events}

    home = store.home_location()
    home_dwell = 0
    if home is not None:
        home_dwell = sum(
            dwell
            for position, _, dwell in segments
            if haversine(position, home.center) <= home.radius
        )

    return DailyStats(
        installation_id=installation_id,
        day=day,
        minutes_tracked=total_dwell // 60,
        centroid=centroid,
        bbox_diagonal_m=diagonal,
        known_locations_visited=len(visited),
        notes_count=sum(1 for n in store.notes if start <= n.timestamp <= end),
        samples_recorded=len(day_samples),
        samples_discarded=sum(1 for s in day_samples if s.discarded),
        minutes_at_home=home_dwell // 60,
    )


def stats_to_dict(stats: DailyStats) -> dict:
    """Upload payload: exactly the statistics fields, nothing else.

    Refuses to serialize a centroid off the 0.02-degree grid; that is the
    whole anonymity contract of this channel.
    """
    if stats.centroid is not None:
        for coord in (stats.centroid.lat, stats.centroid.lon):
            if not is_on_grid(coord, CENTROID_GRID_DEG):
                raise StatsContractError(f"centroid coordinate {coord} is not on the 0.02 grid")
        centroid_lat = round(stats.centroid.lat, 2)
        centroid_lon = round(stats.centroid.lon, 2)
    else:
        centroid_lat = None
        centroid_lon = None
    return {
        "installation_id": stats.installation_id,
        "day": stats.day,
        "minutes_tracked": stats.minutes_tracked,
        "centroid_lat": centroid_lat,
        "centroid_lon": centroid_lon,
        "bbox_diagonal_m": stats.bbox_diagonal_m,
        "known_locations_visited": stats.known_locations_visited,
        "notes_count": stats.notes_count,
        "samples_recorded": stats.samples_recorded,
        "samples_discarded": stats.samples_discarded,
        "minutes_at_home": stats.minutes_at_home,
    }


def stats_to_json(stats: DailyStats) -> str:
    return json.dumps(stats_to_dict(stats), sort_keys=True)


STATS_FIELDS = (
    "installation_id",
    "day",
    "minutes_tracked",
    "centroid_lat",
    "centroid_lon",
    "bbox_diagonal_m",
    "known_locations_visited",
    "notes_count",
    "samples_recorded",
    "samples_discarded",
    "minutes_at_home",
)


def validate_stats_payload(raw: dict) -> dict:
    """Server-side schema check mirroring the device-side contract."""
    if not isinstance(raw, dict):
        raise StatsContractError("stats payload must be an object")
    if set(raw) != set(STATS_FIELDS):
        extra = set(raw) - set(STATS_FIELDS)
        missing = set(STATS_FIELDS) - set(raw)
        raise StatsContractError(f"stats payload fields wrong (extra={sorted(extra)}, missing={sorted(missing)})")
    if not raw["installation_id"] or not isinstance(raw["installation_id"], str):
        raise StatsContractError("installation_id must be a non-empty string")
    lat, lon = raw["centroid_lat"], raw["centroid_lon"]
    if (lat is None) != (lon is None):
        raise StatsContractError("centroid must be both present or both absent")
    if lat is not None:
        if not (is_on_grid(float(lat), CENTROID_GRID_DEG) and is_on_grid(float(lon), CENTROID_GRID_DEG)):
            raise StatsContractError("centroid is not on the 0.02 grid")
    for field in (
        "minutes_tracked",
        "bbox_diagonal_m",
        "known_locations_visited",
        "notes_count",
        "samples_recorded",
        "samples_discarded",
        "minutes_at_home",
    ):
        value = raw[field]
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise StatsContractError(f"{field} must be a non-negative integer")
    if raw["samples_discarded"] > raw["samples_recorded"]:
        raise StatsContractError("discarded samples exceed recorded samples")
    if raw["minutes_at_home"] > raw["minutes_tracked"]:
        raise StatsContractError("minutes at home exceed minutes tracked")
    return raw
