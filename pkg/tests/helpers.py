"""Shared test fixtures and independent oracle implementations.

The oracles here deliberately re-derive results from first principles
(winding numbers, dense edge sampling, brute-force re-summation) so the
library is always checked against a second, unrelated path.
"""

from __future__ import annotations

import math
import random

from anontrace.geo import EARTH_RADIUS_M, GeoPoint, GeoPolygon
from anontrace.trace import LocationSample, TraceStore

BASE_T = 1_700_000_000  # fixed epoch anchor for synthetic traces


def haversine_oracle(a: GeoPoint, b: GeoPoint) -> float:
    """Independent haversine via the asin formulation."""
    la1, lo1, la2, lo2 = map(math.radians, (a.lat, a.lon, b.lat, b.lon))
    h = math.sin((la2 - la1) / 2) ** 2 + math.cos(la1) * math.cos(la2) * math.sin((lo2 - lo1) / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


def winding_inside(p: GeoPoint, poly: GeoPolygon) -> bool:
    """Winding-number membership oracle in a local projection."""
    origin = poly.centroid
    cos0 = math.cos(math.radians(origin.lat))
    px, py = (p.lon - origin.lon) * cos0, p.lat - origin.lat
    total = 0.0
    verts = [((v.lon - origin.lon) * cos0 - px, v.lat - origin.lat - py) for v in poly.vertices]
    for i in range(len(verts)):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % len(verts)]
        total += math.atan2(x1 * y2 - x2 * y1, x1 * x2 + y1 * y2)
    return abs(total) > math.pi


def sampled_edge_distance(p: GeoPoint, poly: GeoPolygon, samples_per_edge: int) -> float:
    """Dense edge-sampling distance oracle (meters)."""
    best = math.inf
    verts = list(poly.vertices)
    for i in range(len(verts)):
        a, b = verts[i], verts[(i + 1) % len(verts)]
        for k in range(samples_per_edge + 1):
            t = k / samples_per_edge
            q = GeoPoint(a.lat + t * (b.lat - a.lat), a.lon + t * (b.lon - a.lon))
            best = min(best, haversine_oracle(p, q))
    return best


def projected_point_segment_distance(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> float:
    """Closed-form point-to-segment distance on a local metric plane."""
    cos0 = math.cos(math.radians(a.lat))
    scale = math.pi * EARTH_RADIUS_M / 180.0
    px, py = (p.lon - a.lon) * cos0 * scale, (p.lat - a.lat) * scale
    bx, by = (b.lon - a.lon) * cos0 * scale, (b.lat - a.lat) * scale
    seg2 = bx * bx + by * by
    t = 0.0 if seg2 == 0 else max(0.0, min(1.0, (px * bx + py * by) / seg2))
    return math.hypot(px - t * bx, py - t * by)


def polygon_distance_oracle(p: GeoPoint, poly: GeoPolygon) -> float:
    if winding_inside(p, poly):
        return 0.0
    verts = list(poly.vertices)
    return min(
        projected_point_segment_distance(p, verts[i], verts[(i + 1) % len(verts)])
        for i in range(len(verts))
    )


def random_convex_polygon(rng: random.Random, center: GeoPoint, radius_deg: float) -> GeoPolygon:
    n = rng.randint(4, 9)
    angles = sorted(rng.uniform(0, 2 * math.pi) for _ in range(n))
    verts = [
        GeoPoint(center.lat + radius_deg * math.sin(a), center.lon + radius_deg * math.cos(a))
        for a in angles
    ]
    try:
        return GeoPolygon(verts)
    except ValueError:
        return random_convex_polygon(rng, center, radius_deg)


def make_store(points: list[tuple[int, float, float]], accuracy: float = 10.0) -> TraceStore:
    """Store from (seconds offset, lat, lon) triples anchored at BASE_T."""
    store = TraceStore()
    for dt, lat, lon in points:
        store.append_sample(LocationSample(BASE_T + dt, GeoPoint(lat, lon), accuracy))
    return store


def square(lat0: float, lon0: float, side_deg: float) -> GeoPolygon:
    return GeoPolygon(
        [
            GeoPoint(lat0, lon0),
            GeoPoint(lat0, lon0 + side_deg),
            GeoPoint(lat0 + side_deg, lon0 + side_deg),
            GeoPoint(lat0 + side_deg, lon0),
        ]
    )
