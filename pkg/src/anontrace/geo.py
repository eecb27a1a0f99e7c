"""Geodesic primitives: distances, polygon membership, grid rounding.

All functions work on latitude/longitude in decimal degrees and return
distances in meters on a spherical Earth.  Polygon operations use a local
equirectangular projection centered on the polygon, which is accurate to
well below GPS noise for regions spanning a few kilometers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

EARTH_RADIUS_M = 6_371_000.0

#: Meters per degree of latitude (and of longitude at the equator).
METERS_PER_DEGREE = math.pi * EARTH_RADIUS_M / 180.0

#: Edge length of the coarse distribution cells used for query routing.
COARSE_CELL_DEG = 0.2


class GeoError(ValueError):
    """Invalid geographic value (out-of-range coordinate, bad polygon)."""


@dataclass(frozen=True)
class GeoPoint:
    """A WGS-like position in decimal degrees."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise GeoError("coordinates must be finite")
        if not -90.0 <= self.lat <= 90.0:
            raise GeoError(f"latitude {self.lat} out of range [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise GeoError(f"longitude {self.lon} out of range [-180, 180]")


@dataclass(frozen=True)
class BoundingBox:
    min_lat: float
    min_lon: float
    max_lat: float
    max_lon: float

    def __post_init__(self):
        if self.min_lat > self.max_lat or self.min_lon > self.max_lon:
            raise GeoError("bounding box min exceeds max")

    @classmethod
    def around(cls, points) -> "BoundingBox":
        pts = list(points)
        if not pts:
            raise GeoError("bounding box of empty point set")
        return cls(
            min(p.lat for p in pts),
            min(p.lon for p in pts),
            max(p.lat for p in pts),
            max(p.lon for p in pts),
        )


@dataclass(frozen=True)
class GeoPolygon:
    """A simple (non-self-intersecting) ring of >= 3 vertices.

    The ring is implicitly closed: the edge from the last vertex back to
    the first is part of the boundary.  Degenerate rings (zero area,
    repeated consecutive vertices) and rings crossing the antimeridian
    are rejected at construction so every downstream consumer can assume
    a well-formed region.
    """

    vertices: tuple[GeoPoint, ...]
    _centroid: GeoPoint = field(init=False, repr=False, compare=False)

    def __init__(self, vertices):
        verts = tuple(vertices)
        if len(verts) < 3:
            raise GeoError("polygon needs at least 3 vertices")
        for a, b in _ring_edges(verts):
            if a.lat == b.lat and a.lon == b.lon:
                raise GeoError("polygon has two identical consecutive vertices")
            if abs(a.lon - b.lon) > 180.0:
                raise GeoError("polygon crosses the antimeridian")
        object.__setattr__(self, "vertices", verts)
        centroid = GeoPoint(
            sum(v.lat for v in verts) / len(verts),
            sum(v.lon for v in verts) / len(verts),
        )
        object.__setattr__(self, "_centroid", centroid)
        proj = [_project(centroid, v) for v in verts]
        if abs(_shoelace_area(proj)) < 1e-18:
            raise GeoError("polygon has zero area")
        if _ring_self_intersects(proj):
            raise GeoError("polygon ring is self-intersecting")

    @property
    def centroid(self) -> GeoPoint:
        """Arithmetic mean of the vertices (projection center)."""
        return self._centroid

    def bounding_box(self) -> BoundingBox:
        return BoundingBox.around(self.vertices)


def haversine(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points in meters.

    Uses the atan2 formulation, which stays numerically stable for
    antipodal and for very close points.
    """
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    d_phi = math.radians(b.lat - a.lat)
    d_lambda = math.radians(b.lon - a.lon)
    h = math.sin(d_phi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(d_lambda / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.atan2(math.sqrt(h), math.sqrt(1.0 - h))


def point_in_polygon(p: GeoPoint, poly: GeoPolygon) -> bool:
    """Even-odd membership test; points on the boundary count as inside.

    The polygon and the point are projected onto a local equirectangular
    plane centered at the polygon centroid, then a horizontal ray is cast
    and edge crossings are counted.
    """
    origin = poly.centroid
    x, y = _project(origin, p)
    ring = [_project(origin, v) for v in poly.vertices]
    if _on_ring(x, y, ring):
        return True
    inside = False
    for (x1, y1), (x2, y2) in _ring_edges(ring):
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
            if x < x_cross:
                inside = not inside
    return inside


def distance_to_polygon(p: GeoPoint, poly: GeoPolygon) -> float:
    """Distance in meters from a point to a polygon; 0 when inside.

    The nearest boundary point is found per edge in the local projection
    and the final distance is measured with the haversine formula.
    """
    if point_in_polygon(p, poly):
        return 0.0
    origin = poly.centroid
    px, py = _project(origin, p)
    ring = [_project(origin, v) for v in poly.vertices]
    best = math.inf
    for a, b in _ring_edges(ring):
        cx, cy = _closest_on_segment(px, py, a, b)
        candidate = haversine(p, _unproject(origin, cx, cy))
        if candidate < best:
            best = candidate
    return best


def grid_round(p: GeoPoint, cell: float) -> GeoPoint:
    """Snap a point to the center of its `cell`-degree grid cell.

    Rounding is half-away-from-zero so results are deterministic across
    platforms.  Used to coarsen uploaded centroids to ~2 km cells.
    """
    if cell <= 0:
        raise GeoError("grid cell size must be positive")
    # Rounding the quotient first keeps decimal ties (12.63 / 0.02 = 631.5)
    # from being lost to binary float noise before the half-away rule runs.
    lat = _round_half_away(round(p.lat / cell, 9)) * cell
    lon = _round_half_away(round(p.lon / cell, 9)) * cell
    return GeoPoint(lat, lon)


def is_on_grid(value: float, cell: float, tol: float = 1e-9) -> bool:
    """True when `value` is an integer multiple of `cell` (within `tol`)."""
    ratio = value / cell
    return abs(ratio - round(ratio)) <= tol


def bbox_diagonal(box: BoundingBox) -> float:
    """Haversine length of the box diagonal, in meters."""
    return haversine(GeoPoint(box.min_lat, box.min_lon), GeoPoint(box.max_lat, box.max_lon))


def _cell_index(value: float, cell: float) -> int:
    # Rounding before the floor keeps coordinates that sit exactly on a
    # cell boundary (e.g. 12.60 / 0.2) in the cell they nominally open.
    return math.floor(round(value / cell, 9))


def coarse_cell(p: GeoPoint, cell: float = COARSE_CELL_DEG) -> str:
    """Identifier of the coarse distribution cell containing `p`.

    Cells tile the globe by flooring each coordinate to a multiple of
    `cell` degrees; the id is "<lat_index>:<lon_index>".
    """
    return f"{_cell_index(p.lat, cell)}:{_cell_index(p.lon, cell)}"


def cells_covering_bbox(box: BoundingBox, cell: float = COARSE_CELL_DEG) -> list[str]:
    """Ids of all coarse cells intersecting a bounding box."""
    lat_lo = _cell_index(box.min_lat, cell)
    lat_hi = _cell_index(box.max_lat, cell)
    lon_lo = _cell_index(box.min_lon, cell)
    lon_hi = _cell_index(box.max_lon, cell)
    return [f"{i}:{j}" for i in range(lat_lo, lat_hi + 1) for j in range(lon_lo, lon_hi + 1)]


def parse_cell_id(cell_id: str) -> tuple[int, int]:
    """Parse "<i>:<j>" into an index pair, raising GeoError when malformed."""
    parts = cell_id.split(":")
    if len(parts) != 2:
        raise GeoError(f"malformed cell id {cell_id!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise GeoError(f"malformed cell id {cell_id!r}") from None


def neighbor_cells(cell_id: str) -> list[str]:
    """The cell plus its 8 neighbors; used by devices to query around home."""
    i, j = parse_cell_id(cell_id)
    return [f"{i + di}:{j + dj}" for di in (-1, 0, 1) for dj in (-1, 0, 1)]


# -- local equirectangular projection -------------------------------------

def _project(origin: GeoPoint, p: GeoPoint) -> tuple[float, float]:
    # Degree units; x shrunk by cos(origin latitude) so both axes are metric-proportional.
    return ((p.lon - origin.lon) * math.cos(math.radians(origin.lat)), p.lat - origin.lat)


def _unproject(origin: GeoPoint, x: float, y: float) -> GeoPoint:
    return GeoPoint(origin.lat + y, origin.lon + x / math.cos(math.radians(origin.lat)))


def _ring_edges(ring):
    n = len(ring)
    for i in range(n):
        yield ring[i], ring[(i + 1) % n]


def _shoelace_area(ring) -> float:
    area = 0.0
    for (x1, y1), (x2, y2) in _ring_edges(ring):
        area += x1 * y2 - x2 * y1
    return area / 2.0


def _closest_on_segment(px, py, a, b) -> tuple[float, float]:
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    seg_len2 = dx * dx + dy * dy
    t = 0.0 if seg_len2 == 0.0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / seg_len2))
    return ax + t * dx, ay + t * dy


_BOUNDARY_EPS_DEG = 1e-9  # ~0.1 mm; tolerance for "on the boundary"


def _on_ring(x, y, ring) -> bool:
    for a, b in _ring_edges(ring):
        cx, cy = _closest_on_segment(x, y, a, b)
        if math.hypot(x - cx, y - cy) <= _BOUNDARY_EPS_DEG:
            return True
    return False


def _segments_properly_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if abs(v) < 1e-18:
            return 0
        return 1 if v > 0 else -1

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


def _ring_self_intersects(ring) -> bool:
    edges = list(_ring_edges(ring))
    n = len(edges)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j == (i + 1) % n) or (i == (j + 1) % n):
                continue  # adjacent edges share a vertex
            if _segments_properly_intersect(*edges[i], *edges[j]):
                return True
    return False


def _round_half_away(x: float) -> float:
    return math.copysign(math.floor(abs(x) + 0.5), x)
