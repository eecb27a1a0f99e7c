"""Device-local trace of location samples, known places, and notes.

Everything here stays on the device.  The store is append-only with a
30-day retention horizon; samples with poor GPS accuracy are kept (they
still show up in the daily statistics) but flagged so they never feed
exposure matching or dwell computation.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .geo import GeoPoint, haversine

#: Samples reported with a worse accuracy radius than this are flagged
#: as discarded: counted in statistics, ignored by matching.
ACCURACY_DISCARD_M = 50.0

#: Upper bound on the presence time a single sample can claim; prevents
#: one sparse fix from counting as hours of dwell.
DWELL_GAP_CAP_S = 300

RETENTION_DAYS_DEFAULT = 30
SECONDS_PER_DAY = 86_400

KNOWN_LOCATION_RADIUS_DEFAULT_M = 100.0


class SampleSource(Enum):
    GPS = "gps"
    GEOFENCE_EVENT = "geofence-event"
    MANUAL = "manual"


class OrderingError(ValueError):
    """Sample appended with a timestamp not after the current tail."""


@dataclass(frozen=True)
class LocationSample:
    timestamp: int
    position: GeoPoint
    accuracy_radius: float
    source: SampleSource = SampleSource.GPS

    def __post_init__(self):
        if self.timestamp <= 0:
            raise ValueError("sample timestamp must be positive")
        if self.accuracy_radius < 0:
            raise ValueError("accuracy radius must be >= 0")

    @property
    def discarded(self) -> bool:
        return self.accuracy_radius > ACCURACY_DISCARD_M


@dataclass(frozen=True)
class KnownLocation:
    id: str
    label: str
    center: GeoPoint
    radius: float = KNOWN_LOCATION_RADIUS_DEFAULT_M
    is_home: bool = False

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("known location radius must be positive")


@dataclass(frozen=True)
class Note:
    timestamp: int
    text: str
    position: GeoPoint | None = None

    def __post_init__(self):
        if not self.text:
            raise ValueError("note text must not be empty")


@dataclass
class GeofenceEvent:
    location_id: str
    enter: int
    exit: int


class TraceStore:
    """Time-ordered local trace with retention and dwell primitives.

    Single-writer: only one thread may mutate; readers operate on the
    current snapshot.  All read operations are pure.
    """

    def __init__(self, retention_days: int = RETENTION_DAYS_DEFAULT):
        self.samples: list[LocationSample] = []
        self.known_locations: list[KnownLocation] = []
        self.notes: list[Note] = []
        self.retention_days = retention_days

    def append_sample(self, sample: LocationSample) -> None:
        """Append a sample; timestamps must be strictly increasing."""
        if self.samples and sample.timestamp <= self.samples[-1].timestamp:
            raise OrderingError(
                f"sample at {sample.timestamp} not after tail {self.samples[-1].timestamp}"
            )
        self.samples.append(sample)

    def add_known_location(self, loc: KnownLocation) -> None:
        if loc.is_home and any(k.is_home for k in self.known_locations):
            raise ValueError("at most one known location may be marked as home")
        self.known_locations.append(loc)

    def add_note(self, note: Note) -> None:
        self.notes.append(note)

    def expire(self, now: int) -> None:
        """Drop samples and notes older than the retention horizon.

        Known locations are user configuration, not trace data; they are
        kept.  Notes expire together with samples.
        """
        horizon = now - self.retention_days * SECONDS_PER_DAY
        self.samples = [s for s in self.samples if s.timestamp >= horizon]
        self.notes = [n for n in self.notes if n.timestamp >= horizon]

    def active_samples(self) -> list[LocationSample]:
        """Samples usable for matching (accuracy within threshold)."""
        return [s for s in self.samples if not s.discarded]

    def dwell_segments(self, start: int, end: int) -> list[tuple[GeoPoint, int, int]]:
        """Per-sample presence time inside [start, end].

        Each non-discarded sample in the window contributes
        ``min(gap to next sample, 300 s)`` seconds, clipped to the window;
        the last sample of the trace contributes 0.  Segments are disjoint,
        so their total never exceeds the window length.

        Returns (position, segment start, dwell seconds) triples.
        """
        if start > end:
            raise ValueError("window start after end")
        active = self.active_samples()
        segments = []
        for i, s in enumerate(active):
            if not start <= s.timestamp <= end:
                continue
            if i + 1 < len(active):
                dwell = min(active[i + 1].timestamp - s.timestamp, DWELL_GAP_CAP_S)
            else:
                dwell = 0
            dwell = min(dwell, end - s.timestamp)
            segments.append((s.position, s.timestamp, dwell))
        return segments

    def geofence_events(self) -> list[GeofenceEvent]:
        """Maximal visit intervals for each known location.

        A visit is a run of consecutive non-discarded samples within the
        location radius; its end includes the last sample's dwell so a
        single-sample visit still has nonzero extent.  Where radii
        overlap, a sample belongs to the first-registered location only.
        """
        active = self.active_samples()
        dwells = self._dwells(active)
        owners = [self.owning_location(s.position) for s in active]
        events = []
        for loc in self.known_locations:
            run_start = None
            last_inside_idx = None
            for i, s in enumerate(active):
                inside = owners[i] is loc
                if inside and run_start is None:
                    run_start = s.timestamp
                if inside:
                    last_inside_idx = i
                if not inside and run_start is not None:
                    last = active[last_inside_idx]
                    events.append(GeofenceEvent(loc.id, run_start, last.timestamp + dwells[last_inside_idx]))
                    run_start = None
            if run_start is not None:
                last = active[last_inside_idx]
                events.append(GeofenceEvent(loc.id, run_start, last.timestamp + dwells[last_inside_idx]))
        return events

    def owning_location(self, position: GeoPoint) -> KnownLocation | None:
        """First-registered known location whose radius contains `position`."""
        for loc in self.known_locations:
            if haversine(position, loc.center) <= loc.radius:
                return loc
        return None

    def home_location(self) -> KnownLocation | None:
        for loc in self.known_locations:
            if loc.is_home:
                return loc
        return None

    @staticmethod
    def _dwells(active: list[LocationSample]) -> list[int]:
        return [
            min(active[i + 1].timestamp - active[i].timestamp, DWELL_GAP_CAP_S)
            if i + 1 < len(active)
            else 0
            for i in range(len(active))
        ]
