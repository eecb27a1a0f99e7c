"""Device-side orchestration: what a real phone app would run.

One agent owns one trace store, one TCN ratchet, and one contact log.
It decides when to record a position (adaptive interval plus forced
geofence samples), pulls the CTA feed for the coarse cells around home,
matches every cached CTA strictly locally, and uploads exactly two
things: anonymized daily statistics, and — only on an explicit consent
flag — a diagnosis report.  Nothing about match results ever leaves the
device.
"""

from __future__ import annotations

import random
import uuid
from dataclasses import dataclass, field

from .cta import CallToAction, CtaExpiredError, CtaValidationError, ExposureMatch, match_cta, validate_cta
from .geo import GeoPoint, coarse_cell, neighbor_cells
from .stats import compute_daily_stats, stats_to_dict
from .tcn import ContactLog, RatchetWalker, TcnRatchet, rotation_index
from .trace import KnownLocation, LocationSample, SampleSource, TraceStore

FAST_INTERVAL_S = 30
SLOW_INTERVAL_S = 300
SPEED_THRESHOLD_MPS = 1.0


class ConsentError(RuntimeError):
    """A diagnosis report was requested without explicit consent."""


@dataclass(frozen=True)
class AgentConfig:
    fast_interval_s: int = FAST_INTERVAL_S
    slow_interval_s: int = SLOW_INTERVAL_S
    speed_threshold_mps: float = SPEED_THRESHOLD_MPS
    retention_days: int = 30
    backoff_base_s: int = 60
    backoff_cap_s: int = 3600


def sampling_interval(speed_mps: float, config: AgentConfig = AgentConfig()) -> int:
    """Adaptive sampling period: fast when moving, slow when still."""
    if speed_mps < 0:
        raise ValueError("speed must be >= 0")
    return config.fast_interval_s if speed_mps > config.speed_threshold_mps else config.slow_interval_s


@dataclass
class DeviceAgent:
    installation_id: str
    store: TraceStore
    ratchet: TcnRatchet
    contact_log: ContactLog
    transport: object
    home_cells: list[str]
    config: AgentConfig = AgentConfig()
    pending_alerts: list[ExposureMatch] = field(default_factory=list)

    _cached_ctas: dict = field(default_factory=dict, init=False, repr=False)
    _alerted_ids: set = field(default_factory=set, init=False, repr=False)
    _uploaded_days: set = field(default_factory=set, init=False, repr=False)
    _last_sample_ts: int | None = field(default=None, init=False, repr=False)
    _last_owner_id: str | None = field(default=None, init=False, repr=False)
    _feed_since: int = field(default=0, init=False, repr=False)
    _backoff_s: int = field(default=0, init=False, repr=False)
    _next_sync_at: int = field(default=0, init=False, repr=False)
    _walker: RatchetWalker | None = field(default=None, init=False, repr=False)

    @classmethod
    def create(
        cls,
        transport,
        home: GeoPoint,
        created_at: int,
        rng: random.Random | None = None,
        config: AgentConfig = AgentConfig(),
        home_radius_m: float = 100.0,
    ) -> "DeviceAgent":
        """New installation: fresh random id and ratchet, home registered."""
        rng = rng or random.Random()
        installation_id = str(uuid.UUID(int=rng.getrandbits(128), version=4))
        store = TraceStore()
        store.add_known_location(KnownLocation("home", "Home", home, home_radius_m, is_home=True))
        return cls(
            installation_id=installation_id,
            store=store,
            ratchet=TcnRatchet.generate(rotation_index(created_at), rng=rng),
            contact_log=ContactLog(),
            transport=transport,
            home_cells=neighbor_cells(coarse_cell(home)),
            config=config,
        )

    # -- sampling -----------------------------------------------------------

    def observe_position(self, t: int, position: GeoPoint, accuracy: float, speed_mps: float) -> bool:
        """Offer a position fix; record it when due or on geofence crossing.

        Returns True when a sample was appended.  Low-accuracy fixes are
        recorded too — flagged, counted in statistics, never matched.
        """
        owner = self.store.owning_location(position)
        owner_id = owner.id if owner is not None else None
        crossing = self._last_sample_ts is not None and owner_id != self._last_owner_id
        due = (
            self._last_sample_ts is None
            or t - self._last_sample_ts >= sampling_interval(speed_mps, self.config)
        )
        if not due and not crossing:
            return False
        source = SampleSource.GEOFENCE_EVENT if crossing and not due else SampleSource.GPS
        self.store.append_sample(LocationSample(t, position, accuracy, source))
        self._last_sample_ts = t
        self._last_owner_id = owner_id
        return True

    # -- TCN layer ----------------------------------------------------------

    def current_tcn(self, t: int) -> bytes:
        if self._walker is None or self._walker.ratchet is not self.ratchet:
            self._walker = RatchetWalker(self.ratchet)
        return self._walker.tcn_at(rotation_index(t))

    def observe_tcn(self, tcn: bytes, t: int, rssi: int | None = None) -> None:
        self.contact_log.record_observation(tcn, t, rssi)

    # -- CTA sync and local matching -----------------------------------------

    def sync_and_match(self, now: int) -> list[ExposureMatch]:
        """Pull new CTAs (respecting backoff), then match everything cached.

        Matching happens locally and works offline on the cached feed; a
        fetch failure schedules an exponential-backoff retry and nothing
        else changes.  Returns only the alerts that are new this call.
        """
        if now >= self._next_sync_at:
            try:
                self._fetch_feed(now)
                self._backoff_s = 0
            except Exception:
                self._backoff_s = min(
                    self.config.backoff_cap_s,
                    self._backoff_s * 2 if self._backoff_s else self.config.backoff_base_s,
                )
                self._next_sync_at = now + self._backoff_s
        return self.match_cached(now)

    def _fetch_feed(self, now: int) -> None:
        response = self.transport.request(
            "GET",
            "/v1/cta",
            query={"cells": ",".join(self.home_cells), "since": str(self._feed_since)},
        )
        if response.status != 200:
            raise RuntimeError(f"feed returned {response.status}")
        for entry in response.json()["ctas"]:
            published_at = entry.pop("published_at", 0)
            self._feed_since = max(self._feed_since, published_at)
            try:
                cta = validate_cta(entry)
            except CtaValidationError:
                continue
            self._cached_ctas.setdefault(cta.id, cta)

    def match_cached(self, now: int) -> list[ExposureMatch]:
        new_alerts = []
        for cta_id, cta in list(self._cached_ctas.items()):
            if cta_id in self._alerted_ids:
                continue
            try:
                result = match_cta(self.store, self.contact_log, cta, now)
            except CtaExpiredError:
                del self._cached_ctas[cta_id]
                continue
            if result is not None:
                self._alerted_ids.add(cta_id)
                self.pending_alerts.append(result)
                new_alerts.append(result)
        return new_alerts

    # -- uploads --------------------------------------------------------------

    def upload_daily_stats(self, day: str, now: int) -> bool:
        """Upload the day's statistics at most once; True when accepted."""
        if day in self._uploaded_days:
            return False
        stats = compute_daily_stats(self.store, day, self.installation_id)
        response = self.transport.request("POST", "/v1/stats", body=stats_to_dict(stats))
        if response.status != 202:
            return False
        self._uploaded_days.add(day)
        return True

    def submit_diagnosis_report(self, consent: bool, range_start: int, range_end: int) -> str:
        """Voluntarily share a trace range; hard-fails without consent."""
        if consent is not True:
            raise ConsentError("diagnosis reports require explicit consent")
        if range_start > range_end:
            raise ValueError("report range inverted")
        samples = [
            [s.timestamp, s.position.lat, s.position.lon, s.accuracy_radius]
            for s in self.store.active_samples()
            if range_start <= s.timestamp <= range_end
        ]
        from_index = max(rotation_index(max(range_start, 0)), self.ratchet.created_at_index)
        to_index = max(rotation_index(range_end), from_index)
        report = self.ratchet.build_report(from_index, to_index)
        response = self.transport.request(
            "POST",
            "/v1/report",
            body={
                "consent": True,
                "samples": samples,
                "tcn_report": {
                    "chain_key": report.chain_key_at_start.hex(),
                    "start_index": report.start_index,
                    "end_index": report.end_index,
                },
            },
        )
        if response.status != 202:
            raise RuntimeError(f"report intake returned {response.status}")
        return response.json()["report_id"]

    # -- maintenance ------------------------------------------------------------

    def expire(self, now: int) -> None:
        """Daily retention sweep over trace and contact log."""
        self.store.expire(now)
        self.contact_log.expire(now)

    @property
    def alert_cta_ids(self) -> set:
        return set(self._alerted_ids)
