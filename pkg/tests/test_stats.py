import json
import random
import re

import pytest

from anontrace.dayfile import day_start
from anontrace.geo import GeoPoint, grid_round, haversine
from anontrace.stats import (
    STATS_FIELDS,
    DailyStats,
    StatsContractError,
    compute_daily_stats,
    stats_to_dict,
    stats_to_json,
    validate_stats_payload,
)
from anontrace.trace import KnownLocation, LocationSample, Note, TraceStore

DAY = "2023-11-15"
T0 = day_start(DAY)


def store_at(samples, notes=(), home=None):
    """Store from (offset_s, lat, lon, accuracy) rows anchored at T0."""
    store = TraceStore()
    if home is not None:
        store.add_known_location(home)
    for off, lat, lon, acc in samples:
        store.append_sample(LocationSample(T0 + off, GeoPoint(lat, lon), acc))
    for off, text in notes:
        store.add_note(Note(T0 + off, text))
    return store


class TestComputeDailyStats:
    def test_empty_day_is_all_zero(self):
        stats = compute_daily_stats(TraceStore(), DAY, "inst-1")
        assert stats.minutes_tracked == 0
        assert stats.centroid is None
        assert stats.bbox_diagonal_m == 0
        assert stats.known_locations_visited == 0
        assert stats.notes_count == 0
        assert stats.samples_recorded == 0
        assert stats.samples_discarded == 0
        assert stats.minutes_at_home == 0

    def test_ten_recorded_three_discarded(self):
        rows = [(off, 43.7262, 12.6365, 90.0 if off in (120, 300, 420) else 10.0)
                for off in range(0, 600, 60)]
        home = KnownLocation("home", "home", GeoPoint(43.7262, 12.6365), 100.0, is_home=True)
        store = store_at(rows, notes=[(100, "felt feverish"), (-100, "yesterday")], home=home)
        stats = compute_daily_stats(store, DAY, "inst-1")

        assert stats.samples_recorded == 10
        assert stats.samples_discarded == 3
        # Active dwell: gaps of 60/120/60/120/120/60 s, last sample 0 s.
        assert stats.minutes_tracked == 9
        assert stats.minutes_at_home == 9
        assert stats.centroid == GeoPoint(43.72, 12.64)
        assert stats.bbox_diagonal_m == 0
        assert stats.known_locations_visited == 1
        assert stats.notes_count == 1

    def test_centroid_is_grid_rounded_mean(self):
        rows = [(0, 43.731, 12.601, 10.0), (60, 43.733, 12.603, 10.0)]
        stats = compute_daily_stats(store_at(rows), DAY, "inst-1")
        assert stats.centroid == grid_round(GeoPoint(43.732, 12.602), 0.02)
        assert stats.centroid == GeoPoint(43.74, 12.60)

    def test_discarded_samples_do_not_shift_centroid(self):
        rows = [(0, 43.71, 12.61, 10.0), (60, 43.71, 12.61, 10.0), (120, 44.9, 13.9, 120.0)]
        stats = compute_daily_stats(store_at(rows), DAY, "inst-1")
        assert stats.centroid == grid_round(GeoPoint(43.71, 12.61), 0.02)

    def test_bbox_diagonal_spans_active_extremes(self):
        rows = [(0, 43.70, 12.60, 10.0), (60, 43.71, 12.60, 10.0)]
        stats = compute_daily_stats(store_at(rows), DAY, "inst-1")
        expected = round(haversine(GeoPoint(43.70, 12.60), GeoPoint(43.71, 12.60)))
        assert stats.bbox_diagonal_m == expected
        assert 1105 <= stats.bbox_diagonal_m <= 1120

    def test_other_days_excluded(self):
        rows = [(-60, 43.7, 12.6, 10.0), (60, 43.7, 12.6, 10.0), (86_500, 43.7, 12.6, 10.0)]
        stats = compute_daily_stats(store_at(rows), DAY, "inst-1")
        assert stats.samples_recorded == 1

    def test_location_not_visited_not_counted(self):
        far = KnownLocation("office", "office", GeoPoint(44.5, 13.5), 100.0)
        store = store_at([(0, 43.7, 12.6, 10.0), (60, 43.7, 12.6, 10.0)], home=far)
        stats = compute_daily_stats(store, DAY, "inst-1")
        assert stats.known_locations_visited == 0
        assert stats.minutes_at_home == 0

    def test_pure_function_of_inputs(self):
        rows = [(off, 43.7 + off * 1e-6, 12.6, 10.0) for off in range(0, 1200, 60)]
        store = store_at(rows)
        assert compute_daily_stats(store, DAY, "i") == compute_daily_stats(store, DAY, "i")


def sample_stats(**overrides):
    base = DailyStats(
        installation_id="inst-1",
        day=DAY,
        minutes_tracked=9,
        centroid=GeoPoint(43.72, 12.64),
        bbox_diagonal_m=0,
        known_locations_visited=1,
        notes_count=1,
        samples_recorded=10,
        samples_discarded=3,
        minutes_at_home=9,
    )
    values = {**base.__dict__, **overrides}
    return DailyStats(**values)


class TestSerialization:
    def test_payload_has_exactly_the_contract_fields(self):
        payload = stats_to_dict(sample_stats())
        assert set(payload) == set(STATS_FIELDS)

    def test_round_trip_through_validator(self):
        payload = json.loads(stats_to_json(sample_stats()))
        assert validate_stats_payload(payload) == payload

    def test_refuses_off_grid_centroid(self):
        with pytest.raises(StatsContractError):
            stats_to_dict(sample_stats(centroid=GeoPoint(43.7262, 12.6365)))

    def test_absent_centroid_serializes_as_null(self):
        payload = stats_to_dict(sample_stats(centroid=None))
        assert payload["centroid_lat"] is None and payload["centroid_lon"] is None

    def test_no_high_precision_coordinates_in_wire_bytes(self):
        wire = stats_to_json(sample_stats())
        assert not re.search(r"\d+\.\d{3,}", wire)

    def test_random_days_never_leak_raw_positions(self):
        rng = random.Random(404)
        for _ in range(30):
            store = TraceStore()
            t = T0
            positions = []
            for _ in range(rng.randint(1, 40)):
                t += rng.randint(30, 600)
                p = GeoPoint(43.0 + rng.random(), 12.0 + rng.random())
                positions.append(p)
                store.append_sample(LocationSample(t, p, rng.choice([5.0, 10.0, 80.0])))
            wire = stats_to_json(compute_daily_stats(store, DAY, "inst-r"))
            for p in positions:
                assert f"{p.lat:.7f}" not in wire
                assert f"{p.lon:.7f}" not in wire
            assert not re.search(r"\d+\.\d{3,}", wire)


class TestPayloadValidation:
    def test_rejects_extra_field(self):
        payload = stats_to_dict(sample_stats())
        payload["raw_lat"] = 43.7262
        with pytest.raises(StatsContractError):
            validate_stats_payload(payload)

    def test_rejects_missing_field(self):
        payload = stats_to_dict(sample_stats())
        del payload["minutes_at_home"]
        with pytest.raises(StatsContractError):
            validate_stats_payload(payload)

    def test_rejects_off_grid_centroid(self):
        payload = stats_to_dict(sample_stats())
        payload["centroid_lat"] = 43.7262
        with pytest.raises(StatsContractError):
            validate_stats_payload(payload)

    def test_rejects_half_present_centroid(self):
        payload = stats_to_dict(sample_stats())
        payload["centroid_lon"] = None
        with pytest.raises(StatsContractError):
            validate_stats_payload(payload)

    def test_rejects_discarded_above_recorded(self):
        payload = stats_to_dict(sample_stats())
        payload["samples_discarded"] = payload["samples_recorded"] + 1
        with pytest.raises(StatsContractError):
            validate_stats_payload(payload)

    def test_rejects_home_minutes_above_tracked(self):
        payload = stats_to_dict(sample_stats())
        payload["minutes_at_home"] = payload["minutes_tracked"] + 1
        with pytest.raises(StatsContractError):
            validate_stats_payload(payload)

    def test_rejects_negative_and_boolean_counters(self):
        payload = stats_to_dict(sample_stats())
        payload["notes_count"] = -1
        with pytest.raises(StatsContractError):
            validate_stats_payload(payload)
        payload["notes_count"] = True
        with pytest.raises(StatsContractError):
            validate_stats_payload(payload)

    def test_rejects_empty_installation_id(self):
        payload = stats_to_dict(sample_stats())
        payload["installation_id"] = ""
        with pytest.raises(StatsContractError):
            validate_stats_payload(payload)
