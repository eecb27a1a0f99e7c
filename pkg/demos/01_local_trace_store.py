"""
Device-local trace store: samples, geofences, notes, retention
==============================================================

Everything in this demo stays on the device.  The store records a day
of movement, derives geofence events for a registered place, and shows
the 30-day retention sweep and the compact day-file serialization.
"""

from anontrace import (
    DayRecords,
    GeoPoint,
    KnownLocation,
    LocationSample,
    Note,
    TraceStore,
    decode_day,
    encode_day,
    haversine,
)

from anontrace.dayfile import day_start

# A day anchored at 2023-11-15 00:00 UTC.
T0 = day_start("2023-11-15")

store = TraceStore()

# Register home before recording: geofence events are derived, not sensed.
store.add_known_location(KnownLocation("home", "Home", GeoPoint(43.7300, 12.6300), radius=100.0))

# A morning at home (samples every 5 minutes), a walk, two hours at the
# market square, the walk back, and the evening at home again.
for i in range(36):
    store.append_sample(LocationSample(T0 + i * 300, GeoPoint(43.7300, 12.6300), 10.0))
for i, step in enumerate(range(36, 46)):
    store.append_sample(
        LocationSample(T0 + step * 300, GeoPoint(43.7300 + 0.0009 * i, 12.6300), 10.0)
    )
for step in range(46, 70):
    store.append_sample(LocationSample(T0 + step * 300, GeoPoint(43.7381, 12.6300), 10.0))
for i, step in enumerate(range(70, 80)):
    store.append_sample(
        LocationSample(T0 + step * 300, GeoPoint(43.7381 - 0.0009 * i, 12.6300), 10.0)
    )
for step in range(80, 92):
    store.append_sample(LocationSample(T0 + step * 300, GeoPoint(43.7300, 12.6300), 10.0))

# One low-accuracy fix: kept for the record, flagged and excluded from analysis.
store.append_sample(LocationSample(T0 + 92 * 300, GeoPoint(43.7308, 12.6291), 80.0))
store.add_note(Note(T0 + 50 * 300, "bought vegetables at the market"))

print(f"samples recorded: {len(store.samples)}")
print(f"discarded as inaccurate: {sum(1 for s in store.samples if s.discarded)}")

# Geofence events fall out of the trace geometry.
for event in store.geofence_events():
    hours = (event.exit - event.enter) / 3600
    print(f"{event.location_id}: entered {event.enter}, left {event.exit} ({hours:.1f} h inside)")

# Dwell time near the market square during the outing window.
market = GeoPoint(43.7381, 12.6300)
segments = store.dwell_segments(T0 + 13_800, T0 + 21_000)
near_market = sum(d for pos, _, d in segments if haversine(pos, market) <= 150.0)
print(f"dwell within 150 m of the market: {near_market / 60:.0f} minutes")

# The whole day serializes to a few kilobytes.
blob = encode_day(DayRecords(samples=store.samples, notes=store.notes))
print(f"day file: {len(blob)} bytes")
print(f"round trip intact: {len(decode_day(blob).samples) == len(store.samples)}")

# Thirty-one days later the sweep removes everything from this day.
store.expire(T0 + 31 * 86_400)
print(f"samples after 31-day sweep: {len(store.samples)}")
