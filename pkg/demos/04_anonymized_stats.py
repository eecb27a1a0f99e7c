"""
Anonymized daily statistics: what the server is allowed to learn
================================================================

Devices summarize each day into counters and a centroid snapped to a
0.02-degree grid (a 2-3 km cell), so uploads support epidemiology
without localizing anyone.
"""

import json

from anontrace import (
    GeoPoint,
    KnownLocation,
    LocationSample,
    TraceStore,
    compute_daily_stats,
    grid_round,
    stats_to_json,
    validate_stats_payload,
)

from anontrace.dayfile import day_start

T0 = day_start("2023-11-15")

store = TraceStore()
store.add_known_location(KnownLocation("home", "Home", GeoPoint(43.7300, 12.6300),
                                       radius=100.0, is_home=True))
for i in range(100):
    store.append_sample(LocationSample(T0 + i * 300, GeoPoint(43.7300, 12.6300), 10.0))
for i in range(100, 140):
    store.append_sample(LocationSample(T0 + i * 300, GeoPoint(43.7381, 12.6300), 10.0))

stats = compute_daily_stats(store, "2023-11-15", "f2b2c7e4-demo-install")

print(f"minutes tracked:   {stats.minutes_tracked}")
print(f"minutes at home:   {stats.minutes_at_home}")
print(f"locations visited: {stats.known_locations_visited}")

# The true mean position is precise to meters; the upload is not.
true_mean = GeoPoint(43.73231, 12.63)
print(f"true daily mean:   ({true_mean.lat:.5f}, {true_mean.lon:.5f})")
print(f"uploaded centroid: ({stats.centroid.lat}, {stats.centroid.lon})")
print(f"grid rounding of the mean itself: {grid_round(true_mean, 0.02)}")

# The wire payload is the whole upload: counters and a coarse centroid.
wire = stats_to_json(stats)
print(f"payload: {wire}")

# The receiving side re-validates shape, grid alignment, and counter
# consistency before accepting anything.
accepted = validate_stats_payload(json.loads(wire))
print(f"server-side validation passed: {sorted(accepted) == sorted(json.loads(wire))}")

# A payload with an off-grid centroid is refused outright.
tampered = json.loads(wire)
tampered["centroid_lat"] = 43.7301
try:
    validate_stats_payload(tampered)
except ValueError as exc:
    print(f"off-grid payload refused: {exc}")
