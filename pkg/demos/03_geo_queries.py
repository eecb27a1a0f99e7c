"""
Distributed geo-temporal queries, evaluated entirely on-device
==============================================================

A health authority publishes a "call to action": polygons with time
intervals, optional disclosed identifiers, and sensitivity parameters.
Every device evaluates it against its own local trace; the match
decision never leaves the device.
"""

from anontrace import ContactLog, GeoPoint, LocationSample, TraceStore, match_cta, validate_cta
from anontrace.dayfile import day_start

T0 = day_start("2023-11-15")

# The authority's query: "were you at the market square between 10:00
# and 14:00 for at least 15 minutes?"
document = {
    "id": "cta-market-2023-11-15",
    "authority_id": "asl-pu",
    "regions": [
        {
            "polygon": [
                [43.7370, 12.6290],
                [43.7370, 12.6315],
                [43.7392, 12.6315],
                [43.7392, 12.6290],
            ],
            "interval": [T0 + 36_000, T0 + 50_400],
        }
    ],
    "tcns": [],
    "max_distance_m": 20.0,
    "min_exposure_s": 900,
    "message": "A market visitor tested positive. Watch for symptoms.",
    "created_at": T0 + 86_400,
    "expires_at": T0 + 15 * 86_400,
}
cta = validate_cta(document)
print(f"query {cta.id}: {len(cta.regions)} region(s), min exposure {cta.min_exposure_s} s")

# Carla spent 11:00 to 12:30 at the market: her device matches.
carla = TraceStore()
for i in range(19):
    carla.append_sample(LocationSample(T0 + 39_600 + i * 300, GeoPoint(43.7381, 12.6300), 10.0))
result = match_cta(carla, ContactLog(), cta, now=T0 + 86_400)
print(f"carla: matched={result is not None}", end="")
print(f", channel={result.channel.value}, exposure={result.exposure_seconds} s" if result else "")

# Dario walked past in two minutes: a qualifying position, but not
# enough accumulated exposure.
dario = TraceStore()
for i in range(3):
    dario.append_sample(LocationSample(T0 + 40_000 + i * 60, GeoPoint(43.7381, 12.6300), 10.0))
dario.append_sample(LocationSample(T0 + 40_300, GeoPoint(43.7500, 12.6300), 10.0))
print(f"dario: matched={match_cta(dario, ContactLog(), cta, now=T0 + 86_400) is not None}")

# Elena was across town all day: no region, no match, and the authority
# never learns any of this — evaluation is local.
elena = TraceStore()
for i in range(48):
    elena.append_sample(LocationSample(T0 + 36_000 + i * 300, GeoPoint(43.7000, 12.7000), 10.0))
print(f"elena: matched={match_cta(elena, ContactLog(), cta, now=T0 + 86_400) is not None}")

# The same query can also carry disclosed identifiers; any overlap with
# the local contact log fires the contact channel, geometry aside.
contact_query = validate_cta({**document, "id": "cta-tcn", "regions": [],
                              "tcns": ["ab" * 16]})
log = ContactLog()
log.record_observation(bytes.fromhex("ab" * 16), T0 + 40_000)
hit = match_cta(elena, log, contact_query, now=T0 + 86_400)
print(f"elena via contact channel: matched={hit is not None}, channel={hit.channel.value}")
