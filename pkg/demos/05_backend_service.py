"""
The backend service: publish, distribute, ingest, export
========================================================

The server brokers query documents and aggregates; it stores no raw
locations and no contact logs.  This demo drives it in-process through
the same request/response objects the HTTP server uses.
"""

import json
import random

from anontrace import AuthorityAccount, BackendService, WireRequest

T0 = 1_700_006_400  # 2023-11-15 00:00 UTC
TOKEN = "demo-authority-token-0123456789ab"

authority = AuthorityAccount(
    authority_id="asl-pu",
    display_name="Public health unit",
    bearer_token=TOKEN,
    competence_cells=frozenset({"218:63"}),
)
service = BackendService([authority], clock=lambda: T0 + 86_400, rng=random.Random(7))


def call(method, path, body=None, token=None, query=None):
    headers = {"Authorization": f"Bearer {token}"} if token else {}
    raw = json.dumps(body).encode() if body is not None else b""
    return service.handle(WireRequest(method, path, query or {}, headers, raw))


# Publishing requires a bearer token and a region inside the authority's
# competence cells.
document = {
    "id": "cta-demo-1",
    "authority_id": "asl-pu",
    "regions": [{"polygon": [[43.72, 12.62], [43.72, 12.64], [43.74, 12.64], [43.74, 12.62]],
                 "interval": [T0 + 36_000, T0 + 50_400]}],
    "tcns": [],
    "max_distance_m": 20.0,
    "min_exposure_s": 900,
    "message": "Watch for symptoms.",
    "created_at": T0 + 86_400,
    "expires_at": T0 + 15 * 86_400,
}
print(f"publish without token: {call('POST', '/v1/cta', document).status}")
response = call("POST", "/v1/cta", document, token=TOKEN)
print(f"publish with token:    {response.status} -> coverage {response.json()['coverage_cells']}")

# Devices poll the feed for their neighborhood cells only.
feed = call("GET", "/v1/cta", query={"cells": "218:63", "since": "0"}).json()
print(f"feed for 218:63: {[c['id'] for c in feed['ctas']]}")
far = call("GET", "/v1/cta", query={"cells": "300:10", "since": "0"}).json()
print(f"feed for a distant cell: {[c['id'] for c in far['ctas']]}")

# Stats ingestion is idempotent per (installation, day).
payload = {
    "installation_id": "0b1d2e3f-demo", "day": "2023-11-15",
    "samples_recorded": 288, "samples_discarded": 3, "minutes_tracked": 700,
    "centroid_lat": 43.72, "centroid_lon": 12.64, "bbox_diagonal_m": 1200,
    "known_locations_visited": 2, "notes_count": 1, "minutes_at_home": 520,
}
print(f"stats ingest: {call('POST', '/v1/stats', payload).status}")
print(f"stats ingest again: {call('POST', '/v1/stats', payload).status}")

# The open-data export replaces installation ids with per-export keys.
csv_text = call("GET", "/v1/opendata/daily.csv").body.decode()
print("open data export:")
for line in csv_text.strip().splitlines():
    print(f"  {line}")
print(f"installation id present in export: {'0b1d2e3f-demo' in csv_text}")

service.close()
