"""Network service: CTA publication and feed, stats intake, open data.

The service is written as a pure request handler over a small embedded
SQLite store so the same code path serves three callers: the in-process
simulator transport (which records every byte for the privacy audit),
the unit tests, and the real HTTP adapter in :mod:`anontrace.server`.

Privacy posture: the durable store holds CTAs, daily statistics, and
stay-point digests of consensual diagnosis reports.  Raw location
samples are never persisted — report intake reduces the uploaded trace
to stay points immediately and drops the samples.  Bearer tokens are
compared, never logged or echoed.
"""

from __future__ import annotations

import csv
import io
import json
import random
import re
import sqlite3
import time
import uuid
from dataclasses import dataclass, field

from .builder import detect_stay_points
from .cta import CallToAction, CtaValidationError, cta_to_dict, validate_cta
from .geo import GeoPoint, coarse_cell, parse_cell_id
from .stats import STATS_FIELDS, StatsContractError, validate_stats_payload
from .tcn import TcnReport
from .trace import LocationSample

OPEN_DATA_HEADER = (
    "day,row_key,minutes_tracked,centroid_lat,centroid_lon,bbox_diag_m,"
    "known_locations,notes,samples_recorded,samples_discarded,minutes_at_home"
)

_CELL_LIST_RE = re.compile(r"^-?\d+:-?\d+(,-?\d+:-?\d+)*$")


@dataclass(frozen=True)
class AuthorityAccount:
    """One health authority allowed to publish in its competence area."""

    authority_id: str
    display_name: str
    bearer_token: str
    competence_cells: frozenset[str]

    def __post_init__(self):
        if not self.authority_id:
            raise ValueError("authority id must not be empty")
        if len(self.bearer_token) < 16:
            raise ValueError("bearer token too short to be high-entropy")
        if not self.competence_cells:
            raise ValueError("competence cells must not be empty")
        for cell in self.competence_cells:
            parse_cell_id(cell)


def load_authorities(path: str) -> list[AuthorityAccount]:
    """Read the authority registry config file (a JSON array)."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return [
        AuthorityAccount(
            authority_id=entry["authority_id"],
            display_name=entry.get("display_name", entry["authority_id"]),
            bearer_token=entry["bearer_token"],
            competence_cells=frozenset(entry["competence_cells"]),
        )
        for entry in raw
    ]


@dataclass(frozen=True)
class WireRequest:
    method: str
    path: str
    query: dict = field(default_factory=dict)
    headers: dict = field(default_factory=dict)
    body: bytes = b""

    def header(self, name: str) -> str | None:
        for key, value in self.headers.items():
            if key.lower() == name.lower():
                return value
        return None


@dataclass(frozen=True)
class WireResponse:
    status: int
    headers: dict
    body: bytes

    def json(self):
        return json.loads(self.body.decode("utf-8"))


_CORS_HEADERS = {
    "Access-Control-Allow-Origin": "*",
    "Access-Control-Allow-Methods": "GET, POST, OPTIONS",
    "Access-Control-Allow-Headers": "Authorization, Content-Type",
}

_SCHEMA = """
CREATE TABLE IF NOT EXISTS cta (
    id TEXT PRIMARY KEY,
    authority_id TEXT NOT NULL,
    document TEXT NOT NULL,
    coverage_cells TEXT NOT NULL,
    published_at INTEGER NOT NULL,
    expires_at INTEGER NOT NULL,
    revoked INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS stats (
    installation_id TEXT NOT NULL,
    day TEXT NOT NULL,
    payload TEXT NOT NULL,
    received_at INTEGER NOT NULL,
    PRIMARY KEY (installation_id, day)
);
CREATE TABLE IF NOT EXISTS report (
    id TEXT PRIMARY KEY,
    created_at INTEGER NOT NULL,
    stay_points TEXT NOT NULL,
    tcn_report TEXT
);
"""


class BackendService:
    """HTTP-shaped request handler over an embedded store.

    ``clock`` is injectable so simulated time drives CTA expiry; ``rng``
    seeds the per-export open-data row keys for reproducible tests (a
    live deployment leaves both at their defaults).
    """

    def __init__(
        self,
        authorities: list[AuthorityAccount],
        db_path: str = ":memory:",
        clock=time.time,
        rng: random.Random | None = None,
    ):
        self.authorities = {a.bearer_token: a for a in authorities}
        if len(self.authorities) != len(authorities):
            raise ValueError("duplicate bearer token in authority registry")
        self.clock = clock
        self.rng = rng or random.Random()
        self.db = sqlite3.connect(db_path, check_same_thread=False)
        self.db.executescript(_SCHEMA)
        self.db.commit()

    # -- dispatch ---------------------------------------------------------

    def handle(self, request: WireRequest) -> WireResponse:
        if request.method == "OPTIONS":
            return WireResponse(204, dict(_CORS_HEADERS), b"")
        route = (request.method, request.path)
        if route == ("POST", "/v1/cta"):
            return self._publish_cta(request)
        if route == ("GET", "/v1/cta"):
            return self._list_cta(request)
        match = re.fullmatch(r"/v1/cta/([^/]+)/revoke", request.path)
        if match and request.method == "POST":
            return self._revoke_cta(request, match.group(1))
        if route == ("POST", "/v1/stats"):
            return self._ingest_stats(request)
        if route == ("GET", "/v1/opendata/daily.csv"):
            return self._export_open_data(request)
        if route == ("POST", "/v1/report"):
            return self._intake_report(request)
        if route == ("GET", "/v1/report"):
            return self._list_reports(request)
        if route == ("GET", "/v1/health"):
            return _json_response(200, {"status": "ok"})
        if request.path.startswith("/v1/") and request.method not in ("GET", "POST"):
            return _error(405, "method not allowed")
        return _error(404, "unknown endpoint")

    # -- auth -------------------------------------------------------------

    def _authenticate(self, request: WireRequest) -> AuthorityAccount | None:
        header = request.header("Authorization") or ""
        if not header.startswith("Bearer "):
            return None
        return self.authorities.get(header[len("Bearer "):])

    # -- CTA lifecycle ----------------------------------------------------

    def _publish_cta(self, request: WireRequest) -> WireResponse:
        authority = self._authenticate(request)
        if authority is None:
            return _error(401, "missing or invalid bearer token")
        raw = _parse_json(request)
        if raw is None:
            return _error(400, "request body is not valid JSON")
        try:
            cta = validate_cta(raw)
        except CtaValidationError as exc:
            return _error(422, f"invalid call to action: {exc}")
        if cta.authority_id != authority.authority_id:
            return _error(403, "authority id does not match the presented token")
        for idx, region in enumerate(cta.regions):
            cell = coarse_cell(region.polygon.centroid)
            if cell not in authority.competence_cells:
                return _error(403, f"region {idx} centroid cell {cell} outside authority competence")
        now = int(self.clock())
        if cta.expires_at <= now:
            return _error(422, "call to action is already expired")
        coverage = cta.compute_coverage_cells()
        try:
            with self.db:
                self.db.execute(
                    "INSERT INTO cta (id, authority_id, document, coverage_cells, published_at, expires_at)"
                    " VALUES (?, ?, ?, ?, ?, ?)",
                    (
                        cta.id,
                        cta.authority_id,
                        json.dumps(cta_to_dict(cta), sort_keys=True),
                        json.dumps(coverage),
                        now,
                        cta.expires_at,
                    ),
                )
        except sqlite3.IntegrityError:
            return _error(409, f"call to action id {cta.id!r} already used")
        return _json_response(201, {"id": cta.id, "published_at": now, "coverage_cells": coverage})

    def _list_cta(self, request: WireRequest) -> WireResponse:
        cells_param = request.query.get("cells", "")
        if not cells_param or not _CELL_LIST_RE.fullmatch(cells_param):
            return _error(400, "cells must be a comma-separated list of i:j cell ids")
        wanted = set(cells_param.split(","))
        try:
            since = int(request.query.get("since", "0"))
        except ValueError:
            return _error(400, "since must be an integer timestamp")
        now = int(self.clock())
        rows = self.db.execute(
            "SELECT document, coverage_cells, published_at FROM cta"
            " WHERE revoked = 0 AND expires_at > ? AND published_at > ?",
            (now, since),
        ).fetchall()
        ctas = []
        for document, coverage, published_at in rows:
            cells = json.loads(coverage)
            # A region-less (TCN-only) CTA has no geographic footprint and
            # is relevant everywhere, so it is served to every cell query.
            if cells and not wanted.intersection(cells):
                continue
            entry = json.loads(document)
            entry["published_at"] = published_at
            ctas.append(entry)
        ctas.sort(key=lambda e: (e["published_at"], e["id"]))
        return _json_response(200, {"ctas": ctas, "now": now})

    def _revoke_cta(self, request: WireRequest, cta_id: str) -> WireResponse:
        authority = self._authenticate(request)
        if authority is None:
            return _error(401, "missing or invalid bearer token")
        row = self.db.execute("SELECT authority_id FROM cta WHERE id = ?", (cta_id,)).fetchone()
        if row is None:
            return _error(404, "no such call to action")
        if row[0] != authority.authority_id:
            return _error(403, "call to action belongs to another authority")
        with self.db:
            self.db.execute("UPDATE cta SET revoked = 1 WHERE id = ?", (cta_id,))
        return _json_response(200, {"id": cta_id, "status": "revoked"})

    # -- statistics -------------------------------------------------------

    def _ingest_stats(self, request: WireRequest) -> WireResponse:
        raw = _parse_json(request)
        if raw is None:
            return _error(400, "request body is not valid JSON")
        try:
            payload = validate_stats_payload(raw)
        except StatsContractError as exc:
            return _error(422, f"invalid statistics payload: {exc}")
        with self.db:
            self.db.execute(
                "INSERT INTO stats (installation_id, day, payload, received_at)"
                " VALUES (?, ?, ?, ?)"
                " ON CONFLICT (installation_id, day) DO UPDATE SET payload = excluded.payload",
                (
                    payload["installation_id"],
                    payload["day"],
                    json.dumps(payload, sort_keys=True),
                    int(self.clock()),
                ),
            )
        return _json_response(202, {"status": "accepted"})

    def _export_open_data(self, request: WireRequest) -> WireResponse:
        rows = self.db.execute(
            "SELECT installation_id, payload FROM stats ORDER BY day, installation_id"
        ).fetchall()
        row_keys: dict[str, str] = {}
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\r\n")
        writer.writerow(OPEN_DATA_HEADER.split(","))
        for installation_id, payload in rows:
            if installation_id not in row_keys:
                row_keys[installation_id] = self.rng.getrandbits(64).to_bytes(8, "big").hex()
            stats = json.loads(payload)
            writer.writerow(
                [
                    stats["day"],
                    row_keys[installation_id],
                    stats["minutes_tracked"],
                    "" if stats["centroid_lat"] is None else f"{stats['centroid_lat']:.2f}",
                    "" if stats["centroid_lon"] is None else f"{stats['centroid_lon']:.2f}",
                    stats["bbox_diagonal_m"],
                    stats["known_locations_visited"],
                    stats["notes_count"],
                    stats["samples_recorded"],
                    stats["samples_discarded"],
                    stats["minutes_at_home"],
                ]
            )
        body = out.getvalue().encode("utf-8")
        headers = {"Content-Type": "text/csv; charset=utf-8", **_CORS_HEADERS}
        return WireResponse(200, headers, body)

    # -- diagnosis reports --------------------------------------------------

    def _intake_report(self, request: WireRequest) -> WireResponse:
        raw = _parse_json(request)
        if raw is None:
            return _error(400, "request body is not valid JSON")
        if raw.get("consent") is not True:
            return _error(403, "diagnosis reports require explicit consent")
        try:
            samples = _parse_report_samples(raw.get("samples", []))
            tcn_report = _parse_tcn_report(raw.get("tcn_report"))
        except (KeyError, TypeError, ValueError) as exc:
            return _error(422, f"invalid diagnosis report: {exc}")
        if not samples and tcn_report is None:
            return _error(422, "diagnosis report carries neither samples nor a TCN report")
        stays = detect_stay_points(samples)
        report_id = uuid.UUID(int=self.rng.getrandbits(128), version=4).hex
        stay_rows = [
            {
                "lat": stay.center.lat,
                "lon": stay.center.lon,
                "radius_m": stay.radius,
                "start": stay.start,
                "end": stay.end,
                "support_samples": stay.support_samples,
            }
            for stay in stays
        ]
        tcn_row = None
        if tcn_report is not None:
            tcn_row = {
                "chain_key": tcn_report.chain_key_at_start.hex(),
                "start_index": tcn_report.start_index,
                "end_index": tcn_report.end_index,
            }
        with self.db:
            self.db.execute(
                "INSERT INTO report (id, created_at, stay_points, tcn_report) VALUES (?, ?, ?, ?)",
                (
                    report_id,
                    int(self.clock()),
                    json.dumps(stay_rows, sort_keys=True),
                    None if tcn_row is None else json.dumps(tcn_row, sort_keys=True),
                ),
            )
        return _json_response(202, {"report_id": report_id, "stay_points": len(stay_rows)})

    def _list_reports(self, request: WireRequest) -> WireResponse:
        if self._authenticate(request) is None:
            return _error(401, "missing or invalid bearer token")
        try:
            since = int(request.query.get("since", "0"))
        except ValueError:
            return _error(400, "since must be an integer timestamp")
        rows = self.db.execute(
            "SELECT id, created_at, stay_points, tcn_report FROM report"
            " WHERE created_at > ? ORDER BY created_at, id",
            (since,),
        ).fetchall()
        reports = [
            {
                "id": report_id,
                "created_at": created_at,
                "stay_points": json.loads(stay_points),
                "tcn_report": None if tcn_report is None else json.loads(tcn_report),
            }
            for report_id, created_at, stay_points, tcn_report in rows
        ]
        return _json_response(200, {"reports": reports})

    def close(self) -> None:
        self.db.close()


def _parse_json(request: WireRequest):
    try:
        value = json.loads(request.body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        return None
    return value if isinstance(value, dict) else None


def _parse_report_samples(raw) -> list[LocationSample]:
    if not isinstance(raw, list):
        raise ValueError("samples must be an array")
    samples = []
    for row in raw:
        ts, lat, lon, accuracy = row
        samples.append(LocationSample(int(ts), GeoPoint(float(lat), float(lon)), float(accuracy)))
    if any(b.timestamp <= a.timestamp for a, b in zip(samples, samples[1:])):
        raise ValueError("samples must be strictly time-ordered")
    return samples


def _parse_tcn_report(raw) -> TcnReport | None:
    if raw is None:
        return None
    return TcnReport(
        bytes.fromhex(raw["chain_key"]),
        int(raw["start_index"]),
        int(raw["end_index"]),
    )


def _json_response(status: int, payload: dict) -> WireResponse:
    body = json.dumps(payload, sort_keys=True).encode("utf-8")
    headers = {"Content-Type": "application/json; charset=utf-8", **_CORS_HEADERS}
    return WireResponse(status, headers, body)


def _error(status: int, message: str) -> WireResponse:
    return _json_response(status, {"error": message})
