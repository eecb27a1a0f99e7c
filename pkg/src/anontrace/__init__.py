"""Privacy-preserving contact and location tracing.

Device-local trace storage, rotating contact identifiers, authority-
published geo-temporal queries matched entirely on-device, anonymized
daily statistics, a backend service that never sees raw locations, and
a deterministic simulator with a byte-level privacy audit.
"""

from .agent import AgentConfig, ConsentError, DeviceAgent, sampling_interval
from .audit import AuditReport, AuditViolation, audit_run_dir, run_audit
from .backend import AuthorityAccount, BackendService, WireRequest, WireResponse, load_authorities
from .builder import BuildError, BuildParams, StayPoint, build_cta, detect_stay_points
from .cta import (
    CallToAction,
    CtaExpiredError,
    CtaRegion,
    CtaValidationError,
    ExposureMatch,
    MatchChannel,
    cta_to_dict,
    cta_to_json,
    match_cta,
    match_geo,
    match_tcn,
    validate_cta,
)
from .dayfile import (
    DayRecords,
    day_of,
    day_start,
    decode_day,
    encode_day,
    read_day_file,
    write_day_file,
)
from .geo import BoundingBox, GeoPoint, GeoPolygon, coarse_cell, grid_round, haversine, neighbor_cells
from .sim import Metrics, Scenario, World, load_scenario, run_scenario, write_run_dir
from .stats import DailyStats, compute_daily_stats, stats_to_dict, stats_to_json, validate_stats_payload
from .tcn import ContactLog, TcnRatchet, TcnReport, rotation_index
from .trace import GeofenceEvent, KnownLocation, LocationSample, Note, SampleSource, TraceStore
from .transport import HttpTransport, InProcessTransport, MessageRecorder, TransportError

__version__ = "1.0.0"

__all__ = [
    "AgentConfig",
    "AuditReport",
    "AuditViolation",
    "AuthorityAccount",
    "BackendService",
    "BoundingBox",
    "BuildError",
    "BuildParams",
    "CallToAction",
    "ConsentError",
    "ContactLog",
    "CtaExpiredError",
    "CtaRegion",
    "CtaValidationError",
    "DailyStats",
    "DayRecords",
    "DeviceAgent",
    "ExposureMatch",
    "GeoPoint",
    "GeoPolygon",
    "GeofenceEvent",
    "HttpTransport",
    "InProcessTransport",
    "KnownLocation",
    "LocationSample",
    "MatchChannel",
    "MessageRecorder",
    "Metrics",
    "Note",
    "SampleSource",
    "Scenario",
    "StayPoint",
    "TcnRatchet",
    "TcnReport",
    "TraceStore",
    "TransportError",
    "WireRequest",
    "WireResponse",
    "World",
    "audit_run_dir",
    "build_cta",
    "coarse_cell",
    "compute_daily_stats",
    "cta_to_dict",
    "cta_to_json",
    "day_of",
    "day_start",
    "decode_day",
    "detect_stay_points",
    "encode_day",
    "grid_round",
    "haversine",
    "load_authorities",
    "load_scenario",
    "match_cta",
    "match_geo",
    "match_tcn",
    "neighbor_cells",
    "read_day_file",
    "rotation_index",
    "run_audit",
    "run_scenario",
    "sampling_interval",
    "stats_to_dict",
    "stats_to_json",
    "validate_cta",
    "validate_stats_payload",
    "write_day_file",
    "write_run_dir",
]
