"""Binary on-disk format for one day of trace data.

One file per UTC day keeps the 1 MB/day storage envelope measurable and
makes daily expiry an O(1) file deletion.  Records are little-endian and
length-prefixed:

    record  := type:u8  length:u16  payload[length]

    type 0x01 sample    := timestamp:u64  lat:i32  lon:i32  accuracy:u16  flags:u8
                           lat/lon are fixed-point 1e-7 degrees;
                           flags bit0 = discarded, bits 1-2 = source
    type 0x02 note      := timestamp:u64  has_pos:u8  [lat:i32 lon:i32]  text:utf-8
    type 0x03 contact   := tcn:16B  first_seen:u64  last_seen:u64  rssi:i16 (0x7FFF = none)
    type 0x04 rotation  := index:u64  tcn:16B
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .geo import GeoPoint
from .tcn import ContactRecord
from .trace import LocationSample, Note, SampleSource

REC_SAMPLE = 0x01
REC_NOTE = 0x02
REC_CONTACT = 0x03
REC_ROTATION = 0x04

_RSSI_NONE = 0x7FFF
_SOURCES = [SampleSource.GPS, SampleSource.GEOFENCE_EVENT, SampleSource.MANUAL]

DAY_FILE_SUFFIX = ".day"


@dataclass
class DayRecords:
    """Decoded contents of one day file."""

    samples: list[LocationSample] = field(default_factory=list)
    notes: list[Note] = field(default_factory=list)
    contacts: list[ContactRecord] = field(default_factory=list)
    rotations: list[tuple[int, bytes]] = field(default_factory=list)


def encode_day(records: DayRecords) -> bytes:
    out = bytearray()
    for s in records.samples:
        flags = (1 if s.discarded else 0) | (_SOURCES.index(s.source) << 1)
        payload = struct.pack(
            "<QiiHB",
            s.timestamp,
            _fixed(s.position.lat),
            _fixed(s.position.lon),
            min(65535, round(s.accuracy_radius)),
            flags,
        )
        _append(out, REC_SAMPLE, payload)
    for n in records.notes:
        if n.position is not None:
            payload = struct.pack("<QBii", n.timestamp, 1, _fixed(n.position.lat), _fixed(n.position.lon))
        else:
            payload = struct.pack("<QB", n.timestamp, 0)
        _append(out, REC_NOTE, payload + n.text.encode("utf-8"))
    for c in records.contacts:
        rssi = _RSSI_NONE if c.rssi_hint is None else c.rssi_hint
        _append(out, REC_CONTACT, c.tcn + struct.pack("<QQh", c.first_seen, c.last_seen, rssi))
    for index, tcn in records.rotations:
        _append(out, REC_ROTATION, struct.pack("<Q", index) + tcn)
    return bytes(out)


def decode_day(blob: bytes) -> DayRecords:
    records = DayRecords()
    offset = 0
    while offset < len(blob):
        rec_type, length = struct.unpack_from("<BH", blob, offset)
        offset += 3
        payload = blob[offset : offset + length]
        if len(payload) != length:
            raise ValueError("truncated day file record")
        offset += length
        if rec_type == REC_SAMPLE:
            ts, lat, lon, accuracy, flags = struct.unpack("<QiiHB", payload)
            records.samples.append(
                LocationSample(ts, GeoPoint(lat / 1e7, lon / 1e7), float(accuracy), _SOURCES[(flags >> 1) & 0x3])
            )
        elif rec_type == REC_NOTE:
            ts, has_pos = struct.unpack_from("<QB", payload)
            if has_pos:
                lat, lon = struct.unpack_from("<ii", payload, 9)
                text = payload[17:].decode("utf-8")
                records.notes.append(Note(ts, text, GeoPoint(lat / 1e7, lon / 1e7)))
            else:
                records.notes.append(Note(ts, payload[9:].decode("utf-8")))
        elif rec_type == REC_CONTACT:
            tcn = bytes(payload[:16])
            first, last, rssi = struct.unpack("<QQh", payload[16:])
            records.contacts.append(ContactRecord(tcn, first, last, None if rssi == _RSSI_NONE else rssi))
        elif rec_type == REC_ROTATION:
            (index,) = struct.unpack_from("<Q", payload)
            records.rotations.append((index, bytes(payload[8:24])))
        else:
            raise ValueError(f"unknown day file record type 0x{rec_type:02x}")
    return records


def day_of(timestamp: int) -> str:
    """UTC calendar day of an epoch timestamp, as YYYY-MM-DD."""
    return datetime.fromtimestamp(timestamp, tz=timezone.utc).strftime("%Y-%m-%d")


def day_start(day: str) -> int:
    """Epoch timestamp of 00:00:00 UTC on the given day."""
    return int(datetime.strptime(day, "%Y-%m-%d").replace(tzinfo=timezone.utc).timestamp())


def day_file_path(store_dir: str | Path, day: str) -> Path:
    return Path(store_dir) / f"{day}{DAY_FILE_SUFFIX}"


def write_day_file(store_dir: str | Path, day: str, records: DayRecords) -> Path:
    path = day_file_path(store_dir, day)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_day(records))
    return path


def read_day_file(store_dir: str | Path, day: str) -> DayRecords:
    return decode_day(day_file_path(store_dir, day).read_bytes())


def list_day_files(store_dir: str | Path) -> list[str]:
    directory = Path(store_dir)
    if not directory.is_dir():
        return []
    return sorted(p.name[: -len(DAY_FILE_SUFFIX)] for p in directory.glob(f"*{DAY_FILE_SUFFIX}"))


def expire_day_files(store_dir: str | Path, now: int, retention_days: int = 30) -> list[str]:
    """Delete day files entirely older than the retention horizon."""
    removed = []
    horizon_day = day_of(now - retention_days * 86_400)
    for day in list_day_files(store_dir):
        if day < horizon_day:
            os.remove(day_file_path(store_dir, day))
            removed.append(day)
    return removed


def _fixed(degrees: float) -> int:
    return round(degrees * 1e7)


def _append(out: bytearray, rec_type: int, payload: bytes) -> None:
    if len(payload) > 0xFFFF:
        raise ValueError("day file record payload too large")
    out += struct.pack("<BH", rec_type, len(payload)) + payload
