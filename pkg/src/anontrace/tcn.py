"""Rotating temporary contact numbers and the local contact log.

Devices broadcast a short-lived 16-byte identifier derived from a one-way
SHA-256 key chain and remember every identifier they hear.  Publishing an
intermediate chain key reveals only the identifiers from that rotation
onward, never earlier ones, which keeps voluntary disclosure compact
(one key plus an index range) and strictly scoped.
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass, field
from typing import Iterator

#: Seconds between identifier rotations ("updated every few minutes").
ROTATION_PERIOD_S = 900

TCN_LENGTH = 16
_DOMAIN_SEP = b"\x01"

CONTACT_RETENTION_DAYS = 30
_SECONDS_PER_DAY = 86_400


def rotation_index(t: int) -> int:
    """Epoch-aligned rotation window index for a timestamp."""
    if t < 0:
        raise ValueError("timestamp must be >= 0")
    return t // ROTATION_PERIOD_S


def _derive_tcn(chain_key: bytes) -> bytes:
    return hashlib.sha256(_DOMAIN_SEP + chain_key).digest()[:TCN_LENGTH]


def _advance(chain_key: bytes) -> bytes:
    return hashlib.sha256(chain_key).digest()


@dataclass
class TcnRatchet:
    """One-way key chain producing the device's broadcast identifiers.

    The seed key never leaves the device except as an intermediate chain
    key inside a voluntarily built report.
    """

    seed_key: bytes
    created_at_index: int

    def __post_init__(self):
        if len(self.seed_key) != 32:
            raise ValueError("seed key must be 32 bytes")
        if self.created_at_index < 0:
            raise ValueError("creation index must be >= 0")

    @classmethod
    def generate(cls, created_at_index: int, rng=None) -> "TcnRatchet":
        seed = rng.randbytes(32) if rng is not None else secrets.token_bytes(32)
        return cls(seed, created_at_index)

    def chain_key_at(self, index: int) -> bytes:
        if index < self.created_at_index:
            raise ValueError(f"index {index} precedes ratchet creation at {self.created_at_index}")
        key = self.seed_key
        for _ in range(index - self.created_at_index):
            key = _advance(key)
        return key

    def tcn_at(self, index: int) -> bytes:
        """Identifier for one rotation window; O(index - creation)."""
        return _derive_tcn(self.chain_key_at(index))

    def tcn_range(self, start_index: int, end_index: int) -> Iterator[bytes]:
        """Identifiers for [start_index, end_index], walking the chain once."""
        if start_index > end_index:
            raise ValueError("inverted index range")
        key = self.chain_key_at(start_index)
        for _ in range(end_index - start_index + 1):
            yield _derive_tcn(key)
            key = _advance(key)

    def build_report(self, from_index: int, to_index: int) -> "TcnReport":
        """Compact disclosure of the identifiers in an index range."""
        if from_index > to_index:
            raise ValueError("inverted index range")
        return TcnReport(self.chain_key_at(from_index), from_index, to_index)


class RatchetWalker:
    """Forward cursor over a ratchet: O(1) amortized for advancing time.

    ``TcnRatchet.tcn_at`` rewalks the chain from the seed on every call,
    which is fine for one-shot lookups but quadratic when polled every
    broadcast.  The walker keeps the current chain state; moving backward
    falls back to a rewalk.
    """

    def __init__(self, ratchet: TcnRatchet):
        self.ratchet = ratchet
        self._index = ratchet.created_at_index
        self._key = ratchet.seed_key

    def tcn_at(self, index: int) -> bytes:
        if index < self.ratchet.created_at_index:
            raise ValueError(
                f"index {index} precedes ratchet creation at {self.ratchet.created_at_index}"
            )
        if index < self._index:
            self._index = self.ratchet.created_at_index
            self._key = self.ratchet.seed_key
        while self._index < index:
            self._key = _advance(self._key)
            self._index += 1
        return _derive_tcn(self._key)


@dataclass(frozen=True)
class TcnReport:
    """Chain key plus index range; expands to the covered identifiers.

    The key is the chain state at ``start_index``: earlier identifiers
    cannot be computed from it.
    """

    chain_key_at_start: bytes
    start_index: int
    end_index: int

    def __post_init__(self):
        if len(self.chain_key_at_start) != 32:
            raise ValueError("chain key must be 32 bytes")
        if self.start_index > self.end_index:
            raise ValueError("inverted index range")

    def expand(self) -> list[bytes]:
        tcns = []
        key = self.chain_key_at_start
        for _ in range(self.end_index - self.start_index + 1):
            tcns.append(_derive_tcn(key))
            key = _advance(key)
        return tcns


@dataclass
class ContactRecord:
    """One observed foreign identifier with its sighting interval."""

    tcn: bytes
    first_seen: int
    last_seen: int
    rssi_hint: int | None = None

    def __post_init__(self):
        if len(self.tcn) != TCN_LENGTH:
            raise ValueError("observed TCN must be 16 bytes")
        if self.first_seen > self.last_seen:
            raise ValueError("first_seen after last_seen")


@dataclass
class ContactLog:
    """Fully-local log of observed identifiers, expiring with the trace."""

    records: list[ContactRecord] = field(default_factory=list)
    retention_days: int = CONTACT_RETENTION_DAYS
    _latest: dict[bytes, ContactRecord] = field(default_factory=dict, repr=False)

    def record_observation(self, tcn: bytes, t: int, rssi_hint: int | None = None) -> None:
        """Log a sighting, merging repeats within the same rotation window."""
        existing = self._latest.get(tcn)
        if existing is not None and rotation_index(existing.last_seen) == rotation_index(t):
            existing.first_seen = min(existing.first_seen, t)
            existing.last_seen = max(existing.last_seen, t)
            if rssi_hint is not None:
                existing.rssi_hint = rssi_hint
            return
        record = ContactRecord(bytes(tcn), t, t, rssi_hint)
        self.records.append(record)
        self._latest[tcn] = record

    def expire(self, now: int) -> None:
        horizon = now - self.retention_days * _SECONDS_PER_DAY
        self.records = [r for r in self.records if r.last_seen >= horizon]
        self._latest = {r.tcn: r for r in self.records}

    def observed_tcns(self) -> set[bytes]:
        return {r.tcn for r in self.records}

    def __len__(self) -> int:
        return len(self.records)
