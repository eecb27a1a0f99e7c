"""Clients for the backend: in-process (recorded) and real HTTP.

Both transports expose the same ``request`` method so the device agent,
the simulator, and the CLI do not care whether they talk to a live
server or to a :class:`~anontrace.backend.BackendService` instance in
the same process.  The in-process transport records every exchange in
canonical wire form; the privacy audit runs byte-level scans over that
log, so the recording must contain everything that would have crossed
a real network, headers included.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field

from .backend import BackendService, WireRequest, WireResponse


class TransportError(Exception):
    """The backend was unreachable; callers retry with backoff."""


@dataclass(frozen=True)
class RecordedExchange:
    """One request/response pair in canonical form."""

    seq: int
    time: int
    method: str
    path: str
    query: dict
    request_headers: dict
    request_body: str
    status: int
    response_headers: dict
    response_body: str

    def wire_bytes(self) -> bytes:
        """The exchange as the bytes a network tap would have seen."""
        target = self.path
        if self.query:
            target += "?" + urllib.parse.urlencode(sorted(self.query.items()))
        head = [f"{self.method} {target} HTTP/1.1"]
        head += [f"{k}: {v}" for k, v in sorted(self.request_headers.items())]
        request = "\r\n".join(head) + "\r\n\r\n" + self.request_body
        head = [f"HTTP/1.1 {self.status}"]
        head += [f"{k}: {v}" for k, v in sorted(self.response_headers.items())]
        response = "\r\n".join(head) + "\r\n\r\n" + self.response_body
        return (request + "\r\n" + response).encode("utf-8")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


class MessageRecorder:
    """Append-only log of every exchange that crossed the transport."""

    def __init__(self):
        self.exchanges: list[RecordedExchange] = []

    def record(self, exchange: RecordedExchange) -> None:
        self.exchanges.append(exchange)

    def __len__(self) -> int:
        return len(self.exchanges)

    def write_jsonl(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for exchange in self.exchanges:
                fh.write(json.dumps(exchange.to_dict(), sort_keys=True) + "\n")


def read_exchanges(path: str) -> list[RecordedExchange]:
    exchanges = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                exchanges.append(RecordedExchange(**json.loads(line)))
    return exchanges


@dataclass
class InProcessTransport:
    """Direct calls into a BackendService, recorded exchange by exchange."""

    service: BackendService
    recorder: MessageRecorder | None = None
    clock: object = None
    offline: bool = False
    _seq: int = field(default=0, init=False)

    def request(
        self,
        method: str,
        path: str,
        query: dict | None = None,
        headers: dict | None = None,
        body: dict | bytes | None = None,
    ) -> WireResponse:
        if self.offline:
            raise TransportError("backend unreachable")
        query = dict(query or {})
        headers = dict(headers or {})
        raw = _encode_body(body, headers)
        response = self.service.handle(WireRequest(method, path, query, headers, raw))
        if self.recorder is not None:
            now = int(self.clock()) if self.clock is not None else 0
            self._seq += 1
            self.recorder.record(
                RecordedExchange(
                    seq=self._seq,
                    time=now,
                    method=method,
                    path=path,
                    query=query,
                    request_headers=headers,
                    request_body=raw.decode("utf-8"),
                    status=response.status,
                    response_headers=dict(response.headers),
                    response_body=response.body.decode("utf-8"),
                )
            )
        return response


@dataclass
class HttpTransport:
    """Real HTTP client for a running server (used by the CLI)."""

    base_url: str
    timeout: float = 10.0

    def request(
        self,
        method: str,
        path: str,
        query: dict | None = None,
        headers: dict | None = None,
        body: dict | bytes | None = None,
    ) -> WireResponse:
        headers = dict(headers or {})
        raw = _encode_body(body, headers)
        url = self.base_url.rstrip("/") + path
        if query:
            url += "?" + urllib.parse.urlencode(sorted(query.items()))
        request = urllib.request.Request(url, data=raw or None, headers=headers, method=method)
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as reply:
                return WireResponse(reply.status, dict(reply.headers), reply.read())
        except urllib.error.HTTPError as exc:
            return WireResponse(exc.code, dict(exc.headers or {}), exc.read())
        except (urllib.error.URLError, OSError) as exc:
            raise TransportError(f"backend unreachable: {exc}") from exc


def _encode_body(body: dict | bytes | None, headers: dict) -> bytes:
    if body is None:
        return b""
    if isinstance(body, bytes):
        return body
    headers.setdefault("Content-Type", "application/json; charset=utf-8")
    return json.dumps(body, sort_keys=True).encode("utf-8")
