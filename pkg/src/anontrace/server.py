"""Stdlib HTTP adapter exposing a BackendService on a real socket.

All request interpretation lives in :mod:`anontrace.backend`; this
module only shuttles bytes.  Request logging is disabled entirely so no
path, token, or payload ever reaches a server log.
"""

from __future__ import annotations

import urllib.parse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .backend import BackendService, WireRequest

DEFAULT_BIND = "127.0.0.1:8471"


def parse_bind(bind: str) -> tuple[str, int]:
    host, _, port = bind.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"bind address must look like host:port, got {bind!r}")
    return host, int(port)


def make_server(service: BackendService, bind: str = DEFAULT_BIND) -> ThreadingHTTPServer:
    host, port = parse_bind(bind)

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, format, *args):
            pass

        def _dispatch(self):
            parsed = urllib.parse.urlsplit(self.path)
            query = {k: v[-1] for k, v in urllib.parse.parse_qs(parsed.query).items()}
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else b""
            request = WireRequest(
                method=self.command,
                path=parsed.path,
                query=query,
                headers=dict(self.headers.items()),
                body=body,
            )
            response = service.handle(request)
            self.send_response(response.status)
            for key, value in response.headers.items():
                self.send_header(key, value)
            self.send_header("Content-Length", str(len(response.body)))
            self.end_headers()
            self.wfile.write(response.body)

        do_GET = do_POST = do_OPTIONS = do_PUT = do_DELETE = _dispatch

    return ThreadingHTTPServer((host, port), Handler)
