import json
import random
import threading

import pytest

from anontrace.backend import AuthorityAccount, BackendService
from anontrace.server import make_server, parse_bind
from anontrace.transport import (
    HttpTransport,
    InProcessTransport,
    MessageRecorder,
    TransportError,
    read_exchanges,
)
from helpers import BASE_T

TOKEN = "authority-token-0123456789abcdef"


def make_service():
    account = AuthorityAccount("asl-pu", "Pesaro-Urbino", TOKEN, frozenset({"218:63"}))
    return BackendService([account], clock=lambda: BASE_T, rng=random.Random(4))


def cta_doc():
    return {
        "id": "cta-1",
        "authority_id": "asl-pu",
        "regions": [
            {
                "polygon": [[43.70, 12.60], [43.70, 12.66], [43.76, 12.66], [43.76, 12.60]],
                "interval": [BASE_T, BASE_T + 3600],
            }
        ],
        "tcns": [],
        "max_distance_m": 50.0,
        "min_exposure_s": 900,
        "message": "m",
        "created_at": BASE_T,
        "expires_at": BASE_T + 14 * 86_400,
    }


class TestInProcessTransport:
    def test_round_trip_and_recording(self):
        recorder = MessageRecorder()
        transport = InProcessTransport(make_service(), recorder, clock=lambda: BASE_T)
        response = transport.request(
            "POST", "/v1/cta", headers={"Authorization": f"Bearer {TOKEN}"}, body=cta_doc()
        )
        assert response.status == 201
        transport.request("GET", "/v1/cta", query={"cells": "218:63"})
        assert len(recorder) == 2
        first, second = recorder.exchanges
        assert first.method == "POST" and first.status == 201
        assert json.loads(first.request_body)["id"] == "cta-1"
        assert second.query == {"cells": "218:63"}
        assert "cta-1" in second.response_body

    def test_recording_includes_headers(self):
        recorder = MessageRecorder()
        transport = InProcessTransport(make_service(), recorder, clock=lambda: BASE_T)
        transport.request("POST", "/v1/cta", headers={"Authorization": f"Bearer {TOKEN}"}, body=cta_doc())
        wire = recorder.exchanges[0].wire_bytes().decode()
        assert wire.startswith("POST /v1/cta HTTP/1.1\r\n")
        assert f"Authorization: Bearer {TOKEN}" in wire
        assert "HTTP/1.1 201" in wire

    def test_offline_raises_transport_error(self):
        transport = InProcessTransport(make_service(), offline=True)
        with pytest.raises(TransportError):
            transport.request("GET", "/v1/health")

    def test_jsonl_round_trip(self, tmp_path):
        recorder = MessageRecorder()
        transport = InProcessTransport(make_service(), recorder, clock=lambda: BASE_T)
        transport.request("GET", "/v1/health")
        path = tmp_path / "messages.jsonl"
        recorder.write_jsonl(str(path))
        loaded = read_exchanges(str(path))
        assert loaded == recorder.exchanges

    def test_works_without_recorder(self):
        transport = InProcessTransport(make_service())
        assert transport.request("GET", "/v1/health").status == 200


@pytest.fixture()
def live_server():
    service = make_service()
    server = make_server(service, "127.0.0.1:0")
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    yield f"http://{host}:{port}"
    server.shutdown()
    server.server_close()
    service.close()


class TestHttpTransport:
    def test_round_trip_over_socket(self, live_server):
        transport = HttpTransport(live_server)
        response = transport.request(
            "POST", "/v1/cta", headers={"Authorization": f"Bearer {TOKEN}"}, body=cta_doc()
        )
        assert response.status == 201
        feed = transport.request("GET", "/v1/cta", query={"cells": "218:63"})
        assert feed.status == 200
        assert [c["id"] for c in feed.json()["ctas"]] == ["cta-1"]

    def test_error_statuses_returned_not_raised(self, live_server):
        transport = HttpTransport(live_server)
        response = transport.request("POST", "/v1/cta", body=cta_doc())
        assert response.status == 401

    def test_csv_export_over_socket(self, live_server):
        transport = HttpTransport(live_server)
        response = transport.request("GET", "/v1/opendata/daily.csv")
        assert response.status == 200
        assert response.body.decode().startswith("day,row_key,")

    def test_unreachable_server_raises(self):
        transport = HttpTransport("http://127.0.0.1:9", timeout=0.5)
        with pytest.raises(TransportError):
            transport.request("GET", "/v1/health")


class TestParseBind:
    def test_valid(self):
        assert parse_bind("127.0.0.1:8471") == ("127.0.0.1", 8471)

    def test_invalid(self):
        with pytest.raises(ValueError):
            parse_bind("8471")
        with pytest.raises(ValueError):
            parse_bind("host:port")
