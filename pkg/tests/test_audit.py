"""Audit tests: a clean run passes, every planted leak is caught."""

import pytest

from anontrace.audit import AuditReport, audit_run_dir, run_audit
from anontrace.sim import DiagnosisEvent, Scenario, AgentSpec, run_scenario, write_run_dir
from anontrace.transport import RecordedExchange

INSTALL_ID = "3d1c8a9e-1111-4222-8333-944455556666"
TOKEN = "sim-feedcafe0123456789abcdef0123"
DIAGNOSED_TCN = "ab" * 16
PRIVATE_TCN = "cd" * 16

TRUTH = {
    "installation_ids": [INSTALL_ID],
    "authority_tokens": [TOKEN],
    "contact_tcns": [DIAGNOSED_TCN, PRIVATE_TCN],
    "diagnosed_tcns": [DIAGNOSED_TCN],
}


def exchange(**overrides) -> RecordedExchange:
    base = dict(
        seq=0,
        time=1_700_000_000,
        method="GET",
        path="/v1/health",
        query={},
        request_headers={},
        request_body="",
        status=200,
        response_headers={},
        response_body='{"status": "ok"}',
    )
    base.update(overrides)
    return RecordedExchange(**base)


def violations_for(rule: str, *exchanges: RecordedExchange) -> list:
    report = run_audit(list(exchanges), TRUTH)
    return [v for v in report.violations if v.rule == rule]


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    agents = (
        AgentSpec(movement="stationary", offset_m=(0.0, 0.0)),
        AgentSpec(movement="stationary", offset_m=(5.0, 0.0)),
        AgentSpec(movement="random_walk", offset_m=(800.0, 800.0), walk_bound_m=1500.0),
    )
    scenario = Scenario(
        seed=61,
        duration_s=90_000,
        dt_s=60,
        agents=agents,
        diagnosis=(DiagnosisEvent(agent=0, at_s=43_200),),
    )
    metrics, world = run_scenario(scenario)
    path = tmp_path_factory.mktemp("runs") / "clean"
    write_run_dir(str(path), world, [metrics])
    return str(path)


class TestCleanRun:
    def test_realistic_run_passes_every_rule(self, run_dir):
        report = audit_run_dir(run_dir)
        assert report.passed, report.text()
        assert report.scanned > 20

    def test_report_lines_enumerate_all_rules(self, run_dir):
        lines = audit_run_dir(run_dir).lines()
        assert sum(1 for line in lines if line.startswith("PASS ")) == 5
        assert lines[-1].startswith("AUDIT PASS")

    def test_missing_artifacts_raise(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            audit_run_dir(str(tmp_path))


class TestConsentRule:
    def test_true_consent_passes(self):
        good = exchange(method="POST", path="/v1/report", request_body='{"consent": true}')
        assert violations_for("consent-on-report", good) == []

    def test_false_or_missing_consent_flagged(self):
        for body in ('{"consent": false}', '{"consent": 1}', "{}", "not json"):
            bad = exchange(method="POST", path="/v1/report", request_body=body)
            assert violations_for("consent-on-report", bad), body


class TestInstallationIdScope:
    def test_id_in_stats_request_is_allowed(self):
        ok = exchange(
            method="POST",
            path="/v1/stats",
            request_body=f'{{"installation_id": "{INSTALL_ID}"}}',
            response_body='{"status": "accepted"}',
        )
        assert violations_for("installation-id-scope", ok) == []

    def test_id_anywhere_else_is_flagged(self):
        in_feed = exchange(path="/v1/cta", response_body=f'{{"owner": "{INSTALL_ID}"}}')
        in_report = exchange(method="POST", path="/v1/report",
                             request_body=f'{{"consent": true, "who": "{INSTALL_ID}"}}')
        echoed = exchange(method="POST", path="/v1/stats",
                          request_body=f'{{"installation_id": "{INSTALL_ID}"}}',
                          response_body=f'{{"echo": "{INSTALL_ID}"}}')
        for bad in (in_feed, in_report, echoed):
            assert violations_for("installation-id-scope", bad)


class TestCoordinatePrecision:
    def test_grid_rounded_and_integral_values_pass(self):
        ok = exchange(method="POST", path="/v1/stats",
                      request_body='{"centroid_lat": 43.72, "minutes_tracked": 540}')
        assert violations_for("coordinate-precision", ok) == []

    def test_high_precision_number_outside_exempt_paths_flagged(self):
        bad = exchange(method="POST", path="/v1/stats",
                       request_body='{"centroid_lat": 43.7261944}')
        found = violations_for("coordinate-precision", bad)
        assert found and "43.7261944" in found[0].detail

    def test_exempt_paths_may_carry_full_precision(self):
        report = exchange(method="POST", path="/v1/report",
                          request_body='{"consent": true, "samples": [[1, 43.7261944, 12.6364910, 20.0]]}')
        publish = exchange(method="POST", path="/v1/cta",
                           request_body='{"regions": [[43.7271944, 12.6374910]]}')
        assert violations_for("coordinate-precision", report, publish) == []

    def test_csv_export_is_scanned(self):
        bad = exchange(path="/v1/opendata/daily.csv", response_body="day,2023-11-15,43.7261944")
        assert violations_for("coordinate-precision", bad)


class TestContactTcnScope:
    def test_diagnosed_tcn_in_query_document_is_allowed(self):
        ok = exchange(path="/v1/cta", response_body=f'{{"tcns": ["{DIAGNOSED_TCN}"]}}')
        assert violations_for("contact-tcn-scope", ok) == []

    def test_undiagnosed_contact_tcn_is_flagged_anywhere(self):
        in_cta = exchange(path="/v1/cta", response_body=f'{{"tcns": ["{PRIVATE_TCN}"]}}')
        in_stats = exchange(method="POST", path="/v1/stats", request_body=f'"{PRIVATE_TCN}"')
        for bad in (in_cta, in_stats):
            assert violations_for("contact-tcn-scope", bad)

    def test_diagnosed_tcn_outside_exempt_paths_is_flagged(self):
        bad = exchange(method="POST", path="/v1/stats", request_body=f'"{DIAGNOSED_TCN}"')
        assert violations_for("contact-tcn-scope", bad)

    def test_tcn_embedded_in_longer_hex_run_is_caught(self):
        embedded = "ff" * 4 + PRIVATE_TCN + "ee" * 4
        bad = exchange(path="/v1/cta", response_body=f'{{"blob": "{embedded}"}}')
        assert violations_for("contact-tcn-scope", bad)

    def test_unrelated_hex_ignored(self):
        ok = exchange(response_body=f'{{"report_id": "{"77" * 16}"}}')
        assert violations_for("contact-tcn-scope", ok) == []


class TestTokenSecrecy:
    def test_token_in_request_header_is_fine(self):
        ok = exchange(path="/v1/cta", request_headers={"Authorization": f"Bearer {TOKEN}"})
        assert violations_for("token-secrecy", ok) == []

    def test_token_in_body_or_response_header_is_flagged(self):
        in_body = exchange(response_body=f'{{"token": "{TOKEN}"}}')
        in_header = exchange(response_headers={"X-Debug": TOKEN})
        for bad in (in_body, in_header):
            assert violations_for("token-secrecy", bad)


class TestReportFormatting:
    def test_failing_report_prints_fail_lines_and_details(self):
        bad = exchange(response_body=f'{{"token": "{TOKEN}"}}')
        report = run_audit([bad], TRUTH)
        assert not report.passed
        text = report.text()
        assert "FAIL token-secrecy: 1 violation(s)" in text
        assert text.strip().endswith("AUDIT FAIL: 1 messages scanned")

    def test_empty_log_passes_vacuously(self):
        report = run_audit([], TRUTH)
        assert report.passed
        assert report.scanned == 0
        assert isinstance(report, AuditReport)
