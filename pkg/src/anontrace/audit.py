"""Byte-level privacy audit of a recorded simulation run.

The audit never trusts the application code: it re-reads the raw
message log a network observer would have seen and cross-checks it
against the simulator's omniscient ground truth.  Five rules:

1. consent-on-report: every diagnosis upload carries an explicit
   ``consent: true``.
2. installation-id-scope: installation identifiers appear only in
   statistics uploads, nowhere else on the wire.
3. coordinate-precision: outside diagnosis reports and query documents,
   no number with more than two decimal places ever crosses the wire —
   everything else is grid-rounded or integral.
4. contact-tcn-scope: identifiers from device contact logs never appear
   on the wire unless a diagnosed user deliberately reported them.
5. token-secrecy: authority bearer tokens live in request headers only,
   never in a body or response header.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field

from .transport import RecordedExchange, read_exchanges

RULES = (
    "consent-on-report",
    "installation-id-scope",
    "coordinate-precision",
    "contact-tcn-scope",
    "token-secrecy",
)

# Paths whose bodies may legitimately carry full-precision coordinates:
# consensual diagnosis uploads and the query documents built from them.
_PRECISION_EXEMPT = ("/v1/report", "/v1/cta")

_HIGH_PRECISION = re.compile(r"-?\d+\.\d{3,}")
_HEX_RUN = re.compile(r"[0-9a-f]{32,}")


@dataclass(frozen=True)
class AuditViolation:
    rule: str
    seq: int
    path: str
    detail: str


@dataclass
class AuditReport:
    scanned: int
    checked: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def lines(self) -> list[str]:
        out = []
        for rule in RULES:
            bad = [v for v in self.violations if v.rule == rule]
            if bad:
                out.append(f"FAIL {rule}: {len(bad)} violation(s)")
                out.extend(f"  message {v.seq} {v.path}: {v.detail}" for v in bad[:5])
            else:
                out.append(f"PASS {rule} ({self.checked.get(rule, 0)} checked)")
        verdict = "AUDIT PASS" if self.passed else "AUDIT FAIL"
        out.append(f"{verdict}: {self.scanned} messages scanned")
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"


def _coordinate_exempt(path: str) -> bool:
    return any(path == p or path.startswith(p + "/") for p in _PRECISION_EXEMPT)


def run_audit(exchanges: list[RecordedExchange], truth: dict) -> AuditReport:
    """Scan a message log against ground truth; returns the full report."""
    report = AuditReport(scanned=len(exchanges))
    installation_ids = truth.get("installation_ids", [])
    tokens = truth.get("authority_tokens", [])
    contact_tcns = set(truth.get("contact_tcns", []))
    diagnosed_tcns = set(truth.get("diagnosed_tcns", []))
    leakable_tcns = contact_tcns - diagnosed_tcns

    def flag(rule: str, exchange: RecordedExchange, detail: str) -> None:
        report.violations.append(AuditViolation(rule, exchange.seq, exchange.path, detail))

    for exchange in exchanges:
        bodies = exchange.request_body + "\n" + exchange.response_body

        if exchange.method == "POST" and exchange.path == "/v1/report":
            report.checked["consent-on-report"] = report.checked.get("consent-on-report", 0) + 1
            try:
                consent = json.loads(exchange.request_body).get("consent")
            except ValueError:
                consent = None
            if consent is not True:
                flag("consent-on-report", exchange, f"consent is {consent!r}, not true")

        for installation_id in installation_ids:
            if installation_id not in bodies:
                continue
            allowed = exchange.method == "POST" and exchange.path == "/v1/stats"
            in_request_only = (
                installation_id in exchange.request_body
                and installation_id not in exchange.response_body
            )
            report.checked["installation-id-scope"] = (
                report.checked.get("installation-id-scope", 0) + 1
            )
            if not (allowed and in_request_only):
                flag("installation-id-scope", exchange, f"installation id {installation_id[:8]}… leaked")

        if not _coordinate_exempt(exchange.path):
            report.checked["coordinate-precision"] = (
                report.checked.get("coordinate-precision", 0) + 1
            )
            found = _HIGH_PRECISION.search(bodies)
            if found:
                flag("coordinate-precision", exchange, f"high-precision number {found.group()}")

        hex_runs = set()
        for run in _HEX_RUN.findall(bodies):
            hex_runs.update(run[k : k + 32] for k in range(0, len(run) - 31))
        report.checked["contact-tcn-scope"] = report.checked.get("contact-tcn-scope", 0) + 1
        for leaked in sorted(hex_runs & leakable_tcns):
            flag("contact-tcn-scope", exchange, f"undiagnosed contact identifier {leaked[:8]}… on wire")
        if not _coordinate_exempt(exchange.path):
            for leaked in sorted(hex_runs & diagnosed_tcns):
                flag("contact-tcn-scope", exchange, f"identifier {leaked[:8]}… outside report/query paths")

        report.checked["token-secrecy"] = report.checked.get("token-secrecy", 0) + 1
        header_blob = "\n".join(f"{k}:{v}" for k, v in exchange.response_headers.items())
        for token in tokens:
            if token in bodies or token in header_blob:
                flag("token-secrecy", exchange, "bearer token outside request headers")

    return report


def audit_run_dir(run_dir: str) -> AuditReport:
    """Audit a directory written by the simulator."""
    messages = os.path.join(run_dir, "messages.jsonl")
    truth_path = os.path.join(run_dir, "ground_truth.json")
    if not os.path.exists(messages) or not os.path.exists(truth_path):
        raise FileNotFoundError(f"{run_dir} is not a simulation run directory")
    with open(truth_path, encoding="utf-8") as fh:
        truth = json.load(fh)
    return run_audit(read_exchanges(messages), truth)
