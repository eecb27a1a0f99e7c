"""Command-line entry points.

Exit codes: 0 on success, 1 when the operation fails (rejected upload,
failing audit, unreachable server, bad input file), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .audit import audit_run_dir
from .backend import BackendService, load_authorities
from .cta import CtaValidationError, validate_cta
from .dayfile import DAY_FILE_SUFFIX, decode_day, list_day_files, read_day_file
from .server import DEFAULT_BIND, make_server
from .sim import Scenario, adoption_sweep, load_scenario, run_scenario, summary_text, write_run_dir
from .transport import HttpTransport, TransportError

BIND_ENV = "ANONTRACE_BIND"
SERVER_ENV = "ANONTRACE_SERVER"
DEFAULT_SERVER = "http://127.0.0.1:8471"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anontrace",
        description="Privacy-preserving contact and location tracing toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the backend HTTP service")
    serve.add_argument("--bind", default=os.environ.get(BIND_ENV, DEFAULT_BIND),
                       help=f"host:port to listen on (env {BIND_ENV})")
    serve.add_argument("--authorities", required=True,
                       help="JSON file with authority accounts")
    serve.add_argument("--db", default=":memory:", help="sqlite database path")

    simulate = sub.add_parser("simulate", help="run a scenario file")
    simulate.add_argument("scenario", help="scenario JSON file")
    simulate.add_argument("--out", default=None, help="run directory (default run-<seed>)")
    simulate.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    simulate.add_argument("--adoption-sweep", default=None,
                          help="comma-separated adoption rates to sweep, e.g. 0.2,0.5,0.8")

    publish = sub.add_parser("publish-cta", help="publish a query document to a server")
    publish.add_argument("file", help="query document JSON file")
    publish.add_argument("--token", required=True, help="authority bearer token")
    publish.add_argument("--server", default=os.environ.get(SERVER_ENV, DEFAULT_SERVER),
                         help=f"server base URL (env {SERVER_ENV})")

    inspect = sub.add_parser("inspect-store", help="summarize a local day-file store")
    inspect.add_argument("path", help="day file or directory of day files")

    audit = sub.add_parser("audit", help="privacy-audit a simulation run directory")
    audit.add_argument("run_dir", help="directory written by `anontrace simulate`")

    export = sub.add_parser("export-opendata", help="download the anonymized daily CSV")
    export.add_argument("--server", default=os.environ.get(SERVER_ENV, DEFAULT_SERVER),
                        help=f"server base URL (env {SERVER_ENV})")
    export.add_argument("--out", default="-", help="output file, - for stdout")

    return parser


def _cmd_serve(args) -> int:
    try:
        accounts = load_authorities(args.authorities)
    except (OSError, ValueError) as exc:
        print(f"cannot load authorities: {exc}", file=sys.stderr)
        return 1
    service = BackendService(accounts, db_path=args.db)
    try:
        server = make_server(service, args.bind)
    except (OSError, ValueError) as exc:
        print(f"cannot bind {args.bind}: {exc}", file=sys.stderr)
        service.close()
        return 1
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        service.close()
    return 0


def _cmd_simulate(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
        if args.seed is not None:
            scenario = Scenario(**{**scenario.__dict__, "seed": args.seed})
        metrics, world = run_scenario(scenario)
        rows = [metrics]
        if args.adoption_sweep:
            rates = [float(r) for r in args.adoption_sweep.split(",")]
            rows.extend(adoption_sweep(scenario, rates))
    except (OSError, ValueError) as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return 1
    out = args.out or f"run-{scenario.seed}"
    write_run_dir(out, world, rows)
    print(summary_text(metrics), end="")
    print(f"wrote {out}")
    return 0


def _cmd_publish_cta(args) -> int:
    try:
        with open(args.file, encoding="utf-8") as fh:
            document = json.load(fh)
        validate_cta(document)
    except (OSError, ValueError, CtaValidationError) as exc:
        print(f"invalid query document: {exc}", file=sys.stderr)
        return 1
    transport = HttpTransport(args.server)
    try:
        response = transport.request(
            "POST", "/v1/cta",
            headers={"Authorization": f"Bearer {args.token}"},
            body=document,
        )
    except TransportError as exc:
        print(f"cannot reach {args.server}: {exc}", file=sys.stderr)
        return 1
    if response.status != 201:
        print(f"server rejected the document ({response.status}): "
              f"{response.body.decode('utf-8', 'replace')}", file=sys.stderr)
        return 1
    print(f"published {response.json()['id']}")
    return 0


def _summarize_day(day: str, records) -> str:
    discarded = sum(1 for s in records.samples if s.discarded)
    span = ""
    if records.samples:
        first, last = records.samples[0].timestamp, records.samples[-1].timestamp
        span = f", {_hhmm(first)}-{_hhmm(last)}"
    return (
        f"{day}: {len(records.samples)} samples ({discarded} low-accuracy), "
        f"{len(records.notes)} notes, {len(records.contacts)} contacts, "
        f"{len(records.rotations)} rotations{span}"
    )


def _hhmm(timestamp: int) -> str:
    minutes = timestamp % 86_400 // 60
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def _cmd_inspect_store(args) -> int:
    try:
        if os.path.isdir(args.path):
            days = list_day_files(args.path)
            print(f"store: {args.path} ({len(days)} days)")
            for day in days:
                print(_summarize_day(day, read_day_file(args.path, day)))
        elif args.path.endswith(DAY_FILE_SUFFIX):
            day = os.path.basename(args.path)[: -len(DAY_FILE_SUFFIX)]
            with open(args.path, "rb") as fh:
                print(_summarize_day(day, decode_day(fh.read())))
        else:
            print(f"{args.path}: not a day file or store directory", file=sys.stderr)
            return 1
    except (OSError, ValueError) as exc:
        print(f"cannot read store: {exc}", file=sys.stderr)
        return 1
    return 0


def _cmd_audit(args) -> int:
    try:
        report = audit_run_dir(args.run_dir)
    except (OSError, ValueError) as exc:
        print(f"cannot audit: {exc}", file=sys.stderr)
        return 1
    print(report.text(), end="")
    return 0 if report.passed else 1


def _cmd_export_opendata(args) -> int:
    transport = HttpTransport(args.server)
    try:
        response = transport.request("GET", "/v1/opendata/daily.csv")
    except TransportError as exc:
        print(f"cannot reach {args.server}: {exc}", file=sys.stderr)
        return 1
    if response.status != 200:
        print(f"export failed ({response.status})", file=sys.stderr)
        return 1
    text = response.body.decode("utf-8")
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "serve": _cmd_serve,
    "simulate": _cmd_simulate,
    "publish-cta": _cmd_publish_cta,
    "inspect-store": _cmd_inspect_store,
    "audit": _cmd_audit,
    "export-opendata": _cmd_export_opendata,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
