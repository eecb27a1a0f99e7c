"""Run one device agent against a live server and report its alerts.

The dashboard round-trip test publishes a query and then uses this
script to prove a device whose trace overlaps the query region alerts
locally. Prints a single JSON object on stdout.
"""

import argparse
import json

from anontrace import DeviceAgent, GeoPoint, HttpTransport


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--server", required=True)
    parser.add_argument("--lat", type=float, required=True)
    parser.add_argument("--lon", type=float, required=True)
    parser.add_argument("--t0", type=int, required=True, help="first sample timestamp")
    parser.add_argument("--minutes", type=int, default=40)
    parser.add_argument("--now", type=int, required=True, help="sync/match time")
    args = parser.parse_args()

    agent = DeviceAgent.create(
        HttpTransport(args.server),
        home=GeoPoint(args.lat, args.lon),
        created_at=args.t0,
    )
    for k in range(args.minutes):
        agent.observe_position(args.t0 + 60 * k, GeoPoint(args.lat, args.lon), 12.0, 0.0)
    matches = agent.sync_and_match(args.now)
    print(
        json.dumps(
            {
                "alerted": bool(matches),
                "alerts": [
                    {
                        "cta_id": m.cta_id,
                        "channel": m.channel.value,
                        "exposure_s": m.exposure_seconds,
                    }
                    for m in matches
                ],
                "samples": len(agent.store.samples),
            }
        )
    )


if __name__ == "__main__":
    main()
