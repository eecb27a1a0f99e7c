"""Deterministic multi-agent simulation of the whole tracing loop.

Agents move on synthetic trajectories in a local meter plane around a
geographic origin, exchange rotating identifiers when within proximity,
and run real device-agent loops against a real in-process backend — all
traffic goes through the recorded transport, so a run leaves behind the
byte-exact message log the privacy audit needs.  The world also keeps
an omniscient ground-truth ledger (pairwise co-location seconds, true
dwell inside published query regions) that the device side never sees;
effectiveness metrics compare the two.

Everything is driven by one seeded RNG in a fixed order, so a scenario
replays bit-identically: same messages, same metrics, same stores.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

from .agent import DeviceAgent
from .backend import AuthorityAccount, BackendService
from .builder import BuildParams, StayPoint, build_cta
from .cta import MatchChannel, cta_to_dict, validate_cta
from .dayfile import day_of, day_start
from .geo import METERS_PER_DEGREE, GeoPoint, coarse_cell, distance_to_polygon, parse_cell_id
from .tcn import TcnReport
from .trace import Note
from .transport import InProcessTransport, MessageRecorder

SIM_STEP_S = 10
PROXIMITY_RADIUS_M = 10.0
GPS_SIGMA_M = 10.0
DEGRADED_SIGMA_M = 40.0
SECONDS_PER_DAY = 86_400

METRICS_FIELDS = (
    "seed",
    "adoption_rate",
    "agent_count",
    "adopting",
    "diagnosed",
    "truly_exposed",
    "alerted",
    "alerted_exposed",
    "recall",
    "false_alarms",
    "false_alarm_rate",
    "geo_alerts",
    "tcn_alerts",
    "both_alerts",
    "messages",
    "samples_recorded",
    "samples_discarded",
    "stats_rows",
)


class ScenarioError(ValueError):
    """The scenario document is malformed."""


@dataclass(frozen=True)
class AgentSpec:
    movement: str  # stationary | waypoint | random_walk
    offset_m: tuple[float, float] = (0.0, 0.0)
    waypoints_m: tuple[tuple[float, float], ...] = ()
    speed_mps: float = 1.0
    walk_bound_m: float = 2000.0


@dataclass(frozen=True)
class DiagnosisEvent:
    agent: int
    at_s: int
    range_s: tuple[int, int] | None = None


@dataclass(frozen=True)
class Scenario:
    seed: int
    duration_s: int
    agents: tuple[AgentSpec, ...]
    dt_s: int = SIM_STEP_S
    proximity_radius_m: float = PROXIMITY_RADIUS_M
    adoption_rate: float = 1.0
    origin: GeoPoint = GeoPoint(43.73, 12.63)
    diagnosis: tuple[DiagnosisEvent, ...] = ()
    max_distance_m: float = 20.0
    min_exposure_s: int = 900
    sync_interval_s: int = 900
    degraded_fix_rate: float = 0.03
    daily_note: bool = True
    start_day: str = "2023-11-15"

    def __post_init__(self):
        if self.dt_s <= 0:
            raise ScenarioError("dt_s must be positive")
        if not self.agents:
            raise ScenarioError("scenario needs at least one agent")
        if not 0.0 <= self.adoption_rate <= 1.0:
            raise ScenarioError("adoption_rate must be within [0, 1]")
        for event in self.diagnosis:
            if not 0 <= event.agent < len(self.agents):
                raise ScenarioError(f"diagnosis references unknown agent {event.agent}")
            if event.at_s > self.duration_s:
                raise ScenarioError("diagnosis scheduled after the run ends")


def scenario_from_dict(raw: dict) -> Scenario:
    """Parse a scenario document (the CLI's structured-text input)."""
    try:
        agents = []
        for entry in raw["agents"]:
            count = int(entry.get("count", 1))
            spacing = float(entry.get("spacing_m", 2.0))
            base = entry.get("offset_m", [0.0, 0.0])
            for k in range(count):
                agents.append(
                    AgentSpec(
                        movement=entry["movement"],
                        offset_m=(float(base[0]) + k * spacing, float(base[1])),
                        waypoints_m=tuple((float(x), float(y)) for x, y in entry.get("waypoints_m", [])),
                        speed_mps=float(entry.get("speed_mps", 1.0)),
                        walk_bound_m=float(entry.get("walk_bound_m", 2000.0)),
                    )
                )
        origin = raw.get("origin", [43.73, 12.63])
        diagnosis = tuple(
            DiagnosisEvent(
                agent=int(d["agent"]),
                at_s=int(d["at_s"]),
                range_s=tuple(d["range_s"]) if "range_s" in d else None,
            )
            for d in raw.get("diagnosis", [])
        )
        return Scenario(
            seed=int(raw["seed"]),
            duration_s=int(raw["duration_s"]),
            agents=tuple(agents),
            dt_s=int(raw.get("dt_s", SIM_STEP_S)),
            proximity_radius_m=float(raw.get("proximity_radius_m", PROXIMITY_RADIUS_M)),
            adoption_rate=float(raw.get("adoption_rate", 1.0)),
            origin=GeoPoint(float(origin[0]), float(origin[1])),
            diagnosis=diagnosis,
            max_distance_m=float(raw.get("max_distance_m", 20.0)),
            min_exposure_s=int(raw.get("min_exposure_s", 900)),
            sync_interval_s=int(raw.get("sync_interval_s", 900)),
            degraded_fix_rate=float(raw.get("degraded_fix_rate", 0.03)),
            daily_note=bool(raw.get("daily_note", True)),
            start_day=str(raw.get("start_day", "2023-11-15")),
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"malformed scenario: {exc}") from exc


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


class _Movement:
    """Stateful trajectory in the local meter plane; deterministic."""

    def __init__(self, spec: AgentSpec, rng: random.Random):
        self.spec = spec
        self.x, self.y = spec.offset_m
        self.speed = 0.0
        if spec.movement == "random_walk":
            self.heading = rng.uniform(0.0, 2.0 * math.pi)
        elif spec.movement == "waypoint":
            if not spec.waypoints_m:
                raise ScenarioError("waypoint agent needs waypoints_m")
            self.leg = 0
        elif spec.movement != "stationary":
            raise ScenarioError(f"unknown movement model {spec.movement!r}")

    def step(self, dt: int, rng: random.Random) -> None:
        if self.spec.movement == "stationary":
            self.speed = 0.0
        elif self.spec.movement == "waypoint":
            self._step_waypoint(dt)
        else:
            self._step_walk(dt, rng)

    def _step_waypoint(self, dt: int) -> None:
        remaining = self.spec.speed_mps * dt
        self.speed = 0.0
        while remaining > 0 and self.leg < len(self.spec.waypoints_m):
            tx, ty = self.spec.waypoints_m[self.leg]
            dist = math.hypot(tx - self.x, ty - self.y)
            if dist <= remaining:
                self.x, self.y = tx, ty
                self.leg += 1
                remaining -= dist
            else:
                self.x += (tx - self.x) / dist * remaining
                self.y += (ty - self.y) / dist * remaining
                remaining = 0.0
            self.speed = self.spec.speed_mps
        if self.leg >= len(self.spec.waypoints_m):
            self.speed = 0.0 if remaining > 0 else self.speed

    def _step_walk(self, dt: int, rng: random.Random) -> None:
        if rng.random() < 0.2:
            self.heading += rng.uniform(-math.pi / 2, math.pi / 2)
        self.x += self.spec.speed_mps * dt * math.cos(self.heading)
        self.y += self.spec.speed_mps * dt * math.sin(self.heading)
        bound = self.spec.walk_bound_m
        for axis in ("x", "y"):
            value = getattr(self, axis)
            if abs(value) > bound:
                setattr(self, axis, math.copysign(2 * bound - abs(value), value))
                self.heading = math.pi - self.heading if axis == "x" else -self.heading
        self.speed = self.spec.speed_mps


class SimAgent:
    """One inhabitant: a trajectory plus (for adopters) a device loop."""

    def __init__(self, index: int, spec: AgentSpec, adopting: bool, movement: _Movement):
        self.index = index
        self.spec = spec
        self.adopting = adopting
        self.movement = movement
        self.device: DeviceAgent | None = None
        self.true_region_dwell_s = 0
        self.diagnosed = False

    def position(self, origin: GeoPoint) -> GeoPoint:
        return _local_to_geo(origin, self.movement.x, self.movement.y)


def _local_to_geo(origin: GeoPoint, x_m: float, y_m: float) -> GeoPoint:
    lat = origin.lat + y_m / METERS_PER_DEGREE
    lon = origin.lon + x_m / (METERS_PER_DEGREE * math.cos(math.radians(origin.lat)))
    return GeoPoint(lat, lon)


class World:
    """The running simulation: agents, backend, authority, ground truth."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.rng = random.Random(scenario.seed)
        self.t0 = day_start(scenario.start_day)
        self.t = self.t0
        self.recorder = MessageRecorder()

        token = "sim-" + self.rng.getrandbits(128).to_bytes(16, "big").hex()
        self.authority = AuthorityAccount(
            "sim-authority", "Simulated health authority", token, frozenset(_competence_block(scenario.origin))
        )
        self.service = BackendService(
            [self.authority], clock=lambda: self.t, rng=random.Random(scenario.seed + 1)
        )
        self.transport = InProcessTransport(self.service, self.recorder, clock=lambda: self.t)

        self.agents: list[SimAgent] = []
        for index, spec in enumerate(scenario.agents):
            adopting = self.rng.random() < scenario.adoption_rate
            agent = SimAgent(index, spec, adopting, _Movement(spec, self.rng))
            if adopting:
                agent.device = DeviceAgent.create(
                    self.transport,
                    home=agent.position(scenario.origin),
                    created_at=self.t0,
                    rng=self.rng,
                )
            self.agents.append(agent)

        self.colocation_s: dict[tuple[int, int], int] = {}
        self.true_paths: list[list[tuple[int, float, float]]] = [[] for _ in self.agents]
        self.published_ctas: list = []
        self._pending_diagnosis = sorted(scenario.diagnosis, key=lambda d: d.at_s)
        self._dwell_computed = False

    # -- stepping ---------------------------------------------------------

    def step(self, dt: int | None = None) -> None:
        """Advance the world one tick: move, meet, exchange, sample."""
        dt = dt or self.scenario.dt_s
        self.t += dt
        origin = self.scenario.origin
        for agent in self.agents:
            agent.movement.step(dt, self.rng)

        radius = self.scenario.proximity_radius_m
        for i, a in enumerate(self.agents):
            for b in self.agents[i + 1:]:
                near = math.hypot(a.movement.x - b.movement.x, a.movement.y - b.movement.y) <= radius
                if not near:
                    continue
                key = (a.index, b.index)
                self.colocation_s[key] = self.colocation_s.get(key, 0) + dt
                if a.adopting and b.adopting:
                    a.device.observe_tcn(b.device.current_tcn(self.t), self.t)
                    b.device.observe_tcn(a.device.current_tcn(self.t), self.t)

        for agent in self.agents:
            self.true_paths[agent.index].append((self.t, agent.movement.x, agent.movement.y))
            if agent.adopting:
                self._feed_gps(agent)

    def _feed_gps(self, agent: SimAgent) -> None:
        if self.rng.random() < self.scenario.degraded_fix_rate:
            sigma, accuracy = DEGRADED_SIGMA_M, 2 * DEGRADED_SIGMA_M
        else:
            sigma, accuracy = GPS_SIGMA_M, 2 * GPS_SIGMA_M
        noisy = _local_to_geo(
            self.scenario.origin,
            agent.movement.x + self.rng.gauss(0.0, sigma),
            agent.movement.y + self.rng.gauss(0.0, sigma),
        )
        agent.device.observe_position(self.t, noisy, accuracy, agent.movement.speed)

    def _compute_true_dwell(self) -> None:
        """Tally each agent's real time inside published query regions.

        A query's regions cover intervals that predate its publication, so
        the tally has to look at the whole recorded path, not just the steps
        simulated after the document went out.
        """
        if self._dwell_computed:
            return
        self._dwell_computed = True
        dt = self.scenario.dt_s
        for agent in self.agents:
            total = 0
            for t, x, y in self.true_paths[agent.index]:
                position = _local_to_geo(self.scenario.origin, x, y)
                hit = False
                for cta in self.published_ctas:
                    for region in cta.regions:
                        if not region.start <= t <= region.end:
                            continue
                        if distance_to_polygon(position, region.polygon) <= cta.max_distance_m:
                            hit = True
                            break
                    if hit:
                        break
                if hit:
                    total += dt
            agent.true_region_dwell_s = total

    # -- the containment loop ---------------------------------------------

    def _run_diagnosis(self, event: DiagnosisEvent) -> None:
        agent = self.agents[event.agent]
        agent.diagnosed = True
        if not agent.adopting:
            return
        if event.range_s is None:
            range_start, range_end = self.t0, self.t
        else:
            range_start, range_end = self.t0 + event.range_s[0], self.t0 + event.range_s[1]
        agent.device.submit_diagnosis_report(True, range_start, range_end)
        self._authority_publish_from_reports()

    def _authority_publish_from_reports(self) -> None:
        """The authority turns fresh reports into published queries."""
        headers = {"Authorization": f"Bearer {self.authority.bearer_token}"}
        listing = self.transport.request("GET", "/v1/report", headers=headers).json()
        known = {cta.id for cta in self.published_ctas}
        for report in listing["reports"]:
            cta_id = f"cta-{report['id'][:12]}"
            if cta_id in known:
                continue
            stays = [
                StayPoint(
                    GeoPoint(row["lat"], row["lon"]),
                    row["radius_m"],
                    row["start"],
                    row["end"],
                    row["support_samples"],
                )
                for row in report["stay_points"]
            ]
            tcn_report = None
            if report["tcn_report"] is not None:
                tcn_report = TcnReport(
                    bytes.fromhex(report["tcn_report"]["chain_key"]),
                    report["tcn_report"]["start_index"],
                    report["tcn_report"]["end_index"],
                )
            cta = build_cta(
                stays,
                tcn_report,
                cta_id=cta_id,
                authority_id=self.authority.authority_id,
                message="If this matches, contact the health authority.",
                created_at=self.t,
                params=BuildParams(
                    max_distance_m=self.scenario.max_distance_m,
                    min_exposure_s=self.scenario.min_exposure_s,
                ),
            )
            response = self.transport.request("POST", "/v1/cta", headers=headers, body=cta_to_dict(cta))
            if response.status == 201:
                self.published_ctas.append(validate_cta(cta_to_dict(cta)))

    def _day_boundary(self) -> None:
        previous_day = day_of(self.t - SECONDS_PER_DAY)
        for agent in self.agents:
            if not agent.adopting:
                continue
            if self.scenario.daily_note:
                agent.device.store.add_note(Note(self.t - 1, f"daily check-in {previous_day}"))
            agent.device.expire(self.t)
            agent.device.upload_daily_stats(previous_day, self.t)

    def run(self) -> "Metrics":
        """Execute the scenario and return effectiveness metrics."""
        steps = self.scenario.duration_s // self.scenario.dt_s
        pending = list(self._pending_diagnosis)
        for _ in range(steps):
            self.step()
            while pending and self.t - self.t0 >= pending[0].at_s:
                self._run_diagnosis(pending.pop(0))
            if (self.t - self.t0) % SECONDS_PER_DAY == 0:
                self._day_boundary()
            elif (self.t - self.t0) % self.scenario.sync_interval_s == 0:
                for agent in self.agents:
                    if agent.adopting:
                        agent.device.sync_and_match(self.t)
        for agent in self.agents:
            if agent.adopting:
                agent.device.sync_and_match(self.t)
                agent.device.upload_daily_stats(day_of(self.t), self.t)
        return self.metrics()

    # -- evaluation ---------------------------------------------------------

    def colocation_with_diagnosed(self, index: int) -> int:
        total = 0
        for agent in self.agents:
            if not agent.diagnosed or agent.index == index:
                continue
            key = (min(index, agent.index), max(index, agent.index))
            total += self.colocation_s.get(key, 0)
        return total

    def metrics(self) -> "Metrics":
        self._compute_true_dwell()
        diagnosed = [a.index for a in self.agents if a.diagnosed]
        exposed = [
            a.index
            for a in self.agents
            if not a.diagnosed and self.colocation_with_diagnosed(a.index) >= self.scenario.min_exposure_s
        ]
        # The diagnosed device self-matches its own query; that is not an
        # exposure notification, so alert tallies cover contacts only.
        alerted = [
            a.index
            for a in self.agents
            if a.adopting and not a.diagnosed and a.device.pending_alerts
        ]
        alerted_exposed = [i for i in alerted if i in exposed]
        false_alarms = [
            i
            for i in alerted
            if self.colocation_with_diagnosed(i) == 0 and self.agents[i].true_region_dwell_s == 0
        ]
        channels = [
            alert.channel
            for a in self.agents
            if a.adopting and not a.diagnosed
            for alert in a.device.pending_alerts
        ]
        recorded = sum(len(a.device.store.samples) for a in self.agents if a.adopting)
        discarded = sum(
            sum(1 for s in a.device.store.samples if s.discarded) for a in self.agents if a.adopting
        )
        stats_rows = self.service.db.execute("SELECT COUNT(*) FROM stats").fetchone()[0]
        return Metrics(
            seed=self.scenario.seed,
            adoption_rate=self.scenario.adoption_rate,
            agent_count=len(self.agents),
            adopting=sum(1 for a in self.agents if a.adopting),
            diagnosed=len(diagnosed),
            truly_exposed=len(exposed),
            alerted=len(alerted),
            alerted_exposed=len(alerted_exposed),
            recall=1.0 if not exposed else len(alerted_exposed) / len(exposed),
            false_alarms=len(false_alarms),
            false_alarm_rate=0.0 if not alerted else len(false_alarms) / len(alerted),
            geo_alerts=sum(1 for c in channels if c is MatchChannel.GEO),
            tcn_alerts=sum(1 for c in channels if c is MatchChannel.TCN),
            both_alerts=sum(1 for c in channels if c is MatchChannel.BOTH),
            messages=len(self.recorder),
            samples_recorded=recorded,
            samples_discarded=discarded,
            stats_rows=stats_rows,
        )

    def ground_truth(self) -> dict:
        """Everything the privacy audit needs to cross-check the wire."""
        self._compute_true_dwell()
        diagnosed_tcns: set[str] = set()
        for cta in self.published_ctas:
            diagnosed_tcns.update(t.hex() for t in cta.tcns)
        contact_tcns: set[str] = set()
        raw_coordinates: list[list[float]] = []
        agents = []
        for agent in self.agents:
            if agent.adopting:
                contact_tcns.update(t.hex() for t in agent.device.contact_log.observed_tcns())
                raw_coordinates.extend(
                    [s.position.lat, s.position.lon] for s in agent.device.store.samples
                )
            agents.append(
                {
                    "index": agent.index,
                    "adopting": agent.adopting,
                    "installation_id": agent.device.installation_id if agent.adopting else None,
                    "diagnosed": agent.diagnosed,
                    "alerted": bool(agent.adopting and agent.device.pending_alerts),
                    "colocation_with_diagnosed_s": self.colocation_with_diagnosed(agent.index),
                    "true_region_dwell_s": agent.true_region_dwell_s,
                }
            )
        return {
            "seed": self.scenario.seed,
            "t0": self.t0,
            "duration_s": self.scenario.duration_s,
            "installation_ids": [a.device.installation_id for a in self.agents if a.adopting],
            "authority_tokens": [self.authority.bearer_token],
            "diagnosed_tcns": sorted(diagnosed_tcns),
            "contact_tcns": sorted(contact_tcns),
            "raw_coordinates": raw_coordinates,
            "agents": agents,
        }


def _competence_block(origin: GeoPoint, span: int = 3) -> list[str]:
    i, j = parse_cell_id(coarse_cell(origin))
    return [f"{i + di}:{j + dj}" for di in range(-span, span + 1) for dj in range(-span, span + 1)]


@dataclass(frozen=True)
class Metrics:
    seed: int
    adoption_rate: float
    agent_count: int
    adopting: int
    diagnosed: int
    truly_exposed: int
    alerted: int
    alerted_exposed: int
    recall: float
    false_alarms: int
    false_alarm_rate: float
    geo_alerts: int
    tcn_alerts: int
    both_alerts: int
    messages: int
    samples_recorded: int
    samples_discarded: int
    stats_rows: int

    def to_row(self) -> list:
        return [getattr(self, name) for name in METRICS_FIELDS]


def metrics_csv(rows: list[Metrics]) -> str:
    lines = [",".join(METRICS_FIELDS)]
    for metrics in rows:
        lines.append(",".join(_format_metric(v) for v in metrics.to_row()))
    return "\n".join(lines) + "\n"


def _format_metric(value) -> str:
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def summary_text(metrics: Metrics) -> str:
    return (
        f"agents: {metrics.agent_count} ({metrics.adopting} adopting, "
        f"adoption rate {metrics.adoption_rate:.2f})\n"
        f"diagnosed: {metrics.diagnosed}\n"
        f"truly exposed (>= min exposure with a diagnosed agent): {metrics.truly_exposed}\n"
        f"alerted: {metrics.alerted} (geo {metrics.geo_alerts}, tcn {metrics.tcn_alerts}, "
        f"both {metrics.both_alerts})\n"
        f"recall: {metrics.recall:.4f}\n"
        f"false alarms: {metrics.false_alarms} (rate {metrics.false_alarm_rate:.4f})\n"
        f"messages on the wire: {metrics.messages}\n"
        f"samples recorded: {metrics.samples_recorded} ({metrics.samples_discarded} low-accuracy)\n"
        f"stats rows stored: {metrics.stats_rows}\n"
    )


def run_scenario(scenario: Scenario) -> tuple[Metrics, World]:
    world = World(scenario)
    metrics = world.run()
    return metrics, world


def adoption_sweep(scenario: Scenario, rates: list[float]) -> list[Metrics]:
    """Re-run the same scenario at several adoption rates."""
    results = []
    for rate in rates:
        variant = Scenario(**{**scenario.__dict__, "adoption_rate": rate})
        metrics, _ = run_scenario(variant)
        results.append(metrics)
    return results


def write_run_dir(path: str, world: World, metrics_rows: list[Metrics]) -> None:
    """Persist a run for the offline privacy audit and for inspection."""
    import os

    os.makedirs(path, exist_ok=True)
    world.recorder.write_jsonl(os.path.join(path, "messages.jsonl"))
    with open(os.path.join(path, "ground_truth.json"), "w", encoding="utf-8") as fh:
        json.dump(world.ground_truth(), fh, sort_keys=True)
    with open(os.path.join(path, "metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write(metrics_csv(metrics_rows))
    with open(os.path.join(path, "summary.txt"), "w", encoding="utf-8") as fh:
        for metrics in metrics_rows:
            fh.write(summary_text(metrics))
            fh.write("\n")
