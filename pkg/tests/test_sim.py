"""Simulator tests: movement, proximity, the full loop, determinism."""

import json
import math
import os

import pytest

from anontrace.dayfile import day_start
from anontrace.cta import MatchChannel
from anontrace.geo import GeoPoint, haversine
from anontrace.sim import (
    METRICS_FIELDS,
    AgentSpec,
    DiagnosisEvent,
    Scenario,
    ScenarioError,
    World,
    adoption_sweep,
    load_scenario,
    metrics_csv,
    run_scenario,
    scenario_from_dict,
    summary_text,
    write_run_dir,
)

T0 = day_start("2023-11-15")


def stationary(x: float, y: float) -> AgentSpec:
    return AgentSpec(movement="stationary", offset_m=(x, y))


def pair_scenario(separation_m: float, duration_s: int = 900, **overrides) -> Scenario:
    agents = (stationary(0.0, 0.0), stationary(separation_m, 0.0))
    return Scenario(seed=11, duration_s=duration_s, agents=agents, **overrides)


class TestScenarioParsing:
    def test_count_replicates_agents_with_spacing(self):
        scenario = scenario_from_dict(
            {
                "seed": 3,
                "duration_s": 600,
                "agents": [{"movement": "stationary", "count": 4, "spacing_m": 5.0}],
            }
        )
        assert len(scenario.agents) == 4
        assert [spec.offset_m[0] for spec in scenario.agents] == [0.0, 5.0, 10.0, 15.0]

    def test_defaults(self):
        scenario = scenario_from_dict(
            {"seed": 1, "duration_s": 60, "agents": [{"movement": "stationary"}]}
        )
        assert scenario.dt_s == 10
        assert scenario.proximity_radius_m == 10.0
        assert scenario.adoption_rate == 1.0
        assert scenario.origin == GeoPoint(43.73, 12.63)

    def test_missing_required_field_raises(self):
        with pytest.raises(ScenarioError):
            scenario_from_dict({"seed": 1, "agents": [{"movement": "stationary"}]})

    def test_unknown_movement_model_raises(self):
        scenario = scenario_from_dict(
            {"seed": 1, "duration_s": 60, "agents": [{"movement": "teleport"}]}
        )
        with pytest.raises(ScenarioError):
            World(scenario)

    def test_diagnosis_of_unknown_agent_raises(self):
        with pytest.raises(ScenarioError):
            scenario_from_dict(
                {
                    "seed": 1,
                    "duration_s": 60,
                    "agents": [{"movement": "stationary"}],
                    "diagnosis": [{"agent": 5, "at_s": 30}],
                }
            )

    def test_diagnosis_after_run_end_raises(self):
        with pytest.raises(ScenarioError):
            Scenario(
                seed=1,
                duration_s=60,
                agents=(stationary(0, 0),),
                diagnosis=(DiagnosisEvent(agent=0, at_s=120),),
            )

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(
            json.dumps({"seed": 9, "duration_s": 300, "agents": [{"movement": "stationary"}]})
        )
        assert load_scenario(str(path)).seed == 9


class TestProximity:
    def test_close_pair_accumulates_colocation_and_exchanges_tcns(self):
        world = World(pair_scenario(5.0))
        world.run()
        assert world.colocation_s[(0, 1)] == 900
        a, b = world.agents
        tcn_of_b = b.device.current_tcn(T0 + 10)
        tcn_of_a = a.device.current_tcn(T0 + 10)
        assert tcn_of_b in a.device.contact_log.observed_tcns()
        assert tcn_of_a in b.device.contact_log.observed_tcns()

    def test_observations_merge_within_rotation_window(self):
        world = World(pair_scenario(5.0, duration_s=890))
        world.run()
        assert len(world.agents[0].device.contact_log) == 1
        record = world.agents[0].device.contact_log.records[0]
        assert record.last_seen - record.first_seen == 880

    def test_distant_pair_never_meets(self):
        world = World(pair_scenario(50.0))
        world.run()
        assert world.colocation_s == {}
        assert world.agents[0].device.contact_log.observed_tcns() == set()

    def test_non_adopters_do_not_exchange_tcns(self):
        world = World(pair_scenario(5.0, adoption_rate=0.0))
        world.run()
        assert world.colocation_s[(0, 1)] == 900
        assert all(agent.device is None for agent in world.agents)


class TestMovement:
    def test_waypoint_agent_reaches_target_and_stops(self):
        spec = AgentSpec(movement="waypoint", waypoints_m=((600.0, 0.0),), speed_mps=1.4)
        scenario = Scenario(seed=5, duration_s=1800, agents=(spec,))
        world = World(scenario)
        world.run()
        agent = world.agents[0]
        assert math.isclose(agent.movement.x, 600.0, abs_tol=1e-6)
        assert agent.movement.speed == 0.0
        expected = GeoPoint(43.73, 12.63 + 600.0 / (111_194.9266 * math.cos(math.radians(43.73))))
        assert haversine(agent.position(scenario.origin), expected) < 0.5

    def test_moving_agent_samples_fast(self):
        spec = AgentSpec(movement="waypoint", waypoints_m=((5000.0, 0.0),), speed_mps=1.4)
        scenario = Scenario(seed=5, duration_s=1800, agents=(spec,))
        world = World(scenario)
        world.run()
        samples = world.agents[0].device.store.samples
        gaps = [b.timestamp - a.timestamp for a, b in zip(samples, samples[1:])]
        assert gaps and max(gaps) <= 30

    def test_random_walk_respects_bound(self):
        spec = AgentSpec(movement="random_walk", speed_mps=2.0, walk_bound_m=100.0)
        world = World(Scenario(seed=17, duration_s=5000, agents=(spec,), adoption_rate=0.0))
        world.run()
        agent = world.agents[0]
        assert abs(agent.movement.x) <= 100.0 + 1e-9
        assert abs(agent.movement.y) <= 100.0 + 1e-9


def containment_scenario(**overrides) -> Scenario:
    """Diagnosed stationary agent, one close contact, one distant bystander."""
    agents = (stationary(0.0, 0.0), stationary(5.0, 0.0), stationary(5000.0, 0.0))
    base = dict(
        seed=23,
        duration_s=7200,
        agents=agents,
        diagnosis=(DiagnosisEvent(agent=0, at_s=5400),),
    )
    base.update(overrides)
    return Scenario(**base)


class TestContainmentLoop:
    def test_close_contact_alerted_distant_bystander_not(self):
        metrics, world = run_scenario(containment_scenario())
        assert len(world.published_ctas) == 1
        close, distant = world.agents[1], world.agents[2]
        assert close.device.pending_alerts
        assert not distant.device.pending_alerts
        assert metrics.recall == 1.0
        assert metrics.false_alarms == 0
        assert metrics.truly_exposed == 1
        assert metrics.alerted == 1

    def test_close_contact_matches_on_both_channels(self):
        _, world = run_scenario(containment_scenario())
        alert = world.agents[1].device.pending_alerts[0]
        assert alert.channel is MatchChannel.BOTH

    def test_tcn_only_cta_from_mobile_diagnosed_agent(self):
        path = tuple((float(x), 0.0) for x in range(400, 6001, 400))
        walker = AgentSpec(movement="waypoint", waypoints_m=path, speed_mps=1.5)
        companion = AgentSpec(
            movement="waypoint",
            offset_m=(0.0, 2.0),
            waypoints_m=tuple((x, 2.0) for x, _ in path),
            speed_mps=1.5,
        )
        scenario = Scenario(
            seed=29,
            duration_s=4500,
            agents=(walker, companion),
            diagnosis=(DiagnosisEvent(agent=0, at_s=4200),),
        )
        metrics, world = run_scenario(scenario)
        cta = world.published_ctas[0]
        assert cta.regions == ()
        assert len(cta.tcns) > 0
        alert = world.agents[1].device.pending_alerts[0]
        assert alert.channel is MatchChannel.TCN
        assert metrics.recall == 1.0

    def test_zero_adoption_produces_no_traffic(self):
        metrics, world = run_scenario(containment_scenario(adoption_rate=0.0))
        assert metrics.adopting == 0
        assert metrics.alerted == 0
        assert metrics.messages == 0
        assert len(world.recorder) == 0

    def test_diagnosed_agent_not_counted_exposed(self):
        metrics, _ = run_scenario(containment_scenario())
        assert metrics.diagnosed == 1
        assert metrics.truly_exposed == 1


class TestDailyCycle:
    def test_day_boundaries_upload_stats_and_add_notes(self):
        scenario = Scenario(
            seed=41,
            duration_s=2 * 86_400,
            agents=(stationary(0.0, 0.0),),
            dt_s=60,
        )
        metrics, world = run_scenario(scenario)
        # Two boundary uploads plus the final partial-day upload.
        assert metrics.stats_rows == 3
        device = world.agents[0].device
        assert len(device.store.notes) == 2
        paths = [x.path for x in world.recorder.exchanges]
        assert paths.count("/v1/stats") == 3

    def test_some_low_accuracy_fixes_are_discarded(self):
        scenario = Scenario(seed=41, duration_s=86_400, agents=(stationary(0.0, 0.0),), dt_s=60)
        metrics, _ = run_scenario(scenario)
        assert metrics.samples_recorded > 200
        assert 0 < metrics.samples_discarded < metrics.samples_recorded / 4


class TestDeterminism:
    def test_same_seed_reproduces_run_byte_for_byte(self, tmp_path):
        digests = []
        for run in ("a", "b"):
            metrics, world = run_scenario(containment_scenario())
            run_dir = tmp_path / run
            write_run_dir(str(run_dir), world, [metrics])
            digests.append(
                tuple((run_dir / name).read_bytes() for name in
                      ("messages.jsonl", "ground_truth.json", "metrics.csv", "summary.txt"))
            )
        assert digests[0] == digests[1]

    def test_different_seed_differs(self):
        a, _ = run_scenario(containment_scenario())
        b, _ = run_scenario(containment_scenario(seed=99))
        assert a != b or True  # metrics may coincide; the ids must not
        _, world_a = run_scenario(containment_scenario())
        _, world_b = run_scenario(containment_scenario(seed=99))
        ids_a = {a_.device.installation_id for a_ in world_a.agents if a_.adopting}
        ids_b = {b_.device.installation_id for b_ in world_b.agents if b_.adopting}
        assert ids_a.isdisjoint(ids_b)


class TestOutputs:
    def test_metrics_csv_shape(self):
        metrics, _ = run_scenario(pair_scenario(5.0))
        text = metrics_csv([metrics])
        header, row = text.strip().split("\n")
        assert header == ",".join(METRICS_FIELDS)
        assert len(row.split(",")) == len(METRICS_FIELDS)

    def test_summary_mentions_recall_and_alerts(self):
        metrics, _ = run_scenario(containment_scenario())
        text = summary_text(metrics)
        assert "recall: 1.0000" in text
        assert "alerted: 1" in text

    def test_write_run_dir_produces_all_artifacts(self, tmp_path):
        metrics, world = run_scenario(pair_scenario(5.0))
        run_dir = tmp_path / "run"
        write_run_dir(str(run_dir), world, [metrics])
        names = sorted(os.listdir(run_dir))
        assert names == ["ground_truth.json", "messages.jsonl", "metrics.csv", "summary.txt"]
        truth = json.loads((run_dir / "ground_truth.json").read_text())
        assert len(truth["installation_ids"]) == 2
        assert truth["authority_tokens"]
        assert truth["agents"][0]["adopting"] is True

    def test_ground_truth_lists_contact_and_diagnosed_tcns(self):
        _, world = run_scenario(containment_scenario())
        truth = world.ground_truth()
        assert set(truth["diagnosed_tcns"])
        assert set(truth["diagnosed_tcns"]) & set(truth["contact_tcns"])
        assert truth["raw_coordinates"]


class TestAdoptionSweep:
    def test_sweep_varies_only_adoption(self):
        scenario = pair_scenario(5.0, duration_s=600)
        rows = adoption_sweep(scenario, [0.0, 1.0])
        assert [m.adoption_rate for m in rows] == [0.0, 1.0]
        assert rows[0].adopting == 0
        assert rows[1].adopting == 2
