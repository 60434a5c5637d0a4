import json

import pytest

from socbench.builder import (
    AttackBlock,
    AttackScenario,
    ScenarioStore,
    assemble,
    extract_ground_truth,
    validate_scenario,
)
from socbench.demo import demo_scenario, install_demo_traces
from socbench.errors import (
    ConflictingRoles,
    NotFound,
    SchemaViolation,
    UnknownTrace,
)
from socbench.library import AttackPhase
from socbench.pcap import write_capture
from socbench.rewrite import AddressMap, verify_checksums
from test_library import add_scan


@pytest.fixture
def demo_ids(library):
    return install_demo_traces(library)


def block(trace_id, offset=0.0, speed=1.0, pairs=()):
    return AttackBlock(
        trace_id=trace_id, offset_s=offset, speed=speed,
        address_map=AddressMap.from_pairs(pairs),
    )


class TestValidateScenario:
    def test_phase_order_ok(self, library, demo_ids):
        scenario = AttackScenario(
            id="s", name="ordered",
            blocks=(block(demo_ids["portscan"], 0), block(demo_ids["exploit_cve"], 60)),
        )
        assert validate_scenario(scenario, library) == []

    def test_phase_order_violation(self, library, demo_ids):
        scenario = AttackScenario(
            id="s", name="reversed",
            blocks=(block(demo_ids["contact_cnc"], 0), block(demo_ids["portscan"], 60)),
        )
        notes = validate_scenario(scenario, library)
        assert [n.kind for n in notes] == ["PhaseOrderWarning"]

    def test_overlap_note_only(self, library):
        a = add_scan(library, name="a")  # duration 1.5 s
        b = add_scan(library, name="b")
        scenario = AttackScenario(
            id="s", name="overlap",
            blocks=(block(a.id, 0, speed=0.05), block(b.id, 20, speed=0.05)),
        )  # [0,30] overlaps [20,50]; same phase so no order warning
        notes = validate_scenario(scenario, library)
        assert [n.kind for n in notes] == ["OverlapNote"]

    def test_unknown_trace(self, library, demo_ids):
        scenario = AttackScenario(id="s", name="x", blocks=(block("missing"),))
        with pytest.raises(UnknownTrace):
            validate_scenario(scenario, library)


class TestAssemble:
    def test_identity_composition(self, library):
        trace = add_scan(library)
        scenario = AttackScenario(id="s", name="id", blocks=(block(trace.id),))
        attack = assemble(scenario, library)
        original = library.load_capture(trace.id)
        assert write_capture(attack.capture) == write_capture(original)
        truth = attack.ground_truth
        assert truth.attacker_ips == frozenset({"10.0.0.1"})
        assert truth.victim_ips == frozenset({"10.0.0.9"})

    def test_two_blocks_offsets(self, library):
        trace = add_scan(library)
        scenario = AttackScenario(
            id="s", name="two",
            blocks=(block(trace.id, 0), block(trace.id, 60)),
        )
        attack = assemble(scenario, library)
        assert len(attack.capture.packets) == 2 * trace.packet_count
        base = library.load_capture(trace.id)
        second_half = attack.capture.packets[trace.packet_count:]
        assert second_half[0].ts_sec >= 60
        assert attack.capture.monotonic

    def test_demo_scenario_timeline(self, library, demo_ids):
        attack = assemble(demo_scenario(demo_ids), library)
        timeline = attack.ground_truth.timeline
        assert [entry.phase for entry in timeline] == [
            AttackPhase.RECONNAISSANCE, AttackPhase.EXPLOITATION,
            AttackPhase.DELIVERY, AttackPhase.CONTROL,
        ]
        assert [entry.start for entry in timeline] == [0.0, 60.0, 120.0, 180.0]
        assert attack.capture.monotonic
        total = sum(
            library.get_trace(tid).packet_count for tid in demo_ids.values()
        )
        assert len(attack.capture.packets) == total
        assert verify_checksums(attack.capture) == []

    def test_assembly_deterministic(self, library, demo_ids):
        scenario = demo_scenario(demo_ids)
        first = assemble(scenario, library)
        second = assemble(scenario, library)
        assert write_capture(first.capture) == write_capture(second.capture)
        assert first.ground_truth == second.ground_truth

    def test_speed_scales_block(self, library):
        trace = add_scan(library)  # 1.5 s duration
        scenario = AttackScenario(
            id="s", name="fast", blocks=(block(trace.id, 0, speed=3.0),)
        )
        attack = assemble(scenario, library)
        assert attack.capture.duration_seconds == pytest.approx(0.5)

    def test_unknown_trace(self, library):
        scenario = AttackScenario(id="s", name="x", blocks=(block("missing"),))
        with pytest.raises(UnknownTrace):
            assemble(scenario, library)


class TestGroundTruth:
    def test_roles_pass_through_map(self, library):
        trace = add_scan(library)
        scenario = AttackScenario(
            id="s", name="mapped",
            blocks=(block(trace.id, pairs=[("10.0.0.0/24", "198.51.100.0/24")]),),
        )
        truth = extract_ground_truth(scenario, library)
        assert truth.attacker_ips == frozenset({"198.51.100.1"})
        assert truth.victim_ips == frozenset({"198.51.100.9"})

    def test_expected_answers_unioned(self, library, demo_ids):
        truth = extract_ground_truth(demo_scenario(demo_ids), library)
        assert truth.expected["delivery_control"] == {
            "data exfiltration", "http requests",
        }
        assert truth.expected["recon"] == {"port scan"}
        assert truth.expected["exploit"] == {"remote code execution"}

    def test_conflicting_roles(self, library):
        trace = add_scan(library)  # attacker 10.0.0.1, victim 10.0.0.9
        scenario = AttackScenario(
            id="s", name="clash",
            blocks=(
                block(trace.id, pairs=[("10.0.0.1", "10.9.9.9"), ("10.0.0.9", "10.9.9.9")]),
            ),
        )
        with pytest.raises(ConflictingRoles):
            extract_ground_truth(scenario, library)

    def test_mapped_sets_match_bruteforce(self, library, demo_ids):
        scenario = demo_scenario(demo_ids)
        truth = extract_ground_truth(scenario, library)
        attackers, victims = set(), set()
        for blk in scenario.blocks:
            trace = library.get_trace(blk.trace_id)
            for role, address in trace.roles.items():
                mapped = blk.address_map.translate(address)
                if role == "attacker":
                    attackers.add(mapped)
                if role == "victim":
                    victims.add(mapped)
        assert truth.attacker_ips == frozenset(attackers)
        assert truth.victim_ips == frozenset(victims)

    def test_json_round_trip(self, library, demo_ids):
        from socbench.builder import GroundTruth

        truth = extract_ground_truth(demo_scenario(demo_ids), library)
        again = GroundTruth.from_json(json.loads(json.dumps(truth.to_json())))
        assert again == truth


class TestScenarioStore:
    def test_save_load_round_trip(self, library, tmp_path):
        trace = add_scan(library)
        store = ScenarioStore(tmp_path)
        scenario = AttackScenario(
            id="", name="x",
            blocks=(block(trace.id, 5, 2.0, [("10.0.0.0/24", "192.0.2.0/24")]),),
            notes="hello",
        )
        scenario_id = store.save_scenario(scenario)
        loaded = store.load_scenario(scenario_id)
        assert loaded.name == "x"
        assert loaded.notes == "hello"
        assert loaded.blocks[0].offset_s == 5
        assert loaded.blocks[0].speed == 2.0
        assert loaded.blocks[0].address_map.to_pairs() == [
            {"from": "10.0.0.0/24", "to": "192.0.2.0/24"}
        ]

    def test_load_missing(self, tmp_path):
        with pytest.raises(NotFound):
            ScenarioStore(tmp_path).load_scenario("ghost")

    def test_tampered_json_missing_blocks(self, tmp_path):
        store = ScenarioStore(tmp_path)
        (store.scenarios_dir / "bad.json").write_text(
            json.dumps({"id": "bad", "name": "no blocks"})
        )
        with pytest.raises(SchemaViolation):
            store.load_scenario("bad")

    def test_invalid_json(self, tmp_path):
        store = ScenarioStore(tmp_path)
        (store.scenarios_dir / "bad.json").write_text("{nope")
        with pytest.raises(SchemaViolation):
            store.load_scenario("bad")

    def test_scenario_referencing_deleted_trace_loads(self, library, tmp_path):
        trace = add_scan(library)
        store = ScenarioStore(tmp_path)
        scenario_id = store.save_scenario(
            AttackScenario(id="", name="dangling", blocks=(block(trace.id),))
        )
        store2 = ScenarioStore(tmp_path)  # same root; delete trace under it
        library.traces_dir.joinpath(f"{trace.id}.json").unlink()
        loaded = store2.load_scenario(scenario_id)
        with pytest.raises(UnknownTrace):
            validate_scenario(loaded, library)

    def test_empty_blocks_rejected(self):
        with pytest.raises(SchemaViolation):
            AttackScenario(id="s", name="empty", blocks=())
