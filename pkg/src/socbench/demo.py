"""Bundled demo content: four-phase example traces and evaluation fixtures.

``make_demo_traces`` produces one deterministic capture per attack phase
(port scan, service exploit, HTTP download, C2 beaconing) so a working
library, scenario, and injection can be spun up without any external pcaps.
``benchmark_reports_csv`` emits a two-condition analyst-report dataset with
known detection and investigation rates, used by the regression suite and
handy as an evaluation walkthrough.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .builder import AttackBlock, AttackScenario, GroundTruth
from .frames import capture_of, tcp_frame, udp_frame
from .library import AttackPhase, TraceLibrary
from .pcap import write_capture
from .reports import REPORT_CSV_COLUMNS
from .rewrite import AddressMap

ATTACKER_IP = "203.0.113.66"
VICTIM_IP = "192.0.2.23"
CNC_IP = "198.51.100.99"

ATTACKER_MAC = "02:aa:00:00:00:01"
VICTIM_MAC = "02:aa:00:00:00:02"


@dataclass(frozen=True)
class DemoTrace:
    key: str
    name: str
    phase: AttackPhase
    technique: str
    roles: dict[str, str]
    expected_answers: dict
    capture_bytes: bytes


def _portscan_trace() -> DemoTrace:
    ports = (21, 22, 23, 25, 80, 110, 143, 443, 3306, 8080)
    frames = []
    for i, port in enumerate(ports):
        frames.append(
            (
                0.25 * i,
                tcp_frame(
                    src=ATTACKER_IP, dst=VICTIM_IP,
                    sport=40000 + i, dport=port,
                    src_mac=ATTACKER_MAC, dst_mac=VICTIM_MAC,
                    flags=0x02, seq=1000 + i, identification=i + 1,
                ),
            )
        )
        if port in (22, 80):  # open ports answer
            frames.append(
                (
                    0.25 * i + 0.01,
                    tcp_frame(
                        src=VICTIM_IP, dst=ATTACKER_IP,
                        sport=port, dport=40000 + i,
                        src_mac=VICTIM_MAC, dst_mac=ATTACKER_MAC,
                        flags=0x12, seq=2000 + i, ack=1001 + i,
                        identification=100 + i,
                    ),
                )
            )
    return DemoTrace(
        key="portscan",
        name="nmap tcp connect scan",
        phase=AttackPhase.RECONNAISSANCE,
        technique="portscan",
        roles={"attacker": ATTACKER_IP, "victim": VICTIM_IP},
        expected_answers={"recon": "port scan"},
        capture_bytes=write_capture(capture_of(frames)),
    )


def _exploit_trace() -> DemoTrace:
    payload = b"AUTH-BYPASS \x90\x90\x90\x90" + bytes(range(48)) + b"/bin/sh\x00"
    frames = [
        (0.0, tcp_frame(src=ATTACKER_IP, dst=VICTIM_IP, sport=41337, dport=22,
                        src_mac=ATTACKER_MAC, dst_mac=VICTIM_MAC,
                        flags=0x02, seq=1, identification=1)),
        (0.02, tcp_frame(src=VICTIM_IP, dst=ATTACKER_IP, sport=22, dport=41337,
                         src_mac=VICTIM_MAC, dst_mac=ATTACKER_MAC,
                         flags=0x12, seq=100, ack=2, identification=2)),
        (0.04, tcp_frame(src=ATTACKER_IP, dst=VICTIM_IP, sport=41337, dport=22,
                         src_mac=ATTACKER_MAC, dst_mac=VICTIM_MAC,
                         flags=0x10, seq=2, ack=101, identification=3)),
        (0.5, tcp_frame(payload, src=ATTACKER_IP, dst=VICTIM_IP, sport=41337,
                        dport=22, src_mac=ATTACKER_MAC, dst_mac=VICTIM_MAC,
                        seq=2, ack=101, identification=4)),
        (0.9, tcp_frame(b"uid=0(root)\n", src=VICTIM_IP, dst=ATTACKER_IP,
                        sport=22, dport=41337, src_mac=VICTIM_MAC,
                        dst_mac=ATTACKER_MAC, seq=101, ack=2 + len(payload),
                        identification=5)),
    ]
    return DemoTrace(
        key="exploit_cve",
        name="ssh service exploit",
        phase=AttackPhase.EXPLOITATION,
        technique="exploit_cve",
        roles={"attacker": ATTACKER_IP, "victim": VICTIM_IP},
        expected_answers={"exploit": "remote code execution"},
        capture_bytes=write_capture(capture_of(frames)),
    )


def _http_get_trace() -> DemoTrace:
    request = (
        b"GET /updates/stage2.bin HTTP/1.1\r\n"
        b"Host: files.example.test\r\nUser-Agent: curl/8.0\r\n\r\n"
    )
    response = (
        b"HTTP/1.1 200 OK\r\nContent-Type: application/octet-stream\r\n"
        b"Content-Length: 64\r\n\r\n" + bytes(64)
    )
    frames = [
        (0.0, tcp_frame(request, src=VICTIM_IP, dst=ATTACKER_IP, sport=49152,
                        dport=80, src_mac=VICTIM_MAC, dst_mac=ATTACKER_MAC,
                        seq=10, ack=1, identification=1)),
        (0.3, tcp_frame(response, src=ATTACKER_IP, dst=VICTIM_IP, sport=80,
                        dport=49152, src_mac=ATTACKER_MAC, dst_mac=VICTIM_MAC,
                        seq=1, ack=10 + len(request), identification=2)),
    ]
    return DemoTrace(
        key="http_get",
        name="payload download over http",
        phase=AttackPhase.DELIVERY,
        technique="http_get",
        roles={"attacker": ATTACKER_IP, "victim": VICTIM_IP},
        expected_answers={"delivery_control": ["http requests"]},
        capture_bytes=write_capture(capture_of(frames)),
    )


def _contact_cnc_trace() -> DemoTrace:
    frames = []
    for i in range(6):
        beacon = b"BEACON" + bytes([i]) + b"exfil:" + bytes(24)
        frames.append(
            (
                2.0 * i,
                udp_frame(beacon, src=VICTIM_IP, dst=CNC_IP, sport=53535,
                          dport=4444, src_mac=VICTIM_MAC,
                          dst_mac=ATTACKER_MAC, identification=i + 1),
            )
        )
    return DemoTrace(
        key="contact_cnc",
        name="c2 beacon with data exfiltration",
        phase=AttackPhase.CONTROL,
        technique="contact_cnc",
        roles={"victim": VICTIM_IP, "cnc": CNC_IP},
        expected_answers={"delivery_control": ["data exfiltration"]},
        capture_bytes=write_capture(capture_of(frames)),
    )


def make_demo_traces() -> list[DemoTrace]:
    """The four demo traces, one per phase, in phase order."""
    return [_portscan_trace(), _exploit_trace(), _http_get_trace(), _contact_cnc_trace()]


def install_demo_traces(library: TraceLibrary) -> dict[str, str]:
    """Add the demo traces to a library; returns key -> trace id."""
    ids = {}
    for demo in make_demo_traces():
        trace = library.add_trace(
            demo.capture_bytes,
            name=demo.name,
            phase=demo.phase,
            technique=demo.technique,
            roles=demo.roles,
            expected_answers=demo.expected_answers,
        )
        ids[demo.key] = trace.id
    return ids


def demo_scenario(
    trace_ids: dict[str, str],
    *,
    scenario_id: str = "demo-attack",
    name: str = "four-phase demo attack",
    target_map: list[tuple[str, str]] | None = None,
) -> AttackScenario:
    """Four blocks in phase order at minute offsets, sharing one address map."""
    if target_map is None:
        target_map = [
            (ATTACKER_IP, "10.13.37.66"),
            (VICTIM_IP, "10.13.37.23"),
            (CNC_IP, "10.13.37.99"),
        ]
    address_map = AddressMap.from_pairs(target_map)
    offsets = {"portscan": 0.0, "exploit_cve": 60.0, "http_get": 120.0, "contact_cnc": 180.0}
    blocks = tuple(
        AttackBlock(
            trace_id=trace_ids[key],
            offset_s=offsets[key],
            speed=1.0,
            address_map=address_map,
        )
        for key in ("portscan", "exploit_cve", "http_get", "contact_cnc")
    )
    return AttackScenario(id=scenario_id, name=name, blocks=blocks, notes="")


# -- analyst-report fixtures ----------------------------------------------------


def perfect_incident_fields(truth: GroundTruth) -> dict[str, str]:
    """CSV cell values a flawless analyst would submit for a scenario."""
    expected = truth.expected
    delivery = sorted(expected.get("delivery_control", set()))[:2]
    receiver = sorted(truth.victim_ips)[0] if truth.victim_ips else ""
    return {
        "attacker_ips": ";".join(sorted(truth.attacker_ips)),
        "victim_ips": ";".join(sorted(truth.victim_ips)),
        "recon": next(iter(sorted(expected.get("recon", set()))), ""),
        "exploit": ";".join(sorted(expected.get("exploit", set()))),
        "delivery": ";".join(delivery),
        "receiver_ips": ";".join(f"{label}={receiver}" for label in delivery),
        "comments": "",
    }


def reports_csv(rows: list[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=REPORT_CSV_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow({column: row.get(column, "") for column in REPORT_CSV_COLUMNS})
    return buffer.getvalue()


def perfect_reports_csv(
    truths: list[GroundTruth], *, groups: int = 3, condition: str = "DEMO"
) -> str:
    """Reports where every group nails every scenario; closed-loop fixture."""
    rows = []
    for g in range(1, groups + 1):
        for index, truth in enumerate(truths, start=1):
            rows.append(
                {
                    "group_id": f"{condition.lower()}-{g:02d}",
                    "condition": condition,
                    "submitted_at": f"2026-03-02T12:{g:02d}:00+00:00",
                    "incident_index": str(index),
                    **perfect_incident_fields(truth),
                }
            )
    return reports_csv(rows)


# One-condition plan: per-group report count plus, per matched scenario,
# the multiple-choice answers that incident will carry.
@dataclass(frozen=True)
class GroupPlan:
    group_id: str
    reports: int
    matches: dict[str, dict] = field(default_factory=dict)


def _noise_incident(group_id: str, index: int) -> dict[str, str]:
    octet = (sum(ord(ch) for ch in group_id) + index) % 200 + 1
    return {
        "attacker_ips": f"172.31.250.{octet}",
        "victim_ips": f"172.31.251.{octet}",
        "recon": "other",
        "exploit": "none",
        "delivery": "none",
        "receiver_ips": "",
        "comments": "unrelated suspicious activity",
    }


def _off_key(vocabulary: tuple[str, ...], expected: set[str]) -> str:
    for label in vocabulary:
        if label not in expected and label != "none":
            return label
    return "other"


def _match_incident_fields(truth: GroundTruth, answers: dict) -> dict[str, str]:
    """Materialize a matched incident: right or wrong answers per the plan.

    Correct answers come from the truth's expected sets, wrong ones from
    off-key questionnaire labels, so plans compose with any ground truth.
    """
    from .library import EXPLOIT_ANSWERS, RECON_ANSWERS

    expected = truth.expected
    recon_expected = set(expected.get("recon", set()))
    exploit_expected = set(expected.get("exploit", set()))
    if answers.get("recon_ok"):
        recon = sorted(recon_expected)[0] if recon_expected else "none"
    else:
        recon = _off_key(RECON_ANSWERS, recon_expected)
    if answers.get("exploit_ok"):
        exploit = sorted(exploit_expected) or ["none"]
    else:
        exploit = [_off_key(EXPLOIT_ANSWERS, exploit_expected)]

    receiver = sorted(truth.victim_ips)[0]
    delivery = list(answers.get("delivery", []))
    return {
        "attacker_ips": ";".join(sorted(truth.attacker_ips)),
        "victim_ips": ";".join(sorted(truth.victim_ips)),
        "recon": recon,
        "exploit": ";".join(exploit),
        "delivery": ";".join(delivery) if delivery else "none",
        "receiver_ips": ";".join(
            f"{label}={receiver}" for label in delivery if label != "none"
        ),
        "comments": answers.get("comments", ""),
    }


def plans_to_csv(
    plans: dict[str, list[GroupPlan]], truths_by_id: dict[str, GroundTruth]
) -> str:
    """Materialize per-condition group plans into the report CSV format."""
    rows = []
    for condition, group_plans in plans.items():
        for plan in group_plans:
            incidents: list[dict[str, str]] = []
            for scenario_id, answers in plan.matches.items():
                incidents.append(
                    _match_incident_fields(truths_by_id[scenario_id], answers)
                )
            while len(incidents) < plan.reports:
                incidents.append(_noise_incident(plan.group_id, len(incidents)))
            if len(incidents) > plan.reports:
                raise ValueError(
                    f"{plan.group_id}: {len(incidents)} incidents exceed "
                    f"planned {plan.reports}"
                )
            for index, fields in enumerate(incidents, start=1):
                rows.append(
                    {
                        "group_id": plan.group_id,
                        "condition": condition,
                        "submitted_at": "2026-03-02T13:00:00+00:00",
                        "incident_index": str(index),
                        **fields,
                    }
                )
    return reports_csv(rows)


def benchmark_plans(
    scenario_a: str, scenario_b: str
) -> dict[str, list[GroupPlan]]:
    """Two-condition evaluation dataset with known rates.

    Condition BADSOC: 32 groups, 73 reports (counts 7x1, 13x2, 9x3, 2x4,
    1x5); scenario_a reported by 10 groups, scenario_b by 9, both by 1,
    neither by 14. Condition GOODSOC: 31 groups, 89 reports (6x1, 5x2,
    11x3, 5x4, 4x5); 12 / 17 / 7 / 9 respectively. Investigation answers
    follow fixed per-group schedules so phase-correct counts are exact.
    """
    def a(recon_ok, exploit_ok, delivery):
        return {"recon_ok": recon_ok, "exploit_ok": exploit_ok, "delivery": delivery}

    b = a

    bad: list[GroupPlan] = []
    # b01..b07: one noise report each
    for i in range(1, 8):
        bad.append(GroupPlan(f"b{i:02d}", 1))
    # b08..b16: two reports, scenario_a reported
    a_delivery = {
        8: ["data exfiltration"], 9: ["data exfiltration"], 10: ["data exfiltration"],
        11: ["http requests", "lateral movement"], 12: ["http requests"],
        13: ["http requests"], 14: ["lateral movement"], 15: ["lateral movement"],
        16: ["lateral movement"],
    }
    for i in range(8, 17):
        bad.append(
            GroupPlan(
                f"b{i:02d}", 2,
                {scenario_a: a(recon_ok=i <= 14, exploit_ok=i <= 12,
                               delivery=a_delivery[i])},
            )
        )
    # b17..b20 (two reports) and b21..b24 (three): scenario_b reported
    b_delivery = {
        17: ["data exfiltration"], 18: ["http requests"], 19: ["none"],
        20: ["none"], 21: ["none"], 22: ["none"], 23: ["none"],
        24: ["denial of service"],
    }
    for i in range(17, 25):
        bad.append(
            GroupPlan(
                f"b{i:02d}", 2 if i <= 20 else 3,
                {scenario_b: b(recon_ok=i == 17, exploit_ok=True,
                               delivery=b_delivery[i])},
            )
        )
    # b25..b29: three noise reports; b30..b31: four noise reports
    for i in range(25, 30):
        bad.append(GroupPlan(f"b{i:02d}", 3))
    for i in range(30, 32):
        bad.append(GroupPlan(f"b{i:02d}", 4))
    # b32: five reports, found both scenarios
    bad.append(
        GroupPlan(
            "b32", 5,
            {
                scenario_a: a(recon_ok=False, exploit_ok=False, delivery=["none"]),
                scenario_b: b(recon_ok=False, exploit_ok=False,
                              delivery=["denial of service"]),
            },
        )
    )

    good: list[GroupPlan] = []
    for i in range(1, 7):
        good.append(GroupPlan(f"g{i:02d}", 1))
    # g07..g11: two reports, scenario_a with http+lateral
    for i in range(7, 12):
        good.append(
            GroupPlan(
                f"g{i:02d}", 2,
                {scenario_a: a(recon_ok=True, exploit_ok=True,
                               delivery=["http requests", "lateral movement"])},
            )
        )
    # g12..g21: three reports, scenario_b reported
    gb_delivery = {
        12: ["data exfiltration"], 13: ["http requests"], 14: ["data exfiltration"],
        **{i: ["none"] for i in range(15, 22)},
    }
    for i in range(12, 22):
        good.append(
            GroupPlan(
                f"g{i:02d}", 3,
                {scenario_b: b(recon_ok=i <= 15, exploit_ok=True,
                               delivery=gb_delivery[i])},
            )
        )
    # g22: three noise reports
    good.append(GroupPlan("g22", 3))
    # g23..g27 (four reports) and g28..g29 (five): both scenarios
    ga_delivery = {
        23: ["http requests"], 24: ["http requests"], 25: ["http requests"],
        26: ["none"], 27: ["none"], 28: ["enumerating smb shares"],
        29: ["enumerating smb shares"],
    }
    gb2_delivery = {
        23: ["none"], 24: ["none"], 25: ["none"], 26: ["none"], 27: ["none"],
        28: ["web server path traversal"], 29: ["web server path traversal"],
    }
    for i in range(23, 30):
        good.append(
            GroupPlan(
                f"g{i:02d}", 4 if i <= 27 else 5,
                {
                    scenario_a: a(recon_ok=i <= 26, exploit_ok=False,
                                  delivery=ga_delivery[i]),
                    scenario_b: b(recon_ok=False, exploit_ok=i <= 26,
                                  delivery=gb2_delivery[i]),
                },
            )
        )
    # g30..g31: five noise reports each
    for i in range(30, 32):
        good.append(GroupPlan(f"g{i:02d}", 5))

    return {"BADSOC": bad, "GOODSOC": good}


def benchmark_reports_csv(
    truth_a: GroundTruth, truth_b: GroundTruth
) -> str:
    """The two-condition dataset materialized against concrete ground truths.

    truth_a plays the noisy, easier-to-spot attack; truth_b the quieter one.
    Both must expect {data exfiltration, http requests} for delivery/control
    and 'port scan' for reconnaissance for the schedules to stay meaningful.
    """
    plans = benchmark_plans(truth_a.scenario_id, truth_b.scenario_id)
    return plans_to_csv(
        plans, {truth_a.scenario_id: truth_a, truth_b.scenario_id: truth_b}
    )
