"""Compose parameterized trace blocks into a ready-to-inject attack.

A scenario is an ordered list of blocks, each naming a stored trace plus a
time offset, playback speed, and address map. Assembly rewrites every
block's capture into the target environment, rebases it in time, merges all
blocks into one capture, and extracts the ground truth analysts will be
graded against.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import (
    ConflictingRoles,
    GroundTruthIncomplete,
    NotFound,
    SchemaViolation,
    UnknownTrace,
)
from .library import AttackPhase, TraceLibrary
from .pcap import Capture, merge, transform_time
from .rewrite import AddressMap, rewrite_addresses


@dataclass(frozen=True)
class AttackBlock:
    trace_id: str
    offset_s: float = 0.0
    speed: float = 1.0
    address_map: AddressMap = field(default_factory=AddressMap)

    def __post_init__(self) -> None:
        if self.offset_s < 0:
            raise SchemaViolation(f"block offset must be >= 0, got {self.offset_s}")
        if self.speed <= 0:
            raise SchemaViolation(f"block speed must be > 0, got {self.speed}")

    def to_json(self) -> dict:
        return {
            "trace_id": self.trace_id,
            "offset_s": self.offset_s,
            "speed": self.speed,
            "address_map": self.address_map.to_pairs(),
        }

    @classmethod
    def from_json(cls, raw: dict) -> "AttackBlock":
        try:
            pairs = [(e["from"], e["to"]) for e in raw.get("address_map", [])]
            return cls(
                trace_id=str(raw["trace_id"]),
                offset_s=float(raw.get("offset_s", 0.0)),
                speed=float(raw.get("speed", 1.0)),
                address_map=AddressMap.from_pairs(pairs),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolation(f"block invalid: {exc}") from exc


@dataclass(frozen=True)
class AttackScenario:
    """Ordered plan of blocks; list order is the narrative order."""

    id: str
    name: str
    blocks: tuple[AttackBlock, ...]
    background_ref: str | None = None
    notes: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.blocks:
            raise SchemaViolation("scenario needs at least one block")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "blocks": [b.to_json() for b in self.blocks],
            "background_ref": self.background_ref,
            "notes": self.notes,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "AttackScenario":
        if not isinstance(raw, dict):
            raise SchemaViolation("scenario document must be a JSON object")
        missing = {"id", "name", "blocks"} - raw.keys()
        if missing:
            raise SchemaViolation(f"scenario missing fields: {sorted(missing)}")
        blocks = raw["blocks"]
        if not isinstance(blocks, list) or not blocks:
            raise SchemaViolation("scenario blocks must be a nonempty list")
        return cls(
            id=str(raw["id"]),
            name=str(raw["name"]),
            blocks=tuple(AttackBlock.from_json(b) for b in blocks),
            background_ref=raw.get("background_ref"),
            notes=str(raw.get("notes", "")),
        )


@dataclass(frozen=True)
class TimelineEntry:
    phase: AttackPhase
    technique: str
    start: float
    end: float

    def to_json(self) -> dict:
        return {
            "phase": self.phase.label,
            "technique": self.technique,
            "start_s": self.start,
            "end_s": self.end,
        }


@dataclass(frozen=True)
class GroundTruth:
    """Answer key extracted from a parameterized scenario."""

    scenario_id: str
    attacker_ips: frozenset[str]
    victim_ips: frozenset[str]
    expected: dict
    timeline: tuple[TimelineEntry, ...]

    def to_json(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "attacker_ips": sorted(self.attacker_ips),
            "victim_ips": sorted(self.victim_ips),
            "expected": {
                "recon": sorted(self.expected.get("recon", [])),
                "exploit": sorted(self.expected.get("exploit", [])),
                "delivery_control": sorted(self.expected.get("delivery_control", [])),
            },
            "timeline": [entry.to_json() for entry in self.timeline],
        }

    @classmethod
    def from_json(cls, raw: dict) -> "GroundTruth":
        try:
            expected = {
                key: set(values)
                for key, values in raw.get("expected", {}).items()
            }
            timeline = tuple(
                TimelineEntry(
                    phase=AttackPhase.parse(e["phase"]),
                    technique=e.get("technique", ""),
                    start=float(e["start_s"]),
                    end=float(e["end_s"]),
                )
                for e in raw.get("timeline", [])
            )
            return cls(
                scenario_id=str(raw["scenario_id"]),
                attacker_ips=frozenset(raw["attacker_ips"]),
                victim_ips=frozenset(raw["victim_ips"]),
                expected=expected,
                timeline=timeline,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolation(f"ground truth invalid: {exc}") from exc


@dataclass(frozen=True)
class AssembledAttack:
    capture: Capture
    ground_truth: GroundTruth
    assembled_at: str


@dataclass(frozen=True)
class ValidationNote:
    kind: str  # PhaseOrderWarning | OverlapNote
    message: str


def _block_interval(block: AttackBlock, duration: float) -> tuple[float, float]:
    return block.offset_s, block.offset_s + duration / block.speed


def validate_scenario(
    scenario: AttackScenario, library: TraceLibrary
) -> list[ValidationNote]:
    """Warn about phase-order violations and overlapping blocks; never fails.

    Red-team authors may deviate from the canonical phase order on purpose,
    so both findings are advisory.
    """
    notes: list[ValidationNote] = []
    resolved = []
    for block in scenario.blocks:
        try:
            trace = library.get_trace(block.trace_id)
        except NotFound as exc:
            raise UnknownTrace(str(exc)) from exc
        resolved.append((block, trace))

    for i, (block_a, trace_a) in enumerate(resolved):
        for block_b, trace_b in resolved[i + 1:]:
            if (
                trace_a.phase != trace_b.phase
                and (trace_a.phase < trace_b.phase) != (block_a.offset_s < block_b.offset_s)
                and block_a.offset_s != block_b.offset_s
            ):
                earlier, later = (
                    (trace_b, trace_a)
                    if block_b.offset_s < block_a.offset_s
                    else (trace_a, trace_b)
                )
                notes.append(
                    ValidationNote(
                        "PhaseOrderWarning",
                        f"{earlier.phase.label} block ({earlier.name}) starts before "
                        f"{later.phase.label} block ({later.name}) despite later phase",
                    )
                )
    for i, (block_a, trace_a) in enumerate(resolved):
        start_a, end_a = _block_interval(block_a, trace_a.duration)
        for block_b, trace_b in resolved[i + 1:]:
            start_b, end_b = _block_interval(block_b, trace_b.duration)
            if max(start_a, start_b) < min(end_a, end_b):
                notes.append(
                    ValidationNote(
                        "OverlapNote",
                        f"blocks '{trace_a.name}' [{start_a:g},{end_a:g}]s and "
                        f"'{trace_b.name}' [{start_b:g},{end_b:g}]s overlap in time",
                    )
                )
    return notes


def extract_ground_truth(
    scenario: AttackScenario, library: TraceLibrary
) -> GroundTruth:
    """Aggregate mapped role addresses and expected answers across blocks.

    Role addresses pass through each block's address map before aggregation;
    expected answers are unioned per question. Only attacker/victim roles
    feed the identification sets (cnc and other:* roles are trace metadata).
    """
    attacker: set[str] = set()
    victim: set[str] = set()
    expected: dict[str, set[str]] = {"recon": set(), "exploit": set(), "delivery_control": set()}
    timeline: list[TimelineEntry] = []

    for block in scenario.blocks:
        try:
            trace = library.get_trace(block.trace_id)
        except NotFound as exc:
            raise UnknownTrace(str(exc)) from exc
        for role, address in trace.roles.items():
            mapped = block.address_map.translate(address)
            if role == "attacker":
                attacker.add(mapped)
            elif role == "victim":
                victim.add(mapped)
        answers = trace.expected_answers
        if "recon" in answers:
            expected["recon"].add(answers["recon"])
        if "exploit" in answers:
            expected["exploit"].add(answers["exploit"])
        expected["delivery_control"].update(answers.get("delivery_control", []))
        start, end = _block_interval(block, trace.duration)
        timeline.append(TimelineEntry(trace.phase, trace.technique, start, end))

    clash = attacker & victim
    if clash:
        raise ConflictingRoles(
            f"address(es) mapped to both attacker and victim: {sorted(clash)}"
        )
    if not attacker or not victim:
        raise GroundTruthIncomplete(
            "scenario must yield at least one attacker and one victim address"
        )
    timeline.sort(key=lambda entry: entry.start)
    return GroundTruth(
        scenario_id=scenario.id,
        attacker_ips=frozenset(attacker),
        victim_ips=frozenset(victim),
        expected=expected,
        timeline=tuple(timeline),
    )


def assemble(scenario: AttackScenario, library: TraceLibrary) -> AssembledAttack:
    """Rewrite, rebase, and merge every block; extract the ground truth.

    Deterministic: the same scenario over the same library state yields a
    byte-identical capture and identical ground truth.
    """
    ground_truth = extract_ground_truth(scenario, library)
    parts: list[Capture] = []
    for block in scenario.blocks:
        capture = library.load_capture(block.trace_id)
        rewritten, _ = rewrite_addresses(capture, block.address_map)
        parts.append(transform_time(rewritten, block.offset_s, block.speed))
    combined = merge(parts)
    return AssembledAttack(
        capture=combined,
        ground_truth=ground_truth,
        assembled_at=datetime.now(timezone.utc).isoformat(),
    )


class ScenarioStore:
    """JSON persistence for scenarios under ``scenarios/<id>.json``."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.scenarios_dir = self.root / "scenarios"
        self.scenarios_dir.mkdir(parents=True, exist_ok=True)

    def save_scenario(self, scenario: AttackScenario) -> str:
        if not scenario.id:
            scenario = AttackScenario(
                id=uuid.uuid4().hex[:12],
                name=scenario.name,
                blocks=scenario.blocks,
                background_ref=scenario.background_ref,
                notes=scenario.notes,
            )
        path = self.scenarios_dir / f"{scenario.id}.json"
        path.write_text(json.dumps(scenario.to_json(), indent=2) + "\n")
        return scenario.id

    def load_scenario(self, scenario_id: str) -> AttackScenario:
        path = self.scenarios_dir / f"{scenario_id}.json"
        if not path.is_file():
            raise NotFound(f"scenario {scenario_id} not found")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"scenario {scenario_id}: invalid JSON: {exc}") from exc
        return AttackScenario.from_json(raw)

    def list_scenarios(self) -> list[AttackScenario]:
        scenarios = []
        for path in sorted(self.scenarios_dir.glob("*.json")):
            try:
                scenarios.append(AttackScenario.from_json(json.loads(path.read_text())))
            except (SchemaViolation, json.JSONDecodeError):
                continue
        scenarios.sort(key=lambda s: (s.name, s.id))
        return scenarios

    def delete_scenario(self, scenario_id: str) -> None:
        path = self.scenarios_dir / f"{scenario_id}.json"
        if not path.is_file():
            raise NotFound(f"scenario {scenario_id} not found")
        path.unlink()

    def references_trace(self, trace_id: str) -> bool:
        return any(
            any(block.trace_id == trace_id for block in scenario.blocks)
            for scenario in self.list_scenarios()
        )
