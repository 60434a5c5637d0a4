"""Persistent, searchable library of attack traces.

A trace is a pcap blob annotated with the attack phase it reproduces, the
role each address plays, and the answers an analyst is expected to give.
Metadata lives in ``traces/<id>.json`` beside the verbatim ``traces/<id>.pcap``
so the library survives restarts and stays independent of any monitored
environment.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import re
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import IntEnum
from pathlib import Path

from .errors import (
    MalformedCapture,
    NoTraceForPhase,
    NotFound,
    RoleAddressAbsent,
    SchemaViolation,
    SocbenchError,
    TraceInUse,
)
from .pcap import Capture, read_capture
from .rewrite import collect_addresses

logger = logging.getLogger(__name__)

_ROLE_RE = re.compile(r"^(attacker|victim|cnc|other:[\w.-]+)$")

EXPECTED_ANSWER_KEYS = ("recon", "exploit", "delivery_control")

# questionnaire vocabularies; free-text answers are allowed alongside
RECON_ANSWERS = (
    "username enumeration",
    "port scan",
    "sip scan",
    "web application vulnerability scan",
    "none",
)
EXPLOIT_ANSWERS = (
    "sql injection",
    "weak credentials",
    "dns remote command execution",
    "poor web server configuration",
    "remote code execution",
    "none",
)
DELIVERY_ANSWERS = (
    "data exfiltration",
    "enumerating smb shares",
    "http requests",
    "denial of service",
    "web server path traversal",
    "ntp amplification",
    "lateral movement",
    "none",
)


class AttackPhase(IntEnum):
    """The four-phase taxonomy; ordinal order is the intended attack order."""

    RECONNAISSANCE = 1
    EXPLOITATION = 2
    DELIVERY = 3
    CONTROL = 4

    @classmethod
    def parse(cls, value) -> "AttackPhase":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "recon": cls.RECONNAISSANCE,
            "reconnaissance": cls.RECONNAISSANCE,
            "exploit": cls.EXPLOITATION,
            "exploitation": cls.EXPLOITATION,
            "delivery": cls.DELIVERY,
            "control": cls.CONTROL,
        }
        if key not in aliases:
            raise SchemaViolation(f"unknown attack phase: {value!r}")
        return aliases[key]

    @property
    def label(self) -> str:
        return self.name.lower()


def normalize_expected_answers(raw: dict | None) -> dict:
    """Validate and canonicalize an expected_answers mapping.

    ``recon`` and ``exploit`` map to a single label, ``delivery_control`` to
    a sorted list of labels. Labels are lowercased.
    """
    answers: dict = {}
    for key, value in (raw or {}).items():
        if key not in EXPECTED_ANSWER_KEYS:
            raise SchemaViolation(f"unknown expected-answer key: {key!r}")
        if key == "delivery_control":
            if isinstance(value, str):
                value = [value]
            answers[key] = sorted({str(v).strip().lower() for v in value if str(v).strip()})
        else:
            answers[key] = str(value).strip().lower()
    return answers


@dataclass(frozen=True)
class AttackTrace:
    """Stored capture plus the metadata that makes it gradeable."""

    id: str
    name: str
    phase: AttackPhase
    technique: str
    roles: dict[str, str]
    expected_answers: dict
    capture_ref: str
    packet_count: int
    duration: float
    created_at: str
    content_sha256: str = ""

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "phase": self.phase.label,
            "technique": self.technique,
            "roles": dict(self.roles),
            "expected_answers": self.expected_answers,
            "capture_ref": self.capture_ref,
            "packet_count": self.packet_count,
            "duration": self.duration,
            "created_at": self.created_at,
            "content_sha256": self.content_sha256,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "AttackTrace":
        try:
            return cls(
                id=raw["id"],
                name=raw["name"],
                phase=AttackPhase.parse(raw["phase"]),
                technique=raw["technique"],
                roles=dict(raw["roles"]),
                expected_answers=normalize_expected_answers(raw.get("expected_answers")),
                capture_ref=raw["capture_ref"],
                packet_count=int(raw["packet_count"]),
                duration=float(raw["duration"]),
                created_at=raw["created_at"],
                content_sha256=raw.get("content_sha256", ""),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolation(f"trace metadata invalid: {exc}") from exc


def _validate_roles(roles: dict[str, str]) -> dict[str, str]:
    cleaned = {str(k).strip(): str(v).strip() for k, v in roles.items()}
    for key in cleaned:
        if not _ROLE_RE.match(key):
            raise SchemaViolation(
                f"role {key!r} not in {{attacker, victim, cnc, other:<label>}}"
            )
    if not ({"attacker", "victim"} & cleaned.keys()):
        raise SchemaViolation("roles must include at least one of attacker/victim")
    return cleaned


class TraceLibrary:
    """On-disk trace store; ids are immutable once issued."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.traces_dir = self.root / "traces"
        self.traces_dir.mkdir(parents=True, exist_ok=True)

    # -- write side -----------------------------------------------------------

    def add_trace(
        self,
        capture_bytes: bytes,
        *,
        name: str,
        phase,
        technique: str = "",
        roles: dict[str, str],
        expected_answers: dict | None = None,
    ) -> AttackTrace:
        """Persist a capture with metadata; derived stats are computed here."""
        phase = AttackPhase.parse(phase)
        roles = _validate_roles(roles)
        answers = normalize_expected_answers(expected_answers)
        try:
            capture = read_capture(capture_bytes)
        except SocbenchError as exc:
            raise MalformedCapture(str(exc)) from exc

        present = collect_addresses(capture)
        for role, address in roles.items():
            if address not in present:
                raise RoleAddressAbsent(
                    f"role {role}={address} never appears in the capture"
                )

        trace_id = uuid.uuid4().hex[:12]
        digest = hashlib.sha256(capture_bytes).hexdigest()
        duplicates = [t.id for t in self.list_traces() if t.content_sha256 == digest]
        if duplicates:
            logger.warning(
                "capture content of new trace %s duplicates existing trace(s) %s",
                trace_id,
                ", ".join(duplicates),
            )

        trace = AttackTrace(
            id=trace_id,
            name=str(name),
            phase=phase,
            technique=str(technique),
            roles=roles,
            expected_answers=answers,
            capture_ref=f"traces/{trace_id}.pcap",
            packet_count=len(capture.packets),
            duration=capture.duration_seconds,
            created_at=datetime.now(timezone.utc).isoformat(),
            content_sha256=digest,
        )
        (self.traces_dir / f"{trace_id}.pcap").write_bytes(capture_bytes)
        (self.traces_dir / f"{trace_id}.json").write_text(
            json.dumps(trace.to_json(), indent=2) + "\n"
        )
        return trace

    def remove_trace(self, trace_id: str) -> None:
        """Delete a trace unless a stored scenario still references it."""
        self.get_trace(trace_id)
        holders = self._referencing_scenarios(trace_id)
        if holders:
            raise TraceInUse(
                f"trace {trace_id} referenced by scenario(s): {', '.join(holders)}"
            )
        (self.traces_dir / f"{trace_id}.json").unlink()
        (self.traces_dir / f"{trace_id}.pcap").unlink(missing_ok=True)

    # -- read side ------------------------------------------------------------

    def get_trace(self, trace_id: str) -> AttackTrace:
        path = self.traces_dir / f"{trace_id}.json"
        if not path.is_file():
            raise NotFound(f"trace {trace_id} not found")
        return AttackTrace.from_json(json.loads(path.read_text()))

    def list_traces(self, phase=None, query: str | None = None) -> list[AttackTrace]:
        """All traces, sorted by name; filtered by phase and/or text query."""
        phase = AttackPhase.parse(phase) if phase is not None else None
        needle = query.strip().lower() if query else None
        traces = []
        for path in sorted(self.traces_dir.glob("*.json")):
            trace = AttackTrace.from_json(json.loads(path.read_text()))
            if phase is not None and trace.phase is not phase:
                continue
            if needle and needle not in trace.name.lower() and needle not in trace.technique.lower():
                continue
            traces.append(trace)
        traces.sort(key=lambda t: (t.name, t.id))
        return traces

    def pick_random(self, phase, seed: int | None = None) -> AttackTrace:
        """Uniform pick among traces of a phase; deterministic given a seed."""
        matching = self.list_traces(phase=phase)
        if not matching:
            raise NoTraceForPhase(f"no trace stored for phase {AttackPhase.parse(phase).label}")
        rng = random.Random(seed)
        return rng.choice(sorted(matching, key=lambda t: t.id))

    def duplicates_of(self, trace_id: str) -> list[str]:
        """Other trace ids storing byte-identical capture content."""
        me = self.get_trace(trace_id)
        return [
            t.id
            for t in self.list_traces()
            if t.id != trace_id and t.content_sha256 == me.content_sha256
        ]

    def load_capture_bytes(self, trace_id: str) -> bytes:
        self.get_trace(trace_id)
        return (self.traces_dir / f"{trace_id}.pcap").read_bytes()

    def load_capture(self, trace_id: str) -> Capture:
        return read_capture(self.load_capture_bytes(trace_id))

    # -- cross-store checks ----------------------------------------------------

    def _referencing_scenarios(self, trace_id: str) -> list[str]:
        scenarios_dir = self.root / "scenarios"
        holders = []
        if scenarios_dir.is_dir():
            for path in sorted(scenarios_dir.glob("*.json")):
                try:
                    raw = json.loads(path.read_text())
                except json.JSONDecodeError:
                    continue
                blocks = raw.get("blocks", [])
                if any(b.get("trace_id") == trace_id for b in blocks if isinstance(b, dict)):
                    holders.append(raw.get("id", path.stem))
        return holders
