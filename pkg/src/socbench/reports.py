"""Parse analyst report CSVs, attribute incidents to scenarios, grade them.

Attribution uses the perfect-IP-match rule: an incident belongs to a
scenario iff at least one of the scenario's attacker IPs and one of its
victim IPs appear verbatim (after trimming) in the respective fields.
Grading relies solely on the multiple-choice answers; the free-text comment
field never affects scores.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Sequence

from .builder import GroundTruth
from .errors import EmptyFile, SchemaViolation, UnknownCondition, UnmatchedIncident

REPORT_CSV_COLUMNS = (
    "group_id",
    "condition",
    "submitted_at",
    "incident_index",
    "attacker_ips",
    "victim_ips",
    "recon",
    "exploit",
    "delivery",
    "receiver_ips",
    "comments",
)

DELIVERY_ANSWER_CAP = 2
INCIDENT_CAP = 5


class _Ambiguous:
    """Sentinel: incident matches more than one scenario."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "AMBIGUOUS"


AMBIGUOUS = _Ambiguous()


@dataclass
class IncidentReport:
    attacker_ips: list[str] = field(default_factory=list)
    victim_ips: list[str] = field(default_factory=list)
    recon_answer: str = ""
    exploit_answers: set[str] = field(default_factory=set)
    delivery_answers: set[str] = field(default_factory=set)
    receiver_ips: dict[str, str] = field(default_factory=dict)
    comments: str = ""
    incident_index: int = 0

    def to_json(self) -> dict:
        return {
            "incident_index": self.incident_index,
            "attacker_ips": list(self.attacker_ips),
            "victim_ips": list(self.victim_ips),
            "recon": self.recon_answer,
            "exploit": sorted(self.exploit_answers),
            "delivery": sorted(self.delivery_answers),
            "receiver_ips": dict(self.receiver_ips),
            "comments": self.comments,
        }


@dataclass
class AnalystReport:
    group_id: str
    condition: str
    submitted_at: str
    incidents: list[IncidentReport]

    def to_json(self) -> dict:
        return {
            "group_id": self.group_id,
            "condition": self.condition,
            "submitted_at": self.submitted_at,
            "incidents": [i.to_json() for i in self.incidents],
        }


@dataclass(frozen=True)
class IncidentScore:
    matched_scenario: object  # scenario id, None, or AMBIGUOUS
    attacker_correct: bool = False
    victim_correct: bool = False
    recon_correct: bool = False
    exploit_correct: bool = False
    delivery_hits: int = 0

    def __post_init__(self) -> None:
        if self.matched_scenario is None or self.matched_scenario is AMBIGUOUS:
            if any(
                (self.attacker_correct, self.victim_correct,
                 self.recon_correct, self.exploit_correct)
            ) or self.delivery_hits:
                raise ValueError("unmatched incidents must score all-false")
        if self.delivery_hits not in (0, 1, 2):
            raise ValueError("delivery_hits must be 0, 1 or 2")

    def to_json(self) -> dict:
        matched = self.matched_scenario
        if matched is AMBIGUOUS:
            matched = "ambiguous"
        return {
            "matched_scenario": matched,
            "attacker_correct": self.attacker_correct,
            "victim_correct": self.victim_correct,
            "recon_correct": self.recon_correct,
            "exploit_correct": self.exploit_correct,
            "delivery_hits": self.delivery_hits,
        }


@dataclass(frozen=True)
class CleaningEntry:
    kind: str
    group_id: str
    detail: str

    def to_json(self) -> dict:
        return {"kind": self.kind, "group_id": self.group_id, "detail": self.detail}


@dataclass
class CleaningLog:
    entries: list[CleaningEntry] = field(default_factory=list)

    def add(self, kind: str, group_id: str, detail: str) -> None:
        self.entries.append(CleaningEntry(kind, group_id, detail))

    def kinds(self) -> list[str]:
        return [entry.kind for entry in self.entries]

    def to_json(self) -> list[dict]:
        return [entry.to_json() for entry in self.entries]


# -- parsing -------------------------------------------------------------------

def _split_ips(cell: str) -> list[str]:
    values = []
    for chunk in cell.replace("\r", "\n").replace(";", "\n").split("\n"):
        item = chunk.strip()
        if not item or item.upper() == "NA":
            continue
        values.append(item)
    return values


def _split_labels(cell: str) -> list[str]:
    return [part.strip().lower() for part in cell.split(";") if part.strip()]


def _parse_receivers(cell: str) -> dict[str, str]:
    receivers = {}
    for pair in cell.split(";"):
        if "=" in pair:
            label, address = pair.split("=", 1)
            if label.strip():
                receivers[label.strip().lower()] = address.strip()
    return receivers


def _row_incident(row: dict, position: int) -> IncidentReport:
    raw_index = (row.get("incident_index") or "").strip()
    try:
        index = int(raw_index) if raw_index else position
    except ValueError:
        index = position
    return IncidentReport(
        attacker_ips=_split_ips(row.get("attacker_ips") or ""),
        victim_ips=_split_ips(row.get("victim_ips") or ""),
        recon_answer=(row.get("recon") or "").strip().lower(),
        exploit_answers=set(_split_labels(row.get("exploit") or "")),
        delivery_answers=set(_split_labels(row.get("delivery") or "")),
        receiver_ips=_parse_receivers(row.get("receiver_ips") or ""),
        comments=row.get("comments") or "",
        incident_index=index,
    )


def parse_reports(
    csv_data: bytes | str, truths: Sequence[GroundTruth] | None = None
) -> tuple[list[AnalystReport], CleaningLog]:
    """Decode the report CSV into one merged report per group.

    Duplicate submissions from one group are merged field-by-field: with
    ``truths`` supplied the better-scoring answer wins, otherwise the later
    submission's; the first submission's timestamp is kept either way. Every
    merge and questionnaire-constraint violation lands in the CleaningLog.
    """
    text = csv_data.decode("utf-8-sig") if isinstance(csv_data, bytes) else csv_data
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise EmptyFile("no header row")
    missing = set(REPORT_CSV_COLUMNS) - set(reader.fieldnames)
    if missing:
        raise SchemaViolation(f"missing required column(s): {sorted(missing)}")

    log = CleaningLog()
    # (group_id, submitted_at) -> submission accumulator
    submissions: dict[tuple[str, str], dict] = {}
    order: list[tuple[str, str]] = []
    rows = 0
    for row in reader:
        rows += 1
        group_id = (row.get("group_id") or "").strip()
        if not group_id:
            raise SchemaViolation(f"row {rows}: empty group_id")
        submitted_at = (row.get("submitted_at") or "").strip()
        key = (group_id, submitted_at)
        if key not in submissions:
            submissions[key] = {
                "condition": (row.get("condition") or "").strip(),
                "incidents": [],
            }
            order.append(key)
        bucket = submissions[key]
        incident = _row_incident(row, len(bucket["incidents"]) + 1)
        if len(incident.delivery_answers) > DELIVERY_ANSWER_CAP:
            log.add(
                "delivery_cap_exceeded",
                group_id,
                f"{len(incident.delivery_answers)} delivery answers "
                f"(cap {DELIVERY_ANSWER_CAP}); retained",
            )
        bucket["incidents"].append(incident)
    if rows == 0:
        raise EmptyFile("no data rows")

    by_group: dict[str, list[tuple[str, dict]]] = {}
    group_order: list[str] = []
    for group_id, submitted_at in order:
        if group_id not in by_group:
            by_group[group_id] = []
            group_order.append(group_id)
        by_group[group_id].append((submitted_at, submissions[(group_id, submitted_at)]))

    reports = []
    for group_id in group_order:
        entries = sorted(by_group[group_id], key=lambda item: _sort_stamp(item[0]))
        first_at, first = entries[0]
        merged = first["incidents"]
        for later_at, later in entries[1:]:
            log.add(
                "merged_duplicate_submission",
                group_id,
                f"submissions {first_at!r} and {later_at!r} merged; "
                "first timestamp kept",
            )
            merged = _merge_incidentlists(merged, later["incidents"], truths)
        if len(merged) > INCIDENT_CAP:
            log.add(
                "incident_cap_exceeded",
                group_id,
                f"{len(merged)} incidents (cap {INCIDENT_CAP}); retained",
            )
        reports.append(
            AnalystReport(
                group_id=group_id,
                condition=first["condition"],
                submitted_at=first_at,
                incidents=sorted(merged, key=lambda i: i.incident_index),
            )
        )
    return reports, log


def _sort_stamp(value: str):
    try:
        return (0, datetime.fromisoformat(value))
    except ValueError:
        return (1, value)


def _merge_incidentfields(
    earlier: IncidentReport,
    later: IncidentReport,
    truths: Sequence[GroundTruth] | None,
) -> IncidentReport:
    """Field-level merge; the later submission wins ties and ungradeables."""
    truth = None
    if truths:
        for candidate in (later, earlier):
            matched = match_incident(candidate, truths)
            if isinstance(matched, str):
                truth = next(t for t in truths if t.scenario_id == matched)
                break

    def pick(field_name: str, score) -> object:
        a, b = getattr(earlier, field_name), getattr(later, field_name)
        if truth is None:
            return b
        return a if score(a) > score(b) else b

    if truth is None:
        chosen = later
        return IncidentReport(
            attacker_ips=list(chosen.attacker_ips),
            victim_ips=list(chosen.victim_ips),
            recon_answer=chosen.recon_answer,
            exploit_answers=set(chosen.exploit_answers),
            delivery_answers=set(chosen.delivery_answers),
            receiver_ips=dict(chosen.receiver_ips),
            comments=chosen.comments or earlier.comments,
            incident_index=earlier.incident_index,
        )

    expected = truth.expected
    return IncidentReport(
        attacker_ips=list(
            pick("attacker_ips", lambda v: len(set(v) & truth.attacker_ips))
        ),
        victim_ips=list(pick("victim_ips", lambda v: len(set(v) & truth.victim_ips))),
        recon_answer=pick(
            "recon_answer", lambda v: int(v in expected.get("recon", set()))
        ),
        exploit_answers=set(
            pick(
                "exploit_answers",
                lambda v: len(set(v) & expected.get("exploit", set())),
            )
        ),
        delivery_answers=set(
            pick(
                "delivery_answers",
                lambda v: len(set(v) & expected.get("delivery_control", set())),
            )
        ),
        receiver_ips={**earlier.receiver_ips, **later.receiver_ips},
        comments=later.comments or earlier.comments,
        incident_index=earlier.incident_index,
    )


def _merge_incidentlists(
    first: list[IncidentReport],
    second: list[IncidentReport],
    truths: Sequence[GroundTruth] | None,
) -> list[IncidentReport]:
    by_index = {incident.incident_index: incident for incident in first}
    for incident in second:
        if incident.incident_index in by_index:
            by_index[incident.incident_index] = _merge_incidentfields(
                by_index[incident.incident_index], incident, truths
            )
        else:
            by_index[incident.incident_index] = incident
    return [by_index[index] for index in sorted(by_index)]


# -- matching and scoring --------------------------------------------------------

def match_incident(
    incident: IncidentReport, truths: Sequence[GroundTruth]
) -> object:
    """Perfect-match attribution: scenario id, None, or AMBIGUOUS.

    Literal string equality after trimming; no fuzzy matching, no
    normalization of unusual spellings.
    """
    if not truths:
        raise ValueError("match_incident requires at least one ground truth")
    attacker = {ip.strip() for ip in incident.attacker_ips}
    victim = {ip.strip() for ip in incident.victim_ips}
    matches = [
        truth.scenario_id
        for truth in truths
        if attacker & truth.attacker_ips and victim & truth.victim_ips
    ]
    if not matches:
        return None
    if len(matches) > 1:
        return AMBIGUOUS
    return matches[0]


def score_incident(incident: IncidentReport, truth: GroundTruth) -> IncidentScore:
    """Grade one matched incident against a scenario's answer key."""
    attacker_hit = bool(set(incident.attacker_ips) & truth.attacker_ips)
    victim_hit = bool(set(incident.victim_ips) & truth.victim_ips)
    if not (attacker_hit and victim_hit):
        raise UnmatchedIncident(
            f"incident does not match scenario {truth.scenario_id}"
        )
    expected = truth.expected
    recon_expected = {label.lower() for label in expected.get("recon", set())}
    exploit_expected = {label.lower() for label in expected.get("exploit", set())}
    delivery_expected = {
        label.lower() for label in expected.get("delivery_control", set())
    }
    hits = len(incident.delivery_answers & delivery_expected)
    return IncidentScore(
        matched_scenario=truth.scenario_id,
        attacker_correct=True,
        victim_correct=True,
        recon_correct=incident.recon_answer in recon_expected,
        exploit_correct=bool(incident.exploit_answers & exploit_expected),
        delivery_hits=min(hits, 2),
    )


@dataclass(frozen=True)
class GradedIncident:
    incident_index: int
    score: IncidentScore

    def to_json(self) -> dict:
        return {"incident_index": self.incident_index, **self.score.to_json()}


@dataclass(frozen=True)
class GradedReport:
    group_id: str
    condition: str
    incidents: tuple[GradedIncident, ...]

    def to_json(self) -> dict:
        return {
            "group_id": self.group_id,
            "condition": self.condition,
            "incidents": [i.to_json() for i in self.incidents],
        }


def grade_reports(
    reports: Sequence[AnalystReport],
    truths: Sequence[GroundTruth],
    cleaning: CleaningLog | None = None,
) -> list[GradedReport]:
    """Match and score every incident; ambiguous matches are logged."""
    graded = []
    for report in reports:
        results = []
        for incident in report.incidents:
            matched = match_incident(incident, truths)
            if isinstance(matched, str):
                truth = next(t for t in truths if t.scenario_id == matched)
                score = score_incident(incident, truth)
            else:
                if matched is AMBIGUOUS and cleaning is not None:
                    cleaning.add(
                        "ambiguous_match",
                        report.group_id,
                        f"incident {incident.incident_index} matches multiple "
                        "scenarios; excluded from per-scenario counts",
                    )
                score = IncidentScore(matched_scenario=matched)
            results.append(GradedIncident(incident.incident_index, score))
        graded.append(
            GradedReport(
                group_id=report.group_id,
                condition=report.condition,
                incidents=tuple(results),
            )
        )
    return graded


def scores_to_csv(graded: Sequence[GradedReport]) -> str:
    """Flat one-row-per-incident CSV of the grading outcome."""
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(
        (
            "group_id",
            "condition",
            "incident_index",
            "matched_scenario",
            "attacker_correct",
            "victim_correct",
            "recon_correct",
            "exploit_correct",
            "delivery_hits",
        )
    )
    for report in graded:
        for item in report.incidents:
            score = item.score
            matched = score.matched_scenario
            if matched is AMBIGUOUS:
                matched = "ambiguous"
            elif matched is None:
                matched = ""
            writer.writerow(
                (
                    report.group_id,
                    report.condition,
                    item.incident_index,
                    matched,
                    score.attacker_correct,
                    score.victim_correct,
                    score.recon_correct,
                    score.exploit_correct,
                    score.delivery_hits,
                )
            )
    return buffer.getvalue()


# -- aggregation --------------------------------------------------------------

@dataclass(frozen=True)
class PhaseCorrectCounts:
    """Per-scenario Table-5 cell inputs: groups correct per phase."""

    reporting_groups: int
    recon: int
    exploit: int
    delivery_any: int
    delivery_both: int
    delivery_labels: dict[str, int]

    def to_json(self) -> dict:
        return {
            "reporting_groups": self.reporting_groups,
            "recon_correct": self.recon,
            "exploit_correct": self.exploit,
            "delivery_at_least_one": self.delivery_any,
            "delivery_both": self.delivery_both,
            "delivery_label_selections": dict(sorted(self.delivery_labels.items())),
        }


@dataclass(frozen=True)
class ConditionSummary:
    condition: str
    groups: int
    reports_total: int
    per_group_report_counts: tuple[int, ...]
    scenario_groups: dict[str, int]
    both_count: int
    none_count: int
    phase_correct: dict[str, PhaseCorrectCounts]

    def to_json(self) -> dict:
        return {
            "condition": self.condition,
            "groups": self.groups,
            "reports_total": self.reports_total,
            "per_group_report_counts": list(self.per_group_report_counts),
            "scenario_groups": dict(sorted(self.scenario_groups.items())),
            "both_count": self.both_count,
            "none_count": self.none_count,
            "phase_correct": {
                sid: counts.to_json()
                for sid, counts in sorted(self.phase_correct.items())
            },
        }

    @classmethod
    def from_json(cls, raw: dict) -> "ConditionSummary":
        try:
            phase_correct = {
                sid: PhaseCorrectCounts(
                    reporting_groups=int(p["reporting_groups"]),
                    recon=int(p["recon_correct"]),
                    exploit=int(p["exploit_correct"]),
                    delivery_any=int(p["delivery_at_least_one"]),
                    delivery_both=int(p["delivery_both"]),
                    delivery_labels=dict(p.get("delivery_label_selections", {})),
                )
                for sid, p in raw.get("phase_correct", {}).items()
            }
            return cls(
                condition=str(raw["condition"]),
                groups=int(raw["groups"]),
                reports_total=int(raw["reports_total"]),
                per_group_report_counts=tuple(
                    int(v) for v in raw["per_group_report_counts"]
                ),
                scenario_groups={
                    str(k): int(v) for k, v in raw.get("scenario_groups", {}).items()
                },
                both_count=int(raw.get("both_count", 0)),
                none_count=int(raw.get("none_count", 0)),
                phase_correct=phase_correct,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolation(f"condition summary invalid: {exc}") from exc


def aggregate(
    reports: Sequence[AnalystReport],
    truths: Sequence[GroundTruth],
    condition_labels: Sequence[str],
    cleaning: CleaningLog | None = None,
) -> list[ConditionSummary]:
    """Per-condition counts sufficient to rebuild the detection and
    investigation grids.

    A group counts as "reported scenario S" iff at least one of its
    incidents matches S; several matching incidents still count once. Phase
    correctness takes the best matching incident per group.
    """
    known = list(condition_labels)
    for report in reports:
        if report.condition not in known:
            raise UnknownCondition(
                f"group {report.group_id} carries unknown condition "
                f"{report.condition!r} (expected one of {known})"
            )

    summaries = []
    for condition in known:
        members = sorted(
            (r for r in reports if r.condition == condition),
            key=lambda r: r.group_id,
        )
        graded = grade_reports(members, truths, cleaning)
        per_group_counts = tuple(len(r.incidents) for r in members)

        scenario_groups: dict[str, int] = {t.scenario_id: 0 for t in truths}
        phase_inputs: dict[str, dict] = {
            t.scenario_id: {
                "recon": 0, "exploit": 0, "delivery_any": 0, "delivery_both": 0,
                "labels": {},
            }
            for t in truths
        }
        both = none = 0
        for report, graded_report in zip(members, graded):
            matched_ids = {
                item.score.matched_scenario
                for item in graded_report.incidents
                if isinstance(item.score.matched_scenario, str)
            }
            if not matched_ids:
                none += 1
            if len(truths) > 1 and len(matched_ids) == len(truths):
                both += 1
            for sid in matched_ids:
                scenario_groups[sid] += 1
                items = [
                    (item, incident)
                    for item, incident in zip(graded_report.incidents, report.incidents)
                    if item.score.matched_scenario == sid
                ]
                bucket = phase_inputs[sid]
                if any(item.score.recon_correct for item, _ in items):
                    bucket["recon"] += 1
                if any(item.score.exploit_correct for item, _ in items):
                    bucket["exploit"] += 1
                best_hits = max(item.score.delivery_hits for item, _ in items)
                if best_hits >= 1:
                    bucket["delivery_any"] += 1
                if best_hits >= 2:
                    bucket["delivery_both"] += 1
                labels = set()
                for _, incident in items:
                    labels.update(incident.delivery_answers)
                for label in labels:
                    bucket["labels"][label] = bucket["labels"].get(label, 0) + 1

        summaries.append(
            ConditionSummary(
                condition=condition,
                groups=len(members),
                reports_total=sum(per_group_counts),
                per_group_report_counts=per_group_counts,
                scenario_groups=scenario_groups,
                both_count=both,
                none_count=none,
                phase_correct={
                    sid: PhaseCorrectCounts(
                        reporting_groups=scenario_groups[sid],
                        recon=data["recon"],
                        exploit=data["exploit"],
                        delivery_any=data["delivery_any"],
                        delivery_both=data["delivery_both"],
                        delivery_labels=data["labels"],
                    )
                    for sid, data in phase_inputs.items()
                },
            )
        )
    return summaries
