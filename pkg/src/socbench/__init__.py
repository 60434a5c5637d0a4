"""socbench: benchmark security monitoring with synthetic attack injection.

Workflow: store annotated attack traces, compose them into timed scenarios,
assemble ready-to-inject captures with ground truth, replay them into a
sink, then grade analyst report CSVs against the ground truth and compare
conditions statistically.
"""

from . import errors
from .builder import (
    AssembledAttack,
    AttackBlock,
    AttackScenario,
    GroundTruth,
    ScenarioStore,
    assemble,
    extract_ground_truth,
    validate_scenario,
)
from .injector import CallbackSink, DiscardSink, FileSink, InjectionSession, Injector, InterfaceSink
from .library import AttackPhase, AttackTrace, TraceLibrary
from .pcap import Capture, PacketRecord, TsResolution, merge, read_capture, transform_time, write_capture
from .reports import (
    AMBIGUOUS,
    AnalystReport,
    CleaningLog,
    ConditionSummary,
    IncidentReport,
    IncidentScore,
    aggregate,
    grade_reports,
    match_incident,
    parse_reports,
    score_incident,
    scores_to_csv,
)
from .rewrite import AddressMap, RewriteSummary, rewrite_addresses, verify_checksums
from .stats import (
    ComparisonReport,
    ContingencyTable,
    TestResult,
    compare_conditions,
    fisher_exact,
    wilcoxon_rank_sum,
)

__version__ = "0.1.0"

__all__ = [
    "AMBIGUOUS",
    "AddressMap",
    "AnalystReport",
    "AssembledAttack",
    "AttackBlock",
    "AttackPhase",
    "AttackScenario",
    "AttackTrace",
    "CallbackSink",
    "Capture",
    "CleaningLog",
    "DiscardSink",
    "ComparisonReport",
    "ConditionSummary",
    "ContingencyTable",
    "FileSink",
    "GroundTruth",
    "IncidentReport",
    "IncidentScore",
    "InjectionSession",
    "Injector",
    "InterfaceSink",
    "PacketRecord",
    "RewriteSummary",
    "ScenarioStore",
    "TestResult",
    "TraceLibrary",
    "TsResolution",
    "aggregate",
    "assemble",
    "compare_conditions",
    "errors",
    "extract_ground_truth",
    "fisher_exact",
    "grade_reports",
    "match_incident",
    "merge",
    "parse_reports",
    "read_capture",
    "rewrite_addresses",
    "score_incident",
    "scores_to_csv",
    "transform_time",
    "validate_scenario",
    "verify_checksums",
    "wilcoxon_rank_sum",
    "write_capture",
]
