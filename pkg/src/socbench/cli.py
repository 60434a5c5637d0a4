"""Command-line interface; subcommands map 1:1 to library operations.

Exit codes: 0 success, 1 domain error, 2 usage error. Every command accepts
--json for machine-readable output.
"""

from __future__ import annotations

import functools
import json
import sys
from datetime import datetime
from pathlib import Path

import click

from . import demo as demo_mod
from . import errors
from .builder import (
    AttackBlock,
    AttackScenario,
    GroundTruth,
    ScenarioStore,
    assemble,
    extract_ground_truth,
    validate_scenario,
)
from .injector import FileSink, Injector, InterfaceSink, parse_timestamp
from .library import TraceLibrary
from .pcap import write_capture
from .reports import aggregate, grade_reports, parse_reports, scores_to_csv
from .rewrite import AddressMap
from .stats import compare_conditions, fisher_exact, fisher_directional, wilcoxon_rank_sum


def domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except errors.SocbenchError as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(1)

    return wrapper


def emit(payload, as_json: bool, human: str | None = None) -> None:
    if as_json:
        click.echo(json.dumps(payload, indent=2))
    else:
        click.echo(human if human is not None else json.dumps(payload, indent=2))


@click.group()
@click.option(
    "--storage",
    type=click.Path(path_type=Path),
    default=Path("storage"),
    show_default=True,
    help="Storage root holding traces/ and scenarios/.",
)
@click.pass_context
def main(ctx: click.Context, storage: Path) -> None:
    """Benchmark security monitoring with synthetic attack injection."""
    ctx.ensure_object(dict)
    ctx.obj["storage"] = storage


def _library(ctx) -> TraceLibrary:
    return TraceLibrary(ctx.obj["storage"])


def _scenarios(ctx) -> ScenarioStore:
    return ScenarioStore(ctx.obj["storage"])


# -- trace ----------------------------------------------------------------------

@main.group()
def trace() -> None:
    """Manage the attack trace library."""


@trace.command("add")
@click.option("--pcap", "pcap_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--name", required=True)
@click.option("--phase", required=True, help="recon|exploitation|delivery|control")
@click.option("--technique", default="")
@click.option("--role", "roles", multiple=True, help="role=IP, e.g. attacker=10.0.0.1")
@click.option("--expect", "expects", multiple=True,
              help="question=answer, e.g. recon='port scan' or delivery_control=a,b")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
@domain_errors
def trace_add(ctx, pcap_path, name, phase, technique, roles, expects, as_json):
    """Store a capture with its phase, roles, and expected answers."""
    role_map = {}
    for item in roles:
        key, _, value = item.partition("=")
        if not value:
            raise click.UsageError(f"--role must look like attacker=10.0.0.1, got {item!r}")
        role_map[key.strip()] = value.strip()
    answers = {}
    for item in expects:
        key, _, value = item.partition("=")
        if not value:
            raise click.UsageError(f"--expect must look like recon='port scan', got {item!r}")
        key = key.strip()
        answers[key] = (
            [v.strip() for v in value.split(",")] if key == "delivery_control" else value.strip()
        )
    trace = _library(ctx).add_trace(
        pcap_path.read_bytes(),
        name=name,
        phase=phase,
        technique=technique,
        roles=role_map,
        expected_answers=answers,
    )
    emit(trace.to_json(), as_json, trace.id)


@trace.command("list")
@click.option("--phase", default=None)
@click.option("--query", default=None)
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
@domain_errors
def trace_list(ctx, phase, query, as_json):
    traces = _library(ctx).list_traces(phase, query)
    human = "\n".join(
        f"{t.id}  {t.phase.label:14s} {t.packet_count:5d} pkts  {t.duration:8.2f}s  {t.name}"
        for t in traces
    )
    emit([t.to_json() for t in traces], as_json, human or "(no traces)")


@trace.command("show")
@click.argument("trace_id")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
@domain_errors
def trace_show(ctx, trace_id, as_json):
    emit(_library(ctx).get_trace(trace_id).to_json(), True)


@trace.command("remove")
@click.argument("trace_id")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
@domain_errors
def trace_remove(ctx, trace_id, as_json):
    _library(ctx).remove_trace(trace_id)
    emit({"removed": trace_id}, as_json, f"removed {trace_id}")


@trace.command("pick")
@click.option("--phase", required=True)
@click.option("--seed", type=int, default=None)
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
@domain_errors
def trace_pick(ctx, phase, seed, as_json):
    """Pick a uniformly random trace of a phase."""
    trace = _library(ctx).pick_random(phase, seed)
    emit(trace.to_json(), as_json, trace.id)


# -- scenario -------------------------------------------------------------------

def _parse_block(spec: str) -> AttackBlock:
    fields = {}
    for part in spec.split(","):
        key, _, value = part.partition("=")
        if not value:
            raise click.UsageError(
                f"--block must look like trace=ID,offset=0,speed=1[,map=a>b;c>d], got {spec!r}"
            )
        fields[key.strip()] = value.strip()
    if "trace" not in fields:
        raise click.UsageError(f"--block needs trace=<id>: {spec!r}")
    pairs = []
    if fields.get("map"):
        for pair in fields["map"].split(";"):
            source, _, target = pair.partition(">")
            if not target:
                raise click.UsageError(f"map entries look like 10.0.0.0/24>192.0.2.0/24: {pair!r}")
            pairs.append((source.strip(), target.strip()))
    return AttackBlock(
        trace_id=fields["trace"],
        offset_s=float(fields.get("offset", 0)),
        speed=float(fields.get("speed", 1)),
        address_map=AddressMap.from_pairs(pairs),
    )


@main.group()
def scenario() -> None:
    """Compose, validate, store, and assemble attack scenarios."""


@scenario.command("build")
@click.option("--id", "scenario_id", default="", help="Generated when omitted.")
@click.option("--name", required=True)
@click.option("--block", "blocks", multiple=True, required=True,
              help="trace=ID,offset=SECONDS,speed=X[,map=from>to;from>to]")
@click.option("--notes", default="")
@click.option("--background", "background_ref", default=None, help="Trace id replayed as background noise.")
@click.option("--save/--no-save", default=True, help="Persist into the scenario store.")
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Also write scenario JSON here.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
@domain_errors
def scenario_build(ctx, scenario_id, name, blocks, notes, background_ref, save, out, as_json):
    """Build a scenario from block specs and store it."""
    import uuid as _uuid

    scenario = AttackScenario(
        id=scenario_id or _uuid.uuid4().hex[:12],
        name=name,
        blocks=tuple(_parse_block(spec) for spec in blocks),
        background_ref=background_ref,
        notes=notes,
    )
    warnings = validate_scenario(scenario, _library(ctx))
    if save:
        _scenarios(ctx).save_scenario(scenario)
    if out:
        out.write_text(json.dumps(scenario.to_json(), indent=2) + "\n")
    for note in warnings:
        click.echo(f"warning: {note.kind}: {note.message}", err=True)
    emit(scenario.to_json(), as_json, scenario.id)


@scenario.command("save")
@click.option("--file", "path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
@domain_errors
def scenario_save(ctx, path, as_json):
    """Store a scenario JSON document."""
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise errors.SchemaViolation(f"{path}: invalid JSON: {exc}")
    scenario = AttackScenario.from_json(raw)
    _scenarios(ctx).save_scenario(scenario)
    emit(scenario.to_json(), as_json, scenario.id)


@scenario.command("list")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
@domain_errors
def scenario_list(ctx, as_json):
    items = _scenarios(ctx).list_scenarios()
    human = "\n".join(f"{s.id}  {len(s.blocks)} block(s)  {s.name}" for s in items)
    emit([s.to_json() for s in items], as_json, human or "(no scenarios)")


@scenario.command("show")
@click.argument("scenario_id")
@click.pass_context
@domain_errors
def scenario_show(ctx, scenario_id):
    emit(_scenarios(ctx).load_scenario(scenario_id).to_json(), True)


@scenario.command("delete")
@click.argument("scenario_id")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
@domain_errors
def scenario_delete(ctx, scenario_id, as_json):
    _scenarios(ctx).delete_scenario(scenario_id)
    emit({"deleted": scenario_id}, as_json, f"deleted {scenario_id}")


@scenario.command("validate")
@click.argument("scenario_id")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
@domain_errors
def scenario_validate(ctx, scenario_id, as_json):
    scenario = _scenarios(ctx).load_scenario(scenario_id)
    notes = validate_scenario(scenario, _library(ctx))
    payload = [{"kind": n.kind, "message": n.message} for n in notes]
    human = "\n".join(f"{n.kind}: {n.message}" for n in notes) or "no warnings"
    emit(payload, as_json, human)


@scenario.command("assemble")
@click.option("--id", "scenario_id", required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True, help="Output pcap path.")
@click.option("--truth", type=click.Path(path_type=Path), required=True, help="Ground-truth JSON path.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
@domain_errors
def scenario_assemble(ctx, scenario_id, out, truth, as_json):
    """Assemble a stored scenario into a pcap plus its ground truth."""
    scenario = _scenarios(ctx).load_scenario(scenario_id)
    attack = assemble(scenario, _library(ctx))
    out.write_bytes(write_capture(attack.capture))
    truth.write_text(json.dumps(attack.ground_truth.to_json(), indent=2) + "\n")
    payload = {
        "scenario_id": scenario_id,
        "packets": len(attack.capture.packets),
        "capture": str(out),
        "ground_truth": str(truth),
    }
    emit(payload, as_json, f"wrote {out} ({payload['packets']} packets) and {truth}")


# -- inject ---------------------------------------------------------------------

@main.group()
def inject() -> None:
    """Replay an assembled scenario into a sink."""


@inject.command("run")
@click.option("--scenario", "scenario_id", required=True)
@click.option("--sink-file", type=click.Path(path_type=Path), default=None)
@click.option("--sink-interface", default=None)
@click.option("--at", "scheduled", default=None, help="ISO-8601 start time (default: now).")
@click.option("--background", "background_ref", default=None, help="Trace id mixed in as background.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
@domain_errors
def inject_run(ctx, scenario_id, sink_file, sink_interface, scheduled, background_ref, as_json):
    """Assemble and inject synchronously; waits for completion."""
    if bool(sink_file) == bool(sink_interface):
        raise click.UsageError("choose exactly one of --sink-file / --sink-interface")
    library = _library(ctx)
    scenario = _scenarios(ctx).load_scenario(scenario_id)
    attack = assemble(scenario, library)
    background = None
    ref = background_ref or scenario.background_ref
    if ref:
        background = library.load_capture(ref)
    sink = FileSink(sink_file) if sink_file else InterfaceSink(sink_interface)
    start = parse_timestamp(scheduled) if scheduled else None
    injector = Injector()
    view = injector.start_injection(attack, sink, scheduled_start=start, background=background)
    final = injector.wait(view.id)
    emit(
        final.to_json(),
        as_json,
        f"session {final.id}: {final.state}, {final.packets_sent}/{final.total_packets} packets",
    )
    if final.state == "failed":
        sys.exit(1)


# -- evaluate -------------------------------------------------------------------

@main.group()
def evaluate() -> None:
    """Grade analyst report CSVs against ground truth."""


@evaluate.command("run")
@click.option("--csv", "csv_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--truth", "truth_paths", type=click.Path(exists=True, path_type=Path),
              multiple=True, required=True, help="Ground-truth JSON (repeatable).")
@click.option("--out-json", type=click.Path(path_type=Path), default=None)
@click.option("--out-csv", type=click.Path(path_type=Path), default=None)
@click.option("--compare", is_flag=True, help="Also run the two-condition comparison.")
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
@domain_errors
def evaluate_run(ctx, csv_path, truth_paths, out_json, out_csv, compare, alpha, as_json):
    """Parse, match, score, and aggregate reports."""
    truths = [
        GroundTruth.from_json(json.loads(path.read_text())) for path in truth_paths
    ]
    parsed, cleaning = parse_reports(csv_path.read_bytes(), truths)
    graded = grade_reports(parsed, truths, cleaning)
    conditions = sorted({r.condition for r in parsed})
    summaries = aggregate(parsed, truths, conditions, cleaning)
    payload = {
        "groups": len(parsed),
        "conditions": conditions,
        "summaries": [s.to_json() for s in summaries],
        "cleaning_log": cleaning.to_json(),
    }
    text_parts = [
        f"{len(parsed)} group report(s), conditions: {', '.join(conditions) or '-'}"
    ]
    if compare:
        if len(summaries) != 2:
            raise errors.ArityMismatch(
                f"--compare needs exactly two conditions, got {conditions}"
            )
        report = compare_conditions(summaries, alpha)
        payload["comparison"] = report.to_json()
        text_parts.append(report.to_text())
    if out_json:
        out_json.write_text(json.dumps({**payload, "graded": [g.to_json() for g in graded]}, indent=2) + "\n")
        text_parts.append(f"graded JSON -> {out_json}")
    if out_csv:
        out_csv.write_text(scores_to_csv(graded))
        text_parts.append(f"scores CSV -> {out_csv}")
    emit(payload, as_json, "\n".join(text_parts))


# -- stats ------------------------------------------------------------------------

@main.group()
def stats() -> None:
    """Run the statistical tests directly."""


@stats.command("fisher")
@click.argument("a", type=int)
@click.argument("b", type=int)
@click.argument("c", type=int)
@click.argument("d", type=int)
@click.option("--alternative", type=click.Choice(["two-sided", "less", "greater"]),
              default="two-sided", show_default=True)
@click.option("--json", "as_json", is_flag=True)
@domain_errors
def stats_fisher(a, b, c, d, alternative, as_json):
    """Fisher's exact test on the 2x2 table [[A, B], [C, D]]."""
    result = fisher_exact((a, b, c, d), alternative)
    directional = fisher_directional((a, b, c, d))
    odds = "undefined" if result.odds_ratio is None else f"{result.odds_ratio:.4g}"
    emit(
        {**result.to_json(), "p_directional": directional.p_value},
        as_json,
        f"p={result.p_value:.4g} ({alternative}), p_directional={directional.p_value:.4g}, "
        f"OR={odds} (second row vs first, conditional MLE)",
    )


@stats.command("wilcoxon")
@click.option("--x", required=True, help="Comma-separated sample, e.g. 1,2,2,3")
@click.option("--y", required=True)
@click.option("--alternative", type=click.Choice(["two-sided", "less", "greater"]),
              default="two-sided", show_default=True)
@click.option("--json", "as_json", is_flag=True)
@domain_errors
def stats_wilcoxon(x, y, alternative, as_json):
    """Wilcoxon rank-sum (Mann-Whitney) test."""
    xs = [float(v) for v in x.split(",") if v.strip()]
    ys = [float(v) for v in y.split(",") if v.strip()]
    result = wilcoxon_rank_sum(xs, ys, alternative)
    emit(
        result.to_json(),
        as_json,
        f"W={result.statistic:g} p={result.p_value:.4g} ({alternative}; {result.details})",
    )


# -- demo -------------------------------------------------------------------------

@main.group()
def demo() -> None:
    """Bundled demo traces and evaluation fixtures."""


@demo.command("make-traces")
@click.option("--out-dir", type=click.Path(path_type=Path), required=True)
@click.option("--json", "as_json", is_flag=True)
@domain_errors
def demo_make_traces(out_dir, as_json):
    """Write the four demo pcaps plus their metadata JSON files."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for item in demo_mod.make_demo_traces():
        pcap_path = out_dir / f"{item.key}.pcap"
        meta_path = out_dir / f"{item.key}.json"
        pcap_path.write_bytes(item.capture_bytes)
        meta_path.write_text(
            json.dumps(
                {
                    "name": item.name,
                    "phase": item.phase.label,
                    "technique": item.technique,
                    "roles": item.roles,
                    "expected_answers": item.expected_answers,
                },
                indent=2,
            )
            + "\n"
        )
        written.append(str(pcap_path))
    emit(written, as_json, "\n".join(written))


@demo.command("make-reports")
@click.option("--truth", "truth_paths", type=click.Path(exists=True, path_type=Path),
              multiple=True, required=True,
              help="Two ground-truth JSONs: noisy scenario first, quiet second.")
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--perfect", is_flag=True, help="Emit all-correct reports instead of the benchmark mix.")
@domain_errors
def demo_make_reports(truth_paths, out, perfect):
    """Write an analyst-report CSV fixture against real ground truths."""
    truths = [GroundTruth.from_json(json.loads(p.read_text())) for p in truth_paths]
    if perfect:
        text = demo_mod.perfect_reports_csv(truths)
    else:
        if len(truths) != 2:
            raise errors.ArityMismatch("the benchmark fixture needs exactly two truths")
        text = demo_mod.benchmark_reports_csv(truths[0], truths[1])
    out.write_text(text)
    click.echo(str(out))


# -- serve -------------------------------------------------------------------------

@main.command("serve")
@click.option("--bind", default="127.0.0.1:8080", show_default=True)
@click.option("--auth-token", default=None)
@click.option("--ui", "ui_dist", type=click.Path(path_type=Path), default=None,
              help="Built web console directory to serve at /.")
@click.pass_context
@domain_errors
def serve_cmd(ctx, bind, auth_token, ui_dist):
    """Run the HTTP/JSON service."""
    from .service import serve

    serve(bind=bind, storage_root=ctx.obj["storage"], auth_token=auth_token,
          ui_dist=ui_dist)


if __name__ == "__main__":
    main()
