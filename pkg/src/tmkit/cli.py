"""Command-line entry point: validate, decompose, behavior, simulate,
info, render, and the bundled example models.

Exit codes: 0 success or conformant, 1 validation or conformance
failure, 2 input error, 3 engine error. All randomness flows from the
single seed (flag, manifest, or TMKIT_SEED); outputs are deterministic
for a fixed manifest.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

from . import dsl
from .behavior import RunLimitError, enumerate_runs
from .engine import EngineConfig, EngineError, RuleSet, Trace, run, trace_events
from .events import coverage_check
from .info import EmptyObservationError, InfoDomainError, Distribution, empirical_info, info_report
from .model import element_census, validate_static
from .render import RenderOptions, render
from .rng import run_seed

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_ENGINE = 3

BUNDLED_MODELS = (
    ("predator_prey", "two-species discrete-time population dynamics with a recurring event cycle"),
    ("tile", "a wind-blown roof tile observed by a passerby; unaddressed information with two outcomes"),
    ("coin", "a coin toss feeding a source-transmitter-destination pipeline with two equally likely outcomes"),
)


def bundled_model_path(name: str) -> Path:
    return Path(str(resources.files("tmkit").joinpath("models", f"{name}.tm")))


def _load(path: str) -> tuple[dsl.Document | None, int]:
    """Parse and statically validate; returns (document, exit code)."""
    try:
        result = dsl.parse_file(path)
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return None, EXIT_INPUT
    if not result.ok:
        for diagnostic in result.diagnostics:
            print(f"{path}:{diagnostic}", file=sys.stderr)
        return None, EXIT_INPUT
    return result.document, EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    document, code = _load(args.model)
    if document is None:
        return code
    report = validate_static(document.model)
    census = element_census(document.model)
    if report.ok:
        print(f"OK: {args.model} is structurally valid")
        for line in census.lines():
            print(f"  {line}")
        return EXIT_OK
    for line in report.lines():
        print(line)
    print(f"{len(report.violations)} violation(s)")
    return EXIT_FAIL


def cmd_decompose(args: argparse.Namespace) -> int:
    document, code = _load(args.model)
    if document is None:
        return code
    if not document.catalog.events:
        print("error: the model declares no events", file=sys.stderr)
        return EXIT_INPUT
    report = coverage_check(document.catalog)
    print(f"events: {len(document.catalog.events)}")
    for line in report.lines():
        print(line)
    return EXIT_OK if not report.uncovered else EXIT_FAIL


def cmd_behavior(args: argparse.Namespace) -> int:
    document, code = _load(args.model)
    if document is None:
        return code
    if document.graph is None:
        print("error: the model declares no behavior section", file=sys.stderr)
        return EXIT_INPUT
    try:
        runs = enumerate_runs(document.graph, max_recurrence=args.max_recurrence,
                              limit=args.limit)
    except RunLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"runs: {len(runs)}")
    for sequence in runs:
        print(" ".join(sequence))
    return EXIT_OK


def _apply_probability_overrides(rules: RuleSet, spec: str) -> RuleSet:
    """Override stochastic outcome probabilities: stage:label=p,label=p."""
    stage_part, _, assignments = spec.partition(":")
    overrides: dict[str, float] = {}
    for piece in assignments.split(","):
        label, _, value = piece.partition("=")
        overrides[label.strip()] = float(value)
    updated = []
    found = False
    for rule in rules.rules:
        if rule.stage == stage_part.strip() and rule.kind == "stochastic":
            found = True
            outcomes = tuple(
                replace(o, probability=overrides.get(o.label, o.probability))
                for o in rule.outcomes
            )
            Distribution.of((o.label, o.probability) for o in outcomes)
            rule = replace(rule, outcomes=outcomes)
        updated.append(rule)
    if not found:
        raise ValueError(f"no stochastic rule on stage {stage_part.strip()!r}")
    return RuleSet(tuple(updated))


def _default_outcomes(document: dsl.Document) -> tuple[str, ...]:
    """Outcome events for the info report: the first exclusive group."""
    if document.graph is None or not document.graph.exclusive_groups:
        return ()
    order = {eid: i for i, eid in enumerate(document.catalog.ids())}
    return tuple(sorted(document.graph.exclusive_groups[0], key=lambda e: order[e]))


def cmd_simulate(args: argparse.Namespace) -> int:
    manifest: dict = {}
    if args.manifest:
        try:
            manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read manifest: {exc}", file=sys.stderr)
            return EXIT_INPUT
    model_path = args.model or manifest.get("model")
    if not model_path:
        print("error: no model given (positional argument or manifest)", file=sys.stderr)
        return EXIT_INPUT
    document, code = _load(str(model_path))
    if document is None:
        return code
    report = validate_static(document.model)
    if not report.ok:
        for line in report.lines():
            print(line)
        return EXIT_FAIL
    if document.graph is None:
        print("error: simulation needs a behavior section", file=sys.stderr)
        return EXIT_INPUT

    env_seed = os.environ.get("TMKIT_SEED")
    seed = args.seed
    if seed is None:
        seed = manifest.get("seed")
    if seed is None and env_seed is not None:
        seed = int(env_seed)
    if seed is None:
        seed = 0
    ticks = args.ticks if args.ticks is not None else manifest.get("ticks", 100)
    runs_count = args.runs if args.runs is not None else manifest.get("runs", 1)
    out_dir = args.out or manifest.get("out")
    outcomes = args.outcomes or manifest.get("outcomes")
    if isinstance(outcomes, str):
        outcomes = [x.strip() for x in outcomes.split(",") if x.strip()]
    if not outcomes:
        outcomes = list(_default_outcomes(document))

    rules = document.rules
    prob_specs = list(args.prob or [])
    for stage, table in (manifest.get("probabilities") or {}).items():
        prob_specs.append(stage + ":" + ",".join(f"{k}={v}" for k, v in table.items()))
    try:
        for spec in prob_specs:
            rules = _apply_probability_overrides(rules, spec)
    except (ValueError, InfoDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    traces: list[Trace] = []
    sequences: list[tuple[str, ...]] = []
    verdicts = []
    halt_counts: dict[str, int] = {}
    all_outcome_events: list[str] = []
    try:
        for index in range(runs_count):
            config = EngineConfig(
                max_ticks=ticks,
                seed=seed if runs_count == 1 else run_seed(seed, index),
            )
            trace = run(document.model, document.catalog, document.graph, rules, config)
            sequence, verdict = trace_events(trace, document.catalog, document.graph)
            traces.append(trace)
            sequences.append(sequence)
            verdicts.append(verdict)
            halt = trace.halt_event or "(none)"
            halt_counts[halt] = halt_counts.get(halt, 0) + 1
            all_outcome_events.extend(e for e in sequence if e in set(outcomes))
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENGINE

    info = None
    if outcomes:
        try:
            info = empirical_info(all_outcome_events, outcomes)
        except (EmptyObservationError, InfoDomainError):
            info = None

    conformant = all(v.conformant for v in verdicts)
    summary = {
        "model": document.name,
        "seed": seed,
        "ticks": ticks,
        "runs": runs_count,
        "conformant": conformant,
        "halt_histogram": dict(sorted(halt_counts.items())),
        "outcome_events": list(outcomes),
        "verdicts": [
            {"conformant": v.conformant, "violation_index": v.violation_index,
             "reason": v.reason}
            for v in verdicts
        ][:100],
    }
    if info is not None:
        summary["information"] = {
            "observations": info.observations,
            "empirical_entropy_bits": info.empirical_entropy,
            "frequencies": {label: p for label, p, _ in info.outcomes},
        }

    first = traces[0]
    if out_dir:
        directory = Path(out_dir)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "trace.tsv").write_text(first.text(), encoding="utf-8")
        with open(directory / "trace.jsonl", "w", encoding="utf-8") as handle:
            for entry in first.entries:
                handle.write(json.dumps({
                    "tick": entry.tick, "stage": entry.fired, "thing": entry.thing,
                    "event": entry.event, "variables": dict(entry.variables),
                }, sort_keys=True) + "\n")
        (directory / "events.txt").write_text(
            "\n".join(sequences[0]) + "\n", encoding="utf-8")
        (directory / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    print(f"runs: {runs_count}  conformant: {conformant}")
    print("halt histogram: " + json.dumps(dict(sorted(halt_counts.items()))))
    if info is not None:
        for line in info.lines():
            print(line)
    if first.warning and runs_count == 1:
        print(f"warning: {first.warning}")
    if not conformant:
        bad = next(v for v in verdicts if not v.conformant)
        print(f"nonconformant: index {bad.violation_index}: {bad.reason}")
        return EXIT_FAIL
    return EXIT_OK


def cmd_info(args: argparse.Namespace) -> int:
    pairs: list[tuple[str, float]] = []
    for spec in args.outcome or []:
        label, _, value = spec.partition("=")
        try:
            pairs.append((label, float(value)))
        except ValueError:
            print(f"error: bad outcome spec {spec!r}", file=sys.stderr)
            return EXIT_INPUT
    for index, p in enumerate(args.p or []):
        pairs.append((f"x{index + 1}", p))
    if not pairs:
        print("error: no outcomes given", file=sys.stderr)
        return EXIT_INPUT
    base = {"2": 2.0, "e": 2.718281828459045, "10": 10.0}[args.base]
    try:
        report = info_report(Distribution.of(pairs), base=base)
    except InfoDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for line in report.lines():
        print(line)
    if args.out:
        payload = {
            "base": args.base,
            "entropy": report.entropy,
            "outcomes": [
                {"label": label, "p": p, "self_information": bits}
                for label, p, bits in report.outcomes
            ],
        }
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                                  encoding="utf-8")
    return EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    document, code = _load(args.model)
    if document is None:
        return code
    target = {"static": "static", "events": "events-overlay", "behavior": "behavior"}[args.target]
    options = RenderOptions(
        target=target,
        show_triggers=not args.no_triggers,
        cluster_thimacs=not args.no_cluster,
        palette=tuple(args.palette) if args.palette else RenderOptions().palette,
    )
    try:
        if target == "behavior":
            if document.graph is None:
                print("error: the model declares no behavior section", file=sys.stderr)
                return EXIT_INPUT
            text = render(document.graph, options=options)
        elif target == "events-overlay":
            text = render(document.model, catalog=document.catalog, options=options)
        else:
            text = render(document.model, options=options)
    except Exception as exc:  # render errors are input errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_examples(_: argparse.Namespace) -> int:
    for name, description in BUNDLED_MODELS:
        print(f"{name}\t{bundled_model_path(name)}\t{description}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tmkit",
        description="Author, validate, decompose, simulate, and render TM models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse a model and check every structural rule")
    p.add_argument("model")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("decompose", help="event-coverage report for a model's catalog")
    p.add_argument("model")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("behavior", help="enumerate the runs of the behavior graph")
    p.add_argument("model")
    p.add_argument("--max-recurrence", type=int, default=0)
    p.add_argument("--limit", type=int, default=10_000)
    p.set_defaults(func=cmd_behavior)

    p = sub.add_parser("simulate", help="run the token-flow simulation")
    p.add_argument("model", nargs="?")
    p.add_argument("--manifest", help="JSON manifest; flags override its fields")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--ticks", type=int, default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--out", help="directory for trace.tsv, trace.jsonl, events.txt, summary.json")
    p.add_argument("--outcomes", help="comma-separated outcome events for the info report")
    p.add_argument("--prob", action="append",
                   help="override stochastic probabilities: stage:label=p,label=p")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("info", help="self-information and entropy of a distribution")
    p.add_argument("--outcome", action="append", help="label=probability (repeatable)")
    p.add_argument("--p", action="append", type=float, help="bare probability (repeatable)")
    p.add_argument("--base", choices=["2", "e", "10"], default="2")
    p.add_argument("--out", help="write the report as JSON")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("render", help="emit DOT text for a model or behavior graph")
    p.add_argument("model")
    p.add_argument("--target", choices=["static", "events", "behavior"], default="static")
    p.add_argument("-o", "--output")
    p.add_argument("--no-triggers", action="store_true")
    p.add_argument("--no-cluster", action="store_true")
    p.add_argument("--palette", nargs="*")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("examples", help="list the bundled example models")
    p.set_defaults(func=cmd_examples)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
