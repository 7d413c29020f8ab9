"""Discrete-time token-flow simulator over a static model.

One global tick fires every enabled stage once, in declaration order.
A stage is enabled when a thing arrived at it on the previous tick, when
it holds a thing and carries a deterministic update rule (per-tick
dynamics keep firing while occupied), or, for create stages, at tick 0
(spontaneous sources) and whenever an inbound trigger fired.

Within a tick, movement and processing stages fire first; create stages
enabled by this tick's trigger firings fire second, so triggered
creation lands in the same tick as its cause. Triggers fired by those
creations carry over to the next tick. All deterministic assignments of
a tick read pre-tick variable values and are applied together at the end
of the tick.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from . import expr as _expr
from .behavior import BehaviorGraph, Verdict, conforms
from .events import EventCatalog, stage_event_map
from .info import Distribution
from .model import Model, Stage, StageKind, validate_static
from .rng import SplitMix64


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    max_ticks: int = 100
    seed: int = 0
    firing_order: str = "declaration"  # or "id-sorted"
    max_things: int = 10_000

    def __post_init__(self) -> None:
        if self.max_ticks < 1:
            raise ValueError("max_ticks must be at least 1")
        if self.firing_order not in ("declaration", "id-sorted"):
            raise ValueError(f"unknown firing order {self.firing_order!r}")


@dataclass(frozen=True)
class Assignment:
    target: str
    expression: _expr.Expr

    def render(self) -> str:
        return f"{self.target} = {_expr.render(self.expression)}"


@dataclass(frozen=True)
class Outcome:
    label: str
    probability: float
    target_stage: str  # create stage reached by the trigger this outcome fires


@dataclass(frozen=True)
class UpdateRule:
    id: str
    stage: str
    kind: str  # "deterministic" | "stochastic"
    assignments: tuple[Assignment, ...] = ()
    outcomes: tuple[Outcome, ...] = ()


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[UpdateRule, ...] = ()

    def by_stage(self) -> Mapping[str, UpdateRule]:
        return {r.stage: r for r in self.rules}

    def validate(self, model: Model) -> list[str]:
        """Problems that make this rule set unusable against ``model``."""
        problems: list[str] = []
        stages = model.stage_map()
        variables = model.variable_map()
        state_vars = {v.name for v in model.variables if v.role == "state"}
        trigger_arcs = {(t.src, t.dst) for t in model.triggers}
        seen_stages: set[str] = set()
        for rule in self.rules:
            if rule.stage in seen_stages:
                problems.append(f"rule {rule.id}: stage {rule.stage!r} has more than one rule")
            seen_stages.add(rule.stage)
            stage = stages.get(rule.stage)
            if stage is None:
                problems.append(f"rule {rule.id}: stage {rule.stage!r} does not exist")
                continue
            if stage.kind not in (StageKind.CREATE, StageKind.PROCESS):
                problems.append(
                    f"rule {rule.id}: attached to a {stage.kind} stage; "
                    "only create or process stages carry rules"
                )
            if rule.kind == "deterministic":
                for assignment in rule.assignments:
                    if assignment.target not in state_vars:
                        problems.append(
                            f"rule {rule.id}: assigns to {assignment.target!r}, "
                            "which is not a state variable"
                        )
                    for name in sorted(_expr.variables_of(assignment.expression)):
                        if name not in variables:
                            problems.append(
                                f"rule {rule.id}: references undeclared variable {name!r}"
                            )
            else:
                try:
                    Distribution.of((o.label, o.probability) for o in rule.outcomes)
                except ValueError as exc:
                    problems.append(f"rule {rule.id}: {exc}")
                for outcome in rule.outcomes:
                    if (rule.stage, outcome.target_stage) not in trigger_arcs:
                        problems.append(
                            f"rule {rule.id}: outcome {outcome.label!r} names "
                            f"{outcome.target_stage!r}, but no trigger runs there "
                            f"from {rule.stage!r}"
                        )
        return problems


@dataclass(frozen=True)
class ThingInstance:
    id: str
    type_thimac: str
    at: str
    payload: tuple[tuple[str, float], ...] | None = None


@dataclass(frozen=True)
class TraceEntry:
    tick: int
    fired: str
    thing: str
    event: str | None
    variables: tuple[tuple[str, float], ...]

    def line(self) -> str:
        values = ",".join(f"{name}={value!r}" for name, value in self.variables)
        return f"{self.tick}\t{self.fired}\t{self.thing}\t{self.event or '-'}\t{values}"


@dataclass(frozen=True)
class EngineState:
    tick: int = 0
    things: tuple[ThingInstance, ...] = ()
    variables: tuple[tuple[str, float], ...] = ()
    arrived: frozenset[str] = frozenset()
    deferred_triggers: tuple[str, ...] = ()
    rng_state: int = 0
    next_thing: int = 1

    def variable_map(self) -> dict[str, float]:
        return dict(self.variables)


@dataclass(frozen=True)
class Trace:
    entries: tuple[TraceEntry, ...]
    completed: bool
    halt_event: str | None = None
    warning: str | None = None

    def lines(self) -> list[str]:
        return [e.line() for e in self.entries]

    def text(self) -> str:
        return "\n".join(self.lines()) + ("\n" if self.entries else "")


class _Plan:
    """Static lookup tables shared by every tick of a run."""

    def __init__(self, model: Model, rules: RuleSet, config: EngineConfig) -> None:
        self.model = model
        self.config = config
        self.stages = model.stage_map()
        if config.firing_order == "id-sorted":
            self.ordered_stages = sorted(model.stages, key=lambda s: s.id)
        else:
            self.ordered_stages = list(model.stages)
        self.rule_of = rules.by_stage()
        self.out_flows: dict[str, list[str]] = {}
        for flow in model.flows:
            self.out_flows.setdefault(flow.src, []).append(flow.dst)
        self.out_triggers: dict[str, list[str]] = {}
        self.triggered_creates: set[str] = set()
        self.trigger_ids: dict[tuple[str, str], str] = {}
        for trigger in model.triggers:
            self.out_triggers.setdefault(trigger.src, []).append(trigger.id)
            self.triggered_creates.add(trigger.dst)
            self.trigger_ids[(trigger.src, trigger.dst)] = trigger.id
        self.trigger_dst = {t.id: t.dst for t in model.triggers}
        self.state_vars = tuple(v.name for v in model.variables if v.role == "state")


def initial_state(model: Model, config: EngineConfig) -> EngineState:
    return EngineState(
        tick=0,
        things=(),
        variables=tuple((v.name, v.value) for v in model.variables),
        arrived=frozenset(),
        deferred_triggers=(),
        rng_state=config.seed,
        next_thing=1,
    )


def step(
    model: Model,
    rules: RuleSet,
    state: EngineState,
    config: EngineConfig | None = None,
) -> tuple[EngineState, tuple[TraceEntry, ...]]:
    """Advance one tick; pure in both arguments."""
    plan = _Plan(model, rules, config or EngineConfig())
    return _step(plan, state)


def _step(plan: _Plan, state: EngineState) -> tuple[EngineState, tuple[TraceEntry, ...]]:
    variables = state.variable_map()
    pre_tick_env = dict(variables)
    rng = SplitMix64(0)
    rng.state = state.rng_state

    things: dict[str, ThingInstance] = {t.id: t for t in state.things}
    at_stage: dict[str, list[str]] = {}
    for thing in state.things:
        at_stage.setdefault(thing.at, []).append(thing.id)

    fired_triggers: list[str] = []
    sweep2_triggers: list[str] = []
    writes: dict[str, float] = {}
    moves: dict[str, str] = {}
    raw_entries: list[tuple[str, str]] = []  # (stage id, thing id)
    arrivals: set[str] = set()

    def apply_rule(stage: Stage, sweep2: bool) -> None:
        rule = plan.rule_of.get(stage.id)
        if rule is None:
            fired = plan.out_triggers.get(stage.id, ())
        elif rule.kind == "deterministic":
            for assignment in rule.assignments:
                try:
                    writes[assignment.target] = _expr.evaluate(
                        assignment.expression, pre_tick_env
                    )
                except _expr.ExprEvalError as exc:
                    raise EngineError(
                        f"rule {rule.id} on stage {stage.id}: {exc}"
                    ) from exc
            fired = plan.out_triggers.get(stage.id, ())
        else:
            u = rng.uniform01()
            cumulative = 0.0
            chosen = rule.outcomes[-1]
            for outcome in rule.outcomes:
                cumulative += outcome.probability
                if u < cumulative:
                    chosen = outcome
                    break
            trigger_id = plan.trigger_ids.get((stage.id, chosen.target_stage))
            if trigger_id is None:
                raise EngineError(
                    f"rule {rule.id}: no trigger from {stage.id} to {chosen.target_stage}"
                )
            fired = (trigger_id,)
        (sweep2_triggers if sweep2 else fired_triggers).extend(fired)

    # sweep 1: stages holding things
    for stage in plan.ordered_stages:
        here = at_stage.get(stage.id, ())
        if not here:
            continue
        rule = plan.rule_of.get(stage.id)
        if rule is not None and rule.kind == "deterministic":
            firing_for = list(here)  # resident dynamics refire while occupied
        else:
            firing_for = [tid for tid in here if tid in state.arrived]
        if not firing_for:
            continue
        for thing_id in firing_for:
            raw_entries.append((stage.id, thing_id))
        apply_rule(stage, sweep2=False)
        out = plan.out_flows.get(stage.id, ())
        if len(out) == 1:
            for thing_id in firing_for:
                moves[thing_id] = out[0]

    # sweep 2: create stages enabled by triggers or, at tick 0, spontaneously
    enabling: dict[str, int] = {}
    for trigger_id in list(state.deferred_triggers) + fired_triggers:
        dst = plan.trigger_dst[trigger_id]
        enabling[dst] = enabling.get(dst, 0) + 1
    next_thing = state.next_thing
    for stage in plan.ordered_stages:
        if stage.kind is not StageKind.CREATE:
            continue
        spontaneous = state.tick == 0 and stage.id not in plan.triggered_creates
        count = enabling.get(stage.id, 0) + (1 if spontaneous else 0)
        out = plan.out_flows.get(stage.id, ())
        for _ in range(count):
            thing_id = f"t{next_thing}"
            next_thing += 1
            things[thing_id] = ThingInstance(
                id=thing_id, type_thimac=stage.owner, at=stage.id
            )
            raw_entries.append((stage.id, thing_id))
            apply_rule(stage, sweep2=True)
            # creation is this stage's firing; the new thing moves with it
            if len(out) == 1:
                moves[thing_id] = out[0]

    # end of tick: simultaneous variable update, then movement
    for name, value in writes.items():
        variables[name] = value
    for thing_id, destination in moves.items():
        things[thing_id] = replace(things[thing_id], at=destination)
        arrivals.add(thing_id)

    if len(things) > plan.config.max_things:
        raise EngineError(
            f"divergence guard: {len(things)} things in flight exceeds "
            f"the configured limit of {plan.config.max_things}"
        )

    snapshot = tuple((name, variables[name]) for name in plan.state_vars)
    entries = tuple(
        TraceEntry(tick=state.tick, fired=stage_id, thing=thing_id,
                   event=None, variables=snapshot)
        for stage_id, thing_id in raw_entries
    )
    new_state = EngineState(
        tick=state.tick + 1,
        things=tuple(things[tid] for tid in sorted(things, key=lambda t: int(t[1:]))),
        variables=tuple(sorted(variables.items())),
        arrived=frozenset(arrivals),
        deferred_triggers=tuple(sweep2_triggers),
        rng_state=rng.state,
        next_thing=next_thing,
    )
    return new_state, entries


def run(
    model: Model,
    catalog: EventCatalog,
    graph: BehaviorGraph,
    rules: RuleSet,
    config: EngineConfig,
) -> Trace:
    """Simulate up to ``config.max_ticks`` ticks and map firings to events.

    Each entry is labeled with the catalog event whose region contains the
    fired stage (most specific region wins). The run halts after the first
    tick that realizes a halting event: a terminal event of the chronology
    that is not inside a recurrence loop.
    """
    report = validate_static(model)
    if not report.ok:
        raise EngineError(
            "model fails validation: " + "; ".join(report.lines()[:3])
        )
    problems = rules.validate(model)
    if problems:
        raise EngineError("rule set invalid: " + "; ".join(problems))

    plan = _Plan(model, rules, config)
    event_of = stage_event_map(catalog)
    halting = graph.halting_events()

    state = initial_state(model, config)
    entries: list[TraceEntry] = []
    halt_event: str | None = None
    for _ in range(config.max_ticks):
        state, new_entries = _step(plan, state)
        for entry in new_entries:
            labeled = replace(entry, event=event_of.get(entry.fired))
            entries.append(labeled)
            if labeled.event in halting and halt_event is None:
                halt_event = labeled.event
        if halt_event is not None:
            break
    warning = None
    if halt_event is None:
        warning = (
            f"run reached max_ticks={config.max_ticks} before any terminal event"
        )
    return Trace(
        entries=tuple(entries),
        completed=halt_event is not None,
        halt_event=halt_event,
        warning=warning,
    )


def trace_events(
    trace: Trace | Sequence[TraceEntry],
    catalog: EventCatalog,
    graph: BehaviorGraph,
) -> tuple[tuple[str, ...], Verdict]:
    """Event sequence of a trace (consecutive duplicates collapsed) plus
    its conformance verdict against the chronology."""
    entries = trace.entries if isinstance(trace, Trace) else tuple(trace)
    sequence: list[str] = []
    for entry in entries:
        if entry.event is None:
            continue
        if not sequence or sequence[-1] != entry.event:
            sequence.append(entry.event)
    return tuple(sequence), conforms(sequence, graph)
