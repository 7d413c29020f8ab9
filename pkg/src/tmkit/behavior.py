"""Chronology of events: succession, recurrence, exclusive outcomes,
containing events, and conformance checking of event sequences.

Succession edges form a DAG whose maximal paths are the system's runs.
A recurrence is a back-edge over an event subsequence: bounded unrolling
for enumeration, unbounded for conformance checking. Exclusive groups
declare that at most one member occurs per pass; which member actually
occurs is the simulator's business, not the graph's. Containment is an
annotation over regions and never changes enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from .events import EventCatalog

RecurrenceSpec = Union[str, tuple[str, str]]


class BehaviorError(ValueError):
    pass


class UnknownEventError(BehaviorError):
    pass


class RunLimitError(RuntimeError):
    """Raised when enumeration would exceed the configured run cap."""


@dataclass(frozen=True)
class Recurrence:
    """A resolved repeat loop: back-edge from scope exits to scope entries."""

    anchor: str
    scope: frozenset[str]
    sources: tuple[str, ...]  # scope members with no succession inside the scope
    targets: tuple[str, ...]  # scope members with no predecessor inside the scope
    span: tuple[str, str] | None = None  # declared first..last form, if any


@dataclass(frozen=True)
class BehaviorGraph:
    catalog: EventCatalog
    successions: tuple[tuple[str, str], ...]
    recurrences: tuple[Recurrence, ...]
    exclusive_groups: tuple[frozenset[str], ...]
    containments: tuple[tuple[str, tuple[str, ...]], ...]
    initial: frozenset[str]
    terminal: frozenset[str]

    def successors(self, event_id: str) -> tuple[str, ...]:
        return tuple(b for a, b in self.successions if a == event_id)

    def halting_events(self) -> frozenset[str]:
        """Terminal events outside every recurrence scope; reaching one ends a run."""
        in_scope: set[str] = set()
        for rec in self.recurrences:
            in_scope.update(rec.scope)
        return frozenset(self.terminal - in_scope)


def build_behavior(
    catalog: EventCatalog,
    edges: Iterable[tuple[str, str]],
    recurrences: Iterable[RecurrenceSpec] = (),
    exclusive_groups: Iterable[Iterable[str]] = (),
    containments: Iterable[tuple[str, Iterable[str]]] = (),
) -> BehaviorGraph:
    """Validate and assemble the chronology graph.

    Containers are annotations: they may not carry succession edges, and a
    recurrence anchored on a container repeats the contained subsequence.
    A recurrence given as an (first, last) pair repeats the catalog slice
    between those two events inclusive.
    """
    known = catalog.event_map()
    order = {eid: i for i, eid in enumerate(catalog.ids())}
    if not known:
        raise BehaviorError("behavior graph needs a nonempty event catalog")

    def check(eid: str) -> str:
        if eid not in known:
            raise UnknownEventError(f"unknown event id {eid!r}")
        return eid

    edge_list = [(check(a), check(b)) for a, b in edges]

    containment_list: list[tuple[str, tuple[str, ...]]] = []
    for container, contained in containments:
        members = tuple(check(e) for e in contained)
        check(container)
        container_elems = known[container].region.elements
        for member in members:
            missing = known[member].region.elements - container_elems
            if missing:
                raise BehaviorError(
                    f"container {container!r} does not span {member!r}: "
                    f"{len(missing)} element(s) outside its region"
                )
        containment_list.append((container, members))
    containers = {c for c, _ in containment_list}

    for a, b in edge_list:
        if a in containers or b in containers:
            raise BehaviorError(
                f"succession {a} -> {b} touches a containing event; "
                "containment is an annotation, not a path node"
            )

    group_list: list[frozenset[str]] = []
    for group in exclusive_groups:
        members = frozenset(check(e) for e in group)
        if len(members) < 2:
            raise BehaviorError("an exclusive group needs at least two distinct events")
        group_list.append(members)

    if _succession_cycle(edge_list):
        raise BehaviorError(
            "succession edges form a cycle; express repetition as a recurrence"
        )

    # Containers are annotations, never path nodes. When the graph has
    # succession edges, events touching none of them are annotations too;
    # an edgeless graph treats every event as a one-step run.
    nodes = [eid for eid in catalog.ids() if eid not in containers]
    if edge_list:
        touched = {a for a, _ in edge_list} | {b for _, b in edge_list}
        nodes = [e for e in nodes if e in touched]
    has_in = {b for _, b in edge_list}
    has_out = {a for a, _ in edge_list}
    initial = frozenset(e for e in nodes if e not in has_in)
    terminal = frozenset(e for e in nodes if e not in has_out)

    contained_of = dict(containment_list)
    resolved: list[Recurrence] = []
    for spec in recurrences:
        span: tuple[str, str] | None = None
        if isinstance(spec, tuple):
            first, last = check(spec[0]), check(spec[1])
            lo, hi = order[first], order[last]
            if lo > hi:
                raise BehaviorError(f"recurrence span {first}..{last} is reversed")
            scope = frozenset(
                e for e in catalog.ids()[lo: hi + 1] if e not in containers
            )
            anchor = first
            span = (first, last)
        else:
            anchor = check(spec)
            scope = frozenset(contained_of.get(anchor, (anchor,)))
        if not scope:
            raise BehaviorError(f"recurrence on {anchor!r} has an empty scope")
        in_scope_in = {b for a, b in edge_list if a in scope and b in scope}
        in_scope_out = {a for a, b in edge_list if a in scope and b in scope}
        sources = tuple(e for e in sorted(scope, key=order.get) if e not in in_scope_out)
        targets = tuple(e for e in sorted(scope, key=order.get) if e not in in_scope_in)
        resolved.append(Recurrence(anchor=anchor, scope=scope,
                                   sources=sources, targets=targets, span=span))

    return BehaviorGraph(
        catalog=catalog,
        successions=tuple(edge_list),
        recurrences=tuple(resolved),
        exclusive_groups=tuple(group_list),
        containments=tuple(containment_list),
        initial=initial,
        terminal=terminal,
    )


def _succession_cycle(edges: list[tuple[str, str]]) -> bool:
    adjacency: dict[str, list[str]] = {}
    for a, b in edges:
        adjacency.setdefault(a, []).append(b)
    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[str, int] = {}

    def visit(node: str) -> bool:
        color[node] = GRAY
        for nxt in adjacency.get(node, ()):
            state = color.get(nxt, WHITE)
            if state == GRAY:
                return True
            if state == WHITE and visit(nxt):
                return True
        color[node] = BLACK
        return False

    return any(color.get(n, WHITE) == WHITE and visit(n) for n in list(adjacency))


# --- enumeration ------------------------------------------------------------


def enumerate_runs(
    graph: BehaviorGraph,
    max_recurrence: int = 0,
    limit: int = 10_000,
) -> tuple[tuple[str, ...], ...]:
    """Every maximal initial-to-terminal path, recurrences unrolled.

    ``max_recurrence`` bounds how many times each back-edge may be taken;
    0 enumerates single passes only. Exclusive groups prune any path that
    would realize two members in one pass. Runs come back sorted by the
    catalog order of their events. Exceeding ``limit`` raises RunLimitError
    rather than truncating.
    """
    if max_recurrence < 0:
        raise BehaviorError("max_recurrence must be nonnegative")
    order = {eid: i for i, eid in enumerate(graph.catalog.ids())}
    members = _group_membership(graph)
    runs: list[tuple[str, ...]] = []

    def conflict(event: str, seen: frozenset[str]) -> bool:
        return any(seen & (group - {event}) for group in members.get(event, ()))

    def walk(
        event: str,
        path: list[str],
        seen: frozenset[str],
        budgets: dict[str, int],
    ) -> None:
        path.append(event)
        if event in members:
            seen = seen | {event}
        nexts = sorted(graph.successors(event), key=order.get)
        if event in graph.terminal:
            if len(runs) >= limit:
                raise RunLimitError(f"more than {limit} runs; raise the limit to enumerate")
            runs.append(tuple(path))
        for nxt in nexts:
            if not conflict(nxt, seen):
                walk(nxt, path, seen, budgets)
        for rec in graph.recurrences:
            if event in rec.sources and budgets[rec.anchor] > 0:
                child_budgets = dict(budgets)
                child_budgets[rec.anchor] -= 1
                for target in rec.targets:
                    walk(target, path, frozenset(), child_budgets)
        path.pop()

    budgets = {rec.anchor: max_recurrence for rec in graph.recurrences}
    for start in sorted(graph.initial, key=order.get):
        walk(start, [], frozenset(), budgets)
    runs.sort(key=lambda run: tuple(order[e] for e in run))
    return tuple(runs)


def _group_membership(graph: BehaviorGraph) -> dict[str, tuple[frozenset[str], ...]]:
    member_of: dict[str, list[frozenset[str]]] = {}
    for group in graph.exclusive_groups:
        for event in group:
            member_of.setdefault(event, []).append(group)
    return {e: tuple(gs) for e, gs in member_of.items()}


# --- conformance ------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    conformant: bool
    violation_index: int | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.conformant


def conforms(trace_events: Sequence[str], graph: BehaviorGraph) -> Verdict:
    """Is the sequence a prefix of some run with unbounded recurrence?

    The check simulates the set of positions the chronology could be in.
    Taking a back-edge starts a fresh pass, which resets exclusive-group
    bookkeeping. The first position where no candidate survives is
    reported together with the reason.
    """
    known = graph.catalog.event_map()
    members = _group_membership(graph)
    for event in trace_events:
        if event not in known:
            raise UnknownEventError(f"unknown event id {event!r}")

    if not trace_events:
        return Verdict(conformant=True)

    def seen_after(event: str, seen: frozenset[str]) -> frozenset[str]:
        return seen | {event} if event in members else seen

    def conflict(event: str, seen: frozenset[str]) -> bool:
        return any(seen & (group - {event}) for group in members.get(event, ()))

    first = trace_events[0]
    if first not in graph.initial:
        return Verdict(False, 0, f"{first} is not an initial event")
    states: set[tuple[str, frozenset[str]]] = {(first, seen_after(first, frozenset()))}

    for index in range(1, len(trace_events)):
        event = trace_events[index]
        nxt_states: set[tuple[str, frozenset[str]]] = set()
        exclusivity_hit = False
        for current, seen in states:
            candidates: list[tuple[str, frozenset[str]]] = [
                (succ, seen) for succ in graph.successors(current)
            ]
            for rec in graph.recurrences:
                if current in rec.sources:
                    candidates.extend((t, frozenset()) for t in rec.targets)
            for succ, pass_seen in candidates:
                if succ != event:
                    continue
                if conflict(succ, pass_seen):
                    exclusivity_hit = True
                    continue
                nxt_states.add((succ, seen_after(succ, pass_seen)))
        if not nxt_states:
            prev = trace_events[index - 1]
            if exclusivity_hit:
                reason = f"{event} excluded: another member of its exclusive group already occurred this pass"
            else:
                reason = f"no succession from {prev} to {event}"
            return Verdict(False, index, reason)
        states = nxt_states
    return Verdict(conformant=True)
