"""In-memory representation and structural validation of static TM models.

A model is one category of entities (thimacs) that own stages of the five
kinds, connected by flows (solid arcs) and triggers (dashed arcs), plus
real-valued variables. Everything here is immutable after construction;
validation returns violations as data and never raises for bad models.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping


class StageKind(Enum):
    CREATE = "create"
    PROCESS = "process"
    RECEIVE = "receive"
    RELEASE = "release"
    TRANSFER = "transfer"

    def __str__(self) -> str:
        return self.value


STAGE_KINDS = tuple(StageKind)

# Legal (from.kind, to.kind) pairs for flows inside one machine. Kept as
# data so the table can be amended without touching the checker. A
# process-to-create arc is trigger-only and deliberately absent here.
INTRA_FLOW_TABLE: frozenset[tuple[StageKind, StageKind]] = frozenset(
    {
        (StageKind.CREATE, StageKind.RELEASE),
        (StageKind.CREATE, StageKind.PROCESS),
        (StageKind.PROCESS, StageKind.RELEASE),
        (StageKind.RECEIVE, StageKind.PROCESS),
        (StageKind.RECEIVE, StageKind.RELEASE),
        (StageKind.RELEASE, StageKind.TRANSFER),
        (StageKind.TRANSFER, StageKind.RECEIVE),
    }
)

ASPECTS = ("thing", "machine", "dual")
SWCM_ROLES = ("source", "transmitter", "channel", "receiver", "destination", "none")


@dataclass(frozen=True)
class Thimac:
    id: str
    name: str
    aspect: str = "dual"
    parent: str | None = None
    swcm_role: str = "none"
    stages: tuple[str, ...] = ()


@dataclass(frozen=True)
class Stage:
    id: str
    kind: StageKind
    owner: str
    label: str | None = None
    rule: str | None = None  # id of an update rule bound to this stage


@dataclass(frozen=True)
class Flow:
    id: str
    src: str
    dst: str


@dataclass(frozen=True)
class Trigger:
    id: str
    src: str
    dst: str


@dataclass(frozen=True)
class Variable:
    name: str
    role: str = "state"  # state | constant | input
    value: float = 0.0
    unit: str | None = None


@dataclass(frozen=True)
class Model:
    name: str
    thimacs: tuple[Thimac, ...] = ()
    stages: tuple[Stage, ...] = ()
    flows: tuple[Flow, ...] = ()
    triggers: tuple[Trigger, ...] = ()
    variables: tuple[Variable, ...] = ()

    def thimac_map(self) -> Mapping[str, Thimac]:
        return {t.id: t for t in self.thimacs}

    def stage_map(self) -> Mapping[str, Stage]:
        return {s.id: s for s in self.stages}

    def flow_map(self) -> Mapping[str, Flow]:
        return {f.id: f for f in self.flows}

    def trigger_map(self) -> Mapping[str, Trigger]:
        return {t.id: t for t in self.triggers}

    def variable_map(self) -> Mapping[str, Variable]:
        return {v.name: v for v in self.variables}

    def element_ids(self) -> frozenset[str]:
        """Ids of every diagram element: thimacs, stages, flows, triggers."""
        ids: set[str] = set()
        for group in (self.thimacs, self.stages, self.flows, self.triggers):
            ids.update(e.id for e in group)
        return frozenset(ids)


# --- validation -----------------------------------------------------------

RULE_DANGLING = "ref.dangling"
RULE_DUPLICATE_ID = "ref.duplicate-id"
RULE_PARENT_FOREST = "thimac.parent-cycle"
RULE_KIND_DUP = "thimac.kind-dup"
RULE_ROLE_DUP = "thimac.swcm-role-dup"
RULE_BAD_ASPECT = "thimac.aspect"
RULE_BAD_ROLE = "thimac.swcm-role"
RULE_RULE_KIND = "stage.rule-kind"
RULE_FLOW_CROSS = "flow.cross-kind"
RULE_FLOW_INTRA = "flow.intra-pair"
RULE_FLOW_CYCLE = "flow.intra-cycle"
RULE_TRIGGER_TARGET = "trigger.target-kind"
RULE_TRIGGER_DUP = "trigger.duplicates-flow"
RULE_VAR_DUP = "variable.duplicate-name"
RULE_VAR_ROLE = "variable.role"


@dataclass(frozen=True)
class Violation:
    rule: str
    element: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> frozenset[str]:
        return frozenset(v.rule for v in self.violations)

    def lines(self) -> list[str]:
        return [f"{v.rule}: {v.element}: {v.message}" for v in self.violations]


def validate_static(model: Model) -> ValidationReport:
    """Check every structural invariant; violations are data, not failures.

    The report is deterministic: sorted by rule id, then element id.
    Dangling references are reported rather than raised, so a model does
    not need to be fully resolvable before being validated.
    """
    found: list[Violation] = []

    def add(rule: str, element: str, message: str) -> None:
        found.append(Violation(rule, element, message))

    thimacs = {}
    stages = {}
    seen_ids: set[str] = set()
    for group in (model.thimacs, model.stages, model.flows, model.triggers):
        for elem in group:
            if elem.id in seen_ids:
                add(RULE_DUPLICATE_ID, elem.id, "element id declared more than once")
            seen_ids.add(elem.id)
    for t in model.thimacs:
        thimacs.setdefault(t.id, t)
    for s in model.stages:
        stages.setdefault(s.id, s)

    var_names: set[str] = set()
    for v in model.variables:
        if v.name in var_names:
            add(RULE_VAR_DUP, v.name, "variable name declared more than once")
        var_names.add(v.name)
        if v.role not in ("state", "constant", "input"):
            add(RULE_VAR_ROLE, v.name, f"unknown variable role {v.role!r}")

    # thimac-level checks
    roles_seen: dict[str, str] = {}
    for t in model.thimacs:
        if t.parent is not None and t.parent not in thimacs:
            add(RULE_DANGLING, t.id, f"parent {t.parent!r} does not exist")
        if t.aspect not in ASPECTS:
            add(RULE_BAD_ASPECT, t.id, f"unknown aspect {t.aspect!r}")
        if t.swcm_role not in SWCM_ROLES:
            add(RULE_BAD_ROLE, t.id, f"unknown communication role {t.swcm_role!r}")
        elif t.swcm_role != "none":
            if t.swcm_role in roles_seen:
                add(
                    RULE_ROLE_DUP,
                    t.id,
                    f"role {t.swcm_role!r} already held by {roles_seen[t.swcm_role]!r}",
                )
            else:
                roles_seen[t.swcm_role] = t.id
        for sid in t.stages:
            if sid not in stages:
                add(RULE_DANGLING, t.id, f"listed stage {sid!r} does not exist")
        kinds_here = [stages[sid].kind for sid in t.stages if sid in stages]
        for kind in STAGE_KINDS:
            if kinds_here.count(kind) > 1:
                add(RULE_KIND_DUP, t.id, f"owns more than one {kind} stage")

    # parent links must form a forest
    for t in model.thimacs:
        seen_chain = {t.id}
        cursor = t.parent
        while cursor is not None and cursor in thimacs:
            if cursor in seen_chain:
                add(RULE_PARENT_FOREST, t.id, "parent chain forms a cycle")
                break
            seen_chain.add(cursor)
            cursor = thimacs[cursor].parent

    # stage-level checks
    for s in model.stages:
        if s.owner not in thimacs:
            add(RULE_DANGLING, s.id, f"owner {s.owner!r} does not exist")
        if s.rule is not None and s.kind not in (StageKind.CREATE, StageKind.PROCESS):
            add(
                RULE_RULE_KIND,
                s.id,
                f"rule attached to a {s.kind} stage; only create or process may carry one",
            )

    # flow-level checks
    for f in model.flows:
        missing = False
        for endpoint in (f.src, f.dst):
            if endpoint not in stages:
                add(RULE_DANGLING, f.id, f"endpoint {endpoint!r} does not exist")
                missing = True
        if missing:
            continue
        src, dst = stages[f.src], stages[f.dst]
        if src.owner != dst.owner:
            if src.kind != StageKind.TRANSFER or dst.kind != StageKind.TRANSFER:
                add(
                    RULE_FLOW_CROSS,
                    f.id,
                    f"cross-machine flow must be transfer to transfer, got {src.kind} to {dst.kind}",
                )
        elif (src.kind, dst.kind) not in INTRA_FLOW_TABLE:
            add(
                RULE_FLOW_INTRA,
                f.id,
                f"intra-machine flow {src.kind} to {dst.kind} is not a legal pair",
            )

    # intra-machine flow graph must be acyclic per machine
    per_machine: dict[str, dict[str, list[str]]] = {}
    for f in model.flows:
        if f.src in stages and f.dst in stages:
            src, dst = stages[f.src], stages[f.dst]
            if src.owner == dst.owner:
                per_machine.setdefault(src.owner, {}).setdefault(f.src, []).append(f.dst)
    for owner in sorted(per_machine):
        if _has_cycle(per_machine[owner]):
            add(RULE_FLOW_CYCLE, owner, "intra-machine flows form a cycle")

    # trigger-level checks
    flow_arcs = {
        (f.src, f.dst) for f in model.flows if f.src in stages and f.dst in stages
    }
    for tr in model.triggers:
        missing = False
        for endpoint in (tr.src, tr.dst):
            if endpoint not in stages:
                add(RULE_DANGLING, tr.id, f"endpoint {endpoint!r} does not exist")
                missing = True
        if missing:
            continue
        if stages[tr.dst].kind != StageKind.CREATE:
            add(
                RULE_TRIGGER_TARGET,
                tr.id,
                f"trigger must land on a create stage, got {stages[tr.dst].kind}",
            )
        if (tr.src, tr.dst) in flow_arcs:
            add(RULE_TRIGGER_DUP, tr.id, "trigger duplicates a flow with the same endpoints")

    found.sort(key=lambda v: (v.rule, v.element, v.message))
    return ValidationReport(tuple(found))


def _has_cycle(adjacency: dict[str, list[str]]) -> bool:
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {node: WHITE for node in adjacency}

    def visit(node: str) -> bool:
        color[node] = GRAY
        for nxt in adjacency.get(node, ()):
            state = color.get(nxt, WHITE)
            if state == GRAY:
                return True
            if state == WHITE:
                color[nxt] = WHITE
                if visit(nxt):
                    return True
        color[node] = BLACK
        return False

    return any(color[n] == WHITE and visit(n) for n in list(color))


# --- regions ---------------------------------------------------------------


class UnknownElementError(KeyError):
    """An element id was requested that the model does not contain."""


@dataclass(frozen=True)
class Region:
    """Induced subdiagram of a model: a set of element ids plus connectivity.

    Connectivity is weak connectivity over flows, triggers, stage-to-owner
    links and child-to-parent links, restricted to the included elements.
    """

    elements: frozenset[str]
    connected: bool


def subdiagram(model: Model, elements: Iterable[str]) -> Region:
    """Induced subgraph over ``elements``.

    Any stage that is an endpoint of an included flow or trigger is pulled
    into the region, so arcs never dangle. Raises UnknownElementError for
    the first id that is not an element of the model.
    """
    requested = list(elements)
    ids = model.element_ids()
    for e in requested:
        if e not in ids:
            raise UnknownElementError(e)

    thimacs = model.thimac_map()
    stages = model.stage_map()
    flows = model.flow_map()
    triggers = model.trigger_map()

    closure: set[str] = set(requested)
    for e in requested:
        arc = flows.get(e) or triggers.get(e)
        if arc is not None:
            closure.add(arc.src)
            closure.add(arc.dst)

    # weak connectivity over the nodes (stages and thimacs) of the closure
    nodes = [e for e in closure if e in stages or e in thimacs]
    adjacency: dict[str, set[str]] = {n: set() for n in nodes}

    def link(a: str, b: str) -> None:
        if a in adjacency and b in adjacency:
            adjacency[a].add(b)
            adjacency[b].add(a)

    for e in closure:
        arc = flows.get(e) or triggers.get(e)
        if arc is not None:
            link(arc.src, arc.dst)
    for n in nodes:
        stage = stages.get(n)
        if stage is not None:
            link(n, stage.owner)
        else:
            parent = thimacs[n].parent
            if parent is not None:
                link(n, parent)

    connected = _component_count(adjacency) <= 1
    return Region(elements=frozenset(closure), connected=connected)


def _component_count(adjacency: dict[str, set[str]]) -> int:
    unvisited = set(adjacency)
    count = 0
    while unvisited:
        count += 1
        stack = [unvisited.pop()]
        while stack:
            node = stack.pop()
            for nxt in adjacency[node]:
                if nxt in unvisited:
                    unvisited.remove(nxt)
                    stack.append(nxt)
    return count


# --- census ----------------------------------------------------------------


@dataclass(frozen=True)
class Census:
    thimacs: int
    stages: int
    flows: int
    triggers: int
    variables: int
    per_kind: Mapping[str, int] = field(default_factory=dict)

    def lines(self) -> list[str]:
        out = [
            f"thimacs: {self.thimacs}",
            f"stages: {self.stages}",
        ]
        out.extend(f"  {kind}: {self.per_kind[kind]}" for kind in sorted(self.per_kind))
        out.extend(
            [
                f"flows: {self.flows}",
                f"triggers: {self.triggers}",
                f"variables: {self.variables}",
            ]
        )
        return out


def element_census(model: Model) -> Census:
    per_kind = {kind.value: 0 for kind in STAGE_KINDS}
    for s in model.stages:
        per_kind[s.kind.value] += 1
    return Census(
        thimacs=len(model.thimacs),
        stages=len(model.stages),
        flows=len(model.flows),
        triggers=len(model.triggers),
        variables=len(model.variables),
        per_kind=per_kind,
    )
