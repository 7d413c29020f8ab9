"""DOT output for static models, event-region overlays, and behavior graphs.

Only the text format is produced; layout and rasterization are left to
external tooling. Solid edges are flows, dashed edges are triggers,
thimacs become nested clusters, and in overlay mode each event becomes
a colored cluster holding the stages it labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .behavior import BehaviorGraph
from .events import EventCatalog, stage_event_map
from .model import Model

DEFAULT_PALETTE = (
    "lightblue", "palegreen", "lightsalmon", "khaki", "plum",
    "lightcyan", "mistyrose", "wheat", "lavender", "honeydew",
)


class RenderError(ValueError):
    pass


@dataclass(frozen=True)
class RenderOptions:
    target: str = "static"  # static | events-overlay | behavior
    show_triggers: bool = True
    cluster_thimacs: bool = True
    palette: tuple[str, ...] = DEFAULT_PALETTE

    def __post_init__(self) -> None:
        if self.target not in ("static", "events-overlay", "behavior"):
            raise RenderError(f"unknown render target {self.target!r}")
        if self.target == "events-overlay" and not self.palette:
            raise RenderError("events-overlay needs a nonempty palette")


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render(
    model_or_graph: Model | BehaviorGraph,
    catalog: EventCatalog | None = None,
    options: RenderOptions | None = None,
) -> str:
    opts = options or RenderOptions()
    if opts.target == "behavior":
        if not isinstance(model_or_graph, BehaviorGraph):
            raise RenderError("behavior rendering needs a BehaviorGraph")
        return _render_behavior(model_or_graph)
    if not isinstance(model_or_graph, Model):
        raise RenderError(f"{opts.target} rendering needs a Model")
    if opts.target == "events-overlay":
        if catalog is None:
            raise RenderError("events-overlay rendering needs an event catalog")
        return _render_overlay(model_or_graph, catalog, opts)
    return _render_static(model_or_graph, opts)


def _stage_lines(model: Model, stage_ids, indent: str) -> list[str]:
    thimacs = model.thimac_map()
    out = []
    for stage in model.stages:
        if stage.id not in stage_ids:
            continue
        label = f"{thimacs[stage.owner].name}.{stage.kind.value}"
        out.append(f'{indent}{_quote(stage.id)} [label={_quote(label)}];')
    return out


def _edge_lines(model: Model, show_triggers: bool, indent: str = "  ") -> list[str]:
    out = []
    for flow in model.flows:
        out.append(f"{indent}{_quote(flow.src)} -> {_quote(flow.dst)} [style=solid];")
    if show_triggers:
        for trigger in model.triggers:
            out.append(f"{indent}{_quote(trigger.src)} -> {_quote(trigger.dst)} [style=dashed];")
    return out


def _render_static(model: Model, opts: RenderOptions) -> str:
    out = [f"digraph {_quote(model.name)} {{"]
    out.append('  node [shape=box];')
    if opts.cluster_thimacs:
        children: dict[str | None, list] = {}
        for thimac in model.thimacs:
            children.setdefault(thimac.parent, []).append(thimac)

        def emit(thimac, depth: int) -> None:
            pad = "  " * depth
            out.append(f"{pad}subgraph {_quote('cluster_' + thimac.id)} {{")
            out.append(f"{pad}  label={_quote(thimac.name)};")
            out.extend(_stage_lines(model, set(thimac.stages), pad + "  "))
            for child in children.get(thimac.id, ()):
                emit(child, depth + 1)
            out.append(f"{pad}}}")

        for top in children.get(None, ()):
            emit(top, 1)
    else:
        out.extend(_stage_lines(model, {s.id for s in model.stages}, "  "))
    out.extend(_edge_lines(model, opts.show_triggers))
    out.append("}")
    return "\n".join(out) + "\n"


def _render_overlay(model: Model, catalog: EventCatalog, opts: RenderOptions) -> str:
    event_of = stage_event_map(catalog)
    out = [f"digraph {_quote(model.name + '_events')} {{"]
    out.append('  node [shape=box];')
    grouped: dict[str, list[str]] = {event.id: [] for event in catalog.events}
    uncovered: list[str] = []
    for stage in model.stages:
        event_id = event_of.get(stage.id)
        if event_id is None:
            uncovered.append(stage.id)
        else:
            grouped[event_id].append(stage.id)
    for index, event in enumerate(catalog.events):
        color = opts.palette[index % len(opts.palette)]
        out.append(f"  subgraph {_quote('cluster_' + event.id)} {{")
        out.append(f"    label={_quote(event.id + ': ' + event.description)};")
        out.append(f"    style=filled;")
        out.append(f"    color={_quote(color)};")
        out.extend(_stage_lines(model, set(grouped[event.id]), "    "))
        out.append("  }")
    out.extend(_stage_lines(model, set(uncovered), "  "))
    out.extend(_edge_lines(model, opts.show_triggers))
    out.append("}")
    return "\n".join(out) + "\n"


def _render_behavior(graph: BehaviorGraph) -> str:
    catalog = graph.catalog
    out = [f"digraph {_quote(catalog.model.name + '_behavior')} {{"]
    out.append('  node [shape=box];')
    exclusive_members = set()
    for group in graph.exclusive_groups:
        exclusive_members.update(group)
    containers = {container for container, _ in graph.containments}
    contained: dict[str, str] = {}
    for container, members in graph.containments:
        for member in members:
            contained[member] = container

    def node_line(event_id: str, indent: str) -> str:
        shape = "diamond" if event_id in exclusive_members else "box"
        event = catalog.event_map()[event_id]
        label = f"{event.id}: {event.description}"
        return f"{indent}{_quote(event_id)} [shape={shape}, label={_quote(label)}];"

    for container, members in graph.containments:
        event = catalog.event_map()[container]
        out.append(f"  subgraph {_quote('cluster_' + container)} {{")
        out.append(f"    label={_quote(container + ': ' + event.description)};")
        for member in members:
            out.append(node_line(member, "    "))
        out.append("  }")
    for event in catalog.events:
        if event.id in containers or event.id in contained:
            continue
        out.append(node_line(event.id, "  "))
    order = {eid: i for i, eid in enumerate(catalog.ids())}
    for group in graph.exclusive_groups:
        ordered = sorted(group, key=lambda e: order[e])
        members = " ".join(_quote(e) + ";" for e in ordered)
        out.append(f"  {{ rank=same; {members} }}")
    for a, b in graph.successions:
        out.append(f"  {_quote(a)} -> {_quote(b)} [style=solid];")
    for recurrence in graph.recurrences:
        for src in recurrence.sources:
            for dst in recurrence.targets:
                out.append(
                    f"  {_quote(src)} -> {_quote(dst)} "
                    f"[style=dashed, constraint=false, label={_quote('recur')}];"
                )
    out.append("}")
    return "\n".join(out) + "\n"
