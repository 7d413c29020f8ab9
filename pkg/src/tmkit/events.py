"""Events as time-instantiable regions of a static model.

An event is a labeled, weakly connected subdiagram. Catalogs keep the
authored order; coverage checking partitions the model's elements into
covered and uncovered sets and lists every overlapping pair of regions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .model import Model, Region, subdiagram


class EventError(ValueError):
    pass


class DisconnectedRegionError(EventError):
    pass


class DuplicateEventError(EventError):
    pass


@dataclass(frozen=True)
class Event:
    id: str
    description: str
    region: Region
    data_emitting: bool = False


@dataclass(frozen=True)
class EventCatalog:
    model: Model
    events: tuple[Event, ...] = ()

    def event_map(self) -> Mapping[str, Event]:
        return {e.id: e for e in self.events}

    def ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.events)

    def with_event(self, event: Event) -> "EventCatalog":
        if event.id in self.event_map():
            raise DuplicateEventError(f"event id {event.id!r} already defined")
        return EventCatalog(self.model, self.events + (event,))


def define_event(
    model: Model,
    elements: Iterable[str],
    event_id: str,
    description: str,
    data_emitting: bool = False,
    allow_disconnected: bool = False,
) -> Event:
    """Build an event whose region is the induced subdiagram of ``elements``.

    Disconnected regions are rejected unless ``allow_disconnected`` is set
    (exploratory use only; bundled catalogs never need it).
    """
    element_list = list(elements)
    if not element_list:
        raise EventError(f"event {event_id!r} needs a nonempty element set")
    region = subdiagram(model, element_list)
    if not region.connected and not allow_disconnected:
        raise DisconnectedRegionError(
            f"region of event {event_id!r} is not weakly connected"
        )
    return Event(id=event_id, description=description, region=region,
                 data_emitting=data_emitting)


@dataclass(frozen=True)
class CoverageReport:
    covered: frozenset[str]
    uncovered: frozenset[str]
    overlaps: tuple[tuple[str, str, frozenset[str]], ...]

    def lines(self) -> list[str]:
        out = [
            f"covered: {len(self.covered)}",
            f"uncovered: {len(self.uncovered)}",
        ]
        out.extend(f"  missing {e}" for e in sorted(self.uncovered))
        out.append(f"overlapping pairs: {len(self.overlaps)}")
        out.extend(
            f"  {a} and {b} share {len(shared)} element(s)"
            for a, b, shared in self.overlaps
        )
        return out


def coverage_check(catalog: EventCatalog) -> CoverageReport:
    """Partition the model's elements by region membership.

    covered and uncovered are disjoint and their union is the model's
    element set; overlaps lists every event pair with a nonempty
    intersection, in catalog order.
    """
    all_ids = catalog.model.element_ids()
    covered: set[str] = set()
    for event in catalog.events:
        covered.update(event.region.elements)
    overlaps: list[tuple[str, str, frozenset[str]]] = []
    for i, first in enumerate(catalog.events):
        for second in catalog.events[i + 1:]:
            shared = first.region.elements & second.region.elements
            if shared:
                overlaps.append((first.id, second.id, frozenset(shared)))
    return CoverageReport(
        covered=frozenset(covered),
        uncovered=frozenset(all_ids - covered),
        overlaps=tuple(overlaps),
    )


def states_of(catalog: EventCatalog) -> tuple[tuple[str, str], ...]:
    """The catalog's events as states: (id, description) minus any timing."""
    return tuple((e.id, e.description) for e in catalog.events)


def stage_event_map(catalog: EventCatalog) -> Mapping[str, str]:
    """Resolve each stage to the single event that labels its firings.

    Regions may overlap (containing events span their parts), so the most
    specific region wins: smallest element count, ties broken by catalog
    order. Stages outside every region are absent from the mapping.
    """
    best: dict[str, tuple[int, int, str]] = {}
    for index, event in enumerate(catalog.events):
        size = len(event.region.elements)
        for element in event.region.elements:
            claim = (size, index, event.id)
            if element not in best or claim < best[element]:
                best[element] = claim
    stage_ids = {s.id for s in catalog.model.stages}
    return {elem: claim[2] for elem, claim in best.items() if elem in stage_ids}
