"""Shannon information accounting for outcome distributions and traces.

Self-information is measured in bits by default; a ``base`` parameter
(2, e, 10) is exposed on every operation. The 0 * log 0 = 0 convention
is applied explicitly for zero-probability outcomes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

PROB_TOLERANCE = 1e-12


class InfoDomainError(ValueError):
    """Raised for probabilities outside (0, 1] or malformed distributions."""


class EmptyObservationError(ValueError):
    """Raised when a trace contains none of the requested outcome events."""


@dataclass(frozen=True)
class Distribution:
    """Outcome labels with their probabilities.

    Probabilities must be nonnegative, sum to 1 within ``PROB_TOLERANCE``,
    and labels must be unique.
    """

    outcomes: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        labels = [label for label, _ in self.outcomes]
        if len(set(labels)) != len(labels):
            raise InfoDomainError("distribution labels must be unique")
        for label, p in self.outcomes:
            if p < 0.0 or p > 1.0:
                raise InfoDomainError(f"probability of {label!r} outside [0, 1]: {p}")
        total = sum(p for _, p in self.outcomes)
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise InfoDomainError(f"probabilities sum to {total!r}, not 1")

    @staticmethod
    def of(pairs: Iterable[tuple[str, float]]) -> "Distribution":
        return Distribution(tuple(pairs))

    def probability(self, label: str) -> float:
        for name, p in self.outcomes:
            if name == label:
                return p
        raise KeyError(label)


@dataclass(frozen=True)
class InfoReport:
    """Per-outcome self-information plus the distribution's entropy."""

    outcomes: tuple[tuple[str, float, float], ...]  # (label, probability, bits)
    entropy: float
    base: float = 2.0
    observations: int | None = None
    empirical_entropy: float | None = None

    def lines(self) -> list[str]:
        width = max([len(label) for label, _, _ in self.outcomes] + [7])
        out = [f"{'outcome':<{width}}  {'p':>12}  {'self-info':>12}"]
        for label, p, bits in self.outcomes:
            out.append(f"{label:<{width}}  {p:>12.6f}  {bits:>12.6f}")
        out.append(f"entropy: {self.entropy!r}")
        if self.observations is not None:
            out.append(f"observations: {self.observations}")
        if self.empirical_entropy is not None:
            out.append(f"empirical entropy: {self.empirical_entropy!r}")
        return out


def self_information(p: float, base: float = 2.0) -> float:
    """Information content of one outcome of probability ``p``."""
    if p <= 0.0 or p > 1.0:
        raise InfoDomainError(f"probability must be in (0, 1], got {p}")
    return -math.log(p, base)


def entropy(d: Distribution, base: float = 2.0) -> float:
    """Expected self-information of ``d``; zero-probability terms contribute 0."""
    total = 0.0
    for _, p in d.outcomes:
        if p > 0.0:
            total += p * -math.log(p, base)
    return total


def info_report(d: Distribution, base: float = 2.0) -> InfoReport:
    rows = tuple(
        (label, p, self_information(p, base) if p > 0.0 else math.inf)
        for label, p in d.outcomes
    )
    return InfoReport(outcomes=rows, entropy=entropy(d, base), base=base)


def empirical_info(
    event_sequence: Sequence[str],
    outcome_events: Iterable[str],
    base: float = 2.0,
) -> InfoReport:
    """Plug-in information report over the outcome events seen in a trace.

    Counts occurrences of each outcome event in ``event_sequence``, turns
    the relative frequencies into a Distribution, and reports entropy plus
    the observation count.
    """
    outcome_list = sorted(set(outcome_events))
    if not outcome_list:
        raise InfoDomainError("outcome event set must be nonempty")
    counts = {label: 0 for label in outcome_list}
    for event in event_sequence:
        if event in counts:
            counts[event] += 1
    n = sum(counts.values())
    if n == 0:
        raise EmptyObservationError(
            f"none of {outcome_list} observed in the event sequence"
        )
    dist = Distribution.of((label, counts[label] / n) for label in outcome_list)
    report = info_report(dist, base)
    return InfoReport(
        outcomes=report.outcomes,
        entropy=report.entropy,
        base=base,
        observations=n,
        empirical_entropy=report.entropy,
    )
