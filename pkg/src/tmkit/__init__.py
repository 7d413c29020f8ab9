"""Toolchain for executable Thinging Machine conceptual models.

Static models are authored in a small textual DSL, validated
structurally, decomposed into event regions, ordered by a behavior
graph, simulated as deterministic token flow, and accounted for with
Shannon information measures at the receiving end.
"""

from .behavior import BehaviorGraph, Verdict, build_behavior, conforms, enumerate_runs
from .dsl import Document, parse, parse_file, serialize
from .engine import EngineConfig, RuleSet, Trace, run, step, trace_events
from .events import EventCatalog, coverage_check, define_event, states_of
from .info import Distribution, empirical_info, entropy, self_information
from .model import (
    Model,
    StageKind,
    ValidationReport,
    element_census,
    subdiagram,
    validate_static,
)
from .render import RenderOptions, render

__version__ = "0.1.0"

__all__ = [
    "BehaviorGraph",
    "Distribution",
    "Document",
    "EngineConfig",
    "EventCatalog",
    "Model",
    "RenderOptions",
    "RuleSet",
    "StageKind",
    "Trace",
    "ValidationReport",
    "Verdict",
    "build_behavior",
    "conforms",
    "coverage_check",
    "define_event",
    "element_census",
    "empirical_info",
    "entropy",
    "enumerate_runs",
    "parse",
    "parse_file",
    "render",
    "run",
    "self_information",
    "serialize",
    "states_of",
    "step",
    "subdiagram",
    "trace_events",
    "validate_static",
]
