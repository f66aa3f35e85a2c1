"""Executable thinging-machine models.

Four layers, each in its own file kind: a static model (``.tm``), an event
layer over it (``.tme``), a behavior graph over the events (``.tmb``), and
scenarios (``.tms``) that drive the deterministic engine.  Monitor specs
(``.tmm``) turn occurrences into bitemporal records.
"""
from .core import StaticModel, fixed, ref, resolve, stage_graph
from .diagnostics import Diagnostic, ParseError, SourcePos, TMRuntimeError
from .dsl import parse_behavior, parse_events, parse_model, parse_monitor, parse_scenario
from .engine import EngineOptions, Trace, run
from .temporal import MonitorSpec, TemporalStore

__version__ = "0.1.0"
