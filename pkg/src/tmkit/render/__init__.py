"""DOT diagrams and the canonical DSL serializer."""
from .dot import dot_behavior, dot_events, dot_static
from .text import (format_behavior, format_events, format_expr, format_model, format_monitor,
                   format_scenario)

__all__ = ["dot_static", "dot_events", "dot_behavior", "format_model", "format_events",
           "format_behavior", "format_scenario", "format_monitor", "format_expr"]
