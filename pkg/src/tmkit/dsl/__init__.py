"""Text front end: ``.tm`` models, ``.tme`` events, ``.tmb`` behavior,
``.tms`` scenarios and ``.tmm`` monitor specs."""
from .lexer import Token, tokenize
from .parser import (parse_behavior, parse_events, parse_model, parse_monitor,
                     parse_scenario)

__all__ = ["Token", "tokenize", "parse_model", "parse_events", "parse_behavior",
           "parse_scenario", "parse_monitor"]
