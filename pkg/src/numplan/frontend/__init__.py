"""PDDL subset reader and grounder."""

from .grounding import StaticsReport, find_statics, ground_task, load_task
from .parser import (
    Domain,
    OperatorSchema,
    ParsedTask,
    ParseError,
    Problem,
    UninitializedFluent,
    UnsupportedFeature,
    parse_domain,
    parse_problem,
    parse_task,
)

__all__ = [
    "Domain", "OperatorSchema", "ParsedTask", "ParseError", "Problem",
    "StaticsReport", "UninitializedFluent", "UnsupportedFeature",
    "find_statics", "ground_task", "load_task", "parse_domain",
    "parse_problem", "parse_task",
]
