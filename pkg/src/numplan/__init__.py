"""Forward state-space planner for numeric planning tasks."""

__version__ = "0.1.0"
