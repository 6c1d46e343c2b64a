"""Plan checking under real and relaxed semantics, metric evaluation and
the plan file format."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .model import (
    ExecutionError,
    NotApplicable,
    NumericTask,
    Plan,
    Rational,
    State,
    UndefinedEffect,
    apply_action,
    format_rational,
    is_goal,
)
from .relaxation import relaxed_apply


class PlanFormatError(ValueError):
    pass


@dataclass
class Verdict:
    valid: bool
    failing_step: Optional[int] = None
    reason: str = ""
    final_state: Optional[State] = None
    metric: Optional[Rational] = None

    def describe(self) -> str:
        if self.valid:
            return "plan valid"
        if self.failing_step is None:
            return f"plan invalid: {self.reason}"
        return f"plan invalid at step {self.failing_step}: {self.reason}"


def metric_value(t: NumericTask, s: State) -> Optional[Rational]:
    """Value of the metric expression in ``s`` (as written, not negated)."""
    if t.metric is None:
        return None
    return t.metric.expr.evaluate(s.vals)


def _steps(p) -> list:
    return list(p.steps) if isinstance(p, Plan) else list(p)


def _replay(t: NumericTask, p, step_fn) -> Verdict:
    s = t.init
    for i, a_id in enumerate(_steps(p)):
        if not 0 <= a_id < len(t.actions):
            return Verdict(False, i, f"unknown action id {a_id}", s)
        a = t.actions[a_id]
        try:
            s = step_fn(s, a)
        except NotApplicable:
            return Verdict(False, i, f"{a.name} is not applicable", s)
        except UndefinedEffect as exc:
            return Verdict(False, i, f"{a.name} has an undefined effect ({exc})", s)
        except ExecutionError as exc:  # pragma: no cover - no other subclasses
            return Verdict(False, i, str(exc), s)
    if not is_goal(s, t):
        return Verdict(False, None, "goal not satisfied in the final state", s,
                       metric_value(t, s))
    return Verdict(True, None, "", s, metric_value(t, s))


def validate_plan(t: NumericTask, p) -> Verdict:
    """Replay ``p`` with real semantics from the initial state."""
    return _replay(t, p, apply_action)


def validate_relaxed(t: NumericTask, p) -> Verdict:
    """Replay ``p`` with relaxed semantics (deletes and decreases ignored)."""
    return _replay(t, p, relaxed_apply)


# -- plan text ------------------------------------------------------------------

_STEP = re.compile(r"^\s*(?:\d+\s*:\s*)?(\(.*\))\s*$")


def normalize_name(text: str) -> str:
    inner = text.strip().lower()
    if inner.startswith("(") and inner.endswith(")"):
        inner = inner[1:-1]
    return "(" + " ".join(inner.split()) + ")"


def parse_plan(text: str, t: NumericTask) -> Plan:
    """Read a plan file: one ``[<index>:] (<name> <args>)`` per line,
    ``;`` comments ignored."""
    steps = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        m = _STEP.match(line)
        if not m:
            raise PlanFormatError(f"line {lineno}: cannot read plan step {raw.strip()!r}")
        name = normalize_name(m.group(1))
        a = t.action_by_name(name)
        if a is None:
            raise PlanFormatError(f"line {lineno}: unknown action {name}")
        steps.append(a.id)
    return Plan(steps)


def format_plan(t: NumericTask, p, metric: Optional[Rational] = None) -> str:
    steps = _steps(p)
    lines = [f"{i}: {t.actions[a].name}" for i, a in enumerate(steps)]
    lines.append(f"; length={len(steps)}")
    if metric is not None:
        lines.append(f"; metric={format_rational(metric)}")
    return "\n".join(lines) + "\n"
