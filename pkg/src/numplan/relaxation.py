"""Relaxed semantics and polynomial relaxed-solvability deciders.

Under the relaxation, delete lists are ignored and a numeric effect is only
applied when it strictly raises the affected variable. The deciders work on
value vectors that may contain ``math.inf``; with positive weights only, an
LnfExpr that mentions an infinite variable evaluates to ``inf`` through plain
arithmetic, which is the divergence limit the deciders need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .lnf import (
    LnfConstraint,
    LnfEffect,
    LnfTask,
    NotLinear,
    _normalize_constraint,
    _Undefined,
    check_acyclic,
    fold_constants,
    linearize,
    verify_lnf,
)
from .model import (
    Action,
    Const,
    Constraint,
    NotApplicable,
    NumEffect,
    NumericTask,
    State,
    UndefinedEffect,
    Var,
    is_applicable,
)

INF = math.inf


class MalformedInput(ValueError):
    """The task is outside the language a decider accepts."""


# -- relaxed transition -------------------------------------------------------


def relaxed_successor(s: State, a: Action) -> Optional[State]:
    """result+(s, a), or None if ``a`` is not applicable (or undefined) in s."""
    if a.pre_mask & ~s.props:
        return None
    vals = s.vals
    for c in a.pre.constraints:
        if not c.holds(vals):
            return None
    numeffs = a.eff.numeffs
    if numeffs:
        new = list(vals)
        for ne in numeffs:
            v = ne.outcome(vals)
            if v is None:
                return None
            if v > vals[ne.var]:
                new[ne.var] = v
        vals = tuple(new)
    return State(s.props | a.add_mask, vals)


def relaxed_apply(s: State, a: Action) -> State:
    """result+(s, a); raises like :func:`model.apply_action`."""
    if not is_applicable(s, a):
        raise NotApplicable(a.name)
    r = relaxed_successor(s, a)
    if r is None:
        raise UndefinedEffect(a.name)
    return r


def relaxed_result(s: State, actions) -> State:
    for a in actions:
        s = relaxed_apply(s, a)
    return s


# -- deciders -----------------------------------------------------------------


@dataclass
class RelaxedFixpoint:
    M: int
    m: tuple
    iterations: int
    verdict: str  # "solvable" | "unsolvable"
    history: list = field(default_factory=list, repr=False)

    @property
    def solvable(self) -> bool:
        return self.verdict == "solvable"


def _restricted_constraint(c):
    """(var, strict, bound) for a constraint of the form v >=|> bound."""
    if isinstance(c, Constraint):
        if isinstance(c.lhs, Var) and isinstance(c.rhs, Const) and c.comp in (">=", ">"):
            return c.lhs.index, c.comp == ">", c.rhs.value
        return None
    if isinstance(c, LnfConstraint) and len(c.expr.terms) == 1:
        v, k = c.expr.terms[0]
        if k > 0:
            return v, c.strict, Fraction(-c.expr.const) / k
    return None


def _restricted_effect(e):
    """(var, delta) for v += c / v -= c with a nonzero constant."""
    if isinstance(e, NumEffect):
        if e.op in ("+=", "-=") and isinstance(e.rhs, Const) and e.rhs.value > 0:
            return e.var, e.rhs.value if e.op == "+=" else -e.rhs.value
        return None
    if isinstance(e, LnfEffect) and e.op == "+=" and e.rhs.is_constant and e.rhs.const != 0:
        return e.var, e.rhs.const
    return None


def is_restricted(t: NumericTask) -> bool:
    try:
        _restricted_view(t)
    except MalformedInput:
        return False
    return True


def _restricted_view(t: NumericTask):
    def cons(cs, where):
        out = []
        for c in cs:
            r = _restricted_constraint(c)
            if r is None:
                raise MalformedInput(f"{where}: constraint {c} is not of the form v >=|> c")
            out.append(r)
        return out

    goal = cons(t.goal.constraints, "goal")
    acts = []
    for a in t.actions:
        effs = []
        for e in a.eff.numeffs:
            r = _restricted_effect(e)
            if r is None:
                raise MalformedInput(f"{a.name}: effect {e} is not += / -= of a positive constant")
            effs.append(r)
        acts.append((a, cons(a.pre.constraints, a.name), effs))
    return goal, acts


def _bound_holds(m, var, strict, bound) -> bool:
    x = m[var]
    return x > bound if strict else x >= bound


def decide_restricted(t: NumericTask, s: State) -> RelaxedFixpoint:
    """Relaxed solvability for tasks whose constraints compare single
    variables to constants and whose effects add or subtract positive
    constants. Any available increase sends its variable to infinity."""
    goal, acts = _restricted_view(t)
    M, m = s.props, list(s.vals)
    it = 0
    history = [(M, tuple(m))]

    def sat(mask, cons):
        return not (mask & ~M) and all(_bound_holds(m, *c) for c in cons)

    while not sat(t.goal_mask, goal):
        avail = [(a, effs) for a, cons, effs in acts if sat(a.pre_mask, cons)]
        M2 = M
        m2 = list(m)
        for a, effs in avail:
            M2 |= a.add_mask
            for var, delta in effs:
                if delta > 0 and m[var] != INF:
                    m2[var] = INF
        it += 1
        if M2 == M and m2 == m:
            return RelaxedFixpoint(M, tuple(m), it, "unsolvable", history)
        M, m = M2, m2
        history.append((M, tuple(m)))
    return RelaxedFixpoint(M, tuple(m), it, "solvable", history)


class PreconditionViolation(ValueError):
    """Input does not satisfy a decider's structural precondition."""


def decide_strong(t: LnfTask, s: State, check: bool = True) -> RelaxedFixpoint:
    """Relaxed solvability for LNF tasks with acyclic := effects.

    A += effect that raises its variable once can raise it without bound, so
    the variable jumps to infinity; := effects raise a variable to the best
    available assigned value.
    """
    if check:
        rep = verify_lnf(t)
        if not rep.ok:
            raise PreconditionViolation("task is not in LNF: " + "; ".join(rep.violations))
        if not check_acyclic(t)[1]:
            raise PreconditionViolation("cyclic := effects")
    M, m = s.props, list(s.vals)
    it = 0
    history = [(M, tuple(m))]
    bound = len(t.props) + t.n_vars + t.n_vars * len(t.actions) + 1

    def sat(mask, cons):
        if mask & ~M:
            return False
        return all(c.holds(m) for c in cons)

    while not sat(t.goal_mask, t.goal.constraints):
        avail = [a for a in t.actions if sat(a.pre_mask, a.pre.constraints)]
        M2 = M
        m2 = list(m)
        assigned: dict = {}
        for a in avail:
            M2 |= a.add_mask
            for e in a.eff.numeffs:
                i = e.var
                if m[i] == INF:
                    continue
                if e.op == "+=":
                    if e.rhs.evaluate(m) > 0:
                        m2[i] = INF
                else:
                    x = e.rhs.evaluate(m)
                    if x > m[i] and (i not in assigned or x > assigned[i]):
                        assigned[i] = x
        for i, x in assigned.items():
            # an infinite value set by an increase stays
            m2[i] = max(m2[i], x)
        it += 1
        if M2 == M and m2 == m:
            return RelaxedFixpoint(M, tuple(m), it, "unsolvable", history)
        M, m = M2, m2
        history.append((M, tuple(m)))
        if it > bound:  # pragma: no cover - excluded by the iteration bound
            raise AssertionError("relaxed fixpoint exceeded its iteration bound")
    return RelaxedFixpoint(M, tuple(m), it, "solvable", history)


# -- structural monotonicity ----------------------------------------------------


@dataclass
class MonotonicityItem:
    where: str
    text: str
    monotone: Optional[bool]  # None: not linear, not judged
    reason: str = ""


@dataclass
class MonotonicityReport:
    items: list

    @property
    def flagged(self) -> list:
        return [i for i in self.items if i.monotone is not True]

    @property
    def ok(self) -> bool:
        return not self.flagged


def _judge_constraint(lc: LnfConstraint):
    neg = [v for v, c in lc.expr.terms if c < 0]
    if lc.comp not in (">=", ">"):
        return False, f"comparator {lc.comp}"
    if neg:
        return False, "decreasing in " + ", ".join(f"v{v}" for v in neg)
    return True, ""


def _judge_effect(e: LnfEffect):
    if e.op not in (":=", "+="):
        return False, f"operator {e.op}"
    neg = [v for v, c in e.rhs.terms if c < 0]
    if neg:
        return False, "added value decreases in " + ", ".join(f"v{v}" for v in neg)
    return True, ""


def check_monotonic_structure(t: NumericTask) -> MonotonicityReport:
    """Syntactic monotonicity check for linear tasks.

    Every constraint and effect is brought into weighted-sum form; an item is
    monotone when all weights are positive, constraints compare ``>=``/``>``
    against 0, and effects are ``:=`` or ``+=``. Nonlinear items are reported
    with ``monotone=None``.
    """
    if not isinstance(t, LnfTask):
        t = fold_constants(t)
    items = []

    def add_constraint(c, where):
        if isinstance(c, LnfConstraint):
            parts = [c]
        else:
            try:
                parts = _normalize_constraint(c) or []
            except NotLinear as exc:
                items.append(MonotonicityItem(where, str(c), None, str(exc)))
                return
            except _Undefined:
                parts = []
        for lc in parts:
            ok, why = _judge_constraint(lc)
            items.append(MonotonicityItem(where, str(lc), ok, why))

    def add_effect(e, where):
        if isinstance(e, LnfEffect):
            le = e
        else:
            try:
                rhs = linearize(e.rhs)
            except NotLinear as exc:
                items.append(MonotonicityItem(where, str(e), None, str(exc)))
                return
            except _Undefined:
                return
            le = LnfEffect(e.var, "+=", rhs.negated()) if e.op == "-=" else LnfEffect(e.var, e.op, rhs)
        ok, why = _judge_effect(le)
        items.append(MonotonicityItem(where, str(le), ok, why))

    for c in t.goal.constraints:
        add_constraint(c, "goal")
    for a in t.actions:
        for c in a.pre.constraints:
            add_constraint(c, a.name)
        for e in a.eff.numeffs:
            add_effect(e, a.name)
    return MonotonicityReport(items)
