"""Linear normal form.

Pipeline: fold task constants, rewrite every constraint to
``(sum, >=|>, 0)`` and every effect to ``:=`` / ``+=`` over weighted sums,
then remove negative weights by introducing inverted variables that track
``-1 * v``. The result is a task in which higher variable values never hurt,
which is what the relaxation and the relaxed planning graph rely on.
"""

from __future__ import annotations

import graphlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .model import (
    Action,
    BinOp,
    Condition,
    Const,
    Constraint,
    Effect,
    Expr,
    NumEffect,
    NumericTask,
    NumVar,
    Rational,
    State,
    Var,
    format_rational,
    q,
)


class NotLinear(ValueError):
    """An expression is not linear after constant folding."""


class _Undefined(Exception):
    pass


# -- linear expressions -------------------------------------------------------


@dataclass(frozen=True)
class LnfExpr:
    """``sum(coef * v) + const``; terms sorted by variable id, no zero coefficients."""

    terms: tuple = ()
    const: Rational = 0

    @classmethod
    def from_dict(cls, coeffs: dict, const: Rational = 0) -> "LnfExpr":
        terms = tuple(sorted((v, q(c)) for v, c in coeffs.items() if c != 0))
        return cls(terms, q(const))

    def evaluate(self, vals):
        total = self.const
        for v, c in self.terms:
            total += c * vals[v]
        if isinstance(total, Fraction) and total.denominator == 1:
            return total.numerator
        return total

    def variables(self) -> frozenset:
        return frozenset(v for v, _ in self.terms)

    def coeff(self, var: int) -> Rational:
        for v, c in self.terms:
            if v == var:
                return c
        return 0

    def as_dict(self) -> dict:
        return dict(self.terms)

    def negated(self) -> "LnfExpr":
        return LnfExpr(tuple((v, -c) for v, c in self.terms), -self.const)

    def __add__(self, other: "LnfExpr") -> "LnfExpr":
        d = self.as_dict()
        for v, c in other.terms:
            d[v] = d.get(v, 0) + c
        return LnfExpr.from_dict(d, self.const + other.const)

    def __sub__(self, other: "LnfExpr") -> "LnfExpr":
        return self + other.negated()

    def scaled(self, k: Rational) -> "LnfExpr":
        if k == 0:
            return LnfExpr((), 0)
        return LnfExpr(tuple((v, q(c * k)) for v, c in self.terms), q(self.const * k))

    @property
    def is_constant(self) -> bool:
        return not self.terms

    def render(self, names=None) -> str:
        parts = []
        for v, c in self.terms:
            n = names[v] if names else f"v{v}"
            parts.append(n if c == 1 else f"{format_rational(c)}*{n}")
        if self.const != 0 or not parts:
            parts.append(format_rational(self.const))
        return " + ".join(parts)

    def __str__(self):
        return self.render()


@dataclass(frozen=True)
class LnfConstraint:
    expr: LnfExpr
    comp: str = ">="  # ">=" or ">" once normalized

    @property
    def strict(self) -> bool:
        return self.comp == ">"

    def holds(self, vals) -> bool:
        x = self.expr.evaluate(vals)
        if self.comp == ">=":
            return x >= 0
        if self.comp == ">":
            return x > 0
        raise ValueError(f"comparator {self.comp!r} is not normalized")

    def holds_at(self, x) -> bool:
        return x > 0 if self.comp == ">" else x >= 0

    def variables(self) -> frozenset:
        return self.expr.variables()

    def render(self, names=None) -> str:
        return f"({self.expr.render(names)} {self.comp} 0)"

    def __str__(self):
        return self.render()


@dataclass(frozen=True)
class LnfEffect:
    var: int
    op: str  # ":=" or "+="
    rhs: LnfExpr

    def outcome(self, vals):
        r = self.rhs.evaluate(vals)
        if self.op == ":=":
            return r
        if self.op == "+=":
            x = vals[self.var] + r
            if isinstance(x, Fraction) and x.denominator == 1:
                return x.numerator
            return x
        raise ValueError(f"operator {self.op!r} is not normalized")

    def variables(self) -> frozenset:
        return self.rhs.variables()

    def render(self, names=None) -> str:
        n = names[self.var] if names else f"v{self.var}"
        return f"({n} {self.op} {self.rhs.render(names)})"

    def __str__(self):
        return self.render()


FALSE_CONSTRAINT = LnfConstraint(LnfExpr((), -1), ">=")


@dataclass(eq=False)
class LnfTask(NumericTask):
    """A task whose constraints and effects are LnfConstraint / LnfEffect.

    ``inverses`` maps each inverted variable to its partner (both ways);
    ``n_original`` is the number of variables before inversion.
    """

    inverses: dict = field(default_factory=dict)
    n_original: int = 0

    def var_names(self) -> list[str]:
        return [v.name for v in self.vars]


# -- constant folding ---------------------------------------------------------


def affected_variables(t: NumericTask) -> set[int]:
    return {ne.var for a in t.actions for ne in a.eff.numeffs}


def _fold(e: Expr, consts: dict) -> Expr:
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        if e.index in consts:
            return Const(consts[e.index])
        return e
    left = _fold(e.left, consts)
    right = _fold(e.right, consts)
    if e.op == "/" and isinstance(right, Const) and right.value == 0:
        raise _Undefined()
    if isinstance(left, Const) and isinstance(right, Const):
        v = BinOp(e.op, left, right).evaluate(())
        if v is None:
            raise _Undefined()
        return Const(v)
    return BinOp(e.op, left, right)


_FALSE = Constraint(Const(0), ">", Const(0))


def _fold_constraint(c: Constraint, consts: dict):
    """Folded constraint, True (drop), or False (never holds)."""
    try:
        lhs = _fold(c.lhs, consts)
        rhs = _fold(c.rhs, consts)
    except _Undefined:
        return False
    folded = Constraint(lhs, c.comp, rhs)
    if isinstance(lhs, Const) and isinstance(rhs, Const):
        return folded.holds(())
    return folded


def fold_constants(t: NumericTask) -> NumericTask:
    """Replace task constants by their initial values.

    Constraints that become constant are decided; an action whose
    precondition becomes false or whose effect right-hand side is undefined
    on constants is removed. Variable ids are left untouched.
    """
    affected = affected_variables(t)
    consts = {v.id: t.init.vals[v.id] for v in t.vars if v.id not in affected}
    actions = []
    for a in t.actions:
        cons = []
        dead = False
        for c in a.pre.constraints:
            r = _fold_constraint(c, consts)
            if r is False:
                dead = True
                break
            if r is not True:
                cons.append(r)
        if dead:
            continue
        effs = []
        try:
            for ne in a.eff.numeffs:
                effs.append(NumEffect(ne.var, ne.op, _fold(ne.rhs, consts)))
        except _Undefined:
            continue
        actions.append(Action(
            len(actions), a.name,
            Condition(a.pre.props, tuple(cons)),
            Effect(a.eff.adds, a.eff.dels, tuple(effs)),
            a.cost,
        ))
    goal_cons = []
    for c in t.goal.constraints:
        r = _fold_constraint(c, consts)
        if r is False:
            goal_cons = [_FALSE]
            break
        if r is not True:
            goal_cons.append(r)
    return NumericTask(
        t.props, t.vars, actions, t.init,
        Condition(t.goal.props, tuple(goal_cons)), t.metric, t.name,
    )


# -- pre-LNF ------------------------------------------------------------------


def linearize(e: Expr) -> LnfExpr:
    """Weighted-sum form of ``e``; raises NotLinear on products or quotients
    of non-constant subexpressions."""
    if isinstance(e, Const):
        return LnfExpr((), e.value)
    if isinstance(e, Var):
        return LnfExpr(((e.index, 1),), 0)
    a = linearize(e.left)
    b = linearize(e.right)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        if a.is_constant:
            return b.scaled(a.const)
        if b.is_constant:
            return a.scaled(b.const)
        raise NotLinear(f"product of non-constant expressions: {e}")
    if not b.is_constant:
        raise NotLinear(f"division by a non-constant expression: {e}")
    if b.const == 0:
        raise _Undefined()
    return a.scaled(Fraction(1) / b.const)


def _normalize_constraint(c: Constraint) -> list:
    """LnfConstraints equivalent to ``c`` (weights may still be negative).

    Returns None when the constraint is constantly false.
    """
    d = linearize(c.lhs) - linearize(c.rhs)
    if c.comp == ">=":
        out = [LnfConstraint(d, ">=")]
    elif c.comp == ">":
        out = [LnfConstraint(d, ">")]
    elif c.comp == "<=":
        out = [LnfConstraint(d.negated(), ">=")]
    elif c.comp == "<":
        out = [LnfConstraint(d.negated(), ">")]
    else:
        out = [LnfConstraint(d, ">="), LnfConstraint(d.negated(), ">=")]
    kept = []
    for lc in out:
        if lc.expr.is_constant:
            if not lc.holds(()):
                return None
            continue
        kept.append(lc)
    return kept


def to_pre_lnf(t: NumericTask) -> LnfTask:
    """Comparator and effect normalization; weights may be negative afterwards."""
    actions = []
    for a in t.actions:
        cons = []
        dead = False
        for c in a.pre.constraints:
            try:
                r = _normalize_constraint(c)
            except _Undefined:
                r = None
            if r is None:
                dead = True
                break
            cons.extend(r)
        if dead:
            continue
        effs = []
        try:
            for ne in a.eff.numeffs:
                rhs = linearize(ne.rhs)
                if ne.op == "-=":
                    effs.append(LnfEffect(ne.var, "+=", rhs.negated()))
                else:
                    effs.append(LnfEffect(ne.var, ne.op, rhs))
        except _Undefined:
            continue
        actions.append(Action(
            len(actions), a.name,
            Condition(a.pre.props, tuple(_dedupe(cons))),
            Effect(a.eff.adds, a.eff.dels, tuple(effs)),
            a.cost,
        ))
    goal_cons = []
    for c in t.goal.constraints:
        try:
            r = _normalize_constraint(c)
        except _Undefined:
            r = None
        if r is None:
            goal_cons = [FALSE_CONSTRAINT]
            break
        goal_cons.extend(r)
    return LnfTask(
        t.props, list(t.vars), actions, t.init,
        Condition(t.goal.props, tuple(_dedupe(goal_cons))), t.metric, t.name,
        inverses={}, n_original=len(t.vars),
    )


def _dedupe(items):
    seen = set()
    out = []
    for x in items:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


# -- inverted variables -------------------------------------------------------


def _rewrite(e: LnfExpr, inv: dict) -> LnfExpr:
    if all(c > 0 or v not in inv for v, c in e.terms):
        return e
    d: dict = {}
    for v, c in e.terms:
        if c < 0 and v in inv:
            w = inv[v]
            d[w] = d.get(w, 0) - c
        else:
            d[v] = d.get(v, 0) + c
    return LnfExpr.from_dict(d, e.const)


def _negative_vars(e: LnfExpr) -> Iterable[int]:
    return (v for v, c in e.terms if c < 0)


def invert_negatives(t: LnfTask) -> LnfTask:
    """Eliminate negative weights by introducing inverted variables.

    The lowest-id variable with a negative occurrence is inverted first
    (constraints are scanned before effect right-hand sides); inverses are
    created only for variables actually used negatively and reused for every
    occurrence.
    """
    vars_ = list(t.vars)
    init = list(t.init.vals)
    inv = dict(t.inverses)
    acts = [(a, list(a.pre.constraints), list(a.eff.numeffs)) for a in t.actions]
    goal = list(t.goal.constraints)

    def first_negative() -> Optional[int]:
        best = None
        for c in goal:
            for v in _negative_vars(c.expr):
                if best is None or v < best:
                    best = v
        for _, cons, _ in acts:
            for c in cons:
                for v in _negative_vars(c.expr):
                    if best is None or v < best:
                        best = v
        if best is not None:
            return best
        for _, _, effs in acts:
            for e in effs:
                for v in _negative_vars(e.rhs):
                    if best is None or v < best:
                        best = v
        return best

    while True:
        v = first_negative()
        if v is None:
            break
        if v in inv:  # pragma: no cover - rewrite below removes these
            raise AssertionError("negative occurrence of an already inverted variable")
        nv = len(vars_)
        vars_[v] = NumVar(v, vars_[v].name, nv)
        vars_.append(NumVar(nv, "-" + vars_[v].name, v))
        init.append(-init[v])
        inv[v] = nv
        inv[nv] = v
        for _, _, effs in acts:
            mirrored = [LnfEffect(nv, e.op, e.rhs.negated()) for e in effs if e.var == v]
            effs.extend(mirrored)
        goal = [LnfConstraint(_rewrite(c.expr, inv), c.comp) for c in goal]
        for i, (a, cons, effs) in enumerate(acts):
            acts[i] = (
                a,
                [LnfConstraint(_rewrite(c.expr, inv), c.comp) for c in cons],
                [LnfEffect(e.var, e.op, _rewrite(e.rhs, inv)) for e in effs],
            )

    actions = [
        Action(a.id, a.name, Condition(a.pre.props, tuple(_dedupe(cons))),
               Effect(a.eff.adds, a.eff.dels, tuple(effs)), a.cost)
        for a, cons, effs in acts
    ]
    return LnfTask(
        t.props, vars_, actions, State(t.init.props, tuple(init)),
        Condition(t.goal.props, tuple(_dedupe(goal))), t.metric, t.name,
        inverses=inv, n_original=t.n_original,
    )


def to_lnf(t: NumericTask) -> LnfTask:
    """fold_constants -> to_pre_lnf -> invert_negatives."""
    return invert_negatives(to_pre_lnf(fold_constants(t)))


# -- analyses -----------------------------------------------------------------


@dataclass
class AssignDepGraph:
    vertices: list
    edges: set  # (i, j): some := effect on j mentions i

    def successors(self, i: int) -> list:
        return sorted(j for (a, j) in self.edges if a == i)

    def predecessors(self, j: int) -> list:
        return sorted(i for (i, b) in self.edges if b == j)


def assign_dep_graph(t: NumericTask) -> AssignDepGraph:
    edges = set()
    for a in t.actions:
        for e in a.eff.numeffs:
            if e.op == ":=":
                for i in e.variables():
                    edges.add((i, e.var))
    return AssignDepGraph(list(range(t.n_vars)), edges)


def check_acyclic(t: NumericTask) -> tuple[AssignDepGraph, bool]:
    g = assign_dep_graph(t)
    sorter = graphlib.TopologicalSorter({v: () for v in g.vertices})
    for i, j in g.edges:
        sorter.add(j, i)
    try:
        sorter.prepare()
    except graphlib.CycleError:
        return g, False
    return g, True


def cyclic_variables(g: AssignDepGraph) -> set:
    """Variables on a := cycle or with a := path into one.

    These are exactly the variables whose recursive mneed definition is not
    well-founded.
    """
    succ: dict = {}
    for i, j in g.edges:
        succ.setdefault(i, set()).add(j)

    def reach(start):
        seen = set()
        stack = list(succ.get(start, ()))
        while stack:
            x = stack.pop()
            if x not in seen:
                seen.add(x)
                stack.extend(succ.get(x, ()))
        return seen

    reachable = {v: reach(v) for v in g.vertices}
    on_cycle = {v for v in g.vertices if v in reachable[v]}
    return {v for v in g.vertices if v in on_cycle or reachable[v] & on_cycle}


def compute_relevance(t: NumericTask) -> frozenset:
    """Least set containing every constraint variable and closed under
    "occurs in the right-hand side of an effect on a relevant variable"."""
    rv = set()
    for c in t.goal.constraints:
        rv |= c.variables()
    for a in t.actions:
        for c in a.pre.constraints:
            rv |= c.variables()
    effects = [e for a in t.actions for e in a.eff.numeffs]
    changed = True
    while changed:
        changed = False
        for e in effects:
            if e.var in rv:
                new = e.variables() - rv
                if new:
                    rv |= new
                    changed = True
    return frozenset(rv)


@dataclass
class LnfReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _check_expr(e, where: str, out: list):
    if not isinstance(e, LnfExpr):
        out.append(f"{where}: not a weighted sum")
        return
    for v, c in e.terms:
        if c <= 0:
            out.append(f"{where}: non-positive weight {format_rational(c)} on v{v}")


def verify_lnf(t: NumericTask) -> LnfReport:
    """Syntactic LNF check: positive weights, >=/> against 0, ops := / +=."""
    out: list = []

    def check_constraints(cons, where):
        for c in cons:
            if not isinstance(c, LnfConstraint):
                out.append(f"{where}: constraint {c} is not in normal form")
                continue
            if c.comp not in (">=", ">"):
                out.append(f"{where}: comparator {c.comp!r} in {c}")
            _check_expr(c.expr, f"{where}: {c}", out)

    check_constraints(t.goal.constraints, "goal")
    for a in t.actions:
        check_constraints(a.pre.constraints, a.name)
        for e in a.eff.numeffs:
            if not isinstance(e, LnfEffect):
                out.append(f"{a.name}: effect {e} is not in normal form")
                continue
            if e.op not in (":=", "+="):
                out.append(f"{a.name}: operator {e.op!r} in {e}")
            _check_expr(e.rhs, f"{a.name}: {e}", out)
    inverses = getattr(t, "inverses", {})
    for v, w in inverses.items():
        if inverses.get(w) != v:
            out.append(f"inversion map is not symmetric for v{v}")
        elif t.init.vals[w] != -t.init.vals[v]:
            out.append(f"initial value of v{w} is not -1 * v{v}")
    return LnfReport(out)


def analyze(t: NumericTask) -> dict:
    """Summary used by the ``analyze`` command."""
    lt = to_lnf(t)
    graph, acyclic = check_acyclic(lt)
    rv = compute_relevance(lt)
    names = lt.var_names()
    report = verify_lnf(lt)
    inv_pairs = sorted(
        (names[v], names[w]) for v, w in lt.inverses.items() if v < w
    )
    return {
        "propositions": len(lt.props),
        "variables": len(lt.vars),
        "original_variables": lt.n_original,
        "actions": len(lt.actions),
        "ground_actions": len(t.actions),
        "lnf_ok": report.ok,
        "lnf_violations": report.violations,
        "inversions": inv_pairs,
        "assign_edges": sorted((names[i], names[j]) for i, j in graph.edges),
        "acyclic": acyclic,
        "relevant": sorted(names[v] for v in rv),
        "task": lt,
    }
