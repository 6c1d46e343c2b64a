"""Instantiate operator schemata into a ground NumericTask.

Static predicates and fluents (never touched by any effect) are evaluated
against the initial state during instantiation, so instantiations with a
false static precondition are never generated. Actions whose propositional
preconditions are unreachable from the initial state, ignoring all numeric
constructs, are removed afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from ..model import (
    Action,
    BinOp,
    Condition,
    Const,
    Constraint,
    Effect,
    MetricSpec,
    NumEffect,
    NumericTask,
    NumVar,
    State,
    Var,
)
from .parser import (
    Comparison,
    Domain,
    OperatorSchema,
    ParsedTask,
    ParseError,
    Problem,
    UninitializedFluent,
    parse_task,
)

_FALSE = Constraint(Const(0), ">", Const(0))


@dataclass
class StaticsReport:
    predicates: frozenset
    fluents: frozenset


def find_statics(dom: Domain) -> StaticsReport:
    changed_preds = set()
    changed_fluents = set()
    for op in dom.operators:
        changed_preds.update(a.pred for a in op.add)
        changed_preds.update(a.pred for a in op.delete)
        changed_fluents.update(u.fluent[0] for u in op.updates)
    return StaticsReport(
        frozenset(p for p in dom.predicates if p not in changed_preds),
        frozenset(f for f in dom.functions if f not in changed_fluents),
    )


def _objects_by_type(dom: Domain, prob: Problem) -> dict:
    parents = dom.types

    def ancestors(t):
        seen = []
        while t is not None and t not in seen:
            seen.append(t)
            t = parents.get(t, "object" if t != "object" else None)
        return seen

    by_type: dict = {t: [] for t in parents}
    for name, typ in list(dom.constants) + list(prob.objects):
        if typ not in parents:
            raise ParseError(f"object {name} has unknown type {typ!r}")
        for t in ancestors(typ):
            lst = by_type.setdefault(t, [])
            if name not in lst:
                lst.append(name)
    return by_type


def _subst(args, binding):
    return tuple(binding.get(a, a) for a in args)


class _Grounder:
    def __init__(self, parsed: ParsedTask):
        self.dom = parsed.domain
        self.prob = parsed.problem
        self.statics = find_statics(self.dom)
        self.by_type = _objects_by_type(self.dom, self.prob)
        self.init_atoms = {(a.pred, a.args) for a in self.prob.init_atoms}
        self.init_values = dict(self.prob.init_values)
        self.prop_ids: dict = {}
        self.prop_names: list = []
        self.var_ids: dict = {}
        self.var_keys: list = []

    # ids are provisional here; the final task renumbers densely
    def prop(self, key) -> int:
        i = self.prop_ids.get(key)
        if i is None:
            i = len(self.prop_names)
            self.prop_ids[key] = i
            self.prop_names.append(key)
        return i

    def var(self, key) -> int:
        if key not in self.init_values:
            raise UninitializedFluent(
                f"fluent ({' '.join((key[0],) + key[1])}) has no initial value")
        i = self.var_ids.get(key)
        if i is None:
            i = len(self.var_keys)
            self.var_ids[key] = i
            self.var_keys.append(key)
        return i

    def expr(self, e, binding) -> "Const | Var | BinOp":
        kind = e[0]
        if kind == "num":
            return Const(e[1])
        if kind == "fluent":
            key = (e[1], _subst(e[2], binding))
            if e[1] in self.statics.fluents:
                if key not in self.init_values:
                    raise UninitializedFluent(
                        f"fluent ({' '.join((key[0],) + key[1])}) has no initial value")
                return Const(self.init_values[key])
            return Var(self.var(key))
        left = self.expr(e[2], binding)
        right = self.expr(e[3], binding)
        if isinstance(left, Const) and isinstance(right, Const):
            v = BinOp(e[1], left, right).evaluate(())
            if v is not None:
                return Const(v)
        return BinOp(e[1], left, right)

    def comparison(self, c: Comparison, binding):
        """Ground constraint, or True / False when decided statically."""
        con = Constraint(self.expr(c.lhs, binding), c.comp, self.expr(c.rhs, binding))
        if not con.variables():
            return con.holds(())
        return con

    def static_atom_true(self, atom, binding) -> bool:
        return (atom.pred, _subst(atom.args, binding)) in self.init_atoms

    def bindings(self, op: OperatorSchema) -> Iterator[dict]:
        """Type-consistent bindings, pruned early by static atoms."""
        params = op.params
        static_atoms = [a for a in op.pre_atoms if a.pred in self.statics.predicates]
        # check each static atom as soon as its last parameter is bound
        order = {p: i for i, (p, _) in enumerate(params)}
        checks: list = [[] for _ in params]
        for a in static_atoms:
            idx = [order[x] for x in a.args if x in order]
            if idx:
                checks[max(idx)].append(a)
        ground_static = [a for a in static_atoms if not any(x in order for x in a.args)]
        if any(not self.static_atom_true(a, {}) for a in ground_static):
            return
        binding: dict = {}

        def rec(i):
            if i == len(params):
                yield dict(binding)
                return
            name, typ = params[i]
            for obj in self.by_type.get(typ, ()):
                binding[name] = obj
                if all(self.static_atom_true(a, binding) for a in checks[i]):
                    yield from rec(i + 1)
            binding.pop(name, None)

        yield from rec(0)

    def ground_op(self, op: OperatorSchema, binding: dict):
        cons = []
        for c in op.pre_comparisons:
            r = self.comparison(c, binding)
            if r is False:
                return None
            if r is not True:
                cons.append(r)
        pre = set()
        for a in op.pre_atoms:
            if a.pred in self.statics.predicates:
                continue  # already checked in bindings()
            pre.add(self.prop((a.pred, _subst(a.args, binding))))
        adds = {self.prop((a.pred, _subst(a.args, binding))) for a in op.add}
        dels = {self.prop((a.pred, _subst(a.args, binding))) for a in op.delete}
        merged: dict = {}
        for u in op.updates:
            v = self.var((u.fluent[0], _subst(u.fluent[1], binding)))
            rhs = self.expr(u.rhs, binding)
            if v in merged:
                op0, rhs0 = merged[v]
                if ":=" in (op0, u.op):
                    raise ParseError(
                        f"action {op.name}: conflicting assignments to one fluent")
                # commutative updates on the same fluent merge into one
                sign = lambda o, r: r if o == "+=" else BinOp("-", Const(0), r)
                merged[v] = ("+=", BinOp("+", sign(op0, rhs0), sign(u.op, rhs)))
            else:
                merged[v] = (u.op, rhs)
        numeffs = tuple(NumEffect(v, o, r) for v, (o, r) in merged.items())
        name = "(" + " ".join([op.name] + [binding[p] for p, _ in op.params]) + ")"
        return name, pre, tuple(cons), adds - set(), dels, numeffs


def ground_task(parsed: ParsedTask) -> NumericTask:
    g = _Grounder(parsed)
    raw = []
    for op in g.dom.operators:
        for b in g.bindings(op):
            r = g.ground_op(op, b)
            if r is not None:
                raw.append(r)

    goal_props = set()
    goal_false = False
    for a in g.prob.goal_atoms:
        if a.pred in g.statics.predicates:
            if (a.pred, a.args) not in g.init_atoms:
                goal_false = True
            continue
        goal_props.add(g.prop((a.pred, a.args)))
    goal_cons = []
    for c in g.prob.goal_comparisons:
        r = g.comparison(c, {})
        if r is False:
            goal_false = True
        elif r is not True:
            goal_cons.append(r)
    if goal_false:
        goal_cons = [_FALSE]
    metric_expr = None
    if g.prob.metric:
        metric_expr = g.expr(g.prob.metric[1], {})

    init_props = {
        g.prop(key) for key in g.init_atoms if key[0] not in g.statics.predicates
    }

    # forward propositional reachability, numerics ignored
    reached = set(init_props)
    alive = [False] * len(raw)
    changed = True
    while changed:
        changed = False
        for i, r in enumerate(raw):
            if not alive[i] and r[1] <= reached:
                alive[i] = True
                new = r[3] - reached
                if new:
                    reached |= new
                changed = True
    kept = [r for i, r in enumerate(raw) if alive[i]]

    used_props = set(init_props) | goal_props
    used_vars = set()
    for _, pre, cons, adds, dels, numeffs in kept:
        used_props |= pre | adds | dels
        for c in cons:
            used_vars |= c.variables()
        for ne in numeffs:
            used_vars.add(ne.var)
            used_vars |= ne.variables()
    for c in goal_cons:
        used_vars |= c.variables()
    if metric_expr is not None:
        used_vars |= metric_expr.variables()

    pmap = {old: new for new, old in enumerate(
        sorted(used_props, key=lambda i: _prop_text(g.prop_names[i])))}
    vmap = {old: new for new, old in enumerate(
        sorted(used_vars, key=lambda i: _prop_text(g.var_keys[i])))}

    def rp(ids):
        return frozenset(pmap[i] for i in ids)

    actions = []
    for name, pre, cons, adds, dels, numeffs in sorted(kept, key=lambda r: r[0]):
        actions.append(Action(
            len(actions), name,
            Condition(rp(pre), tuple(_remap_constraint(c, vmap) for c in cons)),
            Effect(rp(adds), rp(dels),
                   tuple(NumEffect(vmap[ne.var], ne.op, _remap(ne.rhs, vmap)) for ne in numeffs)),
        ))
    props = [None] * len(pmap)
    for old, new in pmap.items():
        props[new] = _prop_text(g.prop_names[old])
    vars_ = [None] * len(vmap)
    init_vals = [0] * len(vmap)
    for old, new in vmap.items():
        key = g.var_keys[old]
        vars_[new] = NumVar(new, _prop_text(key))
        init_vals[new] = g.init_values[key]
    metric = None
    if g.prob.metric:
        metric = MetricSpec(g.prob.metric[0], _remap(metric_expr, vmap))
    init_mask = 0
    for p in init_props:
        init_mask |= 1 << pmap[p]
    return NumericTask(
        props, vars_, actions, State(init_mask, tuple(init_vals)),
        Condition(rp(goal_props), tuple(_remap_constraint(c, vmap) for c in goal_cons)),
        metric, g.prob.name,
    )


def _prop_text(key) -> str:
    name, args = key
    return "(" + " ".join((name,) + tuple(args)) + ")"


def _remap(e, vmap):
    if isinstance(e, Var):
        return Var(vmap[e.index])
    if isinstance(e, BinOp):
        return BinOp(e.op, _remap(e.left, vmap), _remap(e.right, vmap))
    return e


def _remap_constraint(c: Constraint, vmap) -> Constraint:
    return Constraint(_remap(c.lhs, vmap), c.comp, _remap(c.rhs, vmap))


def load_task(domain_text: str, problem_text: str) -> NumericTask:
    return ground_task(parse_task(domain_text, problem_text))
