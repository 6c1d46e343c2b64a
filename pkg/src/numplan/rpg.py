"""Relaxed planning graph for LNF tasks and relaxed plan extraction.

The graph tracks, per layer, the reachable propositions and an upper bound
on every variable's value. Increases from ``+=`` effects are summed per
layer; ``:=`` effects raise a variable to the best assignable value.
Building stops with failure once nothing changes that could still matter,
where "could still matter" is decided by the mneed thresholds.
"""

from __future__ import annotations

import graphlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .lnf import LnfExpr, LnfTask, assign_dep_graph, compute_relevance, cyclic_variables
from .model import Rational, State, format_rational, ids_of, q

INF = math.inf
NEG_INF = -math.inf
DEFAULT_MAX_LAYERS = 10000


class ExtractionError(RuntimeError):
    """Relaxed plan extraction ran out of supporters (an internal error)."""


# -- static index -------------------------------------------------------------


class RpgIndex:
    """Per-task lookup tables shared by every graph built for that task."""

    def __init__(self, t: LnfTask):
        n_p = len(t.props)
        self.n_vars = t.n_vars
        self.consumers = [[] for _ in range(n_p)]
        self.adders = [[] for _ in range(n_p)]
        self.pre_count = []
        self.free = []  # actions without propositional preconditions
        self.inc_by_var = [[] for _ in range(t.n_vars)]
        self.asg_by_var = [[] for _ in range(t.n_vars)]
        self.const_inc = []  # per action: [(var, c)] with constant c > 0
        self.var_inc = []  # per action: [(var, rhs)] with non-constant rhs
        self.asg = []  # per action: [(var, rhs)]
        for a in t.actions:
            self.pre_count.append(len(a.pre.props))
            if not a.pre.props:
                self.free.append(a.id)
            for p in a.pre.props:
                self.consumers[p].append(a.id)
            for p in a.eff.adds:
                self.adders[p].append(a.id)
            ci, vi, asg = [], [], []
            for e in a.eff.numeffs:
                if e.op == "+=":
                    self.inc_by_var[e.var].append((a.id, e.rhs))
                    if e.rhs.is_constant:
                        if e.rhs.const > 0:
                            ci.append((e.var, e.rhs.const))
                    else:
                        vi.append((e.var, e.rhs))
                else:
                    self.asg_by_var[e.var].append((a.id, e.rhs))
                    asg.append((e.var, e.rhs))
            self.const_inc.append(ci)
            self.var_inc.append(vi)
            self.asg.append(asg)
        for lst in self.adders:
            lst.sort()

        self.relevant = compute_relevance(t)
        self.mneed_constraints = list(t.goal.constraints)
        for a in t.actions:
            self.mneed_constraints.extend(a.pre.constraints)
        self.mneed_constraints = list(dict.fromkeys(self.mneed_constraints))
        self.mneed_inc = list(dict.fromkeys(
            e.rhs for a in t.actions for e in a.eff.numeffs
            if e.op == "+=" and e.var in self.relevant and not e.rhs.is_constant))
        asg_effs = {}
        for a in t.actions:
            for e in a.eff.numeffs:
                if e.op == ":=" and e.var in self.relevant and not e.rhs.is_constant:
                    asg_effs.setdefault(e.var, set()).add(e.rhs)
        self.mneed_asg = {j: list(rs) for j, rs in asg_effs.items()}
        graph = assign_dep_graph(t)
        self.cyclic = cyclic_variables(graph) & self.relevant
        sorter = graphlib.TopologicalSorter({v: () for v in graph.vertices})
        for i, j in graph.edges:
            if i not in self.cyclic and j not in self.cyclic:
                sorter.add(j, i)
        # targets before the variables read by their := right-hand sides
        self.mneed_order = [
            v for v in reversed(list(sorter.static_order())) if v not in self.cyclic
        ]


def rpg_index(t: LnfTask) -> RpgIndex:
    idx = t.__dict__.get("_rpg_index")
    if idx is None:
        idx = RpgIndex(t)
        t.__dict__["_rpg_index"] = idx
    return idx


# -- supv / mneed ---------------------------------------------------------------


def supv(vals, exp: LnfExpr, i: int, target) -> Rational:
    """Value variable ``i`` must reach so that ``exp`` reaches ``target``,
    with every other variable at its value in ``vals``."""
    ci = exp.coeff(i)
    if ci == 0:
        raise ValueError(f"v{i} does not occur in {exp}")
    if target in (INF, NEG_INF):
        return target
    rest = exp.const
    for j, c in exp.terms:
        if j != i:
            rest += c * vals[j]
    return q(Fraction(target - rest) / ci)


def compute_mneed(t: LnfTask, s: State) -> list:
    """Per-variable threshold above which raising the variable further
    cannot help; ``-inf`` exactly for variables outside the relevance set.

    Variables on a := cycle, or feeding one, get ``+inf``: their recursive
    definition has no base case.
    """
    idx = rpg_index(t)
    vals = s.vals
    need = [NEG_INF] * t.n_vars
    for c in idx.mneed_constraints:
        for i, _ in c.expr.terms:
            x = supv(vals, c.expr, i, 0)
            if x > need[i]:
                need[i] = x
    for rhs in idx.mneed_inc:
        for i, _ in rhs.terms:
            x = supv(vals, rhs, i, 0)
            if x > need[i]:
                need[i] = x
    for v in idx.cyclic:
        need[v] = INF
    for j in idx.mneed_order:
        target = need[j]
        for rhs in idx.mneed_asg.get(j, ()):
            for i, _ in rhs.terms:
                if i in idx.cyclic:
                    continue
                x = supv(vals, rhs, i, target)
                if x > need[i]:
                    need[i] = x
    return need


# -- graph ----------------------------------------------------------------------


@dataclass
class Layer:
    P: int
    max: tuple
    A: frozenset


@dataclass
class Rpg:
    task: LnfTask
    state: State
    P: list  # proposition mask per layer
    max: list  # value tuple per layer
    action_level: list  # -1 when the action never appears
    prop_level: list
    finallayer: int
    verdict: str  # "reached" | "failed" | "capped"
    mneed: Optional[list] = None

    @property
    def reached(self) -> bool:
        return self.verdict == "reached"

    def layer(self, t: int) -> Layer:
        acts = frozenset(a for a, lv in enumerate(self.action_level) if 0 <= lv <= t)
        return Layer(self.P[t], self.max[t], acts)

    @property
    def layers(self) -> list:
        return [self.layer(t) for t in range(len(self.P))]

    def constraint_level(self, c, hi: Optional[int] = None) -> int:
        """First layer (at most ``hi``) whose max values satisfy ``c``."""
        if hi is None:
            hi = len(self.max) - 1
        lo = 0
        if c.holds(self.max[0]):
            return 0
        while lo < hi:
            mid = (lo + hi) // 2
            if c.holds(self.max[mid]):
                hi = mid
            else:
                lo = mid + 1
        return lo

    def goal_constraint_levels(self) -> dict:
        return {c: self.constraint_level(c) for c in self.task.goal.constraints}


def build_graph(t: LnfTask, s: State, max_layers: int = DEFAULT_MAX_LAYERS) -> Rpg:
    idx = rpg_index(t)
    n_a = len(t.actions)
    actions = t.actions
    goal_mask = t.goal_mask
    goal_cons = t.goal.constraints
    P = s.props
    mx = list(s.vals)
    n = len(mx)
    Ps = [P]
    maxes = [tuple(mx)]
    level = [-1] * n_a
    prop_level = [-1] * len(t.props)
    for p in ids_of(P):
        prop_level[p] = 0
    counter = list(idx.pre_count)
    ready = list(idx.free)
    for p in ids_of(P):
        for a in idx.consumers[p]:
            counter[a] -= 1
            if counter[a] == 0:
                ready.append(a)
    const_inc = [0] * n
    var_inc: list = []
    asg: list = []
    adds = 0
    mneed = None
    step = 0
    verdict = "reached"
    while True:
        if not goal_mask & ~P and all(c.holds(mx) for c in goal_cons):
            break
        if step >= max_layers:
            verdict = "capped"
            break
        waiting = []
        for a in ready:
            if all(c.holds(mx) for c in actions[a].pre.constraints):
                level[a] = step
                adds |= actions[a].add_mask
                for v, c in idx.const_inc[a]:
                    const_inc[v] += c
                var_inc.extend(idx.var_inc[a])
                asg.extend(idx.asg[a])
            else:
                waiting.append(a)
        ready = waiting
        P2 = P | adds
        nxt = [x + d if d else x for x, d in zip(mx, const_inc)]
        for v, rhs in var_inc:
            x = rhs.evaluate(mx)
            if x > 0:
                nxt[v] += x
        for v, rhs in asg:
            x = rhs.evaluate(mx)
            if x > nxt[v]:
                nxt[v] = x
        nxt = [q(x) if type(x) is Fraction else x for x in nxt]
        if P2 == P:
            if mneed is None:
                mneed = compute_mneed(t, s)
            if all(nxt[i] == mx[i] or mx[i] > mneed[i] for i in range(n)):
                verdict = "failed"
                break
        new = P2 & ~P
        step += 1
        if new:
            for p in ids_of(new):
                prop_level[p] = step
                for a in idx.consumers[p]:
                    counter[a] -= 1
                    if counter[a] == 0:
                        ready.append(a)
        P = P2
        mx = nxt
        Ps.append(P)
        maxes.append(tuple(mx))
    return Rpg(t, s, Ps, maxes, level, prop_level, step, verdict, mneed)


# -- extraction -------------------------------------------------------------------


def _stronger(old, new):
    """Merge two lower bounds (value, strict) on one variable."""
    if old is None:
        return new
    if new[0] > old[0]:
        return new
    if new[0] == old[0] and new[1] and not old[1]:
        return new
    return old


def _bound_holds(x, bound, strict) -> bool:
    return x > bound if strict else x >= bound


@dataclass
class Extraction:
    rpg: Rpg
    selected: list  # selected[t]: action ids supporting goals at layer t
    goal_props: list
    goal_nums: list
    g1_props: frozenset = frozenset()
    g1_nums: dict = field(default_factory=dict)

    @property
    def h(self) -> int:
        return sum(len(x) for x in self.selected)

    def actions(self) -> list:
        return [a for layer in self.selected for a in sorted(layer)]

    def cost(self, costs) -> Rational:
        return sum((costs[a] for layer in self.selected for a in layer), 0)

    def linearize(self, rng=None) -> list:
        """Action ids layer by layer; order inside a layer is arbitrary
        (shuffled when ``rng`` is given)."""
        out = []
        for layer in self.selected[1:]:
            ids = sorted(layer)
            if rng is not None:
                rng.shuffle(ids)
            out.extend(ids)
        return out


def extract_plan(t: LnfTask, g: Rpg) -> Extraction:
    if not g.reached:
        raise ValueError("relaxed plan extraction needs a graph that reached the goals")
    idx = rpg_index(t)
    L = g.finallayer
    maxes = g.max
    level = g.action_level
    actions = t.actions
    Gp = [set() for _ in range(L + 1)]
    Gn = [dict() for _ in range(L + 1)]
    selected = [set() for _ in range(L + 1)]

    def add_bound(k, v, bound, strict=False):
        if k > 0:
            Gn[k][v] = _stronger(Gn[k].get(v), (bound, strict))

    def add_max_bounds(k, variables):
        if k > 0:
            row = maxes[k]
            for v in variables:
                add_bound(k, v, row[v])

    def select(a, t_):
        if a in selected[t_]:
            return
        selected[t_].add(a)
        act = actions[a]
        for p in act.pre.props:
            lv = g.prop_level[p]
            if lv > 0:
                Gp[lv].add(p)
        for c in act.pre.constraints:
            lv = g.constraint_level(c, level[a])
            add_max_bounds(lv, c.expr.variables())

    for p in ids_of(t.goal_mask):
        lv = g.prop_level[p]
        if lv > 0:
            Gp[lv].add(p)
    for c in t.goal.constraints:
        lv = g.constraint_level(c, L)
        add_max_bounds(lv, c.expr.variables())

    g1_props: frozenset = frozenset()
    g1_nums: dict = {}
    for tt in range(L, 0, -1):
        if tt == 1:
            g1_props = frozenset(Gp[1])
            g1_nums = dict(Gn[1])
        for p in sorted(Gp[tt]):
            best = None
            for a in idx.adders[p]:
                if level[a] == tt - 1:
                    if a in selected[tt]:
                        best = a
                        break
                    if best is None:
                        best = a
            if best is None:
                raise ExtractionError(f"no achiever for proposition {p} at layer {tt}")
            select(best, tt)
        prev = maxes[tt - 1]
        for v in sorted(Gn[tt]):
            bound, strict = Gn[tt][v]
            if _bound_holds(prev[v], bound, strict):
                add_bound(tt - 1, v, bound, strict)
                continue
            chosen = None
            for a, rhs in idx.asg_by_var[v]:
                if 0 <= level[a] <= tt - 1 and _bound_holds(rhs.evaluate(prev), bound, strict):
                    if chosen is None or a < chosen[0]:
                        chosen = (a, rhs)
            if chosen is not None:
                select(chosen[0], tt)
                add_max_bounds(tt - 1, chosen[1].variables())
                continue
            cands = []
            for a, rhs in idx.inc_by_var[v]:
                if 0 <= level[a] <= tt - 1:
                    x = rhs.evaluate(prev)
                    if x > 0:
                        cands.append((-x, a, rhs))
            cands.sort(key=lambda c: (c[0], c[1]))
            c_left = bound
            it = iter(cands)
            while not _bound_holds(prev[v], c_left, strict):
                nxt = next(it, None)
                if nxt is None:
                    raise ExtractionError(
                        f"cannot support bound on v{v} at layer {tt}")
                negx, a, rhs = nxt
                c_left = q(c_left + negx)
                select(a, tt)
                add_max_bounds(tt - 1, rhs.variables())
            add_bound(tt - 1, v, c_left, strict)

    return Extraction(
        g, selected,
        [frozenset(x) for x in Gp], [dict(x) for x in Gn],
        g1_props, g1_nums,
    )


def relaxed_plan(t: LnfTask, s: State, max_layers: int = DEFAULT_MAX_LAYERS):
    """(graph, extraction or None)."""
    g = build_graph(t, s, max_layers)
    if not g.reached:
        return g, None
    return g, extract_plan(t, g)


def dump_graph(g: Rpg) -> str:
    """Human-readable layer listing: new propositions, max vector, |A_t|."""
    t = g.task
    names = [v.name for v in t.vars]
    lines = [f"; rpg verdict={g.verdict} finallayer={g.finallayer}"]
    prev = 0
    for k in range(len(g.P)):
        new = [t.props[p] for p in ids_of(g.P[k] & ~prev)]
        prev = g.P[k]
        n_act = sum(1 for lv in g.action_level if 0 <= lv <= k)
        vals = " ".join(f"{names[i]}={format_rational(x)}" for i, x in enumerate(g.max[k]))
        lines.append(f"; layer {k}: |A|={n_act} new={' '.join(new) or '-'}")
        if vals:
            lines.append(f";   max {vals}")
    return "\n".join(lines)
