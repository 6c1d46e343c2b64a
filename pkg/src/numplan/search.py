"""Forward search: enforced hill-climbing with helpful actions, greedy
best-first fallback, and weighted A* for cost-based plan metrics."""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .lnf import (
    LnfTask,
    NotLinear,
    _Undefined,
    affected_variables,
    check_acyclic,
    compute_relevance,
    linearize,
    to_lnf,
    _fold,
)
from .model import NumericTask, Plan, Rational, State, is_goal, q, successor
from .rpg import DEFAULT_MAX_LAYERS, Extraction, relaxed_plan
from .validate import validate_plan

INF = math.inf


class Rejected(ValueError):
    """The plan metric cannot be expressed as a sum of action costs."""


@dataclass
class CostWeights:
    w_g: Rational = 1
    w_h: Rational = 5

    def __post_init__(self):
        if self.w_g < 0 or self.w_h < 0 or (self.w_g == 0 and self.w_h == 0):
            raise ValueError("weights must be non-negative and not both zero")


@dataclass
class SearchConfig:
    mode: str = "speed"  # "speed" | "quality"
    weights: CostWeights = field(default_factory=CostWeights)
    max_expansions: int = 1_000_000
    max_layers: int = DEFAULT_MAX_LAYERS
    helpful: bool = True
    h_mix: Rational = 0

    def __post_init__(self):
        if self.mode not in ("speed", "quality"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.max_expansions <= 0 or self.max_layers <= 0:
            raise ValueError("caps must be positive")


@dataclass
class Counters:
    expansions: int = 0
    evals: int = 0
    capped_graphs: int = 0


# -- heuristic ----------------------------------------------------------------------


class RelaxedPlanHeuristic:
    """Relaxed-plan length, or its action-cost sum when ``costs`` is given."""

    def __init__(self, t: LnfTask, config: SearchConfig, costs=None, counters=None):
        self.t = t
        self.max_layers = config.max_layers
        self.costs = costs
        self.h_mix = config.h_mix
        self.counters = counters if counters is not None else Counters()

    def __call__(self, s: State):
        """(h, extraction); h is ``inf`` when the relaxation is unsolvable."""
        self.counters.evals += 1
        g, ex = relaxed_plan(self.t, s, self.max_layers)
        if ex is None:
            if g.verdict == "capped":
                self.counters.capped_graphs += 1
            return INF, None
        if self.costs is None:
            return ex.h, ex
        h = ex.cost(self.costs)
        if self.h_mix:
            h = q(h + self.h_mix * ex.h)
        return h, ex


def heuristic(t: LnfTask, s: State, max_layers: int = DEFAULT_MAX_LAYERS):
    g, ex = relaxed_plan(t, s, max_layers)
    return INF if ex is None else ex.h


def helpful_actions(t: LnfTask, s: State, ex: Extraction) -> list:
    """Applicable actions that achieve a goal of the relaxed plan's lowest layer."""
    out = []
    vals = s.vals
    g1p = 0
    for p in ex.g1_props:
        g1p |= 1 << p
    nums = ex.g1_nums
    for a_id, lv in enumerate(ex.rpg.action_level):
        if lv != 0:
            continue
        a = t.actions[a_id]
        if a.add_mask & g1p:
            out.append(a_id)
            continue
        if not nums:
            continue
        for e in a.eff.numeffs:
            b = nums.get(e.var)
            if b is None:
                continue
            x = e.rhs.evaluate(vals)
            if e.op == ":=":
                ok = x > b[0] if b[1] else x >= b[0]
            else:
                ok = x > 0
            if ok:
                out.append(a_id)
                break
    return out


# -- duplicate detection ------------------------------------------------------------


def dominated_by(rv, s2: State, s: State) -> bool:
    """True iff ``s2`` has the same propositions as ``s`` and no relevant
    variable is higher in ``s2`` than in ``s``."""
    if s2.props != s.props:
        return False
    a, b = s2.vals, s.vals
    return all(a[i] <= b[i] for i in rv)


class VisitedTable:
    """States bucketed by propositions plus floored relevant values; a
    lookup scans one bucket for a dominating state."""

    def __init__(self, rv):
        self.rv = sorted(rv)
        self.buckets: dict = {}

    def _key(self, s: State):
        vals = s.vals
        return s.props, tuple(math.floor(vals[i]) for i in self.rv)

    def dominating(self, s2: State, g=None):
        """First stored entry dominating ``s2`` (and with cost <= g if given)."""
        for s, gs in self.buckets.get(self._key(s2), ()):
            if (g is None or gs <= g) and dominated_by(self.rv, s2, s):
                return s
        return None

    def contains_dominating(self, s2: State, g=None) -> bool:
        return self.dominating(s2, g) is not None

    def add(self, s: State, g=0):
        self.buckets.setdefault(self._key(s), []).append((s, g))

    def __len__(self):
        return sum(len(b) for b in self.buckets.values())


# -- search algorithms --------------------------------------------------------------


@dataclass
class SearchResult:
    solved: bool
    plan: Optional[list]  # action ids of the searched task
    reason: str = ""
    state: Optional[State] = None  # where a hill-climbing run got stuck
    prefix: Optional[list] = None
    h_init: Optional[Rational] = None


def _path(node) -> list:
    out = []
    while node[1] is not None:
        out.append(node[2])
        node = node[1]
    out.reverse()
    return out


def ehc(t: LnfTask, config: SearchConfig, start: Optional[State] = None,
        prefix: Optional[list] = None, helpful: Optional[bool] = None,
        counters: Optional[Counters] = None) -> SearchResult:
    """Enforced hill-climbing: repeated breadth-first search for a strictly
    better heuristic value. Returns the stuck state on failure so another
    run can continue from there."""
    counters = counters if counters is not None else Counters()
    hfun = RelaxedPlanHeuristic(t, config, counters=counters)
    use_helpful = config.helpful if helpful is None else helpful
    rv = compute_relevance(t)
    cur = t.init if start is None else start
    plan = list(prefix or [])
    h, ex = hfun(cur)
    h_init = h
    if h == INF:
        return SearchResult(False, None, "initial state is a dead end", cur, plan, h_init)
    actions = t.actions
    while h != 0:
        visited = VisitedTable(rv)
        visited.add(cur)
        root = (cur, None, None, ex)
        queue = deque([root])
        better = None
        while queue and better is None:
            node = queue.popleft()
            s, _, _, nex = node
            if counters.expansions >= config.max_expansions:
                return SearchResult(False, None, "expansion cap reached", cur, plan, h_init)
            counters.expansions += 1
            if use_helpful:
                cand = helpful_actions(t, s, nex)
            else:
                cand = range(len(actions))
            for a_id in cand:
                s2 = successor(s, actions[a_id])
                if s2 is None or visited.contains_dominating(s2):
                    continue
                visited.add(s2)
                h2, ex2 = hfun(s2)
                if h2 == INF:
                    continue
                child = (s2, node, a_id, ex2)
                if h2 < h:
                    better = (child, h2, ex2)
                    break
                queue.append(child)
        if better is None:
            return SearchResult(False, None, "no improving state found", cur, plan, h_init)
        child, h, ex = better
        plan.extend(_path(child))
        cur = child[0]
    return SearchResult(True, plan, "", cur, plan, h_init)


def gbfs(t: LnfTask, config: SearchConfig, counters: Optional[Counters] = None,
         prune: bool = True) -> SearchResult:
    """Greedy best-first search on h with dominance-based duplicate pruning."""
    counters = counters if counters is not None else Counters()
    hfun = RelaxedPlanHeuristic(t, config, counters=counters)
    rv = compute_relevance(t)
    h0, _ = hfun(t.init)
    if h0 == INF:
        return SearchResult(False, None, "initial state is a dead end", h_init=h0)
    if is_goal(t.init, t):
        return SearchResult(True, [], h_init=h0)
    visited = VisitedTable(rv)
    seen_exact = set()
    visited.add(t.init)
    seen_exact.add(t.init)
    tie = itertools.count()
    root = (t.init, None, None)
    heap = [(h0, next(tie), root)]
    actions = t.actions
    while heap:
        _, _, node = heapq.heappop(heap)
        if counters.expansions >= config.max_expansions:
            return SearchResult(False, None, "expansion cap reached", h_init=h0)
        counters.expansions += 1
        s = node[0]
        for a in actions:
            s2 = successor(s, a)
            if s2 is None:
                continue
            if prune:
                if visited.contains_dominating(s2):
                    continue
                visited.add(s2)
            else:
                if s2 in seen_exact:
                    continue
                seen_exact.add(s2)
            child = (s2, node, a.id)
            if is_goal(s2, t):
                return SearchResult(True, _path(child), h_init=h0)
            h2, _ = hfun(s2)
            if h2 == INF:
                continue
            heapq.heappush(heap, (h2, next(tie), child))
    return SearchResult(False, None, "search space exhausted", h_init=h0)


def derive_costs(t: LnfTask, metric) -> list:
    """Per-action costs such that the metric changes by exactly the summed
    cost of the executed actions; raises Rejected otherwise."""
    if metric is None:
        raise Rejected("task has no metric")
    affected = affected_variables(t)
    consts = {i: t.init.vals[i] for i in range(t.n_vars) if i not in affected}
    try:
        lin = linearize(_fold(metric.expr, consts))
    except NotLinear as exc:
        raise Rejected(f"metric is not linear: {exc}") from None
    except _Undefined:
        raise Rejected("metric divides by zero") from None
    if metric.direction == "maximize":
        lin = lin.negated()
    coeffs = lin.as_dict()
    costs = []
    for a in t.actions:
        total = 0
        for e in a.eff.numeffs:
            c = coeffs.get(e.var)
            if not c:
                continue
            if e.op != "+=":
                raise Rejected(f"{a.name}: metric variable v{e.var} is assigned")
            if not e.rhs.is_constant:
                raise Rejected(f"{a.name}: metric variable v{e.var} changes by a non-constant")
            contrib = c * e.rhs.const
            if contrib < 0:
                raise Rejected(f"{a.name}: negative cost contribution {contrib}")
            total += contrib
        costs.append(q(total))
    return costs


def wastar(t: LnfTask, costs: list, w: CostWeights, config: SearchConfig,
           counters: Optional[Counters] = None) -> SearchResult:
    """Weighted A* on f = w_g * g + w_h * h with g the accumulated cost."""
    counters = counters if counters is not None else Counters()
    hfun = RelaxedPlanHeuristic(t, config, costs=costs, counters=counters)
    rv = compute_relevance(t)
    h0, _ = hfun(t.init)
    if h0 == INF:
        return SearchResult(False, None, "initial state is a dead end", h_init=h0)
    visited = VisitedTable(rv)
    visited.add(t.init, 0)
    tie = itertools.count()
    heap = [(w.w_h * h0, h0, next(tie), (t.init, None, None, 0))]
    actions = t.actions
    while heap:
        _, _, _, node = heapq.heappop(heap)
        s, _, _, g = node
        if is_goal(s, t):
            return SearchResult(True, _path(node), h_init=h0)
        if counters.expansions >= config.max_expansions:
            return SearchResult(False, None, "expansion cap reached", h_init=h0)
        counters.expansions += 1
        for a in actions:
            s2 = successor(s, a)
            if s2 is None:
                continue
            g2 = q(g + costs[a.id])
            if visited.contains_dominating(s2, g2):
                continue
            visited.add(s2, g2)
            h2, _ = hfun(s2)
            if h2 == INF:
                continue
            f2 = q(w.w_g * g2 + w.w_h * h2)
            heapq.heappush(heap, (f2, h2, next(tie), (s2, node, a.id, g2)))
    return SearchResult(False, None, "search space exhausted", h_init=h0)


# -- planner entry point ------------------------------------------------------------


@dataclass
class SolveResult:
    solved: bool
    plan: Optional[Plan]  # ids of the ground task
    stats: dict
    reason: str = ""
    lnf: Optional[LnfTask] = None


def _speed(lt: LnfTask, config: SearchConfig, counters: Counters):
    r = ehc(lt, config, counters=counters)
    h_init = r.h_init
    if r.solved:
        return r, "ehc", h_init
    if r.h_init == INF:
        return r, "ehc", h_init
    stage = "ehc"
    if config.helpful:
        stage = "ehc-no-pruning"
        r = ehc(lt, config, start=r.state, prefix=r.prefix, helpful=False, counters=counters)
        if r.solved:
            return r, stage, h_init
    r = gbfs(lt, config, counters=counters)
    return r, "gbfs", h_init


def solve(t: NumericTask, mode: str = "speed", config: Optional[SearchConfig] = None) -> SolveResult:
    """Normalize ``t``, search, and map the plan back to ``t``'s action ids.

    Raises NotLinear for tasks outside the linear language.
    """
    if config is None:
        config = SearchConfig(mode=mode)
    elif config.mode != mode:
        config = SearchConfig(mode, config.weights, config.max_expansions,
                              config.max_layers, config.helpful, config.h_mix)
    lt = to_lnf(t)
    _, acyclic = check_acyclic(lt)
    counters = Counters()
    stats: dict = {"mode": mode}
    if not acyclic:
        stats["guarantees"] = "void"
    r = None
    if mode == "quality":
        try:
            costs = derive_costs(lt, t.metric)
        except Rejected as exc:
            stats["quality"] = f"rejected ({exc}); speed fallback"
        else:
            r = wastar(lt, costs, config.weights, config, counters)
            stage, h_init = "wastar", r.h_init
    if r is None:
        r, stage, h_init = _speed(lt, config, counters)
    stats.update(stage=stage, expansions=counters.expansions, evals=counters.evals,
                 h_init=h_init)
    if counters.capped_graphs:
        stats["capped_graphs"] = counters.capped_graphs
    if not r.solved:
        stats.update(length=None, metric=None)
        return SolveResult(False, None, stats, r.reason, lt)
    steps = []
    for a_id in r.plan:
        ga = t.action_by_name(lt.actions[a_id].name)
        steps.append(ga.id)
    plan = Plan(steps)
    verdict = validate_plan(t, plan)
    if not verdict.valid:  # pragma: no cover - would be a planner bug
        raise AssertionError(f"planner produced an invalid plan: {verdict.describe()}")
    stats.update(length=len(steps), metric=verdict.metric)
    return SolveResult(True, plan, stats, "", lt)
