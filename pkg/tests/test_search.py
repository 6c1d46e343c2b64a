import heapq
import itertools
import math
import random
from fractions import Fraction

import pytest
from helpers import finite_reachable, ge, make_task, random_task

from numplan.frontend import load_task
from numplan.generators import gen_instance
from numplan.lnf import compute_relevance, to_lnf
from numplan.model import Const, MetricSpec, NumEffect, State, Var, is_goal, successor
from numplan.rpg import relaxed_plan
from numplan.search import (
    CostWeights,
    Rejected,
    SearchConfig,
    VisitedTable,
    derive_costs,
    dominated_by,
    ehc,
    gbfs,
    heuristic,
    helpful_actions,
    solve,
    wastar,
)
from numplan.validate import validate_plan


def _chain():
    """p0 -> p1 -> p2 -> goal, one action per step."""
    props = ["p0", "p1", "p2", "goal"]
    acts = [(f"s{i}", [props[i]], [], [props[i + 1]], [props[i]], []) for i in range(3)]
    return make_task(props, [], acts, ["p0"], [], goal_props=["goal"])


def _trap():
    """The helpful first step burns the only fuel; walking is not helpful."""
    fuel = [ge(0, 1)]
    burn = [NumEffect(0, "-=", Const(1))]
    acts = [
        ("fly-ab", ["at-a"], fuel, ["at-b"], ["at-a"], burn),
        ("fly-bc", ["at-b"], fuel, ["at-c"], ["at-b"], burn),
        ("walk-ad", ["at-a"], [], ["at-d"], ["at-a"], []),
        ("fly-dc", ["at-d"], fuel, ["at-c"], ["at-d"], burn),
    ]
    return make_task(["at-a", "at-b", "at-c", "at-d"], ["fuel"], acts, ["at-a"], [1], goal_props=["at-c"])


def _routes():
    """A direct move costing 10 and a two-step route costing 2."""
    cost = lambda c: [NumEffect(0, "+=", Const(c))]  # noqa: E731
    acts = [
        ("direct", ["at-s"], [], ["at-g"], ["at-s"], cost(10)),
        ("step1", ["at-s"], [], ["at-m"], ["at-s"], cost(1)),
        ("step2", ["at-m"], [], ["at-g"], ["at-m"], cost(1)),
    ]
    return make_task(["at-s", "at-m", "at-g"], ["total-cost"], acts, ["at-s"], [0], goal_props=["at-g"],
                     metric=MetricSpec("minimize", Var(0)))


# -- dominance ---------------------------------------------------------------------


def test_dominance_ignores_irrelevant_variables():
    t = make_task(["p"], ["fuel", "time"], [("fly", [], [ge(0, 1)], ["p"], [], [
        NumEffect(0, "-=", Const(1)), NumEffect(1, "+=", Const(1))])], [], [3, 0])
    rv = compute_relevance(to_lnf(t))
    s = State(1, (3, 0))
    assert dominated_by(rv, State(1, (3, 7)), s)
    assert dominated_by(rv, s, s)
    assert not dominated_by(rv, State(0b11, (3, 0)), s)
    assert not dominated_by(rv, State(1, (4, 0)), s)


def test_visited_table_buckets_by_floor():
    table = VisitedTable({0})
    table.add(State(0, (Fraction(5, 2),)), g=3)
    assert table.contains_dominating(State(0, (2,)))
    assert not table.contains_dominating(State(0, (1,)))  # other bucket
    assert not table.contains_dominating(State(0, (2,)), g=2)
    assert len(table) == 1


# -- heuristic and helpful actions ------------------------------------------------------


def test_heuristic_values():
    lt = to_lnf(_chain())
    assert heuristic(lt, lt.init) == 3
    goal = State(0b1000, ())
    assert heuristic(lt, goal) == 0
    assert heuristic(lt, State(0, ())) == math.inf


def test_helpful_actions_only_first_layer():
    lt = to_lnf(_chain())
    _, ex = relaxed_plan(lt, lt.init)
    assert helpful_actions(lt, lt.init, ex) == [0]


def test_helpful_excludes_zero_increase():
    t = make_task([], ["v", "w"], [
        ("zero", [], [], [], [], [NumEffect(0, "+=", Var(1))]),
        ("one", [], [], [], [], [NumEffect(0, "+=", Const(1))]),
        ("grow", [], [], [], [], [NumEffect(1, "+=", Const(1))]),
    ], [], [0, 0], goal_cons=[ge(0, 1)])
    lt = to_lnf(t)
    _, ex = relaxed_plan(lt, lt.init)
    assert helpful_actions(lt, lt.init, ex) == [1]


@pytest.mark.parametrize("seed", range(40))
def test_helpful_actions_are_applicable(seed):
    lt = to_lnf(random_task(random.Random(seed)))
    _, ex = relaxed_plan(lt, lt.init)
    if ex is None:
        return
    for a in helpful_actions(lt, lt.init, ex):
        assert successor(lt.init, lt.actions[a]) is not None


# -- searches ------------------------------------------------------------------------------


def test_ehc_chain_and_trivial():
    lt = to_lnf(_chain())
    r = ehc(lt, SearchConfig())
    assert r.solved and r.plan == [0, 1, 2]
    done = make_task(["g"], [], [], ["g"], [], goal_props=["g"])
    r = ehc(to_lnf(done), SearchConfig())
    assert r.solved and r.plan == []


def test_ehc_dead_end_fails_immediately():
    t = make_task(["g"], [], [], [], [], goal_props=["g"])
    r = ehc(to_lnf(t), SearchConfig())
    assert not r.solved and r.h_init == math.inf


def test_pruning_trap():
    lt = to_lnf(_trap())
    assert not ehc(lt, SearchConfig()).solved
    r = gbfs(lt, SearchConfig())
    assert r.solved
    res = solve(_trap())
    assert res.solved and res.stats["stage"] in ("ehc-no-pruning", "gbfs")
    assert [_trap().actions[a].name for a in res.plan] == ["walk-ad", "fly-dc"]


def test_no_helpful_skips_stage_two():
    res = solve(_trap(), config=SearchConfig(helpful=False))
    assert res.solved and res.stats["stage"] == "ehc"


def test_expansion_cap():
    lt = to_lnf(_chain())
    r = gbfs(lt, SearchConfig(max_expansions=1))
    assert not r.solved and r.reason == "expansion cap reached"


def test_derive_costs_examples():
    t = make_task([], ["fuel"], [("a", [], [], [], [], [NumEffect(0, "+=", Const(3))])], [], [0],
                  metric=MetricSpec("minimize", Const(2) * Var(0)))
    assert derive_costs(to_lnf(t), t.metric) == [6]
    gain = make_task([], ["data"], [("a", [], [], [], [], [NumEffect(0, "+=", Const(5))])], [], [0],
                     metric=MetricSpec("maximize", Var(0)))
    with pytest.raises(Rejected):
        derive_costs(to_lnf(gain), gain.metric)
    flat = make_task([], ["x"], [("a", [], [], [], [], [NumEffect(0, "+=", Const(1))])], [], [0],
                     metric=MetricSpec("minimize", Const(4)))
    assert derive_costs(to_lnf(flat), flat.metric) == [0]
    assigned = make_task([], ["x"], [("a", [], [], [], [], [NumEffect(0, ":=", Const(1))])], [], [0],
                         metric=MetricSpec("minimize", Var(0)))
    with pytest.raises(Rejected):
        derive_costs(to_lnf(assigned), assigned.metric)


def test_wastar_weights_choose_route():
    t = _routes()
    lt = to_lnf(t)
    costs = derive_costs(lt, t.metric)
    greedy = wastar(lt, costs, CostWeights(1, 5), SearchConfig())
    assert greedy.solved
    careful = wastar(lt, costs, CostWeights(10, 1), SearchConfig())
    assert careful.solved and sum(costs[a] for a in careful.plan) == 2


def test_solve_trivial_and_quality_stats():
    done = make_task(["g"], [], [], ["g"], [], goal_props=["g"])
    r = solve(done)
    assert r.solved and r.plan.steps == [] and r.stats["stage"] == "ehc"
    r = solve(_routes(), "quality", SearchConfig(mode="quality", weights=CostWeights(10, 1)))
    assert r.stats["stage"] == "wastar" and r.stats["metric"] == 2
    assert set(r.stats) >= {"mode", "stage", "expansions", "evals", "h_init", "length", "metric"}


def test_h_mix_changes_quality_heuristic():
    r0 = solve(_routes(), "quality")
    r1 = solve(_routes(), "quality", SearchConfig(mode="quality", h_mix=Fraction(1, 2)))
    assert r1.stats["h_init"] == r0.stats["h_init"] + Fraction(1, 2)


@pytest.mark.parametrize("seed", range(60))
def test_plans_validate_and_pruning_keeps_solvability(seed):
    t = random_task(random.Random(seed), metric=True)
    for mode in ("speed", "quality"):
        r = solve(t, mode, SearchConfig(mode=mode, max_expansions=500, max_layers=200))
        if r.solved:
            assert validate_plan(t, r.plan).valid
    lt = to_lnf(t)
    reach = finite_reachable(lt, lt.init, 1000)
    if reach is not None:
        solvable = any(is_goal(s, lt) for s in reach)
        assert gbfs(lt, SearchConfig()).solved == solvable
        assert gbfs(lt, SearchConfig(), prune=False).solved == solvable


def _optimum(t, limit=200_000):
    """Cheapest plan metric by uniform-cost search with exact duplicates."""
    lt = to_lnf(t)
    costs = derive_costs(lt, t.metric)
    tie = itertools.count()
    heap = [(0, next(tie), lt.init)]
    best = {lt.init: 0}
    while heap:
        g, _, s = heapq.heappop(heap)
        if g > best[s]:
            continue
        if is_goal(s, lt):
            return g
        for a in lt.actions:
            s2 = successor(s, a)
            if s2 is None:
                continue
            g2 = g + costs[a.id]
            if g2 < best.get(s2, math.inf):
                best[s2] = g2
                if len(best) > limit:
                    return None
                heapq.heappush(heap, (g2, next(tie), s2))
    return None


@pytest.mark.parametrize("seed", range(3))
def test_quality_against_exhaustive_optimum(seed):
    inst = gen_instance("zeno-lite", 1, seed)
    t = load_task(inst.domain, inst.problem)
    opt = _optimum(t)
    assert opt is not None
    start = t.metric.expr.evaluate(t.init.vals)
    for mode in ("quality", "speed"):
        assert solve(t, mode).stats["metric"] - start >= opt
